//! Bad discs on a sphere: threshold covering, ball growth, selection of the
//! growth time and the certificate of the resulting family.
//!
//! The pipeline works on the unit sphere with `ε = 1/R` for data given on
//! `S_R`, then scales the selected family back to `S_R`.

use crate::energy::{circle_energy, tangential_energy};
use crate::geometry::vec3::{angle, dot, normalize, slerp, Vec3};
use crate::geometry::{GeometryError, SphereGrid, SphericalDisc, Stencil};
use crate::par;
use crate::topology::{degree_on_sphere, TopologyError};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BadDiscError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("bad set reaches the grid pole rings; rotate the data or the grid")]
    PoleContact,
    #[error("bad set needs total radius {r_tot:.4} > π/2 on the unit sphere")]
    TooEnergetic { r_tot: f64 },
    #[error(
        "no sampled time meets the boundary-energy bound; best t = {best_t:.4} with value {best_value:.4} > {bound:.4}"
    )]
    NoAdmissibleTime { best_t: f64, best_value: f64, bound: f64 },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Disc family on a sphere of radius `sphere_radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscFamily {
    pub sphere_radius: f64,
    pub discs: Vec<SphericalDisc>,
    pub degrees: Option<Vec<i32>>,
}

impl DiscFamily {
    pub fn empty(sphere_radius: f64) -> Self {
        DiscFamily {
            sphere_radius,
            discs: Vec::new(),
            degrees: None,
        }
    }

    /// Sum of the geodesic radii.
    pub fn r_tot(&self) -> f64 {
        par::pairwise_sum(&self.discs.iter().map(|d| d.rho).collect::<Vec<_>>())
    }

    /// Centres farther apart than the sum of radii, for every pair.
    pub fn is_disjoint(&self) -> bool {
        let d = &self.discs;
        (0..d.len()).all(|i| (i + 1..d.len()).all(|j| d[i].distance_to(d[j].center) > d[i].rho + d[j].rho))
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.discs.iter().any(|d| d.contains(p))
    }

    /// The family on the concentric sphere of radius `r`.
    pub fn rescaled(&self, r: f64) -> Self {
        DiscFamily {
            sphere_radius: r,
            discs: self.discs.iter().map(|d| d.rescaled(r)).collect(),
            degrees: self.degrees.clone(),
        }
    }
}

/// Replace two discs by the disc centred on the great-circle arc between
/// their centres, at fraction `r₂/(r₁ + r₂)` from the first, with radius
/// `r₁ + r₂`. Contains both discs whenever they intersect.
pub fn merge(a: &SphericalDisc, b: &SphericalDisc) -> SphericalDisc {
    let t = b.rho / (a.rho + b.rho);
    SphericalDisc {
        center: slerp(a.center, b.center, t),
        rho: a.rho + b.rho,
        sphere_radius: a.sphere_radius,
    }
}

/// One merge during growth, with the total radius on both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub t: f64,
    pub parts: [SphericalDisc; 2],
    pub merged: SphericalDisc,
    pub r_tot_before: f64,
    pub r_tot_after: f64,
}

fn radius_sum(discs: &[SphericalDisc]) -> f64 {
    par::pairwise_sum(&discs.iter().map(|d| d.rho).collect::<Vec<_>>())
}

fn merge_at(discs: &mut Vec<SphericalDisc>, i: usize, j: usize, t: f64) -> MergeEvent {
    let before = radius_sum(discs);
    let parts = [discs[i], discs[j]];
    let m = merge(&parts[0], &parts[1]);
    discs.swap_remove(j);
    discs[i] = m;
    MergeEvent {
        t,
        parts,
        merged: m,
        r_tot_before: before,
        r_tot_after: radius_sum(discs),
    }
}

/// Merge intersecting discs until the family is disjoint.
fn disjoint_pass(discs: &mut Vec<SphericalDisc>, t: f64, events: &mut Vec<MergeEvent>) {
    loop {
        let mut pair = None;
        'outer: for i in 0..discs.len() {
            for j in i + 1..discs.len() {
                if discs[i].distance_to(discs[j].center) <= discs[i].rho + discs[j].rho {
                    pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        match pair {
            Some((i, j)) => events.push(merge_at(discs, i, j, t)),
            None => return,
        }
    }
}

/// Approximate smallest enclosing geodesic disc of unit vectors
/// (Badoiu-Clarkson iteration); returns centre and angular radius.
fn enclosing_cap(points: &[Vec3]) -> (Vec3, f64) {
    let mean = points
        .iter()
        .fold([0.0; 3], |a, p| [a[0] + p[0], a[1] + p[1], a[2] + p[2]]);
    let mut c = if dot(mean, mean) > 1e-20 {
        normalize(mean)
    } else {
        points[0]
    };
    let far = |c: Vec3| {
        points
            .iter()
            .map(|&p| (angle(c, p), p))
            .fold((0.0, c), |a, b| if b.0 > a.0 { b } else { a })
    };
    for k in 1..=500 {
        let (_, p) = far(c);
        c = slerp(c, p, 1.0 / (k as f64 + 1.0));
    }
    (c, far(c).0)
}

/// δ at half the admissible maximum: `min(1/8, δ₀)/2` with
/// `δ₀ = 1 − sqrt(2γ/(γ + 2π))`, the largest δ for which
/// `2/(1−δ)² · 2γ/(γ+2π) < 2`.
pub fn default_delta(gamma: f64) -> f64 {
    let d0 = 1.0 - (2.0 * gamma / (gamma + TAU)).sqrt();
    0.5 * d0.min(0.125)
}

/// Growth horizon `s = (2π + γ)/(4π) |ln ε|`.
pub fn growth_horizon(gamma: f64, eps: f64) -> f64 {
    (TAU + gamma) / (4.0 * PI) * eps.ln().abs()
}

/// `2π · 2γ/(γ + 2π)`.
pub fn boundary_energy_bound(gamma: f64) -> f64 {
    TAU * 2.0 * gamma / (gamma + TAU)
}

/// Cover `{|v| ≤ 1 − δ}` on a unit-sphere grid by disjoint discs of radius
/// at least `Λε`.
pub fn initial_cover(
    sphere: &SphereGrid,
    v: &[C64],
    eps: f64,
    delta: f64,
    lambda: f64,
) -> Result<DiscFamily, BadDiscError> {
    if (sphere.radius() - 1.0).abs() > 1e-12 {
        return Err(BadDiscError::InvalidParams(
            "initial cover expects the unit sphere".into(),
        ));
    }
    if !(delta > 0.0 && delta < 0.125) {
        return Err(BadDiscError::InvalidParams(format!("δ = {delta} outside (0, 1/8)")));
    }
    let h = sphere.grid_scale();
    if lambda * eps < 4.0 * h {
        return Err(BadDiscError::InvalidParams(format!(
            "Λε = {} is below 4h = {} (unresolved discs)",
            lambda * eps,
            4.0 * h
        )));
    }
    let n = sphere.len();
    let bad: Vec<bool> = par::map_indexed(n, |i| v[i].norm() <= 1.0 - delta);
    let mut seen = vec![false; n];
    let mut discs = Vec::new();
    let last_ring = sphere.n_phi() - 1;
    for start in 0..n {
        if !bad[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            let ring = sphere.ring(i);
            if ring == 0 || (!sphere.is_cap() && ring == last_ring) {
                return Err(BadDiscError::PoleContact);
            }
            comp.push(sphere.direction(i));
            sphere.visit_edges(i, |j, _| {
                if bad[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            });
        }
        let (c, a) = enclosing_cap(&comp);
        let rho = (a + h).max(lambda * eps);
        discs.push(SphericalDisc {
            center: c,
            rho,
            sphere_radius: 1.0,
        });
    }
    disjoint_pass(&mut discs, 0.0, &mut Vec::new());
    let family = DiscFamily {
        sphere_radius: 1.0,
        discs,
        degrees: None,
    };
    let r_tot = family.r_tot();
    if r_tot > FRAC_PI_2 {
        return Err(BadDiscError::TooEnergetic { r_tot });
    }
    Ok(family)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grown {
    pub family: DiscFamily,
    pub merges: Vec<MergeEvent>,
    /// Total radius stayed at most `π/2` (relative to the sphere radius).
    pub small_regime: bool,
}

/// Grow every radius by `e^t`, merging discs as they touch.
pub fn grow(family: &DiscFamily, t: f64) -> Result<Grown, BadDiscError> {
    if !(t >= 0.0) {
        return Err(BadDiscError::InvalidParams(format!("growth time {t} must be ≥ 0")));
    }
    if !family.is_disjoint() {
        return Err(BadDiscError::InvalidParams("growth needs a disjoint family".into()));
    }
    let mut discs = family.discs.clone();
    let mut now = 0.0;
    let mut merges = Vec::new();
    loop {
        let mut next: Option<(f64, usize, usize)> = None;
        for i in 0..discs.len() {
            for j in i + 1..discs.len() {
                let d = discs[i].distance_to(discs[j].center);
                let tau = now + (d / (discs[i].rho + discs[j].rho)).ln();
                if next.is_none_or(|n| tau < n.0) {
                    next = Some((tau, i, j));
                }
            }
        }
        let step_to = match next {
            Some((tau, _, _)) if tau <= t => tau.max(now),
            _ => t,
        };
        let f = (step_to - now).exp();
        for d in discs.iter_mut() {
            d.rho *= f;
        }
        now = step_to;
        match next {
            Some((tau, i, j)) if tau <= t => {
                merges.push(merge_at(&mut discs, i, j, now));
                disjoint_pass(&mut discs, now, &mut merges);
            }
            _ => break,
        }
    }
    let out = DiscFamily {
        sphere_radius: family.sphere_radius,
        discs,
        degrees: None,
    };
    let small_regime = out.r_tot() <= FRAC_PI_2 * family.sphere_radius;
    Ok(Grown {
        family: out,
        merges,
        small_regime,
    })
}

/// Tangential energy of `v` on the boundary circle of `disc`, with the
/// circle's Euclidean radius `R sin(ρ/R)`.
pub fn boundary_circle_energy(
    sphere: &SphereGrid,
    v: &[C64],
    disc: &SphericalDisc,
    eps: f64,
) -> Result<f64, BadDiscError> {
    let trace = sphere.circle_trace(v, disc, None)?;
    Ok(circle_energy(&trace, disc.euclidean_radius(), eps).total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub t: f64,
    pub family: DiscFamily,
    /// Boundary-circle energy of each disc.
    pub circle_energies: Vec<f64>,
    /// `Σ ρ_i · E(∂D_i)`.
    pub functional: f64,
    pub small_regime: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub samples: Vec<GrowthSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub t: f64,
    pub horizon: f64,
    pub bound: f64,
    pub functional: f64,
    pub family: DiscFamily,
    pub trace: GrowthTrace,
}

/// Sample 64 log-spaced times in `(0, s]` and return the earliest one at
/// which `Σ ρ_i E(∂D_i) ≤ 1.1 · 2π · 2γ/(γ+2π)`.
pub fn select_time(
    sphere: &SphereGrid,
    v: &[C64],
    family: &DiscFamily,
    eps: f64,
    gamma: f64,
) -> Result<Selection, BadDiscError> {
    if !(gamma > 0.0 && gamma < TAU) {
        return Err(BadDiscError::InvalidParams(format!("γ = {gamma} outside (0, 2π)")));
    }
    let s = growth_horizon(gamma, eps);
    let bound = boundary_energy_bound(gamma);
    if family.discs.is_empty() {
        return Ok(Selection {
            t: 0.0,
            horizon: s,
            bound,
            functional: 0.0,
            family: family.clone(),
            trace: GrowthTrace::default(),
        });
    }
    let times: Vec<f64> = (0..64)
        .map(|j| s * (1e-3f64.ln() * (1.0 - j as f64 / 63.0)).exp())
        .collect();
    let mut trace = GrowthTrace::default();
    for &t in &times {
        let grown = grow(family, t)?;
        let energies = grown
            .family
            .discs
            .iter()
            .map(|d| boundary_circle_energy(sphere, v, d, eps))
            .collect::<Result<Vec<f64>, _>>()?;
        let functional = par::pairwise_sum(
            &grown
                .family
                .discs
                .iter()
                .zip(&energies)
                .map(|(d, e)| d.rho * e)
                .collect::<Vec<_>>(),
        );
        trace.samples.push(GrowthSample {
            t,
            family: grown.family,
            circle_energies: energies,
            functional,
            small_regime: grown.small_regime,
        });
    }
    let admissible = trace
        .samples
        .iter()
        .position(|g| g.small_regime && g.functional <= 1.1 * bound);
    match admissible {
        Some(k) => {
            let g = &trace.samples[k];
            Ok(Selection {
                t: g.t,
                horizon: s,
                bound,
                functional: g.functional,
                family: g.family.clone(),
                trace,
            })
        }
        None => {
            let best = trace
                .samples
                .iter()
                .min_by(|a, b| a.functional.total_cmp(&b.functional))
                .expect("64 samples");
            Err(BadDiscError::NoAdmissibleTime {
                best_t: best.t,
                best_value: best.functional,
                bound,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    /// Distance to the threshold, positive when passing.
    pub margin: f64,
}

impl Check {
    fn at_most(value: f64, limit: f64) -> Self {
        Check {
            pass: value <= limit,
            margin: limit - value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscCertificate {
    pub center: Vec3,
    pub radius: f64,
    pub degree: i32,
    pub circle_energy: f64,
    pub energy_limit: f64,
}

/// Status of the five bad-disc conditions for a family on `S_R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `|u| > 7/8` off the discs (margin `min|u| − 7/8`).
    pub modulus_outside: Check,
    /// `Σ r_i ≤ R^α`.
    pub radius_sum: Check,
    /// `E^(T)(u, ∂D_i) ≤ 2π/r_i` for every disc (worst margin).
    pub boundary_energy: Check,
    /// Every degree is zero.
    pub degrees_zero: bool,
    /// `r_i ≥ Λ` for every disc (worst margin).
    pub radius_floor: Check,
    pub degree_sq_sum: i64,
    pub degree_sum: i64,
    /// `α̃ = 1 − α` and the admissible ceiling `(2π − γ)/(4π)`.
    pub alpha_tilde: f64,
    pub alpha_tilde_max: f64,
    pub discs: Vec<DiscCertificate>,
}

impl Certificate {
    pub fn all_pass(&self) -> bool {
        self.modulus_outside.pass
            && self.radius_sum.pass
            && self.boundary_energy.pass
            && self.degrees_zero
            && self.radius_floor.pass
    }
}

/// Evaluate the five conditions for `family` (on `S_R`) and data `u` on the
/// sphere grid of radius `R` (`ε = 1`).
pub fn certify(
    sphere: &SphereGrid,
    u: &[C64],
    family: &DiscFamily,
    gamma: f64,
    lambda: f64,
    alpha: f64,
) -> Result<Certificate, BadDiscError> {
    let r = sphere.radius();
    let min_out = (0..sphere.len())
        .filter(|&i| !family.contains(sphere.position(i)))
        .map(|i| u[i].norm())
        .fold(f64::INFINITY, f64::min);
    let modulus_outside = Check {
        pass: min_out > 7.0 / 8.0,
        margin: if min_out.is_finite() {
            min_out - 7.0 / 8.0
        } else {
            1.0 / 8.0
        },
    };
    let mut discs = Vec::with_capacity(family.discs.len());
    for d in &family.discs {
        let d = d.rescaled(r);
        let degree = degree_on_sphere(sphere, u, &d)?;
        let e = boundary_circle_energy(sphere, u, &d, 1.0)?;
        discs.push(DiscCertificate {
            center: d.center,
            radius: d.rho,
            degree,
            circle_energy: e,
            energy_limit: TAU / d.rho,
        });
    }
    let worst_energy = discs
        .iter()
        .map(|d| d.energy_limit - d.circle_energy)
        .fold(f64::INFINITY, f64::min);
    let worst_floor = discs.iter().map(|d| d.radius - lambda).fold(f64::INFINITY, f64::min);
    let r_sum = par::pairwise_sum(&discs.iter().map(|d| d.radius).collect::<Vec<_>>());
    Ok(Certificate {
        modulus_outside,
        radius_sum: Check::at_most(r_sum, r.powf(alpha)),
        boundary_energy: Check {
            pass: worst_energy >= 0.0,
            margin: if worst_energy.is_finite() { worst_energy } else { 0.0 },
        },
        degrees_zero: discs.iter().all(|d| d.degree == 0),
        radius_floor: Check {
            pass: worst_floor >= 0.0,
            margin: if worst_floor.is_finite() { worst_floor } else { 0.0 },
        },
        degree_sq_sum: discs.iter().map(|d| (d.degree as i64).pow(2)).sum(),
        degree_sum: discs.iter().map(|d| d.degree as i64).sum(),
        alpha_tilde: 1.0 - alpha,
        alpha_tilde_max: (TAU - gamma) / (4.0 * PI),
        discs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl PipelineParams {
    /// `δ` from [`default_delta`] and `α = 1 − (2π − γ)/(8π)`.
    pub fn with_defaults(gamma: f64, lambda: f64) -> Self {
        PipelineParams {
            gamma,
            lambda,
            delta: default_delta(gamma),
            alpha: 1.0 - (TAU - gamma) / (8.0 * PI),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    /// `E^(T)(u; S_R)`.
    pub tangential_energy: f64,
    /// `E^(T)(u; S_R) ≤ γ ln R`.
    pub premise: bool,
    /// Initial cover on the unit sphere.
    pub initial: DiscFamily,
    /// `r₀/(ε |ln ε| δ⁻³)`.
    pub cover_constant: f64,
    pub selection: Selection,
    /// Selected family on `S_R`, with degrees.
    pub family: DiscFamily,
    pub certificate: Certificate,
}

/// Rescale to the unit sphere with `ε = 1/R`, cover, grow, select the time,
/// scale back and certify.
pub fn bad_disc_pipeline(
    sphere: &SphereGrid,
    u: &[C64],
    params: &PipelineParams,
) -> Result<PipelineResult, BadDiscError> {
    let r = sphere.radius();
    let eps = 1.0 / r;
    let et = tangential_energy(sphere, u, 1.0, None).total;
    let unit = sphere.rescaled(1.0);
    let initial = initial_cover(&unit, u, eps, params.delta, params.lambda)?;
    let cover_constant = initial.r_tot() / (eps * eps.ln().abs() / params.delta.powi(3));
    let selection = select_time(&unit, u, &initial, eps, params.gamma)?;
    let mut family = selection.family.rescaled(r);
    let certificate = certify(sphere, u, &family, params.gamma, params.lambda, params.alpha)?;
    family.degrees = Some(certificate.discs.iter().map(|d| d.degree).collect());
    Ok(PipelineResult {
        tangential_energy: et,
        premise: et <= params.gamma * r.ln(),
        initial,
        cover_constant,
        selection,
        family,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(c: Vec3, rho: f64) -> SphericalDisc {
        SphericalDisc::new(c, rho, 1.0).unwrap()
    }

    #[test]
    fn merge_contains_both() {
        let a = disc([1.0, 0.0, 0.0], 0.1);
        let b = disc([0.0, 1.0, 0.0], 0.05);
        let m = merge(&a, &b);
        assert!((m.rho - 0.15).abs() < 1e-15);
        assert!(m.distance_to(a.center) + a.rho <= m.rho + 1e-12 || a.distance_to(b.center) > 0.15);
    }

    #[test]
    fn single_disc_grows_exponentially() {
        let f = DiscFamily {
            sphere_radius: 1.0,
            discs: vec![disc([0.0, 0.0, 1.0], 0.01)],
            degrees: None,
        };
        let g = grow(&f, 1.5).unwrap();
        assert!(g.merges.is_empty());
        assert!((g.family.discs[0].rho - 0.01 * 1.5f64.exp()).abs() < 1e-15);
        assert_eq!(g.family.discs[0].center, f.discs[0].center);
    }

    #[test]
    fn default_delta_for_gamma_five() {
        let d = default_delta(5.0);
        assert!((d - 0.5 * (1.0 - (10.0 / (5.0 + TAU)).sqrt())).abs() < 1e-15);
        assert!(2.0 / (1.0 - d).powi(2) * 10.0 / (5.0 + TAU) < 2.0);
    }
}
