//! Discrete Ginzburg-Landau energies and the identity checks built on them.
//!
//! Energies are assembled per node: node `i` carries its potential term and
//! a quarter of `w_e |u_j − u_i|²` for every incident edge, so the energy of
//! a node mask is additive over disjoint masks with no double counting.

use crate::geometry::GeometryError;
use crate::geometry::{restrict_to_sphere, Lattice, SphereGrid, Stencil, Vec3, VectorField};
use crate::par;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("epsilon must be positive, got {0}")]
    InvalidEps(f64),
    #[error("weight must be positive, found {value} at node {index}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("field is not harmonic: scaled Laplace residual {residual:.3e} exceeds {tol:.1e}")]
    NotHarmonic { residual: f64, tol: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub potential: f64,
    pub total: f64,
    pub eps: f64,
    pub region: String,
}

impl EnergyBreakdown {
    fn new(dirichlet: f64, potential: f64, eps: f64, region: &str) -> Self {
        EnergyBreakdown {
            dirichlet,
            potential,
            total: dirichlet + potential,
            eps,
            region: region.to_string(),
        }
    }
}

/// Per-node Dirichlet and potential contributions (absolute, already
/// multiplied by the node weight). `p` scales the potential term.
pub fn node_energies<S: Stencil>(grid: &S, u: &[C64], eps: f64, p: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(u.len(), grid.len());
    let c = 1.0 / (4.0 * eps * eps);
    let dir = par::map_indexed(grid.len(), |i| {
        if !grid.is_active(i) {
            return 0.0;
        }
        let mut acc = 0.0;
        grid.visit_edges(i, |j, w| acc += w * (u[j] - u[i]).norm_sqr());
        0.25 * acc
    });
    let pot = par::map_indexed(grid.len(), |i| {
        if !grid.is_active(i) {
            return 0.0;
        }
        let d = 1.0 - u[i].norm_sqr();
        grid.node_weight(i) * p.map_or(1.0, |p| p[i]) * c * d * d
    });
    (dir, pot)
}

fn breakdown_from_nodes(dir: &[f64], pot: &[f64], region: Option<&[bool]>, eps: f64, label: &str) -> EnergyBreakdown {
    let keep = |i: usize| region.is_none_or(|m| m[i]);
    let d = par::sum_indexed(dir.len(), |i| if keep(i) { dir[i] } else { 0.0 });
    let q = par::sum_indexed(pot.len(), |i| if keep(i) { pot[i] } else { 0.0 });
    EnergyBreakdown::new(d, q, eps, label)
}

/// `E_ε(u; region)` on any grid; `region = None` means every active node.
pub fn gl_energy<S: Stencil>(grid: &S, u: &[C64], eps: f64, region: Option<&[bool]>) -> EnergyBreakdown {
    assert!(eps > 0.0, "epsilon must be positive");
    let (dir, pot) = node_energies(grid, u, eps, None);
    let label = if region.is_some() { "mask" } else { "all" };
    breakdown_from_nodes(&dir, &pot, region, eps, label)
}

/// Tangential energy `E^(T)_ε(u; region)` on a sphere grid.
pub fn tangential_energy(sphere: &SphereGrid, u: &[C64], eps: f64, region: Option<&[bool]>) -> EnergyBreakdown {
    let mut e = gl_energy(sphere, u, eps, region);
    e.region = if region.is_some() {
        "sphere mask".into()
    } else {
        "sphere".into()
    };
    e
}

/// Energy with the potential term weighted by `p`.
pub fn weighted_energy<S: Stencil>(grid: &S, u: &[C64], eps: f64, p: &[f64]) -> Result<EnergyBreakdown, EnergyError> {
    if !(eps > 0.0) {
        return Err(EnergyError::InvalidEps(eps));
    }
    check_weight(grid, p)?;
    let (dir, pot) = node_energies(grid, u, eps, Some(p));
    Ok(breakdown_from_nodes(&dir, &pot, None, eps, "weighted"))
}

pub(crate) fn check_weight<S: Stencil>(grid: &S, p: &[f64]) -> Result<(), EnergyError> {
    assert_eq!(p.len(), grid.len());
    for (i, &v) in p.iter().enumerate() {
        if grid.is_active(i) && !(v > 0.0 && v.is_finite()) {
            return Err(EnergyError::NonPositiveWeight { index: i, value: v });
        }
    }
    Ok(())
}

/// Gradient of the (weighted) energy with respect to the nodal values,
/// written into `out`. Inactive nodes get zero; fixed nodes are not masked.
pub fn energy_gradient<S: Stencil>(grid: &S, u: &[C64], eps: f64, p: Option<&[f64]>, out: &mut [C64]) {
    let inv = 1.0 / (eps * eps);
    par::fill_chunks(out, par::CHUNK, |start, chunk| {
        for (k, g) in chunk.iter_mut().enumerate() {
            let i = start + k;
            if !grid.is_active(i) {
                *g = C64::new(0.0, 0.0);
                continue;
            }
            let ui = u[i];
            let mut acc = C64::new(0.0, 0.0);
            grid.visit_edges(i, |j, w| acc += (ui - u[j]) * w);
            let pi = p.map_or(1.0, |p| p[i]);
            acc -= ui * (grid.node_weight(i) * pi * (1.0 - ui.norm_sqr()) * inv);
            *g = acc;
        }
    });
}

/// `Δu + (1 − |u|²)u/ε²` at free nodes, zero at fixed and inactive nodes.
pub fn gl_residual<S: Stencil>(grid: &S, u: &[C64], eps: f64) -> Vec<C64> {
    let mut g = vec![C64::new(0.0, 0.0); grid.len()];
    energy_gradient(grid, u, eps, None, &mut g);
    par::map_indexed(grid.len(), |i| {
        if grid.is_active(i) && !grid.is_fixed(i) {
            -g[i] / grid.node_weight(i)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Energy of a closed loop sampled uniformly along a circle of Euclidean
/// radius `radius` (last sample repeats the first).
pub fn circle_energy(samples: &[C64], radius: f64, eps: f64) -> EnergyBreakdown {
    let n = samples.len().saturating_sub(1);
    if n == 0 {
        return EnergyBreakdown::new(0.0, 0.0, eps, "circle");
    }
    let ds = std::f64::consts::TAU * radius / n as f64;
    let c = 1.0 / (4.0 * eps * eps);
    let mut dir = Vec::with_capacity(n);
    let mut pot = Vec::with_capacity(n);
    for k in 0..n {
        dir.push(0.5 * (samples[k + 1] - samples[k]).norm_sqr() / ds);
        let d = 1.0 - samples[k].norm_sqr();
        pot.push(c * d * d * ds);
    }
    EnergyBreakdown::new(par::pairwise_sum(&dir), par::pairwise_sum(&pot), eps, "circle")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSample {
    pub r: f64,
    /// `E(u; B_r)`.
    pub e: f64,
    /// `E'(r)` by centred differences of `e` over the trace.
    pub de: f64,
    /// `E^(T)(u; S_r)`.
    pub et: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShellEnergyTrace {
    pub samples: Vec<ShellSample>,
}

impl ShellEnergyTrace {
    /// Build a trace from `(r, E(r), e_T(r))` triples; `E'` is filled in by
    /// centred differences (one-sided at the ends).
    pub fn from_values(r: &[f64], e: &[f64], et: &[f64]) -> Self {
        let n = r.len();
        assert!(n == e.len() && n == et.len());
        let de: Vec<f64> = (0..n)
            .map(|k| match n {
                0 | 1 => 0.0,
                _ if k == 0 => (e[1] - e[0]) / (r[1] - r[0]),
                _ if k == n - 1 => (e[n - 1] - e[n - 2]) / (r[n - 1] - r[n - 2]),
                _ => (e[k + 1] - e[k - 1]) / (r[k + 1] - r[k - 1]),
            })
            .collect();
        ShellEnergyTrace {
            samples: (0..n)
                .map(|k| ShellSample {
                    r: r[k],
                    e: e[k],
                    de: de[k],
                    et: et[k],
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,E,dE,eT\n");
        for p in &self.samples {
            let _ = writeln!(s, "{},{},{},{}", p.r, p.e, p.de, p.et);
        }
        s
    }

    /// Samples where `e_T > E'` beyond `slack` (relative to `E'`, with an
    /// absolute floor `slack · max E'`).
    pub fn tangential_excess(&self, slack: f64) -> Vec<usize> {
        let scale = self.samples.iter().map(|s| s.de.abs()).fold(0.0, f64::max);
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.et > s.de + slack * (s.de.abs() + scale))
            .map(|(k, _)| k)
            .collect()
    }
}

/// `E(u; B_r)`, `E'(r)` and `e_T(r)` at the given radii for a field on a
/// ball lattice.
///
/// `E(r)` counts node energies with a linear ramp of width `h` across the
/// sphere `|x| = r`, which makes it continuous and nondecreasing in `r`.
pub fn shell_energy_trace(
    lat: &Lattice,
    u: &[C64],
    eps: f64,
    radii: &[f64],
    n_phi: Option<usize>,
) -> Result<ShellEnergyTrace, EnergyError> {
    if !(eps > 0.0) {
        return Err(EnergyError::InvalidEps(eps));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GeometryError::InvalidGrid("trace radii must increase strictly".into()).into());
    }
    let (dir, pot) = node_energies(lat, u, eps, None);
    let h = lat.h();
    let radius: Vec<f64> = par::map_indexed(lat.len(), |i| crate::geometry::vec3::norm(lat.position(i)));
    let e: Vec<f64> = radii
        .iter()
        .map(|&r| {
            par::sum_indexed(lat.len(), |i| {
                let t = ((r - radius[i]) / h + 0.5).clamp(0.0, 1.0);
                t * (dir[i] + pot[i])
            })
        })
        .collect();
    let et = radii
        .iter()
        .map(|&r| {
            let (sphere, v) = restrict_to_sphere(lat, u, r, n_phi)?;
            Ok(tangential_energy(&sphere, &v, eps, None).total)
        })
        .collect::<Result<Vec<f64>, EnergyError>>()?;
    Ok(ShellEnergyTrace::from_values(radii, &e, &et))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub index: usize,
    pub r: f64,
    pub ratio_before: f64,
    pub ratio: f64,
}

/// Decreases of `E(r)/r^(N−2)` below this absolute size are ignored: they
/// are far below what a solve to the default tolerance resolves.
pub const MONOTONICITY_FLOOR: f64 = 1e-12;

/// Steps where `E(r)/r^(N−2)` decreases by more than `slack` relative (plus
/// [`MONOTONICITY_FLOOR`]).
pub fn monotonicity_check(trace: &ShellEnergyTrace, dim: usize, slack: f64) -> Vec<MonotonicityViolation> {
    let ratio = |s: &ShellSample| s.e / s.r.powi(dim as i32 - 2);
    trace
        .samples
        .windows(2)
        .enumerate()
        .filter_map(|(k, w)| {
            let (a, b) = (ratio(&w[0]), ratio(&w[1]));
            (b < a - slack * a.abs() - MONOTONICITY_FLOOR).then_some(MonotonicityViolation {
                index: k + 1,
                r: w[1].r,
                ratio_before: a,
                ratio: b,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicIdentityRecord {
    pub radius: f64,
    /// `∫_{B_r} |∇w|²`.
    pub interior: f64,
    /// `∫_{S_r} |∇_T w|²`.
    pub tangential: f64,
    /// `∫_{S_r} |∂_n w|²`.
    pub normal: f64,
    /// `interior`, the left side of the trace inequality.
    pub lhs: f64,
    /// `r/(N−1) · tangential`.
    pub rhs: f64,
    /// `(N−2)·interior − r·(tangential − normal)`.
    pub pohozaev_defect: f64,
    pub laplace_residual: f64,
}

/// Largest `|Σ w_e (w_j − w_i)|` over interior lattice nodes, scaled by
/// `Σ w_e · max|w|`.
pub fn scaled_laplace_residual(lat: &Lattice, w: &[f64]) -> f64 {
    let scale = w.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let per_node = par::map_indexed(lat.len(), |i| {
        if !lat.is_interior(i) {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut wsum = 0.0;
        lat.visit_edges(i, |j, we| {
            acc += we * (w[j] - w[i]);
            wsum += we;
        });
        acc.abs() / (wsum * scale)
    });
    per_node.into_iter().fold(0.0, f64::max)
}

/// Interior Dirichlet energy and boundary tangential/normal energies of a
/// harmonic scalar `w` on the ball of radius `r ≤ R − 2h` of a ball lattice.
///
/// Gradients are central differences, interpolated trilinearly onto a
/// latitude-longitude sphere (`n_phi` rings) and onto `n_r` Simpson radii
/// for the volume integral. Fails if `w` is not discretely harmonic to `tol`.
pub fn harmonic_identities(
    lat: &Lattice,
    w: &[f64],
    r: f64,
    n_phi: usize,
    n_r: usize,
    tol: f64,
) -> Result<HarmonicIdentityRecord, EnergyError> {
    let residual = scaled_laplace_residual(lat, w);
    if residual > tol {
        return Err(EnergyError::NotHarmonic { residual, tol });
    }
    let wc: Vec<C64> = w.iter().map(|&x| C64::new(x, 0.0)).collect();
    let grad = lat.gradient(&wc);
    let gx: [Vec<f64>; 3] = [0, 1, 2].map(|a| grad.iter().map(|g| g[a].re).collect());
    let sample = |p: Vec3| -> Result<Vec3, EnergyError> {
        let mut g = [0.0; 3];
        for a in 0..3 {
            g[a] = lat
                .interpolate_scalar(&gx[a], p)
                .ok_or(GeometryError::RadiusOutOfRange {
                    r: crate::geometry::vec3::norm(p),
                    lo: 0.0,
                    hi: lat.h(),
                })?;
        }
        Ok(g)
    };
    let unit = SphereGrid::full(1.0, n_phi, 2 * n_phi)?;
    let sphere_integrals = |rad: f64| -> Result<(f64, f64), EnergyError> {
        let parts = par::map_indexed(unit.len(), |i| {
            let d = unit.direction(i);
            let p = [d[0] * rad, d[1] * rad, d[2] * rad];
            match sample(p) {
                Ok(g) => {
                    let gn = crate::geometry::vec3::dot(g, d);
                    let g2 = crate::geometry::vec3::dot(g, g);
                    let wi = unit.weight(i) * rad * rad;
                    (wi * (g2 - gn * gn), wi * gn * gn, true)
                }
                Err(_) => (0.0, 0.0, false),
            }
        });
        if parts.iter().any(|p| !p.2) {
            return Err(GeometryError::RadiusOutOfRange {
                r: rad,
                lo: 0.0,
                hi: lat.h(),
            }
            .into());
        }
        let t: Vec<f64> = parts.iter().map(|p| p.0).collect();
        let n: Vec<f64> = parts.iter().map(|p| p.1).collect();
        Ok((par::pairwise_sum(&t), par::pairwise_sum(&n)))
    };
    let (tangential, normal) = sphere_integrals(r)?;
    let m = n_r.max(2) + n_r % 2;
    let dr = r / m as f64;
    let mut terms = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let rad = k as f64 * dr;
        let f = if k == 0 {
            0.0
        } else {
            let (t, n) = sphere_integrals(rad)?;
            t + n
        };
        let c = if k == 0 || k == m {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        terms.push(c * f * dr / 3.0);
    }
    let interior = par::pairwise_sum(&terms);
    let n_dim = 3.0;
    Ok(HarmonicIdentityRecord {
        radius: r,
        interior,
        tangential,
        normal,
        lhs: interior,
        rhs: r / (n_dim - 1.0) * tangential,
        pohozaev_defect: (n_dim - 2.0) * interior - r * (tangential - normal),
        laplace_residual: residual,
    })
}

/// Convenience: wrap a real scalar as a field.
pub fn real_field(w: &[f64]) -> VectorField {
    VectorField(w.iter().map(|&x| C64::new(x, 0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_unimodular_has_zero_energy() {
        let lat = Lattice::disc(2.0, 0.1).unwrap();
        let u = VectorField::constant(lat.len(), C64::new(0.6, 0.8));
        let e = gl_energy(&lat, &u, 0.3, None);
        assert!(e.total.abs() < 1e-14);
    }

    #[test]
    fn vortex_on_annulus_has_log_energy() {
        let r = 8.0;
        let h = r / 400.0;
        let lat = Lattice::annulus(1.0, r, h).unwrap();
        let u = lat.field_from_fn(|p| C64::new(p[0], p[1]) / p[0].hypot(p[1]));
        let e = gl_energy(&lat, &u, 1.0, None);
        assert!(
            (e.dirichlet - PI * r.ln()).abs() < 0.02 * PI * r.ln(),
            "{}",
            e.dirichlet
        );
        assert!(e.potential < 1e-20);
    }

    #[test]
    fn phase_rotation_invariance() {
        let lat = Lattice::disc(1.0, 0.1).unwrap();
        let u = lat.field_from_fn(|p| C64::new(p[0], p[1] * p[1]));
        let v: Vec<C64> = u.iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect();
        let a = gl_energy(&lat, &u, 0.5, None);
        let b = gl_energy(&lat, &v, 0.5, None);
        assert!((a.total - b.total).abs() < 1e-12 * a.total);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let lat = Lattice::disc(1.0, 0.25).unwrap();
        let u = lat.field_from_fn(|p| C64::new(0.3 + p[0], p[1] - 0.2 * p[0]));
        let p: Vec<f64> = (0..lat.len()).map(|i| 1.0 + 0.1 * (i % 3) as f64).collect();
        let mut g = vec![C64::new(0.0, 0.0); lat.len()];
        energy_gradient(&lat, &u, 0.4, Some(&p), &mut g);
        let i = lat.index(4, 4, 0);
        let f = |v: &[C64]| weighted_energy(&lat, v, 0.4, &p).unwrap().total;
        let step = 1e-6;
        let mut up = u.clone();
        up[i].re += step;
        let mut dn = u.clone();
        dn[i].re -= step;
        let fd = (f(&up) - f(&dn)) / (2.0 * step);
        assert!((fd - g[i].re).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} {}", g[i].re);
    }

    #[test]
    fn loop_energy_of_degree_one() {
        let n = 400;
        let s: Vec<C64> = (0..=n)
            .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .collect();
        let rho: f64 = 0.3;
        let e = circle_energy(&s, rho.sin(), 1.0);
        assert!((e.dirichlet - PI / rho.sin()).abs() < 1e-3 * PI / rho.sin());
    }

    #[test]
    fn decreasing_trace_flags_every_step() {
        let r: Vec<f64> = (1..6).map(|k| k as f64).collect();
        let e: Vec<f64> = r.iter().map(|r| 1.0 / r).collect();
        let t = ShellEnergyTrace::from_values(&r, &e, &vec![0.0; 5]);
        assert_eq!(monotonicity_check(&t, 3, 1e-3).len(), 4);
        let z = ShellEnergyTrace::from_values(&r, &[0.0; 5], &[0.0; 5]);
        assert!(monotonicity_check(&z, 3, 1e-3).is_empty());
    }
}
