//! The competitor on `B_R` for data `u` on `S_R`.
//!
//! Shell `R − H ≤ |x| ≤ R` with `H = R^α`: the radial projection of `u`,
//! except over the bad discs, where the cone extension between `u` and the
//! disc filling runs through the spherical cylinder. Annulus
//! `R − 2H ≤ |x| < R − H`: modulus interpolated to `1`, phase constant
//! along rays. Core `|x| < R − 2H`: `e^{iΦ}` with `Φ` harmonic.

use super::cylinder::{cone_value, ShellChart};
use super::phase::{harmonic_phase_extension, lift_phase, tangential_dirichlet, AnnulusData, AnnulusPieces};
use super::phase::{HarmonicPhaseReport, LiftAudit};
use super::transplant::{fill_spherical_disc, FillOptions, FillReport, FilledDisc};
use super::ConstructError;
use crate::bad_discs::{bad_disc_pipeline, default_delta, Certificate, PipelineParams};
use crate::energy::{node_energies, tangential_energy};
use crate::geometry::vec3::{norm, scale, Vec3};
use crate::geometry::{Lattice, SphereGrid, Stencil, VectorField};
use crate::laplace::LaplaceOptions;
use crate::par;
use crate::relax::{minimize_dirichlet, Initializer, SolveOptions, SolveReport};
use crate::C64;
use serde::{Deserialize, Serialize};

/// `(1/2)(8/7)²`.
pub const PREFACTOR_TARGET: f64 = 0.5 * (8.0 / 7.0) * (8.0 / 7.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompetitorParams {
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// Bad-set threshold; defaults to half the admissible maximum for `γ`.
    pub delta: Option<f64>,
    /// Spacing of the ball lattice.
    pub spacing: f64,
    pub fill: FillOptions,
    pub laplace: LaplaceOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscRecord {
    pub center: Vec3,
    pub rho: f64,
    pub degree: i32,
    pub fill: FillReport,
    /// Energy of the competitor over the nodes of the shell above the disc.
    pub cylinder_energy: f64,
    /// `(H + r²/H) E^(T)(u; D̃)`.
    pub cylinder_scale: f64,
    /// `cylinder_energy / cylinder_scale`.
    pub cylinder_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompetitorReport {
    pub radius: f64,
    pub alpha: f64,
    /// `H = R^α`.
    pub shell_thickness: f64,
    pub spacing: f64,
    pub gamma: f64,
    /// `E^(T)(u; S_R)`.
    pub tangential_energy: f64,
    /// `E^(T)(u; S_R) ≤ γ ln R`.
    pub premise: bool,
    pub total: f64,
    pub shell: f64,
    pub annulus: f64,
    pub core: f64,
    /// `|shell + annulus + core − total| / total`.
    pub bookkeeping_defect: f64,
    /// `core / (R E^(T)(u; S_R))`.
    pub core_prefactor: f64,
    pub prefactor_target: f64,
    /// `(1/2)(8/7)²(R − 2H) E^(T)(u; S_R)`.
    pub leading_bound: f64,
    /// `total − leading_bound`.
    pub remainder: f64,
    /// `R^α ln R`.
    pub remainder_scale: f64,
    /// `(shell + annulus) / (R^α ln R)`.
    pub outer_constant: f64,
    /// `E^(T)(V; S_{R−H})` of the shell's inner trace.
    pub inner_tangential_energy: f64,
    /// `inner_tangential_energy / tangential_energy`.
    pub inner_ratio: f64,
    pub inner_min_modulus: f64,
    pub inner_max_modulus: f64,
    pub annulus_pieces: AnnulusPieces,
    pub harmonic: HarmonicPhaseReport,
    pub lifting: LiftAudit,
    pub selected_time: f64,
    pub certificate: Certificate,
    pub discs: Vec<DiscRecord>,
    /// `max |U − g|` at boundary nodes of the lattice.
    pub boundary_defect: f64,
}

#[derive(Clone, Debug)]
pub struct Competitor {
    pub lattice: Lattice,
    /// Boundary data on the lattice: `u` at the radial projection.
    pub boundary: VectorField,
    pub field: VectorField,
    pub report: CompetitorReport,
}

enum Region {
    Shell(Option<usize>),
    Annulus,
    Core,
}

/// Build the competitor for `u` sampled on `sphere` (radius `R`, `ε = 1`).
pub fn competitor(sphere: &SphereGrid, u: &[C64], params: &CompetitorParams) -> Result<Competitor, ConstructError> {
    let r = sphere.radius();
    let alpha = params.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConstructError::Precondition(format!("α = {alpha} outside (0, 1)")));
    }
    let hh = r.powf(alpha);
    let (r1, r2) = (r - hh, r - 2.0 * hh);
    if !(r2 > 2.0 * params.spacing) {
        return Err(ConstructError::Precondition(format!(
            "core radius R − 2R^α = {r2:.3} leaves no room for the core"
        )));
    }
    let et = tangential_energy(sphere, u, 1.0, None).total;

    // Step 1: bad discs on S_R.
    let pp = PipelineParams {
        gamma: params.gamma,
        lambda: params.lambda,
        delta: params.delta.unwrap_or_else(|| default_delta(params.gamma)),
        alpha,
    };
    let bad = bad_disc_pipeline(sphere, u, &pp)
        .map_err(ConstructError::from)
        .map_err(ConstructError::at("step 1 (bad discs)"))?;
    let discs = bad.family.discs.clone();
    if !bad.certificate.degrees_zero {
        return Err(ConstructError::at("step 1 (bad discs)")(ConstructError::Precondition(
            "a bad disc has nonzero degree".into(),
        )));
    }

    // Step 2: fillings, cylinders and the radial projection.
    let fills: Vec<FilledDisc> = par::map_jobs(&discs, |d| fill_spherical_disc(sphere, u, d, &params.fill))
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(ConstructError::at("step 2 (disc filling)"))?;
    let charts: Vec<ShellChart> = discs.iter().map(|d| ShellChart::new(r, hh, d.center)).collect();
    let lat = Lattice::ball(r, params.spacing)?;
    let n = lat.len();
    let on_sphere = |p: Vec3| sphere.interpolate(u, p).expect("full sphere");
    let disc_of = |dir: Vec3| discs.iter().position(|d| d.contains(scale(dir, r)));
    let region = |i: usize| -> Option<Region> {
        if !lat.is_inside(i) {
            return None;
        }
        let p = lat.position(i);
        let m = norm(p);
        Some(if m >= r1 {
            Region::Shell(disc_of(scale(p, 1.0 / m)))
        } else if m >= r2 {
            Region::Annulus
        } else {
            Region::Core
        })
    };
    let boundary = VectorField(par::map_indexed(n, |i| {
        let p = lat.position(i);
        let m = norm(p);
        if lat.is_inside(i) && m > 0.0 {
            on_sphere(scale(p, r / m))
        } else {
            C64::new(0.0, 0.0)
        }
    }));
    let shell_value = |p: Vec3, k: Option<usize>| -> C64 {
        let m = norm(p);
        let Some(k) = k else {
            return on_sphere(scale(p, r / m));
        };
        let chart = &charts[k];
        let y = chart.psi_inverse(p);
        let top = |q: [f64; 2]| chart.psi([q[0], q[1], hh]);
        cone_value(
            |q| on_sphere(top(q)),
            |q| fills[k].value_at(top(q)),
            [y[0], y[1]],
            y[2].clamp(0.0, hh),
            discs[k].euclidean_radius(),
            hh,
        )
    };

    let inner = sphere.rescaled(r1);
    let v_inner: Vec<C64> = par::map_indexed(inner.len(), |j| {
        let dir = inner.direction(j);
        match disc_of(dir) {
            Some(k) => fills[k].value_at(dir),
            None => u[j],
        }
    });
    let inner_et = tangential_energy(&inner, &v_inner, 1.0, None).total;

    // Step 3: lifting, annulus and harmonic core.
    let (phase, lifting) = lift_phase(&inner, &v_inner).map_err(ConstructError::at("step 3 (phase lifting)"))?;
    let modulus: Vec<f64> = v_inner.iter().map(|z| z.norm()).collect();
    let (lo, hi) = modulus
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
    let boundary_dirichlet = tangential_dirichlet(&inner, &phase);
    let annulus = AnnulusData::new(inner.clone(), modulus, phase, r2)?;
    let annulus_pieces = annulus.pieces();
    let (big_phi, core_mask, harmonic) = harmonic_phase_extension(
        &lat,
        r2,
        |p| {
            annulus
                .sphere
                .interpolate_scalar(&annulus.phase, scale(p, r1 / r2))
                .expect("full sphere")
        },
        boundary_dirichlet,
        &params.laplace,
    )
    .map_err(ConstructError::at("step 3 (harmonic core)"))?;

    let field = VectorField(par::map_indexed(n, |i| {
        if lat.is_fixed(i) {
            return boundary[i];
        }
        match region(i) {
            None => C64::new(0.0, 0.0),
            Some(Region::Shell(k)) => shell_value(lat.position(i), k),
            Some(Region::Annulus) => annulus.value_at(lat.position(i)),
            Some(Region::Core) => C64::from_polar(1.0, big_phi[i]),
        }
    }));

    // Energy bookkeeping by node.
    let (dir, pot) = node_energies(&lat, &field, 1.0, None);
    let e_node: Vec<f64> = dir.iter().zip(&pot).map(|(a, b)| a + b).collect();
    let tags: Vec<(u8, usize)> = (0..n)
        .map(|i| match region(i) {
            None => (0, usize::MAX),
            Some(Region::Shell(k)) => (1, k.unwrap_or(usize::MAX)),
            Some(Region::Annulus) => (2, usize::MAX),
            Some(Region::Core) => (3, usize::MAX),
        })
        .collect();
    debug_assert!((0..n).all(|i| (tags[i].0 == 3) == core_mask[i]));
    let sum_where = |f: &(dyn Fn(usize) -> bool + Sync)| par::sum_indexed(n, |i| if f(i) { e_node[i] } else { 0.0 });
    let total = par::sum_indexed(n, |i| e_node[i]);
    let shell = sum_where(&|i| tags[i].0 == 1);
    let annulus_e = sum_where(&|i| tags[i].0 == 2);
    let core = sum_where(&|i| tags[i].0 == 3);
    let disc_records: Vec<DiscRecord> = discs
        .iter()
        .zip(&fills)
        .enumerate()
        .map(|(k, (d, f))| {
            let e = sum_where(&|i| tags[i] == (1, k));
            let s = (hh + d.rho * d.rho / hh) * f.report.data_energy_sphere;
            DiscRecord {
                center: d.center,
                rho: d.rho,
                degree: bad.certificate.discs[k].degree,
                fill: f.report.clone(),
                cylinder_energy: e,
                cylinder_scale: s,
                cylinder_constant: if s > 0.0 { e / s } else { 0.0 },
            }
        })
        .collect();
    let boundary_defect = (0..n)
        .filter(|&i| lat.is_fixed(i))
        .map(|i| (field[i] - boundary[i]).norm())
        .fold(0.0, f64::max);
    let leading_bound = PREFACTOR_TARGET * r2 * et;
    let remainder_scale = hh * r.ln();
    let report = CompetitorReport {
        radius: r,
        alpha,
        shell_thickness: hh,
        spacing: params.spacing,
        gamma: params.gamma,
        tangential_energy: et,
        premise: et <= params.gamma * r.ln(),
        total,
        shell,
        annulus: annulus_e,
        core,
        bookkeeping_defect: if total > 0.0 {
            (shell + annulus_e + core - total).abs() / total
        } else {
            0.0
        },
        core_prefactor: if et > 0.0 { core / (r * et) } else { 0.0 },
        prefactor_target: PREFACTOR_TARGET,
        leading_bound,
        remainder: total - leading_bound,
        remainder_scale,
        outer_constant: (shell + annulus_e) / remainder_scale,
        inner_tangential_energy: inner_et,
        inner_ratio: if et > 0.0 { inner_et / et } else { 0.0 },
        inner_min_modulus: lo,
        inner_max_modulus: hi,
        annulus_pieces,
        harmonic,
        lifting,
        selected_time: bad.selection.t,
        certificate: bad.certificate,
        discs: disc_records,
        boundary_defect,
    };
    Ok(Competitor {
        lattice: lat,
        boundary,
        field,
        report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerComparison {
    pub competitor_energy: f64,
    pub minimizer_energy: f64,
    /// `competitor − minimizer`.
    pub gap: f64,
    pub solve: SolveReport,
}

/// Minimize `E` on the competitor's lattice with its boundary values,
/// starting from the competitor.
pub fn compare_with_minimizer(c: &Competitor, opts: &SolveOptions) -> Result<MinimizerComparison, ConstructError> {
    let opts = SolveOptions {
        inits: vec![Initializer::Given],
        ..opts.clone()
    };
    let (_, solve) = minimize_dirichlet(&c.lattice, &c.field, 1.0, &opts)?;
    let minimizer_energy = solve.energy.total;
    Ok(MinimizerComparison {
        competitor_energy: c.report.total,
        minimizer_energy,
        gap: c.report.total - minimizer_energy,
        solve,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLogFit {
    /// `C` in `C R^p ln R`.
    pub constant: f64,
    pub exponent: f64,
    /// Log residuals per sample.
    pub residuals: Vec<f64>,
}

/// Least-squares fit of `values ≈ C R^p ln R` in log coordinates.
pub fn fit_power_log(radii: &[f64], values: &[f64]) -> Result<PowerLogFit, ConstructError> {
    if radii.len() != values.len() || radii.len() < 2 {
        return Err(ConstructError::Precondition("fit needs at least two samples".into()));
    }
    if radii.iter().zip(values).any(|(&r, &v)| !(r > 1.0 && v > 0.0)) {
        return Err(ConstructError::Precondition(
            "fit needs R > 1 and positive values".into(),
        ));
    }
    let x: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = radii.iter().zip(values).map(|(r, v)| (v / r.ln()).ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(ConstructError::Precondition("fit needs distinct radii".into()));
    }
    let p = sxy / sxx;
    let c = my - p * mx;
    Ok(PowerLogFit {
        constant: c.exp(),
        exponent: p,
        residuals: x.iter().zip(&y).map(|(a, b)| b - (c + p * a)).collect(),
    })
}
