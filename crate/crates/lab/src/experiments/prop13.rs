//! Competitor maps for dipole data on `S_R` over a list of radii: the
//! energy split into shell, annulus and core, the core prefactor, a power
//! law fit of the outer terms and a comparison with the minimizer.

use super::{csv, increasing, SolverParams, SphereDipole};
use crate::context::{Context, StageError, Staged};
use crate::output::OutDir;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io;
use vortexlab_core::bad_discs::default_delta;
use vortexlab_core::construct::{
    compare_with_minimizer, competitor, fit_power_log, CompetitorParams, CompetitorReport, FillOptions,
    MinimizerComparison, PowerLogFit,
};
use vortexlab_core::geometry::{write_field, FieldHeader, SphereGrid};
use vortexlab_core::laplace::LaplaceOptions;
use vortexlab_core::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizerParams {
    /// Which of `log_radii` to compare at.
    pub log_radius: f64,
    pub solver: SolverParams,
}

impl Default for MinimizerParams {
    fn default() -> Self {
        MinimizerParams {
            log_radius: 4.0,
            solver: SolverParams {
                max_iters: 2000,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub log_radii: Vec<f64>,
    pub gamma: f64,
    /// Lower bound on the bad-disc radii (in units of `ε = 1`).
    pub lambda: f64,
    /// Shell thickness exponent: `H = R^α`.
    pub alpha: f64,
    /// Bad-set threshold; defaults to half the admissible maximum for `γ`.
    pub delta: Option<f64>,
    /// Ball lattice spacing.
    pub spacing: f64,
    /// Sphere grid spacing (arc length between rings).
    pub sphere_spacing: f64,
    pub dipole: SphereDipole,
    pub fill: FillOptions,
    pub laplace: LaplaceOptions,
    pub minimizer: Option<MinimizerParams>,
    /// Write the competitor at the largest radius as a binary snapshot.
    pub snapshot: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            log_radii: vec![4.0, 4.25, 4.5],
            gamma: 5.0,
            lambda: 2.0,
            alpha: 0.6,
            delta: None,
            spacing: 1.0,
            sphere_spacing: 0.5,
            dipole: SphereDipole::default(),
            fill: FillOptions::default(),
            laplace: LaplaceOptions::default(),
            minimizer: Some(MinimizerParams::default()),
            snapshot: false,
        }
    }
}

/// Checks shared with the ball-growth experiment.
pub(crate) fn bad_disc_problems(gamma: f64, lambda: f64, delta: Option<f64>, sphere_spacing: f64) -> Vec<String> {
    let mut e = Vec::new();
    if !(gamma > 0.0 && gamma < TAU) {
        e.push(format!(
            "gamma = {gamma} must lie in (0, 2π): γ + 3ε < 2π with ε = (2π − γ)/6 needs γ < 2π"
        ));
    }
    if !(sphere_spacing > 0.0) {
        e.push("sphere_spacing must be positive".into());
    } else if !(lambda >= 4.0 * sphere_spacing) {
        e.push(format!(
            "lambda = {lambda} < 4·sphere_spacing = {}: bad discs of radius Λε are not resolved by 4 grid spacings",
            4.0 * sphere_spacing
        ));
    }
    if let Some(d) = delta {
        if !(d > 0.0 && d < 0.125) {
            e.push(format!("delta = {d} must lie in (0, 1/8)"));
        } else if gamma > 0.0 && gamma < TAU && d >= 1.0 - (2.0 * gamma / (gamma + TAU)).sqrt() {
            e.push(format!(
                "delta = {d} is too large for gamma = {gamma}: the boundary energy bound needs δ < {:.6}",
                1.0 - (2.0 * gamma / (gamma + TAU)).sqrt()
            ));
        }
    }
    e
}

/// Sphere grid of radius `r` with ring spacing about `spacing`.
pub(crate) fn sphere_grid(r: f64, spacing: f64) -> Result<SphereGrid, StageError> {
    let n_phi = (PI * r / spacing).ceil() as usize;
    SphereGrid::full(r, n_phi, 2 * n_phi).stage("sphere grid")
}

impl Params {
    pub fn validate(&self) -> Vec<String> {
        let mut e = bad_disc_problems(self.gamma, self.lambda, self.delta, self.sphere_spacing);
        if self.log_radii.is_empty() || !increasing(&self.log_radii) {
            e.push("log_radii must be a nonempty strictly increasing list".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            e.push(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if !(self.spacing > 0.0) {
            e.push("spacing must be positive".into());
        } else {
            for &l in &self.log_radii {
                let r = l.exp();
                if !(r - 2.0 * r.powf(self.alpha) > 2.0 * self.spacing) {
                    e.push(format!(
                        "R = e^{l}: the core radius R − 2R^α = {:.3} must exceed two lattice spacings",
                        r - 2.0 * r.powf(self.alpha)
                    ));
                }
            }
        }
        e.extend(self.dipole.validate("dipole"));
        e.extend(self.fill.solve.validate_problems("fill.solve"));
        if let Some(m) = &self.minimizer {
            if !self.log_radii.contains(&m.log_radius) {
                e.push(format!(
                    "minimizer.log_radius = {} must be one of log_radii",
                    m.log_radius
                ));
            }
            e.extend(m.solver.validate("minimizer.solver"));
        }
        e
    }

    pub fn competitor_params(&self) -> CompetitorParams {
        CompetitorParams {
            gamma: self.gamma,
            lambda: self.lambda,
            alpha: self.alpha,
            delta: self.delta,
            spacing: self.spacing,
            fill: self.fill.clone(),
            laplace: self.laplace.clone(),
        }
    }
}

trait OptionsProblems {
    fn validate_problems(&self, at: &str) -> Vec<String>;
}

impl OptionsProblems for vortexlab_core::relax::SolveOptions {
    fn validate_problems(&self, at: &str) -> Vec<String> {
        if self.tol > 0.0 && self.max_iters > 0 && self.memory > 0 && !self.inits.is_empty() {
            Vec::new()
        } else {
            vec![format!(
                "{at}: tol, max_iters, memory and inits must be positive/nonempty"
            )]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub log_radius: f64,
    pub radius: f64,
    pub separation: f64,
    pub tangential_energy: f64,
    /// `E^(T)(u; S_R) / (γ ln R)`.
    pub premise_ratio: f64,
    pub premise: bool,
    pub total: f64,
    pub shell: f64,
    pub annulus: f64,
    pub core: f64,
    pub bookkeeping_defect: f64,
    pub core_prefactor: f64,
    pub prefactor_target: f64,
    pub outer_constant: f64,
    pub inner_ratio: f64,
    pub discs: usize,
    pub certificate_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub log_radius: f64,
    #[serde(flatten)]
    pub result: MinimizerComparison,
    /// `gap ≥ −tol · competitor_energy`.
    pub minimizer_not_above: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub delta: f64,
    pub rows: Vec<Row>,
    /// Fit of `shell + annulus ≈ C R^p ln R`; absent with a single radius.
    pub outer_fit: Option<PowerLogFit>,
    /// `|p − α|`.
    pub exponent_gap: Option<f64>,
    pub minimizer: Option<Comparison>,
    pub reports: Vec<CompetitorReport>,
    #[serde(skip)]
    pub snapshot: Option<(FieldHeader, Vec<C64>)>,
}

pub fn run(p: &Params, ctx: &mut Context) -> Result<Outcome, StageError> {
    let cp = p.competitor_params();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut minimizer = None;
    let mut snapshot = None;
    for (k, &l) in p.log_radii.iter().enumerate() {
        let r = l.exp();
        let sphere = sphere_grid(r, p.sphere_spacing)?;
        let data = p.dipole.on_sphere(r);
        let u = sphere.field_from_fn(|x| data.value(x));
        let label = format!("competitor (ln R = {l})");
        let c = ctx.timed(&label, |_| competitor(&sphere, &u, &cp)).stage(&label)?;
        let rep = &c.report;
        log::info!(
            "ln R = {l}: E^T {:.4}, total {:.3} = shell {:.3} + annulus {:.3} + core {:.3}, prefactor {:.4}",
            rep.tangential_energy,
            rep.total,
            rep.shell,
            rep.annulus,
            rep.core,
            rep.core_prefactor
        );
        rows.push(Row {
            log_radius: l,
            radius: r,
            separation: p.dipole.separation(r),
            tangential_energy: rep.tangential_energy,
            premise_ratio: rep.tangential_energy / (p.gamma * l),
            premise: rep.premise,
            total: rep.total,
            shell: rep.shell,
            annulus: rep.annulus,
            core: rep.core,
            bookkeeping_defect: rep.bookkeeping_defect,
            core_prefactor: rep.core_prefactor,
            prefactor_target: rep.prefactor_target,
            outer_constant: rep.outer_constant,
            inner_ratio: rep.inner_ratio,
            discs: rep.discs.len(),
            certificate_pass: rep.certificate.all_pass(),
        });
        if let Some(m) = p.minimizer.as_ref().filter(|m| m.log_radius == l) {
            let opts = m.solver.options(ctx);
            let label = format!("minimizer (ln R = {l})");
            let result = ctx.timed(&label, |_| compare_with_minimizer(&c, &opts)).stage(&label)?;
            log::info!(
                "minimizer {:.4} vs competitor {:.4} ({} iterations, converged {})",
                result.minimizer_energy,
                result.competitor_energy,
                result.solve.iterations,
                result.solve.converged
            );
            minimizer = Some(Comparison {
                log_radius: l,
                minimizer_not_above: result.gap >= -m.solver.tol * result.competitor_energy,
                result,
            });
        }
        if p.snapshot && k + 1 == p.log_radii.len() {
            snapshot = Some((FieldHeader::for_lattice(&c.lattice), c.field.0.clone()));
        }
        reports.push(c.report);
    }
    let outer_fit = if rows.len() >= 2 {
        let radii: Vec<f64> = rows.iter().map(|r| r.radius).collect();
        let outer: Vec<f64> = rows.iter().map(|r| r.shell + r.annulus).collect();
        Some(fit_power_log(&radii, &outer).stage("outer fit")?)
    } else {
        None
    };
    Ok(Outcome {
        delta: p.delta.unwrap_or_else(|| default_delta(p.gamma)),
        exponent_gap: outer_fit.as_ref().map(|f| (f.exponent - p.alpha).abs()),
        outer_fit,
        rows,
        minimizer,
        reports,
        snapshot,
    })
}

pub fn write(o: &Outcome, out: &mut OutDir) -> io::Result<()> {
    let header = [
        "log_radius",
        "radius",
        "tangential_energy",
        "premise_ratio",
        "total",
        "shell",
        "annulus",
        "core",
        "core_prefactor",
        "outer_constant",
        "inner_ratio",
        "discs",
    ];
    let rows = o.rows.iter().map(|r| {
        [
            r.log_radius,
            r.radius,
            r.tangential_energy,
            r.premise_ratio,
            r.total,
            r.shell,
            r.annulus,
            r.core,
            r.core_prefactor,
            r.outer_constant,
            r.inner_ratio,
            r.discs as f64,
        ]
        .iter()
        .map(|x| x.to_string())
        .collect()
    });
    out.write_text("prop13.csv", &csv(&header, rows))?;
    out.write_json("prop13.json", o)?;
    if let Some((h, u)) = &o.snapshot {
        out.write_with("competitor.field", |path| write_field(path, h, u))?;
    }
    Ok(())
}
