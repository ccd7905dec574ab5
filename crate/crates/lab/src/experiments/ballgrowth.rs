//! Ball growth on a synthetic chain of discs (merge bookkeeping and
//! containment of earlier families in later ones) and the full bad-disc
//! pipeline on dipole data on `S_R`.

use super::prop13::{bad_disc_problems, sphere_grid};
use super::SphereDipole;
use crate::context::{Context, StageError, Staged};
use crate::output::OutDir;
use serde::{Deserialize, Serialize};
use std::io;
use vortexlab_core::bad_discs::{
    bad_disc_pipeline, default_delta, grow, DiscFamily, MergeEvent, PipelineParams, PipelineResult,
};
use vortexlab_core::geometry::{write_field, FieldHeader, SphericalDisc};
use vortexlab_core::C64;

/// Discs of equal radius on the equator of the unit sphere, with gaps
/// `first_gap · gap_ratio^k` between consecutive boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CascadeParams {
    pub count: usize,
    pub radius: f64,
    pub first_gap: f64,
    pub gap_ratio: f64,
    /// Final growth time.
    pub time: f64,
    /// Times at which the family is recorded, uniformly in `[0, time]`.
    pub steps: usize,
    /// Boundary samples per disc for the containment check.
    pub samples: usize,
}

impl Default for CascadeParams {
    fn default() -> Self {
        CascadeParams {
            count: 5,
            radius: 0.01,
            first_gap: 0.02,
            gap_ratio: 1.8,
            time: 3.0,
            steps: 24,
            samples: 64,
        }
    }
}

impl CascadeParams {
    pub fn initial(&self) -> Result<DiscFamily, StageError> {
        let mut discs = Vec::with_capacity(self.count);
        let mut angle = 0.0;
        for k in 0..self.count {
            if k > 0 {
                angle += 2.0 * self.radius + self.first_gap * self.gap_ratio.powi(k as i32 - 1);
            }
            discs.push(SphericalDisc::new([angle.cos(), angle.sin(), 0.0], self.radius, 1.0).stage("cascade")?);
        }
        Ok(DiscFamily {
            sphere_radius: 1.0,
            discs,
            degrees: None,
        })
    }

    fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.count < 2 {
            e.push("cascade.count must be at least 2".into());
        }
        if !(self.radius > 0.0 && self.first_gap > 0.0 && self.gap_ratio >= 1.0) {
            e.push("cascade: radius and first_gap must be positive, gap_ratio ≥ 1".into());
        }
        let span = 2.0 * self.radius * self.count as f64
            + (0..self.count.saturating_sub(1))
                .map(|k| self.first_gap * self.gap_ratio.powi(k as i32))
                .sum::<f64>();
        if !(span < std::f64::consts::PI) {
            e.push(format!(
                "cascade: discs span {span:.3} rad and would wrap around the equator"
            ));
        }
        if !(self.time > 0.0) || self.steps < 2 || self.samples < 8 {
            e.push("cascade: time > 0, steps ≥ 2 and samples ≥ 8 required".into());
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub log_radius: f64,
    pub sphere_spacing: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub delta: Option<f64>,
    /// Exponent of the radius-sum bound `Σ r_i ≤ R^α`; defaults to
    /// `1 − (2π − γ)/(8π)`.
    pub alpha: Option<f64>,
    pub dipole: SphereDipole,
    pub cascade: CascadeParams,
    /// Write the sphere data as a binary snapshot.
    pub snapshot: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            log_radius: 5.0,
            sphere_spacing: 0.5,
            gamma: 5.0,
            lambda: 2.0,
            delta: None,
            alpha: None,
            dipole: SphereDipole::default(),
            cascade: CascadeParams::default(),
            snapshot: false,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Vec<String> {
        let mut e = bad_disc_problems(self.gamma, self.lambda, self.delta, self.sphere_spacing);
        if !(self.log_radius > 0.0) {
            e.push("log_radius must be positive".into());
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                e.push(format!("alpha = {a} must lie in (0, 1)"));
            }
        }
        e.extend(self.dipole.validate("dipole"));
        e.extend(self.cascade.validate());
        e
    }

    pub fn pipeline_params(&self) -> PipelineParams {
        let mut pp = PipelineParams::with_defaults(self.gamma, self.lambda);
        pp.delta = self.delta.unwrap_or_else(|| default_delta(self.gamma));
        if let Some(a) = self.alpha {
            pp.alpha = a;
        }
        pp
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeStep {
    pub t: f64,
    pub discs: usize,
    pub r_tot: f64,
    /// Largest distance by which a boundary sample of the family at this
    /// time lies outside the next recorded family.
    pub containment_excess: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeOutcome {
    pub initial: DiscFamily,
    pub merges: Vec<MergeEvent>,
    /// `max |r_tot after − r_tot before|` over merges.
    pub conservation_defect: f64,
    /// `|r_tot(T) − e^T r_tot(0)|`.
    pub growth_defect: f64,
    pub steps: Vec<CascadeStep>,
    pub max_containment_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub radius: f64,
    pub separation: f64,
    pub params: PipelineParams,
    pub cascade: CascadeOutcome,
    pub pipeline: PipelineResult,
    pub certificate_pass: bool,
    /// `2 − Σ deg²`.
    pub degree_sq_margin: i64,
    #[serde(skip)]
    pub snapshot: Option<(FieldHeader, Vec<C64>)>,
}

/// Largest amount by which a boundary point (or centre) of a disc of `a`
/// lies outside every disc of `b`.
fn containment_excess(a: &DiscFamily, b: &DiscFamily, samples: usize) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for d in &a.discs {
        let mut pts = d.boundary_points(samples);
        pts.push(d.center);
        for p in pts {
            let ex = b
                .discs
                .iter()
                .map(|e| e.distance_to(p) - e.rho)
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(ex);
        }
    }
    worst
}

pub fn run_cascade(c: &CascadeParams) -> Result<CascadeOutcome, StageError> {
    let initial = c.initial()?;
    let fin = grow(&initial, c.time).stage("cascade growth")?;
    let conservation_defect = fin
        .merges
        .iter()
        .map(|m| (m.r_tot_after - m.r_tot_before).abs())
        .fold(0.0, f64::max);
    let growth_defect = (fin.family.r_tot() - c.time.exp() * initial.r_tot()).abs();
    let times: Vec<f64> = (0..=c.steps).map(|k| c.time * k as f64 / c.steps as f64).collect();
    let fams = times
        .iter()
        .map(|&t| grow(&initial, t).map(|g| g.family))
        .collect::<Result<Vec<_>, _>>()
        .stage("cascade growth")?;
    let steps: Vec<CascadeStep> = (0..fams.len())
        .map(|k| CascadeStep {
            t: times[k],
            discs: fams[k].discs.len(),
            r_tot: fams[k].r_tot(),
            containment_excess: fams
                .get(k + 1)
                .map(|next| containment_excess(&fams[k], next, c.samples)),
        })
        .collect();
    let max_containment_excess = steps
        .iter()
        .filter_map(|s| s.containment_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CascadeOutcome {
        initial,
        merges: fin.merges,
        conservation_defect,
        growth_defect,
        steps,
        max_containment_excess,
    })
}

pub fn run(p: &Params, ctx: &mut Context) -> Result<Outcome, StageError> {
    let cascade = ctx.timed("cascade", |_| run_cascade(&p.cascade))?;
    log::info!(
        "cascade: {} merges, conservation defect {:.2e}, containment excess {:.2e}",
        cascade.merges.len(),
        cascade.conservation_defect,
        cascade.max_containment_excess
    );
    let r = p.log_radius.exp();
    let sphere = sphere_grid(r, p.sphere_spacing)?;
    let data = p.dipole.on_sphere(r);
    let u = sphere.field_from_fn(|x| data.value(x));
    let params = p.pipeline_params();
    let pipeline = ctx
        .timed("bad discs", |_| bad_disc_pipeline(&sphere, &u, &params))
        .stage("bad discs")?;
    let cert = &pipeline.certificate;
    log::info!(
        "selected t = {:.4} with {} disc(s); certificate {}",
        pipeline.selection.t,
        pipeline.family.discs.len(),
        if cert.all_pass() { "passes" } else { "fails" }
    );
    Ok(Outcome {
        radius: r,
        separation: p.dipole.separation(r),
        params,
        certificate_pass: cert.all_pass(),
        degree_sq_margin: 2 - cert.degree_sq_sum,
        snapshot: p.snapshot.then(|| (FieldHeader::for_sphere(&sphere), u.0.clone())),
        cascade,
        pipeline,
    })
}

pub fn write(o: &Outcome, out: &mut OutDir) -> io::Result<()> {
    out.write_json("growth_trace.json", &o.pipeline.selection.trace)?;
    out.write_json("certificate.json", &o.pipeline.certificate)?;
    out.write_json("cascade.json", &o.cascade)?;
    out.write_json("ballgrowth.json", o)?;
    if let Some((h, u)) = &o.snapshot {
        out.write_with("sphere_data.field", |path| write_field(path, h, u))?;
    }
    Ok(())
}
