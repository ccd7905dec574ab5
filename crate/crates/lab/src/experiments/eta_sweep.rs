//! Minimizers on a ball for a decreasing list of `ε`, per boundary data set:
//! the ratio `E_ε/|ln ε|` and the modulus at the centre.

use super::{csv, decreasing, BoundaryData, SolverParams};
use crate::context::{Context, StageError, Staged};
use crate::output::OutDir;
use serde::{Deserialize, Serialize};
use std::io;
use vortexlab_core::geometry::Lattice;
use vortexlab_core::relax::{eta_sweep, SweepRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Nodes across the diameter; the spacing is `2·radius/resolution`.
    pub resolution: usize,
    pub radius: f64,
    pub eps: Vec<f64>,
    /// Energy budget `γ` of the premise `E_ε ≤ γ |ln ε|`.
    pub gamma: f64,
    pub data: Vec<BoundaryData>,
    pub solver: SolverParams,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            resolution: 96,
            radius: 1.0,
            eps: vec![0.2, 0.1, 0.05],
            gamma: 5.0,
            data: vec![BoundaryData::PlaneWave { k: 2.0 }, BoundaryData::VortexLine],
            solver: SolverParams::default(),
        }
    }
}

impl Params {
    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / self.resolution as f64
    }

    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.resolution < 8 {
            e.push(format!("resolution = {} must be at least 8", self.resolution));
        }
        if !(self.radius > 0.0) {
            e.push("radius must be positive".into());
        }
        if self.eps.is_empty() || !decreasing(&self.eps) || self.eps.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            e.push("eps must be a nonempty strictly decreasing list in (0, 1)".into());
        }
        if !(self.gamma > 0.0) {
            e.push("gamma must be positive".into());
        }
        if self.data.is_empty() {
            e.push("data: at least one boundary data set".into());
        }
        for (k, d) in self.data.iter().enumerate() {
            e.extend(d.validate(&format!("data[{k}]")));
        }
        e.extend(self.solver.validate("solver"));
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSet {
    pub data: BoundaryData,
    pub rows: Vec<SweepRow>,
    pub ratio_decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub spacing: f64,
    pub nodes: usize,
    pub sets: Vec<SweepSet>,
}

pub fn run(p: &Params, ctx: &mut Context) -> Result<Outcome, StageError> {
    let h = p.spacing();
    let lat = Lattice::ball(p.radius, h).stage("lattice")?;
    log::info!("ball lattice h = {h:.5}, {} nodes", lat.inside_count());
    let mut sets = Vec::new();
    for d in &p.data {
        let label = format!("sweep ({})", d.label());
        let opts = p.solver.options(ctx);
        let f = d.function(p.radius);
        let rows = ctx
            .timed(&label, |_| eta_sweep(&lat, f, &p.eps, p.gamma, &opts))
            .stage(&label)?;
        for r in &rows {
            log::info!(
                "{} eps {}: E {:.5}, ratio {:.4}, |u(0)| {:.4}, converged {}",
                d.label(),
                r.eps,
                r.energy,
                r.ratio,
                r.center_modulus,
                r.converged
            );
        }
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        sets.push(SweepSet {
            data: d.clone(),
            ratio_decreasing: decreasing(&ratios),
            rows,
        });
    }
    Ok(Outcome {
        spacing: h,
        nodes: lat.inside_count(),
        sets,
    })
}

pub fn write(o: &Outcome, out: &mut OutDir) -> io::Result<()> {
    let rows = o.sets.iter().flat_map(|s| {
        s.rows.iter().map(move |r| {
            vec![
                s.data.label().to_string(),
                r.eps.to_string(),
                r.energy.to_string(),
                r.ratio.to_string(),
                r.center_modulus.to_string(),
                r.premise.to_string(),
                r.converged.to_string(),
                r.residual.to_string(),
                r.iterations.to_string(),
            ]
        })
    });
    let header = [
        "data",
        "eps",
        "energy",
        "ratio",
        "center_modulus",
        "premise",
        "converged",
        "residual",
        "iterations",
    ];
    out.write_text("eta_sweep.csv", &csv(&header, rows))?;
    out.write_json("eta_sweep.json", o)
}
