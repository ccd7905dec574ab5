//! Radial degree-one profile and the energy of the straight vortex line in
//! growing balls, fitted to `a R ln R + b R`.

use super::{csv, increasing};
use crate::context::{Context, StageError, Staged};
use crate::output::OutDir;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io;
use vortexlab_core::profile::{growth_rate, solve_profile, GrowthFit, Profile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub radii: Vec<f64>,
    /// Radius covered by the profile table.
    pub r_max: f64,
    pub tol: f64,
    /// Second, tighter tolerance for the slope stability check.
    pub tight_tol: f64,
    /// Radius of the far-field check `1 − f(r) ≈ 1/(2r²)`.
    pub check_radius: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            radii: vec![25.0, 50.0, 100.0, 200.0],
            r_max: 40.0,
            tol: 1e-9,
            tight_tol: 1e-11,
            check_radius: 20.0,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.radii.len() < 2 || !increasing(&self.radii) || self.radii[0] <= 1.0 {
            e.push("radii: need at least two strictly increasing radii above 1".into());
        }
        if !(self.r_max >= 20.0) {
            e.push(format!("r_max = {} must be at least 20", self.r_max));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-8 && self.tight_tol > 0.0 && self.tight_tol < self.tol) {
            e.push("need 0 < tight_tol < tol ≤ 1e-8".into());
        }
        if !(self.check_radius > 0.0 && self.check_radius <= self.r_max) {
            e.push("check_radius must lie in (0, r_max]".into());
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub slope: f64,
    pub slope_tight: f64,
    /// `|slope − slope_tight|`.
    pub slope_shift: f64,
    pub f0: f64,
    pub strictly_increasing: bool,
    pub check_radius: f64,
    pub f_check: f64,
    /// `|1 − f(r) − 1/(2r²)|` at the check radius.
    pub tail_defect: f64,
    /// `lim E(f; D_R) − π ln R`.
    pub core_constant: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub profile: ProfileSummary,
    pub fit: GrowthFit,
    /// `a / 2π`.
    pub a_ratio: f64,
    #[serde(skip)]
    pub table: Profile,
}

pub fn run(p: &Params, ctx: &mut Context) -> Result<Outcome, StageError> {
    let profile = ctx
        .timed("profile", |_| solve_profile(p.r_max, p.tol))
        .stage("profile")?;
    let tight = ctx
        .timed("profile (tight)", |_| solve_profile(p.r_max, p.tight_tol))
        .stage("profile (tight)")?;
    let values: Vec<f64> = profile.samples().map(|(_, f)| f).collect();
    let f_check = profile.eval(p.check_radius);
    let summary = ProfileSummary {
        slope: profile.slope,
        slope_tight: tight.slope,
        slope_shift: (profile.slope - tight.slope).abs(),
        f0: profile.eval(0.0),
        strictly_increasing: increasing(&values),
        check_radius: p.check_radius,
        f_check,
        tail_defect: (1.0 - f_check - 0.5 / (p.check_radius * p.check_radius)).abs(),
        core_constant: profile.core_constant(),
        residual: profile.residual,
    };
    let fit = ctx
        .timed("growth fit", |_| growth_rate(&profile, &p.radii))
        .stage("growth fit")?;
    log::info!("slope {:.11}, a/2π = {:.5}", summary.slope, fit.a / TAU);
    Ok(Outcome {
        profile: summary,
        a_ratio: fit.a / TAU,
        fit,
        table: profile,
    })
}

pub fn write(o: &Outcome, out: &mut OutDir) -> io::Result<()> {
    out.write_text("profile.csv", &o.table.to_csv())?;
    let rows = o.fit.rows.iter().zip(&o.fit.residuals).map(|(r, res)| {
        vec![
            r.radius.to_string(),
            r.energy.to_string(),
            r.ratio.to_string(),
            res.to_string(),
        ]
    });
    out.write_text("growth.csv", &csv(&["R", "E", "E_over_RlnR", "fit_residual"], rows))?;
    out.write_json("growth.json", o)
}
