//! Threshold constants `r₁`, `R̃₁`, `T` from configured measured inputs,
//! and the differential-inequality check on a minimizer trace.

use super::{BallTrace, BoundaryData, TraceRun};
use crate::context::{Context, StageError, Staged};
use crate::output::OutDir;
use serde::{Deserialize, Serialize};
use std::io;
use vortexlab_core::certify::{
    constants_chain, diff_ineq_check, pick_rho1, pick_rho2, CertificateParams, ChainInputs, ChainReport, Violation,
};
use vortexlab_core::data::CoreShape;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceParams {
    pub ball: BallTrace,
    pub data: BoundaryData,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams {
            ball: BallTrace::default(),
            data: BoundaryData::Dipole {
                separation: 8.0,
                core: CoreShape::Linear { size: 1.0 },
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub gamma: f64,
    pub sigma: f64,
    /// Measured `C(α, σ)`.
    pub c_alpha_sigma: f64,
    pub lambda: f64,
    /// Bound `K` on `|u|`.
    pub k_bound: f64,
    /// Defaults to `(2π − γ)/6`.
    pub eps_margin: Option<f64>,
    /// Defaults to `1/2`.
    pub beta: Option<f64>,
    /// Defaults to the midpoint of `((γ + 3ε)/2π, 1)`.
    pub delta: Option<f64>,
    /// Defaults to `1 − (2π − γ)/(8π)`.
    pub alpha: Option<f64>,
    /// Measured `r₀(γ₀)`.
    pub r0: f64,
    /// Measured `M`.
    pub m: f64,
    /// Measured `C̃`.
    pub c_tilde: f64,
    pub trace: Option<TraceParams>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            gamma: 5.0,
            sigma: 0.66,
            c_alpha_sigma: 10.0,
            lambda: 0.5,
            k_bound: 1.0,
            eps_margin: None,
            beta: None,
            delta: None,
            alpha: None,
            r0: 100.0,
            m: 1.0,
            c_tilde: 10.0,
            trace: Some(TraceParams::default()),
        }
    }
}

impl Params {
    pub fn certificate_params(&self) -> CertificateParams {
        let mut c =
            CertificateParams::with_defaults(self.gamma, self.sigma, self.c_alpha_sigma, self.lambda, self.k_bound);
        if let Some(e) = self.eps_margin {
            c.eps_margin = e;
            if self.delta.is_none() {
                c.delta = 0.5 * ((self.gamma + 3.0 * e) / std::f64::consts::TAU + 1.0);
            }
        }
        if let Some(b) = self.beta {
            c.beta = b;
        }
        if let Some(d) = self.delta {
            c.delta = d;
        }
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        c
    }

    pub fn chain_inputs(&self) -> ChainInputs {
        ChainInputs {
            params: self.certificate_params(),
            r0: self.r0,
            m: self.m,
            c_tilde: self.c_tilde,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if let Err(err) = self.certificate_params().validate() {
            e.push(err.to_string());
        }
        if !(self.r0 > std::f64::consts::E && self.m > 0.0 && self.c_tilde > 0.0) {
            e.push("need r0 > e, m > 0 and c_tilde > 0".into());
        }
        if let Some(t) = &self.trace {
            e.extend(t.ball.validate("trace.ball"));
            e.extend(t.data.validate("trace.data"));
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceCheck {
    pub run: TraceRun,
    pub rho1: Option<f64>,
    pub rho1_error: Option<String>,
    pub rho2: Option<f64>,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub chain: ChainReport,
    pub trace: Option<TraceCheck>,
}

pub fn run(p: &Params, ctx: &mut Context) -> Result<Outcome, StageError> {
    let inputs = p.chain_inputs();
    let chain = ctx
        .timed("constants chain", |_| constants_chain(&inputs))
        .stage("constants chain")?;
    log::info!(
        "r1 = {:.6e}, R~1 = {:.6e}, T = {:.6e} (defects {:.1e}, {:.1e}, margin {:.1e})",
        chain.r1,
        chain.rtilde1,
        chain.t,
        chain.r1_defect,
        chain.rtilde1_defect,
        chain.t_margin
    );
    let trace = match &p.trace {
        None => None,
        Some(tp) => {
            let run = tp.ball.run(&tp.data, ctx)?;
            let cp = &inputs.params;
            let (rho1, rho1_error) = match pick_rho1(&run.trace, cp) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let lo = run.trace.samples.first().map_or(0.0, |s| s.r);
            let rho2 = rho1.and_then(|r1| pick_rho2(&run.trace, r1, lo, cp));
            let violations = match (rho1, rho2) {
                (Some(r1), Some(r2)) => diff_ineq_check(&run.trace, r2, r1, cp.sigma, cp.alpha, cp.c_alpha_sigma),
                _ => Vec::new(),
            };
            log::info!("rho1 = {rho1:?}, rho2 = {rho2:?}, {} violation(s)", violations.len());
            Some(TraceCheck {
                run,
                rho1,
                rho1_error,
                rho2,
                violations,
            })
        }
    };
    Ok(Outcome { chain, trace })
}

pub fn write(o: &Outcome, out: &mut OutDir) -> io::Result<()> {
    out.write_json("chain.json", &o.chain)?;
    if let Some(t) = &o.trace {
        out.write_text("trace.csv", &t.run.trace.to_csv())?;
    }
    out.write_json("certify.json", o)
}
