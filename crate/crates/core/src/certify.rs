//! Constants of the η-ellipticity argument evaluated as arithmetic, and
//! checks of the differential inequalities on measured energy traces.
//!
//! The measured inputs (`C(α,σ)`, `C̃`, `r₀`, `M`) come from solver and
//! construction runs; nothing here proves anything about them.

use crate::energy::ShellEnergyTrace;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CertifyError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no sampled radius in [{lo:.3}, {hi:.3}] satisfies the derivative bound (premise E(R) ≤ γR ln R {premise})", premise = if *.premise_holds { "holds; sampling too coarse" } else { "violated" })]
    NoRadius { lo: f64, hi: f64, premise_holds: bool },
    #[error("target {target:.6e} lies below the branch minimum {minimum:.6e}")]
    BelowBranch { target: f64, minimum: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateParams {
    pub gamma: f64,
    /// Margin `ε` with `γ + 3ε < 2π`.
    pub eps_margin: f64,
    pub beta: f64,
    pub delta: f64,
    pub sigma: f64,
    pub alpha: f64,
    /// Measured `C(α, σ)`.
    pub c_alpha_sigma: f64,
    pub lambda: f64,
    /// Bound `K` on `|u|`.
    pub k_bound: f64,
}

impl CertificateParams {
    /// `ε = (2π − γ)/6`, `β = 1/2`, `δ` halfway between `(γ + 3ε)/(2π)` and
    /// `1`, `α = 1 − (2π − γ)/(8π)`.
    pub fn with_defaults(gamma: f64, sigma: f64, c_alpha_sigma: f64, lambda: f64, k_bound: f64) -> Self {
        let eps_margin = (TAU - gamma) / 6.0;
        let floor = (gamma + 3.0 * eps_margin) / TAU;
        CertificateParams {
            gamma,
            eps_margin,
            beta: 0.5,
            delta: 0.5 * (floor + 1.0),
            sigma,
            alpha: 1.0 - (TAU - gamma) / (8.0 * PI),
            c_alpha_sigma,
            lambda,
            k_bound,
        }
    }

    /// `γ₀ = (γ + 3ε)/δ`.
    pub fn gamma0(&self) -> f64 {
        (self.gamma + 3.0 * self.eps_margin) / self.delta
    }

    pub fn validate(&self) -> Result<(), CertifyError> {
        let bad = |m: String| Err(CertifyError::InvalidParams(m));
        if !(self.gamma > 0.0 && self.eps_margin > 0.0) {
            return bad(format!(
                "γ = {} and ε = {} must be positive",
                self.gamma, self.eps_margin
            ));
        }
        if !(self.gamma + 3.0 * self.eps_margin < TAU) {
            return bad(format!(
                "γ + 3ε = {:.6} must be below 2π",
                self.gamma + 3.0 * self.eps_margin
            ));
        }
        for (name, v) in [
            ("β", self.beta),
            ("δ", self.delta),
            ("σ", self.sigma),
            ("α", self.alpha),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1)"));
            }
        }
        if !(self.gamma0() < TAU) {
            return bad(format!("γ₀ = (γ + 3ε)/δ = {:.6} must be below 2π", self.gamma0()));
        }
        if !(self.c_alpha_sigma > 0.0 && self.k_bound > 0.0) {
            return bad("C(α, σ) and K must be positive".into());
        }
        if !(self.lambda > 0.0 && self.lambda <= 2.0 * self.k_bound) {
            return bad(format!("λ = {} must lie in (0, 2K]", self.lambda));
        }
        Ok(())
    }
}

/// First sampled `ρ₁ ∈ [R^β, R]` with `E′(ρ₁) ≤ (γ + ε) ln ρ₁`.
pub fn pick_rho1(trace: &ShellEnergyTrace, params: &CertificateParams) -> Result<f64, CertifyError> {
    let last = trace
        .samples
        .last()
        .ok_or_else(|| CertifyError::InvalidParams("empty trace".into()))?;
    let r = last.r;
    let lo = r.powf(params.beta);
    let slope = params.gamma + params.eps_margin;
    trace
        .samples
        .iter()
        .find(|s| s.r >= lo && s.de <= slope * s.r.ln())
        .map(|s| s.r)
        .ok_or(CertifyError::NoRadius {
            lo,
            hi: r,
            premise_holds: last.e <= params.gamma * r * r.ln(),
        })
}

/// Smallest sampled `ρ₂ ∈ [lo, ρ₁]` such that `E(s) < σγ₀ s ln s` at every
/// sample in `[ρ₂, ρ₁]`. `None` when the sample at `ρ₁` itself fails.
pub fn pick_rho2(trace: &ShellEnergyTrace, rho1: f64, lo: f64, params: &CertificateParams) -> Option<f64> {
    let k = params.sigma * params.gamma0();
    let mut rho2 = None;
    for s in trace.samples.iter().rev().filter(|s| s.r <= rho1 && s.r >= lo) {
        if s.e < k * s.r * s.r.ln() {
            rho2 = Some(s.r);
        } else {
            break;
        }
    }
    rho2
}

/// `r₁ = (C/(σγ₀(1 − δ^{1/σ})))^{1/(1−α)}`.
pub fn r1_constant(params: &CertificateParams) -> f64 {
    let sg = params.sigma * params.gamma0();
    let q = 1.0 - params.delta.powf(1.0 / params.sigma);
    (params.c_alpha_sigma / (sg * q)).powf(1.0 / (1.0 - params.alpha))
}

/// Relative defect of `σγ₀ r₁ = σγ₀ δ^{1/σ} r₁ + C r₁^α`.
pub fn r1_defect(params: &CertificateParams, r1: f64) -> f64 {
    let sg = params.sigma * params.gamma0();
    let lhs = sg * r1;
    let rhs = sg * params.delta.powf(1.0 / params.sigma) * r1 + params.c_alpha_sigma * r1.powf(params.alpha);
    (lhs - rhs).abs() / lhs.abs()
}

fn r1_exponents(params: &CertificateParams) -> (f64, f64) {
    (
        params.beta * (1.0 / params.sigma - 1.0),
        1.0 / params.sigma - params.alpha,
    )
}

/// `t^{β(1/σ−1)} / ln(t^β)` as a function of `s = ln t`.
fn r1_branch(params: &CertificateParams, s: f64) -> f64 {
    let (k, _) = r1_exponents(params);
    (k * s).exp() / (params.beta * s)
}

/// Solve `R̃₀^{1/σ−α} = R̃₁^{β(1/σ−1)} / ln(R̃₁^β)` for `R̃₁` on the branch
/// where the right side increases (`R̃₁ > e^{1/(β(1/σ−1))}`).
pub fn r1_threshold(r0: f64, params: &CertificateParams) -> Result<f64, CertifyError> {
    if !(r0 > E) {
        return Err(CertifyError::InvalidParams(format!("R̃₀ = {r0} must exceed e")));
    }
    if !(params.sigma < 1.0 && params.alpha < 1.0) {
        return Err(CertifyError::InvalidParams("need 1/σ > 1 > α".into()));
    }
    let (k, m) = r1_exponents(params);
    let target = (m * r0.ln()).exp();
    let mut lo = 1.0 / k;
    let minimum = r1_branch(params, lo);
    if target < minimum {
        return Err(CertifyError::BelowBranch { target, minimum });
    }
    let mut hi = 2.0 * lo;
    while r1_branch(params, hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if r1_branch(params, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

/// Relative defect of the defining equation of `R̃₁`.
pub fn r1_threshold_defect(r0: f64, r1: f64, params: &CertificateParams) -> f64 {
    let (_, m) = r1_exponents(params);
    let target = (m * r0.ln()).exp();
    (r1_branch(params, r1.ln()) - target).abs() / target
}

/// `λ⁵ |B₁| / (128 K³)` with `|B₁| = 4π/3`.
pub fn t_lhs(lambda: f64, k: f64) -> f64 {
    lambda.powi(5) * (4.0 * PI / 3.0) / (128.0 * k.powi(3))
}

fn t_rhs(alpha: f64, c: f64, s: f64) -> f64 {
    c * ((alpha - 1.0) * s).exp() * s
}

/// Smallest `T ≥ e^{1/(1−α)}` with `λ⁵|B₁|/(128K³) > C̃ T^{α−1} ln T`:
/// doubling on `ln T`, then bisection to the crossing.
pub fn t_threshold(lambda: f64, alpha: f64, k: f64, c_tilde: f64) -> Result<f64, CertifyError> {
    if !(lambda > 0.0 && lambda <= 2.0 * k) {
        return Err(CertifyError::InvalidParams(format!("λ = {lambda} must lie in (0, 2K]")));
    }
    if !(alpha < 1.0 && c_tilde > 0.0) {
        return Err(CertifyError::InvalidParams("need α < 1 and C̃ > 0".into()));
    }
    let lhs = t_lhs(lambda, k);
    let s0 = 1.0 / (1.0 - alpha);
    if lhs > t_rhs(alpha, c_tilde, s0) {
        return Ok(s0.exp());
    }
    let (mut lo, mut hi) = (s0, 2.0 * s0);
    while !(lhs > t_rhs(alpha, c_tilde, hi)) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lhs > t_rhs(alpha, c_tilde, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// `(lhs − rhs)/lhs` of the defining inequality of `T` at `t`: positive
/// when it holds, close to zero at the threshold.
pub fn t_margin(t: f64, lambda: f64, alpha: f64, k: f64, c_tilde: f64) -> f64 {
    let lhs = t_lhs(lambda, k);
    (lhs - t_rhs(alpha, c_tilde, t.ln())) / lhs
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityKind {
    /// `r^{−1/σ}E` increments against `−(C/σ)∫ s^{α−1−1/σ} ln s`.
    Integrated,
    /// `E′(r) ≥ (E(r) − C r^α ln r)/(σ r)` at a sample.
    Pointwise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: InequalityKind,
    pub r_lo: f64,
    pub r_hi: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// `∫_a^b s^p ln s ds`.
fn power_log_integral(p: f64, a: f64, b: f64) -> f64 {
    let q = p + 1.0;
    let anti = |s: f64| s.powf(q) * (s.ln() / q - 1.0 / (q * q));
    anti(b) - anti(a)
}

/// Samples of `trace` in `[ρ₂, ρ₁]` where the monotonicity-type
/// inequalities fail, in both integrated and pointwise form.
pub fn diff_ineq_check(
    trace: &ShellEnergyTrace,
    rho2: f64,
    rho1: f64,
    sigma: f64,
    alpha: f64,
    c: f64,
) -> Vec<Violation> {
    let s: Vec<_> = trace.samples.iter().filter(|x| x.r >= rho2 && x.r <= rho1).collect();
    let p = alpha - 1.0 - 1.0 / sigma;
    let mut out = Vec::new();
    for w in s.windows(2) {
        let (a, b) = (w[0], w[1]);
        let lhs = b.r.powf(-1.0 / sigma) * b.e - a.r.powf(-1.0 / sigma) * a.e;
        let rhs = -(c / sigma) * power_log_integral(p, a.r, b.r);
        if lhs < rhs {
            out.push(Violation {
                kind: InequalityKind::Integrated,
                r_lo: a.r,
                r_hi: b.r,
                lhs,
                rhs,
            });
        }
    }
    for x in &s {
        let rhs = (x.e - c * x.r.powf(alpha) * x.r.ln()) / (sigma * x.r);
        if x.de < rhs {
            out.push(Violation {
                kind: InequalityKind::Pointwise,
                r_lo: x.r,
                r_hi: x.r,
                lhs: x.de,
                rhs,
            });
        }
    }
    out
}

/// Measured inputs of the constants chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainInputs {
    pub params: CertificateParams,
    /// Measured `r₀(γ₀)`.
    pub r0: f64,
    /// Measured `M`.
    pub m: f64,
    /// Measured `C̃`.
    pub c_tilde: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub inputs: ChainInputs,
    pub gamma0: f64,
    pub r1: f64,
    pub r1_defect: f64,
    /// `max(r₀, r₁, M)`.
    pub rtilde0: f64,
    pub rtilde1: f64,
    pub rtilde1_defect: f64,
    pub t: f64,
    /// Relative margin of the `T` inequality (nonnegative, near zero).
    pub t_margin: f64,
}

pub fn constants_chain(inputs: &ChainInputs) -> Result<ChainReport, CertifyError> {
    let p = &inputs.params;
    p.validate()?;
    let r1 = r1_constant(p);
    let rtilde0 = inputs.r0.max(r1).max(inputs.m);
    let rtilde1 = r1_threshold(rtilde0, p)?;
    let t = t_threshold(p.lambda, p.alpha, p.k_bound, inputs.c_tilde)?;
    Ok(ChainReport {
        inputs: inputs.clone(),
        gamma0: p.gamma0(),
        r1,
        r1_defect: r1_defect(p, r1),
        rtilde0,
        rtilde1,
        rtilde1_defect: r1_threshold_defect(rtilde0, rtilde1, p),
        t,
        t_margin: t_margin(t, p.lambda, p.alpha, p.k_bound, inputs.c_tilde),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CertificateParams {
        CertificateParams {
            gamma: 5.0,
            eps_margin: 0.05,
            beta: 0.5,
            delta: 0.9,
            sigma: 0.66,
            alpha: 0.85,
            c_alpha_sigma: 10.0,
            lambda: 0.5,
            k_bound: 1.0,
        }
    }

    #[test]
    fn r1_balances() {
        let p = sample();
        p.validate().unwrap();
        assert!(r1_defect(&p, r1_constant(&p)) < 1e-12);
    }

    #[test]
    fn r1_is_one_at_unit_balance() {
        let mut p = sample();
        p.c_alpha_sigma = p.sigma * p.gamma0() * (1.0 - p.delta.powf(1.0 / p.sigma));
        assert!((r1_constant(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_round_trip() {
        let p = sample();
        let r = r1_threshold(100.0, &p).unwrap();
        assert!(r1_threshold_defect(100.0, r, &p) < 1e-10);
        assert!(r1_threshold(200.0, &p).unwrap() > r);
    }

    #[test]
    fn t_is_tight() {
        let t = t_threshold(0.5, 0.85, 1.0, 10.0).unwrap();
        let m = t_margin(t, 0.5, 0.85, 1.0, 10.0);
        assert!(m > 0.0 && m < 1e-10);
        assert!(t_margin(0.5 * t, 0.5, 0.85, 1.0, 10.0) <= 0.0);
    }

    #[test]
    fn rho2_stops_at_first_failure_below_rho1() {
        let p = sample();
        let k = p.sigma * p.gamma0();
        let r: Vec<f64> = (2..=20).map(f64::from).collect();
        let e: Vec<f64> = r
            .iter()
            .map(|&x| {
                if x < 8.0 {
                    2.0 * k * x * x.ln()
                } else {
                    0.5 * k * x * x.ln()
                }
            })
            .collect();
        let t = ShellEnergyTrace::from_values(&r, &e, &vec![0.0; r.len()]);
        assert_eq!(pick_rho2(&t, 15.0, 1.5, &p), Some(8.0));
        let bad = ShellEnergyTrace::from_values(&r, &vec![1e9; r.len()], &vec![0.0; r.len()]);
        assert_eq!(pick_rho2(&bad, 15.0, 1.5, &p), None);
    }

    #[test]
    fn defaults_are_valid() {
        CertificateParams::with_defaults(5.0, 0.66, 10.0, 0.5, 1.0)
            .validate()
            .unwrap();
    }
}
