//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. `ACCEPTANCE_ONLY=1,3,6` restricts the run to some criteria.

use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;
use vortexlab::experiments::{ballgrowth, eta_sweep, growth_rate, identities, prop13};
use vortexlab::{run, Context, Experiment, ExperimentConfig, Overrides, Params, RawConfig};
use vortexlab_core::certify::constants_chain;
use vortexlab_core::construct::cone_extension;
use vortexlab_core::geometry::{Lattice, Stencil, Vec3};
use vortexlab_core::C64;

type Verdict = Result<(bool, String), String>;

fn defaults(e: Experiment) -> Params {
    e.default_params()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let x = f();
    (x, t.elapsed().as_secs_f64())
}

fn growth_rate_defaults() -> Result<(growth_rate::Outcome, Context, f64), String> {
    let Params::GrowthRate(p) = defaults(Experiment::GrowthRate) else {
        unreachable!()
    };
    let mut ctx = Context::new(0);
    let (o, secs) = timed(|| growth_rate::run(&p, &mut ctx));
    Ok((o.map_err(|e| e.to_string())?, ctx, secs))
}

fn c1_growth_rate() -> Verdict {
    let (o, _, secs) = growth_rate_defaults()?;
    let ok = (o.a_ratio - 1.0).abs() <= 0.05 && secs < 60.0;
    Ok((
        ok,
        format!(
            "a = {:.5} = 2π·{:.5} (need 2π·(1 ± 0.05)), b = {:.4}, runtime {secs:.2} s (< 60 s)",
            o.fit.a, o.a_ratio, o.fit.b
        ),
    ))
}

fn c2_profile() -> Verdict {
    let (o, ctx, _) = growth_rate_defaults()?;
    let p = &o.profile;
    let secs = ctx.seconds("profile");
    let ok = p.f0 == 0.0 && p.strictly_increasing && p.tail_defect <= 5e-4 && p.slope_shift <= 1e-6 && secs < 10.0;
    Ok((
        ok,
        format!(
            "f(0) = {}, strictly increasing {}, |1 − f(20) − 1/800| = {:.2e} (≤ 5e-4), slope {:.11} shift {:.1e} (≤ 1e-6), profile solves {secs:.2} s (< 10 s)",
            p.f0, p.strictly_increasing, p.tail_defect, p.slope, p.slope_shift
        ),
    ))
}

fn identities_defaults() -> Result<identities::Outcome, String> {
    let Params::Identities(p) = defaults(Experiment::Identities) else {
        unreachable!()
    };
    identities::run(&p, &mut Context::new(0)).map_err(|e| e.to_string())
}

fn c3_harmonic(o: &identities::Outcome) -> Verdict {
    let eq = &o.equality;
    let eq_ok = (eq.ratio - 1.0).abs() <= 0.01 && (eq.spacing - 1.0 / 64.0).abs() < 1e-15;
    let worst = o.random.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let max_degree = o.random.iter().map(|r| r.degree).max().unwrap_or(0);
    let ineq_ok = o.random.len() == 10 && max_degree <= 4 && o.random.iter().all(|r| r.record.lhs <= r.record.rhs);
    let halvings_ok = o.pohozaev.len() >= 3
        && o.pohozaev
            .windows(2)
            .all(|w| (w[0].spacing / w[1].spacing - 2.0).abs() < 1e-12)
        && o.pohozaev_ratios.len() >= 2
        && o.pohozaev_ratios.iter().all(|&r| r >= 1.7);
    Ok((
        eq_ok && ineq_ok && halvings_ok,
        format!(
            "w = x₁ ratio {:.6} at h = {} (within 1%); {} random polynomials of degree ≤ {max_degree}, max lhs/rhs {worst:.6} (≤ 1); Pohozaev defect ratios {:?} at h = {:?} (≥ 1.7)",
            eq.ratio,
            eq.spacing,
            o.random.len(),
            o.pohozaev_ratios,
            o.pohozaev.iter().map(|r| r.spacing).collect::<Vec<_>>()
        ),
    ))
}

fn c4_monotonicity(o: &identities::Outcome) -> Verdict {
    let Params::Identities(p) = defaults(Experiment::Identities) else {
        unreachable!()
    };
    let m = p.monotonicity.ok_or("monotonicity disabled in the defaults")?;
    let setup_ok =
        m.ball.radius == 20.0 && m.ball.eps == 1.0 && m.ball.r_min == 2.0 && m.ball.r_max == 18.0 && m.slack == 1e-3;
    let labels: Vec<&str> = o.monotonicity.iter().map(|r| r.run.data.label()).collect();
    let data_ok = labels.contains(&"constant") && labels.contains(&"dipole");
    let runs_ok = o
        .monotonicity
        .iter()
        .all(|r| r.run.solve.converged && r.violations.is_empty());
    let detail: Vec<String> = o
        .monotonicity
        .iter()
        .map(|r| {
            format!(
                "{}: converged {} residual {:.1e}, {} violation(s)",
                r.run.data.label(),
                r.run.solve.converged,
                r.run.solve.residual,
                r.violations.len()
            )
        })
        .collect();
    Ok((
        setup_ok && data_ok && runs_ok,
        format!("B_20, ε = 1, r ∈ [2, 18], slack 1e-3; {}", detail.join("; ")),
    ))
}

fn c5_ball_growth() -> Verdict {
    let Params::BallGrowth(p) = defaults(Experiment::BallGrowth) else {
        unreachable!()
    };
    let o = ballgrowth::run(&p, &mut Context::new(0)).map_err(|e| e.to_string())?;
    let c = &o.cascade;
    let cert = &o.pipeline.certificate;
    let degrees: Vec<i32> = o.pipeline.family.degrees.clone().unwrap_or_default();
    let cascade_ok = c.merges.len() >= 3 && c.conservation_defect <= 1e-12 && c.max_containment_excess <= 1e-12;
    let cert_ok = p.gamma == 5.0 && cert.all_pass() && degrees.iter().all(|&d| d == 0) && cert.degree_sq_sum < 2;
    Ok((
        cascade_ok && cert_ok,
        format!(
            "{} merges, conservation defect {:.1e} (≤ 1e-12), containment excess {:.2e} (≤ 1e-12); γ = {}: {} disc(s) with degrees {degrees:?}, certificate {}, Σ deg² = {} (margin {} below 2)",
            c.merges.len(),
            c.conservation_defect,
            c.max_containment_excess,
            p.gamma,
            o.pipeline.family.discs.len(),
            if cert.all_pass() { "passes" } else { "fails" },
            cert.degree_sq_sum,
            o.degree_sq_margin
        ),
    ))
}

fn c6_cone() -> Verdict {
    let radius = 2.0;
    let disc = Lattice::disc(radius, 0.05).map_err(|e| e.to_string())?;
    let s = move |x: Vec3| 1.0 - (x[0] * x[0] + x[1] * x[1]) / (radius * radius);
    // u = v: the extension is constant in z.
    let v = disc.field_from_fn(|x| C64::from_polar(1.0 + 0.2 * x[0] * x[0] / (radius * radius), 0.7 * x[1]));
    let height = 1.5;
    let (_, _, same) = cone_extension(&disc, &v.0, &v.0, height).map_err(|e| e.to_string())?;
    let equal_rel = (same.energy - height * same.energy_v).abs() / (height * same.energy_v);
    let mut ok = equal_rel <= 0.01 && same.trace_defect == 0.0;
    let mut parts = vec![format!(
        "u = v: E(U) = {:.6}, H·E(v) = {:.6} (rel {:.1e} ≤ 1%)",
        same.energy,
        height * same.energy_v,
        equal_rel
    )];
    // u = v·w with w = 1 on the lattice boundary.
    type F = Box<dyn Fn(Vec3) -> C64 + Send + Sync>;
    let pairs: Vec<(&str, F, F)> = vec![
        (
            "phase bump",
            Box::new(move |x| C64::from_polar(1.0, 3.0 * s(x))),
            Box::new(|_| C64::new(1.0, 0.0)),
        ),
        (
            "modulus dip",
            Box::new(move |x| C64::new(1.0 - 0.5 * s(x) * s(x), 0.0)),
            Box::new(|x| C64::from_polar(1.0, 0.5 * x[0])),
        ),
        (
            "phase wave",
            Box::new(move |x| C64::from_polar(1.0, 2.0 * (2.0 * x[0]).sin() * s(x))),
            Box::new(|x| C64::from_polar(1.0, 0.3 * x[1])),
        ),
    ];
    for (name, w, vf) in &pairs {
        let v = disc.field_from_fn(vf);
        let mut u = disc.field_from_fn(|x| w(x) * vf(x));
        for i in (0..disc.len()).filter(|&i| disc.is_boundary(i)) {
            u.0[i] = v.0[i];
        }
        for h in [0.5, 2.0, 4.0] {
            let (_, _, r) = cone_extension(&disc, &u.0, &v.0, h).map_err(|e| e.to_string())?;
            ok &= r.constant <= 10.0 && r.trace_defect == 0.0;
            parts.push(format!(
                "{name} H = {h}: C = {:.4}, trace defect {}",
                r.constant, r.trace_defect
            ));
        }
    }
    Ok((
        ok,
        format!("D_2, h = 0.05; {} (C ≤ 10, trace defect 0)", parts.join("; ")),
    ))
}

fn c7_competitor() -> Verdict {
    let Params::Prop13(p) = defaults(Experiment::Prop13) else {
        unreachable!()
    };
    let o = prop13::run(&p, &mut Context::new(0)).map_err(|e| e.to_string())?;
    let last = o.rows.last().ok_or("no rows")?;
    let fit = o.outer_fit.as_ref().ok_or("no outer fit")?;
    let m = o.minimizer.as_ref().ok_or("no minimizer comparison")?;
    let ok = last.premise
        && last.core_prefactor <= 0.66 + 0.10
        && (fit.exponent - p.alpha).abs() <= 0.1
        && m.result.minimizer_energy <= m.result.competitor_energy + p.minimizer.as_ref().map_or(0.0, |s| s.solver.tol);
    Ok((
        ok,
        format!(
            "ln R = {}: E^T = {:.4} ≤ 5 ln R = {:.4} ({}), core prefactor {:.4} (≤ 0.76); shell+annulus exponent {:.4} vs α = {} (±0.1); minimizer {:.4} vs competitor {:.4} at ln R = {}",
            last.log_radius,
            last.tangential_energy,
            5.0 * last.log_radius,
            last.premise,
            last.core_prefactor,
            fit.exponent,
            p.alpha,
            m.result.minimizer_energy,
            m.result.competitor_energy,
            m.log_radius
        ),
    ))
}

fn c8_eta_sweep() -> Verdict {
    let Params::EtaSweep(p) = defaults(Experiment::EtaSweep) else {
        unreachable!()
    };
    let (o, secs) = timed(|| eta_sweep::run(&p, &mut Context::new(0)));
    let o = o.map_err(|e| e.to_string())?;
    let mut ok = p.resolution == 96 && p.eps == [0.2, 0.1, 0.05] && secs < 600.0;
    let mut parts = Vec::new();
    for set in &o.sets {
        let ratios: Vec<f64> = set.rows.iter().map(|r| r.ratio).collect();
        let last = set.rows.last().ok_or("empty sweep")?;
        let label = set.data.label();
        match label {
            "plane-wave" => ok &= set.ratio_decreasing && last.center_modulus >= 0.95,
            "vortex-line" => ok &= ratios.iter().all(|&r| (r / TAU - 1.0).abs() <= 0.25) && last.center_modulus <= 0.2,
            _ => {}
        }
        ok &= set.rows.iter().all(|r| r.converged);
        parts.push(format!(
            "{label}: ratios {:?}, |u(0)| = {:.4} at ε = {}",
            ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>(),
            last.center_modulus,
            last.eps
        ));
    }
    Ok((
        ok,
        format!(
            "96³, {}; plane-wave decreasing with |u(0)| ≥ 0.95, vortex-line in 2π(1 ± 0.25) with |u(0)| ≤ 0.2; runtime {secs:.0} s (< 600 s)",
            parts.join("; ")
        ),
    ))
}

fn c9_chain() -> Verdict {
    let Params::Certify(p) = defaults(Experiment::Certify) else {
        unreachable!()
    };
    let inputs = p.chain_inputs();
    let a = constants_chain(&inputs).map_err(|e| e.to_string())?;
    let b = constants_chain(&inputs).map_err(|e| e.to_string())?;
    let bits = |c: &vortexlab_core::certify::ChainReport| [c.r1, c.rtilde1, c.t].map(f64::to_bits);
    let identical = bits(&a) == bits(&b)
        && serde_json::to_string(&a).map_err(|e| e.to_string())?
            == serde_json::to_string(&b).map_err(|e| e.to_string())?;
    let ok = a.r1_defect <= 1e-10 && a.rtilde1_defect <= 1e-10 && (0.0..=1e-10).contains(&a.t_margin) && identical;
    Ok((
        ok,
        format!(
            "r₁ = {:.6e} (defect {:.1e}), R̃₁ = {:.6e} (defect {:.1e}), T = {:.6e} (margin {:.1e}); all ≤ 1e-10; bit-identical rerun {identical}",
            a.r1, a.r1_defect, a.rtilde1, a.rtilde1_defect, a.t, a.t_margin
        ),
    ))
}

fn reduced(e: Experiment) -> Value {
    match e {
        Experiment::GrowthRate => json!({}),
        Experiment::EtaSweep => json!({ "resolution": 24, "solver": { "random_inits": 1 } }),
        Experiment::Prop13 => json!({
            "log_radii": [3.5],
            "minimizer": { "log_radius": 3.5, "solver": { "max_iters": 50 } }
        }),
        Experiment::BallGrowth => json!({ "log_radius": 4.0 }),
        Experiment::Certify => json!({ "trace": { "ball": { "radius": 10.0, "r_max": 8.0, "samples": 13 } } }),
        Experiment::Identities => json!({
            "equality_spacing": 0.0625,
            "random_count": 2,
            "random_spacing": 0.0625,
            "pohozaev_spacings": [0.0625, 0.03125],
            "monotonicity": { "ball": { "radius": 10.0, "r_max": 8.0, "samples": 13 } }
        }),
    }
}

fn artifacts(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name != "manifest.json" {
            files.insert(name, std::fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

fn c10_determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for e in Experiment::ALL {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let raw = RawConfig {
                experiment: e.name().into(),
                seed: Some(7),
                params: Some(reduced(e)),
                ..Default::default()
            };
            let overrides = Overrides {
                out: Some(tmp.path().join(format!("{}-{k}", e.name()))),
                ..Default::default()
            };
            let config = ExperimentConfig::resolve(raw, &overrides)
                .map_err(|err| format!("{}: {}", e.name(), err.messages().join("; ")))?;
            let summary = run(&config).map_err(|e| e.to_string())?;
            outputs.push(artifacts(&summary.out)?);
        }
        let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
        ok &= same;
        parts.push(format!(
            "{} {} file(s) {}",
            e.name(),
            outputs[0].len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    Ok((ok, format!("two runs per experiment, seed 7: {}", parts.join(", "))))
}

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |k: usize| only.as_ref().map_or(true, |o| o.contains(&k));
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |k: usize, name: &'static str, v: Verdict| {
        let (pass, detail) = match &v {
            Ok((p, d)) => (*p, d.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "criterion {k:>2} [{}] {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        results.push((k, name, v));
    };
    if wanted(1) {
        report(1, "sharp growth rate", c1_growth_rate());
    }
    if wanted(2) {
        report(2, "radial profile", c2_profile());
    }
    if wanted(3) || wanted(4) {
        match identities_defaults() {
            Ok(o) => {
                if wanted(3) {
                    report(3, "harmonic identities", c3_harmonic(&o));
                }
                if wanted(4) {
                    report(4, "monotonicity", c4_monotonicity(&o));
                }
            }
            Err(e) => {
                for (k, n) in [(3, "harmonic identities"), (4, "monotonicity")] {
                    if wanted(k) {
                        report(k, n, Err(e.clone()));
                    }
                }
            }
        }
    }
    if wanted(5) {
        report(5, "ball growth invariants", c5_ball_growth());
    }
    if wanted(6) {
        report(6, "cone extension", c6_cone());
    }
    if wanted(7) {
        report(7, "competitor pipeline", c7_competitor());
    }
    if wanted(8) {
        report(8, "eta sweep", c8_eta_sweep());
    }
    if wanted(9) {
        report(9, "certificate arithmetic", c9_chain());
    }
    if wanted(10) {
        report(10, "determinism", c10_determinism());
    }
    let failed: Vec<usize> = results
        .iter()
        .filter(|(_, _, v)| !matches!(v, Ok((true, _))))
        .map(|(k, _, _)| *k)
        .collect();
    println!(
        "acceptance: {} passed, {} failed {:?}",
        results.len() - failed.len(),
        failed.len(),
        failed
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
