//! Harmonic trace inequality `∫_{B_r}|∇w|² ≤ r/(N−1) ∫_{S_r}|∇_T w|²`
//! (equality for linear `w`), convergence of the Pohozaev defect under
//! refinement, and monotonicity of `E(r)/r` for minimizers.

use super::{csv, decreasing, BallTrace, BoundaryData, TraceRun};
use crate::context::{Context, StageError, Staged};
use crate::output::OutDir;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io;
use vortexlab_core::data::CoreShape;
use vortexlab_core::energy::{harmonic_identities, monotonicity_check, HarmonicIdentityRecord, MonotonicityViolation};
use vortexlab_core::geometry::vec3::Vec3;
use vortexlab_core::geometry::Lattice;
use vortexlab_core::C64;

/// `Σ_k c_k Re(e^{iφ_k} (y₁ + i y₂)^k)` with `y = Q_k x`: a sum of
/// rotated homogeneous harmonic polynomials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicPolynomial {
    pub terms: Vec<HarmonicTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicTerm {
    pub degree: u32,
    pub coefficient: f64,
    pub phase: f64,
    /// Rows of the rotation.
    pub rotation: [Vec3; 3],
}

impl HarmonicPolynomial {
    pub fn linear_x1() -> Self {
        HarmonicPolynomial {
            terms: vec![HarmonicTerm {
                degree: 1,
                coefficient: 1.0,
                phase: 0.0,
                rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            }],
        }
    }

    /// One random term of every degree `1..=degree`.
    pub fn random<R: Rng>(rng: &mut R, degree: u32) -> Self {
        HarmonicPolynomial {
            terms: (1..=degree)
                .map(|k| HarmonicTerm {
                    degree: k,
                    coefficient: rng.gen_range(-1.0..1.0),
                    phase: rng.gen_range(0.0..TAU),
                    rotation: random_rotation(rng),
                })
                .collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.degree).max().unwrap_or(0)
    }

    pub fn value(&self, x: Vec3) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let q = &t.rotation;
                let y = |r: usize| q[r][0] * x[0] + q[r][1] * x[1] + q[r][2] * x[2];
                let z = C64::new(y(0), y(1));
                t.coefficient * (C64::from_polar(1.0, t.phase) * z.powu(t.degree)).re
            })
            .sum()
    }
}

/// Rotation from a uniformly distributed unit quaternion.
fn random_rotation<R: Rng>(rng: &mut R) -> [Vec3; 3] {
    let q = loop {
        let q: [f64; 4] = [0; 4].map(|_| rng.gen_range(-1.0..1.0));
        let n = q.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            break q.map(|a| a / n);
        }
    };
    let [w, x, y, z] = q;
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotonicityParams {
    pub ball: BallTrace,
    pub data: Vec<BoundaryData>,
    pub slack: f64,
}

impl Default for MonotonicityParams {
    fn default() -> Self {
        MonotonicityParams {
            ball: BallTrace::default(),
            data: vec![
                BoundaryData::Constant { value: [1.0, 0.0] },
                BoundaryData::Dipole {
                    separation: 8.0,
                    core: CoreShape::Linear { size: 1.0 },
                },
            ],
            slack: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub radius: f64,
    /// Radius of the sphere the identities are evaluated on.
    pub eval_radius: f64,
    pub equality_spacing: f64,
    pub random_count: usize,
    pub max_degree: u32,
    pub random_spacing: f64,
    /// Spacings for the Pohozaev refinement study, decreasing.
    pub pohozaev_spacings: Vec<f64>,
    /// Largest scaled discrete Laplacian accepted for the polynomials.
    pub residual_tol: f64,
    pub monotonicity: Option<MonotonicityParams>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            radius: 1.0,
            eval_radius: 0.8,
            equality_spacing: 1.0 / 64.0,
            random_count: 10,
            max_degree: 4,
            random_spacing: 1.0 / 32.0,
            pohozaev_spacings: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            residual_tol: 1e-6,
            monotonicity: Some(MonotonicityParams::default()),
        }
    }
}

impl Params {
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        let coarsest = self
            .pohozaev_spacings
            .iter()
            .chain([&self.equality_spacing, &self.random_spacing])
            .fold(0.0f64, |a, &b| a.max(b));
        if !(self.radius > 0.0 && self.eval_radius > 0.0) {
            e.push("radius and eval_radius must be positive".into());
        } else if !(self.eval_radius < self.radius - 2.0 * coarsest) {
            e.push(format!(
                "eval_radius = {} must stay two spacings ({coarsest}) inside the ball",
                self.eval_radius
            ));
        }
        if self
            .pohozaev_spacings
            .iter()
            .chain([&self.equality_spacing, &self.random_spacing])
            .any(|&h| !(h > 0.0))
        {
            e.push("spacings must be positive".into());
        }
        if self.pohozaev_spacings.len() < 2 || !decreasing(&self.pohozaev_spacings) {
            e.push("pohozaev_spacings: at least two, strictly decreasing".into());
        }
        if self.max_degree == 0 {
            e.push("max_degree must be at least 1".into());
        }
        if !(self.residual_tol > 0.0) {
            e.push("residual_tol must be positive".into());
        }
        if let Some(m) = &self.monotonicity {
            e.extend(m.ball.validate("monotonicity.ball"));
            for (k, d) in m.data.iter().enumerate() {
                e.extend(d.validate(&format!("monotonicity.data[{k}]")));
            }
            if !(m.slack >= 0.0) {
                e.push("monotonicity.slack must be nonnegative".into());
            }
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRow {
    pub label: String,
    pub degree: u32,
    pub spacing: f64,
    #[serde(flatten)]
    pub record: HarmonicIdentityRecord,
    /// `lhs / rhs`: 1 for linear `w`, at most 1 in general.
    pub ratio: f64,
    /// `|pohozaev_defect| / interior`.
    pub relative_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityRun {
    #[serde(flatten)]
    pub run: TraceRun,
    pub violations: Vec<MonotonicityViolation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub equality: IdentityRow,
    pub random: Vec<IdentityRow>,
    pub random_polynomials: Vec<HarmonicPolynomial>,
    pub pohozaev: Vec<IdentityRow>,
    /// `defect(h) / defect(h/2)` per refinement.
    pub pohozaev_ratios: Vec<f64>,
    pub monotonicity: Vec<MonotonicityRun>,
}

fn identity_row(p: &Params, lat: &Lattice, w: &HarmonicPolynomial, label: String) -> Result<IdentityRow, StageError> {
    let h = lat.h();
    let r = p.eval_radius;
    let values = lat.scalar_from_fn(|x| w.value(x));
    let n_phi = ((2.0 * PI * r / h).ceil() as usize).max(32);
    let n_r = ((r / h).ceil() as usize).max(8);
    let record = harmonic_identities(lat, &values, r, n_phi, n_r, p.residual_tol).stage(&label)?;
    Ok(IdentityRow {
        degree: w.degree(),
        spacing: h,
        ratio: record.lhs / record.rhs,
        relative_defect: record.pohozaev_defect.abs() / record.interior,
        label,
        record,
    })
}

/// The fixed cubic used for the refinement study:
/// `Re (x₁ + i x₂)³ + x₁ x₃` in rotated coordinates.
fn pohozaev_polynomial() -> HarmonicPolynomial {
    let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let (s, c) = (0.3f64.sin(), 0.3f64.cos());
    HarmonicPolynomial {
        terms: vec![
            HarmonicTerm {
                degree: 3,
                coefficient: 1.0,
                phase: 0.0,
                rotation: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
            },
            // Re(e^{-iπ/2}(x₁ + i x₃)²)/2 = x₁ x₃
            HarmonicTerm {
                degree: 2,
                coefficient: 0.5,
                phase: -0.5 * PI,
                rotation: [id[0], id[2], id[1]],
            },
        ],
    }
}

pub fn run(p: &Params, ctx: &mut Context) -> Result<Outcome, StageError> {
    let equality = ctx.timed("linear equality", |_| {
        let lat = Lattice::ball(p.radius, p.equality_spacing).stage("lattice")?;
        identity_row(p, &lat, &HarmonicPolynomial::linear_x1(), "w = x1".into())
    })?;
    log::info!("w = x1: lhs/rhs = {:.6}", equality.ratio);
    let polys: Vec<HarmonicPolynomial> = (0..p.random_count)
        .map(|j| HarmonicPolynomial::random(ctx.rng(), 1 + (j as u32 % p.max_degree)))
        .collect();
    let random = ctx.timed("random polynomials", |_| {
        let lat = Lattice::ball(p.radius, p.random_spacing).stage("lattice")?;
        polys
            .iter()
            .enumerate()
            .map(|(j, w)| identity_row(p, &lat, w, format!("random {j}")))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let pohozaev = ctx.timed("pohozaev refinement", |_| {
        p.pohozaev_spacings
            .iter()
            .map(|&h| {
                let lat = Lattice::ball(p.radius, h).stage("lattice")?;
                identity_row(p, &lat, &pohozaev_polynomial(), format!("pohozaev h = {h}"))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let pohozaev_ratios: Vec<f64> = pohozaev
        .windows(2)
        .map(|w| w[0].record.pohozaev_defect.abs() / w[1].record.pohozaev_defect.abs())
        .collect();
    log::info!("pohozaev defect ratios {pohozaev_ratios:?}");
    let mut monotonicity = Vec::new();
    if let Some(m) = &p.monotonicity {
        for d in &m.data {
            let run = m.ball.run(d, ctx)?;
            let violations = monotonicity_check(&run.trace, 3, m.slack);
            log::info!("{}: {} monotonicity violation(s)", d.label(), violations.len());
            monotonicity.push(MonotonicityRun { run, violations });
        }
    }
    Ok(Outcome {
        equality,
        random,
        random_polynomials: polys,
        pohozaev,
        pohozaev_ratios,
        monotonicity,
    })
}

pub fn write(o: &Outcome, out: &mut OutDir) -> io::Result<()> {
    let rows = std::iter::once(&o.equality)
        .chain(&o.random)
        .chain(&o.pohozaev)
        .map(|r| {
            let mut v = vec![r.label.clone(), r.degree.to_string()];
            v.extend(
                [
                    r.spacing,
                    r.record.interior,
                    r.record.tangential,
                    r.record.normal,
                    r.record.rhs,
                    r.ratio,
                    r.record.pohozaev_defect,
                    r.relative_defect,
                    r.record.laplace_residual,
                ]
                .iter()
                .map(|x| x.to_string()),
            );
            v
        });
    let header = [
        "label",
        "degree",
        "spacing",
        "interior",
        "tangential",
        "normal",
        "rhs",
        "ratio",
        "pohozaev_defect",
        "relative_defect",
        "laplace_residual",
    ];
    out.write_text("harmonic.csv", &csv(&header, rows))?;
    let rows = o.monotonicity.iter().flat_map(|m| {
        m.run.trace.samples.iter().map(move |s| {
            vec![
                m.run.data.label().to_string(),
                s.r.to_string(),
                s.e.to_string(),
                (s.e / s.r).to_string(),
                s.de.to_string(),
                s.et.to_string(),
            ]
        })
    });
    out.write_text(
        "monotonicity.csv",
        &csv(&["data", "r", "E", "E_over_r", "dE", "eT"], rows),
    )?;
    out.write_json("identities.json", o)
}
