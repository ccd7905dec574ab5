//! The named experiments. Each module has a `Params` block (defaults for
//! every field, unknown keys rejected), a `validate` pass, a `run` returning
//! a typed outcome, and a `write` that turns the outcome into files.

pub mod ballgrowth;
pub mod certify;
pub mod eta_sweep;
pub mod growth_rate;
pub mod identities;
pub mod prop13;

use crate::context::{Context, StageError};
use crate::output::OutDir;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io;
use vortexlab_core::data::{plane_wave, vortex_line, CoreShape, SphereVortices};
use vortexlab_core::energy::{shell_energy_trace, ShellEnergyTrace};
use vortexlab_core::geometry::vec3::Vec3;
use vortexlab_core::geometry::Lattice;
use vortexlab_core::relax::{minimize_dirichlet, Initializer, SolveOptions, SolveReport};
use vortexlab_core::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    GrowthRate,
    EtaSweep,
    Prop13,
    BallGrowth,
    Certify,
    Identities,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::GrowthRate,
        Experiment::EtaSweep,
        Experiment::Prop13,
        Experiment::BallGrowth,
        Experiment::Certify,
        Experiment::Identities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::GrowthRate => "growth-rate",
            Experiment::EtaSweep => "eta-sweep",
            Experiment::Prop13 => "prop13",
            Experiment::BallGrowth => "ballgrowth",
            Experiment::Certify => "certify",
            Experiment::Identities => "identities",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::GrowthRate => "radial vortex profile and the R ln R growth of the straight vortex line",
            Experiment::EtaSweep => "minimizers on the unit ball for decreasing eps: energy ratio and |u(0)|",
            Experiment::Prop13 => {
                "competitor construction on dipole sphere data, energy split and minimizer comparison"
            }
            Experiment::BallGrowth => "bad-disc cover, ball growth and certificate on dipole sphere data",
            Experiment::Certify => "threshold constants chain and differential-inequality check on a minimizer trace",
            Experiment::Identities => "harmonic trace inequality, Pohozaev defect and monotonicity of E(r)/r",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn parse_params(self, v: Value) -> Result<Params, String> {
        fn p<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, String> {
            serde_json::from_value(v).map_err(|e| e.to_string())
        }
        Ok(match self {
            Experiment::GrowthRate => Params::GrowthRate(p(v)?),
            Experiment::EtaSweep => Params::EtaSweep(p(v)?),
            Experiment::Prop13 => Params::Prop13(p(v)?),
            Experiment::BallGrowth => Params::BallGrowth(p(v)?),
            Experiment::Certify => Params::Certify(p(v)?),
            Experiment::Identities => Params::Identities(p(v)?),
        })
    }

    pub fn default_params(self) -> Params {
        self.parse_params(Value::Object(Default::default()))
            .expect("defaults parse")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    GrowthRate(growth_rate::Params),
    EtaSweep(eta_sweep::Params),
    Prop13(prop13::Params),
    BallGrowth(ballgrowth::Params),
    Certify(certify::Params),
    Identities(identities::Params),
}

impl Params {
    pub fn experiment(&self) -> Experiment {
        match self {
            Params::GrowthRate(_) => Experiment::GrowthRate,
            Params::EtaSweep(_) => Experiment::EtaSweep,
            Params::Prop13(_) => Experiment::Prop13,
            Params::BallGrowth(_) => Experiment::BallGrowth,
            Params::Certify(_) => Experiment::Certify,
            Params::Identities(_) => Experiment::Identities,
        }
    }

    /// Cross-field checks; empty when the block is usable.
    pub fn validate(&self) -> Vec<String> {
        match self {
            Params::GrowthRate(p) => p.validate(),
            Params::EtaSweep(p) => p.validate(),
            Params::Prop13(p) => p.validate(),
            Params::BallGrowth(p) => p.validate(),
            Params::Certify(p) => p.validate(),
            Params::Identities(p) => p.validate(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    GrowthRate(growth_rate::Outcome),
    EtaSweep(eta_sweep::Outcome),
    Prop13(Box<prop13::Outcome>),
    BallGrowth(Box<ballgrowth::Outcome>),
    Certify(certify::Outcome),
    Identities(identities::Outcome),
}

impl Outcome {
    pub fn write(&self, out: &mut OutDir) -> io::Result<()> {
        match self {
            Outcome::GrowthRate(o) => growth_rate::write(o, out),
            Outcome::EtaSweep(o) => eta_sweep::write(o, out),
            Outcome::Prop13(o) => prop13::write(o, out),
            Outcome::BallGrowth(o) => ballgrowth::write(o, out),
            Outcome::Certify(o) => certify::write(o, out),
            Outcome::Identities(o) => identities::write(o, out),
        }
    }
}

pub fn run(params: &Params, ctx: &mut Context) -> Result<Outcome, StageError> {
    Ok(match params {
        Params::GrowthRate(p) => Outcome::GrowthRate(growth_rate::run(p, ctx)?),
        Params::EtaSweep(p) => Outcome::EtaSweep(eta_sweep::run(p, ctx)?),
        Params::Prop13(p) => Outcome::Prop13(Box::new(prop13::run(p, ctx)?)),
        Params::BallGrowth(p) => Outcome::BallGrowth(Box::new(ballgrowth::run(p, ctx)?)),
        Params::Certify(p) => Outcome::Certify(certify::run(p, ctx)?),
        Params::Identities(p) => Outcome::Identities(identities::run(p, ctx)?),
    })
}

/// Energy minimizer settings. The random initializations draw their seed
/// from the run generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    /// Random initializations tried after the harmonic one.
    pub random_inits: usize,
    pub amplitude: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-6,
            max_iters: 20_000,
            memory: 8,
            random_inits: 0,
            amplitude: 0.5,
        }
    }
}

impl SolverParams {
    pub fn options(&self, ctx: &mut Context) -> SolveOptions {
        let mut inits = vec![Initializer::Harmonic];
        inits.extend((0..self.random_inits).map(|_| Initializer::Random {
            amplitude: self.amplitude,
        }));
        SolveOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            memory: self.memory,
            inits,
            seed: ctx.next_seed(),
        }
    }

    pub fn validate(&self, at: &str) -> Vec<String> {
        let mut e = Vec::new();
        if !(self.tol > 0.0) || self.max_iters == 0 || self.memory == 0 {
            e.push(format!("{at}: tol, max_iters and memory must be positive"));
        }
        if !(self.amplitude >= 0.0) {
            e.push(format!("{at}: amplitude must be nonnegative"));
        }
        e
    }
}

/// Vortex/antivortex pair on a sphere of radius `R`, at geodesic separation
/// `separation_factor · R^separation_exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereDipole {
    pub center: Vec3,
    pub direction: Vec3,
    pub separation_factor: f64,
    pub separation_exponent: f64,
    pub core: CoreShape,
}

impl Default for SphereDipole {
    fn default() -> Self {
        SphereDipole {
            center: [1.0, 0.0, 0.0],
            direction: [0.0, 1.0, 0.2],
            separation_factor: 0.34,
            separation_exponent: 0.5,
            core: CoreShape::Linear { size: 1.0 },
        }
    }
}

impl SphereDipole {
    pub fn separation(&self, radius: f64) -> f64 {
        self.separation_factor * radius.powf(self.separation_exponent)
    }

    pub fn on_sphere(&self, radius: f64) -> SphereVortices {
        SphereVortices::dipole(radius, self.center, self.direction, self.separation(radius), self.core)
    }

    pub fn validate(&self, at: &str) -> Vec<String> {
        let mut e = Vec::new();
        let n = |v: Vec3| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n(self.center) > 0.0) {
            e.push(format!("{at}: dipole center must be nonzero"));
        }
        let c = self.center;
        let d = self.direction;
        let cross = [
            c[1] * d[2] - c[2] * d[1],
            c[2] * d[0] - c[0] * d[2],
            c[0] * d[1] - c[1] * d[0],
        ];
        if !(n(cross) > 1e-9 * n(c) * n(d)) {
            e.push(format!("{at}: dipole direction must not be parallel to the center"));
        }
        if !(self.separation_factor > 0.0) {
            e.push(format!("{at}: separation_factor must be positive"));
        }
        e.extend(core_problems(&self.core, at));
        e
    }
}

fn core_problems(core: &CoreShape, at: &str) -> Vec<String> {
    let size = match *core {
        CoreShape::Linear { size } | CoreShape::Tanh { size } => size,
    };
    if size > 0.0 {
        Vec::new()
    } else {
        vec![format!("{at}: core size must be positive")]
    }
}

/// Boundary data for a ball lattice of radius `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryData {
    /// The constant `re + i·im`.
    Constant { value: [f64; 2] },
    /// `e^{i k x₁}`.
    PlaneWave { k: f64 },
    /// `(x₁, x₂)/|(x₁, x₂)|`, a straight vortex line through the centre.
    VortexLine,
    /// Vortex pair on the boundary sphere at geodesic distance `separation`.
    Dipole {
        separation: f64,
        #[serde(default = "default_core")]
        core: CoreShape,
    },
}

fn default_core() -> CoreShape {
    CoreShape::Linear { size: 1.0 }
}

impl BoundaryData {
    pub fn label(&self) -> &'static str {
        match self {
            BoundaryData::Constant { .. } => "constant",
            BoundaryData::PlaneWave { .. } => "plane-wave",
            BoundaryData::VortexLine => "vortex-line",
            BoundaryData::Dipole { .. } => "dipole",
        }
    }

    /// The data as a function on space, for a ball of radius `radius`.
    pub fn function(&self, radius: f64) -> Box<dyn Fn(Vec3) -> C64 + Send + Sync> {
        match self.clone() {
            BoundaryData::Constant { value } => Box::new(move |_| C64::new(value[0], value[1])),
            BoundaryData::PlaneWave { k } => Box::new(move |p| plane_wave(p, k)),
            BoundaryData::VortexLine => Box::new(vortex_line),
            BoundaryData::Dipole { separation, core } => {
                let d = SphereVortices::dipole(radius, [1.0, 0.0, 0.0], [0.0, 1.0, 0.2], separation, core);
                Box::new(move |p| d.value(p))
            }
        }
    }

    pub fn validate(&self, at: &str) -> Vec<String> {
        match self {
            BoundaryData::Constant { value } if !(value[0].is_finite() && value[1].is_finite()) => {
                vec![format!("{at}: constant value must be finite")]
            }
            BoundaryData::PlaneWave { k } if !k.is_finite() => vec![format!("{at}: k must be finite")],
            BoundaryData::Dipole { separation, core } => {
                let mut e = core_problems(core, at);
                if !(*separation > 0.0) {
                    e.push(format!("{at}: separation must be positive"));
                }
                e
            }
            _ => Vec::new(),
        }
    }
}

/// `true` when the sequence is strictly increasing.
pub(crate) fn increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

/// `true` when the sequence is strictly decreasing.
pub(crate) fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Plain CSV writer: header plus rows, numbers printed with `{}` (shortest
/// round-trip representation).
pub(crate) fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Minimizer on a ball lattice and its energy trace `E(r)`, `e_T(r)` on
/// evenly spaced radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BallTrace {
    pub radius: f64,
    pub spacing: f64,
    pub eps: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub samples: usize,
    pub solver: SolverParams,
}

impl Default for BallTrace {
    fn default() -> Self {
        BallTrace {
            radius: 20.0,
            spacing: 0.5,
            eps: 1.0,
            r_min: 2.0,
            r_max: 18.0,
            samples: 33,
            solver: SolverParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRun {
    pub data: BoundaryData,
    pub solve: SolveReport,
    pub trace: ShellEnergyTrace,
}

impl BallTrace {
    pub fn radii(&self) -> Vec<f64> {
        let n = self.samples;
        (0..n)
            .map(|k| self.r_min + (self.r_max - self.r_min) * k as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn validate(&self, at: &str) -> Vec<String> {
        let mut e = Vec::new();
        if !(self.radius > 0.0 && self.spacing > 0.0 && self.eps > 0.0) {
            e.push(format!("{at}: radius, spacing and eps must be positive"));
        } else if !(self.r_min > 2.0 * self.spacing
            && self.r_max < self.radius - 2.0 * self.spacing
            && self.r_min < self.r_max)
        {
            e.push(format!(
                "{at}: need 2h < r_min < r_max < R − 2h (h = {}, R = {})",
                self.spacing, self.radius
            ));
        }
        if self.samples < 3 {
            e.push(format!("{at}: samples must be at least 3"));
        }
        e.extend(self.solver.validate(&format!("{at}.solver")));
        e
    }

    /// Minimize with boundary data `data` and record the trace.
    pub fn run(&self, data: &BoundaryData, ctx: &mut Context) -> Result<TraceRun, StageError> {
        use crate::context::Staged;
        let label = format!("minimizer on B_{} ({})", self.radius, data.label());
        let lat = Lattice::ball(self.radius, self.spacing).stage(&label)?;
        let g = lat.field_from_fn(data.function(self.radius));
        let opts = self.solver.options(ctx);
        let (u, solve) = ctx
            .timed(&label, |_| minimize_dirichlet(&lat, &g, self.eps, &opts))
            .stage(&label)?;
        log::info!(
            "{label}: E {:.5}, {} iterations, converged {}",
            solve.energy.total,
            solve.iterations,
            solve.converged
        );
        let trace = shell_energy_trace(&lat, &u, self.eps, &self.radii(), None).stage("energy trace")?;
        Ok(TraceRun {
            data: data.clone(),
            solve,
            trace,
        })
    }
}
