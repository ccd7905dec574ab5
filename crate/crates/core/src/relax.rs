//! Energy minimization with Dirichlet data.
//!
//! The minimizer is limited-memory BFGS over the free nodes (active and not
//! fixed), with a diagonal initial Hessian (weighted node degree plus the
//! potential curvature scale) and Armijo backtracking, so every accepted
//! step lowers the energy. Convergence is declared on the preconditioned
//! residual `max_i |∂E/∂u_i| / D_i`.

use crate::energy::{self, EnergyBreakdown, EnergyError};
use crate::geometry::{Lattice, Stencil, Vec3, VectorField};
use crate::laplace::{harmonic_extension_complex, LaplaceOptions};
use crate::par;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RelaxError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("boundary data has {got} values, grid has {expected} nodes")]
    LengthMismatch { got: usize, expected: usize },
    #[error("boundary data is not finite")]
    NonFinite,
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Starting field for a solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Initializer {
    /// Discrete harmonic extension of the boundary data.
    Harmonic,
    /// The free values passed in with the boundary data.
    Given,
    /// Harmonic extension plus seeded uniform noise in the disc of radius
    /// `amplitude`.
    Random { amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Target for the preconditioned residual.
    pub tol: f64,
    pub max_iters: usize,
    /// L-BFGS memory length.
    pub memory: usize,
    /// Initializers tried in order; the lowest final energy wins.
    pub inits: Vec<Initializer>,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-6,
            max_iters: 20_000,
            memory: 8,
            inits: vec![
                Initializer::Harmonic,
                Initializer::Random { amplitude: 0.5 },
                Initializer::Random { amplitude: 0.5 },
            ],
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn single(init: Initializer) -> Self {
        SolveOptions {
            inits: vec![init],
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), RelaxError> {
        if !(self.tol > 0.0) {
            return Err(RelaxError::InvalidOptions(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 || self.memory == 0 || self.inits.is_empty() {
            return Err(RelaxError::InvalidOptions(
                "max_iters, memory and the initializer list must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    /// Preconditioned residual `max |∂E/∂u_i| / D_i` at free nodes.
    pub residual: f64,
    /// `max |Δu + (1 − |u|²)u/ε²|` at free nodes (weighted by `p` if any).
    pub raw_residual: f64,
    pub converged: bool,
    /// Accepted energies never increased.
    pub monotone: bool,
    pub min_modulus: f64,
    pub min_location: Vec3,
    /// `|u(0)|` by interpolation, when the grid supports it.
    pub center_modulus: Option<f64>,
    /// Index of the winning initializer.
    pub init_index: usize,
    /// Final energy for every initializer tried.
    pub init_energies: Vec<f64>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

struct Problem<'a, S: Stencil> {
    grid: &'a S,
    eps: f64,
    p: Option<&'a [f64]>,
    free: Vec<bool>,
    diag: Vec<f64>,
}

impl<'a, S: Stencil> Problem<'a, S> {
    fn new(grid: &'a S, eps: f64, p: Option<&'a [f64]>) -> Self {
        let n = grid.len();
        let free: Vec<bool> = par::map_indexed(n, |i| grid.is_active(i) && !grid.is_fixed(i));
        let diag = par::map_indexed(n, |i| {
            if !free[i] {
                return 1.0;
            }
            let mut d = 0.0;
            grid.visit_edges(i, |_, w| d += w);
            d + grid.node_weight(i) * p.map_or(1.0, |p| p[i]) / (eps * eps)
        });
        Problem {
            grid,
            eps,
            p,
            free,
            diag,
        }
    }

    /// Total energy; writes the gradient (zero at non-free nodes).
    fn energy_and_gradient(&self, u: &[C64], g: &mut [C64]) -> f64 {
        let grid = self.grid;
        let c = 1.0 / (4.0 * self.eps * self.eps);
        let inv = 1.0 / (self.eps * self.eps);
        par::fill_chunks_sum(g, par::CHUNK, |start, chunk| {
            let mut acc = Vec::with_capacity(chunk.len());
            for (k, gi) in chunk.iter_mut().enumerate() {
                let i = start + k;
                if !grid.is_active(i) {
                    *gi = C64::new(0.0, 0.0);
                    continue;
                }
                let ui = u[i];
                let mut grad = C64::new(0.0, 0.0);
                let mut dir = 0.0;
                grid.visit_edges(i, |j, w| {
                    let d = ui - u[j];
                    grad += d * w;
                    dir += w * d.norm_sqr();
                });
                let wp = grid.node_weight(i) * self.p.map_or(1.0, |p| p[i]);
                let m = 1.0 - ui.norm_sqr();
                acc.push(0.25 * dir + wp * c * m * m);
                *gi = if self.free[i] {
                    grad - ui * (wp * m * inv)
                } else {
                    C64::new(0.0, 0.0)
                };
            }
            par::pairwise_sum(&acc)
        })
    }

    fn scaled_residual(&self, g: &[C64]) -> f64 {
        par::chunk_map(g.len(), par::CHUNK, |r| {
            r.filter(|&i| self.free[i])
                .map(|i| g[i].norm() / self.diag[i])
                .fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn raw_residual(&self, g: &[C64]) -> f64 {
        par::chunk_map(g.len(), par::CHUNK, |r| {
            r.filter(|&i| self.free[i])
                .map(|i| {
                    let w = self.grid.node_weight(i) * self.p.map_or(1.0, |p| p[i]).min(1.0);
                    g[i].norm() / w
                })
                .fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn dot(a: &[C64], b: &[C64]) -> f64 {
    par::sum_indexed(a.len(), |i| a[i].re * b[i].re + a[i].im * b[i].im)
}

fn axpy_into(out: &mut [C64], x: &[C64], t: f64, d: &[C64]) {
    par::fill_chunks(out, par::CHUNK, |s, c| {
        for (k, o) in c.iter_mut().enumerate() {
            *o = x[s + k] + d[s + k] * t;
        }
    });
}

struct RunStats {
    energy: f64,
    iterations: usize,
    residual: f64,
    raw_residual: f64,
    converged: bool,
    monotone: bool,
}

fn lbfgs<S: Stencil>(prob: &Problem<S>, u: &mut Vec<C64>, opts: &SolveOptions) -> RunStats {
    let n = u.len();
    let mut g = vec![C64::new(0.0, 0.0); n];
    let mut e = prob.energy_and_gradient(u, &mut g);
    let mut res = prob.scaled_residual(&g);
    let mut hist: VecDeque<(Vec<C64>, Vec<C64>, f64)> = VecDeque::new();
    let mut trial = vec![C64::new(0.0, 0.0); n];
    let mut g_trial = vec![C64::new(0.0, 0.0); n];
    let mut d = vec![C64::new(0.0, 0.0); n];
    let mut monotone = true;
    let mut it = 0;
    let mut gamma = 1.0;
    let mut alphas = vec![0.0; opts.memory];
    while res > opts.tol && it < opts.max_iters {
        // Two-loop recursion.
        d.copy_from_slice(&g);
        for (k, (s, y, rho)) in hist.iter().enumerate().rev() {
            let a = rho * dot(s, &d);
            alphas[k] = a;
            par::fill_chunks(&mut d, par::CHUNK, |st, c| {
                for (m, v) in c.iter_mut().enumerate() {
                    *v -= y[st + m] * a;
                }
            });
        }
        par::fill_chunks(&mut d, par::CHUNK, |st, c| {
            for (m, v) in c.iter_mut().enumerate() {
                *v *= gamma / prob.diag[st + m];
            }
        });
        for (k, (s, y, rho)) in hist.iter().enumerate() {
            let b = rho * dot(y, &d);
            let a = alphas[k];
            par::fill_chunks(&mut d, par::CHUNK, |st, c| {
                for (m, v) in c.iter_mut().enumerate() {
                    *v += s[st + m] * (a - b);
                }
            });
        }
        for v in d.iter_mut() {
            *v = -*v;
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            gamma = 1.0;
            par::fill_chunks(&mut d, par::CHUNK, |st, c| {
                for (m, v) in c.iter_mut().enumerate() {
                    *v = -g[st + m] / prob.diag[st + m];
                }
            });
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                break;
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        let mut e_trial = e;
        for _ in 0..50 {
            axpy_into(&mut trial, u, t, &d);
            e_trial = prob.energy_and_gradient(&trial, &mut g_trial);
            if e_trial <= e + 1e-4 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            gamma = 1.0;
            continue;
        }
        it += 1;
        if e_trial > e {
            monotone = false;
        }
        let s: Vec<C64> = d.iter().map(|v| v * t).collect();
        let y: Vec<C64> = par::map_indexed(n, |i| g_trial[i] - g[i]);
        let sy = dot(&s, &y);
        std::mem::swap(u, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        e = e_trial;
        res = prob.scaled_residual(&g);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            let ydy = par::sum_indexed(n, |i| y[i].norm_sqr() / prob.diag[i]);
            gamma = sy / ydy;
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
    }
    RunStats {
        energy: e,
        iterations: it,
        residual: res,
        raw_residual: prob.raw_residual(&g),
        converged: res <= opts.tol,
        monotone,
    }
}

fn harmonic_start<S: Stencil>(grid: &S, g: &[C64], free: &[bool]) -> Vec<C64> {
    let mut u: Vec<C64> = (0..grid.len())
        .map(|i| if free[i] { C64::new(0.0, 0.0) } else { g[i] })
        .collect();
    let opts = LaplaceOptions {
        tol: 1e-10,
        max_iters: 5_000,
    };
    harmonic_extension_complex(grid, &mut u, free, &opts);
    u
}

fn solve<S: Stencil>(
    grid: &S,
    g: &[C64],
    eps: f64,
    p: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<(VectorField, SolveReport), RelaxError> {
    let clock = Instant::now();
    opts.validate()?;
    if !(eps > 0.0) {
        return Err(EnergyError::InvalidEps(eps).into());
    }
    if g.len() != grid.len() {
        return Err(RelaxError::LengthMismatch {
            got: g.len(),
            expected: grid.len(),
        });
    }
    if (0..grid.len()).any(|i| grid.is_active(i) && !(g[i].re.is_finite() && g[i].im.is_finite())) {
        return Err(RelaxError::NonFinite);
    }
    let prob = Problem::new(grid, eps, p);
    let mut harmonic: Option<Vec<C64>> = None;
    let mut best: Option<(Vec<C64>, RunStats, usize)> = None;
    let mut energies = Vec::with_capacity(opts.inits.len());
    for (k, init) in opts.inits.iter().enumerate() {
        let mut u = match *init {
            Initializer::Given => g.to_vec(),
            Initializer::Harmonic => harmonic
                .get_or_insert_with(|| harmonic_start(grid, g, &prob.free))
                .clone(),
            Initializer::Random { amplitude } => {
                let mut u = harmonic
                    .get_or_insert_with(|| harmonic_start(grid, g, &prob.free))
                    .clone();
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
                for (i, v) in u.iter_mut().enumerate() {
                    if prob.free[i] {
                        let r = amplitude * rng.gen::<f64>().sqrt();
                        let th = rng.gen::<f64>() * std::f64::consts::TAU;
                        *v += C64::from_polar(r, th);
                    }
                }
                u
            }
        };
        let stats = lbfgs(&prob, &mut u, opts);
        energies.push(stats.energy);
        let better = best.as_ref().is_none_or(|(_, b, _)| stats.energy < b.energy);
        if better {
            best = Some((u, stats, k));
        }
    }
    let (u, stats, k) = best.expect("at least one initializer");
    let breakdown = match p {
        Some(p) => energy::weighted_energy(grid, &u, eps, p)?,
        None => energy::gl_energy(grid, &u, eps, None),
    };
    let (min_i, min_m) = (0..grid.len())
        .filter(|&i| grid.is_active(i))
        .map(|i| (i, u[i].norm()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let center_modulus = grid.interpolate_at(&u, [0.0, 0.0, 0.0]).map(|z| z.norm());
    let report = SolveReport {
        energy: breakdown,
        iterations: stats.iterations,
        residual: stats.residual,
        raw_residual: stats.raw_residual,
        converged: stats.converged,
        monotone: stats.monotone,
        min_modulus: min_m,
        min_location: grid.node_position(min_i),
        center_modulus,
        init_index: k,
        init_energies: energies,
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    Ok((VectorField(u), report))
}

/// Minimize `E_ε` over fields equal to `g` at the fixed nodes of `grid`.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged = false`.
pub fn minimize_dirichlet<S: Stencil>(
    grid: &S,
    g: &[C64],
    eps: f64,
    opts: &SolveOptions,
) -> Result<(VectorField, SolveReport), RelaxError> {
    solve(grid, g, eps, None, opts)
}

/// Minimize the energy with potential weight `p` (positive at active nodes).
pub fn minimize_weighted<S: Stencil>(
    grid: &S,
    p: &[f64],
    g: &[C64],
    eps: f64,
    opts: &SolveOptions,
) -> Result<(VectorField, SolveReport), RelaxError> {
    if p.len() != grid.len() {
        return Err(RelaxError::LengthMismatch {
            got: p.len(),
            expected: grid.len(),
        });
    }
    energy::check_weight(grid, p)?;
    solve(grid, g, eps, Some(p), opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub energy: f64,
    /// `E_ε / |ln ε|`.
    pub ratio: f64,
    /// `|u(0)|`.
    pub center_modulus: f64,
    /// `E_ε ≤ γ |ln ε|`.
    pub premise: bool,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
}

/// Minimize on `lat` for every `ε` in `eps_list` (decreasing) with boundary
/// values `boundary(x)` and tabulate the energy ratio and `|u(0)|`.
pub fn eta_sweep<F>(
    lat: &Lattice,
    boundary: F,
    eps_list: &[f64],
    gamma: f64,
    opts: &SolveOptions,
) -> Result<Vec<SweepRow>, RelaxError>
where
    F: Fn(Vec3) -> C64 + Sync + Send,
{
    if eps_list.windows(2).any(|w| w[1] >= w[0]) || eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(RelaxError::InvalidOptions(
            "eps list must be strictly decreasing within (0, 1)".into(),
        ));
    }
    let g = lat.field_from_fn(&boundary);
    let rows = par::map_jobs(eps_list, |&eps| {
        minimize_dirichlet(lat, &g, eps, opts).map(|(_, rep)| {
            let l = eps.ln().abs();
            SweepRow {
                eps,
                energy: rep.energy.total,
                ratio: rep.energy.total / l,
                center_modulus: rep.center_modulus.unwrap_or(f64::NAN),
                premise: rep.energy.total <= gamma * l,
                converged: rep.converged,
                residual: rep.residual,
                iterations: rep.iterations,
            }
        })
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fused_energy_matches_energy_module() {
        let lat = Lattice::disc(1.0, 0.1).unwrap();
        let u = lat.field_from_fn(|p| C64::new(p[0], 0.5 * p[1] + 0.2));
        let prob = Problem::new(&lat, 0.3, None);
        let mut g = vec![C64::new(0.0, 0.0); lat.len()];
        let e = prob.energy_and_gradient(&u, &mut g);
        let reference = energy::gl_energy(&lat, &u, 0.3, None).total;
        assert!((e - reference).abs() < 1e-12 * reference);
    }

    #[test]
    fn constant_data_is_a_fixed_point() {
        let lat = Lattice::disc(1.0, 0.1).unwrap();
        let g = VectorField::constant(lat.len(), C64::new(1.0, 0.0));
        let opts = SolveOptions {
            tol: 1e-12,
            ..SolveOptions::single(Initializer::Harmonic)
        };
        let (u, rep) = minimize_dirichlet(&lat, &g, 0.1, &opts).unwrap();
        assert!(rep.converged && rep.energy.total < 1e-20, "{rep:?}");
        assert!(u.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-9));
    }
}
