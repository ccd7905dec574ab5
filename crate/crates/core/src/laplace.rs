//! Matrix-free conjugate gradients for the discrete Laplace equation with
//! Dirichlet data.
//!
//! The operator is the graph Laplacian of a [`Stencil`] restricted to a set
//! of free nodes; every other active node keeps its value. The Jacobi
//! preconditioner is the weighted node degree.

use crate::geometry::Stencil;
use crate::par;
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaplaceOptions {
    /// Target for `max_i |r_i| / (d_i · max|x|)`, with `d_i` the weighted degree.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions {
            tol: 1e-10,
            max_iters: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn degree<S: Stencil>(grid: &S, free: &[bool]) -> Vec<f64> {
    par::map_indexed(grid.len(), |i| {
        if !free[i] {
            return 0.0;
        }
        let mut d = 0.0;
        grid.visit_edges(i, |_, w| d += w);
        d
    })
}

/// `(L x)_i = Σ_j w_e (x_i − x_j)` at free nodes, with non-free values
/// treated as zero.
fn apply<S: Stencil>(grid: &S, free: &[bool], x: &[f64], out: &mut [f64]) {
    par::fill_chunks(out, par::CHUNK, |start, chunk| {
        for (k, o) in chunk.iter_mut().enumerate() {
            let i = start + k;
            if !free[i] {
                *o = 0.0;
                continue;
            }
            let xi = x[i];
            let mut acc = 0.0;
            grid.visit_edges(i, |j, w| acc += w * (xi - if free[j] { x[j] } else { 0.0 }));
            *o = acc;
        }
    });
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum_indexed(a.len(), |i| a[i] * b[i])
}

/// Replace the values of `x` at free nodes by the discrete harmonic
/// extension of the remaining active values.
pub fn harmonic_extension<S: Stencil>(grid: &S, x: &mut [f64], free: &[bool], opts: &LaplaceOptions) -> LaplaceReport {
    let n = grid.len();
    assert!(x.len() == n && free.len() == n);
    let free: Vec<bool> = (0..n).map(|i| free[i] && grid.is_active(i)).collect();
    let d = degree(grid, &free);
    // Right-hand side: contributions of fixed neighbours.
    let b: Vec<f64> = par::map_indexed(n, |i| {
        if !free[i] {
            return 0.0;
        }
        let mut acc = 0.0;
        grid.visit_edges(i, |j, w| {
            if !free[j] {
                acc += w * x[j];
            }
        });
        acc
    });
    let scale_of = |x: &[f64]| x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let measure = |r: &[f64], x: &[f64]| {
        let s = scale_of(x);
        (0..n)
            .filter(|&i| free[i] && d[i] > 0.0)
            .map(|i| r[i].abs() / (d[i] * s))
            .fold(0.0, f64::max)
    };
    let mut ax = vec![0.0; n];
    apply(grid, &free, x, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|i| if free[i] { b[i] - ax[i] } else { 0.0 }).collect();
    let mut z: Vec<f64> = (0..n).map(|i| if d[i] > 0.0 { r[i] / d[i] } else { 0.0 }).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = measure(&r, x);
    let mut it = 0;
    while res > opts.tol && it < opts.max_iters {
        apply(grid, &free, &p, &mut ax);
        let pap = dot(&p, &ax);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        par::fill_chunks(x, par::CHUNK, |s, c| {
            for (k, v) in c.iter_mut().enumerate() {
                if free[s + k] {
                    *v += alpha * p[s + k];
                }
            }
        });
        par::fill_chunks(&mut r, par::CHUNK, |s, c| {
            for (k, v) in c.iter_mut().enumerate() {
                *v -= alpha * ax[s + k];
            }
        });
        it += 1;
        res = measure(&r, x);
        if res <= opts.tol {
            break;
        }
        par::fill_chunks(&mut z, par::CHUNK, |s, c| {
            for (k, v) in c.iter_mut().enumerate() {
                let i = s + k;
                *v = if d[i] > 0.0 { r[i] / d[i] } else { 0.0 };
            }
        });
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::fill_chunks(&mut p, par::CHUNK, |s, c| {
            for (k, v) in c.iter_mut().enumerate() {
                *v = z[s + k] + beta * *v;
            }
        });
    }
    // Recompute the true residual to guard against drift.
    apply(grid, &free, x, &mut ax);
    let r_true: Vec<f64> = (0..n).map(|i| if free[i] { b[i] - ax[i] } else { 0.0 }).collect();
    let residual = measure(&r_true, x);
    LaplaceReport {
        iterations: it,
        residual,
        converged: residual <= opts.tol * 10.0,
    }
}

/// Componentwise harmonic extension of a complex field.
pub fn harmonic_extension_complex<S: Stencil>(
    grid: &S,
    u: &mut [C64],
    free: &[bool],
    opts: &LaplaceOptions,
) -> LaplaceReport {
    let mut re: Vec<f64> = u.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = u.iter().map(|z| z.im).collect();
    let a = harmonic_extension(grid, &mut re, free, opts);
    let b = harmonic_extension(grid, &mut im, free, opts);
    for (i, z) in u.iter_mut().enumerate() {
        *z = C64::new(re[i], im[i]);
    }
    LaplaceReport {
        iterations: a.iterations.max(b.iterations),
        residual: a.residual.max(b.residual),
        converged: a.converged && b.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Lattice;

    #[test]
    fn linear_data_is_reproduced() {
        let lat = Lattice::ball(1.0, 0.1).unwrap();
        let exact = lat.scalar_from_fn(|p| 1.0 + p[0] - 2.0 * p[2]);
        let free: Vec<bool> = (0..lat.len()).map(|i| lat.is_interior(i)).collect();
        let mut x: Vec<f64> = (0..lat.len()).map(|i| if free[i] { 0.0 } else { exact[i] }).collect();
        let rep = harmonic_extension(&lat, &mut x, &free, &LaplaceOptions::default());
        assert!(rep.converged, "{rep:?}");
        for i in 0..lat.len() {
            assert!((x[i] - exact[i]).abs() < 1e-8);
        }
    }
}
