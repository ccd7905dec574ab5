//! Extension between two disc maps through a cylinder, and the map from
//! flat cylinders to spherical ones.

use super::ConstructError;
use crate::energy::{gl_energy, node_energies};
use crate::geometry::vec3::{norm, Frame, Vec3};
use crate::geometry::{Lattice, LatticeShape, Stencil, VectorField};
use crate::par;
use crate::C64;
use serde::{Deserialize, Serialize};

/// Value of the cone extension at `(x, z)` in `D_R × [0, H]`: `v(x) W` with
/// `W = w(Hx/z)` on the cone `(H/R)|x| < z < H` and `1` elsewhere, where
/// `w = u/v`.
pub fn cone_value<U, V>(u: U, v: V, x: [f64; 2], z: f64, radius: f64, height: f64) -> C64
where
    U: Fn([f64; 2]) -> C64,
    V: Fn([f64; 2]) -> C64,
{
    let vx = v(x);
    let r = x[0].hypot(x[1]);
    if z > height * r / radius && z < height {
        let y = [height * x[0] / z, height * x[1] / z];
        vx * (u(y) / v(y))
    } else {
        vx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub radius: f64,
    pub height: f64,
    /// `E(U; D_R × (0, H))`.
    pub energy: f64,
    pub energy_u: f64,
    pub energy_v: f64,
    /// `H + R²/H`.
    pub geometric_factor: f64,
    /// `E(U) / ((H + R²/H)(E(u) + E(v)))`.
    pub constant: f64,
    /// `∫(1 − |·|²)²` of `U`, `u`, `v`.
    pub potential: f64,
    pub potential_u: f64,
    pub potential_v: f64,
    /// `∫(1 − |U|²)² / (H (∫(1 − |u|²)² + ∫(1 − |v|²)²))`.
    pub potential_constant: f64,
    /// Largest deviation from the prescribed values on the top, bottom and
    /// lateral faces.
    pub trace_defect: f64,
}

/// Cone extension of `u` (top) and `v` (bottom) given on a disc lattice,
/// on the cylinder lattice of the same radius and spacing.
pub fn cone_extension(
    disc: &Lattice,
    u: &[C64],
    v: &[C64],
    height: f64,
) -> Result<(Lattice, VectorField, ConeReport), ConstructError> {
    let radius = match *disc.shape() {
        LatticeShape::Disc { radius } => radius,
        _ => {
            return Err(ConstructError::Precondition(
                "cone extension needs a disc lattice".into(),
            ))
        }
    };
    if !(height > 0.0) {
        return Err(ConstructError::Precondition(format!(
            "height {height} must be positive"
        )));
    }
    let inside: Vec<usize> = (0..disc.len()).filter(|&i| disc.is_inside(i)).collect();
    if let Some(&i) = inside.iter().find(|&&i| v[i].norm() == 0.0) {
        return Err(ConstructError::VanishingModulus { index: i });
    }
    let scale = u.iter().chain(v).map(|z| z.norm()).fold(1.0, f64::max);
    for &i in inside.iter().filter(|&&i| disc.is_boundary(i)) {
        if (u[i] - v[i]).norm() > 1e-12 * scale {
            return Err(ConstructError::Precondition(format!(
                "top and bottom data differ on the boundary circle at node {i}"
            )));
        }
    }
    let h = disc.h();
    let cyl = Lattice::cylinder(radius, height, h)?;
    let nz = cyl.dims()[2];
    let plane = disc.len();
    let at = |f: &[C64], y: [f64; 2]| disc.interpolate_or_nearest(f, [y[0], y[1], 0.0]).expect("disc lattice");
    let vals = par::map_indexed(cyl.len(), |idx| {
        if !cyl.is_inside(idx) {
            return C64::new(0.0, 0.0);
        }
        let [i, j, k] = cyl.coords(idx);
        let node = disc.index(i, j, 0);
        if k == nz - 1 {
            return u[node];
        }
        let p = cyl.position(idx);
        let x = [p[0], p[1]];
        if k == 0 || disc.is_boundary(node) {
            return v[node];
        }
        cone_value(
            |y| at(u, y),
            |y| if y == x { v[node] } else { at(v, y) },
            x,
            p[2],
            radius,
            height,
        )
    });
    debug_assert_eq!(plane * nz, cyl.len());
    let field = VectorField(vals);
    let trace_defect = (0..cyl.len())
        .filter(|&i| cyl.is_inside(i))
        .filter_map(|idx| {
            let [i, j, k] = cyl.coords(idx);
            let node = disc.index(i, j, 0);
            if k == nz - 1 {
                Some((field[idx] - u[node]).norm())
            } else if k == 0 || disc.is_boundary(node) {
                Some((field[idx] - v[node]).norm())
            } else {
                None
            }
        })
        .fold(0.0, f64::max);
    let e = gl_energy(&cyl, &field, 1.0, None);
    let eu = gl_energy(disc, u, 1.0, None);
    let ev = gl_energy(disc, v, 1.0, None);
    let geometric_factor = height + radius * radius / height;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let report = ConeReport {
        radius,
        height,
        energy: e.total,
        energy_u: eu.total,
        energy_v: ev.total,
        geometric_factor,
        constant: ratio(e.total, geometric_factor * (eu.total + ev.total)),
        potential: 4.0 * e.potential,
        potential_u: 4.0 * eu.potential,
        potential_v: 4.0 * ev.potential,
        potential_constant: ratio(e.potential, height * (eu.potential + ev.potential)),
        trace_defect,
    };
    Ok((cyl, field, report))
}

/// `Ψ(y) = ((y₃ + R − H)/R)(y₁, y₂, √(R² − y₁² − y₂²))` in a frame whose
/// pole is the axis of the spherical cylinder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellChart {
    pub radius: f64,
    pub height: f64,
    pub frame: Frame,
}

impl ShellChart {
    pub fn new(radius: f64, height: f64, axis: Vec3) -> Self {
        ShellChart {
            radius,
            height,
            frame: Frame::with_pole(axis),
        }
    }

    pub fn psi(&self, y: [f64; 3]) -> Vec3 {
        let r = self.radius;
        let s = (y[2] + r - self.height) / r;
        let q = (r * r - y[0] * y[0] - y[1] * y[1]).sqrt();
        self.frame.to_global([s * y[0], s * y[1], s * q])
    }

    pub fn psi_inverse(&self, x: Vec3) -> [f64; 3] {
        let l = self.frame.to_local(x);
        let m = norm(x);
        let r = self.radius;
        [l[0] * r / m, l[1] * r / m, m - r + self.height]
    }

    /// `DΨ(y)` in local coordinates; column `a` is `∂Ψ/∂y_a`.
    pub fn jacobian(&self, y: [f64; 3]) -> [[f64; 3]; 3] {
        let r = self.radius;
        let s = (y[2] + r - self.height) / r;
        let q = (r * r - y[0] * y[0] - y[1] * y[1]).sqrt();
        [
            [s, 0.0, -s * y[0] / q],
            [0.0, s, -s * y[1] / q],
            [y[0] / r, y[1] / r, q / r],
        ]
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[2][1] * m[1][2]) - m[1][0] * (m[0][1] * m[2][2] - m[2][1] * m[0][2])
        + m[2][0] * (m[0][1] * m[1][2] - m[1][1] * m[0][2])
}

/// Solve `Jᵀ g = d` for the physical gradient `g` given the derivatives
/// `d` along the chart coordinates (`J` stored by columns).
fn solve_transpose(m: &[[f64; 3]; 3], d: [f64; 3]) -> [f64; 3] {
    // Rows of Jᵀ are the columns of J.
    let det = det3(m);
    let mut out = [0.0; 3];
    for (a, o) in out.iter_mut().enumerate() {
        let mut mm = *m;
        for (row, dv) in mm.iter_mut().zip(d) {
            row[a] = dv;
        }
        *o = det3(&mm) / det;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDistortion {
    /// Energy on the flat cylinder.
    pub flat: f64,
    /// Energy of the transported field on the spherical cylinder.
    pub mapped: f64,
    /// `mapped/flat − 1`.
    pub distortion: f64,
    /// `ρ/R + H/R`.
    pub aspect: f64,
    /// `|distortion| / aspect`.
    pub kappa: f64,
}

/// Compare `E(F; D_ρ × (0, H))` with `E(F ∘ Ψ⁻¹; 𝒞)` by the change of
/// variables `∫ ½|DΨ⁻ᵀ∇F|² + ¼(1 − |F|²)²) |det DΨ|`, both with the same
/// central-difference gradients on the cylinder lattice.
pub fn cylinder_map_distortion(
    cyl: &Lattice,
    field: &[C64],
    chart: &ShellChart,
) -> Result<MapDistortion, ConstructError> {
    let rho = match *cyl.shape() {
        LatticeShape::Cylinder { radius, height } if (height - chart.height).abs() < 1e-12 * height => radius,
        _ => {
            return Err(ConstructError::Precondition(
                "distortion needs a cylinder lattice of the chart height".into(),
            ))
        }
    };
    let aspect = (rho + chart.height) / chart.radius;
    if rho / chart.radius > 0.2 || chart.height / chart.radius > 0.2 {
        return Err(ConstructError::Precondition(format!(
            "ρ/R = {:.3} and H/R = {:.3} must not exceed 0.2",
            rho / chart.radius,
            chart.height / chart.radius
        )));
    }
    let grad = cyl.gradient(field);
    let w = cyl.weights();
    let dens = |i: usize, mapped: bool| {
        if !cyl.is_inside(i) {
            return 0.0;
        }
        let pot = 0.25 * (1.0 - field[i].norm_sqr()).powi(2);
        let g = grad[i];
        if !mapped {
            let d: f64 = g.iter().map(|c| c.norm_sqr()).sum();
            return w[i] * (0.5 * d + pot);
        }
        let j = chart.jacobian(cyl.position(i));
        let re = solve_transpose(&j, [g[0].re, g[1].re, g[2].re]);
        let im = solve_transpose(&j, [g[0].im, g[1].im, g[2].im]);
        let d: f64 = re.iter().chain(&im).map(|v| v * v).sum();
        w[i] * (0.5 * d + pot) * det3(&j).abs()
    };
    let flat = par::sum_indexed(cyl.len(), |i| dens(i, false));
    let mapped = par::sum_indexed(cyl.len(), |i| dens(i, true));
    let distortion = if flat > 0.0 { mapped / flat - 1.0 } else { 0.0 };
    Ok(MapDistortion {
        flat,
        mapped,
        distortion,
        aspect,
        kappa: distortion.abs() / aspect,
    })
}

/// Per-node energies of a cylinder lattice field, for callers that split
/// the total by region.
pub fn cylinder_node_energies(cyl: &Lattice, field: &[C64]) -> Vec<f64> {
    let (d, p) = node_energies(cyl, field, 1.0, None);
    d.iter().zip(&p).map(|(a, b)| a + b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_inverse_round_trip() {
        let c = ShellChart::new(100.0, 3.0, [0.2, 0.9, -0.1]);
        for y in [[0.5, -0.3, 1.0], [0.0, 0.0, 0.0], [1.0, 1.0, 3.0]] {
            let z = c.psi_inverse(c.psi(y));
            for a in 0..3 {
                assert!((z[a] - y[a]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = ShellChart::new(50.0, 4.0, [0.0, 0.0, 1.0]);
        let y = [1.2, -0.7, 2.0];
        let j = c.jacobian(y);
        for a in 0..3 {
            let mut p = y;
            let mut m = y;
            p[a] += 1e-6;
            m[a] -= 1e-6;
            let (xp, xm) = (c.frame.to_local(c.psi(p)), c.frame.to_local(c.psi(m)));
            for b in 0..3 {
                assert!(((xp[b] - xm[b]) / 2e-6 - j[a][b]).abs() < 1e-7);
            }
        }
    }
}
