//! Phase lifting on a sphere, the modulus interpolation across an
//! annulus, and the harmonic extension of a phase into a ball.

use super::ConstructError;
use crate::energy::{gl_energy, real_field};
use crate::geometry::vec3::{norm, scale, Vec3};
use crate::geometry::{Lattice, SphereGrid, Stencil};
use crate::laplace::{harmonic_extension, LaplaceOptions};
use crate::par;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftAudit {
    /// Largest `|φ_j − φ_i − arg(v_j/v_i)|` over all grid edges.
    pub edge_defect: f64,
    /// Largest `|Σ arg|` around a grid cell or polar ring.
    pub plaquette_defect: f64,
    /// `max |e^{iφ} − v/|v||`.
    pub reproduction_error: f64,
    pub min_modulus: f64,
    /// Nodes with `|v| < 7/8`.
    pub below_threshold: usize,
}

/// Single-valued phase of `v` on a sphere grid, by unwrapping along a
/// breadth-first spanning tree and auditing every cell.
pub fn lift_phase(sphere: &SphereGrid, v: &[C64]) -> Result<(Vec<f64>, LiftAudit), ConstructError> {
    let n = sphere.len();
    if let Some(i) = (0..n).find(|&i| !(v[i].norm() > 0.0)) {
        return Err(ConstructError::VanishingModulus { index: i });
    }
    let mut phase = vec![f64::NAN; n];
    // Start from the node of largest modulus.
    let root = (0..n).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
    phase[root] = v[root].arg();
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        let pi = phase[i];
        sphere.visit_edges(i, |j, _| {
            if phase[j].is_nan() {
                phase[j] = pi + (v[j] / v[i]).arg();
                queue.push_back(j);
            }
        });
    }
    if let Some(i) = phase.iter().position(|p| p.is_nan()) {
        return Err(ConstructError::Lifting(format!("node {i} unreachable from the root")));
    }
    let mut edge_defect: f64 = 0.0;
    for i in 0..n {
        sphere.visit_edges(i, |j, _| {
            edge_defect = edge_defect.max((phase[j] - phase[i] - (v[j] / v[i]).arg()).abs());
        });
    }
    let (np, nt) = (sphere.n_phi(), sphere.n_theta());
    let step = |a: usize, b: usize| (v[b] / v[a]).arg();
    let mut plaquette_defect: f64 = 0.0;
    for j in 0..np.saturating_sub(1) {
        for k in 0..nt {
            let k1 = (k + 1) % nt;
            let c = [
                sphere.index(j, k),
                sphere.index(j, k1),
                sphere.index(j + 1, k1),
                sphere.index(j + 1, k),
            ];
            let s = step(c[0], c[1]) + step(c[1], c[2]) + step(c[2], c[3]) + step(c[3], c[0]);
            plaquette_defect = plaquette_defect.max(s.abs());
        }
    }
    let rings = if sphere.is_cap() { vec![0] } else { vec![0, np - 1] };
    for j in rings {
        let s: f64 = (0..nt)
            .map(|k| step(sphere.index(j, k), sphere.index(j, (k + 1) % nt)))
            .sum();
        plaquette_defect = plaquette_defect.max(s.abs());
    }
    if plaquette_defect >= PI || edge_defect >= PI {
        return Err(ConstructError::Lifting(format!(
            "phase defect {:.3} around a cell (nonzero winding)",
            plaquette_defect.max(edge_defect)
        )));
    }
    let reproduction_error = (0..n)
        .map(|i| (C64::from_polar(1.0, phase[i]) - v[i] / v[i].norm()).norm())
        .fold(0.0, f64::max);
    let min_modulus = v.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let audit = LiftAudit {
        edge_defect,
        plaquette_defect,
        reproduction_error,
        min_modulus,
        below_threshold: v.iter().filter(|z| z.norm() < 7.0 / 8.0).count(),
    };
    Ok((phase, audit))
}

/// `∫_S |∇_T f|²` of a real function on a sphere grid (edge quadrature).
pub fn tangential_dirichlet(sphere: &SphereGrid, f: &[f64]) -> f64 {
    2.0 * gl_energy(sphere, &real_field(f), 1.0, None).dirichlet
}

/// Modulus `ρ̃` and phase `φ̃` on the sphere `S_{r_out}`, extended to the
/// annulus `r_in < |x| < r_out` by linear interpolation of the modulus from
/// `1` to `ρ̃` and radially constant phase.
#[derive(Clone, Debug)]
pub struct AnnulusData {
    pub sphere: SphereGrid,
    pub modulus: Vec<f64>,
    pub phase: Vec<f64>,
    pub r_in: f64,
    pub r_out: f64,
}

/// Closed-form radial integrals of the annulus extension over the sphere
/// quadrature: `∫|∂_r ρ|²`, `∫|∇_T ρ|²`, `∫(1 − ρ²)²`, `∫|∇φ|²`, and the
/// energy they assemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPieces {
    pub radial: f64,
    pub tangential_modulus: f64,
    pub potential: f64,
    pub phase: f64,
    /// `½(∫|∂_r ρ|² + ∫|∇_T ρ|² + ∫ρ²|∇φ|²) + ¼∫(1 − ρ²)²`.
    pub energy: f64,
}

// Four-point Gauss-Legendre rule on [0, 1].
const GL4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
];

impl AnnulusData {
    pub fn new(sphere: SphereGrid, modulus: Vec<f64>, phase: Vec<f64>, r_in: f64) -> Result<Self, ConstructError> {
        let r_out = sphere.radius();
        if !(r_in > 0.0 && r_in < r_out) {
            return Err(ConstructError::Precondition(format!(
                "annulus radii {r_in} < {r_out} out of order"
            )));
        }
        Ok(AnnulusData {
            sphere,
            modulus,
            phase,
            r_in,
            r_out,
        })
    }

    fn thickness(&self) -> f64 {
        self.r_out - self.r_in
    }

    /// `(ρ, φ)` at `x` with `r_in ≤ |x| ≤ r_out`.
    pub fn polar_at(&self, x: Vec3) -> (f64, f64) {
        let r = norm(x);
        let p = scale(x, self.r_out / r);
        let rt = self.sphere.interpolate_scalar(&self.modulus, p).expect("full sphere");
        let ph = self.sphere.interpolate_scalar(&self.phase, p).expect("full sphere");
        let s = ((r - self.r_in) / self.thickness()).clamp(0.0, 1.0);
        (s * rt + (1.0 - s), ph)
    }

    pub fn value_at(&self, x: Vec3) -> C64 {
        let (rho, phi) = self.polar_at(x);
        C64::from_polar(rho, phi)
    }

    pub fn pieces(&self) -> AnnulusPieces {
        let s = &self.sphere;
        let r2 = s.radius() * s.radius();
        let t = self.thickness();
        let w = s.weights();
        // Integrals over the unit sphere of the direction.
        let dev = par::sum_indexed(s.len(), |i| w[i] * (self.modulus[i] - 1.0).powi(2)) / r2;
        let grad_mod = tangential_dirichlet(s, &self.modulus);
        let grad_phase = tangential_dirichlet(s, &self.phase);
        let cube = (self.r_out.powi(3) - self.r_in.powi(3)) / 3.0;
        let radial = cube * dev / (t * t);
        let tangential_modulus = t / 3.0 * grad_mod;
        let phase = t * grad_phase;
        let mut potential = 0.0;
        let mut weighted_phase = 0.0;
        let phase_density = phase_density(s, &self.phase);
        for &(x, gw) in &GL4 {
            let r = self.r_in + x * t;
            let pot = par::sum_indexed(s.len(), |i| {
                let rho = x * self.modulus[i] + (1.0 - x);
                w[i] * (1.0 - rho * rho).powi(2)
            }) / r2;
            potential += gw * t * r * r * pot;
            let ph = par::sum_indexed(s.len(), |i| {
                let rho = x * self.modulus[i] + (1.0 - x);
                rho * rho * phase_density[i]
            });
            weighted_phase += gw * t * ph;
        }
        AnnulusPieces {
            radial,
            tangential_modulus,
            potential,
            phase,
            energy: 0.5 * (radial + tangential_modulus + weighted_phase) + 0.25 * potential,
        }
    }
}

/// Per-node share of `∫|∇_T φ|²` (edge energies split between endpoints).
fn phase_density(sphere: &SphereGrid, phi: &[f64]) -> Vec<f64> {
    par::map_indexed(sphere.len(), |i| {
        let mut acc = 0.0;
        sphere.visit_edges(i, |j, w| acc += w * (phi[j] - phi[i]).powi(2));
        0.5 * acc
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPhaseReport {
    pub core_radius: f64,
    /// `E(e^{iΦ}; B)` on the lattice.
    pub energy: f64,
    /// `½ ∫_B |∇Φ|²` (edge quadrature of `Φ` itself).
    pub phase_energy: f64,
    /// `∫_{S} |∇_T φ|²` on the boundary sphere.
    pub boundary_dirichlet: f64,
    /// `(R′/4) ∫_S |∇_T φ|²`.
    pub bound: f64,
    /// `phase_energy / bound`.
    pub ratio: f64,
    pub laplace_residual: f64,
    pub converged: bool,
}

/// Harmonic extension `Φ` into the nodes with `|x| < r_core` of the values
/// `phase(x/|x|)` taken at every other inside node. Returns `Φ` on the whole
/// lattice and the core mask.
pub fn harmonic_phase_extension<F>(
    lat: &Lattice,
    r_core: f64,
    phase: F,
    boundary_dirichlet: f64,
    opts: &LaplaceOptions,
) -> Result<(Vec<f64>, Vec<bool>, HarmonicPhaseReport), ConstructError>
where
    F: Fn(Vec3) -> f64 + Sync,
{
    let core = lat.mask_where(|p| norm(p) < r_core);
    let free: Vec<bool> = (0..lat.len()).map(|i| core[i] && !lat.is_fixed(i)).collect();
    let mut x = par::map_indexed(lat.len(), |i| {
        if !lat.is_inside(i) {
            return 0.0;
        }
        let p = lat.position(i);
        let r = norm(p);
        if core[i] || r == 0.0 {
            0.0
        } else {
            phase(scale(p, r_core / r))
        }
    });
    let rep = harmonic_extension(lat, &mut x, &free, opts);
    let u: Vec<C64> = x.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    let energy = gl_energy(lat, &u, 1.0, Some(&core)).total;
    let phase_energy = gl_energy(lat, &real_field(&x), 1.0, Some(&core)).dirichlet;
    let bound = 0.25 * r_core * boundary_dirichlet;
    let report = HarmonicPhaseReport {
        core_radius: r_core,
        energy,
        phase_energy,
        boundary_dirichlet,
        bound,
        ratio: if bound > 0.0 { phase_energy / bound } else { 0.0 },
        laplace_residual: rep.residual,
        converged: rep.converged,
    };
    Ok((x, core, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifting_of_smooth_phase_is_exact() {
        let s = SphereGrid::full(3.0, 24, 48).unwrap();
        let v = s.field_from_fn(|p| C64::from_polar(1.0 + 0.05 * p[2], 2.5 * p[0]));
        let (phi, audit) = lift_phase(&s, &v).unwrap();
        assert!(audit.reproduction_error < 1e-10);
        assert!(audit.plaquette_defect < 1e-8);
        let off = phi[0] - 2.5 * s.position(0)[0];
        for i in 0..s.len() {
            assert!((phi[i] - 2.5 * s.position(i)[0] - off).abs() < 1e-9);
        }
    }

    #[test]
    fn lifting_rejects_a_vortex_pair() {
        let s = SphereGrid::full(1.0, 24, 48).unwrap();
        // Degree one around the north pole, minus one around the south pole.
        let v = s.field_from_fn(|p| C64::new(p[0], p[1]));
        assert!(matches!(lift_phase(&s, &v), Err(ConstructError::Lifting(_))));
    }
}
