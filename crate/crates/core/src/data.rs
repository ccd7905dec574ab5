//! Boundary data and synthetic fields used by the experiments.

use crate::geometry::vec3::{add, angle, cross, dot, normalize, scale, Vec3};
use crate::C64;
use serde::{Deserialize, Serialize};

/// Modulus profile of a synthetic vortex core, as a function of distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoreShape {
    /// `min(s/size, 1)`.
    Linear { size: f64 },
    /// `tanh(s/size)`.
    Tanh { size: f64 },
}

impl CoreShape {
    pub fn modulus(&self, s: f64) -> f64 {
        match *self {
            CoreShape::Linear { size } => (s / size).min(1.0),
            CoreShape::Tanh { size } => (s / size).tanh(),
        }
    }
}

/// `(x₁, x₂)/|(x₁, x₂)|`, zero on the axis.
pub fn vortex_line(p: Vec3) -> C64 {
    let z = C64::new(p[0], p[1]);
    let r = z.norm();
    if r == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        z / r
    }
}

/// `e^{i k x₁}`: smooth, unimodular, degree zero on every loop.
pub fn plane_wave(p: Vec3, k: f64) -> C64 {
    C64::from_polar(1.0, k * p[0])
}

/// Point vortices of integer charge on a sphere.
///
/// The phase is `Σ q_k arg(ζ − ζ_k)` in the stereographic coordinate `ζ`
/// of the tangent plane at `chart_center` (projection from the antipode),
/// and the modulus is the product of core profiles in the geodesic
/// distance to each vortex. With zero total charge the field is smooth away
/// from the vortices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereVortices {
    pub sphere_radius: f64,
    pub chart_center: Vec3,
    pub vortices: Vec<(Vec3, i32)>,
    pub core: CoreShape,
}

impl SphereVortices {
    /// Vortex/antivortex pair at geodesic distance `separation`, centred at
    /// `center`, with the `+1` vortex displaced towards `direction`.
    pub fn dipole(sphere_radius: f64, center: Vec3, direction: Vec3, separation: f64, core: CoreShape) -> Self {
        let c = normalize(center);
        let t = normalize(add(direction, scale(c, -dot(direction, c))));
        let half = 0.5 * separation / sphere_radius;
        let at = |s: f64| normalize(add(scale(c, s.cos()), scale(t, s.sin())));
        SphereVortices {
            sphere_radius,
            chart_center: c,
            vortices: vec![(at(half), 1), (at(-half), -1)],
            core,
        }
    }

    fn chart(&self, x: Vec3) -> C64 {
        let c = self.chart_center;
        let e1 = normalize(cross(
            if c[2].abs() < 0.9 {
                [0.0, 0.0, 1.0]
            } else {
                [1.0, 0.0, 0.0]
            },
            c,
        ));
        let e2 = cross(c, e1);
        let d = 1.0 + dot(x, c);
        C64::new(dot(x, e1), dot(x, e2)) / d
    }

    pub fn value(&self, p: Vec3) -> C64 {
        let x = normalize(p);
        // At the projection point ζ = ∞ and, for zero total charge, the
        // phase tends to 1.
        let at_infinity = 1.0 + dot(x, self.chart_center) < 1e-12;
        let zeta = self.chart(x);
        let mut phase = C64::new(1.0, 0.0);
        let mut modulus = 1.0;
        for &(a, q) in &self.vortices {
            if !at_infinity {
                let w = zeta - self.chart(a);
                let n = w.norm();
                if n > 0.0 {
                    phase *= (w / n).powi(q);
                }
            }
            modulus *= self.core.modulus(self.sphere_radius * angle(x, a));
        }
        phase * modulus
    }

    /// Positions of the vortices on the sphere of radius `sphere_radius`.
    pub fn positions(&self) -> Vec<Vec3> {
        self.vortices
            .iter()
            .map(|(a, _)| scale(*a, self.sphere_radius))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dipole_vanishes_at_both_vortices_only() {
        let d = SphereVortices::dipole(
            10.0,
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            3.0,
            CoreShape::Linear { size: 0.5 },
        );
        for p in d.positions() {
            assert!(d.value(p).norm() < 1e-12);
        }
        assert!((d.value([0.0, 0.0, 10.0]).norm() - 1.0).abs() < 1e-12);
        assert!((d.value([-10.0, 0.0, 0.0]).norm() - 1.0).abs() < 1e-12);
    }
}
