use super::vec3::{angle, dot, normalize, scale};
use super::Frame;
use super::{GeometryError, Stencil, Vec3, VectorField};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Geodesic disc on the sphere of radius `sphere_radius` centred at `R·center`.
/// `rho` is measured along the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalDisc {
    pub center: Vec3,
    pub rho: f64,
    pub sphere_radius: f64,
}

impl SphericalDisc {
    pub fn new(center: Vec3, rho: f64, sphere_radius: f64) -> Result<Self, GeometryError> {
        if !(rho > 0.0 && rho < PI * sphere_radius) {
            return Err(GeometryError::RadiusOutOfRange {
                r: rho,
                lo: 0.0,
                hi: PI * sphere_radius,
            });
        }
        Ok(SphericalDisc {
            center: normalize(center),
            rho,
            sphere_radius,
        })
    }

    /// Geodesic radius on the unit sphere.
    pub fn angular_radius(&self) -> f64 {
        self.rho / self.sphere_radius
    }

    /// Radius of the boundary circle as a Euclidean circle in ℝ³.
    pub fn euclidean_radius(&self) -> f64 {
        self.sphere_radius * self.angular_radius().sin()
    }

    pub fn perimeter(&self) -> f64 {
        TAU * self.euclidean_radius()
    }

    /// Geodesic distance from the centre to the point `p` (any length).
    pub fn distance_to(&self, p: Vec3) -> f64 {
        self.sphere_radius * angle(self.center, p)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.distance_to(p) <= self.rho
    }

    /// Closed, counter-clockwise (seen from outside) samples of the boundary
    /// circle; the last point repeats the first.
    pub fn boundary_points(&self, samples: usize) -> Vec<Vec3> {
        let f = Frame::with_pole(self.center);
        let a = self.angular_radius();
        let (s, c) = a.sin_cos();
        (0..=samples)
            .map(|k| {
                let t = TAU * (k % samples) as f64 / samples as f64;
                let local = [s * t.cos(), s * t.sin(), c];
                scale(f.to_global(local), self.sphere_radius)
            })
            .collect()
    }

    /// Same disc on the sphere of radius `r` (geodesic radius scaled).
    pub fn rescaled(&self, r: f64) -> Self {
        SphericalDisc {
            center: self.center,
            rho: self.rho * r / self.sphere_radius,
            sphere_radius: r,
        }
    }
}

/// Latitude-longitude grid on a sphere, or on a geodesic cap of angular
/// radius `phi_max` around the frame pole.
///
/// Ring `j` sits at colatitude `(j + ½)Δφ`; node `k` of a ring at
/// `θ = 2πk/nθ`, and the flat index is `k + nθ j`. For caps
/// `Δφ = phi_max/(nφ − ½)`, so the outer ring lies on the cap boundary, carries
/// half weight and holds Dirichlet data.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    radius: f64,
    n_phi: usize,
    n_theta: usize,
    dphi: f64,
    dtheta: f64,
    phi_max: f64,
    frame: Frame,
    cap: bool,
}

impl SphereGrid {
    pub fn full(radius: f64, n_phi: usize, n_theta: usize) -> Result<Self, GeometryError> {
        Self::check(radius, n_phi, n_theta)?;
        Ok(SphereGrid {
            radius,
            n_phi,
            n_theta,
            dphi: PI / n_phi as f64,
            dtheta: TAU / n_theta as f64,
            phi_max: PI,
            frame: Frame::identity(),
            cap: false,
        })
    }

    /// Full sphere with pole along `pole`, so structures can be kept away
    /// from the grid poles.
    pub fn full_with_pole(radius: f64, n_phi: usize, n_theta: usize, pole: Vec3) -> Result<Self, GeometryError> {
        let mut g = Self::full(radius, n_phi, n_theta)?;
        g.frame = Frame::with_pole(pole);
        Ok(g)
    }

    /// Grid on the closed geodesic disc `disc`.
    pub fn cap(disc: &SphericalDisc, n_phi: usize, n_theta: usize) -> Result<Self, GeometryError> {
        Self::check(disc.sphere_radius, n_phi, n_theta)?;
        let phi_max = disc.angular_radius();
        Ok(SphereGrid {
            radius: disc.sphere_radius,
            n_phi,
            n_theta,
            dphi: phi_max / (n_phi as f64 - 0.5),
            dtheta: TAU / n_theta as f64,
            phi_max,
            frame: Frame::with_pole(disc.center),
            cap: true,
        })
    }

    fn check(radius: f64, n_phi: usize, n_theta: usize) -> Result<(), GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidGrid(format!("sphere radius {radius}")));
        }
        if n_phi < 3 || n_theta < 4 || n_theta % 2 != 0 {
            return Err(GeometryError::InvalidGrid(format!(
                "need n_phi ≥ 3 and even n_theta ≥ 4, got ({n_phi}, {n_theta})"
            )));
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The same node layout on the concentric sphere of radius `r`.
    pub fn rescaled(&self, r: f64) -> Self {
        SphereGrid {
            radius: r,
            ..self.clone()
        }
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dphi(&self) -> f64 {
        self.dphi
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn is_cap(&self) -> bool {
        self.cap
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        k + self.n_theta * j
    }

    pub fn ring(&self, idx: usize) -> usize {
        idx / self.n_theta
    }

    pub fn phi(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dphi
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.dtheta
    }

    /// Colatitude and longitude of node `idx` in the grid frame.
    pub fn angles(&self, idx: usize) -> (f64, f64) {
        (self.phi(idx / self.n_theta), self.theta(idx % self.n_theta))
    }

    /// Unit direction of node `idx`.
    pub fn direction(&self, idx: usize) -> Vec3 {
        let (phi, theta) = self.angles(idx);
        let (sp, cp) = phi.sin_cos();
        self.frame.to_global([sp * theta.cos(), sp * theta.sin(), cp])
    }

    pub fn position(&self, idx: usize) -> Vec3 {
        scale(self.direction(idx), self.radius)
    }

    fn is_outer_ring(&self, j: usize) -> bool {
        self.cap && j + 1 == self.n_phi
    }

    fn phi_weight(&self, j: usize) -> f64 {
        if self.is_outer_ring(j) {
            0.5 * self.dphi
        } else {
            self.dphi
        }
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let j = idx / self.n_theta;
        self.radius * self.radius * self.phi(j).sin() * self.phi_weight(j) * self.dtheta
    }

    pub fn weights(&self) -> Vec<f64> {
        crate::par::map_indexed(self.len(), |i| self.weight(i))
    }

    pub fn total_weight(&self) -> f64 {
        crate::par::sum_indexed(self.len(), |i| self.weight(i))
    }

    pub fn field_from_fn<F>(&self, f: F) -> VectorField
    where
        F: Fn(Vec3) -> C64 + Sync + Send,
    {
        VectorField(crate::par::map_indexed(self.len(), |i| f(self.position(i))))
    }

    pub fn scalar_from_fn<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(Vec3) -> f64 + Sync + Send,
    {
        crate::par::map_indexed(self.len(), |i| f(self.position(i)))
    }

    pub fn mask_where<F>(&self, f: F) -> Vec<bool>
    where
        F: Fn(Vec3) -> bool + Sync + Send,
    {
        crate::par::map_indexed(self.len(), |i| f(self.position(i)))
    }

    /// Nodes inside a geodesic disc.
    pub fn disc_mask(&self, disc: &SphericalDisc) -> Vec<bool> {
        let c = disc.center;
        let a = disc.angular_radius();
        crate::par::map_indexed(self.len(), |i| angle(c, self.direction(i)) <= a + 1e-12)
    }

    /// Colatitude/longitude of a point in the grid frame.
    pub fn local_angles(&self, p: Vec3) -> (f64, f64) {
        let q = self.frame.to_local(p);
        let phi = q[0].hypot(q[1]).atan2(q[2]);
        let theta = q[1].atan2(q[0]).rem_euclid(TAU);
        (phi, theta)
    }

    /// Value at ring `j`, longitude index `k`, where `j = −1` and `j = nφ`
    /// denote the mirror rings across the poles.
    fn sample<T: Copy>(&self, u: &[T], j: isize, k: usize) -> Option<T> {
        let nt = self.n_theta;
        let n = self.n_phi as isize;
        if j < 0 {
            return Some(u[self.index(0, (k + nt / 2) % nt)]);
        }
        if j >= n {
            if self.cap {
                return None;
            }
            return Some(u[self.index(self.n_phi - 1, (k + nt / 2) % nt)]);
        }
        Some(u[self.index(j as usize, k % nt)])
    }

    fn bilinear<T>(&self, u: &[T], p: Vec3) -> Option<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let (phi, theta) = self.local_angles(p);
        if self.cap && phi > self.phi_max + 1e-12 {
            return None;
        }
        let s = phi / self.dphi - 0.5;
        let mut j0 = s.floor() as isize;
        if self.cap && j0 >= self.n_phi as isize - 1 {
            j0 = self.n_phi as isize - 2;
        }
        let fs = (s - j0 as f64).clamp(0.0, 1.0);
        let t = theta / self.dtheta;
        let k0 = (t.floor() as usize) % self.n_theta;
        let ft = t - t.floor();
        let k1 = (k0 + 1) % self.n_theta;
        let a = self.sample(u, j0, k0)? * (1.0 - ft) + self.sample(u, j0, k1)? * ft;
        let b = self.sample(u, j0 + 1, k0)? * (1.0 - ft) + self.sample(u, j0 + 1, k1)? * ft;
        Some(a * (1.0 - fs) + b * fs)
    }

    /// Bilinear interpolation in (φ, θ); `None` outside a cap.
    pub fn interpolate(&self, u: &[C64], p: Vec3) -> Option<C64> {
        self.bilinear(u, p)
    }

    pub fn interpolate_scalar(&self, u: &[f64], p: Vec3) -> Option<f64> {
        self.bilinear(u, p)
    }

    /// Tangential derivative pair `(∂_φ u / R, ∂_θ u / (R sin φ))` per node:
    /// central differences, with the mirrored ring across a pole and
    /// one-sided differences on the outer ring of a cap.
    pub fn tangential_gradient(&self, u: &[C64]) -> Vec<[C64; 2]> {
        let nt = self.n_theta;
        crate::par::map_indexed(self.len(), |idx| {
            let j = idx / nt;
            let k = idx % nt;
            let r = self.radius;
            let phi = self.phi(j);
            let up = u[self.index(j, (k + 1) % nt)];
            let um = u[self.index(j, (k + nt - 1) % nt)];
            let d_theta = (up - um) / (2.0 * self.dtheta * r * phi.sin());
            let d_phi = if self.is_outer_ring(j) {
                (u[idx] - u[self.index(j - 1, k)]) / (self.dphi * r)
            } else {
                let hi = self.sample(u, j as isize + 1, k).expect("inner ring");
                let lo = self.sample(u, j as isize - 1, k).expect("mirror ring");
                (hi - lo) / (2.0 * self.dphi * r)
            };
            [d_phi, d_theta]
        })
    }

    /// Field samples along the boundary circle of `disc`, closed (last
    /// sample repeats the first). Uses at least `max(32, perimeter/spacing)`
    /// samples.
    pub fn circle_trace(
        &self,
        u: &[C64],
        disc: &SphericalDisc,
        samples: Option<usize>,
    ) -> Result<Vec<C64>, GeometryError> {
        let min = (disc.perimeter() / self.grid_scale()).ceil() as usize;
        let n = samples.unwrap_or(0).max(min).max(32);
        let scaled = disc.rescaled(self.radius);
        scaled
            .boundary_points(n)
            .into_iter()
            .map(|p| {
                self.interpolate(u, p).ok_or_else(|| GeometryError::UnresolvedDisc {
                    rho: disc.rho,
                    reason: "boundary circle leaves the grid cap".into(),
                })
            })
            .collect()
    }

    /// Longest edge between adjacent nodes in the arc-length metric.
    pub fn max_gap(&self) -> f64 {
        let max_sin = if self.phi_max >= PI / 2.0 {
            1.0
        } else {
            self.phi_max.sin()
        };
        self.radius * self.dphi.max(self.dtheta * max_sin)
    }

    /// Grid direction nearest to `p` in angle, by ring/longitude rounding.
    pub fn nearest_node(&self, p: Vec3) -> usize {
        let (phi, theta) = self.local_angles(p);
        let j = ((phi / self.dphi - 0.5).round().max(0.0) as usize).min(self.n_phi - 1);
        let k = ((theta / self.dtheta).round() as usize) % self.n_theta;
        self.index(j, k)
    }

    /// Angular distance from the grid poles; structures closer than a few
    /// ring spacings are poorly resolved.
    pub fn pole_clearance(&self, p: Vec3) -> f64 {
        let z = dot(self.frame.cols[2], normalize(p)).clamp(-1.0, 1.0);
        let a = z.acos();
        if self.cap {
            a
        } else {
            a.min(PI - a)
        }
    }
}

impl Stencil for SphereGrid {
    fn len(&self) -> usize {
        self.n_phi * self.n_theta
    }

    fn is_active(&self, _i: usize) -> bool {
        true
    }

    fn is_fixed(&self, i: usize) -> bool {
        self.is_outer_ring(i / self.n_theta)
    }

    fn node_weight(&self, i: usize) -> f64 {
        self.weight(i)
    }

    #[inline]
    fn visit_edges<F: FnMut(usize, f64)>(&self, idx: usize, mut f: F) {
        let nt = self.n_theta;
        let j = idx / nt;
        let k = idx % nt;
        let wt = self.phi_weight(j) / (self.phi(j).sin() * self.dtheta);
        f(self.index(j, (k + 1) % nt), wt);
        f(self.index(j, (k + nt - 1) % nt), wt);
        if j > 0 {
            let w = (self.phi(j) - 0.5 * self.dphi).sin() * self.dtheta / self.dphi;
            f(idx - nt, w);
        }
        if j + 1 < self.n_phi {
            let w = (self.phi(j) + 0.5 * self.dphi).sin() * self.dtheta / self.dphi;
            f(idx + nt, w);
        }
    }

    fn grid_scale(&self) -> f64 {
        self.radius * self.dphi
    }

    fn node_position(&self, i: usize) -> Vec3 {
        self.position(i)
    }

    fn interpolate_at(&self, u: &[C64], p: Vec3) -> Option<C64> {
        self.interpolate(u, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_and_moment() {
        let g = SphereGrid::full(1.0, 128, 256).unwrap();
        assert!((g.total_weight() - 4.0 * PI).abs() < 1e-3 * 4.0 * PI);
        let x2 = g.scalar_from_fn(|p| p[0] * p[0]);
        let m = crate::par::sum_indexed(g.len(), |i| g.weight(i) * x2[i]);
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-2);
    }

    #[test]
    fn cap_area_matches_closed_form() {
        let d = SphericalDisc::new([0.2, 0.5, -0.3], 0.7, 2.0).unwrap();
        let g = SphereGrid::cap(&d, 64, 128).unwrap();
        let exact = TAU * 4.0 * (1.0 - (0.35f64).cos());
        assert!((g.total_weight() - exact).abs() / exact < 2e-3, "{}", g.total_weight());
        let mask = g.disc_mask(&d);
        assert!(mask.iter().all(|&m| m));
    }

    #[test]
    fn tangential_gradient_of_axial_coordinate() {
        let r = 3.0;
        let g = SphereGrid::full(r, 256, 512).unwrap();
        let u = g.field_from_fn(|p| C64::new(p[2] / r, 0.0));
        let grad = g.tangential_gradient(&u);
        let idx = g.index(127, 0);
        let norm = (grad[idx][0].norm_sqr() + grad[idx][1].norm_sqr()).sqrt();
        assert!((norm - 1.0 / r).abs() < 1e-3);
    }

    #[test]
    fn interpolation_across_pole_is_exact_for_linear_data() {
        let g = SphereGrid::full(1.0, 64, 128).unwrap();
        let u = g.scalar_from_fn(|p| p[2]);
        let v = g.interpolate_scalar(&u, [0.0, 0.0, 1.0]).unwrap();
        // bilinear in (φ,θ) of cos φ: error O(Δφ²)
        assert!((v - 1.0).abs() < (g.dphi() * g.dphi()));
    }

    #[test]
    fn circle_trace_of_ambient_coordinate() {
        let g = SphereGrid::full_with_pole(1.0, 128, 256, [1.0, 0.0, 0.0]).unwrap();
        let u = g.field_from_fn(|p| C64::new(p[0], 0.0));
        let d = SphericalDisc::new([0.0, 0.0, 1.0], 0.4, 1.0).unwrap();
        let tr = g.circle_trace(&u, &d, Some(64)).unwrap();
        let n = tr.len() - 1;
        assert!(n >= 64);
        assert!((tr[0] - tr[n]).norm() < 1e-15);
        let amp = tr.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        assert!((amp - 0.4f64.sin()).abs() < 1e-3);
    }
}
