use super::{GeometryError, SphereGrid, Stencil, Vec3, VectorField};
use crate::C64;
use serde::{Deserialize, Serialize};

const INSIDE: u8 = 1;
const BOUNDARY: u8 = 2;

/// Shape carved out of the Cartesian lattice. All shapes are centered at
/// the origin; cylinders span `0 ≤ z ≤ height`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LatticeShape {
    Disc { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Ball { radius: f64 },
    Shell { inner: f64, outer: f64 },
    Cylinder { radius: f64, height: f64 },
}

impl LatticeShape {
    pub fn dim(&self) -> usize {
        match self {
            LatticeShape::Disc { .. } | LatticeShape::Annulus { .. } => 2,
            _ => 3,
        }
    }

    fn contains(&self, p: Vec3, tol: f64) -> bool {
        match *self {
            LatticeShape::Disc { radius } => p[0].hypot(p[1]) <= radius + tol,
            LatticeShape::Annulus { inner, outer } => {
                let r = p[0].hypot(p[1]);
                r >= inner - tol && r <= outer + tol
            }
            LatticeShape::Ball { radius } => super::vec3::norm(p) <= radius + tol,
            LatticeShape::Shell { inner, outer } => {
                let r = super::vec3::norm(p);
                r >= inner - tol && r <= outer + tol
            }
            LatticeShape::Cylinder { radius, .. } => p[0].hypot(p[1]) <= radius + tol,
        }
    }

    /// Exact measure (area or volume) of the continuum shape.
    pub fn measure(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            LatticeShape::Disc { radius } => PI * radius * radius,
            LatticeShape::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            LatticeShape::Ball { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            LatticeShape::Shell { inner, outer } => 4.0 / 3.0 * PI * (outer.powi(3) - inner.powi(3)),
            LatticeShape::Cylinder { radius, height } => PI * radius * radius * height,
        }
    }
}

/// Masked Cartesian lattice with per-node quadrature weights.
///
/// Node `(i, j, k)` has flat index `i + nx (j + ny k)`. Two-dimensional
/// lattices have `nz = 1`. Weights factor as `wx[i] wy[j] wz[k]`; the
/// cylinder uses trapezoid weights along `z`, every other axis uses `h`.
#[derive(Clone, Debug)]
pub struct Lattice {
    shape: LatticeShape,
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    axis_weights: [Vec<f64>; 3],
    flags: Vec<u8>,
}

fn half_count(extent: f64, h: f64) -> usize {
    (extent / h - 1e-9).ceil().max(1.0) as usize
}

impl Lattice {
    pub fn new(shape: LatticeShape, h: f64) -> Result<Self, GeometryError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GeometryError::InvalidGrid(format!("spacing {h} must be positive")));
        }
        let (dims, spacing, origin, zweights) = match shape {
            LatticeShape::Disc { radius } | LatticeShape::Annulus { outer: radius, .. } => {
                let m = half_count(radius, h);
                let n = 2 * m + 1;
                let o = -(m as f64) * h;
                ([n, n, 1], [h, h, 1.0], [o, o, 0.0], vec![1.0])
            }
            LatticeShape::Ball { radius } | LatticeShape::Shell { outer: radius, .. } => {
                let m = half_count(radius, h);
                let n = 2 * m + 1;
                let o = -(m as f64) * h;
                ([n, n, n], [h, h, h], [o, o, o], vec![h; n])
            }
            LatticeShape::Cylinder { radius, height } => {
                let m = half_count(radius, h);
                let n = 2 * m + 1;
                let o = -(m as f64) * h;
                let nz = ((height / h).round() as usize).max(2) + 1;
                let hz = height / (nz - 1) as f64;
                let mut wz = vec![hz; nz];
                wz[0] = 0.5 * hz;
                wz[nz - 1] = 0.5 * hz;
                ([n, n, nz], [h, h, hz], [o, o, 0.0], wz)
            }
        };
        match shape {
            LatticeShape::Annulus { inner, outer } | LatticeShape::Shell { inner, outer } => {
                if !(inner >= 0.0 && inner < outer) {
                    return Err(GeometryError::InvalidGrid(format!(
                        "inner radius {inner} must lie in [0, {outer})"
                    )));
                }
            }
            _ => {}
        }
        if dims[0] < 3 {
            return Err(GeometryError::InvalidGrid("fewer than 3 nodes per axis".into()));
        }
        let axis_weights = [vec![spacing[0]; dims[0]], vec![spacing[1]; dims[1]], zweights];
        let mut lat = Lattice {
            shape,
            dims,
            spacing,
            origin,
            axis_weights,
            flags: vec![0; dims[0] * dims[1] * dims[2]],
        };
        let tol = 1e-9 * h;
        for idx in 0..lat.len() {
            if lat.shape.contains(lat.position(idx), tol) {
                lat.flags[idx] = INSIDE;
            }
        }
        for idx in 0..lat.len() {
            if lat.flags[idx] & INSIDE == 0 {
                continue;
            }
            let c = lat.coords(idx);
            let mut missing = false;
            for axis in 0..lat.dim() {
                for step in [-1i64, 1] {
                    match lat.offset(c, axis, step) {
                        Some(j) if lat.flags[j] & INSIDE != 0 => {}
                        _ => missing = true,
                    }
                }
            }
            if missing {
                lat.flags[idx] |= BOUNDARY;
            }
        }
        Ok(lat)
    }

    pub fn disc(radius: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(LatticeShape::Disc { radius }, h)
    }

    pub fn ball(radius: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(LatticeShape::Ball { radius }, h)
    }

    pub fn annulus(inner: f64, outer: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(LatticeShape::Annulus { inner, outer }, h)
    }

    pub fn shell(inner: f64, outer: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(LatticeShape::Shell { inner, outer }, h)
    }

    pub fn cylinder(radius: f64, height: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(LatticeShape::Cylinder { radius, height }, h)
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// In-plane spacing `h`.
    pub fn h(&self) -> f64 {
        self.spacing[0]
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    fn offset(&self, c: [usize; 3], axis: usize, step: i64) -> Option<usize> {
        let v = c[axis] as i64 + step;
        if v < 0 || v >= self.dims[axis] as i64 {
            return None;
        }
        let mut d = c;
        d[axis] = v as usize;
        Some(self.index(d[0], d[1], d[2]))
    }

    pub fn position(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        [
            self.origin[0] + c[0] as f64 * self.spacing[0],
            self.origin[1] + c[1] as f64 * self.spacing[1],
            self.origin[2] + c[2] as f64 * self.spacing[2],
        ]
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.flags[idx] & INSIDE != 0
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.flags[idx] & BOUNDARY != 0
    }

    /// Inside and not a boundary node: every axis neighbour is inside.
    pub fn is_interior(&self, idx: usize) -> bool {
        self.flags[idx] == INSIDE
    }

    pub fn inside_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f & INSIDE != 0).count()
    }

    pub fn weight(&self, idx: usize) -> f64 {
        if !self.is_inside(idx) {
            return 0.0;
        }
        let c = self.coords(idx);
        self.axis_weights[0][c[0]] * self.axis_weights[1][c[1]] * self.axis_weights[2][c[2]]
    }

    pub fn weights(&self) -> Vec<f64> {
        crate::par::map_indexed(self.len(), |i| self.weight(i))
    }

    pub fn total_weight(&self) -> f64 {
        crate::par::sum_indexed(self.len(), |i| self.weight(i))
    }

    /// Evaluate `f` at every inside node; zero elsewhere.
    pub fn field_from_fn<F>(&self, f: F) -> VectorField
    where
        F: Fn(Vec3) -> C64 + Sync + Send,
    {
        VectorField(crate::par::map_indexed(self.len(), |i| {
            if self.is_inside(i) {
                f(self.position(i))
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn scalar_from_fn<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(Vec3) -> f64 + Sync + Send,
    {
        crate::par::map_indexed(
            self.len(),
            |i| if self.is_inside(i) { f(self.position(i)) } else { 0.0 },
        )
    }

    /// Node mask selected by a predicate on positions (inside nodes only).
    pub fn mask_where<F>(&self, f: F) -> Vec<bool>
    where
        F: Fn(Vec3) -> bool + Sync + Send,
    {
        crate::par::map_indexed(self.len(), |i| self.is_inside(i) && f(self.position(i)))
    }

    /// Multilinear interpolation weights at `p`; `None` unless every corner
    /// node is inside.
    fn stencil_at(&self, p: Vec3) -> Option<([usize; 8], [f64; 8], usize)> {
        let d = self.dim();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..d {
            let t = (p[a] - self.origin[a]) / self.spacing[a];
            let n = self.dims[a];
            if !(t >= -1e-9 && t <= (n - 1) as f64 + 1e-9) {
                return None;
            }
            let mut b = t.floor().max(0.0) as usize;
            if b >= n - 1 {
                b = n - 2;
            }
            base[a] = b;
            frac[a] = (t - b as f64).clamp(0.0, 1.0);
        }
        let corners = 1usize << d;
        let mut idx = [0usize; 8];
        let mut w = [0.0f64; 8];
        for c in 0..corners {
            let mut cc = base;
            let mut wc = 1.0;
            for a in 0..d {
                if c >> a & 1 == 1 {
                    cc[a] += 1;
                    wc *= frac[a];
                } else {
                    wc *= 1.0 - frac[a];
                }
            }
            let id = self.index(cc[0], cc[1], cc[2]);
            if !self.is_inside(id) {
                if wc == 0.0 {
                    // Corner carries no weight; reuse a valid node.
                    idx[c] = usize::MAX;
                    continue;
                }
                return None;
            }
            idx[c] = id;
            w[c] = wc;
        }
        Some((idx, w, corners))
    }

    /// Bilinear (2D) or trilinear (3D) interpolation of a complex field.
    pub fn interpolate(&self, u: &[C64], p: Vec3) -> Option<C64> {
        let (idx, w, n) = self.stencil_at(p)?;
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..n {
            if idx[c] != usize::MAX {
                acc += u[idx[c]] * w[c];
            }
        }
        Some(acc)
    }

    pub fn interpolate_scalar(&self, u: &[f64], p: Vec3) -> Option<f64> {
        let (idx, w, n) = self.stencil_at(p)?;
        let mut acc = 0.0;
        for c in 0..n {
            if idx[c] != usize::MAX {
                acc += u[idx[c]] * w[c];
            }
        }
        Some(acc)
    }

    /// Closest inside node within two spacings of `p`.
    pub fn nearest_inside(&self, p: Vec3) -> Option<usize> {
        let d = self.dim();
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..3 {
            if a < d {
                let t = ((p[a] - self.origin[a]) / self.spacing[a]).round() as i64;
                lo[a] = (t - 2).max(0);
                hi[a] = (t + 2).min(self.dims[a] as i64 - 1);
            }
        }
        let mut best: Option<(f64, usize)> = None;
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let idx = self.index(i as usize, j as usize, k as usize);
                    if !self.is_inside(idx) {
                        continue;
                    }
                    let q = self.position(idx);
                    let dist: f64 = (0..d).map(|a| (q[a] - p[a]).powi(2)).sum();
                    if best.is_none_or(|b| dist < b.0) {
                        best = Some((dist, idx));
                    }
                }
            }
        }
        best.map(|b| b.1)
    }

    /// [`Lattice::interpolate`], falling back to the nearest inside node
    /// outside the interpolation hull.
    pub fn interpolate_or_nearest(&self, u: &[C64], p: Vec3) -> Option<C64> {
        self.interpolate(u, p).or_else(|| self.nearest_inside(p).map(|i| u[i]))
    }

    /// Ordered samples of the bounding circle `C_R` of a disc lattice
    /// (closed: the last sample repeats the first).
    pub fn boundary_ring(&self, samples: usize) -> Vec<Vec3> {
        let r = match self.shape {
            LatticeShape::Disc { radius }
            | LatticeShape::Annulus { outer: radius, .. }
            | LatticeShape::Cylinder { radius, .. } => radius,
            LatticeShape::Ball { radius } | LatticeShape::Shell { outer: radius, .. } => radius,
        };
        (0..=samples)
            .map(|k| {
                let t = std::f64::consts::TAU * (k % samples) as f64 / samples as f64;
                [r * t.cos(), r * t.sin(), 0.0]
            })
            .collect()
    }

    /// Latitude-longitude parametrization of the bounding sphere `S_R`
    /// of a ball or shell lattice, with node gaps at most `2h`.
    pub fn boundary_shell(&self) -> Result<SphereGrid, GeometryError> {
        let r = match self.shape {
            LatticeShape::Ball { radius } | LatticeShape::Shell { outer: radius, .. } => radius,
            _ => {
                return Err(GeometryError::InvalidGrid(
                    "boundary shell needs a 3D ball or shell".into(),
                ))
            }
        };
        let n_phi = ((std::f64::consts::PI * r / self.h()).ceil() as usize).max(8);
        SphereGrid::full(r, n_phi, 2 * n_phi)
    }

    /// Central differences at nodes whose two axis neighbours are inside,
    /// one-sided differences where only one is. Entry `a` of each node is
    /// `∂_a u`; unused axes are zero.
    pub fn gradient(&self, u: &[C64]) -> Vec<[C64; 3]> {
        let zero = C64::new(0.0, 0.0);
        crate::par::map_indexed(self.len(), |idx| {
            let mut g = [zero; 3];
            if !self.is_inside(idx) {
                return g;
            }
            let c = self.coords(idx);
            for (a, ga) in g.iter_mut().enumerate().take(self.dim()) {
                let h = self.spacing[a];
                let lo = self.offset(c, a, -1).filter(|&j| self.is_inside(j));
                let hi = self.offset(c, a, 1).filter(|&j| self.is_inside(j));
                *ga = match (lo, hi) {
                    (Some(l), Some(r)) => (u[r] - u[l]) / (2.0 * h),
                    (None, Some(r)) => (u[r] - u[idx]) / h,
                    (Some(l), None) => (u[idx] - u[l]) / h,
                    (None, None) => zero,
                };
            }
            g
        })
    }
}

impl Stencil for Lattice {
    fn len(&self) -> usize {
        self.flags.len()
    }

    fn is_active(&self, i: usize) -> bool {
        self.is_inside(i)
    }

    fn is_fixed(&self, i: usize) -> bool {
        self.is_boundary(i)
    }

    fn node_weight(&self, i: usize) -> f64 {
        self.weight(i)
    }

    #[inline]
    fn visit_edges<F: FnMut(usize, f64)>(&self, idx: usize, mut f: F) {
        let c = self.coords(idx);
        let aw = &self.axis_weights;
        let wxyz = [aw[0][c[0]], aw[1][c[1]], aw[2][c[2]]];
        let strides = [1, self.dims[0], self.dims[0] * self.dims[1]];
        for a in 0..self.dim() {
            let mut cross = 1.0;
            for b in 0..3 {
                if b != a {
                    cross *= wxyz[b];
                }
            }
            let we = cross / self.spacing[a];
            if c[a] > 0 {
                let j = idx - strides[a];
                if self.flags[j] & INSIDE != 0 {
                    f(j, we);
                }
            }
            if c[a] + 1 < self.dims[a] {
                let j = idx + strides[a];
                if self.flags[j] & INSIDE != 0 {
                    f(j, we);
                }
            }
        }
    }

    fn grid_scale(&self) -> f64 {
        self.spacing[0]
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
    use std::f64::consts::PI;

    #[test]
    fn disc_weights_approximate_area() {
        for &(r, h) in &[(1.0, 0.05), (3.0, 0.1), (10.0, 0.25)] {
            let lat = Lattice::disc(r, h).unwrap();
            let rel = (lat.total_weight() - PI * r * r).abs() / (PI * r * r);
            assert!(rel < 2.0 * h / r, "r={r} h={h} rel={rel}");
        }
    }

    #[test]
    fn ball_weights_approximate_volume() {
        let lat = Lattice::ball(1.0, 0.05).unwrap();
        let rel = (lat.total_weight() - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0);
        assert!(rel < 0.01, "rel={rel}");
    }

    #[test]
    fn cylinder_weights_are_exact_along_z() {
        let lat = Lattice::cylinder(2.0, 3.0, 0.1).unwrap();
        let exact = PI * 4.0 * 3.0;
        let rel = (lat.total_weight() - exact).abs() / exact;
        assert!(rel < 2.0 * 0.1 / 2.0, "rel={rel}");
    }

    #[test]
    fn interior_nodes_have_all_neighbours() {
        let lat = Lattice::disc(2.0, 0.2).unwrap();
        for i in 0..lat.len() {
            if lat.is_interior(i) {
                let mut n = 0;
                lat.visit_edges(i, |_, _| n += 1);
                assert_eq!(n, 4);
            }
        }
        let origin = lat.index(10, 10, 0);
        assert!(lat.is_interior(origin));
        assert_eq!(lat.position(origin), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_of_linear_is_exact_inside() {
        let lat = Lattice::disc(1.0, 0.1).unwrap();
        let u = lat.field_from_fn(|p| C64::new(p[0], 0.0));
        let g = lat.gradient(&u);
        for i in 0..lat.len() {
            if lat.is_interior(i) {
                assert!((g[i][0].re - 1.0).abs() < 1e-12);
                assert!(g[i][1].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_second_order_on_smooth_field() {
        let lat = Lattice::disc(1.0, 0.1).unwrap();
        let u = lat.field_from_fn(|p| C64::new(p[0].cos(), p[0].sin()));
        let g = lat.gradient(&u);
        let mut max_err: f64 = 0.0;
        for i in 0..lat.len() {
            if lat.is_interior(i) {
                let x = lat.position(i)[0];
                let exact = C64::new(-x.sin(), x.cos());
                max_err = max_err.max((g[i][0] - exact).norm());
            }
        }
        assert!(max_err <= 2e-3, "max_err={max_err}");
    }

    #[test]
    fn trilinear_is_exact_on_linear_fields() {
        let lat = Lattice::ball(1.5, 0.1).unwrap();
        let u = lat.field_from_fn(|p| C64::new(p[0] + 2.0 * p[1], p[2]));
        let p = [0.123, -0.456, 0.789];
        let v = lat.interpolate(&u, p).unwrap();
        assert!((v.re - (0.123 - 0.912)).abs() < 1e-12);
        assert!((v.im - 0.789).abs() < 1e-12);
        assert!(lat.interpolate(&u, [1.6, 0.0, 0.0]).is_none());
    }
}
