//! Grids, discrete fields and discrete calculus.
//!
//! Two grid families cover every domain used by the experiments:
//!
//! * [`Lattice`]: a masked Cartesian lattice for discs, annuli, balls,
//!   spherical shells and cylinders. Nodes inside the shape carry a
//!   quadrature weight; inside nodes with a missing axis neighbour are the
//!   Dirichlet (boundary) nodes.
//! * [`SphereGrid`]: a latitude-longitude grid on a sphere of radius `R`, or
//!   on a geodesic cap around an arbitrary center (the same grid rotated so
//!   that its pole sits at the cap center). Rings sit at half-integer
//!   colatitudes, so no node lies on a pole.
//!
//! Both implement [`Stencil`], the edge-based description from which the
//! energy module builds its Dirichlet and potential terms.

mod io;
mod lattice;
mod sphere;
pub mod vec3;

pub use io::{read_field, write_field, write_field_csv, FieldHeader, GridKind};
pub use lattice::{Lattice, LatticeShape};
pub use sphere::{SphereGrid, SphericalDisc};
pub use vec3::{Frame, Vec3};

use crate::C64;
use std::ops::{Deref, DerefMut};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("radius {r} outside the admissible range ({lo}, {hi})")]
    RadiusOutOfRange { r: f64, lo: f64, hi: f64 },
    #[error("disc of geodesic radius {rho} is not resolved by the grid: {reason}")]
    UnresolvedDisc { rho: f64, reason: String },
    #[error("invalid grid parameters: {0}")]
    InvalidGrid(String),
    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("field i/o: {0}")]
    Io(String),
}

/// A complex (ℝ²-valued) field with one value per grid node.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct VectorField(pub Vec<C64>);

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        VectorField(vec![C64::new(0.0, 0.0); n])
    }

    pub fn constant(n: usize, value: C64) -> Self {
        VectorField(vec![value; n])
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Deref for VectorField {
    type Target = Vec<C64>;
    fn deref(&self) -> &Vec<C64> {
        &self.0
    }
}

impl DerefMut for VectorField {
    fn deref_mut(&mut self) -> &mut Vec<C64> {
        &mut self.0
    }
}

impl From<Vec<C64>> for VectorField {
    fn from(v: Vec<C64>) -> Self {
        VectorField(v)
    }
}

/// Edge-based description of a grid, shared by all discrete energies.
///
/// The discrete Dirichlet energy is `½ Σ_edges w_e |u_j − u_i|²` and the
/// potential energy `Σ_i w_i (1 − |u_i|²)² / (4ε²)`.
pub trait Stencil: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node belongs to the domain.
    fn is_active(&self, i: usize) -> bool;

    /// Node carries Dirichlet data.
    fn is_fixed(&self, i: usize) -> bool;

    /// Quadrature weight of node `i` (zero for inactive nodes).
    fn node_weight(&self, i: usize) -> f64;

    /// Call `f(j, w_e)` for every active neighbour `j` of the active node `i`.
    fn visit_edges<F: FnMut(usize, f64)>(&self, i: usize, f: F);

    /// Typical node spacing, used to scale residuals.
    fn grid_scale(&self) -> f64;

    /// Physical position of node `i`.
    fn node_position(&self, i: usize) -> Vec3;

    /// Interpolated value of `u` at an arbitrary point, when the grid
    /// supports it and `p` is resolved.
    fn interpolate_at(&self, _u: &[C64], _p: Vec3) -> Option<C64> {
        None
    }
}

/// Weighted sum of a per-node density over the grid or over a node mask.
pub fn integrate<S: Stencil>(grid: &S, density: &[f64], region: Option<&[bool]>) -> f64 {
    assert_eq!(density.len(), grid.len());
    crate::par::sum_indexed(grid.len(), |i| {
        if !grid.is_active(i) || region.is_some_and(|m| !m[i]) {
            0.0
        } else {
            grid.node_weight(i) * density[i]
        }
    })
}

/// Interpolate a ball or shell field onto a latitude-longitude sphere of
/// radius `r` centred at the origin.
///
/// The resolution defaults to rings spaced by about `h` and must leave two
/// lattice spacings to the domain boundary.
pub fn restrict_to_sphere(
    lat: &Lattice,
    u: &[C64],
    r: f64,
    n_phi: Option<usize>,
) -> Result<(SphereGrid, VectorField), GeometryError> {
    let h = lat.h();
    let (lo, hi) = match *lat.shape() {
        LatticeShape::Ball { radius } => (2.0 * h, radius - 2.0 * h),
        LatticeShape::Shell { inner, outer } => (inner + 2.0 * h, outer - 2.0 * h),
        _ => return Err(GeometryError::InvalidGrid("restriction needs a ball or shell".into())),
    };
    if !(r > lo && r < hi) {
        return Err(GeometryError::RadiusOutOfRange { r, lo, hi });
    }
    if u.len() != lat.len() {
        return Err(GeometryError::LengthMismatch {
            got: u.len(),
            expected: lat.len(),
        });
    }
    let n_phi = n_phi.unwrap_or_else(|| ((std::f64::consts::PI * r / h).ceil() as usize).max(16));
    let sphere = SphereGrid::full(r, n_phi, 2 * n_phi)?;
    let vals = crate::par::map_indexed(sphere.len(), |i| {
        lat.interpolate(u, sphere.position(i))
            .unwrap_or(C64::new(f64::NAN, f64::NAN))
    });
    let field = VectorField(vals);
    if !field.is_finite() {
        return Err(GeometryError::UnresolvedDisc {
            rho: r,
            reason: "sphere leaves the lattice mask".into(),
        });
    }
    Ok((sphere, field))
}
