//! Numerical laboratory for the three-dimensional Ginzburg-Landau energy
//!
//! ```text
//! E_eps(u; D) = ∫_D ½|∇u|² + (1 - |u|²)² / (4 eps²)
//! ```
//!
//! with complex-valued order parameter `u`. The crate provides masked
//! Cartesian lattices and latitude-longitude sphere grids, the discrete
//! energies on them, the radial degree-one vortex profile, an L-BFGS energy
//! minimizer with Dirichlet data, winding numbers, the bad-disc covering and
//! ball-growth procedure on spheres, the competitor-map constructions
//! (stereographic transplant, cone extension, annulus interpolation,
//! harmonic phase extension) and the arithmetic of the threshold chain used
//! to certify small-energy regularity.
//!
//! Node loops run data-parallel through rayon when the `parallel` feature is
//! enabled (the default). Reductions always use a fixed chunking and a
//! pairwise tree, so results are bit-identical with and without the feature.

pub mod bad_discs;
pub mod certify;
pub mod construct;
pub mod data;
pub mod energy;
pub mod geometry;
pub mod laplace;
pub mod par;
pub mod profile;
pub mod relax;
pub mod topology;

pub use num_complex::Complex64 as C64;
