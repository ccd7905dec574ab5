//! Spherical discs as weighted planar problems.
//!
//! A disc `D̃_ρ(a)` on `S_R` is rotated so that `a` sits at the local pole
//! and sent to the unit disc by the stereographic projection from the
//! antipode followed by the dilation `y = ξ / tan(ρ/2R)`. The energy on the
//! sphere becomes the weighted planar energy with
//! `ε = 1/(2R tan(ρ/2R))` and `p(y) = (1 + tan²(ρ/2R)|y|²)⁻²`.

use super::ConstructError;
use crate::energy::{tangential_energy, weighted_energy};
use crate::geometry::vec3::{normalize, scale, Frame, Vec3};
use crate::geometry::{Lattice, SphereGrid, SphericalDisc, Stencil, VectorField};
use crate::relax::{minimize_weighted, Initializer, SolveOptions, SolveReport};
use crate::topology::degree_on_sphere;
use crate::C64;
use serde::{Deserialize, Serialize};

/// Largest admissible `ρ/R`.
pub const MAX_RELATIVE_RADIUS: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct TransplantChart {
    disc: SphericalDisc,
    frame: Frame,
    t: f64,
}

impl TransplantChart {
    pub fn new(disc: &SphericalDisc) -> Result<Self, ConstructError> {
        let ratio = disc.rho / disc.sphere_radius;
        if !(ratio < MAX_RELATIVE_RADIUS) {
            return Err(ConstructError::Precondition(format!(
                "disc radius ratio ρ/R = {ratio:.4} must be below {MAX_RELATIVE_RADIUS}"
            )));
        }
        Ok(TransplantChart {
            disc: disc.clone(),
            frame: Frame::with_pole(disc.center),
            t: (0.5 * ratio).tan(),
        })
    }

    pub fn disc(&self) -> &SphericalDisc {
        &self.disc
    }

    /// `tan(ρ/2R)`.
    pub fn scale(&self) -> f64 {
        self.t
    }

    /// `1/(2R tan(ρ/2R))`.
    pub fn eps(&self) -> f64 {
        1.0 / (2.0 * self.disc.sphere_radius * self.t)
    }

    pub fn weight(&self, y: [f64; 2]) -> f64 {
        let s = 1.0 + self.t * self.t * (y[0] * y[0] + y[1] * y[1]);
        1.0 / (s * s)
    }

    /// `p` at `|y| = 1`, its minimum on the unit disc.
    pub fn weight_min(&self) -> f64 {
        self.weight([1.0, 0.0])
    }

    /// Planar coordinate of the direction of `x` (any nonzero point).
    pub fn to_plane(&self, x: Vec3) -> [f64; 2] {
        let l = self.frame.to_local(normalize(x));
        let d = self.t * (1.0 + l[2]);
        [l[0] / d, l[1] / d]
    }

    /// Point on `S_R` with planar coordinate `y`.
    pub fn to_sphere(&self, y: [f64; 2]) -> Vec3 {
        let (a, b) = (self.t * y[0], self.t * y[1]);
        let s = a * a + b * b;
        let l = [2.0 * a / (1.0 + s), 2.0 * b / (1.0 + s), (1.0 - s) / (1.0 + s)];
        scale(self.frame.to_global(l), self.disc.sphere_radius)
    }

    pub fn weights_on(&self, lat: &Lattice) -> Vec<f64> {
        (0..lat.len())
            .map(|i| {
                let p = lat.position(i);
                self.weight([p[0], p[1]])
            })
            .collect()
    }
}

/// Unit-disc lattice for `chart` whose spacing, mapped to the sphere at the
/// disc centre, is `physical_spacing`, capped at 1/16.
pub fn chart_lattice(chart: &TransplantChart, physical_spacing: f64) -> Result<Lattice, ConstructError> {
    let hp = (physical_spacing * chart.eps()).min(1.0 / 16.0);
    Ok(Lattice::disc(1.0, hp)?)
}

/// Sample a sphere function at every inside node of the chart lattice.
pub fn transplant<F>(chart: &TransplantChart, lat: &Lattice, f: F) -> Result<VectorField, ConstructError>
where
    F: Fn(Vec3) -> Option<C64> + Sync,
{
    let vals = crate::par::map_indexed(lat.len(), |i| {
        if !lat.is_inside(i) {
            return Some(C64::new(0.0, 0.0));
        }
        let p = lat.position(i);
        f(chart.to_sphere([p[0], p[1]]))
    });
    vals.into_iter()
        .collect::<Option<Vec<C64>>>()
        .map(VectorField)
        .ok_or_else(|| ConstructError::Precondition("sphere data unavailable inside the disc".into()))
}

/// Transplant `u` on `sphere` restricted to `disc` onto the unit disc.
pub fn stereographic_transplant(
    sphere: &SphereGrid,
    u: &[C64],
    disc: &SphericalDisc,
    physical_spacing: f64,
) -> Result<(Lattice, VectorField, TransplantChart), ConstructError> {
    let chart = TransplantChart::new(disc)?;
    let lat = chart_lattice(&chart, physical_spacing)?;
    let field = transplant(&chart, &lat, |x| sphere.interpolate(u, x))?;
    Ok((lat, field, chart))
}

/// Values of a planar field at the sphere nodes inside the chart disc;
/// `None` elsewhere.
pub fn pull_back(chart: &TransplantChart, lat: &Lattice, field: &[C64], sphere: &SphereGrid) -> Vec<Option<C64>> {
    let disc = chart.disc().rescaled(sphere.radius());
    crate::par::map_indexed(sphere.len(), |i| {
        let x = sphere.position(i);
        if !disc.contains(x) {
            return None;
        }
        let y = chart.to_plane(x);
        lat.interpolate_or_nearest(field, [y[0], y[1], 0.0])
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FillOptions {
    /// Spacing of the planar lattice mapped to the sphere; defaults to the
    /// spacing of the data grid.
    pub physical_spacing: Option<f64>,
    pub solve: SolveOptions,
}

impl Default for FillOptions {
    fn default() -> Self {
        FillOptions {
            physical_spacing: None,
            solve: SolveOptions {
                inits: vec![Initializer::Given, Initializer::Harmonic],
                ..SolveOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillReport {
    pub rho: f64,
    pub eps: f64,
    pub weight_min: f64,
    /// `E^(T)(u; ∂D̃)`.
    pub boundary_energy: f64,
    /// `2π/ρ`.
    pub boundary_limit: f64,
    /// Weighted planar energy of the transplanted data, `≈ E^(T)(u; D̃)`.
    pub data_energy: f64,
    /// The same on the sphere grid nodes inside the disc.
    pub data_energy_sphere: f64,
    /// Weighted planar energy of the filling.
    pub energy: f64,
    pub min_modulus: f64,
    pub max_modulus: f64,
    pub solve: SolveReport,
}

/// Minimizer of the disc energy with the boundary values of `u`, solved in
/// the planar chart.
#[derive(Clone, Debug)]
pub struct FilledDisc {
    pub chart: TransplantChart,
    pub lattice: Lattice,
    pub field: VectorField,
    pub report: FillReport,
}

impl FilledDisc {
    /// Filling at the direction of `x`.
    pub fn value_at(&self, x: Vec3) -> C64 {
        let y = self.chart.to_plane(x);
        self.lattice
            .interpolate_or_nearest(&self.field, [y[0], y[1], 0.0])
            .expect("chart lattice covers the unit disc")
    }
}

/// Fill `disc` with a minimizer for the boundary values of `u`. Refuses
/// boundary data of nonzero degree.
pub fn fill_spherical_disc(
    sphere: &SphereGrid,
    u: &[C64],
    disc: &SphericalDisc,
    opts: &FillOptions,
) -> Result<FilledDisc, ConstructError> {
    let degree = degree_on_sphere(sphere, u, disc)?;
    if degree != 0 {
        return Err(ConstructError::NonzeroWinding { degree });
    }
    let spacing = opts.physical_spacing.unwrap_or_else(|| sphere.grid_scale());
    let (lat, g, chart) = stereographic_transplant(sphere, u, disc, spacing)?;
    let p = chart.weights_on(&lat);
    let eps = chart.eps();
    let data_energy = weighted_energy(&lat, &g, eps, &p)?.total;
    let (v, solve) = minimize_weighted(&lat, &p, &g, eps, &opts.solve)?;
    let energy = weighted_energy(&lat, &v, eps, &p)?.total;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in (0..lat.len()).filter(|&i| lat.is_inside(i)) {
        lo = lo.min(v[i].norm());
        hi = hi.max(v[i].norm());
    }
    let mask = sphere.disc_mask(disc);
    let trace = sphere.circle_trace(u, disc, None)?;
    let report = FillReport {
        rho: disc.rho,
        eps,
        weight_min: chart.weight_min(),
        boundary_energy: crate::energy::circle_energy(&trace, disc.euclidean_radius(), 1.0).total,
        boundary_limit: std::f64::consts::TAU / disc.rho,
        data_energy,
        data_energy_sphere: tangential_energy(sphere, u, 1.0, Some(&mask)).total,
        energy,
        min_modulus: lo,
        max_modulus: hi,
        solve,
    };
    Ok(FilledDisc {
        chart,
        lattice: lat,
        field: v,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec3::{angle, norm};

    #[test]
    fn chart_round_trip_and_radius() {
        let disc = SphericalDisc::new([0.3, -0.5, 0.8], 2.0, 40.0).unwrap();
        let c = TransplantChart::new(&disc).unwrap();
        for y in [[0.0, 0.0], [0.3, -0.7], [1.0, 0.0], [-0.2, 0.1]] {
            let x = c.to_sphere(y);
            assert!((norm(x) - 40.0).abs() < 1e-12);
            let z = c.to_plane(x);
            assert!((z[0] - y[0]).abs() < 1e-12 && (z[1] - y[1]).abs() < 1e-12);
        }
        let edge = c.to_sphere([0.0, 1.0]);
        assert!((40.0 * angle(edge, disc.center) - 2.0).abs() < 1e-12);
        assert!(c.weight_min() > 0.96);
    }

    #[test]
    fn gate_on_relative_radius() {
        let disc = SphericalDisc::new([0.0, 0.0, 1.0], 5.0, 40.0).unwrap();
        assert!(matches!(
            TransplantChart::new(&disc),
            Err(ConstructError::Precondition(_))
        ));
    }
}
