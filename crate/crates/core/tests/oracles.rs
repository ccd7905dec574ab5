//! Closed-form values checked against the discrete routines.

use approx::assert_relative_eq;
use std::f64::consts::{LN_2, PI, TAU};
use vortexlab_core::construct::{cone_extension, cone_value};
use vortexlab_core::energy::{gl_energy, harmonic_identities};
use vortexlab_core::geometry::{Lattice, SphereGrid, Stencil, Vec3};
use vortexlab_core::laplace::{harmonic_extension, LaplaceOptions};
use vortexlab_core::profile::solve_profile;
use vortexlab_core::topology::{winding_number, Loop};
use vortexlab_core::C64;

const BALL: f64 = 4.0 * PI / 3.0;

#[test]
fn plane_wave_energy_on_the_unit_ball() {
    // ½ k² |B₁|, no potential. Edges cut by the sphere are dropped, so the
    // Dirichlet term converges at first order from below.
    let k = 2.0;
    let exact = 0.5 * k * k * BALL;
    let rel = |h: f64| {
        let lat = Lattice::ball(1.0, h).unwrap();
        let u = lat.field_from_fn(|x| C64::from_polar(1.0, k * x[0]));
        let e = gl_energy(&lat, &u.0, 0.5, None);
        assert!(e.potential < 1e-20);
        (exact - e.dirichlet) / exact
    };
    let (coarse, fine) = (rel(1.0 / 16.0), rel(1.0 / 32.0));
    assert!(fine > 0.0 && fine < 0.03, "relative deficit {fine}");
    assert!(coarse / fine > 1.7, "deficit ratio {}", coarse / fine);
}

#[test]
fn zero_map_potential_is_a_quarter_volume_over_eps_squared() {
    let lat = Lattice::ball(1.0, 1.0 / 32.0).unwrap();
    let u = lat.field_from_fn(|_| C64::new(0.0, 0.0));
    let eps = 0.5;
    let e = gl_energy(&lat, &u.0, eps, None);
    assert_eq!(e.dirichlet, 0.0);
    assert_relative_eq!(e.potential, BALL / (4.0 * eps * eps), max_relative = 0.01);
}

#[test]
fn linear_function_trace_terms() {
    // w = x₁ on B₁: ∫|∇w|² = 4π/3, ∫_S |∇_T w|² = ∫_S (1 − x₁²) = 8π/3,
    // ∫_S |∂_n w|² = ∫_S x₁² = 4π/3.
    let h = 1.0 / 32.0;
    let lat = Lattice::ball(1.0 + 3.0 * h, h).unwrap();
    let w = lat.scalar_from_fn(|x| x[0]);
    let rec = harmonic_identities(&lat, &w, 1.0, 200, 64, 1e-6).unwrap();
    assert_relative_eq!(rec.interior, BALL, max_relative = 0.01);
    assert_relative_eq!(rec.tangential, 2.0 * BALL, max_relative = 0.01);
    assert_relative_eq!(rec.normal, BALL, max_relative = 0.01);
    assert_relative_eq!(rec.lhs, rec.rhs, max_relative = 0.01);
}

#[test]
fn quadratic_harmonic_is_reproduced_by_the_extension() {
    let h = 1.0 / 16.0;
    let lat = Lattice::ball(1.0, h).unwrap();
    let exact = lat.scalar_from_fn(|x| x[0] * x[0] - x[1] * x[1] + 0.5 * x[2]);
    let free: Vec<bool> = (0..lat.len()).map(|i| lat.is_interior(i)).collect();
    let mut x: Vec<f64> = (0..lat.len()).map(|i| if free[i] { 0.0 } else { exact[i] }).collect();
    let rep = harmonic_extension(&lat, &mut x, &free, &LaplaceOptions::default());
    assert!(rep.converged);
    let err = (0..lat.len())
        .filter(|&i| free[i])
        .map(|i| (x[i] - exact[i]).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-2, "max error {err}");
}

#[test]
fn sphere_area() {
    let r = 3.0;
    let g = SphereGrid::full(r, 96, 192).unwrap();
    assert_relative_eq!(g.total_weight(), 4.0 * PI * r * r, max_relative = 1e-3);
}

#[test]
fn profile_solves_the_radial_equation() {
    // f'' + f'/r − f/r² + f(1 − f²) = 0, by centred differences on the table.
    let p = solve_profile(40.0, 1e-10).unwrap();
    let d = 1e-3;
    for k in 1..=30 {
        let r = 0.5 * k as f64;
        let (fm, f, fp) = (p.eval(r - d), p.eval(r), p.eval(r + d));
        let res = (fp - 2.0 * f + fm) / (d * d) + (fp - fm) / (2.0 * d * r) - f / (r * r) + f * (1.0 - f * f);
        assert!(res.abs() < 1e-4, "residual {res} at r = {r}");
    }
    // Far field 1 − f ≈ 1/(2r²).
    let r = 30.0;
    assert_relative_eq!(1.0 - p.eval(r), 0.5 / (r * r), max_relative = 0.01);
}

#[test]
fn vortex_disc_energy_grows_like_pi_log() {
    let p = solve_profile(40.0, 1e-10).unwrap();
    let gap = p.disc_energy(40.0) - p.disc_energy(20.0);
    assert!((gap - PI * LN_2).abs() < 2e-3, "gap {gap}");
}

#[test]
fn winding_of_powers() {
    for n in -4i32..=4 {
        let samples: Vec<C64> = (0..64)
            .map(|k| C64::from_polar(2.0, n as f64 * TAU * k as f64 / 64.0))
            .collect();
        assert_eq!(winding_number(&Loop::new(samples).unwrap()).unwrap(), n);
    }
}

#[test]
fn cone_value_matches_the_faces() {
    let u = |x: [f64; 2]| C64::from_polar(1.0, x[0]);
    let v = |x: [f64; 2]| C64::from_polar(1.0, x[1]);
    let (radius, height) = (2.0, 1.0);
    for x in [[0.3, -0.4], [1.0, 1.0], [-0.2, 0.1]] {
        // Top face inside the cone carries u; bottom face carries v.
        let top = cone_value(u, v, x, height * (1.0 - 1e-12), radius, height);
        assert!((top - u(x)).norm() < 1e-9);
        assert_eq!(cone_value(u, v, x, 0.0, radius, height), v(x));
    }
    // Outside the cone the value is v.
    let x = [1.9, 0.0];
    assert_eq!(cone_value(u, v, x, 0.2, radius, height), v(x));
}

#[test]
fn cone_extension_of_equal_data_is_a_product() {
    let disc = Lattice::disc(1.5, 0.05).unwrap();
    let v = disc.field_from_fn(|x: Vec3| C64::from_polar(1.0 - 0.1 * x[0] * x[0], 0.8 * x[1]));
    let height = 2.0;
    let (cyl, field, rep) = cone_extension(&disc, &v.0, &v.0, height).unwrap();
    assert_eq!(rep.trace_defect, 0.0);
    assert_relative_eq!(rep.energy, height * rep.energy_v, max_relative = 1e-12);
    // Every layer equals v.
    let plane = disc.len();
    for idx in (0..cyl.len()).filter(|&i| cyl.is_inside(i)) {
        assert_eq!(field[idx], v[idx % plane]);
    }
}
