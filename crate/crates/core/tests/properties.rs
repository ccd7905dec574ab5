use proptest::prelude::*;
use std::f64::consts::TAU;
use vortexlab_core::bad_discs::{grow, merge, DiscFamily};
use vortexlab_core::certify::{r1_constant, r1_defect, CertificateParams};
use vortexlab_core::geometry::vec3::normalize;
use vortexlab_core::geometry::SphericalDisc;
use vortexlab_core::par::pairwise_sum;

fn unit(a: f64, b: f64) -> [f64; 3] {
    [a.cos() * b.cos(), a.sin() * b.cos(), b.sin()]
}

/// Up to six small disjoint discs on the unit sphere.
fn family() -> impl Strategy<Value = DiscFamily> {
    prop::collection::vec((0.0..TAU, -1.2..1.2f64, 0.005..0.05f64), 2..7).prop_map(|raw| {
        let mut discs: Vec<SphericalDisc> = Vec::new();
        for (a, b, r) in raw {
            let d = SphericalDisc::new(unit(a, b), r, 1.0).unwrap();
            if discs.iter().all(|e| e.distance_to(d.center) > e.rho + d.rho) {
                discs.push(d);
            }
        }
        DiscFamily {
            sphere_radius: 1.0,
            discs,
            degrees: None,
        }
    })
}

proptest! {
    #[test]
    fn merge_adds_radii_and_covers_both(a in 0.0..TAU, b in -1.0..1.0f64, r1 in 0.01..0.3f64, r2 in 0.01..0.3f64, f in 0.1..1.0f64) {
        let d1 = SphericalDisc::new([1.0, 0.0, 0.0], r1, 1.0).unwrap();
        // Second centre at distance f·(r1 + r2), so the discs intersect.
        let dir = normalize(unit(a, b));
        let axis = normalize([0.0, dir[1], dir[2]]);
        let t = f * (r1 + r2);
        let c2 = [t.cos(), t.sin() * axis[1], t.sin() * axis[2]];
        let d2 = SphericalDisc::new(c2, r2, 1.0).unwrap();
        let m = merge(&d1, &d2);
        prop_assert!((m.rho - (r1 + r2)).abs() < 1e-15);
        for d in [d1, d2] {
            for p in d.boundary_points(32) {
                prop_assert!(m.distance_to(p) <= m.rho + 1e-9);
            }
        }
    }

    #[test]
    fn growth_conserves_radius_and_contains_the_start(fam in family(), t in 0.0..2.5f64) {
        let g = grow(&fam, t).unwrap();
        prop_assert!(g.family.is_disjoint());
        let expect = t.exp() * fam.r_tot();
        prop_assert!((g.family.r_tot() - expect).abs() <= 1e-12 * expect.max(1.0));
        for m in &g.merges {
            prop_assert!((m.r_tot_after - m.r_tot_before).abs() <= 1e-12);
        }
        for d in &fam.discs {
            for p in d.boundary_points(24) {
                let ex = g.family.discs.iter().map(|e| e.distance_to(p) - e.rho).fold(f64::INFINITY, f64::min);
                prop_assert!(ex <= 1e-9, "boundary point outside by {}", ex);
            }
        }
    }

    #[test]
    fn growth_is_monotone_in_time(fam in family(), s in 0.0..1.5f64, ds in 0.0..1.0f64) {
        let a = grow(&fam, s).unwrap().family;
        let b = grow(&fam, s + ds).unwrap().family;
        for d in &a.discs {
            let ex = b.discs.iter().map(|e| e.distance_to(d.center) - e.rho).fold(f64::INFINITY, f64::min);
            prop_assert!(ex <= 1e-9);
        }
    }

    #[test]
    fn r1_balances(gamma in 1.0..6.0f64, sigma in 0.3..0.95f64, c in 1.0..100.0f64) {
        let p = CertificateParams::with_defaults(gamma, sigma, c, 0.5, 1.0);
        prop_assume!(p.validate().is_ok());
        let r1 = r1_constant(&p);
        prop_assert!(r1.is_finite() && r1 > 0.0);
        prop_assert!(r1_defect(&p, r1) <= 1e-10);
    }

    #[test]
    fn pairwise_sum_matches_naive(xs in prop::collection::vec(-1e3..1e3f64, 0..5000)) {
        let naive: f64 = xs.iter().sum();
        let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-12 * scale);
    }
}
