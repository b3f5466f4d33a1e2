use std::f64::consts::PI;

use phononic::crystal::{validate, CrystalSpec, InclusionGeometry, Material, QuasiMomentum};
use phononic::fourier::sphere_coefficients;
use phononic::series::{
    radius_periodic, radius_quasi, sphere_radius_periodic, sphere_radius_quasi, truncation_bound,
};
use phononic::structural::{cubic_residual, np_cubic_roots, pole_sets, tau_lower_bound, z_pole};
use proptest::prelude::*;

fn material() -> impl Strategy<Value = Material> {
    (0.1f64..10.0, 0.0f64..1.0).prop_map(|(mu, s)| {
        // lambda >= -2 mu / 3 keeps the bulk modulus nonnegative.
        let lambda = -2.0 * mu / 3.0 + s * 20.0 * mu;
        Material::new(lambda, mu, 1.0, 1.0, 1.0)
    })
}

proptest! {
    #[test]
    fn k0_in_admissible_range(m in material()) {
        let k0 = m.k0();
        prop_assert!(k0 >= -0.375 - 1e-15 && k0 < 0.0);
        prop_assert!(validate(&CrystalSpec::new(m, InclusionGeometry::centered_sphere(0.2))).is_empty());
    }

    #[test]
    fn validate_is_deterministic(mu in -1.0f64..2.0, lambda in -3.0f64..3.0, a in 0.0f64..0.4, c in 0.0f64..1.0) {
        let spec = CrystalSpec::new(
            Material::new(lambda, mu, 1.0, 1.0, 1.0),
            InclusionGeometry::sphere([c, 0.5, 0.5], a),
        );
        prop_assert_eq!(validate(&spec), validate(&spec.clone()));
    }

    #[test]
    fn parseval_partial_sums_monotone(a in 0.05f64..0.24, cx in 0.26f64..0.74) {
        let t = sphere_coefficients([cx, 0.5, 0.5], a, 3);
        let vol = 4.0 * PI * a.powi(3) / 3.0;
        let mut prev = 0.0;
        for r in 0..=6 {
            let s = t.parseval_partial(r);
            prop_assert!(s >= prev - 1e-15);
            prop_assert!(s <= vol * (1.0 + 1e-12));
            prev = s;
        }
    }

    #[test]
    fn pole_maps_are_inverse(tau in -0.4999f64..0.4999) {
        prop_assume!(tau.abs() > 1e-9);
        let (k, z, _) = pole_sets(&[tau]).unwrap();
        prop_assert!((k[0] * z[0] - 1.0).abs() < 1e-12);
        prop_assert!(z[0] < 0.0);
    }

    #[test]
    fn tau_bound_in_range(theta in 1e-6f64..5.0) {
        let (t, z) = tau_lower_bound(theta).unwrap();
        prop_assert!(t > -0.5 && t <= 0.0);
        prop_assert_eq!(z, z_pole(t));
    }

    #[test]
    fn cubic_roots_round_trip(r in -1.0f64..1.0, k0 in -0.375f64..-1e-3) {
        for z in np_cubic_roots(r, k0) {
            prop_assert!(cubic_residual(z, r, k0) < 1e-12);
        }
    }

    #[test]
    fn quasi_radius_monotone(d in 1e-3f64..10.0, s in 0.01f64..3.0, a2 in 0.01f64..9.0) {
        let m = Material::unit();
        let al = QuasiMomentum::new([a2.sqrt(), 0.0, 0.0]);
        let al2 = QuasiMomentum::new([(a2 * 1.5).sqrt(), 0.0, 0.0]);
        let r = radius_quasi(&al, d, -0.25, &m, 1.0).unwrap();
        let rd = radius_quasi(&al, d * (1.0 + s), -0.25, &m, 1.0).unwrap();
        let ra = radius_quasi(&al2, d, -0.25, &m, 1.0).unwrap();
        prop_assert!(rd.r_star > r.r_star && ra.r_star > r.r_star);
        prop_assert!(r.r_star > 0.0 && r.r_star < r.z_star.abs());
    }

    #[test]
    fn periodic_radius_monotone(d in 1e-3f64..10.0, s in 0.01f64..3.0) {
        let m = Material::unit();
        let r = radius_periodic(d, -0.25, &m, 1.0).unwrap();
        let rd = radius_periodic(d * (1.0 + s), -0.25, &m, 1.0).unwrap();
        prop_assert!(rd.r_star > r.r_star && r.r_star < r.z_star.abs());
    }

    #[test]
    fn truncation_bound_decays_geometrically(d in 0.01f64..5.0, r in 0.01f64..1.0, f in 0.0f64..0.95) {
        let z = f * r;
        let b1 = truncation_bound(d, r, z, 1).unwrap();
        let b2 = truncation_bound(d, r, z, 2).unwrap();
        prop_assert!((b2 - b1 * f).abs() <= 1e-12 * b1.max(1e-300));
        prop_assert!(truncation_bound(d, r, r * 1.01, 1).is_err());
    }
}

/// Fixed-seed draws so the reductions are checked over exactly 100 parameter sets.
#[test]
fn sphere_radius_reductions() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let mu1 = rng.gen_range(0.1..10.0);
        let a2 = rng.gen_range(0.01..3.0 * PI * PI);
        let gap = rng.gen_range(1e-3..100.0);
        let rho = rng.gen_range(0.1..10.0);
        let m = Material::new(1.0, mu1, 1.0, rho, rho);
        let al = QuasiMomentum::new([a2.sqrt(), 0.0, 0.0]);
        let q = radius_quasi(&al, gap / 2.0, -0.25, &m, rho).unwrap().r_star;
        let q_s = sphere_radius_quasi(mu1, al.norm_sq(), gap, rho);
        assert!((q - q_s).abs() <= 1e-12 * q_s.max(1.0), "{q} {q_s}");
        let p = radius_periodic(gap / 2.0, -0.25, &m, rho).unwrap().r_star;
        let p_s = sphere_radius_periodic(mu1, gap, rho);
        assert!((p - p_s).abs() <= 1e-12 * p_s.max(1.0), "{p} {p_s}");
    }
}
