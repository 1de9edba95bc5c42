use kecurv::fiber::{assemble_laplacian, build_hyperbolic_octagon_fiber, build_torus_fiber};
use kecurv::ks_wp::*;
use kecurv::linalg::C64;
use kecurv::spectral::Field;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn phi_of_a_constant_is_that_constant() {
    let f = build_hyperbolic_octagon_fiber(3).unwrap();
    let s = assemble_laplacian(&f).unwrap();
    let phi = solve_phi(&s, &Field::constant(f.num_vertices(), 0.7)).unwrap();
    assert!(phi.values.iter().all(|z| (z.re - 0.7).abs() < 1e-10 && z.im.abs() < 1e-12));
}

#[test]
fn phi_lower_bound_for_random_densities() {
    let f = build_hyperbolic_octagon_fiber(4).unwrap();
    let s = assemble_laplacian(&f).unwrap();
    let d = f.diameter().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for k in 0..20 {
        let mut chi = vec![0.0; f.num_vertices()];
        if k % 2 == 0 {
            let v = rng.random_range(0..chi.len());
            chi[v] = 1.0;
        } else {
            chi.iter_mut().for_each(|c| *c = rng.random_range(0.0..1.0));
        }
        let chi = Field::real(&chi);
        let phi = solve_phi(&s, &chi).unwrap();
        let r = check_phi_bound(&s, &phi, &chi, d, 1, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
        // positivity of (box + 1)^{-1}
        assert!(phi.values.iter().all(|z| z.re > 0.0));
    }
    assert!(solve_phi(&s, &Field::constant(f.num_vertices(), -1.0)).is_err());
}

#[test]
fn bordered_determinant_two_by_two_by_hand() {
    let bm = BorderedMetric { g_ss: 3.0, g_sb: vec![C64::new(1.0, 0.5)], g_ab: vec![C64::new(2.0, 0.0)] };
    // det = g_ss g_11 - |g_s1|^2 and phi = g_ss - |g_s1|^2 / g_11
    let phi = bm.phi().unwrap();
    assert!((phi - (3.0 - 1.25 / 2.0)).abs() < 1e-15);
    let r = bordered_determinant_check(&bm).unwrap();
    assert!(r.pass && (r.details["det_full"] - (6.0 - 1.25)).abs() < 1e-14);
}

#[test]
fn bad_fiber_blocks_are_rejected() {
    let neg = BorderedMetric { g_ss: 1.0, g_sb: vec![C64::new(2.0, 0.0)], g_ab: vec![C64::new(-1.0, 0.0)] };
    assert!(bordered_determinant_check(&neg).is_err());
    let skew = BorderedMetric {
        g_ss: 1.0,
        g_sb: vec![C64::new(0.0, 0.0); 2],
        g_ab: vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 1.0), C64::new(2.0, 0.0)],
    };
    assert!(bordered_determinant_check(&skew).is_err());
}

#[test]
fn quadratic_differentials_at_default_resolution() {
    let f = build_hyperbolic_octagon_fiber(4).unwrap();
    let qd = quadratic_differential_basis(&f).unwrap();
    assert_eq!(qd.fields.len(), QD_DIMENSION);
    assert!(qd.gap() >= 10.0, "gap {}", qd.gap());
    // the three smallest singular values are all far below the fourth
    assert!(qd.singular_values[2] < 0.1 * qd.singular_values[3]);
    for q in &qd.fields {
        assert!(pairing_equivariance_defect(&f, q) < 1e-9);
    }
    let forms: Vec<KSForm> = qd.fields.iter().map(|q| harmonic_beltrami(&f, q)).collect();
    let g = wp_gram(&f.area_weights, &forms).unwrap();
    // positive definite: leading minors
    let m1 = g[(0, 0)].re;
    let m2 = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
    let m3 = (g[(0, 0)] * (g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(2, 1)]) - g[(0, 1)] * (g[(1, 0)] * g[(2, 2)] - g[(1, 2)] * g[(2, 0)])
        + g[(0, 2)] * (g[(1, 0)] * g[(2, 1)] - g[(1, 1)] * g[(2, 0)]))
        .re;
    assert!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0, "{m1} {m2} {m3}");
}

#[test]
fn quadratic_differential_gap_grows_under_refinement() {
    let g3 = quadratic_differential_basis(&build_hyperbolic_octagon_fiber(3).unwrap()).unwrap().gap();
    let g4 = quadratic_differential_basis(&build_hyperbolic_octagon_fiber(4).unwrap()).unwrap().gap();
    assert!(g4 > 3.0 * g3, "{g3} {g4}");
    assert!(quadratic_differential_basis(&build_torus_fiber(1.0, 8).unwrap()).is_err());
}

#[test]
fn wp_product_is_sesquilinear() {
    let f = build_hyperbolic_octagon_fiber(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rnd = || KSForm::scalar((0..f.num_vertices()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect());
    let (a, b, c) = (rnd(), rnd(), rnd());
    let s = C64::new(0.3, -2.0);
    let lhs = wp_inner_product(&f, &a.add_scaled(s, &b), &c).unwrap();
    let rhs = wp_inner_product(&f, &a, &c).unwrap() + s * wp_inner_product(&f, &b, &c).unwrap();
    assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    let ba = wp_inner_product(&f, &b, &a).unwrap();
    assert!((wp_inner_product(&f, &a, &b).unwrap() - ba.conj()).norm() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bordered_identity_holds(seed in any::<u64>(), n in prop::sample::select(vec![1usize, 2, 3, 5])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = bordered_determinant_check(&BorderedMetric::random(n, &mut rng)).unwrap();
        prop_assert!(r.pass, "{:?}", r);
        prop_assert!(r.details["phi"] > 0.0);
    }
}
