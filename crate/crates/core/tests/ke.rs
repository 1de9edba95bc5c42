use kecurv::fiber::{build_hyperbolic_octagon_fiber, build_torus_fiber};
use kecurv::ke::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// The background omega_0 = omega_hyp - eps i ddbar h has the hyperbolic metric
// as its Kahler-Einstein metric, so the potential is u = -eps h exactly.

#[test]
fn default_background_recovers_the_hyperbolic_metric() {
    let f = build_hyperbolic_octagon_fiber(4).unwrap();
    let h = default_perturbation(&f);
    let bg = make_background(&f, &h, 0.05).unwrap();
    let s = solve_ke(&f, &bg, 1e-10).unwrap();
    assert!(s.residual() < 1e-10 && s.iterations <= 8, "{:?}", s.residual_history);
    let err = s.u.iter().zip(&h).map(|(u, h)| (u + 0.05 * h).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
    let r = check_c0_estimate(&f, &bg, &s.u);
    assert!(r.details["pointwise_margin"] >= -1e-12 && r.details["sup_margin"] >= -1e-8, "{r:?}");
}

#[test]
fn rough_perturbation_is_also_exact() {
    let f = build_hyperbolic_octagon_fiber(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h: Vec<f64> = (0..f.num_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eps = 0.002;
    let bg = make_background(&f, &h, eps).unwrap();
    let s = solve_ke(&f, &bg, 1e-12).unwrap();
    let err = s.u.iter().zip(&h).map(|(u, h)| (u + eps * h).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
    assert!(check_c0_estimate(&f, &bg, &s.u).pass);
}

#[test]
fn newton_from_a_bad_start_still_converges() {
    let f = build_hyperbolic_octagon_fiber(3).unwrap();
    let h = default_perturbation(&f);
    let bg = make_background(&f, &h, 0.05).unwrap();
    let s = solve_ke_from(&f, &bg, 1e-10, &vec![3.0; f.num_vertices()]).unwrap();
    assert!(s.residual() < 1e-10);
}

#[test]
fn rejects_flat_fiber_and_mismatched_input() {
    let t = build_torus_fiber(1.0, 8).unwrap();
    assert!(make_background(&t, &vec![0.0; t.num_vertices()], 0.1).is_err());
    let f = build_hyperbolic_octagon_fiber(2).unwrap();
    assert!(make_background(&f, &[0.0; 3], 0.1).is_err());
    assert!(make_background(&f, &vec![f64::NAN; f.num_vertices()], 0.1).is_err());
}
