use kecurv::curvature::*;
use kecurv::fiber::build_hyperbolic_octagon_fiber;
use kecurv::finsler::*;
use kecurv::ks_wp::{wp_inner_product, KSForm};
use kecurv::linalg::C64;
use kecurv::report::Status;
use kecurv::resolvent_bounds::p_n;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORIGIN: C64 = C64::new(0.0, 0.0);

fn combine(ks: &[KSForm], c: &[C64]) -> KSForm {
    let mut a = KSForm { n: ks[0].n, coefficients: vec![C64::new(0.0, 0.0); ks[0].coefficients.len()] };
    for (k, ci) in ks.iter().zip(c) {
        a = a.add_scaled(*ci, k);
    }
    a
}

fn random_c(len: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..len).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn convex_margin(h: f64, weights: &[f64]) -> f64 {
    let half = (0.5 / h).round() as usize;
    let samples = vec![
        CurveSample::centered("rho1", ORIGIN, h, half, |s| poincare_density(1.0, s)),
        CurveSample::centered("rho2", ORIGIN, h, half, |s| poincare_density(1.7, s + C64::new(0.2, -0.1))),
        CurveSample::centered("flat", ORIGIN, h, half, |_| 0.8),
    ];
    convex_sum_curvature_check(&samples, weights, 0.0).unwrap().margin
}

#[test]
fn convex_sum_margins_are_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..2.0)).collect();
        for h in [0.05, 0.025] {
            let m = convex_margin(h, &w);
            assert!(m >= -5.0 * h * h, "h={h} margin={m}");
        }
    }
}

#[test]
fn convex_sum_single_summand_is_equality() {
    let s = CurveSample::centered("rho", ORIGIN, 0.03, 10, |z| poincare_density(1.0, z));
    let r = convex_sum_curvature_check(&[s], &[0.7], 0.0).unwrap();
    assert!(r.margin.abs() <= 1e-10, "{}", r.margin);
}

#[test]
fn convex_sum_of_two_poincare_metrics_is_strict() {
    let h = 0.02;
    let a = CurveSample::centered("r1", ORIGIN, h, 20, |s| poincare_density(1.0, s));
    let b = CurveSample::centered("r2", ORIGIN, h, 20, |s| poincare_density(2.0, s));
    let r = convex_sum_curvature_check(&[a, b], &[1.0, 1.0], 0.0).unwrap();
    assert!(r.margin > 0.0 && r.pass, "{r:?}");
}

#[test]
fn convex_sum_rejects_mismatched_grids() {
    let a = CurveSample::centered("a", ORIGIN, 0.1, 3, |_| 1.0);
    let b = CurveSample::centered("b", ORIGIN, 0.05, 3, |_| 1.0);
    assert!(convex_sum_curvature_check(&[a.clone(), b], &[1.0, 1.0], 0.0).is_err());
    assert!(convex_sum_curvature_check(&[a], &[0.0], 0.0).is_err());
}

#[test]
fn ahlfors_schwarz_cases() {
    let radius = 1.0;
    let a = 3.0;
    for h in [0.04f64, 0.02] {
        let half = (0.6 / h).round() as usize;
        let hyp_slack = 50.0 * h * h;
        // equality case
        let g = CurveSample::centered("rho/A", ORIGIN, h, half, |s| poincare_density(radius, s) / a);
        let r = ahlfors_schwarz_check(&g, a, radius, hyp_slack, 1e-10).unwrap();
        assert_eq!(r.status, Status::Checked);
        assert!(r.pass && r.margin.abs() <= 1e-10, "{}", r.margin);
        assert!(r.details["hypothesis_margin"] >= -hyp_slack);
        // c < 1: strict
        let g = CurveSample::centered("c rho/A", ORIGIN, h, half, |s| 0.6 * poincare_density(radius, s) / a);
        let r = ahlfors_schwarz_check(&g, a, radius, hyp_slack, 1e-10).unwrap();
        assert!(r.pass && r.margin > 0.1);
        assert!(r.details["hypothesis_margin"] > 0.5);
        // c > 1: refused
        let g = CurveSample::centered("big", ORIGIN, h, half, |s| 1.4 * poincare_density(radius, s) / a);
        let r = ahlfors_schwarz_check(&g, a, radius, hyp_slack, 1e-10).unwrap();
        assert_eq!(r.status, Status::HypothesisNotSatisfied);
        assert!(!r.pass);
    }
}

#[test]
fn ahlfors_schwarz_with_smaller_disk_metric() {
    // the Poincare metric of a smaller disk centred at 0 satisfies the
    // hypothesis with equality inside it and is dominated on the larger disk
    let (big, small, a) = (1.0, 0.9, 1.0);
    let h = 0.02;
    let g = CurveSample::centered("inner", ORIGIN, h, 25, |s| poincare_density(small, s) * 0.5);
    let r = ahlfors_schwarz_check(&g, a, small.min(big) * 0.999, 50.0 * h * h, 1e-10).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn finsler_norm_is_homogeneous() {
    let md = SyntheticModel::random(2, 20, 3, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = combine(&md.ks, &random_c(3, &mut rng));
    for p in [1, 2] {
        let slot = md.polyvector_slot(p).unwrap();
        let base = wp_degree_p(&a, p, &slot).unwrap();
        assert!(base > 0.0);
        for _ in 0..5 {
            let alpha = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let scaled = KSForm { n: 2, coefficients: a.coefficients.iter().map(|z| z * alpha).collect() };
            let v = wp_degree_p(&scaled, p, &slot).unwrap();
            assert!((v - alpha.norm() * base).abs() <= 1e-12 * v.max(1.0));
        }
    }
    assert_eq!(wp_degree_p(&a, 3, &md.polyvector_slot(2).unwrap()).unwrap(), 0.0);
}

#[test]
fn finsler_norm_of_rank_one_form_vanishes_in_degree_two() {
    let md = SyntheticModel::random(2, 20, 3, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut c = Vec::new();
    for _ in 0..20 {
        let u = random_c(2, &mut rng);
        for al in 0..2 {
            for be in 0..2 {
                c.push(u[al] * u[be]);
            }
        }
    }
    let a = KSForm::synthetic(2, c).unwrap();
    let v = wp_degree_p(&a, 2, &md.polyvector_slot(2).unwrap()).unwrap();
    assert!(v < 1e-7, "{v}");
}

#[test]
fn degree_one_norm_is_weil_petersson_norm() {
    let fiber = build_hyperbolic_octagon_fiber(3).unwrap();
    let (tables, slots) = geometric_tangent(&fiber, 1).unwrap();
    let k2 = slots.sections.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..5 {
        let c = random_c(3, &mut rng);
        let a: Vec<C64> = (0..fiber.num_vertices()).map(|v| (0..3).map(|i| c[i] * tables.ks[i][v]).sum()).collect();
        let n1 = wp_degree_p_surface(&tables, k2, &a, 1).unwrap();
        let ka = KSForm::scalar(a.clone());
        let wp = wp_inner_product(&fiber, &ka, &ka).unwrap().re.sqrt();
        assert!((n1 - wp).abs() <= 1e-12 * wp, "{n1} {wp}");
        assert_eq!(wp_degree_p_surface(&tables, k2, &a, 2).unwrap(), 0.0);
    }
}

#[test]
fn curve_bound_on_octagon() {
    let fiber = build_hyperbolic_octagon_fiber(4).unwrap();
    let pn = p_n(1, fiber.diameter().unwrap()).unwrap();
    let (tables, slots) = geometric_tangent(&fiber, 1).unwrap();
    let t = curvature_tangent(&slots, &tables).unwrap();
    let k2 = slots.sections.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let c = random_c(3, &mut rng);
        let a: Vec<C64> = (0..fiber.num_vertices()).map(|v| (0..3).map(|i| c[i] * tables.ks[i][v]).sum()).collect();
        let input = CurveBoundInput {
            p: 1,
            pn,
            norm_1: wp_degree_p_surface(&tables, k2, &a, 1).unwrap(),
            norm_p: wp_degree_p_surface(&tables, k2, &a, 1).unwrap(),
            norm_next: 0.0,
            sectional: evaluate_sectional(&t, &c, &c).re,
        };
        let g0 = input.norm_p.powi(2);
        let h = 0.02 / (input.osculating_curvature().abs() * g0).sqrt();
        let r = finsler_curvature_bound_check(&input, h, 3, 0.0).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.details["subharmonic_margin"] > 0.0);
    }
}

#[test]
fn curve_bound_synthetic_degrees_one_and_two() {
    let md = SyntheticModel::random(2, 24, 3, 21).unwrap();
    let pn = md.resolvent_kernel_min().unwrap();
    assert!(pn > 0.0);
    let slot1 = md.polyvector_slot(1).unwrap();
    let slot2 = md.polyvector_slot(2).unwrap();
    let (tab1, slots1) = synthetic_tangent(&md, 1, 3).unwrap();
    let t1 = curvature_tangent(&slots1, &tab1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..5 {
        let c = random_c(3, &mut rng);
        let a = combine(&md.ks, &c);
        let (n1, n2) = (wp_degree_p(&a, 1, &slot1).unwrap(), wp_degree_p(&a, 2, &slot2).unwrap());
        let one = CurveBoundInput { p: 1, pn, norm_1: n1, norm_p: n1, norm_next: n2, sectional: evaluate_sectional(&t1, &c, &c).re };
        let h = 0.02 / (one.osculating_curvature().abs() * n1 * n1).sqrt();
        let r = finsler_curvature_bound_check(&one, h, 3, 0.0).unwrap();
        assert!(r.pass, "p=1 {r:?}");

        let w = wedge_power(&a, 2).unwrap();
        let h2 = slot2.harmonic_project(&kecurv::spectral::Field::new(w.values.clone(), w.field().tag));
        let nu = PolyForm { layout: w.layout.clone(), values: h2.values };
        let (tab2, slots2) = synthetic_tangent_with_sections(&md, 2, vec![nu]).unwrap();
        let t2 = curvature_tangent(&slots2, &tab2).unwrap();
        let two = CurveBoundInput {
            p: 2,
            pn,
            norm_1: n1,
            norm_p: n2,
            norm_next: 0.0,
            sectional: evaluate_sectional(&t2, &c, &[C64::new(1.0, 0.0)]).re,
        };
        let h = 0.02 / (two.osculating_curvature().abs() * n2 * n2).sqrt();
        let r = finsler_curvature_bound_check(&two, h, 3, 0.0).unwrap();
        assert!(r.pass, "p=2 {r:?}");
        assert!(r.details["ratio_next"] == 0.0);
    }
}
