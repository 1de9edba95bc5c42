use kecurv::curvature::*;
use kecurv::exterior::{binomial, insert, remove, subsets, Layout};
use kecurv::finsler::*;
use kecurv::ks_wp::KSForm;
use kecurv::linalg::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_values(len: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..len).map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn insert_then_remove_is_identity(n in 1usize..6, k in 0usize..6, pick in any::<u64>(), i in 0usize..6) {
        prop_assume!(k <= n && i < n);
        let masks = subsets(n, k);
        prop_assert_eq!(masks.len(), binomial(n, k));
        let mask = masks[(pick % masks.len() as u64) as usize];
        if let Some((m, s)) = insert(mask, i) {
            let (back, t) = remove(m, i).unwrap();
            prop_assert_eq!(back, mask);
            prop_assert_eq!(s * t, 1.0);
        } else {
            prop_assert!(mask & (1 << i) != 0);
        }
    }

    #[test]
    fn wedge_anticommutes(n in 2usize..6, i in 0usize..6, j in 0usize..6, pick in any::<u64>()) {
        prop_assume!(i < n && j < n && i != j);
        let masks = subsets(n, 1);
        let mask = masks[(pick % masks.len() as u64) as usize];
        let ij = insert(mask, j).and_then(|(m, s)| insert(m, i).map(|(m2, t)| (m2, s * t)));
        let ji = insert(mask, i).and_then(|(m, s)| insert(m, j).map(|(m2, t)| (m2, s * t)));
        match (ij, ji) {
            (Some((a, s)), Some((b, t))) => {
                prop_assert_eq!(a, b);
                prop_assert_eq!(s, -t);
            }
            (None, None) => {}
            _ => prop_assert!(false, "asymmetric insertion"),
        }
    }

    #[test]
    fn cup_product_is_linear(seed in any::<u64>(), n in 1usize..4, p in 0usize..4, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(p <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = 4;
        let a = KSForm::random_synthetic(n, nodes, &mut rng);
        let b = KSForm::random_synthetic(n, nodes, &mut rng);
        let lay = Layout::new(n, p, n - p);
        let psi = BundleForm { layout: lay.clone(), m: 1, values: random_values(nodes * lay.len(), &mut rng) };
        let s = c64(re, im);
        // lowering uses A, raising uses Abar
        for (dir, s) in [(CupDirection::Lowering, s), (CupDirection::Raising, s.conj())] {
            let (Ok(x), Ok(y), Ok(z)) = (cup_contract(&a, &psi, dir), cup_contract(&b, &psi, dir), cup_contract(&a.add_scaled(c64(re, im), &b), &psi, dir)) else {
                continue;
            };
            for ((zx, xx), yy) in z.values.iter().zip(&x.values).zip(&y.values) {
                prop_assert!((zx - (xx + s * yy)).norm() <= 1e-12 * (1.0 + zx.norm()));
            }
        }
    }

    #[test]
    fn wedge_power_is_homogeneous(seed in any::<u64>(), p in 1usize..3, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = KSForm::random_synthetic(2, 3, &mut rng);
        let s = c64(re, im);
        let scaled = KSForm { n: 2, coefficients: a.coefficients.iter().map(|z| z * s).collect() };
        let w = wedge_power(&a, p).unwrap();
        let ws = wedge_power(&scaled, p).unwrap();
        let f = s.powi(p as i32);
        for (x, y) in w.values.iter().zip(&ws.values) {
            prop_assert!((y - x * f).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn single_summand_convex_sum_is_equality(r in 0.8f64..3.0, w in 0.05f64..5.0, h in 0.01f64..0.05) {
        let s = CurveSample::centered("rho", c64(0.0, 0.0), h, 6, |z| poincare_density(r, z));
        let rep = convex_sum_curvature_check(&[s], &[w], 0.0).unwrap();
        prop_assert!(rep.margin.abs() <= 1e-10, "{}", rep.margin);
    }

    #[test]
    fn poincare_curvature_is_minus_one(r in 0.8f64..3.0) {
        let h = 0.01;
        let s = CurveSample::centered("rho", c64(0.0, 0.0), h, 10, |z| poincare_density(r, z));
        for v in discrete_curvature(&s).unwrap() {
            prop_assert!((v.value + 1.0).abs() <= 2.0 * h * h / (r * r), "{}", v.value);
        }
    }

    #[test]
    fn curvature_is_scale_invariant_up_to_factor(c in 0.1f64..10.0) {
        // K(c G) = K(G) / c
        let h = 0.02;
        let g = CurveSample::centered("g", c64(0.1, 0.0), h, 5, |z| poincare_density(1.3, z));
        let cg = CurveSample::centered("cg", c64(0.1, 0.0), h, 5, |z| c * poincare_density(1.3, z));
        let (k, kc) = (discrete_curvature(&g).unwrap(), discrete_curvature(&cg).unwrap());
        for (a, b) in k.iter().zip(&kc) {
            prop_assert!((b.value * c - a.value).abs() <= 1e-9 * a.value.abs().max(1.0));
        }
    }
}
