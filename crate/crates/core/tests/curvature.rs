use kecurv::curvature::*;
use kecurv::fiber::build_hyperbolic_octagon_fiber;
use kecurv::ks_wp::KSForm;
use kecurv::linalg::C64;
use kecurv::resolvent_bounds::p_n;
use kecurv::spectral::{DegreeTag, Field, SpectralDecomposition};
use kecurv::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn octagon() -> &'static kecurv::fiber::DiscreteFiber {
    static F: OnceLock<kecurv::fiber::DiscreteFiber> = OnceLock::new();
    F.get_or_init(|| build_hyperbolic_octagon_fiber(4).unwrap())
}

fn model(n: usize) -> SyntheticModel {
    SyntheticModel::random(n, 24, 3, 11 + n as u64).unwrap()
}

fn random_xi(len: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..len).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

#[test]
fn geometric_canonical_twist_zero_degree_vanishes() {
    let (tables, slots) = geometric_direct_image(octagon(), 0, 1).unwrap();
    let t = curvature_direct_image(&slots, 1, &tables).unwrap();
    let r = cancellation_report(&t, "p=0 m=1", "direct-image-cancellation");
    assert!(r.pass, "{r:?}");
    assert!(r.details["scale"] > 1e-3);
}

#[test]
fn geometric_tangent_zero_degree_vanishes() {
    let (tables, slots) = geometric_tangent(octagon(), 0).unwrap();
    let t = curvature_tangent(&slots, &tables).unwrap();
    let r = cancellation_report(&t, "tangent p=0", "tangent-cancellation");
    assert!(r.pass, "{r:?}");
}

#[test]
fn synthetic_cancellations() {
    for n in [2, 3] {
        let md = model(n);
        let (tables, slots) = synthetic_direct_image(&md, 0, 1, 1).unwrap();
        let t = curvature_direct_image(&slots, 1, &tables).unwrap();
        let r = cancellation_report(&t, "p=0 m=1", "direct-image-cancellation");
        assert!(r.pass, "n={n} {r:?}");
        let (tables, slots) = synthetic_tangent(&md, 0, 1).unwrap();
        let t = curvature_tangent(&slots, &tables).unwrap();
        let r = cancellation_report(&t, "tangent p=0", "tangent-cancellation");
        assert!(r.pass, "n={n} {r:?}");
    }
}

#[test]
fn synthetic_twist_two_does_not_cancel() {
    let md = model(2);
    let (tables, slots) = synthetic_direct_image(&md, 0, 2, 1).unwrap();
    let t = curvature_direct_image(&slots, 2, &tables).unwrap();
    assert!(!cancellation_report(&t, "p=0 m=2", "direct-image-cancellation").pass);
}

#[test]
fn hermitian_symmetry_and_term_signs() {
    let md = model(2);
    for p in 0..=2 {
        for m in [1, 2, 3] {
            if p == 0 && m > 1 {
                continue;
            }
            let (tables, slots) = synthetic_direct_image(&md, p, m, 2).unwrap();
            let t = curvature_direct_image(&slots, m, &tables).unwrap();
            assert!(t.hermitian_defect() < 1e-10, "p={p} m={m} {}", t.hermitian_defect());
            let scale = CurvatureTensor::frobenius(&t.entries).max(1e-300);
            for term in [0, 1] {
                assert!(t.min_eigenvalue(Some(term)).unwrap() >= -1e-10 * scale, "p={p} m={m} term {term}");
            }
            // on the diagonal the complement part of the third term is >= 0
            // and the harmonic part <= 0
            for i in 0..t.num_ks {
                for k in 0..t.num_sections {
                    let e = t.index(i, i, k, k);
                    assert!((t.terms[2][e] - t.harmonic_part[e]).re >= -1e-12 * scale);
                    assert!(t.harmonic_part[e].re <= 1e-12 * scale);
                }
            }
        }
        let (tables, slots) = synthetic_tangent(&md, p, 2).unwrap();
        let t = curvature_tangent(&slots, &tables).unwrap();
        assert!(t.hermitian_defect() < 1e-10, "tangent p={p}");
    }
}

#[test]
fn geometric_hermitian_symmetry() {
    for m in [1, 2] {
        let (tables, slots) = geometric_direct_image(octagon(), 1, m).unwrap();
        let t = curvature_direct_image(&slots, m, &tables).unwrap();
        assert!(t.hermitian_defect() < 1e-10);
        assert!(t.min_eigenvalue(None).unwrap() > 0.0);
    }
    let (tables, slots) = geometric_tangent(octagon(), 1).unwrap();
    let t = curvature_tangent(&slots, &tables).unwrap();
    assert!(t.hermitian_defect() < 1e-10);
    assert!(t.terms[2].iter().all(|z| z.norm() == 0.0));
}

#[test]
fn pluricanonical_matches_general_formula_at_top_degree() {
    let md = model(2);
    let (tables, slots) = synthetic_direct_image(&md, 2, 2, 2).unwrap();
    let a = curvature_direct_image(&slots, 2, &tables).unwrap();
    let b = curvature_pluricanonical(&slots, 2, &tables).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert!((x - y).norm() < 1e-14);
    }
    let (tables, slots) = synthetic_direct_image(&md, 1, 2, 2).unwrap();
    assert!(matches!(curvature_pluricanonical(&slots, 2, &tables), Err(Error::Degree(_))));
}

#[test]
fn nakano_bound_on_octagon() {
    let fiber = octagon();
    let pn = p_n(1, fiber.diameter().unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in [1, 2, 5] {
        let (tables, slots) = geometric_direct_image(fiber, 1, m).unwrap();
        let t = curvature_pluricanonical(&slots, m, &tables).unwrap();
        for _ in 0..100 {
            let xi = random_xi(t.num_ks * t.num_sections, &mut rng);
            let r = nakano_check(&t, &slots, &tables, pn, &xi, 1e-10);
            assert!(r.pass, "m={m} {r:?}");
        }
    }
}

#[test]
fn direct_image_estimate_synthetic() {
    let md = model(2);
    let pn = 0.0;
    for p in [1, 2] {
        let (tables, slots) = synthetic_direct_image(&md, p, 1, 2).unwrap();
        let t = curvature_direct_image(&slots, 1, &tables).unwrap();
        for i in 0..t.num_ks {
            for k in 0..t.num_sections {
                assert!(direct_image_estimate(&t, &slots, &tables, i, k, pn, 1e-10).unwrap().pass);
            }
        }
    }
}

#[test]
fn weil_petersson_holomorphic_sectional_curvature_is_negative() {
    let (tables, slots) = geometric_tangent(octagon(), 1).unwrap();
    let t = curvature_tangent(&slots, &tables).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..t.num_ks {
        assert!(t.get(i, i, i, i).re < 0.0);
    }
    for _ in 0..100 {
        let c = random_xi(t.num_ks, &mut rng);
        let mut s = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        s += t.get(i, j, k, l) * c[i] * c[j].conj() * c[k] * c[l].conj();
                    }
                }
            }
        }
        assert!(s.re < 0.0 && s.im.abs() < 1e-10 * s.re.abs());
    }
}

#[test]
fn large_twist_limit_of_second_term() {
    let md = model(2);
    let m = 1000;
    let (tables, slots) = synthetic_direct_image(&md, 2, m, 1).unwrap();
    let t = curvature_pluricanonical(&slots, m, &tables).unwrap();
    let lower = slots.lower.as_ref().unwrap();
    let top = lower.eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b));
    for i in 0..t.num_ks {
        let y = tables.cup_lower(i, 0).unwrap();
        let want = lower.inner(&y, &y).re;
        let got = t.term(1, i, i, 0, 0).re;
        // m / (lambda + m) >= 1 - lambda / m
        assert!(got <= want * (1.0 + 1e-12) && want - got <= want * top / m as f64, "{got} {want}");
    }
}

#[test]
fn resolvent_rejects_mass_below_twist() {
    // adversarial slot: a non-harmonic eigenvalue sits below m
    let w = vec![1.0; 4];
    let a = faer::Mat::<f64>::from_fn(4, 4, |i, j| if i == j { [0.0, 0.5, 3.0, 4.0][i] } else { 0.0 });
    let spec = SpectralDecomposition::from_dense(&a, &w, DegreeTag::Function).unwrap();
    let x = Field::function(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    assert!(matches!(spec.resolvent_apply(-1.0, &x), Err(Error::Resonance { .. })));
    let x = Field::function(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    assert!(spec.resolvent_apply(-1.0, &x).is_ok());
}

#[test]
fn cup_product_degrees_and_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = KSForm::random_synthetic(2, 5, &mut rng);
    let b = KSForm::random_synthetic(2, 5, &mut rng);
    let lay = kecurv::exterior::Layout::new(2, 1, 1);
    let psi = BundleForm { layout: lay.clone(), m: 1, values: random_xi(5 * lay.len(), &mut rng) };
    let lo = cup_contract(&a, &psi, CupDirection::Lowering).unwrap();
    assert_eq!((lo.layout.p, lo.layout.q), (0, 2));
    let hi = cup_contract(&a, &psi, CupDirection::Raising).unwrap();
    assert_eq!((hi.layout.p, hi.layout.q), (2, 0));
    let sum = a.add_scaled(C64::new(0.3, -1.2), &b);
    let lhs = cup_contract(&sum, &psi, CupDirection::Lowering).unwrap();
    let rb = cup_contract(&b, &psi, CupDirection::Lowering).unwrap();
    for c in 0..lhs.values.len() {
        let want = lo.values[c] + rb.values[c] * C64::new(0.3, -1.2);
        assert!((lhs.values[c] - want).norm() < 1e-12);
    }
    let top = BundleForm { layout: kecurv::exterior::Layout::new(2, 2, 0), m: 1, values: vec![C64::new(1.0, 0.0); 5] };
    assert!(matches!(cup_contract(&a, &top, CupDirection::Raising), Err(Error::Degree(_))));
    let bottom = BundleForm { layout: kecurv::exterior::Layout::new(2, 0, 2), m: 1, values: vec![C64::new(1.0, 0.0); 5] };
    assert!(matches!(cup_contract(&a, &bottom, CupDirection::Lowering), Err(Error::Degree(_))));
}

#[test]
fn one_dimensional_cup_is_scalar_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = KSForm::random_synthetic(1, 6, &mut rng);
    let lay = kecurv::exterior::Layout::new(1, 1, 0);
    let psi = BundleForm { layout: lay, m: 2, values: random_xi(6, &mut rng) };
    let lo = cup_contract(&a, &psi, CupDirection::Lowering).unwrap();
    for v in 0..6 {
        assert!((lo.values[v] - a.at(v, 0, 0) * psi.values[v]).norm() < 1e-15);
    }
}

#[test]
fn non_harmonic_sections_are_rejected() {
    let md = model(2);
    let (mut tables, slots) = synthetic_direct_image(&md, 1, 1, 2).unwrap();
    tables.psi[0].values[0] += C64::new(1.0, 0.0);
    assert!(matches!(curvature_direct_image(&slots, 1, &tables), Err(Error::NotHarmonic(_))));
}
