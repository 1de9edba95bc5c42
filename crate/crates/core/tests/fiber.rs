use kecurv::fiber::io::{read_mesh, write_mesh};
use kecurv::fiber::*;
use kecurv::spectral::Field;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Eigenvalues of the periodic 5-point Laplacian on an N x N grid of spacing L/N.
fn five_point(side: f64, n: usize, count: usize) -> Vec<f64> {
    let h = side / n as f64;
    let mut v: Vec<f64> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| 4.0 / (h * h) * ((PI * a as f64 / n as f64).sin().powi(2) + (PI * b as f64 / n as f64).sin().powi(2)))
        .collect();
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    v
}

#[test]
fn torus_spectrum_is_the_five_point_spectrum() {
    let f = build_torus_fiber(1.0, 16).unwrap();
    let s = assemble_laplacian(&f).unwrap();
    for (got, want) in s.eigenvalues().iter().zip(five_point(1.0, 16, 12)) {
        assert!((got - want).abs() < 1e-9 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn torus_eigenvalues_converge_at_second_order() {
    // 4 pi^2 has multiplicity four, then 8 pi^2
    let exact = [4.0 * PI * PI, 4.0 * PI * PI, 4.0 * PI * PI, 4.0 * PI * PI, 8.0 * PI * PI];
    let err = |n: usize| {
        let s = assemble_laplacian(&build_torus_fiber(1.0, n).unwrap()).unwrap();
        (1..6).map(|i| (s.eigenvalues()[i] - exact[i - 1]).abs() / exact[i - 1]).fold(0.0, f64::max)
    };
    let (e16, e32, e64) = (err(16), err(32), err(64));
    assert!(e64 < 0.02);
    assert!((e16 / e32).log2() > 1.8 && (e32 / e64).log2() > 1.8, "{e16} {e32} {e64}");
}

#[test]
fn resolvent_heat_identity_on_torus() {
    let s = assemble_laplacian(&build_torus_fiber(1.0, 32).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let (z, w) = (rng.random_range(0..s.nodes()), rng.random_range(0..s.nodes()));
        let r = s.verify_resolvent_heat_identity(z, w, 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn octagon_topology_and_area() {
    for level in [2, 3, 4] {
        let f = build_hyperbolic_octagon_fiber(level).unwrap();
        assert_eq!(f.euler_characteristic(), -2);
        assert!(f.pairing_isometry_defect() < 1e-9);
        assert!(f.holonomy_defect < 1e-9);
        if level == 4 {
            assert!((f.area() - 4.0 * PI).abs() < 0.01 * 4.0 * PI, "{}", f.area());
            assert!(f.min_cotan_weight() >= 0.0);
        }
    }
}

#[test]
fn octagon_area_converges_to_gauss_bonnet() {
    let e: Vec<f64> = (2..5).map(|l| (build_hyperbolic_octagon_fiber(l).unwrap().area() - 4.0 * PI).abs()).collect();
    assert!(e[1] < e[0] && e[2] < e[1], "{e:?}");
}

#[test]
fn constants_are_harmonic_on_the_octagon() {
    let f = build_hyperbolic_octagon_fiber(3).unwrap();
    let lu = f.apply_laplacian(&vec![2.5; f.num_vertices()]);
    assert!(lu.iter().all(|v| v.abs() < 1e-10));
    let s = assemble_laplacian(&f).unwrap();
    assert!(s.eigenvalues()[0].abs() < 1e-9 && s.eigenvalues()[1] > 0.1);
    let c = Field::constant(f.num_vertices(), 1.0);
    assert!((s.integral(&c).re - f.area()).abs() < 1e-9);
}

#[test]
fn mesh_file_round_trip() {
    let f = build_hyperbolic_octagon_fiber(2).unwrap();
    let g = read_mesh(&write_mesh(&f)).unwrap();
    assert_eq!(f.triangles, g.triangles);
    assert_eq!(f.vertices, g.vertices);
    assert!((f.area() - g.area()).abs() < 1e-14);
    assert!(read_mesh("not a mesh").is_err());
}

#[test]
fn torus_rejects_bad_parameters() {
    assert!(build_torus_fiber(1.0, 1).is_err());
    assert!(build_torus_fiber(-1.0, 8).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deck_maps_are_hyperbolic_isometries(x in -0.6f64..0.6, y in -0.6f64..0.6, u in -0.6f64..0.6, v in -0.6f64..0.6) {
        let (z, w) = (kecurv::linalg::C64::new(x, y), kecurv::linalg::C64::new(u, v));
        prop_assume!(z.norm() < 0.9 && w.norm() < 0.9);
        for (_, g) in octagon_generators() {
            let d0 = hyperbolic_distance(z, w);
            let d1 = hyperbolic_distance(g.apply(z), g.apply(w));
            prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
        }
    }
}
