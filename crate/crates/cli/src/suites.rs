//! Verification suites behind `verify all`.

use crate::cache::Cache;
use crate::config::Config;
use crate::output::{SuiteResult, Table};
use crate::CliError;
use kecurv::curvature::*;
use kecurv::fiber::DiscreteFiber;
use kecurv::finsler::*;
use kecurv::ke::{check_c0_estimate, default_perturbation, make_background, solve_ke};
use kecurv::ks_wp::{
    bordered_determinant_check, check_phi_bound, harmonic_beltrami, quadratic_differential_basis, solve_phi, wp_gram, BorderedMetric,
    KSForm, QD_DIMENSION,
};
use kecurv::linalg::{SparseMatrix, C64};
use kecurv::report::{Assertion, BoundReport, Status};
use kecurv::resolvent_bounds::{bessel_estimate, p_n};
use kecurv::special::bessel_k;
use kecurv::spectral::{DegreeTag, Field, SpectralDecomposition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const SUITES: [&str; 7] = ["resolvent", "spectral", "fiber", "ke", "phi_wp", "curvature", "finsler"];

type Output = (Vec<BoundReport>, Vec<Table>);

pub fn run_suite(name: &str, cfg: &Config, cache: &Cache) -> SuiteResult {
    let out = match name {
        "resolvent" => resolvent(cfg),
        "spectral" => spectral(cfg, cache),
        "fiber" => fiber(cfg, cache),
        "ke" => ke(cfg, cache),
        "phi_wp" => phi_wp(cfg, cache),
        "curvature" => curvature(cfg, cache),
        "finsler" => finsler(cfg, cache),
        other => Err(CliError::Config(format!("unknown suite '{other}'"))),
    };
    match out {
        Ok((reports, tables)) => SuiteResult { suite: name.into(), reports, tables, error: None },
        Err(e) => SuiteResult { suite: name.into(), reports: Vec::new(), tables: Vec::new(), error: Some(format!("{name}: {e}")) },
    }
}

/// The report with the smallest margin relative to its slack, annotated with
/// the number of cases folded into it.
pub fn worst(name: &str, reports: Vec<BoundReport>) -> Option<BoundReport> {
    let count = reports.len();
    let all_pass = reports.iter().all(|r| r.pass);
    let mut w = reports.into_iter().min_by(|a, b| (a.margin + a.slack_used).total_cmp(&(b.margin + b.slack_used)))?;
    w.name = name.to_string();
    w.pass = all_pass;
    Some(w.with_detail("cases", count as f64))
}

fn push_worst(out: &mut Vec<BoundReport>, name: &str, reports: Vec<BoundReport>) {
    if let Some(r) = worst(name, reports) {
        out.push(r);
    }
}

fn octagon(cfg: &Config, cache: &Cache) -> Result<DiscreteFiber, CliError> {
    cache.octagon(cfg.fiber.octagon_level)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n.max(2) - 1) as f64).collect()
}

pub fn pn_table(n: u32, radii: &[f64]) -> Result<Table, CliError> {
    let mut t = Table::new(&format!("pn_n{n}"), &["r", "p_n", "bessel_estimate", "margin"]);
    for &r in radii {
        let (p, b) = (p_n(n, r)?, bessel_estimate(n, r)?);
        t.push(vec![r, p, b, p - b]);
    }
    Ok(t)
}

fn resolvent(cfg: &Config) -> Result<Output, CliError> {
    let rc = &cfg.resolvent;
    let mut reports = Vec::new();
    let mut closed = Vec::new();
    for &r in &rc.closed_form_radii {
        let exact = bessel_k(0, 5f64.sqrt() * r)? / PI;
        let err = (p_n(1, r)? - exact).abs();
        closed.push(BoundReport::leq("P_1 closed form", "p1-closed-form", err, 0.0, 1e-8, Assertion::Hard).with_provenance("r", r));
    }
    push_worst(&mut reports, "P_1 matches K_0(sqrt5 r)/pi", closed);
    let grid = linspace(rc.r_min, rc.r_max, rc.grid_points);
    let mut tables = Vec::new();
    for n in 1..=3u32 {
        let t = pn_table(n, &grid)?;
        if n >= 2 {
            let dom = t
                .rows
                .iter()
                .map(|row| BoundReport::geq("bessel dominance", "bessel-estimate-dominance", row[1], row[2], 1e-8, Assertion::Hard).with_provenance("r", row[0]))
                .collect();
            push_worst(&mut reports, &format!("P_{n} >= bessel estimate"), dom);
        }
        let p = t.column("p_n").unwrap();
        let worst_step = p.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        reports.push(BoundReport::geq(&format!("P_{n} decreasing"), "pn-monotone", worst_step, 0.0, 0.0, Assertion::Hard).with_provenance("n", n));
        tables.push(t);
    }
    Ok((reports, tables))
}

fn spectral(cfg: &Config, cache: &Cache) -> Result<Output, CliError> {
    let fc = &cfg.fiber;
    let exact = 4.0 * PI * PI / (fc.torus_side * fc.torus_side);
    let mut table = Table::new("torus_lambda1", &["resolution", "lambda1", "relative_error"]);
    let mut reports = Vec::new();
    let mut finest = None;
    for &res in &fc.torus_resolutions {
        let f = cache.torus(fc.torus_side, res)?;
        let s = cache.laplacian(&format!("torus-{}-{res}", fc.torus_side), &f)?;
        let l1 = s.eigenvalues()[1];
        table.push(vec![res as f64, l1, (l1 - exact).abs() / exact]);
        finest = Some(s);
    }
    let errs = table.column("relative_error").unwrap();
    let res = table.column("resolution").unwrap();
    let last = *errs.last().unwrap();
    reports.push(BoundReport::leq("torus lambda_1 near 4 pi^2", "torus-calibration", last, 0.02, 0.0, Assertion::Soft).with_detail("lambda1", table.rows.last().unwrap()[1]));
    let order = errs.windows(2).zip(res.windows(2)).map(|(e, r)| (e[0] / e[1]).ln() / (r[1] / r[0]).ln()).fold(f64::INFINITY, f64::min);
    reports.push(BoundReport::geq("torus second-order convergence", "torus-convergence-order", order, 1.8, 0.0, Assertion::Soft));
    let spec = finest.expect("at least two resolutions");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for("spectral"));
    let n = spec.nodes();
    let mut pairs = Vec::new();
    for _ in 0..fc.heat_pairs {
        let (z, w) = (rng.random_range(0..n), rng.random_range(0..n));
        pairs.push(spec.verify_resolvent_heat_identity(z, w, 1e-8)?.with_provenance("pair", format!("{z}-{w}")));
    }
    push_worst(&mut reports, "resolvent-heat identity", pairs);
    let o = octagon(cfg, cache)?;
    let os = cache.laplacian(&format!("octagon-L{}", cfg.fiber.octagon_level), &o)?;
    let mut oct = Table::new("octagon_spectrum", &["index", "eigenvalue"]);
    for (i, l) in os.eigenvalues().iter().take(12).enumerate() {
        oct.push(vec![i as f64, *l]);
    }
    Ok((reports, vec![table, oct]))
}

fn fiber(cfg: &Config, cache: &Cache) -> Result<Output, CliError> {
    let f = octagon(cfg, cache)?;
    let area = f.area();
    let rel = (area - 4.0 * PI).abs() / (4.0 * PI);
    let chi = f.euler_characteristic();
    let reports = vec![
        BoundReport::leq("octagon area near 4 pi", "gauss-bonnet-area", rel, 0.01, 0.0, Assertion::Soft).with_detail("area", area),
        BoundReport::leq("Euler characteristic -2", "euler-characteristic", (chi + 2).abs() as f64, 0.0, 0.0, Assertion::Hard),
        BoundReport::geq("non-negative cotangent weights", "cotangent-weights", f.min_cotan_weight(), 0.0, 0.0, Assertion::Soft),
        BoundReport::leq("side pairings are isometries", "pairing-isometry", f.pairing_isometry_defect(), 0.0, 1e-9, Assertion::Hard),
    ];
    let mut t = Table::new("octagon_mesh", &["level", "vertices", "triangles", "area", "diameter"]);
    t.push(vec![cfg.fiber.octagon_level as f64, f.num_vertices() as f64, f.triangles.len() as f64, area, f.diameter()?]);
    Ok((reports, vec![t]))
}

fn ke(cfg: &Config, cache: &Cache) -> Result<Output, CliError> {
    let kc = &cfg.ke;
    let f = octagon(cfg, cache)?;
    let bg = make_background(&f, &default_perturbation(&f), kc.epsilon)?;
    let sol = solve_ke(&f, &bg, kc.tolerance)?;
    let c0 = check_c0_estimate(&f, &bg, &sol.u);
    let mut reports = vec![
        BoundReport::leq("Newton residual", "ke-newton-residual", sol.residual(), kc.tolerance, 0.0, Assertion::Soft),
        BoundReport::leq("Newton steps", "ke-newton-steps", sol.iterations as f64, kc.max_steps as f64, 0.0, Assertion::Soft),
        BoundReport::from_margin("C0 estimate pointwise", "ke-c0-pointwise", 0.0, 0.0, c0.details["pointwise_margin"], 1e-12, Assertion::Soft),
        BoundReport::from_margin("sup u <= sup(-F)", "ke-c0-sup-bound", 0.0, 0.0, c0.details["sup_margin"], 1e-8, Assertion::Soft),
    ];
    for r in reports.iter_mut() {
        *r = r.clone().with_provenance("epsilon", kc.epsilon).with_provenance("level", cfg.fiber.octagon_level);
    }
    let mut t = Table::new("ke_newton", &["step", "residual"]);
    for (i, r) in sol.residual_history.iter().enumerate() {
        t.push(vec![i as f64, *r]);
    }
    Ok((reports, vec![t]))
}

fn phi_wp(cfg: &Config, cache: &Cache) -> Result<Output, CliError> {
    let pc = &cfg.phi;
    let f = octagon(cfg, cache)?;
    let spec = cache.laplacian(&format!("octagon-L{}", cfg.fiber.octagon_level), &f)?;
    let d = f.diameter()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for("phi_wp"));
    let mut reports = Vec::new();
    let mut phis = Vec::new();
    for k in 0..pc.samples {
        let chi = random_chi(f.num_vertices(), k, &mut rng);
        let phi = solve_phi(&spec, &chi)?;
        phis.push(check_phi_bound(&spec, &phi, &chi, d, 1, pc.slack)?.with_provenance("sample", k));
    }
    push_worst(&mut reports, "min phi >= P_1(d) int chi", phis);
    let mut det = Vec::new();
    for i in 0..pc.bordered_instances {
        let n = pc.bordered_dims[i % pc.bordered_dims.len()];
        det.push(bordered_determinant_check(&BorderedMetric::random(n, &mut rng))?);
    }
    push_worst(&mut reports, "bordered determinant identity", det);
    let qd = quadratic_differential_basis(&f)?;
    let dim = kernel_dimension(&qd.singular_values);
    reports.push(BoundReport::geq("quadratic-differential gap", "qdiff-singular-gap", qd.gap(), 10.0, 0.0, Assertion::Soft).with_provenance("level", cfg.fiber.octagon_level));
    reports.push(BoundReport::leq("kernel dimension 3g-3", "qdiff-kernel-dimension", (dim as f64 - QD_DIMENSION as f64).abs(), 0.0, 0.0, Assertion::Hard).with_detail("dimension", dim as f64));
    let mut sv = Table::new("qdiff_singular_values", &["index", "sigma"]);
    for (i, s) in qd.singular_values.iter().enumerate() {
        sv.push(vec![i as f64, *s]);
    }
    let forms: Vec<KSForm> = qd.fields.iter().map(|q| harmonic_beltrami(&f, q)).collect();
    let g = wp_gram(&f.area_weights, &forms)?;
    let gram: Vec<Vec<C64>> = (0..g.nrows()).map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect()).collect();
    let herm = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| (gram[i][j] - gram[j][i].conj()).norm()).fold(0.0, f64::max);
    let min_diag = (0..3).map(|i| gram[i][i].re).fold(f64::INFINITY, f64::min);
    reports.push(BoundReport::leq("WP Gram Hermitian", "wp-gram-hermitian", herm, 0.0, 1e-12, Assertion::Hard));
    reports.push(BoundReport::geq("WP Gram positive diagonal", "wp-gram-positive", min_diag, 0.0, 0.0, Assertion::Hard));
    let mut gt = Table::new("wp_gram", &["i", "j", "re", "im"]);
    for (i, row) in gram.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            gt.push(vec![i as f64, j as f64, z.re, z.im]);
        }
    }
    Ok((reports, vec![sv, gt]))
}

/// Non-negative test densities: uniform noise, single spikes and smooth bumps.
pub fn random_chi(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Field {
    let v: Vec<f64> = match k % 3 {
        0 => (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
        1 => {
            let mut v = vec![0.0; n];
            v[rng.random_range(0..n)] = rng.random_range(0.5..2.0);
            v
        }
        _ => {
            let c = rng.random_range(0..n);
            (0..n).map(|i| if (i as i64 - c as i64).abs() < 20 { rng.random_range(0.0..1.0) } else { 0.0 }).collect()
        }
    };
    Field::real(&v)
}

/// Position of the largest ratio between consecutive singular values.
pub fn kernel_dimension(sigma: &[f64]) -> usize {
    (1..sigma.len())
        .max_by(|&a, &b| {
            let r = |i: usize| sigma[i] / sigma[i - 1].max(f64::MIN_POSITIVE);
            r(a).total_cmp(&r(b))
        })
        .unwrap_or(0)
}

fn random_xi(len: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..len).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// Spectrum whose only non-harmonic eigenvalue below `m` is planted at m/2.
pub fn adversarial_spectrum(m: f64) -> Result<SpectralDecomposition, CliError> {
    let vals = [0.0, 0.5 * m, m + 1.0, m + 2.0];
    let a = SparseMatrix::from_triplets(4, vals.iter().enumerate().map(|(i, &v)| (i, i, v)).collect());
    Ok(SpectralDecomposition::from_sparse(&a, &[1.0; 4], 4, DegreeTag::Function)?.with_harmonic_dim(1))
}

fn resonance_report(m: f64) -> Result<BoundReport, CliError> {
    let spec = adversarial_spectrum(m)?;
    let bad = Field::real(&[0.0, 1.0, 1.0, 0.0]);
    let good = Field::real(&[0.0, 0.0, 1.0, 1.0]);
    let rejected = matches!(spec.complement_resolvent(-m, &bad), Err(kecurv::Error::Resonance { .. }));
    let accepted = spec.complement_resolvent(-m, &good).is_ok();
    let ok = (rejected && accepted) as u8 as f64;
    Ok(BoundReport::geq("(box - m)^{-1} rejects mass below m", "resonance-guard", ok, 1.0, 0.0, Assertion::Hard).with_provenance("m", m))
}

fn curvature(cfg: &Config, cache: &Cache) -> Result<Output, CliError> {
    let cc = &cfg.curvature;
    let f = octagon(cfg, cache)?;
    let pn = p_n(1, f.diameter()?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for("curvature"));
    let mut reports = Vec::new();

    let (gt, gs) = geometric_direct_image(&f, 0, 1)?;
    let t = curvature_direct_image(&gs, 1, &gt)?;
    reports.push(cancellation_report(&t, "geometric p=0 m=1 cancellation", "direct-image-cancellation").with_provenance("mode", "geom1d"));
    let (wt, ws) = geometric_tangent(&f, 0)?;
    let t = curvature_tangent(&ws, &wt)?;
    reports.push(cancellation_report(&t, "geometric tangent p=0 cancellation", "tangent-cancellation").with_provenance("mode", "geom1d"));

    let model = SyntheticModel::random(cc.synthetic_n, cc.synthetic_nodes, cc.synthetic_ks, cfg.seed_for("synthetic"))?;
    let (st, ss) = synthetic_direct_image(&model, 0, 1, 1)?;
    let t = curvature_direct_image(&ss, 1, &st)?;
    reports.push(cancellation_report(&t, "synthetic p=0 m=1 cancellation", "direct-image-cancellation").with_provenance("mode", "synthetic"));
    let (swt, sws) = synthetic_tangent(&model, 0, 1)?;
    let t = curvature_tangent(&sws, &swt)?;
    reports.push(cancellation_report(&t, "synthetic tangent p=0 cancellation", "tangent-cancellation").with_provenance("mode", "synthetic"));

    let mut herm = Vec::new();
    let mut nak = Vec::new();
    let mut tab = Table::new("nakano", &["m", "min_eigenvalue", "bound_factor"]);
    for &m in &cc.twists {
        let (gt, gs) = geometric_direct_image(&f, 1, m)?;
        let t = curvature_pluricanonical(&gs, m, &gt)?;
        herm.push(BoundReport::leq("hermitian", "curvature-hermitian", t.hermitian_defect(), 0.0, 1e-10, Assertion::Hard).with_provenance("m", m));
        let scale = CurvatureTensor::frobenius(&t.entries);
        for _ in 0..cc.xi_samples {
            let xi = random_xi(t.num_ks * t.num_sections, &mut rng);
            let x2: f64 = xi.iter().map(|z| z.norm_sqr()).sum();
            nak.push(nakano_check(&t, &gs, &gt, pn, &xi, 1e-6 * scale * x2));
        }
        tab.push(vec![m as f64, t.min_eigenvalue(None)?, m as f64 * pn]);
    }
    for p in 0..=cc.synthetic_n {
        let m = if p == 0 { 1 } else { 2 };
        let (st, ss) = synthetic_direct_image(&model, p, m, 2)?;
        let t = curvature_direct_image(&ss, m, &st)?;
        herm.push(BoundReport::leq("hermitian", "curvature-hermitian", t.hermitian_defect(), 0.0, 1e-10, Assertion::Hard).with_provenance("p", p));
        let (swt, sws) = synthetic_tangent(&model, p, 2)?;
        let t = curvature_tangent(&sws, &swt)?;
        herm.push(BoundReport::leq("hermitian", "curvature-hermitian", t.hermitian_defect(), 0.0, 1e-10, Assertion::Hard).with_provenance("tangent_p", p));
        if p > 0 && p < cc.synthetic_n {
            let (st, ss) = synthetic_direct_image(&model, p, 1, 2)?;
            let t = curvature_direct_image(&ss, 1, &st)?;
            let pg = model.resolvent_kernel_min()?;
            let mut est = Vec::new();
            for i in 0..t.num_ks {
                for k in 0..t.num_sections {
                    est.push(direct_image_estimate(&t, &ss, &st, i, k, pg, 1e-10)?);
                }
            }
            push_worst(&mut reports, &format!("direct-image estimate p={p}"), est);
        }
    }
    push_worst(&mut reports, "Hermitian symmetry", herm);
    push_worst(&mut reports, "Nakano lower bound", nak);

    // WP holomorphic sectional curvature
    let (wt, ws) = geometric_tangent(&f, 1)?;
    let t = curvature_tangent(&ws, &wt)?;
    let scale = CurvatureTensor::frobenius(&t.entries);
    let mut hsc = Vec::new();
    let mut est = Vec::new();
    let mut basis = Vec::new();
    for i in 0..t.num_ks {
        let mut c = vec![C64::new(0.0, 0.0); t.num_ks];
        c[i] = C64::new(1.0, 0.0);
        basis.push(c);
        est.push(tangent_estimate(&t, &ws, &wt, i, i, pn, 1e-10)?);
    }
    for c in basis.into_iter().chain((0..cc.combinations).map(|_| random_xi(t.num_ks, &mut rng))) {
        let v = evaluate_sectional(&t, &c, &c).re;
        hsc.push(BoundReport::leq("WP sectional", "wp-holomorphic-sectional", v, -1e-12 * scale, 0.0, Assertion::Soft));
    }
    push_worst(&mut reports, "WP holomorphic sectional curvature < 0", hsc);
    push_worst(&mut reports, "tangent upper estimate", est);

    // the two formulas at n = 1, p = 1, m = 1, reported only
    let (dt, ds) = geometric_direct_image(&f, 1, 1)?;
    let d = curvature_direct_image(&ds, 1, &dt)?;
    let mut cmp = Table::new("serre_duality_comparison", &["direct_norm", "tangent_norm", "rel_diff_neg", "rel_diff_neg_conj"]);
    let (dn, tn) = (CurvatureTensor::frobenius(&d.entries), CurvatureTensor::frobenius(&t.entries));
    let rel = |conj: bool| {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..d.num_sections.min(t.num_sections) {
                    for l in 0..d.num_sections.min(t.num_sections) {
                        let tv = if conj { t.get(i, j, k, l).conj() } else { t.get(i, j, k, l) };
                        s += (d.get(i, j, k, l) + tv).norm_sqr();
                    }
                }
            }
        }
        s.sqrt() / dn.max(tn)
    };
    cmp.push(vec![dn, tn, rel(false), rel(true)]);

    for m in [1.0, 2.0, 5.0] {
        reports.push(resonance_report(m)?);
    }
    Ok((reports, vec![tab, cmp]))
}

fn finsler(cfg: &Config, cache: &Cache) -> Result<Output, CliError> {
    let fc = &cfg.finsler;
    let o = C64::new(0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for("finsler"));
    let mut reports = Vec::new();
    let mut conv = Vec::new();
    let mut ahl = Vec::new();
    let mut eq = Vec::new();
    let mut refused = Vec::new();
    let mut poincare = Table::new("poincare_curvature_error", &["h", "max_error"]);
    for &h in &fc.spacings {
        let slack = fc.slack_coefficient * h * h;
        let half = (0.5 / h).round() as usize;
        let samples = vec![
            CurveSample::centered("rho1", o, h, half, |s| poincare_density(1.0, s)),
            CurveSample::centered("rho2", o, h, half, |s| poincare_density(1.7, s + C64::new(0.2, -0.1))),
            CurveSample::centered("flat", o, h, half, |_| 0.8),
        ];
        for _ in 0..fc.weight_draws {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..2.0)).collect();
            conv.push(convex_sum_curvature_check(&samples, &w, slack)?);
        }
        eq.push(convex_sum_curvature_check(&samples[..1], &[0.7], 1e-10)?);
        let k = discrete_curvature(&samples[0])?;
        poincare.push(vec![h, k.iter().map(|v| (v.value + 1.0).abs()).fold(0.0, f64::max)]);

        let (a, radius) = (3.0, 1.0);
        let half = (0.6 / h).round() as usize;
        let g = CurveSample::centered("rho/A", o, h, half, |s| poincare_density(radius, s) / a);
        let r = ahlfors_schwarz_check(&g, a, radius, slack, 1e-10)?;
        eq.push(r.clone());
        let g = CurveSample::centered("0.6 rho/A", o, h, half, |s| 0.6 * poincare_density(radius, s) / a);
        ahl.push(ahlfors_schwarz_check(&g, a, radius, slack, slack)?);
        let g = CurveSample::centered("1.4 rho/A", o, h, half, |s| 1.4 * poincare_density(radius, s) / a);
        let r = ahlfors_schwarz_check(&g, a, radius, slack, slack)?;
        let ok = (r.status == Status::HypothesisNotSatisfied && !r.pass) as u8 as f64;
        refused.push(BoundReport::geq("refusal", "ahlfors-schwarz-refusal", ok, 1.0, 0.0, Assertion::Hard).with_provenance("h", h));
    }
    push_worst(&mut reports, "convex-sum curvature", conv);
    push_worst(&mut reports, "equality cases", eq);
    push_worst(&mut reports, "Ahlfors-Schwarz comparison", ahl);
    push_worst(&mut reports, "Ahlfors-Schwarz refuses failed hypothesis", refused);
    let e = poincare.column("max_error").unwrap();
    let hs = poincare.column("h").unwrap();
    if e.len() >= 2 {
        let order = (e[0] / e[1]).ln() / (hs[0] / hs[1]).ln();
        reports.push(BoundReport::geq("Poincare curvature O(h^2)", "poincare-curvature-order", order, 1.8, 0.0, Assertion::Soft));
    }

    // G_1 along osculating curves on the octagon fiber
    let f = octagon(cfg, cache)?;
    let pn = p_n(1, f.diameter()?)?;
    let (wt, ws) = geometric_tangent(&f, 1)?;
    let t = curvature_tangent(&ws, &wt)?;
    let k2 = ws.sections.as_ref().expect("sections slot");
    let mut curve = Vec::new();
    let mut plot = Table::new("finsler_curve", &["s", "curvature", "bound"]);
    for draw in 0..10 {
        let c = random_xi(3, &mut rng);
        let a: Vec<C64> = (0..f.num_vertices()).map(|v| (0..3).map(|i| c[i] * wt.ks[i][v]).sum()).collect();
        let n1 = wp_degree_p_surface(&wt, k2, &a, 1)?;
        let input = CurveBoundInput { p: 1, pn, norm_1: n1, norm_p: n1, norm_next: 0.0, sectional: evaluate_sectional(&t, &c, &c).re };
        let h = 0.02 / (input.osculating_curvature().abs() * n1 * n1).sqrt();
        curve.push(finsler_curvature_bound_check(&input, h, 3, 0.0)?);
        if draw == 0 {
            let sample = input.model_curve(o, h, 10);
            for v in discrete_curvature(&sample)?.iter().filter(|v| v.iy == 10) {
                plot.push(vec![v.s.re, v.value, input.bound()]);
            }
        }
    }
    // synthetic degrees 1 and 2
    let cc = &cfg.curvature;
    let model = SyntheticModel::random(cc.synthetic_n, cc.synthetic_nodes, cc.synthetic_ks, cfg.seed_for("synthetic"))?;
    let pg = model.resolvent_kernel_min()?;
    let (t1s, s1s) = synthetic_tangent(&model, 1, cc.synthetic_ks)?;
    let t1 = curvature_tangent(&s1s, &t1s)?;
    let slot1 = model.polyvector_slot(1)?;
    let slot2 = model.polyvector_slot(2)?;
    for _ in 0..5 {
        let c = random_xi(cc.synthetic_ks, &mut rng);
        let a = model.ks.iter().zip(&c).fold(KSForm { n: model.n, coefficients: vec![C64::new(0.0, 0.0); model.ks[0].coefficients.len()] }, |acc, (k, ci)| acc.add_scaled(*ci, k));
        let n1 = wp_degree_p(&a, 1, &slot1)?;
        let n2 = wp_degree_p(&a, 2, &slot2)?;
        let one = CurveBoundInput { p: 1, pn: pg, norm_1: n1, norm_p: n1, norm_next: n2, sectional: evaluate_sectional(&t1, &c, &c).re };
        let h = 0.02 / (one.osculating_curvature().abs() * n1 * n1).sqrt();
        curve.push(finsler_curvature_bound_check(&one, h, 3, 0.0)?.with_provenance("mode", "synthetic"));
        if model.n == 2 {
            let w = wedge_power(&a, 2)?;
            let hw = slot2.harmonic_project(&w.field());
            let nu = PolyForm { layout: w.layout.clone(), values: hw.values };
            let (t2s, s2s) = synthetic_tangent_with_sections(&model, 2, vec![nu])?;
            let t2 = curvature_tangent(&s2s, &t2s)?;
            let two = CurveBoundInput { p: 2, pn: pg, norm_1: n1, norm_p: n2, norm_next: 0.0, sectional: evaluate_sectional(&t2, &c, &[C64::new(1.0, 0.0)]).re };
            let h = 0.02 / (two.osculating_curvature().abs() * n2 * n2).sqrt();
            curve.push(finsler_curvature_bound_check(&two, h, 3, 0.0)?.with_provenance("mode", "synthetic"));
        }
    }
    push_worst(&mut reports, "Finsler curvature bound", curve);
    Ok((reports, vec![poincare, plot]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_dimension_finds_largest_jump() {
        assert_eq!(kernel_dimension(&[1e-3, 2e-3, 3e-3, 0.9, 1.0]), 3);
    }

    #[test]
    fn worst_keeps_smallest_margin() {
        let a = BoundReport::geq("a", "x", 1.0, 0.0, 0.0, Assertion::Soft);
        let b = BoundReport::geq("b", "x", -1.0, 0.0, 0.0, Assertion::Soft);
        let w = worst("w", vec![a, b]).unwrap();
        assert_eq!(w.margin, -1.0);
        assert!(!w.pass);
        assert_eq!(w.details["cases"], 2.0);
    }

    #[test]
    fn resonance_guard_report_passes() {
        assert!(resonance_report(1.0).unwrap().pass);
    }
}
