use kecurv_cli::cache::Cache;
use kecurv_cli::config::Config;
use kecurv_cli::output::to_json;
use kecurv_cli::run_all;
use std::process::Command;

fn kecurv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kecurv"))
}

#[test]
fn pn_table_column_is_monotone_decreasing() {
    let out = kecurv().args(["pn-table", "--n", "1", "--steps", "30"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "r,p_n,bessel_estimate,margin");
    let p: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(p.len(), 30);
    assert!(p.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn pn_table_rejects_bad_range() {
    let out = kecurv().args(["pn-table", "--n", "1", "--r-min", "2", "--r-max", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn strip_timestamp(json: &str) -> String {
    json.lines().filter(|l| !l.trim_start().starts_with("\"generated_at\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn verify_is_deterministic_for_fixed_seed() {
    let mut cfg = Config::default();
    cfg.verify.suites = vec!["resolvent".into(), "finsler".into()];
    cfg.fiber.octagon_level = 3;
    cfg.resolvent.grid_points = 10;
    let cache = Cache::default();
    let a = to_json(&run_all(&cfg, &cache, false));
    let b = to_json(&run_all(&cfg, &cache, true));
    assert_eq!(strip_timestamp(&a), strip_timestamp(&b));
    assert!(a.contains("\"check_id\""));
}

#[test]
fn verify_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[general]\nseed = 1\n[ke]\nepsilonn = 0.1\n").unwrap();
    let out = kecurv().args(["verify", "all", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

#[test]
fn suite_errors_name_the_module() {
    let mut cfg = Config::default();
    cfg.verify.suites = vec!["fiber".into()];
    cfg.fiber.octagon_level = 99;
    let b = run_all(&cfg, &Cache::default(), false);
    let e = b.suites[0].error.as_deref().unwrap();
    assert!(e.starts_with("fiber:"), "{e}");
    assert_eq!(b.exit_code, 1);
}

#[test]
fn fiber_build_and_spectrum_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("t.txt");
    let out = kecurv().args(["fiber", "build", "--kind", "torus", "--resolution", "8", "--out"]).arg(&mesh).output().unwrap();
    assert!(out.status.success());
    let out = kecurv().args(["spectrum", "--count", "2", "--mesh"]).arg(&mesh).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let l1: f64 = text.lines().nth(1).unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!((l1 - 4.0 * std::f64::consts::PI.powi(2)).abs() < 0.15 * l1);
}

#[test]
fn curvature_writes_tensor_with_complex_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("b.json");
    std::fs::write(&bundle, r#"{"n": 2, "nodes": 16, "num_ks": 2, "seed": 5, "sections": 1}"#).unwrap();
    let t = dir.path().join("t.json");
    let r = dir.path().join("r.json");
    let out = kecurv()
        .args(["curvature", "--mode", "synthetic", "--m", "1", "--p", "0", "--in"])
        .arg(&bundle)
        .arg("--out")
        .arg(&t)
        .arg("--report")
        .arg(&r)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&t).unwrap()).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 4);
    assert_eq!(v["entries"][0].as_array().unwrap().len(), 2);
    let rep = std::fs::read_to_string(&r).unwrap();
    assert!(rep.contains("direct-image-cancellation"));
}

#[test]
fn finsler_check_reads_curve_bound_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.json");
    std::fs::write(
        &input,
        r#"{"input": {"p": 1, "pn": 0.01, "norm_1": 1.0, "norm_p": 1.0, "norm_next": 0.0, "sectional": -0.5}, "h": 0.05, "half": 3}"#,
    )
    .unwrap();
    let svg = dir.path().join("k.svg");
    let out = kecurv().args(["finsler", "check", "--kind", "curve-bound", "--in"]).arg(&input).arg("--svg").arg(&svg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("finsler-curvature-bound"));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}
