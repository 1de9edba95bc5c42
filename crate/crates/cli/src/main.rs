use clap::{Args, Parser, Subcommand, ValueEnum};
use kecurv::curvature::*;
use kecurv::fiber::io::{read_mesh, write_mesh};
use kecurv::fiber::{assemble_laplacian, build_hyperbolic_octagon_fiber, build_torus_fiber, DiscreteFiber};
use kecurv::finsler::*;
use kecurv::ke::{check_c0_estimate, default_perturbation, make_background, solve_ke};
use kecurv::linalg::C64;
use kecurv::ks_wp::{check_phi_bound, harmonic_beltrami, quadratic_differential_basis, solve_phi, wp_gram, KSForm};
use kecurv::report::BoundReport;
use kecurv::spectral::Field;
use kecurv_cli::cache::Cache;
use kecurv_cli::config::Config;
use kecurv_cli::output::{svg_line_plot, to_json, write_text, Series, Table};
use kecurv_cli::suites::pn_table;
use kecurv_cli::{run_all, CliError};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "kecurv", version, about = "Curvature of direct images on moduli of canonically polarized manifolds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate P_n(r) against the Bessel estimate.
    PnTable {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0.05)]
        r_min: f64,
        #[arg(long, default_value_t = 6.0)]
        r_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build torus and octagon meshes.
    #[command(subcommand)]
    Fiber(FiberCmd),
    /// Function Laplacian spectrum of a mesh.
    Spectrum {
        #[command(flatten)]
        mesh: MeshArg,
        /// Number of eigenvalues printed.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete Kahler-Einstein solver.
    #[command(subcommand)]
    Ke(KeCmd),
    /// The function phi solving (box + 1) phi = chi.
    #[command(subcommand)]
    Phi(PhiCmd),
    /// Weil-Petersson metric.
    #[command(subcommand)]
    Wp(WpCmd),
    /// Quadratic differentials.
    #[command(subcommand)]
    Qdiff(QdiffCmd),
    /// Assemble a curvature tensor.
    Curvature {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(long, value_enum, default_value_t = Kind::Direct)]
        kind: Kind,
        /// Bundle description (JSON); defaults apply without it.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Finsler metric and curvature checks.
    #[command(subcommand)]
    Finsler(FinslerCmd),
    /// Run the verification suites.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand)]
enum FiberCmd {
    Build {
        #[arg(long, value_enum)]
        kind: FiberKindArg,
        /// Refinement level (octagon) or cells per side (torus).
        #[arg(long)]
        resolution: usize,
        #[arg(long, default_value_t = 1.0)]
        side: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum KeCmd {
    Solve {
        #[command(flatten)]
        mesh: MeshArg,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PhiCmd {
    /// Solve (box + 1) phi = chi.
    Solve {
        #[command(flatten)]
        mesh: MeshArg,
        /// One value per vertex; the constant 1 when omitted.
        #[arg(long)]
        chi: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check min phi >= P_1(d) * int chi.
    Check {
        #[command(flatten)]
        mesh: MeshArg,
        #[arg(long)]
        chi: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        slack: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum WpCmd {
    /// Weil-Petersson Gram matrix of the harmonic Beltrami basis.
    Gram {
        #[command(flatten)]
        mesh: MeshArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum QdiffCmd {
    /// Holomorphic quadratic differentials and the singular-value gap.
    Basis {
        #[command(flatten)]
        mesh: MeshArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FinslerCmd {
    Check {
        #[arg(long, value_enum)]
        kind: FinslerKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plot discrete curvature along the middle grid row.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    All {
        /// Octagon refinement level.
        #[arg(long)]
        resolution: Option<u32>,
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "verify-out")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct MeshArg {
    /// Mesh file; the octagon at --level is built when absent.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    level: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum FiberKindArg {
    Torus,
    Octagon,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Geom1d,
    Synthetic,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Kind {
    Direct,
    Pluricanonical,
    Tangent,
}

#[derive(Clone, Copy, ValueEnum)]
enum FinslerKind {
    ConvexSum,
    CurveBound,
    Ahlfors,
}

/// Input of `curvature --in`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BundleSpec {
    level: Option<u32>,
    mesh: Option<PathBuf>,
    n: Option<usize>,
    nodes: Option<usize>,
    num_ks: Option<usize>,
    seed: Option<u64>,
    sections: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvexSumInput {
    samples: Vec<CurveSample>,
    weights: Vec<f64>,
    #[serde(default)]
    slack: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AhlforsInput {
    curve: CurveSample,
    a: f64,
    radius: f64,
    hypothesis_slack: f64,
    #[serde(default)]
    slack: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveBoundFile {
    input: CurveBoundInput,
    h: f64,
    half: usize,
    #[serde(default)]
    slack: f64,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    reports: &'a [BoundReport],
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn load_fiber(m: &MeshArg, cache: &Cache) -> Result<DiscreteFiber, CliError> {
    match &m.mesh {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(p.display().to_string(), e))?;
            Ok(read_mesh(&text)?)
        }
        None => cache.octagon(m.level),
    }
}

fn read_chi(path: Option<&Path>, n: usize) -> Result<Field, CliError> {
    let Some(p) = path else { return Ok(Field::constant(n, 1.0)) };
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(p).map_err(|e| CliError::Output(e.to_string()))?;
    let mut v = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::Output(e.to_string()))?;
        for f in rec.iter() {
            v.push(f.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?);
        }
    }
    if v.len() != n {
        return Err(CliError::Usage(format!("chi has {} values, mesh has {n} vertices", v.len())));
    }
    Ok(Field::real(&v))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_reports(path: Option<&Path>, reports: &[BoundReport]) -> Result<i32, CliError> {
    emit(path, &to_json(&ReportFile { reports }))?;
    Ok(reports.iter().any(|r| !r.pass) as i32)
}

fn vector_table(name: &str, header: &str, v: &[f64]) -> Table {
    let mut t = Table::new(name, &["vertex", header]);
    for (i, x) in v.iter().enumerate() {
        t.push(vec![i as f64, *x]);
    }
    t
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cache = Cache::from_env();
    match cli.cmd {
        Cmd::PnTable { n, r_min, r_max, steps, out } => {
            if steps < 2 || !(r_min > 0.0 && r_max > r_min) {
                return Err(CliError::Usage("need 0 < r-min < r-max and steps >= 2".into()));
            }
            let r: Vec<f64> = (0..steps).map(|i| r_min + (r_max - r_min) * i as f64 / (steps - 1) as f64).collect();
            emit(out.as_deref(), &pn_table(n, &r)?.to_csv()?)?;
        }
        Cmd::Fiber(FiberCmd::Build { kind, resolution, side, out }) => {
            let f = match kind {
                FiberKindArg::Octagon => build_hyperbolic_octagon_fiber(resolution as u32)?,
                FiberKindArg::Torus => build_torus_fiber(side, resolution)?,
            };
            write_text(&out, &write_mesh(&f))?;
            eprintln!("{} vertices, {} triangles, area {:.6}", f.num_vertices(), f.triangles.len(), f.area());
        }
        Cmd::Spectrum { mesh, count, out } => {
            let f = load_fiber(&mesh, &cache)?;
            let s = assemble_laplacian(&f)?;
            for (i, l) in s.eigenvalues().iter().take(count).enumerate() {
                println!("{i}\t{l:.12e}");
            }
            if let Some(p) = out {
                let file = std::fs::File::create(&p).map_err(|e| CliError::Io(p.display().to_string(), e))?;
                s.write_to(std::io::BufWriter::new(file))?;
            }
        }
        Cmd::Ke(KeCmd::Solve { mesh, epsilon, tol, out, report }) => {
            let f = load_fiber(&mesh, &cache)?;
            let bg = make_background(&f, &default_perturbation(&f), epsilon)?;
            let sol = solve_ke(&f, &bg, tol)?;
            write_text(&out, &vector_table("u", "u", &sol.u).to_csv()?)?;
            eprintln!("{} Newton steps, residual {:.3e}", sol.iterations, sol.residual());
            let r = check_c0_estimate(&f, &bg, &sol.u);
            return emit_reports(report.as_deref(), &[r]);
        }
        Cmd::Phi(PhiCmd::Solve { mesh, chi, out }) => {
            let f = load_fiber(&mesh, &cache)?;
            let s = assemble_laplacian(&f)?;
            let phi = solve_phi(&s, &read_chi(chi.as_deref(), f.num_vertices())?)?;
            write_text(&out, &vector_table("phi", "phi", &phi.re()).to_csv()?)?;
        }
        Cmd::Phi(PhiCmd::Check { mesh, chi, slack, out }) => {
            let f = load_fiber(&mesh, &cache)?;
            let s = assemble_laplacian(&f)?;
            let chi = read_chi(chi.as_deref(), f.num_vertices())?;
            let phi = solve_phi(&s, &chi)?;
            let r = check_phi_bound(&s, &phi, &chi, f.diameter()?, 1, slack)?;
            return emit_reports(out.as_deref(), &[r]);
        }
        Cmd::Wp(WpCmd::Gram { mesh, out }) => {
            let f = load_fiber(&mesh, &cache)?;
            let qd = quadratic_differential_basis(&f)?;
            let forms: Vec<KSForm> = qd.fields.iter().map(|q| harmonic_beltrami(&f, q)).collect();
            let g = wp_gram(&f.area_weights, &forms)?;
            let mut t = Table::new("wp_gram", &["i", "j", "re", "im"]);
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    t.push(vec![i as f64, j as f64, g[(i, j)].re, g[(i, j)].im]);
                }
            }
            emit(out.as_deref(), &t.to_csv()?)?;
        }
        Cmd::Qdiff(QdiffCmd::Basis { mesh, out }) => {
            let f = load_fiber(&mesh, &cache)?;
            let qd = quadratic_differential_basis(&f)?;
            eprintln!("gap {:.3}", qd.gap());
            let mut t = Table::new("qdiff", &["index", "sigma"]);
            for (i, s) in qd.singular_values.iter().enumerate() {
                t.push(vec![i as f64, *s]);
            }
            emit(out.as_deref(), &t.to_csv()?)?;
        }
        Cmd::Curvature { mode, m, p, kind, input, out, report } => {
            let spec: BundleSpec = match &input {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
                    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
                }
                None => BundleSpec::default(),
            };
            let t = match mode {
                Mode::Geom1d => {
                    let f = load_fiber(&MeshArg { mesh: spec.mesh.clone(), level: spec.level.unwrap_or(4) }, &cache)?;
                    match kind {
                        Kind::Tangent => {
                            let (tb, sl) = geometric_tangent(&f, p)?;
                            curvature_tangent(&sl, &tb)?
                        }
                        _ => {
                            let (tb, sl) = geometric_direct_image(&f, p, m)?;
                            if kind == Kind::Pluricanonical {
                                curvature_pluricanonical(&sl, m, &tb)?
                            } else {
                                curvature_direct_image(&sl, m, &tb)?
                            }
                        }
                    }
                }
                Mode::Synthetic => {
                    let cfg = Config::default();
                    let model = SyntheticModel::random(
                        spec.n.unwrap_or(cfg.curvature.synthetic_n),
                        spec.nodes.unwrap_or(cfg.curvature.synthetic_nodes),
                        spec.num_ks.unwrap_or(cfg.curvature.synthetic_ks),
                        spec.seed.unwrap_or(cfg.general.seed),
                    )?;
                    let ns = spec.sections.unwrap_or(2);
                    match kind {
                        Kind::Tangent => {
                            let (tb, sl) = synthetic_tangent(&model, p, ns)?;
                            curvature_tangent(&sl, &tb)?
                        }
                        Kind::Direct => {
                            let (tb, sl) = synthetic_direct_image(&model, p, m, ns)?;
                            curvature_direct_image(&sl, m, &tb)?
                        }
                        Kind::Pluricanonical => {
                            let (tb, sl) = synthetic_direct_image(&model, p, m, ns)?;
                            curvature_pluricanonical(&sl, m, &tb)?
                        }
                    }
                }
            };
            write_text(&out, &to_json(&t))?;
            let mut reports = vec![BoundReport::leq("hermitian symmetry", "curvature-hermitian", t.hermitian_defect(), 0.0, 1e-10, kecurv::report::Assertion::Hard)];
            if p == 0 && (kind == Kind::Tangent || m == 1) {
                let id = if kind == Kind::Tangent { "tangent-cancellation" } else { "direct-image-cancellation" };
                reports.push(cancellation_report(&t, "p=0 cancellation", id));
            }
            if let Some(r) = report {
                return emit_reports(Some(&r), &reports);
            }
        }
        Cmd::Finsler(FinslerCmd::Check { kind, input, out, svg }) => {
            let text = std::fs::read_to_string(&input).map_err(|e| CliError::Io(input.display().to_string(), e))?;
            let bad = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", input.display()));
            let (report, curve, bound) = match kind {
                FinslerKind::ConvexSum => {
                    let d: ConvexSumInput = serde_json::from_str(&text).map_err(bad)?;
                    let r = convex_sum_curvature_check(&d.samples, &d.weights, d.slack)?;
                    (r, d.samples.into_iter().next(), None)
                }
                FinslerKind::Ahlfors => {
                    let d: AhlforsInput = serde_json::from_str(&text).map_err(bad)?;
                    let r = ahlfors_schwarz_check(&d.curve, d.a, d.radius, d.hypothesis_slack, d.slack)?;
                    (r, Some(d.curve), Some(-d.a))
                }
                FinslerKind::CurveBound => {
                    let d: CurveBoundFile = serde_json::from_str(&text).map_err(bad)?;
                    let r = finsler_curvature_bound_check(&d.input, d.h, d.half, d.slack)?;
                    (r, Some(d.input.model_curve(C64::new(0.0, 0.0), d.h, d.half)), Some(d.input.bound()))
                }
            };
            if let (Some(path), Some(c)) = (svg, curve) {
                let k = discrete_curvature(&c)?;
                let mid = c.ny / 2;
                let pts: Vec<(f64, f64)> = k.iter().filter(|v| v.iy == mid).map(|v| (v.s.re, v.value)).collect();
                let mut series = vec![Series { label: "K".into(), points: pts.clone() }];
                if let Some(b) = bound {
                    series.push(Series { label: "bound".into(), points: pts.iter().map(|p| (p.0, b)).collect() });
                }
                write_text(&path, &svg_line_plot(&c.label, "Re s", "curvature", &series))?;
            }
            return emit_reports(out.as_deref(), &[report]);
        }
        Cmd::Verify(VerifyCmd::All { resolution, parallel, config, out_dir }) => {
            let mut cfg = match &config {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            if let Some(r) = resolution {
                cfg.fiber.octagon_level = r;
            }
            let bundle = run_all(&cfg, &cache, parallel);
            write_text(&out_dir.join("report.json"), &to_json(&bundle))?;
            for s in &bundle.suites {
                for t in &s.tables {
                    write_text(&out_dir.join(format!("{}_{}.csv", s.suite, t.name)), &t.to_csv()?)?;
                }
            }
            print!("{}", bundle.summary());
            return Ok(bundle.exit_code);
        }
    }
    Ok(0)
}
