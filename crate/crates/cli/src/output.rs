//! Tables, report bundles and a small SVG line-plot writer.

use crate::CliError;
use kecurv::report::{Assertion, BoundReport};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table { name: name.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).map_err(|e| CliError::Output(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(|e| CliError::Output(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub reports: Vec<BoundReport>,
    pub tables: Vec<Table>,
    /// Set when the suite aborted; the message names the module.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SuiteResult {
    pub fn hard_failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.pass && r.assertion == Assertion::Hard).count() + self.error.is_some() as usize
    }

    pub fn soft_failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.pass && r.assertion == Assertion::Soft).count()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bundle {
    pub generated_at: u64,
    pub seed: u64,
    pub config: crate::config::Config,
    pub suites: Vec<SuiteResult>,
    pub hard_failures: usize,
    pub soft_failures: usize,
    pub exit_code: i32,
}

impl Bundle {
    pub fn new(config: &crate::config::Config, suites: Vec<SuiteResult>) -> Self {
        let hard = suites.iter().map(SuiteResult::hard_failures).sum();
        let soft = suites.iter().map(SuiteResult::soft_failures).sum();
        let fail = hard > 0 || (config.verify.soft_failures_fatal && soft > 0);
        Bundle {
            generated_at: std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            seed: config.general.seed,
            config: config.clone(),
            suites,
            hard_failures: hard,
            soft_failures: soft,
            exit_code: fail as i32,
        }
    }

    /// One line per report.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for suite in &self.suites {
            if let Some(e) = &suite.error {
                let _ = writeln!(s, "FAIL  {:<10} error: {e}", suite.suite);
            }
            for r in &suite.reports {
                let tag = if r.pass { "ok  " } else { "FAIL" };
                let _ = writeln!(s, "{tag}  {:<10} {:<40} margin {:+.3e} (slack {:.1e})", suite.suite, r.name, r.margin, r.slack_used);
            }
        }
        let _ = writeln!(s, "hard failures: {}, soft failures: {}", self.hard_failures, self.soft_failures);
        s
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Self-contained SVG line plot.
pub fn svg_line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-300 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, w / 2.0, esc(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.3e}</text>"#, sx(xv), h - m + 16.0, xv);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3e}</text>"#, m - 4.0, sy(yv) + 4.0, yv);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#, w / 2.0, h - 14.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        esc(ylabel)
    );
    for (i, ser) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let d: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .enumerate()
            .map(|(j, &(x, y))| format!("{}{:.2} {:.2}", if j == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, d.join(" "));
        let ly = m + 16.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#, w - m - 120.0, esc(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new("t", &["r", "p"]);
        t.push(vec![0.5, 0.25]);
        let csv = t.to_csv().unwrap();
        assert_eq!(csv.lines().next().unwrap(), "r,p");
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(t.column("p").unwrap(), vec![0.25]);
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_line_plot("K <vs> s", "s", "K", &[Series { label: "a".into(), points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)] }]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("K &lt;vs&gt; s"));
        assert!(!s.contains("NaN"));
    }
}
