//! Degree-p Weil-Petersson Finsler functions and curvature checks on
//! sampled metrics over a complex parameter grid.
//!
//! Curvature of a conformal metric G |ds|^2 is K = -(d^2 log G / ds dsbar) / G,
//! evaluated with the 5-point Laplacian as -(Lap_h log G) / (4 G).

use crate::curvature::{wedge_power, CurvatureTensor, GeometricWedgeTables};
use crate::error::{Error, Result};
use crate::ks_wp::KSForm;
use crate::linalg::C64;
use crate::report::{Assertion, BoundReport, Status};
use crate::spectral::{DegreeTag, Field, SpectralDecomposition};
use serde::{Deserialize, Serialize};

/// Samples of a positive density on the grid origin + h (ix + i iy).
/// With `ny == 1` the grid is one real parameter and the second difference
/// replaces the Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub label: String,
    pub origin: C64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: values[iy * nx + ix].
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridValue {
    pub ix: usize,
    pub iy: usize,
    pub s: C64,
    pub value: f64,
}

impl CurveSample {
    pub fn from_fn<F: Fn(C64) -> f64>(label: &str, origin: C64, h: f64, nx: usize, ny: usize, f: F) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                values.push(f(origin + C64::new(h * ix as f64, h * iy as f64)));
            }
        }
        CurveSample { label: label.to_string(), origin, h, nx, ny, values }
    }

    /// Square grid of side 2 * half + 1 centred at `center`.
    pub fn centered<F: Fn(C64) -> f64>(label: &str, center: C64, h: f64, half: usize, f: F) -> Self {
        let o = center - C64::new(h * half as f64, h * half as f64);
        Self::from_fn(label, o, h, 2 * half + 1, 2 * half + 1, f)
    }

    pub fn point(&self, ix: usize, iy: usize) -> C64 {
        self.origin + C64::new(self.h * ix as f64, self.h * iy as f64)
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn is_one_dimensional(&self) -> bool {
        self.ny == 1
    }

    pub fn interior(&self) -> Vec<(usize, usize)> {
        if self.is_one_dimensional() {
            return (1..self.nx.saturating_sub(1)).map(|ix| (ix, 0)).collect();
        }
        let mut out = Vec::new();
        for iy in 1..self.ny.saturating_sub(1) {
            for ix in 1..self.nx.saturating_sub(1) {
                out.push((ix, iy));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let min_ny = if self.ny == 1 { 1 } else { 3 };
        if self.nx < 3 || self.ny < min_ny || self.values.len() != self.nx * self.ny {
            return Err(Error::Domain(format!("grid needs at least 3 points per direction, got {} x {}", self.nx, self.ny)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Domain(format!("grid spacing must be positive, got {}", self.h)));
        }
        if let Some((i, v)) = self.values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Positivity { vertex: i, value: *v });
        }
        Ok(())
    }

    fn same_grid(&self, other: &CurveSample) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.h == other.h && self.origin == other.origin
    }

    /// Lap_h of log G at an interior point.
    fn log_laplacian(&self, ix: usize, iy: usize) -> f64 {
        let l = |i: usize, j: usize| self.at(i, j).ln();
        let c = l(ix, iy);
        let mut s = l(ix + 1, iy) + l(ix - 1, iy) - 2.0 * c;
        if !self.is_one_dimensional() {
            s += l(ix, iy + 1) + l(ix, iy - 1) - 2.0 * c;
        }
        s / (self.h * self.h)
    }
}

/// Curvature at every interior grid point.
pub fn discrete_curvature(sample: &CurveSample) -> Result<Vec<GridValue>> {
    sample.validate()?;
    Ok(sample
        .interior()
        .into_iter()
        .map(|(ix, iy)| GridValue {
            ix,
            iy,
            s: sample.point(ix, iy),
            value: -sample.log_laplacian(ix, iy) / (4.0 * sample.at(ix, iy)),
        })
        .collect())
}

/// Discrete d^2 log G / ds dsbar at every interior grid point.
pub fn discrete_ddbar_log(sample: &CurveSample) -> Result<Vec<GridValue>> {
    sample.validate()?;
    Ok(sample
        .interior()
        .into_iter()
        .map(|(ix, iy)| GridValue { ix, iy, s: sample.point(ix, iy), value: sample.log_laplacian(ix, iy) / 4.0 })
        .collect())
}

/// Poincare density 2 R^2 / (R^2 - |s|^2)^2 on the disk of radius R, so
/// that ddbar log rho = rho.
pub fn poincare_density(radius: f64, s: C64) -> f64 {
    let d = radius * radius - s.norm_sqr();
    2.0 * radius * radius / (d * d)
}

/// K of sum a_j G_j <= sum (a_j G_j)^2 / (sum a_i G_i)^2 K_{a_j G_j} at each
/// interior point; the report carries the worst margin.
pub fn convex_sum_curvature_check(samples: &[CurveSample], weights: &[f64], slack: f64) -> Result<BoundReport> {
    if samples.is_empty() || samples.len() != weights.len() {
        return Err(Error::Mismatch(format!("{} samples and {} weights", samples.len(), weights.len())));
    }
    if let Some(a) = weights.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::Domain(format!("convex-sum weights must be positive, got {a}")));
    }
    for s in samples {
        s.validate()?;
        if !s.same_grid(&samples[0]) {
            return Err(Error::Mismatch(format!("sample '{}' lives on a different grid", s.label)));
        }
    }
    let scaled: Vec<CurveSample> = samples
        .iter()
        .zip(weights)
        .map(|(s, a)| CurveSample { values: s.values.iter().map(|v| v * a).collect(), ..s.clone() })
        .collect();
    let mut total = scaled[0].clone();
    total.label = "sum".into();
    for s in &scaled[1..] {
        total.values.iter_mut().zip(&s.values).for_each(|(t, v)| *t += v);
    }
    let k_total = discrete_curvature(&total)?;
    let k_parts: Vec<Vec<GridValue>> = scaled.iter().map(discrete_curvature).collect::<Result<_>>()?;
    let (mut worst, mut at_lhs, mut at_rhs) = (f64::INFINITY, 0.0, 0.0);
    for (e, kt) in k_total.iter().enumerate() {
        let g = total.at(kt.ix, kt.iy);
        let rhs: f64 = scaled.iter().zip(&k_parts).map(|(s, k)| (s.at(kt.ix, kt.iy) / g).powi(2) * k[e].value).sum();
        let margin = rhs - kt.value;
        if margin < worst {
            (worst, at_lhs, at_rhs) = (margin, kt.value, rhs);
        }
    }
    Ok(BoundReport::from_margin("convex-sum curvature", "convex-sum-curvature", at_lhs, at_rhs, worst, slack, Assertion::Soft)
        .with_provenance("summands", samples.len())
        .with_provenance("h", samples[0].h)
        .with_detail("points", k_total.len() as f64))
}

/// Ahlfors-Schwarz comparison of gamma with rho / A on the disk of radius R.
/// The hypothesis ddbar log gamma >= A gamma - hypothesis_slack is checked
/// first at interior points inside the disk; when it fails the report has
/// status `HypothesisNotSatisfied` and does not pass.
pub fn ahlfors_schwarz_check(gamma: &CurveSample, a: f64, radius: f64, hypothesis_slack: f64, slack: f64) -> Result<BoundReport> {
    if !(a > 0.0) || !(radius > 0.0) {
        return Err(Error::Domain(format!("need A > 0 and R > 0, got A = {a}, R = {radius}")));
    }
    if gamma.is_one_dimensional() {
        return Err(Error::Domain("the comparison needs a two-dimensional grid".into()));
    }
    let inside = |s: C64| s.norm() < radius;
    let h = gamma.h;
    let stencil_inside = |s: C64| inside(s) && [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)].iter().all(|&(x, y)| inside(s + C64::new(x, y)));
    let ddbar = discrete_ddbar_log(gamma)?;
    let hyp = ddbar
        .iter()
        .filter(|v| stencil_inside(v.s))
        .map(|v| v.value - a * gamma.at(v.ix, v.iy))
        .fold(f64::INFINITY, f64::min);
    let (mut worst, mut at_lhs, mut at_rhs) = (f64::INFINITY, 0.0, 0.0);
    for iy in 0..gamma.ny {
        for ix in 0..gamma.nx {
            let s = gamma.point(ix, iy);
            if inside(s) {
                let rhs = poincare_density(radius, s) / a;
                let lhs = gamma.at(ix, iy);
                if rhs - lhs < worst {
                    (worst, at_lhs, at_rhs) = (rhs - lhs, lhs, rhs);
                }
            }
        }
    }
    if !hyp.is_finite() || !worst.is_finite() {
        return Err(Error::Domain("no grid points inside the disk".into()));
    }
    let mut r = BoundReport::from_margin("Ahlfors-Schwarz comparison", "ahlfors-schwarz", at_lhs, at_rhs, worst, slack, Assertion::Soft)
        .with_provenance("A", a)
        .with_provenance("R", radius)
        .with_provenance("h", gamma.h)
        .with_detail("hypothesis_margin", hyp)
        .with_detail("hypothesis_slack", hypothesis_slack);
    if hyp < -hypothesis_slack {
        r.status = Status::HypothesisNotSatisfied;
        r.pass = false;
    }
    Ok(r)
}

/// ||A||_p = ||H(A ^ ... ^ A)||^{1/p} with H taken in the (p, p) slot;
/// zero when p > n.
pub fn wp_degree_p(a: &KSForm, p: usize, slot: &SpectralDecomposition) -> Result<f64> {
    if p == 0 {
        return Err(Error::Degree("the Finsler degree must be at least 1".into()));
    }
    if p > a.n {
        return Ok(0.0);
    }
    let w = wedge_power(a, p)?;
    let f = Field::new(w.values, DegreeTag::Polyvector { p: p as u8, q: p as u8 });
    let h = slot.harmonic_project(&f);
    Ok(slot.norm(&h).powf(1.0 / p as f64))
}

/// ||A||_p on the octagon fiber. For p = 1 the Beltrami differential is
/// projected in the quadratic-differential slot; higher degrees vanish.
pub fn wp_degree_p_surface(tables: &GeometricWedgeTables, k2: &SpectralDecomposition, a: &[C64], p: usize) -> Result<f64> {
    match p {
        0 => Err(Error::Degree("the Finsler degree must be at least 1".into())),
        1 => {
            let stored = a.iter().zip(&tables.g).map(|(a, g)| a.conj() * g).collect();
            let f = Field::new(stored, DegreeTag::Section { k: 2 });
            Ok(k2.norm(&k2.harmonic_project(&f)))
        }
        _ => Ok(0.0),
    }
}

/// Scalar data entering the curvature bound for G_p at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveBoundInput {
    pub p: usize,
    pub pn: f64,
    pub norm_1: f64,
    pub norm_p: f64,
    /// ||A||_{p+1}; zero for p = n.
    pub norm_next: f64,
    /// R(A, Abar, A^p, conj(A^p)) from the tangent formula in degree p.
    pub sectional: f64,
}

impl CurveBoundInput {
    /// Curvature of G_p when the harmonic A^p spans a flat line.
    pub fn osculating_curvature(&self) -> f64 {
        self.sectional / (self.p as f64 * self.norm_p.powi(2 * self.p as i32 + 2))
    }

    pub fn bound(&self) -> f64 {
        let p = self.p as f64;
        let e = 2 * self.p as i32 + 2;
        (-self.pn * self.norm_1.powi(2) / self.norm_p.powi(2) + (self.norm_next / self.norm_p).powi(e)) / p
    }

    /// G(s) = ||A||_p^2 exp(-K0 ||A||_p^2 |s - s0|^2), a metric whose
    /// curvature at s0 is K0 = `osculating_curvature`.
    pub fn model_curve(&self, center: C64, h: f64, half: usize) -> CurveSample {
        let g0 = self.norm_p * self.norm_p;
        let k0 = self.osculating_curvature();
        CurveSample::centered(&format!("G_{}", self.p), center, h, half, |s| g0 * (-k0 * g0 * (s - center).norm_sqr()).exp())
    }
}

/// Checks K_{G_p} <= (1/p)(-P ||A||_1^2/||A||_p^2 + ||A||_{p+1}^{2p+2}/||A||_p^{2p+2})
/// at the interior points of the model curve, and records the ratio
/// ||A||_{p+1}/||A||_p and the subharmonicity margin of log G_p.
pub fn finsler_curvature_bound_check(input: &CurveBoundInput, h: f64, half: usize, slack: f64) -> Result<BoundReport> {
    if input.p == 0 {
        return Err(Error::Degree("the Finsler degree must be at least 1".into()));
    }
    if !(input.norm_p > 0.0) {
        return Err(Error::Positivity { vertex: 0, value: input.norm_p });
    }
    let sample = input.model_curve(C64::new(0.0, 0.0), h, half);
    let k = discrete_curvature(&sample)?;
    let kmax = k.iter().map(|v| v.value).fold(f64::NEG_INFINITY, f64::max);
    let sub = discrete_ddbar_log(&sample)?.iter().map(|v| v.value).fold(f64::INFINITY, f64::min);
    let bound = input.bound();
    Ok(BoundReport::leq("Finsler curvature bound", "finsler-curvature-bound", kmax, bound, slack, Assertion::Soft)
        .with_provenance("p", input.p)
        .with_provenance("h", h)
        .with_detail("osculating_curvature", input.osculating_curvature())
        .with_detail("ratio_next", input.norm_next / input.norm_p)
        .with_detail("subharmonic_margin", sub))
}

/// R(A, Abar, nu, nubar) for A = sum c_i A_i and nu = sum d_k nu_k.
pub fn evaluate_sectional(t: &CurvatureTensor, c: &[C64], d: &[C64]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..t.num_ks {
        for j in 0..t.num_ks {
            for k in 0..t.num_sections {
                for l in 0..t.num_sections {
                    s += t.get(i, j, k, l) * c[i] * c[j].conj() * d[k] * d[l].conj();
                }
            }
        }
    }
    s
}
