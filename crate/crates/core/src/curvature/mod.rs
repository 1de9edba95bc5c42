//! Curvature of direct-image bundles assembled from resolvents and
//! pointwise products.
//!
//! Index convention: `get(i, j, k, l)` is R_{i jbar}^{lbar k} (or
//! R_{i jbar k lbar} for the tangent formula); i, j run over Kodaira-Spencer
//! forms and k, l over the section basis.

mod geometric;
mod synthetic;

pub use geometric::{geometric_direct_image, geometric_tangent, GeometricTables, GeometricWedgeTables};
pub use synthetic::{
    cup_contract, synthetic_direct_image, synthetic_tangent, synthetic_tangent_with_sections, wedge_lower, wedge_power,
    wedge_raise, POLY_HARMONIC_DIM, SLOT_MARGIN, BundleForm, CupDirection, PolyForm, SyntheticModel,
    SyntheticTables, SyntheticWedgeTables,
};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::report::{Assertion, BoundReport};
use crate::spectral::{Field, SpectralDecomposition};
use faer::Mat;
use serde::{Deserialize, Serialize};

/// Harmonic-defect tolerance for section inputs.
pub const HARMONIC_TOL: f64 = 1e-8;

/// Pointwise products feeding the direct-image formula.
pub trait ProductTables {
    fn n(&self) -> usize;
    fn p(&self) -> usize;
    fn num_ks(&self) -> usize;
    fn num_sections(&self) -> usize;
    /// A_i . A_jbar as a function.
    fn ks_dot(&self, i: usize, j: usize) -> Field;
    /// psi^k . psi^lbar as a function.
    fn section_dot(&self, k: usize, l: usize) -> Field;
    /// The section psi^k in its own slot.
    fn section(&self, k: usize) -> Field;
    /// A_i cup psi^k, degree lowered (needs p > 0).
    fn cup_lower(&self, i: usize, k: usize) -> Result<Field>;
    /// A_jbar cup psi^k, degree raised (needs p < n).
    fn cup_raise(&self, j: usize, k: usize) -> Result<Field>;
}

/// Pointwise products feeding the tangent-bundle formula.
pub trait WedgeTables {
    fn n(&self) -> usize;
    fn p(&self) -> usize;
    fn num_ks(&self) -> usize;
    fn num_sections(&self) -> usize;
    fn ks_dot(&self, i: usize, j: usize) -> Field;
    /// nu_k . nu_lbar as a function.
    fn section_dot(&self, k: usize, l: usize) -> Field;
    fn section(&self, k: usize) -> Field;
    /// A_i wedge nu_k (needs p < n).
    fn wedge_raise(&self, i: usize, k: usize) -> Result<Field>;
    /// A_jbar contracted with nu_k (needs p > 0).
    fn wedge_lower(&self, j: usize, k: usize) -> Result<Field>;
    /// True when `wedge_raise` is stored through an antilinear isometry, so
    /// inner products in its slot come out conjugated.
    fn raise_is_antilinear(&self) -> bool {
        false
    }
}

/// One spectral decomposition per form-degree slot.
#[derive(Debug, Clone)]
pub struct Slots {
    pub function: SpectralDecomposition,
    /// Slot of the sections themselves, used for the harmonicity check.
    pub sections: Option<SpectralDecomposition>,
    pub lower: Option<SpectralDecomposition>,
    pub raise: Option<SpectralDecomposition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    DirectImage,
    Pluricanonical,
    Tangent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureTensor {
    pub kind: TensorKind,
    pub m: u32,
    pub p: usize,
    pub num_ks: usize,
    pub num_sections: usize,
    /// Flattened ((i * num_ks + j) * num_sections + k) * num_sections + l.
    pub entries: Vec<C64>,
    pub terms: [Vec<C64>; 3],
    /// The harmonic part of the third term alone.
    pub harmonic_part: Vec<C64>,
}

impl CurvatureTensor {
    fn zeros(kind: TensorKind, m: u32, p: usize, nk: usize, ns: usize) -> Self {
        let len = nk * nk * ns * ns;
        let z = vec![C64::new(0.0, 0.0); len];
        CurvatureTensor {
            kind,
            m,
            p,
            num_ks: nk,
            num_sections: ns,
            entries: z.clone(),
            terms: [z.clone(), z.clone(), z.clone()],
            harmonic_part: z,
        }
    }

    pub fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.num_ks + j) * self.num_sections + k) * self.num_sections + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.entries[self.index(i, j, k, l)]
    }

    pub fn term(&self, t: usize, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.terms[t][self.index(i, j, k, l)]
    }

    fn finish(&mut self) {
        for e in 0..self.entries.len() {
            self.entries[e] = self.terms[0][e] + self.terms[1][e] + self.terms[2][e];
        }
    }

    pub fn frobenius(values: &[C64]) -> f64 {
        values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |R_{ij}^{lk} - conj(R_{ji}^{kl})| relative to the tensor norm.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = Self::frobenius(&self.entries).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.num_ks {
            for j in 0..self.num_ks {
                for k in 0..self.num_sections {
                    for l in 0..self.num_sections {
                        let d = self.get(i, j, k, l) - self.get(j, i, l, k).conj();
                        worst = worst.max(d.norm() / scale);
                    }
                }
            }
        }
        worst
    }

    /// Hermitian matrix Q[(i,k), (j,l)] of a term (0, 1, 2) or of the total (None).
    pub fn quadratic_form(&self, term: Option<usize>) -> Mat<C64> {
        let src = match term {
            Some(t) => &self.terms[t],
            None => &self.entries,
        };
        let ns = self.num_sections;
        let d = self.num_ks * ns;
        Mat::from_fn(d, d, |a, b| {
            let (i, k) = (a / ns, a % ns);
            let (j, l) = (b / ns, b % ns);
            src[self.index(i, j, k, l)]
        })
    }

    /// Smallest eigenvalue of the Hermitian part of a quadratic form.
    pub fn min_eigenvalue(&self, term: Option<usize>) -> Result<f64> {
        let q = self.quadratic_form(term);
        let h = Mat::from_fn(q.nrows(), q.ncols(), |a, b| (q[(a, b)] + q[(b, a)].conj()) * 0.5);
        let ev = h
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// sum R_{ij}^{lk} xi^i_k conj(xi^j_l), xi indexed [i * num_sections + k].
    pub fn evaluate(&self, xi: &[C64]) -> C64 {
        let ns = self.num_sections;
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.num_ks {
            for j in 0..self.num_ks {
                for k in 0..ns {
                    for l in 0..ns {
                        s += self.get(i, j, k, l) * xi[i * ns + k] * xi[j * ns + l].conj();
                    }
                }
            }
        }
        s
    }
}

fn check_sections(slot: Option<&SpectralDecomposition>, fields: impl Iterator<Item = Field>) -> Result<()> {
    let Some(spec) = slot else { return Ok(()) };
    let mut defects = Vec::new();
    let mut bad = false;
    for f in fields {
        let h = spec.harmonic_project(&f);
        let d = spec.norm(&f.axpy(C64::new(-1.0, 0.0), &h)) / spec.norm(&f).max(f64::MIN_POSITIVE);
        bad |= !(d <= HARMONIC_TOL);
        defects.push(d);
    }
    if bad {
        return Err(Error::NotHarmonic(defects));
    }
    Ok(())
}

fn need<'a>(slot: &'a Option<SpectralDecomposition>, what: &str) -> Result<&'a SpectralDecomposition> {
    slot.as_ref().ok_or_else(|| Error::Domain(format!("the {what} slot spectrum is required")))
}

/// Splits x = Hx + x' and returns ((box - m)^{-1} x', Hx).
fn minus_resolvent(spec: &SpectralDecomposition, m: f64, x: &Field) -> Result<(Field, Field)> {
    spec.complement_resolvent(-m, x)
}

fn first_term<F, G>(slots: &Slots, out: &mut CurvatureTensor, sign: f64, ks_dot: F, section_dot: G) -> Result<()>
where
    F: Fn(usize, usize) -> Field,
    G: Fn(usize, usize) -> Field,
{
    let (nk, ns) = (out.num_ks, out.num_sections);
    let f = &slots.function;
    let sdots: Vec<Field> = (0..ns * ns).map(|e| section_dot(e / ns, e % ns)).collect();
    for i in 0..nk {
        for j in 0..nk {
            let r = f.resolvent_apply(1.0, &ks_dot(i, j))?;
            for k in 0..ns {
                for l in 0..ns {
                    // int (box+1)^{-1}(A_i.A_jbar) (psi^k.psi^lbar)
                    let v = f.integral(&Field::function(
                        r.values.iter().zip(&sdots[k * ns + l].values).map(|(a, b)| a * b).collect(),
                    ));
                    let e = out.index(i, j, k, l);
                    out.terms[0][e] = v * sign;
                }
            }
        }
    }
    Ok(())
}

fn term1_and_2<T: ProductTables + ?Sized>(slots: &Slots, m: u32, tables: &T, out: &mut CurvatureTensor) -> Result<()> {
    let mf = m as f64;
    first_term(slots, out, mf, |i, j| tables.ks_dot(i, j), |k, l| tables.section_dot(k, l))?;
    if tables.p() > 0 {
        let lower = need(&slots.lower, "lower")?;
        let (nk, ns) = (out.num_ks, out.num_sections);
        let y: Vec<Field> = (0..nk * ns).map(|e| tables.cup_lower(e / ns, e % ns)).collect::<Result<_>>()?;
        let ry: Vec<Field> = y.iter().map(|f| lower.resolvent_apply(mf, f)).collect::<Result<_>>()?;
        for i in 0..nk {
            for j in 0..nk {
                for k in 0..ns {
                    for l in 0..ns {
                        let e = out.index(i, j, k, l);
                        out.terms[1][e] = lower.inner(&ry[i * ns + k], &y[j * ns + l]) * mf;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn curvature_direct_image<T: ProductTables + ?Sized>(slots: &Slots, m: u32, tables: &T) -> Result<CurvatureTensor> {
    if m == 0 {
        return Err(Error::Domain("the twist m must be positive".into()));
    }
    check_sections(slots.sections.as_ref(), (0..tables.num_sections()).map(|k| tables.section(k)))?;
    let (nk, ns) = (tables.num_ks(), tables.num_sections());
    let mut out = CurvatureTensor::zeros(TensorKind::DirectImage, m, tables.p(), nk, ns);
    term1_and_2(slots, m, tables, &mut out)?;
    if tables.p() < tables.n() {
        let raise = need(&slots.raise, "raise")?;
        let mf = m as f64;
        // Z_{a,b} = A_abar cup psi^b; A_i cup psi^lbar = conj(Z_{i,l}).
        let z: Vec<Field> = (0..nk * ns).map(|e| tables.cup_raise(e / ns, e % ns)).collect::<Result<_>>()?;
        let split: Vec<(Field, Field)> = z.iter().map(|f| minus_resolvent(raise, mf, f)).collect::<Result<_>>()?;
        for i in 0..nk {
            for j in 0..nk {
                for k in 0..ns {
                    for l in 0..ns {
                        let e = out.index(i, j, k, l);
                        let (rjk, hjk) = &split[j * ns + k];
                        let (_, hil) = &split[i * ns + l];
                        let harm = -raise.inner(hjk, hil);
                        out.terms[2][e] = raise.inner(rjk, &z[i * ns + l]) * mf + harm;
                        out.harmonic_part[e] = harm;
                    }
                }
            }
        }
    }
    out.finish();
    Ok(out)
}

/// The two-term formula for p = n.
pub fn curvature_pluricanonical<T: ProductTables + ?Sized>(slots: &Slots, m: u32, tables: &T) -> Result<CurvatureTensor> {
    if tables.p() != tables.n() {
        return Err(Error::Degree(format!("pluricanonical formula needs p = n, got p = {}", tables.p())));
    }
    if m == 0 {
        return Err(Error::Domain("the twist m must be positive".into()));
    }
    check_sections(slots.sections.as_ref(), (0..tables.num_sections()).map(|k| tables.section(k)))?;
    let mut out = CurvatureTensor::zeros(TensorKind::Pluricanonical, m, tables.p(), tables.num_ks(), tables.num_sections());
    term1_and_2(slots, m, tables, &mut out)?;
    out.finish();
    Ok(out)
}

pub fn curvature_tangent<T: WedgeTables + ?Sized>(slots: &Slots, tables: &T) -> Result<CurvatureTensor> {
    check_sections(slots.sections.as_ref(), (0..tables.num_sections()).map(|k| tables.section(k)))?;
    let (nk, ns) = (tables.num_ks(), tables.num_sections());
    let mut out = CurvatureTensor::zeros(TensorKind::Tangent, 1, tables.p(), nk, ns);
    first_term(slots, &mut out, -1.0, |i, j| tables.ks_dot(i, j), |k, l| tables.section_dot(k, l))?;
    if tables.p() > 0 {
        let lower = need(&slots.lower, "lower")?;
        let w2: Vec<Field> = (0..nk * ns).map(|e| tables.wedge_lower(e / ns, e % ns)).collect::<Result<_>>()?;
        let r2: Vec<Field> = w2.iter().map(|f| lower.resolvent_apply(1.0, f)).collect::<Result<_>>()?;
        for i in 0..nk {
            for j in 0..nk {
                for k in 0..ns {
                    for l in 0..ns {
                        let e = out.index(i, j, k, l);
                        out.terms[1][e] = -lower.inner(&r2[j * ns + k], &w2[i * ns + l]);
                    }
                }
            }
        }
    }
    if tables.p() < tables.n() {
        let raise = need(&slots.raise, "raise")?;
        let w1: Vec<Field> = (0..nk * ns).map(|e| tables.wedge_raise(e / ns, e % ns)).collect::<Result<_>>()?;
        let split: Vec<(Field, Field)> = w1.iter().map(|f| minus_resolvent(raise, 1.0, f)).collect::<Result<_>>()?;
        let anti = tables.raise_is_antilinear();
        for i in 0..nk {
            for j in 0..nk {
                for k in 0..ns {
                    for l in 0..ns {
                        let e = out.index(i, j, k, l);
                        let (rik, hik) = &split[i * ns + k];
                        let (_, hjl) = &split[j * ns + l];
                        let mut harm = raise.inner(hik, hjl);
                        let mut rest = -raise.inner(rik, &w1[j * ns + l]);
                        if anti {
                            harm = harm.conj();
                            rest = rest.conj();
                        }
                        out.terms[2][e] = rest + harm;
                        out.harmonic_part[e] = harm;
                    }
                }
            }
        }
    }
    out.finish();
    Ok(out)
}

/// |R| relative to the size of the individual terms; used for the
/// identically-vanishing cases.
pub fn cancellation_report(t: &CurvatureTensor, name: &str, check_id: &str) -> BoundReport {
    let scale = t.terms.iter().map(|v| CurvatureTensor::frobenius(v)).sum::<f64>().max(f64::MIN_POSITIVE);
    let rel = CurvatureTensor::frobenius(&t.entries) / scale;
    BoundReport::leq(name, check_id, rel, 0.0, 1e-8, Assertion::Hard)
        .with_provenance("p", t.p)
        .with_provenance("m", t.m)
        .with_detail("scale", scale)
}

/// Gram matrix of the function-valued pairing int f(a, b).
fn gram<F: Fn(usize, usize) -> Field>(spec: &SpectralDecomposition, count: usize, f: F) -> Mat<C64> {
    Mat::from_fn(count, count, |a, b| spec.integral(&f(a, b)))
}

/// R xi xibar >= m P_n(d) (G^WP (x) H) xi xibar for one coefficient vector.
pub fn nakano_check<T: ProductTables + ?Sized>(
    t: &CurvatureTensor,
    slots: &Slots,
    tables: &T,
    pn: f64,
    xi: &[C64],
    slack: f64,
) -> BoundReport {
    let g = gram(&slots.function, t.num_ks, |i, j| tables.ks_dot(i, j));
    let h = gram(&slots.function, t.num_sections, |k, l| tables.section_dot(k, l));
    let ns = t.num_sections;
    let mut rhs = C64::new(0.0, 0.0);
    for i in 0..t.num_ks {
        for j in 0..t.num_ks {
            for k in 0..ns {
                for l in 0..ns {
                    rhs += g[(i, j)] * h[(k, l)] * xi[i * ns + k] * xi[j * ns + l].conj();
                }
            }
        }
    }
    let lhs = t.evaluate(xi);
    let rhs = rhs.re * t.m as f64 * pn;
    BoundReport::geq("Nakano lower bound", "pluricanonical-nakano-bound", lhs.re, rhs, slack, Assertion::Soft)
        .with_provenance("m", t.m)
        .with_detail("imag_part", lhs.im)
}

/// R(A_i, A_ibar, psi^k, psi^kbar) >= P |A|^2 |psi|^2 + |H(A cup psi)|^2 - |H(A cup psibar)|^2.
pub fn direct_image_estimate<T: ProductTables + ?Sized>(
    t: &CurvatureTensor,
    slots: &Slots,
    tables: &T,
    i: usize,
    k: usize,
    pn: f64,
    slack: f64,
) -> Result<BoundReport> {
    let f = &slots.function;
    let a2 = f.integral(&tables.ks_dot(i, i)).re;
    let p2 = f.integral(&tables.section_dot(k, k)).re;
    let hy = if tables.p() > 0 {
        let lower = need(&slots.lower, "lower")?;
        lower.norm(&lower.harmonic_project(&tables.cup_lower(i, k)?)).powi(2)
    } else {
        0.0
    };
    let hz = if tables.p() < tables.n() {
        let raise = need(&slots.raise, "raise")?;
        raise.norm(&raise.harmonic_project(&tables.cup_raise(i, k)?)).powi(2)
    } else {
        0.0
    };
    let lhs = t.get(i, i, k, k).re;
    Ok(BoundReport::geq("direct image estimate", "direct-image-lower-estimate", lhs, pn * a2 * p2 + hy - hz, slack, Assertion::Soft)
        .with_provenance("p", t.p)
        .with_provenance("m", t.m)
        .with_detail("harmonic_lower", hy)
        .with_detail("harmonic_raise", hz))
}

/// R(A_i, A_ibar, nu_k, nu_kbar) <= -P |A|^2 |nu|^2 + |H(A wedge nu)|^2.
pub fn tangent_estimate<T: WedgeTables + ?Sized>(
    t: &CurvatureTensor,
    slots: &Slots,
    tables: &T,
    i: usize,
    k: usize,
    pn: f64,
    slack: f64,
) -> Result<BoundReport> {
    let f = &slots.function;
    let a2 = f.integral(&tables.ks_dot(i, i)).re;
    let n2 = f.integral(&tables.section_dot(k, k)).re;
    let hw = if tables.p() < tables.n() {
        let raise = need(&slots.raise, "raise")?;
        raise.norm(&raise.harmonic_project(&tables.wedge_raise(i, k)?)).powi(2)
    } else {
        0.0
    };
    let lhs = t.get(i, i, k, k).re;
    Ok(BoundReport::leq("tangent estimate", "tangent-upper-estimate", lhs, -pn * a2 * n2 + hw, slack, Assertion::Soft)
        .with_provenance("p", t.p)
        .with_detail("harmonic_raise", hw))
}
