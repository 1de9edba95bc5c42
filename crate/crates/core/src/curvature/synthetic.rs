//! Synthetic n >= 2 mode: forms on a weighted graph with a flat fiber
//! metric. Each form-degree slot gets its own operator
//! P* (L (x) I + c W) P, where P removes a designated harmonic space and
//! c > m keeps every other eigenvalue above the twist.

use super::{ProductTables, Slots, WedgeTables};
use crate::error::{Error, Result};
use crate::exterior::{insert, remove, Layout};
use crate::ks_wp::KSForm;
use crate::linalg::C64;
use crate::spectral::{DegreeTag, Field, SpectralDecomposition};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Gap between the bottom of a non-harmonic spectrum and the shift that the
/// formulas apply to it (0 for most slots, m for the raised one).
pub const SLOT_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CupDirection {
    Lowering,
    Raising,
}

/// A (p, q)-form with values in K^m, flat metric, increasing multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleForm {
    pub layout: Layout,
    pub m: u32,
    /// Node-major: values[v * layout.len() + c].
    pub values: Vec<C64>,
}

impl BundleForm {
    pub fn nodes(&self) -> usize {
        self.values.len() / self.layout.len().max(1)
    }

    pub fn field(&self) -> Field {
        Field::new(self.values.clone(), DegreeTag::Form { p: self.layout.p as u8, q: self.layout.q as u8, m: self.m as i32 })
    }

    /// psi . phibar per node.
    pub fn dot(&self, other: &BundleForm) -> Vec<C64> {
        dot_blocks(&self.values, &other.values, self.layout.len())
    }
}

/// A (0, q)-form with values in the p-th exterior power of T.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyForm {
    pub layout: Layout,
    pub values: Vec<C64>,
}

impl PolyForm {
    pub fn field(&self) -> Field {
        Field::new(self.values.clone(), DegreeTag::Polyvector { p: self.layout.p as u8, q: self.layout.q as u8 })
    }

    pub fn from_ks(a: &KSForm) -> PolyForm {
        let layout = Layout::new(a.n, 1, 1);
        let mut values = vec![C64::new(0.0, 0.0); a.nodes() * layout.len()];
        for v in 0..a.nodes() {
            for al in 0..a.n {
                for be in 0..a.n {
                    values[v * layout.len() + layout.pos(1 << al, 1 << be)] = a.at(v, al, be);
                }
            }
        }
        PolyForm { layout, values }
    }
}

fn dot_blocks(x: &[C64], y: &[C64], d: usize) -> Vec<C64> {
    x.chunks(d).zip(y.chunks(d)).map(|(a, b)| a.iter().zip(b).map(|(s, t)| s * t.conj()).sum()).collect()
}

/// A cup psi (lowering, needs p > 0) or Abar cup psi (raising, needs q > 0).
pub fn cup_contract(a: &KSForm, psi: &BundleForm, direction: CupDirection) -> Result<BundleForm> {
    let lay = &psi.layout;
    let n = lay.n;
    if a.n != n || a.nodes() != psi.nodes() {
        return Err(Error::Mismatch("form and Kodaira-Spencer tensor differ in size".into()));
    }
    let out_layout = match direction {
        CupDirection::Lowering if lay.p == 0 => return Err(Error::Degree("lowering cup product needs p > 0".into())),
        CupDirection::Raising if lay.q == 0 => return Err(Error::Degree("raising cup product needs p < n".into())),
        CupDirection::Lowering => Layout::new(n, lay.p - 1, lay.q + 1),
        CupDirection::Raising => Layout::new(n, lay.p + 1, lay.q - 1),
    };
    let (d_in, d_out) = (lay.len(), out_layout.len());
    let mut out = vec![C64::new(0.0, 0.0); psi.nodes() * d_out];
    for v in 0..psi.nodes() {
        for c in 0..d_in {
            let coef = psi.values[v * d_in + c];
            if coef == C64::new(0.0, 0.0) {
                continue;
            }
            let (hi, lo) = lay.parts(c);
            for s in 0..n {
                for b in 0..n {
                    let hit = match direction {
                        // dzbar^b ^ (i_{d/dz^s} dz^I) ^ dzbar^J
                        CupDirection::Lowering => remove(hi, s).and_then(|(h2, s1)| {
                            let pass = if h2.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                            insert(lo, b).map(|(l2, s2)| (h2, l2, s1 * s2 * pass, a.at(v, s, b)))
                        }),
                        // dz^b ^ i_{d/dzbar^s}(dz^I ^ dzbar^J)
                        CupDirection::Raising => remove(lo, s).and_then(|(l2, s1)| {
                            let pass = if hi.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                            insert(hi, b).map(|(h2, s2)| (h2, l2, s1 * s2 * pass, a.at(v, s, b).conj()))
                        }),
                    };
                    if let Some((h2, l2, sign, av)) = hit {
                        out[v * d_out + out_layout.pos(h2, l2)] += av * coef * sign;
                    }
                }
            }
        }
    }
    Ok(BundleForm { layout: out_layout, m: psi.m, values: out })
}

/// A wedge nu (exterior product of both parts, needs p < n).
pub fn wedge_raise(a: &KSForm, nu: &PolyForm) -> Result<PolyForm> {
    let lay = &nu.layout;
    if lay.p >= lay.n {
        return Err(Error::Degree("the exterior product vanishes for p = n".into()));
    }
    let out_layout = Layout::new(lay.n, lay.p + 1, lay.q + 1);
    let (d_in, d_out) = (lay.len(), out_layout.len());
    let nodes = nu.values.len() / d_in;
    let mut out = vec![C64::new(0.0, 0.0); nodes * d_out];
    for v in 0..nodes {
        for c in 0..d_in {
            let (hi, lo) = lay.parts(c);
            for al in 0..lay.n {
                for be in 0..lay.n {
                    if let (Some((h2, s1)), Some((l2, s2))) = (insert(hi, al), insert(lo, be)) {
                        out[v * d_out + out_layout.pos(h2, l2)] += a.at(v, al, be) * nu.values[v * d_in + c] * (s1 * s2);
                    }
                }
            }
        }
    }
    Ok(PolyForm { layout: out_layout, values: out })
}

/// Abar contracted with both indices of nu (needs p > 0).
pub fn wedge_lower(a: &KSForm, nu: &PolyForm) -> Result<PolyForm> {
    let lay = &nu.layout;
    if lay.p == 0 || lay.q == 0 {
        return Err(Error::Degree("the contraction vanishes for p = 0".into()));
    }
    let out_layout = Layout::new(lay.n, lay.p - 1, lay.q - 1);
    let (d_in, d_out) = (lay.len(), out_layout.len());
    let nodes = nu.values.len() / d_in;
    let mut out = vec![C64::new(0.0, 0.0); nodes * d_out];
    for v in 0..nodes {
        for c in 0..d_in {
            let (hi, lo) = lay.parts(c);
            for s in 0..lay.n {
                for b in 0..lay.n {
                    if let (Some((h2, s1)), Some((l2, s2))) = (remove(hi, b), remove(lo, s)) {
                        out[v * d_out + out_layout.pos(h2, l2)] += a.at(v, s, b).conj() * nu.values[v * d_in + c] * (s1 * s2);
                    }
                }
            }
        }
    }
    Ok(PolyForm { layout: out_layout, values: out })
}

/// Weighted graph with Kodaira-Spencer tensors on its nodes.
#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub n: usize,
    pub weights: Vec<f64>,
    /// Symmetric graph Laplacian; the function Laplacian is W^{-1} L.
    pub laplacian: Mat<f64>,
    pub ks: Vec<KSForm>,
    pub seed: u64,
}

impl SyntheticModel {
    /// Ring plus random chords, random node and edge weights, `num_ks`
    /// random symmetric tensors.
    pub fn random(n: usize, nodes: usize, num_ks: usize, seed: u64) -> Result<Self> {
        if !(1..=5).contains(&n) || nodes < 3 || nodes > 500 {
            return Err(Error::Domain(format!("synthetic mode supports 1 <= n <= 5 and 3..=500 nodes, got n = {n}, {nodes}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut l = Mat::<f64>::zeros(nodes, nodes);
        let add = |a: usize, b: usize, w: f64, l: &mut Mat<f64>| {
            l[(a, a)] += w;
            l[(b, b)] += w;
            l[(a, b)] -= w;
            l[(b, a)] -= w;
        };
        for v in 0..nodes {
            let w = rng.random_range(0.5..1.5);
            add(v, (v + 1) % nodes, w, &mut l);
        }
        for _ in 0..nodes {
            let a = rng.random_range(0..nodes);
            let b = rng.random_range(0..nodes);
            if a != b {
                let w = rng.random_range(0.1..1.0);
                add(a, b, w, &mut l);
            }
        }
        let weights: Vec<f64> = (0..nodes).map(|_| rng.random_range(0.5..1.5) / nodes as f64).collect();
        let ks = (0..num_ks).map(|_| KSForm::random_synthetic(n, nodes, &mut rng)).collect();
        Ok(SyntheticModel { n, weights, laplacian: l, ks, seed })
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    pub fn function_spectrum(&self) -> Result<SpectralDecomposition> {
        SpectralDecomposition::from_dense(&self.laplacian, &self.weights, DegreeTag::Function)
    }

    /// Spectrum of a slot with `d` components per node whose harmonic space
    /// is the span of `generators`; all other eigenvalues are >= `floor`.
    pub fn slot_spectrum(&self, d: usize, floor: f64, generators: &[Vec<C64>], tag: DegreeTag) -> Result<SpectralDecomposition> {
        let nodes = self.nodes();
        let dim = nodes * d;
        let w: Vec<f64> = (0..dim).map(|i| self.weights[i / d]).collect();
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for g in generators {
            if g.len() != dim {
                return Err(Error::Mismatch(format!("generator has {} entries, slot {dim}", g.len())));
            }
            let mut x = g.clone();
            let norm0 = wnorm(&x, &w);
            for _ in 0..2 {
                for b in &basis {
                    let c = winner(&x, b, &w);
                    x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
                }
            }
            let nx = wnorm(&x, &w);
            if nx > 1e-10 * norm0.max(f64::MIN_POSITIVE) {
                x.iter_mut().for_each(|xi| *xi /= nx);
                basis.push(x);
            }
        }
        let k = Mat::<C64>::from_fn(dim, dim, |i, j| {
            let mut v = if i % d == j % d { C64::new(self.laplacian[(i / d, j / d)], 0.0) } else { C64::new(0.0, 0.0) };
            if i == j {
                v += floor * w[i];
            }
            v
        });
        // P = I - sum b b* W
        let p = Mat::<C64>::from_fn(dim, dim, |i, j| {
            let mut v = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for b in &basis {
                v -= b[i] * b[j].conj() * w[j];
            }
            v
        });
        let a = p.adjoint() * &k * &p;
        let a = Mat::<C64>::from_fn(dim, dim, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
        Ok(SpectralDecomposition::from_dense(&a, &w, tag)?.with_harmonic_dim(basis.len()))
    }

    fn random_values(&self, d: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..self.nodes() * d)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }
}

fn winner(x: &[C64], y: &[C64], w: &[f64]) -> C64 {
    x.iter().zip(y).zip(w).map(|((a, b), w)| a * b.conj() * *w).sum()
}

fn wnorm(x: &[C64], w: &[f64]) -> f64 {
    winner(x, x, w).re.max(0.0).sqrt()
}

fn ks_dot(model: &SyntheticModel, i: usize, j: usize) -> Field {
    let d = model.n * model.n;
    Field::function(dot_blocks(&model.ks[i].coefficients, &model.ks[j].coefficients, d))
}

#[derive(Debug, Clone)]
pub struct SyntheticTables {
    pub model: SyntheticModel,
    pub p: usize,
    pub m: u32,
    pub psi: Vec<BundleForm>,
}

impl ProductTables for SyntheticTables {
    fn n(&self) -> usize {
        self.model.n
    }
    fn p(&self) -> usize {
        self.p
    }
    fn num_ks(&self) -> usize {
        self.model.ks.len()
    }
    fn num_sections(&self) -> usize {
        self.psi.len()
    }
    fn ks_dot(&self, i: usize, j: usize) -> Field {
        ks_dot(&self.model, i, j)
    }
    fn section_dot(&self, k: usize, l: usize) -> Field {
        Field::function(self.psi[k].dot(&self.psi[l]))
    }
    fn section(&self, k: usize) -> Field {
        self.psi[k].field()
    }
    fn cup_lower(&self, i: usize, k: usize) -> Result<Field> {
        Ok(cup_contract(&self.model.ks[i], &self.psi[k], CupDirection::Lowering)?.field())
    }
    fn cup_raise(&self, j: usize, k: usize) -> Result<Field> {
        Ok(cup_contract(&self.model.ks[j], &self.psi[k], CupDirection::Raising)?.field())
    }
}

/// Tables and slots for the direct-image formula in degree p with twist m.
///
/// For p = 0 the single section is the constant top-degree form, and the
/// raised products Abar cup psi span the harmonic space of their slot (the
/// Kodaira-Spencer forms are harmonic). Other slots get `extra` random
/// harmonic generators.
pub fn synthetic_direct_image(model: &SyntheticModel, p: usize, m: u32, num_sections: usize) -> Result<(SyntheticTables, Slots)> {
    let n = model.n;
    if p > n || m == 0 {
        return Err(Error::Degree(format!("need 0 <= p <= n and m >= 1, got p = {p}, m = {m}")));
    }
    let mut rng = model.rng(0x5eed + p as u64 * 31 + m as u64);
    let layout = Layout::new(n, p, n - p);
    let d = layout.len();
    let psi: Vec<BundleForm> = if p == 0 {
        let c = 1.0 / model.volume().sqrt();
        vec![BundleForm { layout: layout.clone(), m, values: vec![C64::new(c, 0.0); model.nodes() * d] }]
    } else {
        (0..num_sections.max(1))
            .map(|_| BundleForm { layout: layout.clone(), m, values: model.random_values(d, &mut rng) })
            .collect()
    };
    let floor = m as f64 + SLOT_MARGIN;
    let tag = |l: &Layout| DegreeTag::Form { p: l.p as u8, q: l.q as u8, m: m as i32 };
    let sections = model.slot_spectrum(d, SLOT_MARGIN, &psi.iter().map(|f| f.values.clone()).collect::<Vec<_>>(), tag(&layout))?;
    let tables = SyntheticTables { model: model.clone(), p, m, psi };
    let lower = if p > 0 {
        let l = Layout::new(n, p - 1, n - p + 1);
        let gens: Vec<Vec<C64>> = (0..2).map(|_| model.random_values(l.len(), &mut rng)).collect();
        Some(model.slot_spectrum(l.len(), SLOT_MARGIN, &gens, tag(&l))?)
    } else {
        None
    };
    let raise = if p < n {
        let l = Layout::new(n, p + 1, n - p - 1);
        let gens: Vec<Vec<C64>> = if p == 0 {
            let mut g = Vec::new();
            for j in 0..tables.num_ks() {
                g.push(tables.cup_raise(j, 0)?.values);
            }
            g
        } else {
            (0..2).map(|_| model.random_values(l.len(), &mut rng)).collect()
        };
        Some(model.slot_spectrum(l.len(), floor, &gens, tag(&l))?)
    } else {
        None
    };
    let slots = Slots { function: model.function_spectrum()?, sections: Some(sections), lower, raise };
    Ok((tables, slots))
}

#[derive(Debug, Clone)]
pub struct SyntheticWedgeTables {
    pub model: SyntheticModel,
    pub p: usize,
    pub nu: Vec<PolyForm>,
}

impl WedgeTables for SyntheticWedgeTables {
    fn n(&self) -> usize {
        self.model.n
    }
    fn p(&self) -> usize {
        self.p
    }
    fn num_ks(&self) -> usize {
        self.model.ks.len()
    }
    fn num_sections(&self) -> usize {
        self.nu.len()
    }
    fn ks_dot(&self, i: usize, j: usize) -> Field {
        ks_dot(&self.model, i, j)
    }
    fn section_dot(&self, k: usize, l: usize) -> Field {
        Field::function(dot_blocks(&self.nu[k].values, &self.nu[l].values, self.nu[k].layout.len()))
    }
    fn section(&self, k: usize) -> Field {
        self.nu[k].field()
    }
    fn wedge_raise(&self, i: usize, k: usize) -> Result<Field> {
        Ok(wedge_raise(&self.model.ks[i], &self.nu[k])?.field())
    }
    fn wedge_lower(&self, j: usize, k: usize) -> Result<Field> {
        Ok(wedge_lower(&self.model.ks[j], &self.nu[k])?.field())
    }
}

/// Number of designated harmonic generators in a (p, p) slot, p >= 2.
pub const POLY_HARMONIC_DIM: usize = 2;

impl SyntheticModel {
    /// The (p, p) polyvector slot. Its harmonic space is the span of the
    /// Kodaira-Spencer forms for p = 1 and of seeded random generators for
    /// p >= 2; the rest of the spectrum lies above 1 + SLOT_MARGIN.
    pub fn polyvector_slot(&self, p: usize) -> Result<SpectralDecomposition> {
        if p == 0 {
            return self.function_spectrum();
        }
        if p > self.n {
            return Err(Error::Degree(format!("polyvector degree {p} exceeds n = {}", self.n)));
        }
        let l = Layout::new(self.n, p, p);
        let gens = self.polyvector_generators(p);
        self.slot_spectrum(l.len(), 1.0 + SLOT_MARGIN, &gens, DegreeTag::Polyvector { p: p as u8, q: p as u8 })
    }

    fn polyvector_generators(&self, p: usize) -> Vec<Vec<C64>> {
        if p == 1 {
            return self.ks.iter().map(|a| PolyForm::from_ks(a).values).collect();
        }
        let mut rng = self.rng(0xd0a1 + p as u64);
        (0..POLY_HARMONIC_DIM).map(|_| self.random_values(Layout::new(self.n, p, p).len(), &mut rng)).collect()
    }

    /// Smallest entry of the kernel of (L + 1)^{-1} with respect to the node
    /// weights; the graph counterpart of the resolvent lower bound.
    pub fn resolvent_kernel_min(&self) -> Result<f64> {
        let f = self.function_spectrum()?;
        let nodes = self.nodes();
        let mut worst = f64::INFINITY;
        for y in 0..nodes {
            let mut e = vec![C64::new(0.0, 0.0); nodes];
            e[y] = C64::new(1.0 / self.weights[y], 0.0);
            let col = f.resolvent_apply(1.0, &Field::function(e))?;
            worst = col.values.iter().fold(worst, |a, v| a.min(v.re));
        }
        Ok(worst)
    }
}

/// Exterior power A ^ ... ^ A (p factors) as a (p, p) polyvector.
pub fn wedge_power(a: &KSForm, p: usize) -> Result<PolyForm> {
    let layout = Layout::new(a.n, 0, 0);
    let mut out = PolyForm { layout, values: vec![C64::new(1.0, 0.0); a.nodes()] };
    for _ in 0..p {
        out = wedge_raise(a, &out)?;
    }
    Ok(out)
}

/// Tables and slots for the tangent formula in degree p with the default
/// sections: the constant function for p = 0, the Kodaira-Spencer forms for
/// p = 1 and the designated generators for p >= 2.
pub fn synthetic_tangent(model: &SyntheticModel, p: usize, num_sections: usize) -> Result<(SyntheticWedgeTables, Slots)> {
    let n = model.n;
    if p > n {
        return Err(Error::Degree(format!("need 0 <= p <= n, got p = {p}")));
    }
    let layout = Layout::new(n, p, p);
    let nu: Vec<PolyForm> = match p {
        0 => vec![PolyForm { layout, values: vec![C64::new(1.0 / model.volume().sqrt(), 0.0); model.nodes()] }],
        _ => model
            .polyvector_generators(p)
            .into_iter()
            .take(num_sections.max(1))
            .map(|values| PolyForm { layout: layout.clone(), values })
            .collect(),
    };
    synthetic_tangent_with_sections(model, p, nu)
}

/// Tangent tables with caller-supplied sections; they must be harmonic in
/// the (p, p) slot.
pub fn synthetic_tangent_with_sections(model: &SyntheticModel, p: usize, nu: Vec<PolyForm>) -> Result<(SyntheticWedgeTables, Slots)> {
    let n = model.n;
    if p > n || nu.iter().any(|f| f.layout.p != p || f.layout.q != p || f.layout.n != n) {
        return Err(Error::Degree(format!("sections must be ({p}, {p}) polyvectors with p <= n = {n}")));
    }
    let function = model.function_spectrum()?;
    let sections = if p == 0 { function.clone() } else { model.polyvector_slot(p)? };
    let lower = if p > 0 { Some(model.polyvector_slot(p - 1)?) } else { None };
    let raise = if p < n { Some(model.polyvector_slot(p + 1)?) } else { None };
    let tables = SyntheticWedgeTables { model: model.clone(), p, nu };
    Ok((tables, Slots { function, sections: Some(sections), lower, raise }))
}
