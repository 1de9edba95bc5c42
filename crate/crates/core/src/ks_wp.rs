//! Kodaira-Spencer forms, the (box + 1) phi = |A|^2 equation and the
//! Weil-Petersson layer.

use crate::error::{Error, Result};
use crate::fiber::{corner_factor, dbar_laplacian_quadratic, DiscreteFiber};
use crate::linalg::C64;
use crate::report::{Assertion, BoundReport};
use crate::resolvent_bounds::p_n;
use crate::spectral::{DegreeTag, Field, SpectralDecomposition};
use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A Kodaira-Spencer tensor A^alpha_{beta bar} sampled at nodes. At n = 1 it is
/// the single coefficient a of a dzbar (x) d/dz. Synthetic n >= 2 data uses a
/// flat fiber metric, so lowering the index is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSForm {
    pub n: usize,
    /// Row-major n x n blocks, node after node: entry (alpha, beta).
    pub coefficients: Vec<C64>,
}

impl KSForm {
    pub fn scalar(a: Vec<C64>) -> Self {
        KSForm { n: 1, coefficients: a }
    }

    pub fn synthetic(n: usize, coefficients: Vec<C64>) -> Result<Self> {
        if n == 0 || coefficients.len() % (n * n) != 0 {
            return Err(Error::Mismatch(format!("{} coefficients do not form {n}x{n} blocks", coefficients.len())));
        }
        let form = KSForm { n, coefficients };
        let d = form.symmetry_defect();
        if d > 1e-12 {
            return Err(Error::Domain(format!("lowered tensor is not symmetric (defect {d:e})")));
        }
        Ok(form)
    }

    /// Random symmetric blocks with standard normal-ish entries.
    pub fn random_synthetic<R: Rng>(n: usize, nodes: usize, rng: &mut R) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); nodes * n * n];
        for v in 0..nodes {
            for a in 0..n {
                for b in a..n {
                    let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    c[(v * n + a) * n + b] = z;
                    c[(v * n + b) * n + a] = z;
                }
            }
        }
        KSForm { n, coefficients: c }
    }

    pub fn nodes(&self) -> usize {
        self.coefficients.len() / (self.n * self.n)
    }

    pub fn block(&self, v: usize) -> &[C64] {
        let s = self.n * self.n;
        &self.coefficients[v * s..(v + 1) * s]
    }

    pub fn at(&self, v: usize, alpha: usize, beta: usize) -> C64 {
        self.coefficients[(v * self.n + alpha) * self.n + beta]
    }

    /// Pointwise |A|^2.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        (0..self.nodes()).map(|v| self.block(v).iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut d: f64 = 0.0;
        for v in 0..self.nodes() {
            for a in 0..n {
                for b in 0..a {
                    d = d.max((self.at(v, a, b) - self.at(v, b, a)).norm());
                }
            }
        }
        d
    }

    pub fn add_scaled(&self, s: C64, other: &KSForm) -> KSForm {
        KSForm {
            n: self.n,
            coefficients: self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a + s * b).collect(),
        }
    }
}

/// phi = (box + 1)^{-1} chi.
pub fn solve_phi(spec: &SpectralDecomposition, chi: &Field) -> Result<Field> {
    if let Some((v, z)) = chi.values.iter().enumerate().find(|(_, z)| z.re < -1e-12 || z.im.abs() > 1e-12) {
        return Err(Error::Domain(format!("chi must be real and non-negative, got {z} at node {v}")));
    }
    spec.resolvent_apply(1.0, chi)
}

/// min phi >= P_n(diameter) * int chi, with `slack` for discretization.
pub fn check_phi_bound(
    spec: &SpectralDecomposition,
    phi: &Field,
    chi: &Field,
    diameter: f64,
    n: u32,
    slack: f64,
) -> Result<BoundReport> {
    if phi.len() != spec.nodes() || chi.len() != spec.nodes() {
        return Err(Error::Mismatch("phi, chi and spectrum sizes differ".into()));
    }
    let pn = p_n(n, diameter)?;
    let mass = spec.integral(chi).re;
    let min_phi = phi.values.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    Ok(BoundReport::geq("phi lower bound", "phi-resolvent-lower-bound", min_phi, pn * mass, slack, Assertion::Soft)
        .with_provenance("n", n)
        .with_provenance("diameter", diameter)
        .with_detail("p_n", pn)
        .with_detail("chi_integral", mass))
}

pub fn wp_inner_product_weighted(weights: &[f64], ai: &KSForm, aj: &KSForm) -> Result<C64> {
    if ai.n != aj.n || ai.nodes() != aj.nodes() || ai.nodes() != weights.len() {
        return Err(Error::Mismatch("Kodaira-Spencer forms live on different fibers".into()));
    }
    Ok((0..weights.len())
        .map(|v| {
            let s: C64 = ai.block(v).iter().zip(aj.block(v)).map(|(x, y)| x * y.conj()).sum();
            s * weights[v]
        })
        .sum())
}

/// L2 product of Beltrami differentials against the hyperbolic area.
pub fn wp_inner_product(fiber: &DiscreteFiber, ai: &KSForm, aj: &KSForm) -> Result<C64> {
    wp_inner_product_weighted(&fiber.area_weights, ai, aj)
}

pub fn wp_gram(weights: &[f64], forms: &[KSForm]) -> Result<Mat<C64>> {
    let k = forms.len();
    let mut g = Mat::<C64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = wp_inner_product_weighted(weights, &forms[i], &forms[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// The Hermitian matrix [[g_ss, g_sb], [g_as, g_ab]].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BorderedMetric {
    pub g_ss: f64,
    pub g_sb: Vec<C64>,
    /// Row-major n x n block g_{alpha beta bar}.
    pub g_ab: Vec<C64>,
}

impl BorderedMetric {
    pub fn n(&self) -> usize {
        self.g_sb.len()
    }

    fn block(&self) -> Mat<C64> {
        let n = self.n();
        Mat::from_fn(n, n, |a, b| self.g_ab[a * n + b])
    }

    pub fn full(&self) -> Mat<C64> {
        let n = self.n();
        Mat::from_fn(n + 1, n + 1, |i, j| match (i, j) {
            (0, 0) => C64::new(self.g_ss, 0.0),
            (0, j) => self.g_sb[j - 1],
            (i, 0) => self.g_sb[i - 1].conj(),
            (i, j) => self.g_ab[(i - 1) * n + (j - 1)],
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.g_ab.len() != n * n {
            return Err(Error::Mismatch("block size does not match the border".into()));
        }
        let g = self.block();
        for a in 0..n {
            for b in 0..n {
                if (g[(a, b)] - g[(b, a)].conj()).norm() > 1e-12 * (1.0 + g[(a, b)].norm()) {
                    return Err(Error::Domain("fiber block is not Hermitian".into()));
                }
            }
        }
        if g.llt(faer::Side::Lower).is_err() {
            return Err(Error::Singular("fiber block is not positive definite".into()));
        }
        Ok(())
    }

    /// Random data with a well-conditioned positive block; the full matrix
    /// is positive definite.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let x = Mat::<C64>::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let mut g = &x * x.adjoint();
        for a in 0..n {
            g[(a, a)] += C64::new(1.0, 0.0);
        }
        for a in 0..n {
            for b in 0..a {
                let m = 0.5 * (g[(a, b)] + g[(b, a)].conj());
                g[(a, b)] = m;
                g[(b, a)] = m.conj();
            }
            g[(a, a)] = C64::new(g[(a, a)].re, 0.0);
        }
        let g_sb: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let mut bm = BorderedMetric { g_ss: 0.0, g_sb, g_ab: (0..n * n).map(|i| g[(i / n, i % n)]).collect() };
        let schur = bm.g_ss - bm.phi().unwrap();
        bm.g_ss = schur + rng.random_range(0.5..2.0);
        bm
    }

    /// phi = g_ss - g_{alpha s bar} g_{s beta bar} g^{beta bar alpha}.
    pub fn phi(&self) -> Result<f64> {
        let n = self.n();
        let lu = self.block().partial_piv_lu();
        let rhs = Mat::from_fn(n, 1, |a, _| self.g_sb[a].conj());
        let x = lu.solve(&rhs);
        let q: C64 = (0..n).map(|b| self.g_sb[b] * x[(b, 0)]).sum();
        Ok(self.g_ss - q.re)
    }

    /// Horizontal-lift coefficients a^alpha = -g^{beta bar alpha} g_{s beta bar}.
    pub fn horizontal_lift(&self) -> Result<Vec<C64>> {
        self.validate()?;
        let n = self.n();
        // Row vector b G^{-1}, i.e. solve G^T y = b.
        let gt = self.block().transpose().to_owned();
        let rhs = Mat::from_fn(n, 1, |a, _| self.g_sb[a]);
        let y = gt.partial_piv_lu().solve(&rhs);
        Ok((0..n).map(|a| -y[(a, 0)]).collect())
    }
}

pub fn bordered_determinant_check(bm: &BorderedMetric) -> Result<BoundReport> {
    bm.validate()?;
    let det_full = bm.full().determinant();
    let det_block = bm.block().determinant();
    let phi = bm.phi()?;
    let rhs = det_block * phi;
    let scale = det_full.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
    let rel = (det_full - rhs).norm() / scale;
    Ok(BoundReport::leq("bordered determinant", "bordered-determinant-schur", rel, 0.0, 1e-12, Assertion::Hard)
        .with_provenance("n", bm.n())
        .with_detail("det_full", det_full.re)
        .with_detail("phi_det_block", rhs.re)
        .with_detail("phi", phi)
        .with_detail("g_ss", bm.g_ss))
}

#[derive(Debug, Clone)]
pub struct QdBasis {
    /// Near-kernel of dbar on K^2 at the vertices, rep-chart coefficients,
    /// orthonormal for the lumped vertex mass.
    pub fields: Vec<Field>,
    /// Singular values of dbar against the K^2 mass, ascending.
    pub singular_values: Vec<f64>,
}

impl QdBasis {
    /// sigma_{d+1} / sigma_d for the expected kernel dimension d.
    pub fn gap(&self) -> f64 {
        let d = self.fields.len();
        self.singular_values[d] / self.singular_values[d - 1].max(f64::MIN_POSITIVE)
    }
}

/// Holomorphic quadratic differentials: dimension 3g - 3 = 3 on the octagon surface.
pub const QD_DIMENSION: usize = 3;

pub fn quadratic_differential_basis(fiber: &DiscreteFiber) -> Result<QdBasis> {
    if !fiber.is_hyperbolic() {
        return Err(Error::Domain("quadratic differentials are computed on the octagon fiber".into()));
    }
    // quadratic elements: the near-kernel defect is O(h^2) instead of O(h)
    let op = dbar_laplacian_quadratic(fiber, 2)?;
    let count = 8.min(op.mass.len());
    let spec = SpectralDecomposition::from_sparse_partial(&op.stiffness, &op.mass, count, DegreeTag::Section { k: 2 })?;
    let singular_values = spec.raw_eigenvalues().iter().map(|l| l.max(0.0).sqrt()).collect();
    let nv = fiber.num_vertices();
    let mass: Vec<f64> = (0..nv).map(|v| fiber.area_weights[v] * fiber.kahler_at(fiber.vertices[v]).powi(-2)).collect();
    let inner = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).zip(&mass).map(|((x, y), m)| x.conj() * y * m).sum() };
    let mut fields: Vec<Vec<C64>> = Vec::new();
    for nu in 0..QD_DIMENSION {
        let mut v = spec.eigenvector(nu).values[..nv].to_vec();
        for q in &fields {
            let c = inner(q, &v);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let norm = inner(&v, &v).re.sqrt();
        if !(norm > 0.0) {
            return Err(Error::Singular("quadratic-differential basis is degenerate".into()));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        fields.push(v);
    }
    let fields = fields.into_iter().map(|v| Field::new(v, DegreeTag::Section { k: 2 })).collect();
    Ok(QdBasis { fields, singular_values })
}

/// Compares each side vertex's value transported by the side-pairing map
/// with the value transported by the triangle corner maps there.
pub fn pairing_equivariance_defect(fiber: &DiscreteFiber, q: &Field) -> f64 {
    let scale = q.values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for sp in &fiber.side_pairings {
        for &v in &sp.chain {
            let rep = fiber.vertices[v];
            let target = sp.map.apply(rep);
            let expected = q.values[v] * sp.map.derivative(rep).powi(-2);
            for t in 0..fiber.triangles.len() {
                for c in 0..3 {
                    if fiber.triangles[t][c] == v && (fiber.corners[t][c] - target).norm() < 1e-9 {
                        let got = q.values[v] * corner_factor(fiber, t, c, 2);
                        worst = worst.max((got - expected).norm() / scale);
                    }
                }
            }
        }
    }
    worst
}

/// The Beltrami differential mu = conj(q) / rho.
pub fn harmonic_beltrami(fiber: &DiscreteFiber, q: &Field) -> KSForm {
    KSForm::scalar(q.values.iter().zip(&fiber.metric_density).map(|(z, r)| z.conj() / r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_bordered_case() {
        let bm = BorderedMetric {
            g_ss: 2.5,
            g_sb: vec![C64::new(0.0, 0.0); 2],
            g_ab: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        };
        let r = bordered_determinant_check(&bm).unwrap();
        assert!(r.pass);
        assert_eq!(r.details["phi"], 2.5);
        assert!((r.details["det_full"] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn horizontal_lift_is_orthogonal_to_fiber() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bm = BorderedMetric::random(3, &mut rng);
        let a = bm.horizontal_lift().unwrap();
        for b in 0..3 {
            let s: C64 = bm.g_sb[b] + (0..3).map(|al| a[al] * bm.g_ab[al * 3 + b]).sum::<C64>();
            assert!(s.norm() < 1e-12);
        }
        assert!(bm.phi().unwrap() <= bm.g_ss);
    }

    #[test]
    fn rejects_indefinite_block() {
        let bm = BorderedMetric { g_ss: 1.0, g_sb: vec![C64::new(0.0, 0.0)], g_ab: vec![C64::new(-1.0, 0.0)] };
        assert!(bordered_determinant_check(&bm).is_err());
    }

    #[test]
    fn synthetic_forms_must_be_symmetric() {
        let bad = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert!(KSForm::synthetic(2, bad).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = KSForm::random_synthetic(3, 4, &mut rng);
        assert_eq!(f.symmetry_defect(), 0.0);
        let w = vec![1.0; 4];
        let ip = wp_inner_product_weighted(&w, &f, &f).unwrap();
        assert!(ip.re > 0.0 && ip.im.abs() < 1e-14);
    }
}
