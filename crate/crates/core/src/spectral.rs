//! Functional calculus of a discrete self-adjoint non-negative Laplacian
//! given by its eigendecomposition under a lumped volume weighting.

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigh, lanczos_smallest, Scalar, SparseCholesky, SparseMatrix, C64};
use crate::quadrature::integrate;
use crate::report::{Assertion, BoundReport};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

/// Meshes up to this many nodes get a full dense spectrum.
pub const DENSE_LIMIT: usize = 5000;
/// Relative zero-eigenvalue threshold.
pub const ZERO_THRESHOLD: f64 = 1e-9;
/// Resonance tolerance relative to the input norm.
pub const RESONANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DegreeTag {
    Function,
    /// Section of the k-th power of the canonical bundle, holomorphic frame.
    Section { k: i32 },
    /// (p, q)-form with values in K^m, unitary frames.
    Form { p: u8, q: u8, m: i32 },
    /// (0, q)-form with values in the p-th exterior power of the tangent bundle.
    Polyvector { p: u8, q: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<C64>,
    pub tag: DegreeTag,
}

impl Field {
    pub fn new(values: Vec<C64>, tag: DegreeTag) -> Self {
        Field { values, tag }
    }

    pub fn function(values: Vec<C64>) -> Self {
        Field::new(values, DegreeTag::Function)
    }

    pub fn real(values: &[f64]) -> Self {
        Field::function(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field::function(vec![C64::new(c, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scaled(&self, s: C64) -> Field {
        Field::new(self.values.iter().map(|v| v * s).collect(), self.tag)
    }

    pub fn conj(&self) -> Field {
        Field::new(self.values.iter().map(|v| v.conj()).collect(), self.tag)
    }

    pub fn axpy(&self, a: C64, other: &Field) -> Field {
        Field::new(self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect(), self.tag)
    }
}

/// One mode of the real Fourier basis on a periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourierMode {
    pub kx: u32,
    pub ky: u32,
    pub sine: bool,
}

#[derive(Clone)]
pub enum Basis {
    Real(Arc<Mat<f64>>),
    Complex(Arc<Mat<C64>>),
    /// Implicit real Fourier basis on an nx-by-ny periodic grid, node = iy*nx+ix.
    Periodic {
        nx: usize,
        ny: usize,
        modes: Arc<Vec<FourierMode>>,
        cos: Arc<Vec<f64>>,
        sin: Arc<Vec<f64>>,
    },
}

/// Operator kept for direct solves when only part of the spectrum is known.
#[derive(Clone)]
pub enum Operator {
    Real(Arc<SparseMatrix<f64>>),
    Complex(Arc<SparseMatrix<C64>>),
}

#[derive(Clone)]
pub struct SpectralDecomposition {
    raw_eigenvalues: Vec<f64>,
    eigenvalues: Vec<f64>,
    basis: Basis,
    weights: Vec<f64>,
    total_volume: f64,
    harmonic_dim: usize,
    complete: bool,
    operator: Option<Operator>,
    tag: DegreeTag,
}

impl std::fmt::Debug for SpectralDecomposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralDecomposition")
            .field("nodes", &self.weights.len())
            .field("modes", &self.eigenvalues.len())
            .field("harmonic_dim", &self.harmonic_dim)
            .field("complete", &self.complete)
            .finish()
    }
}

fn count_zero(vals: &[f64]) -> usize {
    let lmax = vals.iter().cloned().fold(0.0f64, f64::max);
    let thr = ZERO_THRESHOLD * lmax.max(1e-300);
    vals.iter().take_while(|&&v| v.abs() <= thr).count()
}

impl SpectralDecomposition {
    fn assemble(raw: Vec<f64>, basis: Basis, weights: Vec<f64>, complete: bool, operator: Option<Operator>, tag: DegreeTag) -> Result<Self> {
        let lmax = raw.iter().cloned().fold(0.0f64, f64::max);
        if let Some(&bad) = raw.iter().find(|&&v| v < -ZERO_THRESHOLD * lmax.max(1.0)) {
            return Err(Error::Eigen(format!("negative eigenvalue {bad} in a non-negative operator")));
        }
        let harmonic_dim = count_zero(&raw);
        let total_volume = weights.iter().sum();
        let mut s = SpectralDecomposition {
            eigenvalues: raw.clone(),
            raw_eigenvalues: raw,
            basis,
            weights,
            total_volume,
            harmonic_dim,
            complete,
            operator,
            tag,
        };
        s.clamp();
        Ok(s)
    }

    fn clamp(&mut self) {
        for (i, v) in self.eigenvalues.iter_mut().enumerate() {
            if i < self.harmonic_dim {
                *v = 0.0;
            } else if *v < 0.0 {
                *v = 0.0;
            }
        }
    }

    /// Dense generalized eigenproblem (stiffness, diag(weights)).
    pub fn from_dense<T: Scalar>(stiffness: &Mat<T>, weights: &[f64], tag: DegreeTag) -> Result<Self> {
        let (vals, vecs) = generalized_eigh(stiffness, weights)?;
        let basis = if T::IS_COMPLEX {
            let n = vecs.nrows();
            Basis::Complex(Arc::new(Mat::<C64>::from_fn(n, n, |i, j| vecs[(i, j)].to_c64())))
        } else {
            let n = vecs.nrows();
            Basis::Real(Arc::new(Mat::<f64>::from_fn(n, n, |i, j| vecs[(i, j)].re())))
        };
        Self::assemble(vals, basis, weights.to_vec(), true, None, tag)
    }

    /// Full spectrum for small operators, otherwise the `partial` smallest
    /// modes plus the operator itself for exact shifted solves.
    pub fn from_sparse<T: Scalar>(stiffness: &SparseMatrix<T>, weights: &[f64], partial: usize, tag: DegreeTag) -> Result<Self> {
        if stiffness.n <= DENSE_LIMIT {
            return Self::from_dense(&stiffness.to_dense(), weights, tag);
        }
        Self::from_sparse_partial(stiffness, weights, partial, tag)
    }

    pub fn from_sparse_partial<T: Scalar>(stiffness: &SparseMatrix<T>, weights: &[f64], count: usize, tag: DegreeTag) -> Result<Self> {
        let n = stiffness.n;
        let sigma = 1e-3 * weights.iter().sum::<f64>().recip().max(1e-6);
        let (vals, vecs) = lanczos_smallest(stiffness, weights, count, sigma, 0x5eed)?;
        let m = vals.len();
        let (basis, operator) = if T::IS_COMPLEX {
            let b = Mat::<C64>::from_fn(n, m, |i, j| vecs[j][i].to_c64());
            let cs: Vec<(usize, usize, C64)> = (0..n).flat_map(|i| stiffness.row(i).map(move |(j, v)| (i, j, v.to_c64())).collect::<Vec<_>>()).collect();
            (Basis::Complex(Arc::new(b)), Operator::Complex(Arc::new(SparseMatrix::from_triplets(n, cs))))
        } else {
            let b = Mat::<f64>::from_fn(n, m, |i, j| vecs[j][i].re());
            let rs: Vec<(usize, usize, f64)> = (0..n).flat_map(|i| stiffness.row(i).map(move |(j, v)| (i, j, v.re())).collect::<Vec<_>>()).collect();
            (Basis::Real(Arc::new(b)), Operator::Real(Arc::new(SparseMatrix::from_triplets(n, rs))))
        };
        Self::assemble(vals, basis, weights.to_vec(), false, Some(operator), tag)
    }

    /// Translation-invariant operator on a periodic grid with uniform node
    /// weight. `stencil` lists couplings (dx, dy, w) with
    /// (K u)_j = sum_s w_s (u_j - u_{j+s}).
    pub fn from_periodic_stencil(nx: usize, ny: usize, stencil: &[(i64, i64, f64)], node_weight: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(node_weight > 0.0) {
            return Err(Error::Domain("periodic grid needs positive size and weight".into()));
        }
        let l = nx * ny;
        let symbol = |kx: usize, ky: usize| -> f64 {
            stencil
                .iter()
                .map(|&(dx, dy, w)| {
                    let th = 2.0 * PI * (kx as f64 * dx as f64 / nx as f64 + ky as f64 * dy as f64 / ny as f64);
                    w * (1.0 - th.cos())
                })
                .sum::<f64>()
                / node_weight
        };
        let mut modes: Vec<(f64, FourierMode)> = Vec::with_capacity(l);
        for ky in 0..ny {
            for kx in 0..nx {
                let (cx, cy) = ((nx - kx) % nx, (ny - ky) % ny);
                let lam = symbol(kx, ky);
                if (cx, cy) == (kx, ky) {
                    modes.push((lam, FourierMode { kx: kx as u32, ky: ky as u32, sine: false }));
                } else if (ky, kx) < (cy, cx) {
                    modes.push((lam, FourierMode { kx: kx as u32, ky: ky as u32, sine: false }));
                    modes.push((lam, FourierMode { kx: kx as u32, ky: ky as u32, sine: true }));
                }
            }
        }
        modes.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1.ky, a.1.kx, a.1.sine).cmp(&(b.1.ky, b.1.kx, b.1.sine))));
        let cos: Vec<f64> = (0..l).map(|i| (2.0 * PI * i as f64 / l as f64).cos()).collect();
        let sin: Vec<f64> = (0..l).map(|i| (2.0 * PI * i as f64 / l as f64).sin()).collect();
        let vals = modes.iter().map(|m| m.0).collect();
        let basis = Basis::Periodic {
            nx,
            ny,
            modes: Arc::new(modes.into_iter().map(|m| m.1).collect()),
            cos: Arc::new(cos),
            sin: Arc::new(sin),
        };
        Self::assemble(vals, basis, vec![node_weight; l], true, None, DegreeTag::Function)
    }

    /// Builds a decomposition from explicit eigenpairs; eigenvectors are
    /// columns, assumed orthonormal under `weights`.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: Mat<C64>, weights: Vec<f64>, tag: DegreeTag) -> Result<Self> {
        if eigenvectors.nrows() != weights.len() || eigenvectors.ncols() != eigenvalues.len() {
            return Err(Error::Mismatch("eigenvector block does not match weights/eigenvalues".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("eigenvalues must be ascending".into()));
        }
        let complete = eigenvalues.len() == weights.len();
        Self::assemble(eigenvalues, Basis::Complex(Arc::new(eigenvectors)), weights, complete, None, tag)
    }

    /// Overrides the dimension of the eigenspace treated as harmonic (the
    /// leading modes); their eigenvalues are then used as exactly zero.
    pub fn with_harmonic_dim(mut self, dim: usize) -> Self {
        self.harmonic_dim = dim.min(self.eigenvalues.len());
        self.eigenvalues = self.raw_eigenvalues.clone();
        self.clamp();
        self
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }
    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn raw_eigenvalues(&self) -> &[f64] {
        &self.raw_eigenvalues
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }
    pub fn harmonic_dim(&self) -> usize {
        self.harmonic_dim
    }
    pub fn is_complete(&self) -> bool {
        self.complete
    }
    pub fn tag(&self) -> DegreeTag {
        self.tag
    }
    pub fn is_real(&self) -> bool {
        !matches!(self.basis, Basis::Complex(_))
    }

    fn periodic_norm(nx: usize, ny: usize, m: &FourierMode, w: f64) -> f64 {
        let selfconj = (2 * m.kx as usize) % nx == 0 && (2 * m.ky as usize) % ny == 0;
        let l = (nx * ny) as f64;
        if selfconj {
            (1.0 / (l * w)).sqrt()
        } else {
            (2.0 / (l * w)).sqrt()
        }
    }

    /// Eigenvector `nu` evaluated at `node`.
    pub fn entry(&self, node: usize, nu: usize) -> C64 {
        match &self.basis {
            Basis::Real(m) => C64::new(m[(node, nu)], 0.0),
            Basis::Complex(m) => m[(node, nu)],
            Basis::Periodic { nx, ny, modes, cos, sin } => {
                let md = &modes[nu];
                let (ix, iy) = (node % nx, node / nx);
                let idx = (md.kx as usize * ix * ny + md.ky as usize * iy * nx) % (nx * ny);
                let c = Self::periodic_norm(*nx, *ny, md, self.weights[0]);
                C64::new(c * if md.sine { sin[idx] } else { cos[idx] }, 0.0)
            }
        }
    }

    pub fn eigenvector(&self, nu: usize) -> Field {
        Field::new((0..self.nodes()).map(|i| self.entry(i, nu)).collect(), self.tag)
    }

    /// Weighted inner product sum_i w_i x_i conj(y_i).
    pub fn inner(&self, x: &Field, y: &Field) -> C64 {
        x.values
            .iter()
            .zip(&y.values)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b.conj() * *w)
            .sum()
    }

    pub fn norm(&self, x: &Field) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    pub fn integral(&self, x: &Field) -> C64 {
        x.values.iter().zip(&self.weights).map(|(a, w)| a * *w).sum()
    }

    fn check_len(&self, x: &Field) -> Result<()> {
        if x.len() != self.nodes() {
            return Err(Error::Mismatch(format!("field has {} nodes, spectrum has {}", x.len(), self.nodes())));
        }
        if !x.is_finite() {
            return Err(Error::Domain("field has non-finite entries".into()));
        }
        Ok(())
    }

    /// Coefficients <x, psi_nu> for every stored mode.
    pub fn coefficients(&self, x: &Field) -> Vec<C64> {
        let wx: Vec<C64> = x.values.iter().zip(&self.weights).map(|(a, w)| a * *w).collect();
        let n = self.nodes();
        match &self.basis {
            Basis::Real(m) => (0..self.modes())
                .map(|nu| {
                    let col = m.col(nu);
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..n {
                        s += wx[i] * col[i];
                    }
                    s
                })
                .collect(),
            Basis::Complex(m) => (0..self.modes())
                .map(|nu| {
                    let col = m.col(nu);
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..n {
                        s += wx[i] * col[i].conj();
                    }
                    s
                })
                .collect(),
            Basis::Periodic { .. } => (0..self.modes())
                .map(|nu| (0..n).map(|i| wx[i] * self.entry(i, nu).re).sum())
                .collect(),
        }
    }

    /// sum_nu c_nu psi_nu.
    pub fn synthesize(&self, c: &[C64]) -> Field {
        let n = self.nodes();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (nu, &cn) in c.iter().enumerate() {
            if cn == C64::new(0.0, 0.0) {
                continue;
            }
            match &self.basis {
                Basis::Real(m) => {
                    let col = m.col(nu);
                    for i in 0..n {
                        out[i] += cn * col[i];
                    }
                }
                Basis::Complex(m) => {
                    let col = m.col(nu);
                    for i in 0..n {
                        out[i] += cn * col[i];
                    }
                }
                Basis::Periodic { .. } => {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += cn * self.entry(i, nu).re;
                    }
                }
            }
        }
        Field::new(out, self.tag)
    }

    fn apply_multiplier<F: Fn(f64) -> f64>(&self, x: &Field, f: F) -> Field {
        let mut c = self.coefficients(x);
        for (nu, cn) in c.iter_mut().enumerate() {
            *cn *= f(self.eigenvalues[nu]);
        }
        let mut out = self.synthesize(&c);
        out.tag = x.tag;
        out
    }

    /// Applies the operator itself (sum lambda c psi).
    pub fn laplacian_apply(&self, x: &Field) -> Result<Field> {
        self.check_len(x)?;
        if !self.complete {
            return Err(Error::Domain("operator application needs the full spectrum".into()));
        }
        Ok(self.apply_multiplier(x, |l| l))
    }

    /// (L + shift)^{-1} x. Modes with lambda + shift <= 0 must carry no mass
    /// beyond `RESONANCE_TOL * |x|`; such negligible components are dropped.
    pub fn resolvent_apply(&self, shift: f64, x: &Field) -> Result<Field> {
        self.check_len(x)?;
        if !shift.is_finite() {
            return Err(Error::Domain("shift must be finite".into()));
        }
        let xnorm = self.norm(x);
        let mut c = self.coefficients(x);
        let gap_floor = 1e-12 * (1.0 + shift.abs());
        for (nu, cn) in c.iter_mut().enumerate() {
            let d = self.eigenvalues[nu] + shift;
            if d <= gap_floor {
                if cn.norm() > RESONANCE_TOL * xnorm.max(1e-300) {
                    return Err(Error::Resonance {
                        index: nu,
                        eigenvalue: self.eigenvalues[nu],
                        mass: cn.norm(),
                        shift,
                    });
                }
                *cn = C64::new(0.0, 0.0);
            } else {
                *cn /= d;
            }
        }
        if self.complete {
            let mut out = self.synthesize(&c);
            out.tag = x.tag;
            return Ok(out);
        }
        if shift <= 0.0 {
            return Err(Error::Domain("non-positive shifts need the full spectrum".into()));
        }
        self.direct_solve(shift, x)
    }

    /// Splits x = Hx + x' and returns ((L + shift)^{-1} x', Hx). Mass is
    /// measured against |x|, so rounding left in x' by the projection does
    /// not count as resonant.
    pub fn complement_resolvent(&self, shift: f64, x: &Field) -> Result<(Field, Field)> {
        self.check_len(x)?;
        if !self.complete {
            return Err(Error::Domain("the complement resolvent needs the full spectrum".into()));
        }
        let xnorm = self.norm(x);
        let c = self.coefficients(x);
        let mut harm = vec![C64::new(0.0, 0.0); c.len()];
        let mut rest = c.clone();
        let gap_floor = 1e-12 * (1.0 + shift.abs());
        for (nu, cn) in rest.iter_mut().enumerate() {
            if nu < self.harmonic_dim {
                harm[nu] = *cn;
                *cn = C64::new(0.0, 0.0);
                continue;
            }
            let d = self.eigenvalues[nu] + shift;
            if d <= gap_floor {
                if cn.norm() > RESONANCE_TOL * xnorm.max(1e-300) {
                    return Err(Error::Resonance { index: nu, eigenvalue: self.eigenvalues[nu], mass: cn.norm(), shift });
                }
                *cn = C64::new(0.0, 0.0);
            } else {
                *cn /= d;
            }
        }
        let (mut r, mut h) = (self.synthesize(&rest), self.synthesize(&harm));
        r.tag = x.tag;
        h.tag = x.tag;
        Ok((r, h))
    }

    fn direct_solve(&self, shift: f64, x: &Field) -> Result<Field> {
        let rhs: Vec<C64> = x.values.iter().zip(&self.weights).map(|(a, w)| a * *w).collect();
        let sol = match self.operator.as_ref().ok_or_else(|| Error::Domain("no operator for direct solve".into()))? {
            Operator::Real(k) => {
                let chol: SparseCholesky<f64> = k.shifted_cholesky(&self.weights, shift)?;
                let re = chol.solve(&rhs.iter().map(|v| v.re).collect::<Vec<_>>());
                let im = chol.solve(&rhs.iter().map(|v| v.im).collect::<Vec<_>>());
                re.into_iter().zip(im).map(|(a, b)| C64::new(a, b)).collect()
            }
            Operator::Complex(k) => k.shifted_cholesky(&self.weights, shift)?.solve(&rhs),
        };
        Ok(Field::new(sol, x.tag))
    }

    /// Orthogonal projection onto the harmonic (zero) eigenspace.
    pub fn harmonic_project(&self, x: &Field) -> Field {
        let mut c = self.coefficients_head(x, self.harmonic_dim);
        c.resize(self.harmonic_dim, C64::new(0.0, 0.0));
        let mut out = self.synthesize(&c);
        out.tag = x.tag;
        out
    }

    fn coefficients_head(&self, x: &Field, count: usize) -> Vec<C64> {
        (0..count)
            .map(|nu| {
                x.values
                    .iter()
                    .zip(&self.weights)
                    .enumerate()
                    .map(|(i, (a, w))| a * self.entry(i, nu).conj() * *w)
                    .sum()
            })
            .collect()
    }

    /// e^{-tL} x.
    pub fn heat_apply(&self, t: f64, x: &Field) -> Result<Field> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("heat time must be positive, got {t}")));
        }
        self.check_len(x)?;
        if !self.complete {
            return Err(Error::Domain("heat semigroup needs the full spectrum".into()));
        }
        Ok(self.apply_multiplier(x, |l| (-t * l).exp()))
    }

    /// sum_nu psi_nu(z) conj(psi_nu(w)) / (lambda_nu + shift) over the first `rank` modes.
    pub fn kernel_entry(&self, shift: f64, z: usize, w: usize, rank: usize) -> C64 {
        (0..rank.min(self.modes()))
            .map(|nu| self.entry(z, nu) * self.entry(w, nu).conj() / (self.eigenvalues[nu] + shift))
            .sum()
    }

    /// P(z, w) = sum_nu psi_nu(z) psi_nu(w) / (1 + lambda_nu).
    pub fn resolvent_kernel(&self, z: usize, w: usize) -> f64 {
        self.kernel_entry(1.0, z, w, self.modes()).re
    }

    /// Bound on the kernel modes beyond `rank`, from completeness
    /// sum_nu |psi_nu(z)|^2 = 1 / w_z.
    pub fn kernel_truncation_bound(&self, z: usize, w: usize, rank: usize) -> f64 {
        if rank >= self.modes() {
            return 0.0;
        }
        let lam = self.eigenvalues[rank];
        (1.0 / (self.weights[z] * self.weights[w])).sqrt() / (1.0 + lam)
    }

    /// Heat kernel P(t, z, w).
    pub fn heat_kernel_entry(&self, t: f64, z: usize, w: usize) -> C64 {
        (0..self.modes())
            .map(|nu| self.entry(z, nu) * self.entry(w, nu).conj() * (-t * self.eigenvalues[nu]).exp())
            .sum()
    }

    /// Compares P(z, w) with int_0^inf e^{-t} P(t, z, w) dt evaluated by quadrature.
    pub fn verify_resolvent_heat_identity(&self, z: usize, w: usize, abs_tol: f64) -> Result<BoundReport> {
        if !self.complete {
            return Err(Error::Domain("identity check needs the full spectrum".into()));
        }
        let prod: Vec<(f64, C64)> = (0..self.modes())
            .map(|nu| (self.eigenvalues[nu], self.entry(z, nu) * self.entry(w, nu).conj()))
            .collect();
        let bound: f64 = prod.iter().map(|p| p.1.norm()).sum();
        let t0 = (1e-3 * abs_tol / bound.max(1e-300)).min(1e-3);
        let t_max = (bound.max(1.0) / (1e-3 * abs_tol)).ln().max(1.0);
        let eval = |u: f64, im: bool| {
            let t = u.exp();
            let s: f64 = prod
                .iter()
                .map(|(l, p)| {
                    let e = (-(1.0 + l) * t).exp();
                    e * if im { p.im } else { p.re }
                })
                .sum();
            s * t
        };
        let re = integrate(|u| eval(u, false), t0.ln(), t_max.ln(), 16, 0.25 * abs_tol)?;
        let im = integrate(|u| eval(u, true), t0.ln(), t_max.ln(), 16, 0.25 * abs_tol)?;
        let head = t0 * bound;
        let tail = (-t_max).exp() * bound;
        let quad = C64::new(re.value, im.value);
        let direct = self.kernel_entry(1.0, z, w, self.modes());
        let err = (quad - direct).norm();
        Ok(BoundReport::leq("resolvent-heat identity", "resolvent-heat-identity", err, abs_tol, 0.0, Assertion::Hard)
            .with_provenance("z", z)
            .with_provenance("w", w)
            .with_detail("kernel", direct.re)
            .with_detail("quadrature_error", re.error + im.error + head + tail))
    }

    /// Largest |<psi_a, psi_b> - delta_ab| over the first `count` modes.
    pub fn orthonormality_defect(&self, count: usize) -> f64 {
        let count = count.min(self.modes());
        let vecs: Vec<Field> = (0..count).map(|nu| self.eigenvector(nu)).collect();
        let mut worst: f64 = 0.0;
        for a in 0..count {
            for b in a..count {
                let g = self.inner(&vecs[a], &vecs[b]);
                let e = if a == b { g - 1.0 } else { g };
                worst = worst.max(e.norm());
            }
        }
        worst
    }

    /// Writes the decomposition in the binary format described in `docs/formats.md`.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(b"KSPEC001")?;
        let (kind, n, m) = match &self.basis {
            Basis::Real(_) => (0u64, self.nodes(), self.modes()),
            Basis::Complex(_) => (1u64, self.nodes(), self.modes()),
            Basis::Periodic { .. } => (2u64, self.nodes(), self.modes()),
        };
        for v in [kind, n as u64, m as u64, self.harmonic_dim as u64, self.complete as u64] {
            out.write_all(&v.to_le_bytes())?;
        }
        let tag = serde_json::to_vec(&self.tag).map_err(|e| Error::Format(e.to_string()))?;
        out.write_all(&(tag.len() as u64).to_le_bytes())?;
        out.write_all(&tag)?;
        for v in self.weights.iter().chain(&self.raw_eigenvalues) {
            out.write_all(&v.to_le_bytes())?;
        }
        match &self.basis {
            Basis::Real(b) => {
                for j in 0..m {
                    for i in 0..n {
                        out.write_all(&b[(i, j)].to_le_bytes())?;
                    }
                }
            }
            Basis::Complex(b) => {
                for j in 0..m {
                    for i in 0..n {
                        out.write_all(&b[(i, j)].re.to_le_bytes())?;
                        out.write_all(&b[(i, j)].im.to_le_bytes())?;
                    }
                }
            }
            Basis::Periodic { nx, ny, modes, .. } => {
                out.write_all(&(*nx as u64).to_le_bytes())?;
                out.write_all(&(*ny as u64).to_le_bytes())?;
                for md in modes.iter() {
                    out.write_all(&md.kx.to_le_bytes())?;
                    out.write_all(&md.ky.to_le_bytes())?;
                    out.write_all(&(md.sine as u32).to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut inp: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        inp.read_exact(&mut magic)?;
        if &magic != b"KSPEC001" {
            return Err(Error::Format("bad spectrum magic".into()));
        }
        let mut u64s = [0u64; 5];
        for v in u64s.iter_mut() {
            *v = read_u64(&mut inp)?;
        }
        let [kind, n, m, hdim, complete] = u64s;
        let (n, m) = (n as usize, m as usize);
        let tag_len = read_u64(&mut inp)? as usize;
        let mut tag = vec![0u8; tag_len];
        inp.read_exact(&mut tag)?;
        let tag: DegreeTag = serde_json::from_slice(&tag).map_err(|e| Error::Format(e.to_string()))?;
        let weights = (0..n).map(|_| read_f64(&mut inp)).collect::<Result<Vec<_>>>()?;
        let vals = (0..m).map(|_| read_f64(&mut inp)).collect::<Result<Vec<_>>>()?;
        let basis = match kind {
            0 => {
                let mut b = Mat::<f64>::zeros(n, m);
                for j in 0..m {
                    for i in 0..n {
                        b[(i, j)] = read_f64(&mut inp)?;
                    }
                }
                Basis::Real(Arc::new(b))
            }
            1 => {
                let mut b = Mat::<C64>::zeros(n, m);
                for j in 0..m {
                    for i in 0..n {
                        let re = read_f64(&mut inp)?;
                        let im = read_f64(&mut inp)?;
                        b[(i, j)] = C64::new(re, im);
                    }
                }
                Basis::Complex(Arc::new(b))
            }
            2 => {
                let nx = read_u64(&mut inp)? as usize;
                let ny = read_u64(&mut inp)? as usize;
                let mut modes = Vec::with_capacity(m);
                for _ in 0..m {
                    let kx = read_u32(&mut inp)?;
                    let ky = read_u32(&mut inp)?;
                    let sine = read_u32(&mut inp)? != 0;
                    modes.push(FourierMode { kx, ky, sine });
                }
                let l = nx * ny;
                Basis::Periodic {
                    nx,
                    ny,
                    modes: Arc::new(modes),
                    cos: Arc::new((0..l).map(|i| (2.0 * PI * i as f64 / l as f64).cos()).collect()),
                    sin: Arc::new((0..l).map(|i| (2.0 * PI * i as f64 / l as f64).sin()).collect()),
                }
            }
            _ => return Err(Error::Format(format!("unknown basis kind {kind}"))),
        };
        let s = Self::assemble(vals, basis, weights, complete != 0, None, tag)?;
        Ok(s.with_harmonic_dim(hdim as usize))
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> (SparseMatrix<f64>, Vec<f64>) {
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let w = 1.0 + 0.5 * ((i as f64) * 1.3).sin().abs();
            t.extend([(i, i, w), (j, j, w), (i, j, -w), (j, i, -w)]);
        }
        let mass = (0..n).map(|i| 0.5 + 0.25 * ((i as f64) * 0.9).cos().abs()).collect();
        (SparseMatrix::from_triplets(n, t), mass)
    }

    #[test]
    fn resolvent_matches_dense_solve() {
        let (k, m) = cycle(40);
        let s = SpectralDecomposition::from_sparse(&k, &m, 0, DegreeTag::Function).unwrap();
        let x = Field::real(&(0..40).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>());
        let y = s.resolvent_apply(2.0, &x).unwrap();
        let chol = k.shifted_cholesky(&m, 2.0).unwrap();
        let rhs: Vec<f64> = (0..40).map(|i| m[i] * x.values[i].re).collect();
        let z = chol.solve(&rhs);
        for i in 0..40 {
            assert!((y.values[i].re - z[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_projection_of_constant() {
        let (k, m) = cycle(30);
        let s = SpectralDecomposition::from_sparse(&k, &m, 0, DegreeTag::Function).unwrap();
        assert_eq!(s.harmonic_dim(), 1);
        let c = Field::constant(30, 2.5);
        let h = s.harmonic_project(&c);
        for v in &h.values {
            assert!((v.re - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn negative_shift_rejects_low_modes() {
        let (k, m) = cycle(30);
        let s = SpectralDecomposition::from_sparse(&k, &m, 0, DegreeTag::Function).unwrap();
        let x = s.eigenvector(1);
        let shift = -(s.eigenvalues()[1] + 1e-3);
        assert!(matches!(s.resolvent_apply(shift, &x), Err(Error::Resonance { .. })));
        let hi = s.eigenvector(29);
        let y = s.resolvent_apply(shift, &hi).unwrap();
        let back = s.laplacian_apply(&y).unwrap().axpy(C64::new(shift, 0.0), &y);
        for (a, b) in back.values.iter().zip(&hi.values) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn periodic_matches_dense() {
        let nx = 6;
        let ny = 4;
        let stencil = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 2.0), (0, -1, 2.0)];
        let s = SpectralDecomposition::from_periodic_stencil(nx, ny, &stencil, 0.5).unwrap();
        let n = nx * ny;
        let mut t = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let i = iy * nx + ix;
                for &(dx, dy, w) in &stencil {
                    let j = ((iy as i64 + dy).rem_euclid(ny as i64) as usize) * nx + (ix as i64 + dx).rem_euclid(nx as i64) as usize;
                    t.push((i, i, w));
                    t.push((i, j, -w));
                }
            }
        }
        let k = SparseMatrix::from_triplets(n, t);
        let d = SpectralDecomposition::from_sparse(&k, &vec![0.5; n], 0, DegreeTag::Function).unwrap();
        for (a, b) in s.eigenvalues().iter().zip(d.eigenvalues()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(s.orthonormality_defect(n) < 1e-12);
        let x = Field::real(&(0..n).map(|i| ((i * i) as f64 * 0.1).sin()).collect::<Vec<_>>());
        let a = s.resolvent_apply(1.0, &x).unwrap();
        let b = d.resolvent_apply(1.0, &x).unwrap();
        for (p, q) in a.values.iter().zip(&b.values) {
            assert!((p - q).norm() < 1e-10);
        }
    }

    #[test]
    fn binary_roundtrip() {
        let (k, m) = cycle(12);
        let s = SpectralDecomposition::from_sparse(&k, &m, 0, DegreeTag::Function).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let r = SpectralDecomposition::read_from(&buf[..]).unwrap();
        assert_eq!(r.eigenvalues(), s.eigenvalues());
        assert_eq!(r.entry(3, 4), s.entry(3, 4));
        assert_eq!(r.harmonic_dim(), 1);
    }
}
