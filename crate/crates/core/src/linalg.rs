//! Small linear-algebra layer: a scalar trait over f64/complex, a CSR matrix
//! type, dense generalized eigensolves with a diagonal mass, sparse Cholesky
//! solves and a shift-invert Lanczos iteration for partial spectra.

use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
pub use num_complex::Complex64 as C64;

pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Send
    + Sync
    + std::fmt::Debug
    + PartialEq
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::AddAssign
    + 'static
{
    const IS_COMPLEX: bool;
    fn zero() -> Self;
    fn from_f64(x: f64) -> Self;
    fn conj_s(self) -> Self;
    fn re(self) -> f64;
    fn abs2(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn to_c64(self) -> C64;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn conj_s(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    const IS_COMPLEX: bool = true;
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn conj_s(self) -> Self {
        self.conj()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_c64(self) -> C64 {
        self
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, T)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col: Vec<usize> = Vec::with_capacity(trip.len());
        let mut val: Vec<T> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                let k = val.len() - 1;
                val[k] += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { n, row_ptr, col, val }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let mut s = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[i] = s;
        }
        y
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col[k] == j {
                return self.val[k];
            }
        }
        T::zero()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col[k], self.val[k]))
    }

    pub fn to_dense(&self) -> Mat<T> {
        let mut m = Mat::<T>::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj_s()).abs2().sqrt());
            }
        }
        worst
    }

    /// Factorizes `self + shift * diag(mass)`, which must be Hermitian positive definite.
    pub fn shifted_cholesky(&self, mass: &[f64], shift: f64) -> Result<SparseCholesky<T>> {
        let mut trip = Vec::with_capacity(self.val.len() + self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                trip.push(Triplet::new(i, j, v));
            }
            if shift != 0.0 {
                trip.push(Triplet::new(i, i, T::from_f64(shift * mass[i])));
            }
        }
        let a = SparseColMat::<usize, T>::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::Singular(format!("sparse assembly: {e:?}")))?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Singular(format!("sparse cholesky: {e:?}")))?;
        Ok(SparseCholesky { n: self.n, llt })
    }
}

pub struct SparseCholesky<T: Scalar> {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, T>,
}

impl<T: Scalar> SparseCholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let rhs = Mat::<T>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.llt.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Eigenpairs of the pencil (K, diag(mass)) for dense Hermitian K, ascending.
/// Eigenvectors are orthonormal in the mass inner product.
pub fn generalized_eigh<T: Scalar>(k: &Mat<T>, mass: &[f64]) -> Result<(Vec<f64>, Mat<T>)> {
    let n = k.nrows();
    if mass.len() != n || k.ncols() != n {
        return Err(Error::Mismatch(format!("stiffness {}x{} vs mass {}", n, k.ncols(), mass.len())));
    }
    let s: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let a = Mat::<T>::from_fn(n, n, |i, j| k[(i, j)].scale(s[i] * s[j]));
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals: Vec<f64> = (0..n).map(|i| eig.S()[i].re()).collect();
    let u = eig.U();
    let v = Mat::<T>::from_fn(n, n, |i, j| u[(i, j)].scale(s[i]));
    Ok((vals, v))
}

/// Shift-invert Lanczos with full reorthogonalization for the `count`
/// smallest eigenpairs of (K, diag(mass)).
pub fn lanczos_smallest<T: Scalar>(
    k: &SparseMatrix<T>,
    mass: &[f64],
    count: usize,
    sigma: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<T>>)> {
    use rand::{Rng, SeedableRng};
    let n = k.n;
    let chol = k.shifted_cholesky(mass, sigma)?;
    let dim = (4 * count + 40).min(n);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let minner = |x: &[T], y: &[T]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            s += x[i] * y[i].conj_s().scale(mass[i]);
        }
        s
    };
    let mut q: Vec<Vec<T>> = Vec::with_capacity(dim);
    let mut v: Vec<T> = (0..n).map(|_| T::from_f64(rng.random::<f64>() - 0.5)).collect();
    let nv = minner(&v, &v).re().sqrt();
    v.iter_mut().for_each(|x| *x = x.scale(1.0 / nv));
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..dim {
        q.push(v.clone());
        let mv: Vec<T> = (0..n).map(|i| v[i].scale(mass[i])).collect();
        let mut w = chol.solve(&mv);
        for _ in 0..2 {
            for qi in &q {
                let c = minner(&w, qi);
                for t in 0..n {
                    w[t] = w[t] - qi[t] * c;
                }
            }
        }
        let a = minner(&q[j], &chol.solve(&mv)).re();
        alpha.push(a);
        let b = minner(&w, &w).re().sqrt();
        if j + 1 == dim || b < 1e-14 {
            break;
        }
        beta.push(b);
        v = w.iter().map(|x| x.scale(1.0 / b)).collect();
    }
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let mut pairs: Vec<(f64, usize)> = (0..m)
        .filter(|&i| eig.S()[i].abs() > 1e-300)
        .map(|i| (1.0 / eig.S()[i] - sigma, i))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let u = eig.U();
    let take = count.min(pairs.len());
    let mut vals = Vec::with_capacity(take);
    let mut vecs = Vec::with_capacity(take);
    for &(lam, idx) in pairs.iter().take(take) {
        let mut x = vec![T::zero(); n];
        for (j, qj) in q.iter().enumerate().take(m) {
            let c = u[(j, idx)];
            for t in 0..n {
                x[t] += qj[t].scale(c);
            }
        }
        let kx = k.matvec(&x);
        let res: f64 = (0..n).map(|i| (kx[i] - x[i].scale(lam * mass[i])).abs2()).sum::<f64>().sqrt();
        let scale: f64 = (0..n).map(|i| x[i].scale(mass[i]).abs2()).sum::<f64>().sqrt();
        if res > 1e-6 * scale.max(1e-300) * (1.0 + lam.abs()) {
            return Err(Error::Eigen(format!("lanczos residual {res:e} for eigenvalue {lam}")));
        }
        vals.push(lam);
        vecs.push(x);
    }
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> SparseMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            t.push((i, i, 1.0));
            t.push((j, j, 1.0));
            t.push((i, j, -1.0));
            t.push((j, i, -1.0));
        }
        SparseMatrix::from_triplets(n, t)
    }

    #[test]
    fn cycle_spectrum() {
        let n = 12;
        let k = path_laplacian(n);
        let mass = vec![0.5; n];
        let (vals, vecs) = generalized_eigh(&k.to_dense(), &mass).unwrap();
        let mut expect: Vec<f64> = (0..n)
            .map(|j| 2.0 * (1.0 - (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()) / 0.5)
            .collect();
        expect.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in vals.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let g: f64 = (0..n).map(|i| vecs[(i, 3)] * vecs[(i, 3)] * mass[i]).sum();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_solves() {
        let n = 30;
        let k = path_laplacian(n);
        let mass: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let chol = k.shifted_cholesky(&mass, 2.0).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = chol.solve(&b);
        let kx = k.matvec(&x);
        for i in 0..n {
            assert!((kx[i] + 2.0 * mass[i] * x[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let n = 200;
        let k = path_laplacian(n);
        let mass: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * ((i as f64) * 0.7).sin()).collect();
        let (dv, _) = generalized_eigh(&k.to_dense(), &mass).unwrap();
        let (lv, _) = lanczos_smallest(&k, &mass, 6, 0.01, 7).unwrap();
        for i in 0..6 {
            assert!((dv[i] - lv[i]).abs() < 1e-9, "{} vs {}", dv[i], lv[i]);
        }
    }
}
