//! The dbar-Laplacian on sections of K^k over the octagon surface.
//!
//! A section f dz^k is stored by its coefficient at each vertex in the
//! representative chart. Inside a triangle the corner values are pulled into
//! that triangle's chart with the factor 1 / g'(rep)^k and interpolated
//! linearly. The energy is 2 int |f_zbar|^2 g^{-k} dx dy and the mass is the
//! lumped area times g^{-k}, so that k = 0 reproduces the function Laplacian.

use super::{signed_area, DiscreteFiber, Mobius, TRI_RULE};
use std::collections::BTreeMap;
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, C64};
use crate::spectral::{DegreeTag, SpectralDecomposition};

#[derive(Debug, Clone)]
pub struct BundleOperator {
    pub k: i32,
    pub stiffness: SparseMatrix<C64>,
    pub mass: Vec<f64>,
    /// Per triangle: dbar stencil (coefficient of each corner's rep value) and weight.
    stencils: Vec<([C64; 3], f64)>,
    triangles: Vec<[usize; 3]>,
}

impl BundleOperator {
    /// Full or partial eigendecomposition with the leading `harmonic_dim`
    /// modes treated as the harmonic space.
    pub fn spectrum(&self, partial: usize, harmonic_dim: usize) -> Result<SpectralDecomposition> {
        let s = SpectralDecomposition::from_sparse(&self.stiffness, &self.mass, partial, DegreeTag::Section { k: self.k })?;
        Ok(s.with_harmonic_dim(harmonic_dim))
    }

    /// Energy 2 int |f_zbar|^2 g^{-k} dx dy.
    pub fn energy(&self, f: &[C64]) -> f64 {
        self.stencils
            .iter()
            .zip(&self.triangles)
            .map(|((d, w), tri)| {
                let s: C64 = (0..3).map(|c| d[c] * f[tri[c]]).sum();
                w * s.norm_sqr()
            })
            .sum()
    }

    pub fn mass_norm(&self, f: &[C64]) -> f64 {
        f.iter().zip(&self.mass).map(|(v, m)| v.norm_sqr() * m).sum::<f64>().sqrt()
    }
}

/// Transformation factor taking a rep-chart coefficient of a section of
/// K^k to the chart of triangle `t`, corner `c`.
pub fn corner_factor(fiber: &DiscreteFiber, t: usize, c: usize, k: i32) -> C64 {
    let v = fiber.triangles[t][c];
    let g = &fiber.corner_maps[t][c];
    g.derivative(fiber.vertices[v]).powi(-k)
}

pub fn dbar_laplacian(fiber: &DiscreteFiber, k: i32) -> Result<BundleOperator> {
    if !fiber.is_hyperbolic() && k != 0 {
        return Err(Error::Domain("bundle Laplacians for k != 0 are defined on the octagon fiber".into()));
    }
    let nv = fiber.num_vertices();
    let mut trip = Vec::with_capacity(9 * fiber.triangles.len());
    let mut stencils = Vec::with_capacity(fiber.triangles.len());
    for (t, tri) in fiber.triangles.iter().enumerate() {
        let p = &fiber.corners[t];
        let a2 = 2.0 * signed_area(p);
        let mut d = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let l = (i + 2) % 3;
            let gx = (p[j].im - p[l].im) / a2;
            let gy = (p[l].re - p[j].re) / a2;
            d[i] = C64::new(0.5 * gx, 0.5 * gy) * corner_factor(fiber, t, i, k);
        }
        let gw = fiber.triangle_moments(t, |z| fiber.kahler_at(z).powi(-k));
        let w = 2.0 * (gw[0] + gw[1] + gw[2]);
        for a in 0..3 {
            for b in 0..3 {
                trip.push((tri[a], tri[b], d[a].conj() * d[b] * w));
            }
        }
        stencils.push((d, w));
    }
    let stiffness = SparseMatrix::from_triplets(nv, trip);
    let mass = (0..nv)
        .map(|v| fiber.area_weights[v] * fiber.kahler_at(fiber.vertices[v]).powi(-k))
        .collect();
    Ok(BundleOperator {
        k,
        stiffness,
        mass,
        stencils,
        triangles: fiber.triangles.clone(),
    })
}

/// Quadratic-element version of the dbar-Laplacian. Unknowns are the vertex
/// values followed by one value per edge (at the chart midpoint of the
/// triangle that first lists the edge), in `fiber.edges` order. The mass is
/// row-sum scaled (3/57 per corner, 16/57 per edge) so it stays diagonal.
#[derive(Debug, Clone)]
pub struct QuadraticOperator {
    pub k: i32,
    pub stiffness: SparseMatrix<C64>,
    pub mass: Vec<f64>,
    pub num_vertices: usize,
}

pub fn dbar_laplacian_quadratic(fiber: &DiscreteFiber, k: i32) -> Result<QuadraticOperator> {
    if !fiber.is_hyperbolic() {
        return Err(Error::Domain("quadratic bundle Laplacian is defined on the octagon fiber".into()));
    }
    let nv = fiber.num_vertices();
    let edge_id: BTreeMap<(usize, usize), usize> = fiber.edges.iter().enumerate().map(|(i, e)| ((e.a, e.b), nv + i)).collect();
    // canonical chart of each edge: (map of its lower vertex, chart midpoint)
    let mut canon: BTreeMap<usize, (Mobius, C64)> = BTreeMap::new();
    let n = nv + fiber.edges.len();
    let mut mass = vec![0.0; n];
    let mut trip = Vec::with_capacity(36 * fiber.triangles.len());
    for (t, tri) in fiber.triangles.iter().enumerate() {
        let p = &fiber.corners[t];
        let a2 = 2.0 * signed_area(p);
        let area = 0.5 * a2.abs();
        let mut d = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let l = (i + 2) % 3;
            d[i] = C64::new(0.5 * (p[j].im - p[l].im) / a2, 0.5 * (p[l].re - p[j].re) / a2);
        }
        let mut dof = [0usize; 6];
        let mut factor = [C64::new(1.0, 0.0); 6];
        for i in 0..3 {
            dof[i] = tri[i];
            factor[i] = corner_factor(fiber, t, i, k);
            let j = (i + 1) % 3;
            let (ci, cj) = if tri[i] < tri[j] { (i, j) } else { (j, i) };
            let e = *edge_id
                .get(&(tri[ci], tri[cj]))
                .ok_or_else(|| Error::Mesh { triangle: t, reason: "edge missing from edge list".into() })?;
            dof[3 + i] = e;
            let here = fiber.corner_maps[t][ci];
            let (g0, mid0) = *canon.entry(e).or_insert((here, 0.5 * (p[i] + p[j])));
            let m = here.compose(&g0.inverse());
            factor[3 + i] = m.derivative(mid0).powi(-k);
        }
        let mut integral = 0.0;
        let mut local = [[C64::new(0.0, 0.0); 6]; 6];
        for (bary, w) in TRI_RULE.iter() {
            let z = p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2];
            let gk = fiber.kahler_at(z).powi(-k);
            integral += w * area * fiber.density_at(z) * gk;
            let mut grad = [C64::new(0.0, 0.0); 6];
            for i in 0..3 {
                let j = (i + 1) % 3;
                grad[i] = d[i] * (4.0 * bary[i] - 1.0);
                grad[3 + i] = (d[j] * bary[i] + d[i] * bary[j]) * 4.0;
            }
            let wq = 2.0 * w * area * gk;
            for a in 0..6 {
                for b in 0..6 {
                    local[a][b] += (grad[a] * factor[a]).conj() * grad[b] * factor[b] * wq;
                }
            }
        }
        for a in 0..6 {
            mass[dof[a]] += integral * if a < 3 { 3.0 / 57.0 } else { 16.0 / 57.0 };
            for b in 0..6 {
                trip.push((dof[a], dof[b], local[a][b]));
            }
        }
    }
    Ok(QuadraticOperator { k, stiffness: SparseMatrix::from_triplets(n, trip), mass, num_vertices: nv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::build_hyperbolic_octagon_fiber;

    #[test]
    fn quadratic_operator_on_functions() {
        let f = build_hyperbolic_octagon_fiber(2).unwrap();
        let op = dbar_laplacian_quadratic(&f, 0).unwrap();
        assert_eq!(op.mass.len(), f.num_vertices() + f.edges.len());
        assert!((op.mass.iter().sum::<f64>() - f.area()).abs() < 1e-9 * f.area());
        let ku = op.stiffness.matvec(&vec![C64::new(1.0, 0.0); op.mass.len()]);
        assert!(ku.iter().all(|z| z.norm() < 1e-10));
        assert!(op.stiffness.hermitian_defect() < 1e-12);
    }
}
