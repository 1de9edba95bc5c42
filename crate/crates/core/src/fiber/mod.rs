//! Triangulated model fibers: the genus-2 surface glued from the regular
//! hyperbolic octagon with angles pi/4, and a flat calibration torus.
//!
//! A fiber is stored as a quotient mesh. Every vertex has a representative
//! position in the chart (the closed octagon or the fundamental square);
//! every triangle corner carries its own chart position together with the
//! deck transformation `g` with `g(rep) = corner`.

mod bundle;
pub mod io;
pub mod mobius;
mod octagon;
mod torus;

pub use bundle::{corner_factor, dbar_laplacian, dbar_laplacian_quadratic, BundleOperator, QuadraticOperator};
pub use mobius::{geodesic_interpolate, hyperbolic_distance, Mobius};
pub use octagon::{build_hyperbolic_octagon_fiber, octagon_corner_radius, octagon_generators};
pub use torus::build_torus_fiber;

use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, C64};
use crate::spectral::{DegreeTag, SpectralDecomposition};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FiberKind {
    Torus { side: f64, resolution: usize },
    Octagon { level: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidePairing {
    pub from_side: usize,
    pub to_side: usize,
    pub map: Mobius,
    /// Quotient vertex ids along the source side, in order.
    pub chain: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteFiber {
    pub kind: FiberKind,
    pub vertices: Vec<C64>,
    pub triangles: Vec<[usize; 3]>,
    pub corners: Vec<[C64; 3]>,
    pub corner_maps: Vec<[Mobius; 3]>,
    pub side_pairings: Vec<SidePairing>,
    pub metric_density: Vec<f64>,
    pub area_weights: Vec<f64>,
    pub edges: Vec<Edge>,
    /// Factor in front of the cotangent stiffness in the function Laplacian.
    pub laplacian_scale: f64,
    /// Largest mismatch between pairing maps and the mesh side points.
    pub pairing_defect: f64,
    /// Largest mismatch between deck maps reached along different generator paths.
    pub holonomy_defect: f64,
}

// Symmetric degree-4 rule on the reference triangle (barycentric, weight).
pub(crate) const TRI_RULE: [([f64; 3], f64); 6] = [
    ([0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459], 0.109_951_743_655_322),
    ([0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.108_103_018_168_070, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_070], 0.223_381_589_678_011),
];

pub(crate) fn signed_area(p: &[C64; 3]) -> f64 {
    let u = p[1] - p[0];
    let v = p[2] - p[0];
    0.5 * (u.re * v.im - u.im * v.re)
}

impl DiscreteFiber {
    pub fn is_hyperbolic(&self) -> bool {
        matches!(self.kind, FiberKind::Octagon { .. })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Conformal factor of the Riemannian metric at a chart point.
    pub fn density_at(&self, z: C64) -> f64 {
        if self.is_hyperbolic() {
            let s = 1.0 - z.norm_sqr();
            4.0 / (s * s)
        } else {
            1.0
        }
    }

    /// Kahler coefficient g = g_{z zbar} at a chart point; the area form is 2 g dx dy.
    pub fn kahler_at(&self, z: C64) -> f64 {
        0.5 * self.density_at(z)
    }

    pub fn chart_distance(&self, z: C64, w: C64) -> f64 {
        if self.is_hyperbolic() {
            hyperbolic_distance(z, w)
        } else {
            (z - w).norm()
        }
    }

    /// Integrates `f(z) * lambda_i(z)` over triangle `t` for each corner i.
    pub fn triangle_moments<F: Fn(C64) -> f64>(&self, t: usize, f: F) -> [f64; 3] {
        let p = &self.corners[t];
        let area = signed_area(p).abs();
        let mut out = [0.0; 3];
        for (bary, w) in TRI_RULE.iter() {
            let z = p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2];
            let fz = f(z) * w * area;
            for i in 0..3 {
                out[i] += fz * bary[i];
            }
        }
        out
    }

    pub(crate) fn finalize(mut self) -> Result<Self> {
        let nv = self.vertices.len();
        let mut area = vec![0.0; nv];
        for t in 0..self.triangles.len() {
            let a = signed_area(&self.corners[t]);
            if !(a > 1e-15) {
                return Err(Error::Mesh {
                    triangle: t,
                    reason: format!("non-positive chart area {a:e}"),
                });
            }
            let m = self.triangle_moments(t, |z| self.density_at(z));
            for i in 0..3 {
                area[self.triangles[t][i]] += m[i];
            }
        }
        if let Some(v) = area.iter().position(|&a| !(a > 0.0)) {
            return Err(Error::Mesh { triangle: 0, reason: format!("vertex {v} has no area") });
        }
        self.area_weights = area;
        self.metric_density = self.vertices.iter().map(|&z| self.density_at(z)).collect();
        let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for t in 0..self.triangles.len() {
            for i in 0..3 {
                let j = (i + 1) % 3;
                let (a, b) = (self.triangles[t][i], self.triangles[t][j]);
                let len = self.chart_distance(self.corners[t][i], self.corners[t][j]);
                edges.entry((a.min(b), a.max(b))).or_insert(len);
            }
        }
        self.edges = edges.into_iter().map(|((a, b), length)| Edge { a, b, length }).collect();
        Ok(self)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn area(&self) -> f64 {
        self.area_weights.iter().sum()
    }

    /// Cotangent stiffness K with u^T K u = int |grad u|^2 for piecewise-linear u.
    pub fn stiffness(&self) -> SparseMatrix<f64> {
        let mut trip = Vec::with_capacity(9 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let p = &self.corners[t];
            let area2 = 2.0 * signed_area(p);
            for i in 0..3 {
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                let u = p[i] - p[k];
                let v = p[j] - p[k];
                let cot = (u.re * v.re + u.im * v.im) / area2;
                let w = 0.5 * cot;
                let (a, b) = (tri[i], tri[j]);
                trip.push((a, a, w));
                trip.push((b, b, w));
                trip.push((a, b, -w));
                trip.push((b, a, -w));
            }
        }
        SparseMatrix::from_triplets(self.vertices.len(), trip)
    }

    /// Smallest off-diagonal coupling -K_ab; non-negative means the discrete
    /// maximum principle holds.
    pub fn min_cotan_weight(&self) -> f64 {
        let k = self.stiffness();
        let mut m = f64::INFINITY;
        for i in 0..k.n {
            for (j, v) in k.row(i) {
                if i != j {
                    m = m.min(-v);
                }
            }
        }
        m
    }

    /// The function Laplacian as (scaled stiffness, lumped mass).
    pub fn function_operator(&self) -> (SparseMatrix<f64>, Vec<f64>) {
        let mut k = self.stiffness();
        k.val.iter_mut().for_each(|v| *v *= self.laplacian_scale);
        (k, self.area_weights.clone())
    }

    /// Applies the function Laplacian directly: scale * M^{-1} K u.
    pub fn apply_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let (k, m) = self.function_operator();
        k.matvec(u).iter().zip(&m).map(|(a, b)| a / b).collect()
    }

    /// Shortest-path diameter over mesh edges plus the chords joining the two
    /// apexes of adjacent triangles; every path is a genuine curve, so this
    /// over-estimates the Riemannian diameter.
    pub fn diameter(&self) -> Result<f64> {
        let adj = self.distance_graph();
        let n = self.vertices.len();
        let mut best: f64 = 0.0;
        for s in 0..n {
            let d = dijkstra(&adj, s);
            for &v in &d {
                if !v.is_finite() {
                    return Err(Error::Disconnected);
                }
                best = best.max(v);
            }
        }
        if !(best > 0.0) {
            return Err(Error::Domain("fiber has zero diameter".into()));
        }
        Ok(best)
    }

    fn distance_graph(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.vertices.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut push = |a: usize, b: usize, l: f64| {
            adj[a].push((b, l));
            adj[b].push((a, l));
        };
        for e in &self.edges {
            push(e.a, e.b, e.length);
        }
        let mut by_edge: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                by_edge.entry((a.min(b), a.max(b))).or_default().push((t, (i + 2) % 3));
            }
        }
        for ((a, _b), list) in by_edge {
            if list.len() != 2 {
                continue;
            }
            let (t1, c1) = list[0];
            let (t2, c2) = list[1];
            let ia1 = self.triangles[t1].iter().position(|&v| v == a).unwrap();
            let ia2 = self.triangles[t2].iter().position(|&v| v == a).unwrap();
            // Map triangle t2's chart into t1's chart through the shared vertex a.
            let h = self.corner_maps[t1][ia1].compose(&self.corner_maps[t2][ia2].inverse());
            let z = h.apply(self.corners[t2][c2]);
            let l = self.chart_distance(self.corners[t1][c1], z);
            push(self.triangles[t1][c1], self.triangles[t2][c2], l);
        }
        adj
    }

    /// Flips edges whose cotangent weight is negative until none is left (or
    /// `max_sweeps` passes). Returns the number of flips. Call before `finalize`.
    pub(crate) fn delaunay_flip(&mut self, max_sweeps: usize) -> usize {
        let cot = |p: C64, a: C64, b: C64| {
            let u = a - p;
            let v = b - p;
            (u.re * v.re + u.im * v.im) / (u.re * v.im - u.im * v.re)
        };
        let mut flips = 0;
        for _ in 0..max_sweeps {
            let mut by_edge: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
            for (t, tri) in self.triangles.iter().enumerate() {
                for i in 0..3 {
                    let (a, b) = (tri[i], tri[(i + 1) % 3]);
                    by_edge.entry((a.min(b), a.max(b))).or_default().push((t, i));
                }
            }
            let mut touched = vec![false; self.triangles.len()];
            let mut any = false;
            for list in by_edge.values() {
                if list.len() != 2 {
                    continue;
                }
                let (t1, i1) = list[0];
                let (t2, i2) = list[1];
                if touched[t1] || touched[t2] {
                    continue;
                }
                let (a, b, c) = (i1, (i1 + 1) % 3, (i1 + 2) % 3);
                // In t2 the shared side runs the other way: b at i2, a at i2+1.
                let (b2, a2, d2) = (i2, (i2 + 1) % 3, (i2 + 2) % 3);
                if self.triangles[t2][b2] != self.triangles[t1][b] {
                    continue;
                }
                let p1 = self.corners[t1];
                let m1 = self.corner_maps[t1];
                let h = m1[a].compose(&self.corner_maps[t2][a2].inverse());
                if (h.apply(self.corners[t2][b2]) - p1[b]).norm() > 1e-9 {
                    continue;
                }
                let pd = h.apply(self.corners[t2][d2]);
                let md = h.compose(&self.corner_maps[t2][d2]);
                let w = cot(p1[c], p1[a], p1[b]) + cot(pd, p1[b], p1[a]);
                if w >= -1e-12 {
                    continue;
                }
                let (vc, vd) = (self.triangles[t1][c], self.triangles[t2][d2]);
                if vc == vd || by_edge.contains_key(&(vc.min(vd), vc.max(vd))) {
                    continue;
                }
                let n1 = [p1[c], p1[a], pd];
                let n2 = [pd, p1[b], p1[c]];
                if signed_area(&n1) <= 0.0 || signed_area(&n2) <= 0.0 {
                    continue;
                }
                let (va, vb) = (self.triangles[t1][a], self.triangles[t1][b]);
                self.triangles[t1] = [vc, va, vd];
                self.corners[t1] = n1;
                self.corner_maps[t1] = [m1[c], m1[a], md];
                self.triangles[t2] = [vd, vb, vc];
                self.corners[t2] = n2;
                self.corner_maps[t2] = [md, m1[b], m1[c]];
                touched[t1] = true;
                touched[t2] = true;
                any = true;
                flips += 1;
            }
            if !any {
                break;
            }
        }
        flips
    }

    /// Sample-based check that pairing maps are disk isometries.
    pub fn pairing_isometry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for sp in &self.side_pairings {
            for j in 0..16 {
                let th = 0.39 * j as f64;
                let z = C64::from_polar(0.3 + 0.04 * j as f64, th);
                let w = C64::from_polar(0.5, -th);
                let d0 = self.chart_distance(z, w);
                let d1 = self.chart_distance(sp.map.apply(z), sp.map.apply(w));
                worst = worst.max((d0 - d1).abs() / d0.max(1.0));
                if self.is_hyperbolic() {
                    let u = sp.map.apply(C64::from_polar(1.0, th));
                    worst = worst.max((u.norm() - 1.0).abs());
                }
            }
        }
        worst
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], s: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((ordered(0.0), s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        let d = f64::from_bits(d);
        if d > dist[u] {
            continue;
        }
        for &(v, l) in &adj[u] {
            let nd = d + l;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((ordered(nd), v)));
            }
        }
    }
    dist
}

// Non-negative floats order like their bit patterns.
fn ordered(x: f64) -> u64 {
    x.to_bits()
}

/// Eigendecomposition of the function Laplacian of `fiber`. The torus uses
/// its exact Fourier basis; other fibers use the dense path up to
/// `DENSE_LIMIT` nodes and a partial spectrum beyond.
pub fn assemble_laplacian(fiber: &DiscreteFiber) -> Result<SpectralDecomposition> {
    if let FiberKind::Torus { resolution, .. } = fiber.kind {
        return torus::periodic_spectrum(fiber, resolution);
    }
    let (k, m) = fiber.function_operator();
    SpectralDecomposition::from_sparse(&k, &m, 64, DegreeTag::Function)
}

/// Dense-path decomposition regardless of fiber kind; used for cross-checks.
pub fn assemble_laplacian_dense(fiber: &DiscreteFiber) -> Result<SpectralDecomposition> {
    let (k, m) = fiber.function_operator();
    SpectralDecomposition::from_dense(&k.to_dense(), &m, DegreeTag::Function)
}
