use super::mobius::Mobius;
use super::{DiscreteFiber, FiberKind, SidePairing};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::spectral::SpectralDecomposition;

/// Flat square torus of the given side, `resolution` nodes per direction,
/// each grid cell split along its main diagonal.
pub fn build_torus_fiber(side: f64, resolution: usize) -> Result<DiscreteFiber> {
    if resolution < 8 {
        return Err(Error::Domain(format!("torus resolution must be >= 8, got {resolution}")));
    }
    if !(side > 0.0) {
        return Err(Error::Domain(format!("torus side must be positive, got {side}")));
    }
    let n = resolution;
    let h = side / n as f64;
    let id = |i: usize, j: usize| (j % n) * n + (i % n);
    let vertices: Vec<C64> = (0..n * n).map(|v| C64::new((v % n) as f64 * h, (v / n) as f64 * h)).collect();
    let mut triangles = Vec::with_capacity(2 * n * n);
    let mut corners = Vec::with_capacity(2 * n * n);
    let mut maps = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            for tri in [[(i, j), (i + 1, j), (i + 1, j + 1)], [(i, j), (i + 1, j + 1), (i, j + 1)]] {
                let mut idx = [0; 3];
                let mut pos = [C64::new(0.0, 0.0); 3];
                let mut mm = [Mobius::identity(); 3];
                for c in 0..3 {
                    let (a, b) = tri[c];
                    idx[c] = id(a, b);
                    pos[c] = C64::new(a as f64 * h, b as f64 * h);
                    let shift = C64::new(if a == n { side } else { 0.0 }, if b == n { side } else { 0.0 });
                    mm[c] = Mobius::translation(shift);
                }
                triangles.push(idx);
                corners.push(pos);
                maps.push(mm);
            }
        }
    }
    let side_pairings = vec![
        SidePairing {
            from_side: 0,
            to_side: 2,
            map: Mobius::translation(C64::new(0.0, side)),
            chain: (0..=n).map(|i| id(i, 0)).collect(),
        },
        SidePairing {
            from_side: 3,
            to_side: 1,
            map: Mobius::translation(C64::new(side, 0.0)),
            chain: (0..=n).map(|j| id(0, j)).collect(),
        },
    ];
    let fiber = DiscreteFiber {
        kind: FiberKind::Torus { side, resolution },
        vertices,
        triangles,
        corners,
        corner_maps: maps,
        side_pairings,
        metric_density: Vec::new(),
        area_weights: Vec::new(),
        edges: Vec::new(),
        laplacian_scale: 1.0,
        pairing_defect: 0.0,
        holonomy_defect: 0.0,
    };
    fiber.finalize()
}

/// Exact eigendecomposition of the torus Laplacian, read off from the
/// stencil of node 0 (the assembly is translation invariant).
pub(super) fn periodic_spectrum(fiber: &DiscreteFiber, n: usize) -> Result<SpectralDecomposition> {
    let (k, m) = fiber.function_operator();
    let wrap = |d: i64| if d > (n as i64) / 2 { d - n as i64 } else { d };
    let stencil: Vec<(i64, i64, f64)> = k
        .row(0)
        .filter(|&(j, v)| j != 0 && v != 0.0)
        .map(|(j, v)| (wrap((j % n) as i64), wrap((j / n) as i64), -v))
        .collect();
    let w0 = m[0];
    if m.iter().any(|&w| (w - w0).abs() > 1e-12 * w0) {
        return Err(Error::Eigen("torus mass is not uniform".into()));
    }
    SpectralDecomposition::from_periodic_stencil(n, n, &stencil, w0)
}
