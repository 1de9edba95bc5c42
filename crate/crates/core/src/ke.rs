//! Fiberwise Kahler-Einstein equation on the octagon surface.
//!
//! With omega0 = omega_hyp + eps i ddbar h and Omega0 = e^{eps h} dA_hyp the
//! equation (omega0 + i ddbar u) = e^u Omega0 reduces to
//! 1 - box0 u = e^{u + F}, F = log(Omega0 / omega0). We use the convention
//! i ddbar u = -(box0 u) omega0, so box0 is non-negative.
//!
//! Discretely box0 = (M0)^{-1} (K / 2) where K is the cotangent stiffness and
//! M0 the lumped omega0 area; the solver works with the weak residual
//! M0 (1 - e^{u+F}) - K u / 2.

use crate::error::{Error, Result};
use crate::fiber::{geodesic_interpolate, hyperbolic_distance, octagon_corner_radius, DiscreteFiber};
use crate::linalg::{SparseMatrix, C64};
use crate::report::{Assertion, BoundReport};
use serde::{Deserialize, Serialize};

pub const MAX_NEWTON_STEPS: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackgroundData {
    /// Density of Omega0 against dx dy in the representative chart.
    pub omega_vol: Vec<f64>,
    /// Density of omega0 against dx dy (area convention 2 g dx dy).
    pub omega0_density: Vec<f64>,
    pub f: Vec<f64>,
    /// Lumped omega0 area of each vertex.
    pub mass0: Vec<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeSolution {
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Volume-weighted RMS residual before each step and after the last.
    pub residual_history: Vec<f64>,
}

impl KeSolution {
    pub fn residual(&self) -> f64 {
        *self.residual_history.last().unwrap()
    }
}

fn half_stiffness(fiber: &DiscreteFiber) -> SparseMatrix<f64> {
    let (k, _) = fiber.function_operator();
    k
}

/// Hyperbolic inradius of the octagon (center to side midpoint).
pub fn octagon_inradius() -> f64 {
    let r = octagon_corner_radius();
    let a = C64::from_polar(r, std::f64::consts::PI / 8.0);
    let b = C64::from_polar(r, 3.0 * std::f64::consts::PI / 8.0);
    hyperbolic_distance(C64::new(0.0, 0.0), geodesic_interpolate(a, b, 0.5))
}

/// Smooth bump exp(1 - 1/(1 - (d/R)^2)) in the hyperbolic distance d from the
/// center, R = 0.95 * inradius. It vanishes near the octagon sides, so it is a
/// smooth function on the closed surface.
pub fn default_perturbation(fiber: &DiscreteFiber) -> Vec<f64> {
    let radius = 0.95 * octagon_inradius();
    fiber
        .vertices
        .iter()
        .map(|&z| {
            let s = hyperbolic_distance(C64::new(0.0, 0.0), z) / radius;
            if s < 1.0 {
                (1.0 - 1.0 / (1.0 - s * s)).exp()
            } else {
                0.0
            }
        })
        .collect()
}

pub fn make_background(fiber: &DiscreteFiber, h: &[f64], epsilon: f64) -> Result<BackgroundData> {
    if !fiber.is_hyperbolic() {
        return Err(Error::Domain("the Kahler-Einstein solver needs the hyperbolic fiber".into()));
    }
    if h.len() != fiber.num_vertices() {
        return Err(Error::Mismatch(format!("perturbation has {} values, fiber {}", h.len(), fiber.num_vertices())));
    }
    if !epsilon.is_finite() || h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("perturbation must be finite".into()));
    }
    let box_h = fiber.apply_laplacian(h);
    let mut omega_vol = Vec::with_capacity(h.len());
    let mut omega0_density = Vec::with_capacity(h.len());
    let mut f = Vec::with_capacity(h.len());
    let mut mass0 = Vec::with_capacity(h.len());
    for v in 0..h.len() {
        let rel = 1.0 - epsilon * box_h[v];
        if !(rel > 0.0) {
            return Err(Error::Positivity { vertex: v, value: rel * fiber.metric_density[v] });
        }
        let rho = fiber.metric_density[v];
        omega_vol.push(rho * (epsilon * h[v]).exp());
        omega0_density.push(rho * rel);
        f.push(epsilon * h[v] - rel.ln());
        mass0.push(fiber.area_weights[v] * rel);
    }
    Ok(BackgroundData { omega_vol, omega0_density, f, mass0, epsilon })
}

/// box0 u at every vertex.
pub fn box0_apply(fiber: &DiscreteFiber, bg: &BackgroundData, u: &[f64]) -> Vec<f64> {
    let ku = half_stiffness(fiber).matvec(u);
    ku.iter().zip(&bg.mass0).map(|(a, m)| a / m).collect()
}

fn weak_residual(k: &SparseMatrix<f64>, bg: &BackgroundData, u: &[f64]) -> Vec<f64> {
    let ku = k.matvec(u);
    (0..u.len()).map(|v| bg.mass0[v] * (1.0 - (u[v] + bg.f[v]).exp()) - ku[v]).collect()
}

/// Volume-weighted RMS of the strong residual 1 - box0 u - e^{u+F}.
fn rms(bg: &BackgroundData, r: &[f64]) -> f64 {
    let vol: f64 = bg.mass0.iter().sum();
    let s: f64 = r.iter().zip(&bg.mass0).map(|(x, m)| x * x / m).sum();
    (s / vol).sqrt()
}

pub fn solve_ke(fiber: &DiscreteFiber, bg: &BackgroundData, tol: f64) -> Result<KeSolution> {
    solve_ke_from(fiber, bg, tol, &vec![0.0; fiber.num_vertices()])
}

pub fn solve_ke_from(fiber: &DiscreteFiber, bg: &BackgroundData, tol: f64, u0: &[f64]) -> Result<KeSolution> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let n = fiber.num_vertices();
    if bg.f.len() != n || u0.len() != n {
        return Err(Error::Mismatch("background, initial guess and fiber sizes differ".into()));
    }
    let k = half_stiffness(fiber);
    let mut u = u0.to_vec();
    let mut r = weak_residual(&k, bg, &u);
    let mut res = rms(bg, &r);
    let mut history = vec![res];
    let mut iterations = 0;
    while res >= tol {
        if iterations == MAX_NEWTON_STEPS {
            return Err(Error::Newton { iterations, history });
        }
        let jac: Vec<f64> = (0..n).map(|v| bg.mass0[v] * (u[v] + bg.f[v]).exp()).collect();
        let delta = k.shifted_cholesky(&jac, 1.0)?.solve(&r);
        let mut alpha = 1.0;
        let (next, next_r, next_res) = loop {
            let cand: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect();
            let cr = weak_residual(&k, bg, &cand);
            let cres = rms(bg, &cr);
            if cres.is_finite() && cres < (1.0 - 1e-4 * alpha) * res {
                break (cand, cr, cres);
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                // Round-off floor: no decrease is possible any more.
                return Err(Error::Newton { iterations, history });
            }
        };
        u = next;
        r = next_r;
        res = next_res;
        history.push(res);
        iterations += 1;
    }
    Ok(KeSolution { u, iterations, residual_history: history })
}

/// Checks u + F <= -box0 u pointwise and sup u <= sup(-F). The reported
/// margin is the smaller of the two; details carry both.
pub fn check_c0_estimate(fiber: &DiscreteFiber, bg: &BackgroundData, u: &[f64]) -> BoundReport {
    let bu = box0_apply(fiber, bg, u);
    let pointwise = (0..u.len()).map(|v| -bu[v] - (u[v] + bg.f[v])).fold(f64::INFINITY, f64::min);
    let sup_u = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sup_neg_f = bg.f.iter().map(|x| -x).fold(f64::NEG_INFINITY, f64::max);
    let sup_margin = sup_neg_f - sup_u;
    BoundReport::from_margin("C0 estimate", "ke-c0-sup-bound", sup_u, sup_neg_f, pointwise.min(sup_margin), 1e-8, Assertion::Soft)
        .with_provenance("epsilon", bg.epsilon)
        .with_provenance("vertices", u.len())
        .with_detail("pointwise_margin", pointwise)
        .with_detail("sup_margin", sup_margin)
}
