//! Heat-kernel lower bound Q_n(t, r), the resolvent lower bound
//! P_n(r) = int_0^inf e^{-t} Q_n(t, r) dt, and its Bessel closed form.

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special::bessel_k;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use crate::special::bessel_k as modified_bessel_k;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    /// Adaptive Gauss-Kronrod 7/15 in u = log t.
    GaussKronrodLog,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub scheme: QuadratureScheme,
    pub panels: usize,
    /// Upper truncation point; chosen from the tail bound when `None`.
    pub t_max: Option<f64>,
    pub abs_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            scheme: QuadratureScheme::GaussKronrodLog,
            panels: 32,
            t_max: None,
            abs_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: u32,
    pub r: f64,
    pub quadrature: QuadratureConfig,
}

impl BoundParams {
    pub fn new(n: u32, r: f64) -> Self {
        BoundParams {
            n,
            r,
            quadrature: QuadratureConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("dimension n must be >= 1".into()));
        }
        if !(self.r >= 0.0) || !self.r.is_finite() {
            return Err(Error::Domain(format!("distance must be finite and >= 0, got {}", self.r)));
        }
        if !(self.quadrature.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResolventValue {
    /// `f64::INFINITY` when the integral diverges (r = 0).
    pub value: f64,
    /// Quadrature error estimate plus truncation tail bound.
    pub error_bound: f64,
    pub tail_bound: f64,
    pub t_max: f64,
}

impl ResolventValue {
    pub fn is_unbounded(&self) -> bool {
        self.value.is_infinite()
    }
}

/// Q_n(t, r) = (2 pi t)^{-n} exp(-r^2/t) exp(-(2n-1) t / 4).
pub fn heat_kernel_lower_bound(n: u32, t: f64, r: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    if n == 0 || !(r >= 0.0) {
        return Err(Error::Domain(format!("invalid (n, r) = ({n}, {r})")));
    }
    let nf = n as f64;
    Ok((2.0 * PI * t).powf(-nf) * (-r * r / t).exp() * (-(2.0 * nf - 1.0) * t / 4.0).exp())
}

fn decay_rate(n: u32) -> f64 {
    1.0 + (2.0 * n as f64 - 1.0) / 4.0
}

/// Bound on int_T^inf e^{-t} Q_n(t, r) dt, dropping the Gaussian factor.
pub fn tail_bound(n: u32, t_max: f64) -> f64 {
    let b = decay_rate(n);
    (-b * t_max).exp() * (2.0 * PI * t_max).powf(-(n as f64)) / b
}

fn choose_t_max(n: u32, target: f64) -> f64 {
    let mut t = 1.0;
    while tail_bound(n, t) > target {
        t *= 1.25;
    }
    t
}

/// P_n(r) by quadrature. Diverges for r = 0, where the sentinel value
/// `f64::INFINITY` is returned.
pub fn resolvent_lower_bound(params: &BoundParams) -> Result<ResolventValue> {
    params.validate()?;
    let n = params.n;
    let r = params.r;
    let cfg = params.quadrature;
    if r == 0.0 {
        return Ok(ResolventValue {
            value: f64::INFINITY,
            error_bound: 0.0,
            tail_bound: 0.0,
            t_max: f64::INFINITY,
        });
    }
    let t_max = cfg.t_max.unwrap_or_else(|| choose_t_max(n, 0.01 * cfg.abs_tol));
    let tail = tail_bound(n, t_max);
    let nf = n as f64;
    let b = decay_rate(n);
    let log_2pi = (2.0 * PI).ln();
    let r2 = r * r;
    // In u = log t the integrand is t * e^{-t} Q_n(t, r).
    let f = |u: f64| (u - r2 * (-u).exp() - b * u.exp() - nf * (log_2pi + u)).exp();
    // Below u_lo the factor exp(-r^2/t) is smaller than e^{-800}.
    let u_lo = (r2 / 800.0).ln().min(t_max.ln() - 1.0);
    let q = match cfg.scheme {
        QuadratureScheme::GaussKronrodLog => integrate(f, u_lo, t_max.ln(), cfg.panels, 0.5 * cfg.abs_tol)?,
    };
    let error_bound = q.error + tail;
    if error_bound > cfg.abs_tol {
        return Err(Error::Quadrature {
            requested: cfg.abs_tol,
            achieved: error_bound,
        });
    }
    Ok(ResolventValue {
        value: q.value,
        error_bound,
        tail_bound: tail,
        t_max,
    })
}

/// Convenience wrapper with default quadrature settings.
pub fn p_n(n: u32, r: f64) -> Result<f64> {
    Ok(resolvent_lower_bound(&BoundParams::new(n, r))?.value)
}

/// (2 pi)^{-n} (2n+3)^{(n-1)/2} / 2^{n-2} r^{-(n-1)} K_{n-1}(sqrt(2n+3) r).
pub fn bessel_estimate(n: u32, r: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("dimension n must be >= 1".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("bessel estimate requires r > 0, got {r}")));
    }
    let nf = n as f64;
    let c = 2.0 * nf + 3.0;
    let k = bessel_k(n - 1, c.sqrt() * r)?;
    Ok((2.0 * PI).powf(-nf) * c.powf(0.5 * (nf - 1.0)) / 2f64.powf(nf - 2.0) * r.powf(-(nf - 1.0)) * k)
}
