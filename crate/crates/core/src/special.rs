//! Modified Bessel functions of the second kind for integer order.
//!
//! K_0 and K_1 come from the power series for x <= 2 and from Steed's
//! continued fraction (Temme's CF2) above; higher orders use the upward
//! recurrence, which is stable for K.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;

pub fn bessel_k(order: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K_{order}(x) requires finite x > 0, got {x}")));
    }
    let (k0, k1) = k01(x);
    if order == 0 {
        return Ok(k0);
    }
    let (mut km, mut k) = (k0, k1);
    for nu in 1..order {
        let kp = km + 2.0 * nu as f64 / x * k;
        km = k;
        k = kp;
    }
    Ok(k)
}

fn k01(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        k01_series(x)
    } else {
        k01_continued_fraction(x)
    }
}

fn k01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();

    // I_0, I_1 and the digamma-weighted sums share the same term recurrences.
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut t0 = 1.0; // y^k / (k!)^2
    let mut t1 = 1.0; // y^k / (k! (k+1)!)
    let mut harmonic = 0.0; // H_k
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            t0 *= y / (kf * kf);
            t1 *= y / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        let psi1 = -EULER_GAMMA + harmonic;
        let psi2 = psi1 + 1.0 / (kf + 1.0);
        i0 += t0;
        i1 += t1;
        s0 += t0 * psi1;
        s1 += t1 * (psi1 + psi2);
        if t0 < 1e-18 * i0 && k > 2 {
            break;
        }
    }
    i1 *= 0.5 * x;
    let k0 = -ln_half * i0 + s0;
    let k1 = 1.0 / x + ln_half * i1 - 0.25 * x * s1;
    (k0, k1)
}

fn k01_continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Trapezoid rule on K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt; the
    // integrand is analytic and decays double-exponentially.
    fn k_integral(n: u32, x: f64) -> f64 {
        let h: f64 = 0.01;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let term = (-x * t.cosh() + n as f64 * t).exp() * 0.5 * (1.0 + (-2.0 * n as f64 * t).exp());
            sum += term;
            if term < 1e-300 || t > 50.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    #[test]
    fn k0_at_one() {
        let v = bessel_k(0, 1.0).unwrap();
        assert!((v - 0.421_024_438_240_708_34).abs() < 1e-15);
    }

    #[test]
    fn matches_integral_representation() {
        for &x in &[0.01, 0.1, 0.5, 1.0, 1.9, 2.0, 2.1, 3.0, 7.5, 20.0, 60.0] {
            for n in 0..5 {
                let a = bessel_k(n, x).unwrap();
                let b = k_integral(n, x);
                assert!(((a - b) / b).abs() < 1e-12, "n={n} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_argument_ratio() {
        let x: f64 = 50.0;
        let ratio = bessel_k(0, x).unwrap() * x.exp() * (2.0 * x / PI).sqrt();
        assert!(ratio > 0.9 && ratio < 1.0);
    }

    #[test]
    fn k1_exceeds_k0() {
        for i in 1..200 {
            let x = 0.05 * i as f64;
            assert!(bessel_k(1, x).unwrap() > bessel_k(0, x).unwrap());
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(bessel_k(0, 0.0).is_err());
        assert!(bessel_k(2, -1.0).is_err());
    }
}
