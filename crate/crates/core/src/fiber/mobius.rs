use crate::linalg::C64;
use serde::{Deserialize, Serialize};

/// z -> (a z + b) / (c z + d), normalized to unit determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mobius {
    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Mobius { a: one, b: zero, c: zero, d: one }
    }

    pub fn translation(t: C64) -> Self {
        Mobius { b: t, ..Self::identity() }
    }

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        let s = (a * d - b * c).sqrt();
        Mobius { a: a / s, b: b / s, c: c / s, d: d / s }
    }

    /// The unique map sending z1, z2, z3 to w1, w2, w3.
    pub fn from_three_points(z: [C64; 3], w: [C64; 3]) -> Self {
        let to_std = |p: [C64; 3]| Mobius::new(p[2] - p[1], -p[0] * (p[2] - p[1]), p[2] - p[0], -p[1] * (p[2] - p[0]));
        to_std(w).inverse().compose(&to_std(z))
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        let den = self.c * z + self.d;
        C64::new(1.0, 0.0) / (den * den)
    }

    pub fn inverse(&self) -> Self {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// self after other.
    pub fn compose(&self, other: &Mobius) -> Self {
        Mobius::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )
    }

    /// Distance to `other` as projective maps (sign ambiguity removed).
    pub fn distance(&self, other: &Mobius) -> f64 {
        let d1 = (self.a - other.a).norm() + (self.b - other.b).norm() + (self.c - other.c).norm() + (self.d - other.d).norm();
        let d2 = (self.a + other.a).norm() + (self.b + other.b).norm() + (self.c + other.c).norm() + (self.d + other.d).norm();
        d1.min(d2)
    }
}

/// Disk automorphism T_p(z) = (z - p) / (1 - conj(p) z).
pub fn disk_translate(p: C64) -> Mobius {
    let one = C64::new(1.0, 0.0);
    Mobius::new(one, -p, -p.conj(), one)
}

/// Hyperbolic distance in the Poincare disk (curvature -1).
pub fn hyperbolic_distance(z: C64, w: C64) -> f64 {
    let q = ((z - w) / (C64::new(1.0, 0.0) - w.conj() * z)).norm();
    2.0 * q.min(1.0 - 1e-16).atanh()
}

/// Point at arclength fraction t along the geodesic from p to q.
pub fn geodesic_interpolate(p: C64, q: C64, t: f64) -> C64 {
    let tp = disk_translate(p);
    let w = tp.apply(q);
    let r = w.norm();
    if r == 0.0 {
        return p;
    }
    let dist = 2.0 * r.atanh();
    let u = w / r * (0.5 * t * dist).tanh();
    tp.inverse().apply(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_map() {
        let z = [C64::new(0.1, 0.2), C64::new(-0.3, 0.4), C64::new(0.5, -0.1)];
        let w = [C64::new(0.7, 0.0), C64::new(0.0, 0.6), C64::new(-0.2, -0.2)];
        let m = Mobius::from_three_points(z, w);
        for i in 0..3 {
            assert!((m.apply(z[i]) - w[i]).norm() < 1e-12);
        }
        let id = m.compose(&m.inverse());
        assert!(id.distance(&Mobius::identity()) < 1e-12);
    }

    #[test]
    fn geodesic_midpoint_is_equidistant() {
        let p = C64::new(0.3, -0.2);
        let q = C64::new(-0.5, 0.6);
        let m = geodesic_interpolate(p, q, 0.5);
        let d = hyperbolic_distance(p, q);
        assert!((hyperbolic_distance(p, m) - 0.5 * d).abs() < 1e-12);
        assert!((hyperbolic_distance(m, q) - 0.5 * d).abs() < 1e-12);
    }
}
