//! Multi-index bookkeeping for forms and polyvectors with strictly
//! increasing index blocks (bitmask representation).

/// All k-subsets of {0..n} as bitmasks, in lexicographic order of their
/// increasing index lists.
pub fn subsets(n: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, k: usize, mask: u32, out: &mut Vec<u32>) {
        if k == 0 {
            out.push(mask);
            return;
        }
        for i in start..n {
            rec(i + 1, n, k - 1, mask | (1 << i), out);
        }
    }
    rec(0, n, k, 0, &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Position of `mask` among the k-subsets of {0..n}.
pub fn index_of(n: usize, mask: u32) -> usize {
    let k = mask.count_ones() as usize;
    subsets(n, k).iter().position(|&m| m == mask).expect("mask out of range")
}

fn below(mask: u32, i: usize) -> u32 {
    (mask & ((1u32 << i) - 1)).count_ones()
}

/// e_i wedge e_mask = sign * e_{mask | i}; None if i is already present.
pub fn insert(mask: u32, i: usize) -> Option<(u32, f64)> {
    if mask & (1 << i) != 0 {
        return None;
    }
    let s = if below(mask, i) % 2 == 0 { 1.0 } else { -1.0 };
    Some((mask | (1 << i), s))
}

/// Interior product of e_mask with the dual of e_i.
pub fn remove(mask: u32, i: usize) -> Option<(u32, f64)> {
    if mask & (1 << i) == 0 {
        return None;
    }
    let s = if below(mask, i) % 2 == 0 { 1.0 } else { -1.0 };
    Some((mask & !(1 << i), s))
}

/// Component layout of a (p, q) block: index = hi * C(n, q) + lo.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub upper: Vec<u32>,
    pub lower: Vec<u32>,
}

impl Layout {
    pub fn new(n: usize, p: usize, q: usize) -> Self {
        Layout { n, p, q, upper: subsets(n, p), lower: subsets(n, q) }
    }

    pub fn len(&self) -> usize {
        self.upper.len() * self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pos(&self, hi: u32, lo: u32) -> usize {
        let a = self.upper.iter().position(|&m| m == hi).expect("upper block");
        let b = self.lower.iter().position(|&m| m == lo).expect("lower block");
        a * self.lower.len() + b
    }

    pub fn parts(&self, c: usize) -> (u32, u32) {
        (self.upper[c / self.lower.len()], self.lower[c % self.lower.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_counts() {
        for n in 1..6 {
            for k in 0..=n {
                assert_eq!(subsets(n, k).len(), binomial(n, k));
            }
        }
        assert_eq!(subsets(3, 2), vec![0b011, 0b101, 0b110]);
    }

    #[test]
    fn wedge_is_antisymmetric() {
        let (m1, s1) = insert(0, 1).unwrap();
        let (m12, s12) = insert(m1, 0).unwrap();
        let (m0, s0) = insert(0, 0).unwrap();
        let (m01, s01) = insert(m0, 1).unwrap();
        assert_eq!(m12, m01);
        assert_eq!(s1 * s12, -(s0 * s01));
        assert!(insert(0b10, 1).is_none());
    }

    #[test]
    fn interior_undoes_wedge() {
        for mask in subsets(4, 2) {
            for i in 0..4 {
                if let Some((m, s)) = insert(mask, i) {
                    let (back, t) = remove(m, i).unwrap();
                    assert_eq!(back, mask);
                    assert_eq!(s * t, 1.0);
                }
            }
        }
    }
}
