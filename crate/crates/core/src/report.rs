//! Structured records of inequality and identity checks.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assertion {
    /// Exact identities; a failure means a bug.
    Hard,
    /// Discretization-limited margins.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Checked,
    HypothesisNotSatisfied,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    /// Stable identifier of the inequality being checked.
    pub check_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub slack_used: f64,
    pub pass: bool,
    pub assertion: Assertion,
    pub status: Status,
    pub provenance: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl BoundReport {
    /// Builds a report for `lhs >= rhs`; `margin = lhs - rhs`.
    pub fn geq(name: &str, check_id: &str, lhs: f64, rhs: f64, slack: f64, assertion: Assertion) -> Self {
        Self::from_margin(name, check_id, lhs, rhs, lhs - rhs, slack, assertion)
    }

    /// Builds a report for `lhs <= rhs`; `margin = rhs - lhs`.
    pub fn leq(name: &str, check_id: &str, lhs: f64, rhs: f64, slack: f64, assertion: Assertion) -> Self {
        Self::from_margin(name, check_id, lhs, rhs, rhs - lhs, slack, assertion)
    }

    pub fn from_margin(
        name: &str,
        check_id: &str,
        lhs: f64,
        rhs: f64,
        margin: f64,
        slack: f64,
        assertion: Assertion,
    ) -> Self {
        let mut provenance = BTreeMap::new();
        provenance.insert("crate_version".to_string(), env!("CARGO_PKG_VERSION").to_string());
        BoundReport {
            name: name.to_string(),
            check_id: check_id.to_string(),
            lhs,
            rhs,
            margin,
            slack_used: slack,
            pass: margin >= -slack,
            assertion,
            status: Status::Checked,
            provenance,
            details: BTreeMap::new(),
        }
    }

    pub fn with_provenance(mut self, key: &str, value: impl ToString) -> Self {
        self.provenance.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    /// The invariant `pass <=> margin >= -slack_used`, and a checked status.
    pub fn is_consistent(&self) -> bool {
        let expected = self.status == Status::Checked && self.margin >= -self.slack_used;
        self.pass == expected && !self.provenance.is_empty()
    }
}

/// Stable FNV-1a hash of a float slice, used for provenance records.
pub fn hash_f64s(values: &[f64]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_matches_margin() {
        let r = BoundReport::geq("x", "id", 1.0, 1.0 + 1e-9, 1e-8, Assertion::Soft);
        assert!(r.pass && r.is_consistent());
        let r = BoundReport::leq("x", "id", 2.0, 1.0, 1e-8, Assertion::Hard);
        assert!(!r.pass && r.is_consistent());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(hash_f64s(&[1.0, 2.0]), hash_f64s(&[1.0, 2.0]));
        assert_ne!(hash_f64s(&[1.0, 2.0]), hash_f64s(&[2.0, 1.0]));
    }
}
