use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::num::Num;

/// Outcome of one verification routine.
///
/// Every individual check is a residual compared against a tolerance
/// (`residual <= tolerance` passes); the report keeps the check with the
/// largest `residual / tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub passed: bool,
    #[serde(with = "crate::num")]
    pub worst_residual: f64,
    pub worst_witness: BTreeMap<String, Num>,
    #[serde(with = "crate::num")]
    pub tolerance_used: f64,
    pub flags: Vec<String>,
    pub checks: u64,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>) -> Self {
        VerificationReport {
            name: name.into(),
            passed: true,
            worst_residual: f64::NEG_INFINITY,
            worst_witness: BTreeMap::new(),
            tolerance_used: 0.0,
            flags: Vec::new(),
            checks: 0,
        }
    }

    fn ratio(residual: f64, tol: f64) -> f64 {
        if residual.is_nan() {
            f64::INFINITY
        } else if tol > 0.0 {
            residual / tol
        } else if residual <= 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    }

    fn worst_ratio(&self) -> f64 {
        if self.checks == 0 {
            f64::NEG_INFINITY
        } else {
            Self::ratio(self.worst_residual, self.tolerance_used)
        }
    }

    /// Records one check; `witness` describes the input.
    pub fn check(&mut self, residual: f64, tol: f64, witness: &[(&str, f64)]) -> bool {
        let ok = residual <= tol;
        if self.checks == 0 || Self::ratio(residual, tol) > self.worst_ratio() {
            self.worst_residual = residual;
            self.tolerance_used = tol;
            self.worst_witness = witness.iter().map(|(k, v)| (k.to_string(), Num(*v))).collect();
        }
        self.checks += 1;
        self.passed &= ok;
        ok
    }

    /// Records `value >= bound - tol`.
    pub fn check_at_least(&mut self, value: f64, bound: f64, tol: f64, witness: &[(&str, f64)]) -> bool {
        self.check(bound - value, tol, witness)
    }

    /// Records `|value - target| <= tol`.
    pub fn check_close(&mut self, value: f64, target: f64, tol: f64, witness: &[(&str, f64)]) -> bool {
        let residual = if value == target { 0.0 } else { (value - target).abs() };
        self.check(residual, tol, witness)
    }

    pub fn flag(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if !self.flags.contains(&msg) {
            self.flags.push(msg);
        }
    }

    /// Marks the report failed with a reason.
    pub fn fail(&mut self, msg: impl Into<String>) {
        self.passed = false;
        self.flag(msg);
    }

    /// Combines two reports of the same routine.
    pub fn merge(&mut self, other: VerificationReport) {
        if other.checks > 0 && (self.checks == 0 || other.worst_ratio() > self.worst_ratio()) {
            self.worst_residual = other.worst_residual;
            self.tolerance_used = other.tolerance_used;
            self.worst_witness = other.worst_witness;
        }
        self.checks += other.checks;
        self.passed &= other.passed;
        for f in other.flags {
            self.flag(f);
        }
    }

    pub fn merged(name: impl Into<String>, reports: impl IntoIterator<Item = VerificationReport>) -> Self {
        let mut out = VerificationReport::new(name);
        for r in reports {
            out.merge(r);
        }
        out
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {}  checks={} worst_residual={:.6e} tol={:.6e}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.checks,
            self.worst_residual,
            self.tolerance_used
        )?;
        if !self.worst_witness.is_empty() {
            let w: Vec<String> = self.worst_witness.iter().map(|(k, v)| format!("{k}={:.6e}", v.0)).collect();
            write!(f, "  at {}", w.join(" "))?;
        }
        for flag in &self.flags {
            write!(f, "\n    flag: {flag}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_worst_ratio() {
        let mut r = VerificationReport::new("x");
        r.check(1e-12, 1e-10, &[("a", 1.0)]);
        r.check(5e-7, 1e-6, &[("a", 2.0)]);
        r.check(-1.0, 1e-9, &[("a", 3.0)]);
        assert!(r.passed);
        assert_eq!(r.worst_witness["a"].0, 2.0);
        assert!(r.worst_residual <= r.tolerance_used);
        let mut s = VerificationReport::new("y");
        s.check(2.0, 1.0, &[("b", 1.0)]);
        r.merge(s);
        assert!(!r.passed);
        assert_eq!(r.worst_residual, 2.0);
        assert_eq!(r.checks, 4);
    }
}
