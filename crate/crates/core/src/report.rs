use serde::{Deserialize, Serialize};

/// A checked inequality or identity. `lhs` and `rhs` are the compared quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Assertion {
    /// `lhs <= rhs` up to relative slack `rel` (and absolute slack `rel * 1e-300`).
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, rel: f64) -> Self {
        let slack = rel * lhs.abs().max(rhs.abs()) + 1e-300;
        Self {
            name: name.into(),
            passed: lhs.is_finite() && rhs.is_finite() && lhs <= rhs + slack,
            lhs,
            rhs,
            detail: String::new(),
        }
    }

    /// `|lhs - rhs| <= tol`.
    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: (lhs - rhs).abs() <= tol,
            lhs,
            rhs,
            detail: String::new(),
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            lhs: f64::NAN,
            rhs: f64::NAN,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

pub fn all_passed(list: &[Assertion]) -> bool {
    list.iter().all(|a| a.passed)
}

pub fn failures(list: &[Assertion]) -> Vec<&Assertion> {
    list.iter().filter(|a| !a.passed).collect()
}
