use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1";

/// Verdict of one criterion. `margin = lhs - rhs` and `pass` holds iff
/// `margin >= -tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionReport {
    pub schema_version: String,
    pub criterion: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub state_spec: Option<Value>,
    pub observables_spec: Option<String>,
    pub topology: Option<Value>,
    pub details: Value,
}

impl CriterionReport {
    pub fn new(criterion: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            criterion: criterion.into(),
            lhs,
            rhs,
            margin,
            pass: margin >= -tolerance,
            tolerance,
            state_spec: None,
            observables_spec: None,
            topology: None,
            details: Value::Object(Default::default()),
        }
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        if let Value::Object(map) = &mut self.details {
            map.insert(key.to_string(), value.into());
        }
        self
    }

    /// True iff the invariants between margin, pass and tolerance hold.
    pub fn is_consistent(&self) -> bool {
        self.margin == self.lhs - self.rhs && self.pass == (self.margin >= -self.tolerance)
    }
}
