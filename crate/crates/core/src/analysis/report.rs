//! Serializable certification summaries.

use serde::{Deserialize, Serialize};

use super::recurrence::RecurrenceEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// One certified property of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub check: String,
    pub scenario: String,
    /// The measured quantity compared against `tolerance`.
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<RecurrenceEvent>>,
}

impl CertificationReport {
    pub fn new(
        check: &str,
        scenario: &str,
        max_residual: f64,
        tolerance: f64,
        pass: bool,
        dt: f64,
        horizon: f64,
    ) -> Self {
        Self {
            check: check.into(),
            scenario: scenario.into(),
            max_residual,
            tolerance,
            verdict: Verdict::from_pass(pass),
            dt,
            horizon,
            detail: None,
            events: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn with_events(mut self, events: Vec<RecurrenceEvent>) -> Self {
        self.events = Some(events);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names() {
        let r = CertificationReport::new("recurrence", "fig4_rd", 1e-4, 1e-3, true, 0.01, 500.0)
            .with_events(vec![RecurrenceEvent {
                t: 14.51,
                distance: 2.8e-4,
            }]);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in [
            "check",
            "scenario",
            "max_residual",
            "tolerance",
            "verdict",
            "dt",
            "T",
            "events",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["verdict"], "pass");
        let back: CertificationReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
