use serde::{Deserialize, Serialize};

use super::{schema_version, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::stats::DiagnosticsReport;

/// Why the new method is preferable: free text plus literature references.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rationale {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<String>,
}

impl Rationale {
    pub fn new(text: impl Into<String>) -> Self {
        Rationale { text: text.into(), citations: Vec::new() }
    }

    pub fn cite(mut self, citation: impl Into<String>) -> Self {
        self.citations.push(citation.into());
        self
    }
}

/// Residual-diagnostic p-values before and after (None where absent).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsDelta {
    pub shapiro_wilk_p: (Option<f64>, Option<f64>),
    pub durbin_watson_p: (Option<f64>, Option<f64>),
    pub breusch_pagan_p: (Option<f64>, Option<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReanalysisRecord {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub from: String,
    pub to: String,
    pub hypothesis_id: String,
    pub dataset_id: String,
    pub old_method: String,
    pub new_method: String,
    pub rationale: Rationale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics_delta: Option<DiagnosticsDelta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn violations(report: &DiagnosticsReport, alpha: f64) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(sw) = report.shapiro_wilk.filter(|t| t.p < alpha) {
        out.push(format!("residuals are not normal (Shapiro-Wilk p={:.3e})", sw.p));
    }
    if report.durbin_watson.p < alpha {
        out.push(format!(
            "residuals are autocorrelated (Durbin-Watson d={:.3}, p={:.3e})",
            report.durbin_watson.statistic, report.durbin_watson.p
        ));
    }
    if let Some(bp) = report.breusch_pagan.filter(|t| t.p < alpha) {
        out.push(format!("residuals are heteroscedastic (Breusch-Pagan p={:.3e})", bp.p));
    }
    out
}

/// Records the justification for applying a different method to the same
/// hypothesis and data.
pub fn record_reanalysis(old: &Evidence, new: &Evidence, rationale: Rationale, alpha: f64) -> Result<ReanalysisRecord> {
    if old.hypothesis_id != new.hypothesis_id {
        return Err(Error::NotReanalysis(format!(
            "hypothesis changed ({} -> {}); that is a revision",
            old.hypothesis_id, new.hypothesis_id
        )));
    }
    if old.dataset_id != new.dataset_id {
        return Err(Error::NotReanalysis(format!(
            "dataset changed ({} -> {}); that is a replication",
            old.dataset_id, new.dataset_id
        )));
    }
    if old.method_id == new.method_id {
        return Err(Error::NotReanalysis(format!("both use method {}", old.method_id)));
    }
    Ok(record_reanalysis_unchecked(old, new, rationale, alpha))
}

pub(crate) fn record_reanalysis_unchecked(
    old: &Evidence,
    new: &Evidence,
    rationale: Rationale,
    alpha: f64,
) -> ReanalysisRecord {
    let before = old.conclusion.diagnostics();
    let after = new.conclusion.diagnostics();
    let mut notes = Vec::new();
    if let Some(report) = before {
        for v in violations(report, alpha) {
            notes.push(format!("{} violates the iid assumption: {v}", old.id));
        }
    }
    let diagnostics_delta = match (before, after) {
        (None, None) => None,
        (a, b) => Some(DiagnosticsDelta {
            shapiro_wilk_p: (a.and_then(|r| r.shapiro_wilk).map(|t| t.p), b.and_then(|r| r.shapiro_wilk).map(|t| t.p)),
            durbin_watson_p: (a.map(|r| r.durbin_watson.p), b.map(|r| r.durbin_watson.p)),
            breusch_pagan_p: (
                a.and_then(|r| r.breusch_pagan).map(|t| t.p),
                b.and_then(|r| r.breusch_pagan).map(|t| t.p),
            ),
        }),
    };
    if rationale.text.is_empty() && rationale.citations.is_empty() && notes.is_empty() {
        notes.push("no rationale given".into());
    }
    ReanalysisRecord {
        schema_version: SCHEMA_VERSION,
        from: old.id.clone(),
        to: new.id.clone(),
        hypothesis_id: new.hypothesis_id.clone(),
        dataset_id: new.dataset_id.clone(),
        old_method: old.method_id.clone(),
        new_method: new.method_id.clone(),
        rationale,
        diagnostics_delta,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::tests::ev;
    use crate::stats::{CoefficientsConclusion, Conclusion, DiagnosticsReport, FitQuality, TestResult};

    fn with_diagnostics(mut e: Evidence, sw: f64, dw: f64) -> Evidence {
        e.conclusion = Conclusion::Coefficients(CoefficientsConclusion {
            model: "linear_model".into(),
            treatment: "x".into(),
            ci_level: 0.95,
            coefficients: vec![],
            variance_components: vec![],
            residual_variance: 1.0,
            fit: FitQuality::new(10, 0.0, 2, 0.0),
            diagnostics: Some(DiagnosticsReport {
                shapiro_wilk: Some(TestResult { statistic: 0.9, p: sw }),
                durbin_watson: TestResult { statistic: 2.0, p: dw },
                breusch_pagan: None,
                notices: vec![],
            }),
        });
        e
    }

    #[test]
    fn only_method_changes_qualify() {
        let old = ev("e1", "h1", "d1", "m1");
        for new in [ev("e2", "h2", "d1", "m2"), ev("e2", "h1", "d2", "m2"), ev("e2", "h1", "d1", "m1")] {
            let err = record_reanalysis(&old, &new, Rationale::new("r"), 0.05).unwrap_err();
            assert!(matches!(err, Error::NotReanalysis(_)));
        }
        let r = record_reanalysis(&old, &ev("e2", "h1", "d1", "m2"), Rationale::new("r").cite("x"), 0.05).unwrap();
        assert_eq!((r.old_method.as_str(), r.new_method.as_str()), ("m1", "m2"));
        assert_eq!(r.rationale.citations, vec!["x".to_string()]);
        assert!(r.notes.is_empty() && r.diagnostics_delta.is_none());
    }

    #[test]
    fn violations_become_notes() {
        let old = with_diagnostics(ev("e1", "h1", "d1", "m1"), 1e-4, 0.5);
        let new = with_diagnostics(ev("e2", "h1", "d1", "m2"), 0.4, 0.5);
        let r = record_reanalysis(&old, &new, Rationale::default(), 0.05).unwrap();
        assert_eq!(r.notes.len(), 1);
        assert!(r.notes[0].contains("not normal"), "{:?}", r.notes);
        let delta = r.diagnostics_delta.unwrap();
        assert_eq!(delta.shapiro_wilk_p, (Some(1e-4), Some(0.4)));
    }

    #[test]
    fn missing_rationale_flagged() {
        let r = record_reanalysis(&ev("e1", "h1", "d1", "m1"), &ev("e2", "h1", "d1", "m2"), Rationale::default(), 0.05)
            .unwrap();
        assert_eq!(r.notes, vec!["no rationale given".to_string()]);
    }
}
