//! Revision verdicts: precision (predictive comparison) and de-confounding
//! (testable implications plus ACE shift). The two purposes never share a
//! criterion.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{schema_version, SCHEMA_VERSION};
use crate::dag::{diff_dags, testable_implications, Family, HypothesisDag, IndependenceClaim, ModelFormula, Role};
use crate::data::DatasetTable;
use crate::error::{Error, Result};
use crate::stats::dist::norm_sf;
use crate::stats::linear::ols;
use crate::stats::{fit_linear_model, loo_exact, Conclusion, FitQuality, Interval, MethodKind, MethodSpec};

/// Winner label when neither hypothesis is better.
pub const TIE: &str = "tie";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevisionPurpose {
    Precision,
    Deconfound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Aic,
    Loo,
    ImplicationAce,
}

impl Criterion {
    pub fn matches(self, purpose: RevisionPurpose) -> bool {
        match purpose {
            RevisionPurpose::Precision => matches!(self, Criterion::Aic | Criterion::Loo),
            RevisionPurpose::Deconfound => self == Criterion::ImplicationAce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimSource {
    /// Implied by the old hypothesis only.
    Old,
    /// Implied by the new hypothesis only.
    New,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationResult {
    pub claim: IndependenceClaim,
    pub implied_by: ClaimSource,
    pub partial_correlation: f64,
    pub p: f64,
    /// The data do not reject the claimed independence.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AceShift {
    pub estimate_old: f64,
    pub estimate_new: f64,
    pub ci_old: Interval,
    pub ci_new: Interval,
    pub shifted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionVerdict {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub purpose: RevisionPurpose,
    pub old_hypothesis: String,
    pub new_hypothesis: String,
    /// Hypothesis id, or [`TIE`].
    pub winner: String,
    pub criterion: Criterion,
    /// new − old: AIC, elpd, or ACE-midpoint difference by criterion.
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub implication_results: Vec<ImplicationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ace_shift: Option<AceShift>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RevisionVerdict {
    pub fn is_tie(&self) -> bool {
        self.winner == TIE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionConfig {
    pub alpha: f64,
    /// |ΔAIC|, rounded to whole points, at or below this is a tie ("about 2").
    pub aic_threshold: f64,
    /// |Δelpd| at or below this is a tie.
    pub elpd_threshold: f64,
    /// ACE shifted when the midpoint difference exceeds this fraction of
    /// the wider interval's half-width.
    pub shift_factor: f64,
}

impl Default for RevisionConfig {
    fn default() -> Self {
        RevisionConfig { alpha: 0.05, aic_threshold: 2.0, elpd_threshold: 1.0, shift_factor: 0.5 }
    }
}

/// One side of a revision: hypothesis, its conclusion and (optionally) the
/// method that produced it.
#[derive(Debug, Clone, Copy)]
pub struct RevisionInput<'a> {
    pub hypothesis: &'a HypothesisDag,
    pub conclusion: &'a Conclusion,
    pub method: Option<&'a MethodSpec>,
}

/// Predictive comparison of two fits: AIC when both are frequentist,
/// elpd_loo when both are Bayesian. Returns (criterion, new − old, winner
/// among "old"/"new"/tie).
pub fn compare_predictive(
    old: &FitQuality,
    new: &FitQuality,
    bayesian: bool,
    config: &RevisionConfig,
) -> Result<(Criterion, f64, Option<bool>)> {
    if bayesian {
        let (Some(a), Some(b)) = (old.elpd_loo, new.elpd_loo) else {
            return Err(Error::InvalidInput("elpd_loo missing; run LOO first".into()));
        };
        let delta = b - a;
        let winner = (delta.abs() > config.elpd_threshold).then_some(delta > 0.0);
        Ok((Criterion::Loo, delta, winner))
    } else {
        let delta = new.aic - old.aic;
        let winner = (delta.abs().round() > config.aic_threshold).then_some(delta < 0.0);
        Ok((Criterion::Aic, delta, winner))
    }
}

/// Partial correlation of `a` and `b` given `given`, with a Fisher-z test.
pub fn partial_correlation_test(data: &DatasetTable, a: &str, b: &str, given: &[String]) -> Result<(f64, f64)> {
    let n = data.n_rows();
    let k = given.len();
    if n < k + 4 {
        return Err(Error::InsufficientData(format!("{n} rows for a partial correlation given {k} variables")));
    }
    let mut cols: Vec<&[f64]> = Vec::new();
    for g in given {
        cols.push(data.numeric(g)?);
    }
    let z = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let residual = |name: &str| -> Result<DVector<f64>> {
        let v = DVector::from_column_slice(data.numeric(name)?);
        Ok(ols(&z, &v)?.residuals)
    };
    let (ra, rb) = (residual(a)?, residual(b)?);
    let denom = (ra.norm_squared() * rb.norm_squared()).sqrt();
    if denom == 0.0 {
        return Ok((0.0, 1.0));
    }
    let r = (ra.dot(&rb) / denom).clamp(-0.999_999_999, 0.999_999_999);
    let stat = r.atanh() * ((n - k - 3) as f64).sqrt();
    Ok((r, (2.0 * norm_sf(stat.abs())).min(1.0)))
}

fn testable(dag: &HypothesisDag, data: &DatasetTable, claim: &IndependenceClaim) -> bool {
    std::iter::once(&claim.a)
        .chain(std::iter::once(&claim.b))
        .chain(&claim.given)
        .all(|v| {
            dag.node(v).map(|n| n.role != Role::Group).unwrap_or(true) && data.numeric(v).is_ok()
        })
}

fn treatment_effect(side: &RevisionInput, data: &DatasetTable) -> Result<(f64, Interval)> {
    if let Some(effect) = side.conclusion.treatment_effect() {
        return Ok(effect);
    }
    // p-value conclusions carry no coefficient: refit the implied OLS formula
    let formula = ModelFormula::from_hypothesis(side.hypothesis, Family::Gaussian, false)?;
    let spec = MethodSpec::new("ace-refit", MethodKind::LinearModel);
    fit_linear_model(data, &formula, &spec)?
        .treatment_effect()
        .ok_or_else(|| Error::InvalidInput("refit produced no treatment coefficient".into()))
}

/// Decides whether `new` is a more valid hypothesis than `old`.
pub fn evaluate_revision(
    purpose: RevisionPurpose,
    old: RevisionInput,
    new: RevisionInput,
    data: &DatasetTable,
    config: &RevisionConfig,
) -> Result<RevisionVerdict> {
    let delta_dag = diff_dags(old.hypothesis, new.hypothesis);
    if !delta_dag.phenomenon_preserved {
        return Err(Error::Incommensurable(
            format!("{} -> {}", old.hypothesis.treatment(), old.hypothesis.outcome()),
            format!("{} -> {}", new.hypothesis.treatment(), new.hypothesis.outcome()),
        ));
    }
    let needed: BTreeSet<String> = old.hypothesis.node_names().into_iter().chain(new.hypothesis.node_names()).collect();
    let missing: Vec<&String> = needed.iter().filter(|c| !data.has_column(c)).collect();
    if !missing.is_empty() {
        return Err(Error::InvalidDataset(format!(
            "dataset {} does not measure {:?}; collect a new data set covering both hypotheses",
            data.id(),
            missing
        )));
    }
    let (a, b) = (old.conclusion, new.conclusion);
    if a.variant_name() != b.variant_name() {
        return Err(Error::MixedVariants(a.variant_name().into(), b.variant_name().into()));
    }
    let old_id = old.hypothesis.id.clone();
    let new_id = new.hypothesis.id.clone();
    let mut notes = Vec::new();

    match purpose {
        RevisionPurpose::Precision => {
            let bayesian = matches!(a, Conclusion::Posterior(_));
            let fit_of = |side: &RevisionInput| -> Result<FitQuality> {
                let mut fit = side
                    .conclusion
                    .fit()
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("precision revisions need model-based conclusions".into()))?;
                if bayesian && fit.elpd_loo.is_none() {
                    let method = side
                        .method
                        .ok_or_else(|| Error::InvalidInput("elpd_loo missing and no method to refit".into()))?;
                    let formula = method.resolve_formula(side.hypothesis, data)?;
                    fit.elpd_loo = Some(loo_exact(data, &formula, method)?);
                }
                Ok(fit)
            };
            let (fa, fb) = (fit_of(&old)?, fit_of(&new)?);
            let (criterion, delta, winner) = compare_predictive(&fa, &fb, bayesian, config)?;
            let winner = match winner {
                None => {
                    notes.push(format!("|Δ| = {:.2} is negligible; the earlier hypothesis is kept", delta.abs()));
                    TIE.to_string()
                }
                Some(true) => new_id.clone(),
                Some(false) => old_id.clone(),
            };
            Ok(RevisionVerdict {
                schema_version: SCHEMA_VERSION,
                purpose,
                old_hypothesis: old_id,
                new_hypothesis: new_id,
                winner,
                criterion,
                delta,
                implication_results: Vec::new(),
                ace_shift: None,
                notes,
            })
        }
        RevisionPurpose::Deconfound => {
            let old_claims: BTreeSet<IndependenceClaim> = testable_implications(old.hypothesis).into_iter().collect();
            let new_claims: BTreeSet<IndependenceClaim> = testable_implications(new.hypothesis).into_iter().collect();
            let mut results = Vec::new();
            for (source, claims, other, dag) in [
                (ClaimSource::Old, &old_claims, &new_claims, old.hypothesis),
                (ClaimSource::New, &new_claims, &old_claims, new.hypothesis),
            ] {
                for claim in claims.difference(other) {
                    if !testable(dag, data, claim) {
                        notes.push(format!("claim {claim} involves non-numeric or grouping variables; not tested"));
                        continue;
                    }
                    let (r, p) = partial_correlation_test(data, &claim.a, &claim.b, &claim.given)?;
                    results.push(ImplicationResult {
                        claim: claim.clone(),
                        implied_by: source,
                        partial_correlation: r,
                        p,
                        consistent: p > config.alpha,
                    });
                }
            }
            let new_ok = results.iter().filter(|r| r.implied_by == ClaimSource::New).all(|r| r.consistent);
            let old_only: Vec<&ImplicationResult> =
                results.iter().filter(|r| r.implied_by == ClaimSource::Old).collect();
            let old_refuted = old_only.is_empty() || old_only.iter().any(|r| !r.consistent);
            let implications_ok = new_ok && old_refuted;

            let (est_old, ci_old) = treatment_effect(&old, data)?;
            let (est_new, ci_new) = treatment_effect(&new, data)?;
            let delta = ci_new.midpoint() - ci_old.midpoint();
            let shifted = delta.abs() > config.shift_factor * ci_old.half_width().max(ci_new.half_width());
            if !implications_ok {
                notes.push("testable implications do not favour the new hypothesis".into());
            }
            if !shifted {
                notes.push("the average causal effect did not shift".into());
            }
            Ok(RevisionVerdict {
                schema_version: SCHEMA_VERSION,
                purpose,
                old_hypothesis: old_id.clone(),
                new_hypothesis: new_id.clone(),
                winner: if implications_ok && shifted { new_id } else { old_id },
                criterion: Criterion::ImplicationAce,
                delta,
                implication_results: results,
                ace_shift: Some(AceShift { estimate_old: est_old, estimate_new: est_new, ci_old, ci_new, shifted }),
                notes,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(aic: f64) -> FitQuality {
        let mut f = FitQuality::new(100, 0.0, 3, 0.0);
        f.aic = aic;
        f
    }

    #[test]
    fn aic_negligibility() {
        let cfg = RevisionConfig::default();
        let (c, d, w) = compare_predictive(&fit(249.1), &fit(251.2), false, &cfg).unwrap();
        assert_eq!(c, Criterion::Aic);
        assert!((d - 2.1).abs() < 1e-9);
        assert_eq!(w, None);
        let (_, d, w) = compare_predictive(&fit(249.1), &fit(241.4), false, &cfg).unwrap();
        assert!((d + 7.7).abs() < 1e-9);
        assert_eq!(w, Some(true));
        // swapping arguments relabels the winner
        let (_, _, w) = compare_predictive(&fit(241.4), &fit(249.1), false, &cfg).unwrap();
        assert_eq!(w, Some(false));
        let (_, _, w) = compare_predictive(&fit(100.0), &fit(102.6), false, &cfg).unwrap();
        assert_eq!(w, Some(false));
    }

    #[test]
    fn criteria_match_purposes() {
        assert!(Criterion::Aic.matches(RevisionPurpose::Precision));
        assert!(!Criterion::Aic.matches(RevisionPurpose::Deconfound));
        assert!(Criterion::ImplicationAce.matches(RevisionPurpose::Deconfound));
    }
}
