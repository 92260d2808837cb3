//! Comparing pieces of evidence: agreement of replications, pooling,
//! revision verdicts and reanalysis records.
//!
//! Every verdict serializes with `"schema_version": 1`.

mod reanalysis;
mod revision;

pub use reanalysis::{record_reanalysis, DiagnosticsDelta, ReanalysisRecord, Rationale};
pub(crate) use reanalysis::record_reanalysis_unchecked;
pub use revision::{
    compare_predictive, evaluate_revision, partial_correlation_test, AceShift, ClaimSource, Criterion,
    ImplicationResult, RevisionConfig, RevisionInput, RevisionPurpose, RevisionVerdict, TIE,
};

use serde::{Deserialize, Serialize};

use crate::dag::ModelFormula;
use crate::data::DatasetTable;
use crate::error::{Error, Result};
use crate::stats::dist::{chi2_sf, norm_quantile, norm_sf};
use crate::stats::mixed::{fit_lmm, GroupingFactor};
use crate::stats::{
    Coefficient, CoefficientsConclusion, Conclusion, FitQuality, Interval, SignCategory, VarianceComponent,
};

pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMethod {
    Fisher,
    Stouffer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedP {
    pub method: CombineMethod,
    /// X = −2Σ ln p (Fisher) or the weighted Z (Stouffer).
    pub statistic: f64,
    pub p: f64,
}

/// Stouffer weights √n from per-study sample sizes.
pub fn stouffer_weights(sample_sizes: &[usize]) -> Vec<f64> {
    sample_sizes.iter().map(|&n| (n as f64).sqrt()).collect()
}

/// Combines independent p-values.
///
/// Stouffer uses the one-sided convention z_i = Φ⁻¹(1 − p_i) and returns the
/// upper-tail p of Σ w_i z_i / √Σ w_i²; weights default to equal.
pub fn combine_pvalues(ps: &[f64], method: CombineMethod, weights: Option<&[f64]>) -> Result<CombinedP> {
    if ps.is_empty() {
        return Err(Error::InvalidInput("no p-values to combine".into()));
    }
    if let Some(p) = ps.iter().find(|&&p| p == 0.0) {
        return Err(Error::InvalidInput(format!(
            "p-value {p} cannot be combined; supply the underlying test statistic instead"
        )));
    }
    if let Some(p) = ps.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::InvalidInput(format!("p-value {p} not in (0, 1]")));
    }
    match method {
        CombineMethod::Fisher => {
            if weights.is_some() {
                return Err(Error::InvalidInput("Fisher's method takes no weights".into()));
            }
            let x = -2.0 * ps.iter().map(|p| p.ln()).sum::<f64>();
            Ok(CombinedP { method, statistic: x, p: chi2_sf(x, 2.0 * ps.len() as f64) })
        }
        CombineMethod::Stouffer => {
            let equal = vec![1.0; ps.len()];
            let w = weights.unwrap_or(&equal);
            if w.len() != ps.len() {
                return Err(Error::InvalidInput("one weight per p-value required".into()));
            }
            if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidInput("Stouffer weights must be positive".into()));
            }
            let num: f64 = ps.iter().zip(w).map(|(p, w)| w * norm_quantile(1.0 - p)).sum();
            let z = num / w.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(CombinedP { method, statistic: z, p: norm_sf(z) })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolModel {
    Fixed,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledEffect {
    pub model: PoolModel,
    pub estimate: f64,
    pub std_error: f64,
    pub ci: Interval,
    /// Between-study variance (DerSimonian-Laird); 0 for the fixed model.
    pub tau2: f64,
    /// Unnormalized inverse-variance weights.
    pub weights: Vec<f64>,
}

/// Inverse-variance pooling of (estimate, standard error) pairs.
pub fn pool_effects(studies: &[(f64, f64)], model: PoolModel, ci_level: f64) -> Result<PooledEffect> {
    if studies.len() < 2 {
        return Err(Error::InsufficientData("pooling needs at least two studies".into()));
    }
    if let Some((_, se)) = studies.iter().find(|(_, se)| !(*se > 0.0 && se.is_finite())) {
        return Err(Error::InvalidInput(format!("standard error {se} must be positive")));
    }
    let fixed_w: Vec<f64> = studies.iter().map(|(_, se)| 1.0 / (se * se)).collect();
    let weighted_mean = |w: &[f64]| {
        let sw: f64 = w.iter().sum();
        (studies.iter().zip(w).map(|((t, _), w)| w * t).sum::<f64>() / sw, sw)
    };
    let (fixed_est, fixed_sw) = weighted_mean(&fixed_w);
    let (estimate, sw, tau2, weights) = match model {
        PoolModel::Fixed => (fixed_est, fixed_sw, 0.0, fixed_w),
        PoolModel::Random => {
            let q: f64 = studies.iter().zip(&fixed_w).map(|((t, _), w)| w * (t - fixed_est).powi(2)).sum();
            let c = fixed_sw - fixed_w.iter().map(|w| w * w).sum::<f64>() / fixed_sw;
            let tau2 = ((q - (studies.len() - 1) as f64) / c).max(0.0);
            let w: Vec<f64> = studies.iter().map(|(_, se)| 1.0 / (se * se + tau2)).collect();
            let (est, sw) = weighted_mean(&w);
            (est, sw, tau2, w)
        }
    };
    let se = (1.0 / sw).sqrt();
    let z = norm_quantile(0.5 + ci_level / 2.0);
    Ok(PooledEffect {
        model,
        estimate,
        std_error: se,
        ci: Interval::new(estimate - z * se, estimate + z * se),
        tau2,
        weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementBasis {
    AlphaDecision,
    Fisher,
    Stouffer,
    IntervalOverlap,
    PooledEffect,
    DominantSign,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementDetail {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combined: Option<CombinedP>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled: Option<PooledEffect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_sign: Option<SignCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child_sign: Option<SignCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementVerdict {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub agrees: bool,
    pub basis: AgreementBasis,
    pub detail: AgreementDetail,
}

fn treatment_coefficient(c: &CoefficientsConclusion) -> Result<&Coefficient> {
    c.treatment_coefficient()
        .ok_or_else(|| Error::InvalidInput(format!("conclusion lacks a '{}' coefficient", c.treatment)))
}

/// Checks whether a replication's conclusion agrees with its parent's.
pub fn check_agreement(parent: &Conclusion, child: &Conclusion, alpha: f64) -> Result<AgreementVerdict> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} not in (0,1)")));
    }
    let verdict = match (parent, child) {
        (Conclusion::PValue(a), Conclusion::PValue(b)) => AgreementVerdict {
            schema_version: SCHEMA_VERSION,
            agrees: (a.p <= alpha) == (b.p <= alpha),
            basis: AgreementBasis::AlphaDecision,
            detail: AgreementDetail {
                combined: combine_pvalues(&[a.p.max(f64::MIN_POSITIVE), b.p.max(f64::MIN_POSITIVE)], CombineMethod::Fisher, None)
                    .ok(),
                ..Default::default()
            },
        },
        (Conclusion::Coefficients(a), Conclusion::Coefficients(b)) => {
            let (ta, tb) = (treatment_coefficient(a)?, treatment_coefficient(b)?);
            let overlap = ta.ci.intersect(&tb.ci);
            let pooled = if ta.std_error > 0.0 && tb.std_error > 0.0 {
                Some(pool_effects(
                    &[(ta.estimate, ta.std_error), (tb.estimate, tb.std_error)],
                    PoolModel::Fixed,
                    a.ci_level,
                )?)
            } else {
                None
            };
            AgreementVerdict {
                schema_version: SCHEMA_VERSION,
                agrees: overlap.is_some(),
                basis: AgreementBasis::IntervalOverlap,
                detail: AgreementDetail { overlap, pooled, ..Default::default() },
            }
        }
        (Conclusion::Posterior(a), Conclusion::Posterior(b)) => {
            let (sa, sb) = (a.sign_probabilities.dominant(), b.sign_probabilities.dominant());
            AgreementVerdict {
                schema_version: SCHEMA_VERSION,
                agrees: sa == sb,
                basis: AgreementBasis::DominantSign,
                detail: AgreementDetail { parent_sign: Some(sa), child_sign: Some(sb), ..Default::default() },
            }
        }
        (a, b) => {
            return Err(Error::MixedVariants(a.variant_name().into(), b.variant_name().into()));
        }
    };
    Ok(verdict)
}

/// Name of the study column `pool_ipd` adds.
pub const STUDY_COLUMN: &str = "study";

/// Individual-participant-data pooling: stacks the datasets, adds a study
/// column and fits a mixed model with a study random intercept.
pub fn pool_ipd(datasets: &[&DatasetTable], formula: &ModelFormula, ci_level: f64) -> Result<Conclusion> {
    if datasets.len() < 2 {
        return Err(Error::InsufficientData("IPD pooling needs at least two datasets".into()));
    }
    let columns = formula.columns();
    for (i, d) in datasets.iter().enumerate() {
        if let Some(c) = columns.iter().find(|c| !d.has_column(c)) {
            return Err(Error::InvalidDataset(format!(
                "dataset {} ({}) lacks column '{c}' used by the formula",
                i + 1,
                d.id()
            )));
        }
    }
    let mut study = STUDY_COLUMN.to_string();
    while columns.contains(&study) {
        study.push('_');
    }
    let labels: Vec<String> = (1..=datasets.len()).map(|i| format!("s{i}")).collect();
    let pooled = DatasetTable::concat(datasets, &columns, &study, &labels)?;
    let mut f = formula.clone();
    f.random_intercepts.push(study.clone());
    f.validate()?;

    let (x, names) = crate::stats::design::build(&pooled, &f)?;
    let y = crate::stats::design::response(&pooled, &f)?;
    let factors = crate::stats::mixed::factors_for(&pooled, &f)?;
    let fit = fit_lmm(&x, &y, &factors)?;
    let z = norm_quantile(0.5 + ci_level / 2.0);
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = fit.cov_beta[(j, j)].max(0.0).sqrt();
            Coefficient {
                name: name.clone(),
                estimate: fit.beta[j],
                std_error: se,
                ci: Interval::new(fit.beta[j] - z * se, fit.beta[j] + z * se),
            }
        })
        .collect();
    let fit_quality = FitQuality::new(x.nrows(), fit.log_likelihood, x.ncols() + factors.len() + 1, 0.0);
    Ok(Conclusion::Coefficients(CoefficientsConclusion {
        model: "ipd_mixed_model".into(),
        treatment: f.treatment().to_string(),
        ci_level,
        coefficients,
        variance_components: factors
            .iter()
            .zip(&fit.group_variances)
            .map(|(g, &v): (&GroupingFactor, &f64)| VarianceComponent { group: g.name.clone(), variance: v, levels: g.levels })
            .collect(),
        residual_variance: fit.sigma2,
        fit: fit_quality,
        diagnostics: None,
    }))
}
