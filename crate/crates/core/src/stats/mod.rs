//! Analysis methods and the conclusions they produce.

pub mod bayes;
pub mod conclusion;
pub mod diagnostics;
pub mod dist;
pub mod linear;
pub mod loo;
pub mod mixed;
pub mod optimize;
pub mod rank;

use serde::{Deserialize, Serialize};

pub use bayes::{fit_bayes_binomial, InterceptPrior, PriorConfig};
pub use conclusion::{
    Coefficient, CoefficientsConclusion, Conclusion, DiagnosticsReport, FitQuality, Interval,
    PValueConclusion, PosteriorConclusion, PosteriorSummary, SignCategory, SignProbabilities,
    TestResult, VarianceComponent,
};
pub use diagnostics::{run_diagnostics, DiagnosticsConfig};
pub use linear::fit_linear_model;
pub use loo::loo_exact;
pub use mixed::fit_linear_mixed_model;
pub use rank::{cliffs_delta, mann_whitney_u, wilcoxon_signed_rank, EffectAggregation};

use crate::dag::{Family, HypothesisDag, ModelFormula};
use crate::data::DatasetTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    MannWhitneyU,
    WilcoxonSignedRank,
    LinearModel,
    LinearMixedModel,
    BayesBinomial,
}

impl MethodKind {
    pub fn is_regression(self) -> bool {
        matches!(
            self,
            MethodKind::LinearModel | MethodKind::LinearMixedModel | MethodKind::BayesBinomial
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::MannWhitneyU => "mann_whitney_u",
            MethodKind::WilcoxonSignedRank => "wilcoxon_signed_rank",
            MethodKind::LinearModel => "linear_model",
            MethodKind::LinearMixedModel => "linear_mixed_model",
            MethodKind::BayesBinomial => "bayes_binomial",
        }
    }

    /// Name of the conclusion variant this kind produces.
    pub fn conclusion_variant(self) -> &'static str {
        match self {
            MethodKind::MannWhitneyU | MethodKind::WilcoxonSignedRank => "p_value",
            MethodKind::LinearModel | MethodKind::LinearMixedModel => "coefficients",
            MethodKind::BayesBinomial => "posterior",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
}

fn default_chains() -> usize {
    4
}
fn default_warmup() -> usize {
    1000
}
fn default_samples() -> usize {
    2000
}
fn default_step_scale() -> f64 {
    0.1
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            chains: default_chains(),
            warmup: default_warmup(),
            samples: default_samples(),
            seed: 0,
            step_scale: default_step_scale(),
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::InvalidMethod("mcmc needs at least 2 chains".into()));
        }
        if self.warmup == 0 || self.samples == 0 {
            return Err(Error::InvalidMethod("mcmc warmup and samples must be positive".into()));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::InvalidMethod("mcmc step_scale must be positive".into()));
        }
        Ok(())
    }
}

fn default_alpha() -> f64 {
    0.05
}
fn default_ci_level() -> f64 {
    0.95
}

/// Declarative description of an analysis method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub id: String,
    pub kind: MethodKind,
    /// Regression kinds only; derived from the hypothesis when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<ModelFormula>,
    #[serde(default)]
    pub rank_transform_response: bool,
    /// Wilcoxon only: rows sharing this key are paired (treated vs control).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorConfig>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default)]
    pub effect_aggregation: EffectAggregation,
    /// Seed for permutation diagnostics (the sampler uses `mcmc.seed`).
    #[serde(default)]
    pub seed: u64,
}

impl MethodSpec {
    pub fn new(id: impl Into<String>, kind: MethodKind) -> Self {
        MethodSpec {
            id: id.into(),
            kind,
            formula: None,
            rank_transform_response: false,
            pairing_column: None,
            mcmc: (kind == MethodKind::BayesBinomial).then(McmcConfig::default),
            prior: None,
            alpha: default_alpha(),
            ci_level: default_ci_level(),
            effect_aggregation: EffectAggregation::PerRow,
            seed: 0,
        }
    }

    pub fn with_formula(mut self, formula: ModelFormula) -> Self {
        self.formula = Some(formula);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidMethod(format!("alpha {} not in (0,1)", self.alpha)));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidMethod(format!("ci_level {} not in (0,1)", self.ci_level)));
        }
        let kind = self.kind.as_str();
        if self.formula.is_some() && !self.kind.is_regression() {
            return Err(Error::InvalidMethod(format!("{kind} takes no formula")));
        }
        if let Some(f) = &self.formula {
            f.validate()?;
            let binomial = matches!(f.family, Family::Binomial { .. });
            if binomial != (self.kind == MethodKind::BayesBinomial) {
                return Err(Error::InvalidMethod(format!(
                    "{kind} is incompatible with formula family {:?}",
                    f.family
                )));
            }
            if self.kind == MethodKind::LinearMixedModel && f.random_intercepts.is_empty() {
                return Err(Error::InvalidMethod("linear_mixed_model needs a random intercept".into()));
            }
            if self.kind == MethodKind::LinearModel && !f.random_intercepts.is_empty() {
                return Err(Error::InvalidMethod("linear_model takes no random intercepts".into()));
            }
        }
        if self.pairing_column.is_some() != (self.kind == MethodKind::WilcoxonSignedRank) {
            return Err(Error::InvalidMethod(
                "pairing_column is required for, and only for, wilcoxon_signed_rank".into(),
            ));
        }
        if self.mcmc.is_some() != (self.kind == MethodKind::BayesBinomial) {
            return Err(Error::InvalidMethod(
                "mcmc is required for, and only for, bayes_binomial".into(),
            ));
        }
        if self.prior.is_some() && self.kind != MethodKind::BayesBinomial {
            return Err(Error::InvalidMethod("prior override is for bayes_binomial only".into()));
        }
        if self.rank_transform_response && self.kind != MethodKind::LinearModel {
            return Err(Error::InvalidMethod("rank transform applies to linear_model only".into()));
        }
        if let Some(m) = &self.mcmc {
            m.validate()?;
        }
        Ok(())
    }

    /// Formula to fit: the explicit one, or the one the hypothesis implies.
    pub fn resolve_formula(&self, dag: &HypothesisDag, data: &DatasetTable) -> Result<ModelFormula> {
        if let Some(f) = &self.formula {
            return Ok(f.clone());
        }
        let family = match self.kind {
            MethodKind::BayesBinomial => {
                let trials = data
                    .meta()
                    .trials
                    .iter()
                    .find(|t| t.response == dag.outcome())
                    .map(|t| t.trials.clone())
                    .ok_or_else(|| {
                        Error::InvalidMethod(format!(
                            "no trials column declared for '{}'",
                            dag.outcome()
                        ))
                    })?;
                Family::Binomial { trials }
            }
            _ if self.rank_transform_response => Family::GaussianOnRanks,
            _ => Family::Gaussian,
        };
        let with_groups = matches!(self.kind, MethodKind::LinearMixedModel | MethodKind::BayesBinomial);
        ModelFormula::from_hypothesis(dag, family, with_groups)
    }

    /// Applies an `EVIGRAPH_SEED`-style override to every seed.
    pub fn with_seed_override(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let Some(m) = &mut self.mcmc {
            m.seed = seed;
        }
        self
    }
}

/// Splits a binary treatment column into (treated, control) values.
fn treatment_indicator(data: &DatasetTable, treatment: &str) -> Result<Vec<bool>> {
    data.numeric(treatment)?
        .iter()
        .enumerate()
        .map(|(row, &v)| {
            if v == 0.0 || v == 1.0 {
                Ok(v == 1.0)
            } else {
                Err(Error::DataType {
                    row: row + 1,
                    column: treatment.to_string(),
                    message: format!("treatment must be 0/1 for a two-group test, got {v}"),
                })
            }
        })
        .collect()
}

/// Runs `spec` on `data` under hypothesis `dag`.
pub fn run_method(dag: &HypothesisDag, data: &DatasetTable, spec: &MethodSpec) -> Result<Conclusion> {
    spec.validate()?;
    match spec.kind {
        MethodKind::MannWhitneyU => {
            let y = data.numeric(dag.outcome())?;
            let treated = treatment_indicator(data, dag.treatment())?;
            let (a, b) = rank::split_aggregated(y, &treated, None, &EffectAggregation::PerRow)?;
            let mut conclusion = mann_whitney_u(&a, &b)?;
            if let (Conclusion::PValue(c), EffectAggregation::PerGroup { column }) =
                (&mut conclusion, &spec.effect_aggregation)
            {
                let groups = data.labels(column)?;
                c.effect_size =
                    rank::cliffs_delta_aggregated(y, &treated, Some(&groups), &spec.effect_aggregation)?;
            }
            Ok(conclusion)
        }
        MethodKind::WilcoxonSignedRank => {
            let key = spec.pairing_column.as_deref().expect("validated");
            let pairs = paired_means(data, dag.outcome(), dag.treatment(), key)?;
            wilcoxon_signed_rank(&pairs)
        }
        MethodKind::LinearModel => {
            let formula = spec.resolve_formula(dag, data)?;
            fit_linear_model(data, &formula, spec)
        }
        MethodKind::LinearMixedModel => {
            let formula = spec.resolve_formula(dag, data)?;
            fit_linear_mixed_model(data, &formula, spec)
        }
        MethodKind::BayesBinomial => {
            let formula = spec.resolve_formula(dag, data)?;
            fit_bayes_binomial(data, &formula, spec)
        }
    }
}

/// For each pairing key: (mean outcome when treated, mean outcome in control).
/// Keys lacking either condition are skipped.
pub fn paired_means(
    data: &DatasetTable,
    outcome: &str,
    treatment: &str,
    key: &str,
) -> Result<Vec<(f64, f64)>> {
    let y = data.numeric(outcome)?;
    let treated = treatment_indicator(data, treatment)?;
    let keys = data.labels(key)?;
    let mut acc: std::collections::BTreeMap<&str, [(f64, usize); 2]> = Default::default();
    for ((&v, &t), k) in y.iter().zip(&treated).zip(&keys) {
        let slot = &mut acc.entry(k.as_str()).or_insert([(0.0, 0); 2])[t as usize];
        slot.0 += v;
        slot.1 += 1;
    }
    let pairs: Vec<(f64, f64)> = acc
        .values()
        .filter(|s| s[0].1 > 0 && s[1].1 > 0)
        .map(|s| (s[1].0 / s[1].1 as f64, s[0].0 / s[0].1 as f64))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no '{key}' level observed under both treatment conditions"
        )));
    }
    Ok(pairs)
}

/// Design matrix helpers shared by the regression fits.
pub(crate) mod design {
    use nalgebra::{DMatrix, DVector};

    use crate::dag::ModelFormula;
    use crate::data::DatasetTable;
    use crate::error::{Error, Result};

    /// Intercept column followed by one column per predictor.
    pub fn build(data: &DatasetTable, formula: &ModelFormula) -> Result<(DMatrix<f64>, Vec<String>)> {
        let n = data.n_rows();
        let mut names = vec!["(Intercept)".to_string()];
        let mut cols: Vec<&[f64]> = Vec::new();
        for p in &formula.predictors {
            cols.push(data.numeric(p)?);
            names.push(p.clone());
        }
        let x = DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
        Ok((x, names))
    }

    pub fn response(data: &DatasetTable, formula: &ModelFormula) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(data.numeric(&formula.response)?))
    }

    /// Group index per row plus the number of levels, in sorted label order.
    pub fn group_index(data: &DatasetTable, column: &str) -> Result<(Vec<usize>, usize)> {
        let labels = data.labels(column)?;
        let mut levels: Vec<&String> = labels.iter().collect();
        levels.sort();
        levels.dedup();
        let index = labels
            .iter()
            .map(|l| levels.binary_search(&l).expect("level present"))
            .collect();
        Ok((index, levels.len()))
    }

    pub fn check_rows(n: usize, p: usize) -> Result<()> {
        if n <= p {
            return Err(Error::InsufficientData(format!(
                "{n} rows for {p} parameters"
            )));
        }
        Ok(())
    }
}
