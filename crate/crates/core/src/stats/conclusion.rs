use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lower = self.lower.max(other.lower);
        let upper = self.upper.min(other.upper);
        (lower <= upper).then_some(Interval { lower, upper })
    }
}

/// A test statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Omitted when n is outside 8..=5000.
    pub shapiro_wilk: Option<TestResult>,
    /// d statistic; p from a seeded permutation test for positive autocorrelation.
    pub durbin_watson: TestResult,
    /// Studentized LM = n R² of the squared-residual regression.
    pub breusch_pagan: Option<TestResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitQuality {
    pub n_obs: usize,
    pub log_likelihood: f64,
    /// Fixed effects + variance components + residual variance.
    pub n_params: usize,
    pub aic: f64,
    pub r2_marginal: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2_conditional: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elpd_loo: Option<f64>,
}

impl FitQuality {
    pub fn new(n_obs: usize, log_likelihood: f64, n_params: usize, r2_marginal: f64) -> Self {
        FitQuality {
            n_obs,
            log_likelihood,
            n_params,
            aic: aic(n_params, log_likelihood),
            r2_marginal,
            r2_conditional: None,
            elpd_loo: None,
        }
    }
}

pub fn aic(n_params: usize, log_likelihood: f64) -> f64 {
    2.0 * n_params as f64 - 2.0 * log_likelihood
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub ci: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponent {
    pub group: String,
    pub variance: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueConclusion {
    pub test: String,
    pub statistic: f64,
    pub p: f64,
    /// Cliff's δ of the first group against the second.
    pub effect_size: f64,
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientsConclusion {
    pub model: String,
    pub treatment: String,
    pub ci_level: f64,
    pub coefficients: Vec<Coefficient>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variance_components: Vec<VarianceComponent>,
    pub residual_variance: f64,
    pub fit: FitQuality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsReport>,
}

impl CoefficientsConclusion {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn treatment_coefficient(&self) -> Option<&Coefficient> {
        self.coefficient(&self.treatment)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ci: Interval,
}

/// Posterior-predictive probability that the treated count is lower,
/// equal or higher than the control count for the same unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignProbabilities {
    pub fewer: f64,
    pub equal: f64,
    pub more: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignCategory {
    Fewer,
    Equal,
    More,
}

impl SignProbabilities {
    /// Most probable category; ties resolve toward `Equal`, then `Fewer`.
    pub fn dominant(&self) -> SignCategory {
        if self.equal >= self.fewer && self.equal >= self.more {
            SignCategory::Equal
        } else if self.fewer >= self.more {
            SignCategory::Fewer
        } else {
            SignCategory::More
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorConclusion {
    pub treatment: String,
    pub ci_level: f64,
    /// Summaries on the original predictor scale (logit link).
    pub coefficients: Vec<PosteriorSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub group_sds: Vec<PosteriorSummary>,
    pub sign_probabilities: SignProbabilities,
    pub max_rhat: f64,
    /// False when max split R-hat exceeds 1.05.
    pub reliable: bool,
    pub draws: usize,
    pub fit: FitQuality,
}

impl PosteriorConclusion {
    pub fn coefficient(&self, name: &str) -> Option<&PosteriorSummary> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// What an analysis method concluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Conclusion {
    PValue(PValueConclusion),
    Coefficients(CoefficientsConclusion),
    Posterior(PosteriorConclusion),
}

impl Conclusion {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Conclusion::PValue(_) => "p_value",
            Conclusion::Coefficients(_) => "coefficients",
            Conclusion::Posterior(_) => "posterior",
        }
    }

    pub fn fit(&self) -> Option<&FitQuality> {
        match self {
            Conclusion::PValue(_) => None,
            Conclusion::Coefficients(c) => Some(&c.fit),
            Conclusion::Posterior(c) => Some(&c.fit),
        }
    }

    pub fn diagnostics(&self) -> Option<&DiagnosticsReport> {
        match self {
            Conclusion::Coefficients(c) => c.diagnostics.as_ref(),
            _ => None,
        }
    }

    /// Point estimate and interval of the treatment effect, when the
    /// conclusion carries one.
    pub fn treatment_effect(&self) -> Option<(f64, Interval)> {
        match self {
            Conclusion::PValue(_) => None,
            Conclusion::Coefficients(c) => c.treatment_coefficient().map(|t| (t.estimate, t.ci)),
            Conclusion::Posterior(c) => c.coefficient(&c.treatment).map(|t| (t.mean, t.ci)),
        }
    }

    /// One-line human summary, in the style of a results table.
    pub fn summary(&self) -> String {
        match self {
            Conclusion::PValue(c) => {
                let p = if c.p < 1e-3 { format!("{:.2e}", c.p) } else { format!("{:.3}", c.p) };
                format!("{}: p={p}, δ={:.2}", c.test, c.effect_size)
            }
            Conclusion::Coefficients(c) => match c.treatment_coefficient() {
                Some(t) => format!(
                    "{}: β_{}={:.2}, ci=[{:.2}, {:.2}], AIC={:.1}",
                    c.model, t.name, t.estimate, t.ci.lower, t.ci.upper, c.fit.aic
                ),
                None => format!("{}: AIC={:.1}", c.model, c.fit.aic),
            },
            Conclusion::Posterior(c) => {
                let s = c.sign_probabilities;
                format!(
                    "bayes_binomial: [-{:.2}, ~{:.2}, +{:.2}], R-hat={:.3}{}",
                    s.fewer,
                    s.equal,
                    s.more,
                    c.max_rhat,
                    if c.reliable { "" } else { " (unreliable)" }
                )
            }
        }
    }
}
