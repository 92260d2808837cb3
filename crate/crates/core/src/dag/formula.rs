use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::adjustment::{adjustment_sets, is_valid_adjustment};
use super::{HypothesisDag, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Family {
    Gaussian,
    GaussianOnRanks,
    Binomial { trials: String },
}

/// A regression formula derived from a hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFormula {
    pub response: String,
    /// Treatment first, then adjustment set, then precision covariates.
    pub predictors: Vec<String>,
    #[serde(default)]
    pub random_intercepts: Vec<String>,
    pub family: Family,
}

impl ModelFormula {
    pub fn treatment(&self) -> &str {
        &self.predictors[0]
    }

    /// Columns the formula reads from a dataset.
    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec![self.response.clone()];
        cols.extend(self.predictors.iter().cloned());
        cols.extend(self.random_intercepts.iter().cloned());
        if let Family::Binomial { trials } = &self.family {
            cols.push(trials.clone());
        }
        cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.predictors.is_empty() {
            return Err(Error::InvalidMethod("formula has no predictors".into()));
        }
        if self.predictors.contains(&self.response) {
            return Err(Error::InvalidMethod(format!(
                "response '{}' appears among the predictors",
                self.response
            )));
        }
        if let Some(g) = self
            .random_intercepts
            .iter()
            .find(|g| self.predictors.contains(g) || **g == self.response)
        {
            return Err(Error::InvalidMethod(format!(
                "grouping column '{g}' is also a fixed term"
            )));
        }
        let unique: BTreeSet<_> = self.predictors.iter().collect();
        if unique.len() != self.predictors.len() {
            return Err(Error::InvalidMethod("duplicate predictor".into()));
        }
        Ok(())
    }

    /// Formula implied by a hypothesis on its own: first minimal adjustment
    /// set, every other non-descendant parent of the outcome as precision
    /// covariate, and (when `with_groups`) group-role parents of the
    /// outcome as random intercepts.
    pub fn from_hypothesis(dag: &HypothesisDag, family: Family, with_groups: bool) -> Result<Self> {
        let adjustment = adjustment_sets(dag)?.into_iter().next().unwrap_or_default();
        let descendants = dag.descendants(dag.treatment())?;
        let mut covariates = Vec::new();
        let mut groups = Vec::new();
        for parent in dag.parents(dag.outcome()) {
            if parent == dag.treatment()
                || adjustment.contains(&parent)
                || descendants.contains(&parent)
            {
                continue;
            }
            match dag.node(&parent).map(|n| n.role) {
                Some(Role::Group) => {
                    if with_groups {
                        groups.push(parent)
                    }
                }
                _ => covariates.push(parent),
            }
        }
        let adjustment: Vec<&str> = adjustment.iter().map(String::as_str).collect();
        derive_formula(dag, &adjustment, &FormulaExtras { covariates, groups }, family)
    }
}

impl fmt::Display for ModelFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let response = match self.family {
            Family::GaussianOnRanks => format!("rank({})", self.response),
            _ => self.response.clone(),
        };
        write!(f, "{response} ~ {}", self.predictors.join(" + "))?;
        for g in &self.random_intercepts {
            write!(f, " + (1 | {g})")?;
        }
        if let Family::Binomial { trials } = &self.family {
            write!(f, " [binomial of {trials}]")?;
        }
        Ok(())
    }
}

/// Terms added to a formula beyond the adjustment set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaExtras {
    /// Precision covariates (fixed effects).
    #[serde(default)]
    pub covariates: Vec<String>,
    /// Grouping variables (random intercepts).
    #[serde(default)]
    pub groups: Vec<String>,
}

/// Derives `outcome ~ treatment + adjustment + covariates (+ (1|group))`,
/// rejecting any term that would bias the treatment effect.
pub fn derive_formula(
    dag: &HypothesisDag,
    chosen_adjustment: &[&str],
    extras: &FormulaExtras,
    family: Family,
) -> Result<ModelFormula> {
    is_valid_adjustment(dag, chosen_adjustment)?;
    for name in extras.covariates.iter().chain(&extras.groups) {
        if !dag.contains(name) {
            return Err(Error::UnknownNode(name.clone()));
        }
    }
    let mut conditioned: Vec<&str> = chosen_adjustment.to_vec();
    conditioned.extend(extras.covariates.iter().map(String::as_str));
    conditioned.extend(extras.groups.iter().map(String::as_str));
    is_valid_adjustment(dag, &conditioned)?;

    let mut adjustment: Vec<String> = chosen_adjustment.iter().map(|s| s.to_string()).collect();
    adjustment.sort();
    adjustment.dedup();
    let mut covariates: Vec<String> = extras
        .covariates
        .iter()
        .filter(|c| !adjustment.contains(c))
        .cloned()
        .collect();
    covariates.sort();
    covariates.dedup();
    let mut groups = extras.groups.clone();
    groups.sort();
    groups.dedup();

    let mut predictors = vec![dag.treatment().to_string()];
    predictors.extend(adjustment);
    predictors.extend(covariates);
    if let Some(g) = groups.iter().find(|g| predictors.contains(g)) {
        return Err(Error::InvalidInput(format!(
            "'{g}' cannot be both a fixed and a random term"
        )));
    }
    let formula = ModelFormula {
        response: dag.outcome().to_string(),
        predictors,
        random_intercepts: groups,
        family,
    };
    formula.validate()?;
    Ok(formula)
}
