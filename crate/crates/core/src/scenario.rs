//! Synthetic experiments shaped like a requirements-quality study:
//! participants read requirements (items) written with or without the
//! treatment and produce a binomial count of defects.
//!
//! Every scenario is deterministic by seed and ships its ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dag::HypothesisDag;
use crate::data::{ColumnData, ColumnKind, ColumnMeta, DatasetMeta, DatasetTable, TrialsPair};
use crate::error::{Error, Result};

pub const TREATMENT: &str = "passive";
pub const RESPONSE: &str = "missing";
pub const TRIALS: &str = "expected";
pub const CONFOUNDER: &str = "experience";
pub const PARTICIPANT: &str = "participant";
pub const ITEM: &str = "requirement";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Each participant sees every item under one treatment level.
    Parallel,
    /// Each participant sees both levels, alternating over items.
    Crossover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub participants: usize,
    pub items: usize,
    pub design: Design,
    /// Treatment effect on the logit scale.
    pub effect: f64,
    /// Logit-scale effect of the participant-level confounder on both
    /// treatment assignment (parallel design only) and outcome.
    pub confounder_strength: f64,
    pub skill_sd: f64,
    pub complexity_sd: f64,
    pub trials: u32,
    /// Logit of the baseline defect probability.
    pub baseline: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            participants: 15,
            items: 7,
            design: Design::Crossover,
            effect: 0.5,
            confounder_strength: 0.0,
            skill_sd: 0.5,
            complexity_sd: 0.5,
            trials: 8,
            baseline: -1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.participants == 0 || self.items == 0 || self.trials == 0 {
            return Err(Error::InvalidInput("participants, items and trials must be positive".into()));
        }
        if self.design == Design::Parallel && self.participants < 2 {
            return Err(Error::InvalidInput("a parallel design needs at least two participants".into()));
        }
        if self.design == Design::Crossover && self.items < 2 {
            return Err(Error::InvalidInput("a crossover design needs at least two items".into()));
        }
        for (name, v) in [("skill_sd", self.skill_sd), ("complexity_sd", self.complexity_sd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative")));
            }
        }
        for (name, v) in [("effect", self.effect), ("confounder_strength", self.confounder_strength), ("baseline", self.baseline)] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub effect_logit: f64,
    /// Mean over rows of p(treated) − p(control), holding latent terms fixed.
    pub ace_probability: f64,
    /// The same on the count scale (× trials).
    pub ace_count: f64,
    pub confounded: bool,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub data: DatasetTable,
    pub truth: GroundTruth,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = |sd: f64| Normal::new(0.0, sd).expect("validated sd");
    let skills: Vec<f64> = (0..config.participants).map(|_| normal(config.skill_sd).sample(&mut rng)).collect();
    let complexity: Vec<f64> = (0..config.items).map(|_| normal(config.complexity_sd).sample(&mut rng)).collect();
    let confounder: Vec<f64> = (0..config.participants).map(|_| rng.sample(StandardNormal)).collect();
    let assigned: Vec<bool> = confounder
        .iter()
        .map(|z| rng.gen::<f64>() < logistic(config.confounder_strength * z))
        .collect();

    let n = config.participants * config.items;
    let (mut x, mut y, mut trials, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut who, mut what) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut ace = 0.0;
    for i in 0..config.participants {
        for (j, c) in complexity.iter().enumerate() {
            let treated = match config.design {
                Design::Parallel => assigned[i],
                Design::Crossover => (i + j) % 2 == 0,
            };
            let base = config.baseline + config.confounder_strength * confounder[i] + skills[i] + c;
            let p = logistic(base + if treated { config.effect } else { 0.0 });
            ace += logistic(base + config.effect) - logistic(base);
            let count = Binomial::new(config.trials as u64, p).expect("valid probability").sample(&mut rng);
            x.push(if treated { 1.0 } else { 0.0 });
            y.push(count as f64);
            trials.push(config.trials as f64);
            z.push(confounder[i]);
            who.push(format!("p{:02}", i + 1));
            what.push(format!("r{}", j + 1));
        }
    }
    let ace_probability = ace / n as f64;

    let mut meta = DatasetMeta::new(vec![
        ColumnMeta::new(TREATMENT, ColumnKind::Binary),
        ColumnMeta::new(RESPONSE, ColumnKind::Count),
        ColumnMeta::new(TRIALS, ColumnKind::Count),
        ColumnMeta::new(CONFOUNDER, ColumnKind::Continuous),
        ColumnMeta::new(PARTICIPANT, ColumnKind::Group),
        ColumnMeta::new(ITEM, ColumnKind::Group),
    ]);
    meta.trials.push(TrialsPair { response: RESPONSE.into(), trials: TRIALS.into() });
    meta.provenance = Some(format!("synthetic scenario, seed {}", config.seed));
    // round-trip through CSV so the id is the digest of the canonical bytes
    let staged = DatasetTable::from_columns(
        meta.clone(),
        vec![
            (TREATMENT.into(), ColumnData::Numeric(x)),
            (RESPONSE.into(), ColumnData::Numeric(y)),
            (TRIALS.into(), ColumnData::Numeric(trials)),
            (CONFOUNDER.into(), ColumnData::Numeric(z)),
            (PARTICIPANT.into(), ColumnData::Labels(who)),
            (ITEM.into(), ColumnData::Labels(what)),
        ],
    )?;
    let data = DatasetTable::from_csv_bytes(staged.to_csv().as_bytes(), meta)?;
    Ok(Scenario {
        data,
        truth: GroundTruth {
            effect_logit: config.effect,
            ace_probability,
            ace_count: ace_probability * config.trials as f64,
            confounded: config.confounder_strength != 0.0 && config.design == Design::Parallel,
        },
    })
}

/// Hypothesis ignoring the confounder (the confounder is declared but
/// unconnected, so the hypothesis claims it is independent of both).
pub fn naive_hypothesis() -> HypothesisDag {
    HypothesisDag::parse(
        "naive",
        &format!("{TREATMENT} [treatment, binary]\n{RESPONSE} [outcome, count]\n{CONFOUNDER} [continuous]\n{TREATMENT} -> {RESPONSE}"),
    )
    .expect("static hypothesis")
}

/// Hypothesis with the confounder as a common cause (fork).
pub fn adjusted_hypothesis() -> HypothesisDag {
    HypothesisDag::parse(
        "adjusted",
        &format!(
            "{TREATMENT} [treatment, binary]\n{RESPONSE} [outcome, count]\n{CONFOUNDER} [continuous]\n\
             {CONFOUNDER} -> {TREATMENT}; {CONFOUNDER} -> {RESPONSE}; {TREATMENT} -> {RESPONSE}"
        ),
    )
    .expect("static hypothesis")
}

/// Hypothesis with participant and item random intercepts.
pub fn grouped_hypothesis() -> HypothesisDag {
    HypothesisDag::parse(
        "grouped",
        &format!(
            "{TREATMENT} [treatment, binary]\n{RESPONSE} [outcome, count]\n{PARTICIPANT} [group]\n{ITEM} [group]\n\
             {TREATMENT} -> {RESPONSE}; {PARTICIPANT} -> {RESPONSE}; {ITEM} -> {RESPONSE}"
        ),
    )
    .expect("static hypothesis")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_by_seed() {
        let cfg = ScenarioConfig { seed: 4, ..Default::default() };
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(a.data.to_csv(), b.data.to_csv());
        assert_eq!(a.data.id(), b.data.id());
        let c = generate_scenario(&ScenarioConfig { seed: 5, ..cfg }).unwrap();
        assert_ne!(a.data.id(), c.data.id());
    }

    #[test]
    fn crossover_balances_levels() {
        let s = generate_scenario(&ScenarioConfig::default()).unwrap();
        assert_eq!(s.data.n_rows(), 105);
        let x = s.data.numeric(TREATMENT).unwrap();
        let who = s.data.labels(PARTICIPANT).unwrap();
        for p in 1..=15 {
            let id = format!("p{p:02}");
            let levels: Vec<f64> = x.iter().zip(&who).filter(|(_, w)| **w == id).map(|(v, _)| *v).collect();
            assert!(levels.contains(&0.0) && levels.contains(&1.0));
        }
    }

    #[test]
    fn counts_within_trials() {
        let s = generate_scenario(&ScenarioConfig { trials: 3, ..Default::default() }).unwrap();
        let y = s.data.numeric(RESPONSE).unwrap();
        assert!(y.iter().all(|&v| (0.0..=3.0).contains(&v) && v.fract() == 0.0));
    }

    #[test]
    fn invalid_configs() {
        assert!(generate_scenario(&ScenarioConfig { participants: 0, ..Default::default() }).is_err());
        assert!(generate_scenario(&ScenarioConfig { skill_sd: -1.0, ..Default::default() }).is_err());
        assert!(generate_scenario(&ScenarioConfig { items: 1, ..Default::default() }).is_err());
    }

    #[test]
    fn hypotheses_parse() {
        assert_eq!(adjusted_hypothesis().treatment(), TREATMENT);
        assert_eq!(naive_hypothesis().outcome(), RESPONSE);
        assert_eq!(grouped_hypothesis().group_nodes(), vec![PARTICIPANT.to_string(), ITEM.to_string()]);
    }
}
