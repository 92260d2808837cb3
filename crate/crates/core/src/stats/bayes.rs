//! Bayesian binomial regression (logit link) by adaptive random-walk
//! Metropolis.
//!
//! Predictors are standardized; group intercepts are non-centred
//! (b = τ·ν, ν ~ N(0,1)) with τ sampled on the log scale. Every chain owns a
//! ChaCha8 stream derived from the seed, so parallel and serial runs agree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conclusion::{
    Conclusion, FitQuality, Interval, PosteriorConclusion, PosteriorSummary, SignProbabilities,
};
use super::design;
use super::dist::ln_choose;
use super::{McmcConfig, MethodSpec};
use crate::dag::{Family, ModelFormula};
use crate::data::DatasetTable;
use crate::error::{Error, Result};

pub const RHAT_THRESHOLD: f64 = 1.05;
const ADAPT_WINDOW: usize = 50;
/// Posterior-predictive draws used for the sign probabilities.
const MAX_PREDICTIVE_DRAWS: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum InterceptPrior {
    Normal { sd: f64 },
    /// Standard logistic on the logit scale, i.e. uniform on the baseline
    /// success probability.
    UniformProbability,
    /// Improper flat prior on the logit scale.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    #[serde(default = "default_intercept")]
    pub intercept: InterceptPrior,
    /// sd of the Normal prior on standardized coefficients.
    #[serde(default = "one")]
    pub coefficient_sd: f64,
    /// scale of the half-Normal prior on group-intercept sds.
    #[serde(default = "one")]
    pub group_sd_scale: f64,
}

fn default_intercept() -> InterceptPrior {
    InterceptPrior::Normal { sd: 2.5 }
}
fn one() -> f64 {
    1.0
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            intercept: default_intercept(),
            coefficient_sd: 1.0,
            group_sd_scale: 1.0,
        }
    }
}

impl PriorConfig {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.coefficient_sd) || !ok(self.group_sd_scale) {
            return Err(Error::InvalidMethod("prior scales must be positive".into()));
        }
        if let InterceptPrior::Normal { sd } = self.intercept {
            if !ok(sd) {
                return Err(Error::InvalidMethod("intercept prior sd must be positive".into()));
            }
        }
        Ok(())
    }

    fn log_intercept(&self, a: f64) -> f64 {
        match self.intercept {
            InterceptPrior::Normal { sd } => -0.5 * (a / sd).powi(2),
            InterceptPrior::UniformProbability => -a.abs() - 2.0 * (-a.abs()).exp().ln_1p(),
            InterceptPrior::Flat => 0.0,
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The data side of a binomial regression, ready for sampling.
#[derive(Debug, Clone)]
pub struct BinomialProblem {
    pub predictor_names: Vec<String>,
    pub group_names: Vec<String>,
    y: Vec<f64>,
    trials: Vec<f64>,
    log_norm: Vec<f64>,
    /// Raw predictor columns.
    raw: Vec<Vec<f64>>,
    means: Vec<f64>,
    /// 0 marks a constant column (standardized to all zeros).
    sds: Vec<f64>,
    z: Vec<Vec<f64>>,
    /// Level index per row for each grouping factor.
    groups: Vec<Vec<usize>>,
    levels: Vec<usize>,
    /// Rows per level per factor.
    members: Vec<Vec<Vec<usize>>>,
    include: Vec<bool>,
}

impl BinomialProblem {
    pub fn from_table(data: &DatasetTable, formula: &ModelFormula) -> Result<Self> {
        formula.validate()?;
        let trials_col = match &formula.family {
            Family::Binomial { trials } => trials,
            other => {
                return Err(Error::InvalidMethod(format!(
                    "bayes_binomial needs a binomial family, got {other:?}"
                )))
            }
        };
        let y = data.numeric(&formula.response)?.to_vec();
        let trials = data.numeric(trials_col)?.to_vec();
        for (row, (&k, &n)) in y.iter().zip(&trials).enumerate() {
            let bad = |message: String, column: &str| Error::DataType { row: row + 1, column: column.to_string(), message };
            if n < 0.0 || n.fract() != 0.0 {
                return Err(bad(format!("trials must be a non-negative integer, got {n}"), trials_col));
            }
            if k < 0.0 || k.fract() != 0.0 {
                return Err(bad(format!("response must be a non-negative integer, got {k}"), &formula.response));
            }
            if k > n {
                return Err(bad(format!("response {k} exceeds trials {n}"), &formula.response));
            }
        }
        let raw: Vec<Vec<f64>> = formula
            .predictors
            .iter()
            .map(|p| data.numeric(p).map(|v| v.to_vec()))
            .collect::<Result<_>>()?;
        let mut groups = Vec::new();
        let mut levels = Vec::new();
        for g in &formula.random_intercepts {
            let (index, count) = design::group_index(data, g)?;
            groups.push(index);
            levels.push(count);
        }
        let include = vec![true; y.len()];
        Ok(Self::assemble(
            formula.predictors.clone(),
            formula.random_intercepts.clone(),
            y,
            trials,
            raw,
            groups,
            levels,
            include,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        predictor_names: Vec<String>,
        group_names: Vec<String>,
        y: Vec<f64>,
        trials: Vec<f64>,
        raw: Vec<Vec<f64>>,
        groups: Vec<Vec<usize>>,
        levels: Vec<usize>,
        include: Vec<bool>,
    ) -> Self {
        let log_norm = y.iter().zip(&trials).map(|(&k, &n)| ln_choose(n, k)).collect();
        let mut problem = BinomialProblem {
            predictor_names,
            group_names,
            y,
            trials,
            log_norm,
            raw,
            means: Vec::new(),
            sds: Vec::new(),
            z: Vec::new(),
            members: Vec::new(),
            groups,
            levels,
            include,
        };
        problem.standardize();
        problem
    }

    /// Standardizes predictors on the included rows.
    fn standardize(&mut self) {
        let rows: Vec<usize> = (0..self.y.len()).filter(|&i| self.include[i]).collect();
        let m = rows.len().max(1) as f64;
        self.means.clear();
        self.sds.clear();
        self.z.clear();
        for col in &self.raw {
            let mean = rows.iter().map(|&i| col[i]).sum::<f64>() / m;
            let var = rows.iter().map(|&i| (col[i] - mean).powi(2)).sum::<f64>() / m;
            let sd = if var > 1e-24 { var.sqrt() } else { 0.0 };
            self.z.push(col.iter().map(|&v| if sd > 0.0 { (v - mean) / sd } else { 0.0 }).collect());
            self.means.push(mean);
            self.sds.push(sd);
        }
        self.members = self
            .groups
            .iter()
            .zip(&self.levels)
            .map(|(index, &count)| {
                let mut rows = vec![Vec::new(); count];
                for (i, &l) in index.iter().enumerate() {
                    rows[l].push(i);
                }
                rows
            })
            .collect();
    }

    /// Copy with one row removed from the likelihood.
    pub fn without_row(&self, row: usize) -> Self {
        let mut p = self.clone();
        p.include[row] = false;
        p.standardize();
        p
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    fn n_fixed(&self) -> usize {
        1 + self.raw.len()
    }

    fn dim(&self) -> usize {
        self.n_fixed() + self.levels.len() + self.levels.iter().sum::<usize>()
    }

    fn nu_offset(&self, k: usize) -> usize {
        self.n_fixed() + self.levels.len() + self.levels[..k].iter().sum::<usize>()
    }

    /// Linear predictor of row `i` with predictor `j` optionally replaced by
    /// a raw value.
    fn eta(&self, theta: &[f64], i: usize, replace: Option<(usize, f64)>) -> f64 {
        let mut eta = theta[0];
        for j in 0..self.raw.len() {
            let zij = match replace {
                Some((r, v)) if r == j => {
                    if self.sds[j] > 0.0 {
                        (v - self.means[j]) / self.sds[j]
                    } else {
                        0.0
                    }
                }
                _ => self.z[j][i],
            };
            eta += theta[1 + j] * zij;
        }
        for k in 0..self.levels.len() {
            let tau = theta[self.n_fixed() + k].exp();
            eta += tau * theta[self.nu_offset(k) + self.groups[k][i]];
        }
        eta
    }

    fn row_loglik(&self, i: usize, eta: f64) -> f64 {
        self.y[i] * eta - self.trials[i] * softplus(eta) + self.log_norm[i]
    }

    #[cfg(test)]
    fn log_prior(&self, prior: &PriorConfig, theta: &[f64]) -> f64 {
        let mut lp = prior.log_intercept(theta[0]);
        for j in 0..self.raw.len() {
            lp += -0.5 * (theta[1 + j] / prior.coefficient_sd).powi(2);
        }
        for k in 0..self.levels.len() {
            let log_tau = theta[self.n_fixed() + k];
            let tau = log_tau.exp();
            lp += -0.5 * (tau / prior.group_sd_scale).powi(2) + log_tau;
        }
        let nu_start = self.n_fixed() + self.levels.len();
        lp += theta[nu_start..].iter().map(|v| -0.5 * v * v).sum::<f64>();
        lp
    }

    /// Original-scale intercept and coefficients from a standardized draw.
    fn unstandardize(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![theta[0]];
        for j in 0..self.raw.len() {
            let b = theta[1 + j];
            if self.sds[j] > 0.0 {
                out[0] -= b * self.means[j] / self.sds[j];
                out.push(b / self.sds[j]);
            } else {
                out.push(b);
            }
        }
        out
    }
}

/// Posterior draws, chain by chain.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub chains: Vec<Vec<Vec<f64>>>,
    pub acceptance: Vec<Vec<f64>>,
}

impl PosteriorDraws {
    pub fn all(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.chains.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct ChainState<'a> {
    problem: &'a BinomialProblem,
    prior: &'a PriorConfig,
    theta: Vec<f64>,
    eta: Vec<f64>,
    ll: Vec<f64>,
    scratch: Vec<(usize, f64, f64)>,
}

impl<'a> ChainState<'a> {
    fn new(problem: &'a BinomialProblem, prior: &'a PriorConfig, theta: Vec<f64>) -> Self {
        let eta: Vec<f64> = (0..problem.n_rows()).map(|i| problem.eta(&theta, i, None)).collect();
        let ll = eta
            .iter()
            .enumerate()
            .map(|(i, &e)| if problem.include[i] { problem.row_loglik(i, e) } else { 0.0 })
            .collect();
        ChainState { problem, prior, theta, eta, ll, scratch: Vec::new() }
    }

    /// Metropolis update of coordinate `c`; returns whether it was accepted.
    fn update(&mut self, c: usize, step: f64, rng: &mut ChaCha8Rng) -> bool {
        let p = self.problem;
        let old = self.theta[c];
        let new = old + step * rng.sample::<f64, _>(StandardNormal);
        let n_fixed = p.n_fixed();
        let n_groups = p.levels.len();
        self.scratch.clear();
        if c < n_fixed {
            let delta = new - old;
            for i in 0..p.n_rows() {
                let shift = if c == 0 { delta } else { delta * p.z[c - 1][i] };
                self.push_row(i, self.eta[i] + shift);
            }
        } else if c < n_fixed + n_groups {
            let k = c - n_fixed;
            let d_tau = new.exp() - old.exp();
            let off = p.nu_offset(k);
            for i in 0..p.n_rows() {
                let nu = self.theta[off + p.groups[k][i]];
                self.push_row(i, self.eta[i] + d_tau * nu);
            }
        } else {
            let k = (0..n_groups).rev().find(|&k| c >= p.nu_offset(k)).expect("group coordinate");
            let level = c - p.nu_offset(k);
            let tau = self.theta[n_fixed + k].exp();
            for idx in 0..p.members[k][level].len() {
                let i = p.members[k][level][idx];
                self.push_row(i, self.eta[i] + tau * (new - old));
            }
        }
        let d_ll: f64 = self.scratch.iter().map(|&(i, _, ll)| ll - self.ll[i]).sum();
        let lp_old = self.prior_term(c, old);
        let lp_new = self.prior_term(c, new);
        let log_ratio = d_ll + lp_new - lp_old;
        if log_ratio.is_finite() && rng.gen::<f64>().ln() < log_ratio {
            self.theta[c] = new;
            for &(i, e, ll) in &self.scratch {
                self.eta[i] = e;
                self.ll[i] = ll;
            }
            true
        } else {
            false
        }
    }

    fn push_row(&mut self, i: usize, eta: f64) {
        let ll = if self.problem.include[i] { self.problem.row_loglik(i, eta) } else { 0.0 };
        self.scratch.push((i, eta, ll));
    }

    /// Prior log density terms that depend on coordinate `c`.
    fn prior_term(&self, c: usize, v: f64) -> f64 {
        let p = self.problem;
        let n_fixed = p.n_fixed();
        if c == 0 {
            self.prior.log_intercept(v)
        } else if c < n_fixed {
            -0.5 * (v / self.prior.coefficient_sd).powi(2)
        } else if c < n_fixed + p.levels.len() {
            -0.5 * (v.exp() / self.prior.group_sd_scale).powi(2) + v
        } else {
            -0.5 * v * v
        }
    }
}

fn run_chain(problem: &BinomialProblem, prior: &PriorConfig, mcmc: &McmcConfig, chain: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = chain_rng(mcmc.seed, chain as u64);
    let d = problem.dim();
    let n_fixed = problem.n_fixed();
    let n_groups = problem.levels.len();
    let included: Vec<usize> = (0..problem.n_rows()).filter(|&i| problem.include[i]).collect();
    let succ: f64 = included.iter().map(|&i| problem.y[i]).sum();
    let tot: f64 = included.iter().map(|&i| problem.trials[i]).sum();
    let rate = ((succ + 0.5) / (tot + 1.0)).clamp(1e-3, 1.0 - 1e-3);
    let mut theta = vec![0.0; d];
    theta[0] = (rate / (1.0 - rate)).ln() + rng.gen_range(-0.5..0.5);
    for v in theta.iter_mut().take(n_fixed).skip(1) {
        *v = rng.gen_range(-0.5..0.5);
    }
    for v in theta.iter_mut().skip(n_fixed).take(n_groups) {
        *v = rng.gen_range(-1.5..-0.5);
    }
    for v in theta.iter_mut().skip(n_fixed + n_groups) {
        *v = rng.gen_range(-0.5..0.5);
    }
    let mut state = ChainState::new(problem, prior, theta);
    let mut scale = vec![mcmc.step_scale; d];
    let mut accepted = vec![0usize; d];
    for it in 0..mcmc.warmup {
        for c in 0..d {
            if state.update(c, scale[c], &mut rng) {
                accepted[c] += 1;
            }
        }
        if (it + 1) % ADAPT_WINDOW == 0 {
            for c in 0..d {
                let rate = accepted[c] as f64 / ADAPT_WINDOW as f64;
                if rate < 0.2 {
                    scale[c] *= 0.6 + rate;
                } else if rate > 0.5 {
                    scale[c] *= 1.0 + rate;
                }
                accepted[c] = 0;
            }
        }
    }
    accepted.iter_mut().for_each(|a| *a = 0);
    let mut draws = Vec::with_capacity(mcmc.samples);
    for _ in 0..mcmc.samples {
        for c in 0..d {
            if state.update(c, scale[c], &mut rng) {
                accepted[c] += 1;
            }
        }
        draws.push(state.theta.clone());
    }
    let acceptance = accepted.iter().map(|&a| a as f64 / mcmc.samples as f64).collect();
    (draws, acceptance)
}

/// Runs all chains (in parallel) and returns their post-warmup draws.
pub fn sample_posterior(problem: &BinomialProblem, prior: &PriorConfig, mcmc: &McmcConfig) -> Result<PosteriorDraws> {
    mcmc.validate()?;
    prior.validate()?;
    if !problem.include.iter().any(|&b| b) {
        return Err(Error::InsufficientData("no rows to fit".into()));
    }
    let results: Vec<_> = (0..mcmc.chains)
        .into_par_iter()
        .map(|chain| run_chain(problem, prior, mcmc, chain))
        .collect();
    let (chains, acceptance) = results.into_iter().unzip();
    Ok(PosteriorDraws { chains, acceptance })
}

/// Split R-hat of one scalar quantity over chains.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if half < 2 {
        return f64::INFINITY;
    }
    let splits: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[c.len() - half..]])
        .collect();
    let m = splits.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = splits.iter().map(|s| s.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = splits
        .iter()
        .zip(&means)
        .map(|(s, mu)| s.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w <= 0.0 {
        return if b <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

fn summarize(name: &str, values: &mut [f64], ci_level: f64) -> PosteriorSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    values.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
    };
    let tail = (1.0 - ci_level) / 2.0;
    PosteriorSummary {
        name: name.to_string(),
        mean,
        sd,
        ci: Interval::new(q(tail), q(1.0 - tail)),
    }
}

/// Pointwise log mean predictive density of `row` over the draws.
pub fn log_predictive_density(problem: &BinomialProblem, draws: &PosteriorDraws, row: usize) -> f64 {
    let lls: Vec<f64> = draws.all().map(|t| problem.row_loglik(row, problem.eta(t, row, None))).collect();
    let max = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + (lls.iter().map(|l| (l - max).exp()).sum::<f64>() / lls.len() as f64).ln()
}

/// Probability of the baseline success rate, logistic(intercept), per draw.
pub fn baseline_probability_draws(problem: &BinomialProblem, draws: &PosteriorDraws) -> Vec<f64> {
    draws.all().map(|t| logistic(problem.unstandardize(t)[0])).collect()
}

fn sign_probabilities(problem: &BinomialProblem, draws: &PosteriorDraws, seed: u64) -> SignProbabilities {
    let all: Vec<&Vec<f64>> = draws.all().collect();
    let stride = all.len().div_ceil(MAX_PREDICTIVE_DRAWS).max(1);
    let mut rng = chain_rng(seed, u64::MAX);
    let (mut fewer, mut equal, mut more) = (0u64, 0u64, 0u64);
    for theta in all.iter().step_by(stride) {
        for i in 0..problem.n_rows() {
            let n = problem.trials[i] as u64;
            let treated = logistic(problem.eta(theta, i, Some((0, 1.0))));
            let control = logistic(problem.eta(theta, i, Some((0, 0.0))));
            let a = Binomial::new(n, treated).expect("valid probability").sample(&mut rng);
            let b = Binomial::new(n, control).expect("valid probability").sample(&mut rng);
            match a.cmp(&b) {
                std::cmp::Ordering::Less => fewer += 1,
                std::cmp::Ordering::Equal => equal += 1,
                std::cmp::Ordering::Greater => more += 1,
            }
        }
    }
    let total = (fewer + equal + more) as f64;
    SignProbabilities {
        fewer: fewer as f64 / total,
        equal: equal as f64 / total,
        more: 1.0 - fewer as f64 / total - equal as f64 / total,
    }
}

fn variance(values: &[f64]) -> f64 {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
}

/// Fits the binomial model and summarizes the posterior.
pub fn fit_bayes_binomial(data: &DatasetTable, formula: &ModelFormula, spec: &MethodSpec) -> Result<Conclusion> {
    let mcmc = spec
        .mcmc
        .as_ref()
        .ok_or_else(|| Error::InvalidMethod("bayes_binomial needs an mcmc config".into()))?;
    let prior = spec.prior.clone().unwrap_or_default();
    let problem = BinomialProblem::from_table(data, formula)?;
    let draws = sample_posterior(&problem, &prior, mcmc)?;

    let names: Vec<String> = std::iter::once("(Intercept)".to_string())
        .chain(problem.predictor_names.iter().cloned())
        .collect();
    let original: Vec<Vec<Vec<f64>>> = draws
        .chains
        .iter()
        .map(|c| c.iter().map(|t| problem.unstandardize(t)).collect())
        .collect();
    let mut max_rhat: f64 = 1.0;
    let mut coefficients = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = original.iter().map(|c| c.iter().map(|v| v[j]).collect()).collect();
        max_rhat = max_rhat.max(split_rhat(&per_chain));
        let mut flat: Vec<f64> = per_chain.concat();
        coefficients.push(summarize(name, &mut flat, spec.ci_level));
    }
    let mut group_sds = Vec::new();
    for (k, g) in problem.group_names.iter().enumerate() {
        let c = problem.n_fixed() + k;
        let per_chain: Vec<Vec<f64>> = draws.chains.iter().map(|ch| ch.iter().map(|t| t[c].exp()).collect()).collect();
        max_rhat = max_rhat.max(split_rhat(&per_chain));
        let mut flat = per_chain.concat();
        group_sds.push(summarize(g, &mut flat, spec.ci_level));
    }

    // plug-in fit quality at the posterior mean
    let dim = problem.dim();
    let total = draws.len() as f64;
    let mean_theta: Vec<f64> = (0..dim).map(|c| draws.all().map(|t| t[c]).sum::<f64>() / total).collect();
    let eta: Vec<f64> = (0..problem.n_rows()).map(|i| problem.eta(&mean_theta, i, None)).collect();
    let ll: f64 = eta.iter().enumerate().map(|(i, &e)| problem.row_loglik(i, e)).sum();
    let mut fixed_theta = mean_theta.clone();
    for k in 0..problem.levels.len() {
        fixed_theta[problem.n_fixed() + k] = f64::NEG_INFINITY;
    }
    let fixed_eta: Vec<f64> = (0..problem.n_rows()).map(|i| problem.eta(&fixed_theta, i, None)).collect();
    let var_f = variance(&fixed_eta);
    let var_g: f64 = group_sds.iter().map(|s| s.mean.powi(2)).sum();
    let latent = std::f64::consts::PI.powi(2) / 3.0;
    let denom = var_f + var_g + latent;
    let n_params = problem.n_fixed() + problem.levels.len();
    let mut fit = FitQuality::new(problem.n_rows(), ll, n_params, var_f / denom);
    if !problem.levels.is_empty() {
        fit.r2_conditional = Some((var_f + var_g) / denom);
    }

    let treatment = formula.treatment().to_string();
    Ok(Conclusion::Posterior(PosteriorConclusion {
        treatment,
        ci_level: spec.ci_level,
        coefficients,
        group_sds,
        sign_probabilities: sign_probabilities(&problem, &draws, mcmc.seed),
        max_rhat,
        reliable: max_rhat <= RHAT_THRESHOLD,
        draws: draws.len(),
        fit,
    }))
}
