//! Rank-based two-sample tests and Cliff's δ.

use serde::{Deserialize, Serialize};

use super::conclusion::{Conclusion, PValueConclusion};
use super::dist::norm_sf;
use crate::error::{Error, Result};

/// Largest pooled sample size (mann_whitney_u) or count of nonzero
/// differences (wilcoxon) that is tested by exact enumeration.
pub const EXACT_LIMIT: usize = 12;

/// Midranks (1-based) plus the sizes of every tie group.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// (#{a > b} − #{a < b}) / (n_a n_b).
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("Cliff's δ needs two non-empty groups".into()));
    }
    let mut dominance: i64 = 0;
    for &x in a {
        for &y in b {
            dominance += match x.partial_cmp(&y) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    Ok(dominance as f64 / (a.len() * b.len()) as f64)
}

/// How rows are aggregated before computing an effect size.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "by")]
pub enum EffectAggregation {
    /// Every row is one observation.
    #[default]
    PerRow,
    /// Rows are averaged within each level of the named column first.
    PerGroup { column: String },
}

/// Cliff's δ of `values` between `treated` rows and the rest, after the
/// requested aggregation.
pub fn cliffs_delta_aggregated(
    values: &[f64],
    treated: &[bool],
    groups: Option<&[String]>,
    aggregation: &EffectAggregation,
) -> Result<f64> {
    let (a, b) = split_aggregated(values, treated, groups, aggregation)?;
    cliffs_delta(&a, &b)
}

pub(crate) fn split_aggregated(
    values: &[f64],
    treated: &[bool],
    groups: Option<&[String]>,
    aggregation: &EffectAggregation,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match aggregation {
        EffectAggregation::PerRow => {
            let a = values.iter().zip(treated).filter(|(_, &t)| t).map(|(&v, _)| v).collect();
            let b = values.iter().zip(treated).filter(|(_, &t)| !t).map(|(&v, _)| v).collect();
            Ok((a, b))
        }
        EffectAggregation::PerGroup { column } => {
            let groups = groups.ok_or_else(|| Error::MissingColumn(column.clone()))?;
            let mut sums: std::collections::BTreeMap<(bool, &str), (f64, usize)> =
                Default::default();
            for ((&v, &t), g) in values.iter().zip(treated).zip(groups) {
                let e = sums.entry((t, g.as_str())).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
            let mut a = Vec::new();
            let mut b = Vec::new();
            for ((t, _), (sum, n)) in sums {
                let mean = sum / n as f64;
                if t {
                    a.push(mean)
                } else {
                    b.push(mean)
                }
            }
            Ok((a, b))
        }
    }
}

/// Null distribution of the rank sum of `k` items drawn from ranks 1..=n,
/// as counts indexed by sum.
fn rank_sum_counts(n: usize, k: usize) -> Vec<f64> {
    let max_sum = n * (n + 1) / 2;
    // ways[j][s]: subsets of size j with sum s among ranks seen so far
    let mut ways = vec![vec![0.0f64; max_sum + 1]; k + 1];
    ways[0][0] = 1.0;
    for r in 1..=n {
        for j in (1..=k.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[j - 1][s - r];
                if add != 0.0 {
                    ways[j][s] += add;
                }
            }
        }
    }
    ways.swap_remove(k)
}

fn two_sided_from_counts(counts: &[f64], observed: usize) -> f64 {
    let total: f64 = counts.iter().sum();
    let le: f64 = counts[..=observed].iter().sum();
    let ge: f64 = counts[observed..].iter().sum();
    (2.0 * le.min(ge) / total).min(1.0)
}

/// U statistic of group `a` (midranks for ties).
pub fn mann_whitney_statistic(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = midranks(&pooled);
    let ra: f64 = ranks[..a.len()].iter().sum();
    let na = a.len() as f64;
    ra - na * (na + 1.0) / 2.0
}

/// Exact two-sided p for tie-free samples.
pub fn mann_whitney_exact_p(a: &[f64], b: &[f64]) -> Result<f64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if !midranks(&pooled).1.is_empty() {
        return Err(Error::InvalidInput("exact Mann-Whitney p requires tie-free samples".into()));
    }
    let n = pooled.len();
    if n > 64 {
        return Err(Error::InvalidInput("exact Mann-Whitney p limited to 64 observations".into()));
    }
    let na = a.len();
    let u = mann_whitney_statistic(a, b).round() as usize;
    let rank_sum = u + na * (na + 1) / 2;
    let counts = rank_sum_counts(n, na);
    Ok(two_sided_from_counts(&counts, rank_sum))
}

/// Normal approximation with tie and continuity corrections.
pub fn mann_whitney_normal_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (_, ties) = midranks(&pooled);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let u = mann_whitney_statistic(a, b);
    let mean = na * nb / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * norm_sf(z)).min(1.0)
}

/// Two-sided Mann-Whitney U test of `group_a` against `group_b`.
///
/// Exact when the pooled sample has at most [`EXACT_LIMIT`] observations
/// and no ties; otherwise normal approximation.
pub fn mann_whitney_u(group_a: &[f64], group_b: &[f64]) -> Result<Conclusion> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::InsufficientData("Mann-Whitney U needs two non-empty groups".into()));
    }
    let pooled: Vec<f64> = group_a.iter().chain(group_b).copied().collect();
    let tie_free = midranks(&pooled).1.is_empty();
    let exact = tie_free && pooled.len() <= EXACT_LIMIT;
    let p = if exact {
        mann_whitney_exact_p(group_a, group_b)?
    } else {
        mann_whitney_normal_p(group_a, group_b)
    };
    Ok(Conclusion::PValue(PValueConclusion {
        test: "mann_whitney_u".into(),
        statistic: mann_whitney_statistic(group_a, group_b),
        p,
        effect_size: cliffs_delta(group_a, group_b)?,
        exact,
        warning: None,
    }))
}

/// Signed-rank data: absolute-difference midranks and W+.
fn signed_ranks(diffs: &[f64]) -> (Vec<f64>, Vec<usize>, f64) {
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let w_plus = ranks.iter().zip(diffs).filter(|(_, &d)| d > 0.0).map(|(r, _)| r).sum();
    (ranks, ties, w_plus)
}

/// Exact two-sided p by enumerating all sign patterns over `ranks`.
pub fn wilcoxon_exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    assert!(n <= 24, "sign enumeration limited to 24 differences");
    let mut le = 0u64;
    let mut ge = 0u64;
    let eps = 1e-9;
    for mask in 0u32..(1u32 << n) {
        let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if w <= w_plus + eps {
            le += 1;
        }
        if w >= w_plus - eps {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

pub fn wilcoxon_normal_p(ranks: &[f64], ties: &[usize], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * norm_sf(z)).min(1.0)
}

/// Two-sided Wilcoxon signed-rank test on paired observations
/// `(first, second)`; differences are `first − second`.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<Conclusion> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("Wilcoxon signed-rank needs at least one pair".into()));
    }
    let first: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let second: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let effect_size = cliffs_delta(&first, &second)?;
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Ok(Conclusion::PValue(PValueConclusion {
            test: "wilcoxon_signed_rank".into(),
            statistic: 0.0,
            p: 1.0,
            effect_size,
            exact: true,
            warning: Some("all paired differences are zero".into()),
        }));
    }
    let (ranks, ties, w_plus) = signed_ranks(&diffs);
    let exact = diffs.len() <= EXACT_LIMIT;
    let p = if exact {
        wilcoxon_exact_p(&ranks, w_plus)
    } else {
        wilcoxon_normal_p(&ranks, &ties, w_plus)
    };
    Ok(Conclusion::PValue(PValueConclusion {
        test: "wilcoxon_signed_rank".into(),
        statistic: w_plus,
        p,
        effect_size,
        exact,
        warning: None,
    }))
}
