//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;

use evigraph_core::dag::{HypothesisDag, Role, VariableDecl};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random DAG over `n` nodes named n0..; n0 is the treatment, n1 the outcome.
pub fn random_dag(seed: u64, n: usize, p: f64) -> HypothesisDag {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((names[order[i]].clone(), names[order[j]].clone()));
            }
        }
    }
    let nodes = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let role = match i {
                0 => Role::Treatment,
                1 => Role::Outcome,
                _ => Role::Covariate,
            };
            VariableDecl::new(name.clone(), role)
        })
        .collect();
    HypothesisDag::new("random", nodes, edges, Default::default()).unwrap()
}

fn has_edge(dag: &HypothesisDag, a: &str, b: &str) -> bool {
    dag.edges().contains(&(a.to_string(), b.to_string()))
}

pub fn oracle_descendants(dag: &HypothesisDag, v: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![v.to_string()];
    while let Some(u) = stack.pop() {
        for (from, to) in dag.edges() {
            if *from == u && out.insert(to.clone()) {
                stack.push(to.clone());
            }
        }
    }
    out
}

/// Every simple path between `a` and `b` in the skeleton.
pub fn all_paths(dag: &HypothesisDag, a: &str, b: &str) -> Vec<Vec<String>> {
    fn go(
        dag: &HypothesisDag,
        b: &str,
        path: &mut Vec<String>,
        out: &mut Vec<Vec<String>>,
    ) {
        let last = path.last().unwrap().clone();
        if last == b {
            out.push(path.clone());
            return;
        }
        for name in dag.node_names() {
            if path.contains(&name) {
                continue;
            }
            if has_edge(dag, &last, &name) || has_edge(dag, &name, &last) {
                path.push(name);
                go(dag, b, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(dag, b, &mut vec![a.to_string()], &mut out);
    out
}

pub fn path_blocked(dag: &HypothesisDag, path: &[String], z: &BTreeSet<String>) -> bool {
    for w in path.windows(3) {
        let collider = has_edge(dag, &w[0], &w[1]) && has_edge(dag, &w[2], &w[1]);
        if collider {
            let opened = z.contains(&w[1])
                || oracle_descendants(dag, &w[1]).iter().any(|d| z.contains(d));
            if !opened {
                return true;
            }
        } else if z.contains(&w[1]) {
            return true;
        }
    }
    false
}

pub fn oracle_d_separated(dag: &HypothesisDag, a: &str, b: &str, z: &BTreeSet<String>) -> bool {
    all_paths(dag, a, b)
        .iter()
        .all(|p| path_blocked(dag, p, z))
}

/// Backdoor criterion by path enumeration: no descendant of the treatment
/// in `z`, and every path entering the treatment is blocked.
pub fn oracle_backdoor(dag: &HypothesisDag, z: &BTreeSet<String>) -> bool {
    let x = dag.treatment();
    let y = dag.outcome();
    let desc = oracle_descendants(dag, x);
    if z.iter().any(|v| desc.contains(v)) {
        return false;
    }
    all_paths(dag, x, y)
        .iter()
        .filter(|p| has_edge(dag, &p[1], x))
        .all(|p| path_blocked(dag, p, z))
}

pub fn subsets(items: &[String]) -> Vec<BTreeSet<String>> {
    (0..(1u32 << items.len()))
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| s.clone())
                .collect()
        })
        .collect()
}

/// Inclusion-minimal backdoor sets by exhaustive subset check.
pub fn oracle_minimal_adjustment_sets(dag: &HypothesisDag) -> Vec<Vec<String>> {
    let others: Vec<String> = dag
        .node_names()
        .into_iter()
        .filter(|n| n != dag.treatment() && n != dag.outcome())
        .collect();
    let valid: Vec<BTreeSet<String>> = subsets(&others)
        .into_iter()
        .filter(|z| oracle_backdoor(dag, z))
        .collect();
    let mut minimal: Vec<Vec<String>> = valid
        .iter()
        .filter(|z| !valid.iter().any(|w| w.len() < z.len() && w.is_subset(z)))
        .map(|z| z.iter().cloned().collect())
        .collect();
    minimal.sort();
    minimal
}

/// Exact two-sided Mann-Whitney p by enumerating every assignment of the
/// pooled ranks to group A.
pub fn oracle_mwu_exact_p(a: &[f64], b: &[f64]) -> f64 {
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|l, r| l.0.partial_cmp(&r.0).unwrap());
    let n = pooled.len();
    let na = a.len();
    let ranks: Vec<f64> = (1..=n).map(|r| r as f64).collect();
    let observed: f64 = pooled.iter().zip(&ranks).filter(|(p, _)| p.1).map(|(_, r)| r).sum();
    let mut le = 0u64;
    let mut ge = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let s: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        total += 1;
        if s <= observed + 1e-9 {
            le += 1;
        }
        if s >= observed - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * (le.min(ge) as f64) / total as f64).min(1.0)
}

/// Ordinary least squares through the normal equations (X'X) b = X'y.
pub fn oracle_normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut xtx = nalgebra::DMatrix::<f64>::zeros(p, p);
    let mut xty = nalgebra::DVector::<f64>::zeros(p);
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[(i, j)] += row[i] * row[j];
            }
        }
    }
    xtx.lu().solve(&xty).unwrap().iter().copied().collect()
}
