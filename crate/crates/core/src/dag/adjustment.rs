use std::collections::BTreeSet;

use super::separation::separated_mask;
use super::{Graph, HypothesisDag};
use crate::error::{Error, Result};

/// Upper bound on candidate covariates for exhaustive subset search.
pub const MAX_ADJUSTMENT_CANDIDATES: usize = 16;

/// Graph with the treatment's outgoing edges removed; backdoor paths are
/// exactly the treatment-outcome paths that survive in it.
fn backdoor_graph(graph: &Graph, treatment: usize) -> Graph {
    let mut g = graph.clone();
    for child in std::mem::take(&mut g.children[treatment]) {
        g.parents[child].retain(|&p| p != treatment);
    }
    g
}

/// All inclusion-minimal backdoor adjustment sets, sorted lexicographically.
pub fn adjustment_sets(dag: &HypothesisDag) -> Result<Vec<Vec<String>>> {
    let graph = dag.graph();
    let x = graph.index(dag.treatment())?;
    let y = graph.index(dag.outcome())?;
    let forbidden = graph.descendants(x);
    let candidates: Vec<usize> = (0..graph.len())
        .filter(|&v| v != x && v != y && !forbidden.contains(&v))
        .collect();
    if candidates.len() > MAX_ADJUSTMENT_CANDIDATES {
        return Err(Error::TooManyCandidates {
            count: candidates.len(),
            limit: MAX_ADJUSTMENT_CANDIDATES,
        });
    }
    let bd = backdoor_graph(&graph, x);
    let k = candidates.len();

    let mut masks: Vec<u32> = (0..(1u32 << k)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut minimal: Vec<u32> = Vec::new();
    let mut z = vec![false; graph.len()];
    for mask in masks {
        if minimal.iter().any(|&m| m & mask == m) {
            continue;
        }
        z.iter_mut().for_each(|b| *b = false);
        for (bit, &v) in candidates.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                z[v] = true;
            }
        }
        if separated_mask(&bd, x, y, &z) {
            minimal.push(mask);
        }
    }

    let mut sets: Vec<Vec<String>> = minimal
        .into_iter()
        .map(|mask| {
            let mut set: Vec<String> = candidates
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask & (1 << bit) != 0)
                .map(|(_, &v)| graph.names[v].clone())
                .collect();
            set.sort();
            set
        })
        .collect();
    sets.sort();
    Ok(sets)
}

/// Checks the backdoor criterion for `set`, naming the first offending node.
pub fn is_valid_adjustment(dag: &HypothesisDag, set: &[&str]) -> Result<()> {
    let graph = dag.graph();
    let x = graph.index(dag.treatment())?;
    let y = graph.index(dag.outcome())?;
    let descendants = graph.descendants(x);
    let mut z = vec![false; graph.len()];
    let mut sorted: Vec<&str> = set.to_vec();
    sorted.sort();
    sorted.dedup();
    for name in &sorted {
        let v = graph.index(name)?;
        if v == x || v == y {
            return Err(Error::InvalidInput(format!(
                "'{name}' is part of the phenomenon and cannot be adjusted for"
            )));
        }
        if descendants.contains(&v) {
            return Err(if is_collider_on_path(&graph, x, y, v) {
                Error::Collider {
                    node: name.to_string(),
                }
            } else {
                Error::DescendantOfTreatment {
                    node: name.to_string(),
                }
            });
        }
        z[v] = true;
    }
    let bd = backdoor_graph(&graph, x);
    if separated_mask(&bd, x, y, &z) {
        return Ok(());
    }
    // An open backdoor caused by conditioning on a collider is reported as such.
    for name in &sorted {
        let v = graph.index(name)?;
        if is_collider_on_path(&bd, x, y, v) {
            z[v] = false;
            let reopened = !separated_mask(&bd, x, y, &z);
            z[v] = true;
            if !reopened {
                return Err(Error::Collider {
                    node: name.to_string(),
                });
            }
        }
    }
    Err(Error::OpenBackdoor {
        set: sorted.iter().map(|s| s.to_string()).collect(),
    })
}

/// Whether `c` sits as a collider (`-> c <-`) on some simple path between
/// `x` and `y` in the skeleton.
pub(crate) fn is_collider_on_path(graph: &Graph, x: usize, y: usize, c: usize) -> bool {
    if graph.parents[c].len() < 2 {
        return false;
    }
    let neighbours: Vec<Vec<usize>> = (0..graph.len())
        .map(|v| {
            let mut n: Vec<usize> = graph.parents[v]
                .iter()
                .chain(graph.children[v].iter())
                .copied()
                .collect();
            n.sort_unstable();
            n
        })
        .collect();
    let mut on_path = BTreeSet::from([x]);
    let mut path = vec![x];
    search(graph, &neighbours, y, c, &mut path, &mut on_path)
}

fn search(
    graph: &Graph,
    neighbours: &[Vec<usize>],
    target: usize,
    collider: usize,
    path: &mut Vec<usize>,
    on_path: &mut BTreeSet<usize>,
) -> bool {
    let last = *path.last().unwrap();
    if last == target {
        return path.windows(3).any(|w| {
            w[1] == collider && graph.has_edge(w[0], w[1]) && graph.has_edge(w[2], w[1])
        });
    }
    for &next in &neighbours[last] {
        if on_path.contains(&next) {
            continue;
        }
        path.push(next);
        on_path.insert(next);
        let found = search(graph, neighbours, target, collider, path, on_path);
        on_path.remove(&next);
        path.pop();
        if found {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(text: &str) -> HypothesisDag {
        HypothesisDag::parse("t", text).unwrap()
    }

    #[test]
    fn fork_needs_confounder() {
        let d = dag("x [treatment]; y [outcome]; z; z->x; z->y; x->y");
        assert_eq!(adjustment_sets(&d).unwrap(), vec![vec!["z".to_string()]]);
    }

    #[test]
    fn collider_is_never_adjusted() {
        let d = dag("x [treatment]; y [outcome]; z; x->y; x->z; y->z");
        assert_eq!(adjustment_sets(&d).unwrap(), vec![Vec::<String>::new()]);
        assert!(matches!(
            is_valid_adjustment(&d, &["z"]),
            Err(Error::Collider { .. })
        ));
    }

    #[test]
    fn m_graph_empty_set_minimal_and_w_invalid() {
        let d = dag("x [treatment]; y [outcome]; u; v; w; u->x; u->w; v->w; v->y; x->y");
        assert_eq!(adjustment_sets(&d).unwrap(), vec![Vec::<String>::new()]);
        assert!(matches!(
            is_valid_adjustment(&d, &["w"]),
            Err(Error::Collider { ref node }) if node == "w"
        ));
        assert!(is_valid_adjustment(&d, &["w", "u"]).is_ok());
    }

    #[test]
    fn unblocked_fork_reports_open_backdoor() {
        let d = dag("x [treatment]; y [outcome]; z; w; z->x; z->y; x->y");
        assert!(matches!(
            is_valid_adjustment(&d, &["w"]),
            Err(Error::OpenBackdoor { .. })
        ));
    }

    #[test]
    fn mediator_is_a_descendant() {
        let d = dag("x [treatment]; y [outcome]; m; x->m; m->y");
        assert!(matches!(
            is_valid_adjustment(&d, &["m"]),
            Err(Error::DescendantOfTreatment { .. })
        ));
    }

    #[test]
    fn several_minimal_sets_sorted() {
        // two parallel confounding routes through a or b, joined at c
        let d = dag("x [treatment]; y [outcome]; a; b; c; c->a; a->x; c->b; b->y; x->y");
        let sets = adjustment_sets(&d).unwrap();
        assert_eq!(
            sets,
            vec![
                vec!["a".to_string()],
                vec!["b".to_string()],
                vec!["c".to_string()]
            ]
        );
    }
}
