use std::collections::BTreeSet;

use super::{Graph, HypothesisDag};
use crate::error::{Error, Result};

/// Whether `a` and `b` are d-separated given `given`.
pub fn d_separated(dag: &HypothesisDag, a: &str, b: &str, given: &[&str]) -> Result<bool> {
    let graph = dag.graph();
    let ai = graph.index(a)?;
    let bi = graph.index(b)?;
    let mut z = vec![false; graph.len()];
    for name in given {
        z[graph.index(name)?] = true;
    }
    if z[ai] || z[bi] {
        return Err(Error::InvalidInput(format!(
            "query endpoints must not be in the conditioning set ({a}, {b})"
        )));
    }
    if ai == bi {
        return Err(Error::InvalidInput(format!("d-separation of '{a}' with itself")));
    }
    Ok(!reachable(&graph, ai, &z).contains(&bi))
}

/// Nodes d-connected to `source` given the conditioning mask `z`
/// (reachability over active trails, both traversal directions tracked).
pub(crate) fn reachable(graph: &Graph, source: usize, z: &[bool]) -> BTreeSet<usize> {
    let n = graph.len();
    // Nodes that are in Z or have a descendant in Z: colliders there are open.
    let mut anc_of_z = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| z[v]).collect();
    while let Some(v) = stack.pop() {
        if anc_of_z[v] {
            continue;
        }
        anc_of_z[v] = true;
        stack.extend(graph.parents[v].iter().copied());
    }

    // visited[v][0]: reached travelling up (from a child), [1]: down (from a parent)
    let mut visited = vec![[false; 2]; n];
    let mut out = BTreeSet::new();
    let mut queue = vec![(source, 0usize)];
    while let Some((v, dir)) = queue.pop() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        if !z[v] && v != source {
            out.insert(v);
        }
        if dir == 0 {
            if !z[v] {
                queue.extend(graph.parents[v].iter().map(|&p| (p, 0)));
                queue.extend(graph.children[v].iter().map(|&c| (c, 1)));
            }
        } else {
            if !z[v] {
                queue.extend(graph.children[v].iter().map(|&c| (c, 1)));
            }
            if anc_of_z[v] {
                queue.extend(graph.parents[v].iter().map(|&p| (p, 0)));
            }
        }
    }
    out
}

/// Mask-based variant for hot loops: is `b` d-separated from `a` given `z`?
pub(crate) fn separated_mask(graph: &Graph, a: usize, b: usize, z: &[bool]) -> bool {
    !reachable(graph, a, z).contains(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(text: &str) -> HypothesisDag {
        HypothesisDag::parse("t", text).unwrap()
    }

    #[test]
    fn chain_blocks_when_middle_conditioned() {
        let d = dag("x [treatment]; z; y [outcome]; x->z; z->y");
        assert!(d_separated(&d, "x", "y", &["z"]).unwrap());
        assert!(!d_separated(&d, "x", "y", &[]).unwrap());
    }

    #[test]
    fn collider_opens_when_conditioned() {
        let d = dag("x [treatment]; z; y [outcome]; x->z; y->z");
        assert!(d_separated(&d, "x", "y", &[]).unwrap());
        assert!(!d_separated(&d, "x", "y", &["z"]).unwrap());
    }

    #[test]
    fn collider_descendant_opens_path() {
        let d = dag("x [treatment]; z; w; y [outcome]; x->z; y->z; z->w");
        assert!(!d_separated(&d, "x", "y", &["w"]).unwrap());
    }

    #[test]
    fn unknown_node_and_bad_query() {
        let d = dag("x [treatment]; y [outcome]; x->y");
        assert!(matches!(d_separated(&d, "x", "q", &[]), Err(Error::UnknownNode(_))));
        assert!(d_separated(&d, "x", "y", &["x"]).is_err());
    }
}
