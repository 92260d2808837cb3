use evigraph_core::evidence::{classify_evolution, EvolutionGraph};
use evigraph_core::fixtures;
use evigraph_core::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    /// Whatever edges are requested, the accepted ones never form a cycle.
    #[test]
    fn edges_never_form_cycles(pairs in prop::collection::vec((0usize..8, 0usize..8), 0..40)) {
        let template = &fixtures::table2().graph;
        let ids: Vec<String> = template.evidence.keys().cloned().collect();
        let mut g = EvolutionGraph::new();
        for id in &ids {
            g.add_evidence(template.evidence[id].clone(), None).unwrap();
        }
        for (a, b) in pairs {
            match g.add_edge(&ids[a], &ids[b]) {
                Ok(_) | Err(Error::GraphCycle(_)) | Err(Error::Duplicate { .. }) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
        // a topological order exists iff the graph is acyclic
        let mut indegree: std::collections::BTreeMap<&str, usize> = ids.iter().map(|i| (i.as_str(), 0)).collect();
        for e in &g.edges {
            *indegree.get_mut(e.to.as_str()).unwrap() += 1;
        }
        let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for e in g.edges.iter().filter(|e| e.from == v) {
                let d = indegree.get_mut(e.to.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(e.to.as_str());
                }
            }
        }
        prop_assert_eq!(seen, ids.len());
    }
}

#[test]
fn frontier_ignores_edge_order() {
    let f = fixtures::table2();
    let expected = f.graph.frontier(&f.store).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let mut g = f.graph.clone();
        g.edges.shuffle(&mut rng);
        assert_eq!(g.frontier(&f.store).unwrap(), expected);
    }
}

#[test]
fn frontier_survives_serialization() {
    for f in [fixtures::table1(), fixtures::table2()] {
        let again = EvolutionGraph::from_json(&f.graph.to_json().unwrap()).unwrap();
        assert_eq!(again, f.graph);
        assert_eq!(again.frontier(&f.store).unwrap(), f.graph.frontier(&f.store).unwrap());
    }
}

#[test]
fn stored_edge_types_match_classification() {
    for f in [fixtures::table1(), fixtures::table2()] {
        for e in &f.graph.edges {
            let c = classify_evolution(&f.graph.evidence[&e.from], &f.graph.evidence[&e.to]).unwrap();
            assert_eq!(c.types, e.types, "{} -> {}", e.from, e.to);
            assert_eq!(c.conflated, e.conflated);
        }
    }
}

#[test]
fn table1_frontier_is_provisional() {
    let f = fixtures::table1();
    let frontier = f.graph.frontier(&f.store).unwrap();
    assert!(frontier.provisional);
    assert!(f.graph.to_dot().contains("dashed"));
}
