use std::fmt::Write as _;

use super::{HypothesisDag, Role};

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: treatment red, outcome cyan, everything else grey.
pub(crate) fn dag_to_dot(dag: &HypothesisDag) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(&dag.id));
    out.push_str("  rankdir=LR;\n  node [style=filled, shape=ellipse];\n");
    for node in dag.nodes() {
        let color = match node.role {
            Role::Treatment => "red",
            Role::Outcome => "cyan",
            _ => "grey",
        };
        let shape = if node.role == Role::Group { ", shape=box" } else { "" };
        let _ = writeln!(
            out,
            "  \"{}\" [fillcolor={color}{shape}];",
            escape(&node.name)
        );
    }
    for (from, to) in dag.edges() {
        let _ = writeln!(out, "  \"{}\" -> \"{}\";", escape(from), escape(to));
    }
    out.push_str("}\n");
    out
}
