use std::fmt::Write as _;

use super::{split_id, LabelledGraph};
use crate::model::NodeKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DotStyle {
    /// A single module, no clusters.
    Module,
    /// One cluster per module.
    Configuration,
}

fn shape(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Provides => "house",
        NodeKind::Requires => "invhouse",
        NodeKind::Serves => "ellipse",
        NodeKind::Uses => "cylinder",
        NodeKind::Internal => "box",
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering; output is deterministic for a given graph.
pub fn export_dot(g: &LabelledGraph, name: &str, style: DotStyle) -> String {
    let mut out = format!("digraph {} {{\n", quote(name));
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    let node_line = |out: &mut String, indent: &str, id: &str| {
        let n = &g.nodes[id];
        let local = split_id(id).1;
        writeln!(
            out,
            "{indent}{} [label={}, shape={}];",
            quote(id),
            quote(&format!("{local}: {}", n.label)),
            shape(n.kind)
        )
        .unwrap();
    };
    match style {
        DotStyle::Module => {
            for id in g.nodes.keys() {
                node_line(&mut out, "  ", id);
            }
        }
        DotStyle::Configuration => {
            for module in g.modules() {
                writeln!(out, "  subgraph {} {{", quote(&format!("cluster_{module}"))).unwrap();
                writeln!(out, "    label={};", quote(module)).unwrap();
                for id in g.nodes.keys().filter(|id| split_id(id).0 == module) {
                    node_line(&mut out, "    ", id);
                }
                out.push_str("  }\n");
            }
        }
    }
    for (id, e) in &g.edges {
        writeln!(
            out,
            "  {} -> {} [label={}, dir=none];",
            quote(&e.ends.0),
            quote(&e.ends.1),
            quote(&format!("{}: {}", split_id(id).1, e.label))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
