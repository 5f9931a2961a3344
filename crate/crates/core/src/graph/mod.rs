//! Labelled graphs of business configurations: expansion, disjoint union,
//! structural diffs, DOT export and evolution.

mod delta;
mod dot;
mod evolve;
mod ledger;

use std::collections::BTreeMap;
use std::fmt;

pub use delta::{diff, patch, DeltaOp, DeltaParseError, GraphDelta, PatchError};
pub use dot::{export_dot, DotStyle};
pub use evolve::{apply_evolution, EvolutionAction, EvolutionError};
pub use ledger::{LedgerError, SessionLedger};

use crate::model::{body, ModelBundle, Module, ModuleGraph, NodeKind};

/// Separator between the module name and the local id in a qualified id.
pub const QUALIFIER: &str = "::";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub ends: (String, String),
    pub label: String,
}

/// A graph whose ids are qualified as `module::id`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelledGraph {
    pub nodes: BTreeMap<String, GraphNode>,
    pub edges: BTreeMap<String, GraphEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("id `{0}` occurs in both operands of a union")]
    Collision(String),
    #[error("no configuration named `{0}`")]
    UnknownConfiguration(String),
    #[error("no module named `{0}`")]
    UnknownModule(String),
}

/// Splits a qualified id into module and local parts.
pub fn split_id(id: &str) -> (&str, &str) {
    id.split_once(QUALIFIER).unwrap_or(("", id))
}

impl LabelledGraph {
    /// The module graph itself, ids qualified by the module name.
    pub fn from_module(m: &Module) -> LabelledGraph {
        Self::from_parts(m.name(), m.graph())
    }

    fn from_parts(module: &str, g: &ModuleGraph) -> LabelledGraph {
        let q = |id: &str| format!("{module}{QUALIFIER}{id}");
        LabelledGraph {
            nodes: g
                .nodes
                .iter()
                .map(|n| {
                    (
                        q(&n.id),
                        GraphNode {
                            label: n.label.clone(),
                            kind: n.kind,
                        },
                    )
                })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|e| {
                    (
                        q(&e.id),
                        GraphEdge {
                            ends: (q(&e.ends.0), q(&e.ends.1)),
                            label: e.label.clone(),
                        },
                    )
                })
                .collect(),
        }
    }

    /// Disjoint union; fails on the first id present in both.
    pub fn union(&self, other: &LabelledGraph) -> Result<LabelledGraph, GraphError> {
        let mut out = self.clone();
        for (id, n) in &other.nodes {
            if out.nodes.insert(id.clone(), n.clone()).is_some() {
                return Err(GraphError::Collision(id.clone()));
            }
        }
        for (id, e) in &other.edges {
            if out.edges.insert(id.clone(), e.clone()).is_some() {
                return Err(GraphError::Collision(id.clone()));
            }
        }
        Ok(out)
    }

    /// Module names present in the graph, in id order.
    pub fn modules(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.nodes.keys().map(|id| split_id(id).0).collect();
        out.dedup();
        out
    }
}

impl fmt::Display for LabelledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, n) in &self.nodes {
            writeln!(f, "node {id} {} {}", n.label, n.kind)?;
        }
        for (id, e) in &self.edges {
            writeln!(f, "edge {id} {} {} {}", e.ends.0, e.ends.1, e.label)?;
        }
        Ok(())
    }
}

/// Expands a configuration: the VBE's task modules and the configuration's
/// task modules in full, plus the body of each VO module.
pub fn expand(bundle: &ModelBundle, config: &str) -> Result<LabelledGraph, GraphError> {
    let bc = bundle
        .configuration(config)
        .ok_or_else(|| GraphError::UnknownConfiguration(config.to_owned()))?;
    let mut g = LabelledGraph::default();
    for name in bundle.vbe.tasks.iter().chain(&bc.tasks).chain(&bc.vos) {
        let m = bundle
            .module(name)
            .ok_or_else(|| GraphError::UnknownModule(name.clone()))?;
        g = g.union(&LabelledGraph::from_parts(m.name(), &body(m)))?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, Node, TaskModule};

    fn task(name: &str) -> Module {
        Module::Task(TaskModule {
            name: name.into(),
            graph: ModuleGraph {
                nodes: vec![
                    Node::new("A", NodeKind::Internal, "X"),
                    Node::new("B", NodeKind::Internal, "Y"),
                ],
                edges: vec![Edge::new("E", "A", "B", "L")],
            },
            serves_map: vec![],
            uses_map: vec![],
            span: Default::default(),
        })
    }

    #[test]
    fn qualification_keeps_modules_disjoint() {
        let a = LabelledGraph::from_module(&task("m1"));
        let b = LabelledGraph::from_module(&task("m2"));
        let u = a.union(&b).unwrap();
        assert_eq!((u.nodes.len(), u.edges.len()), (4, 2));
        assert_eq!(u.edges["m2::E"].ends, ("m2::A".into(), "m2::B".into()));
        assert_eq!(u.modules(), vec!["m1", "m2"]);
        assert_eq!(a.union(&a), Err(GraphError::Collision("m1::A".into())));
    }
}
