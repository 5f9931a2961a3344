//! Structural diffs between labelled graphs, with a line format:
//!
//! ```text
//! -edge <id> <a> <b> <label>
//! -node <id> <label> <kind>
//! +node <id> <label> <kind>
//! ~node <id> <old-label> <old-kind> <new-label> <new-kind>
//! +edge <id> <a> <b> <label>
//! ~edge <id> <old-label> <new-label>
//! ```
//!
//! A wire whose endpoints change is expressed as a removal and an addition.

use std::fmt;

use super::{GraphEdge, GraphNode, LabelledGraph};
use crate::model::NodeKind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeltaOp {
    RemoveEdge { id: String, edge: GraphEdge },
    RemoveNode { id: String, node: GraphNode },
    AddNode { id: String, node: GraphNode },
    ChangeNode { id: String, old: GraphNode, new: GraphNode },
    AddEdge { id: String, edge: GraphEdge },
    ChangeEdge { id: String, old: String, new: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GraphDelta {
    pub ops: Vec<DeltaOp>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("cannot remove `{0}`: absent or different from the delta")]
    RemoveMismatch(String),
    #[error("cannot add `{0}`: already present")]
    AlreadyPresent(String),
    #[error("cannot change `{0}`: absent or different from the delta")]
    ChangeMismatch(String),
    #[error("wire `{edge}` refers to missing node `{node}`")]
    DanglingEdge { edge: String, node: String },
    #[error("node `{node}` is removed while wire `{edge}` still touches it")]
    NodeInUse { node: String, edge: String },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct DeltaParseError {
    pub line: usize,
    pub message: String,
}

impl GraphDelta {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn parse(text: &str) -> Result<GraphDelta, DeltaParseError> {
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| DeltaParseError {
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            let kind = |s: &str| NodeKind::from_name(s).ok_or_else(|| err(format!("unknown node kind `{s}`")));
            let arity = |n: usize| {
                if f.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("`{}` takes {} fields, found {}", f[0], n - 1, f.len() - 1)))
                }
            };
            let node = |label: &str, k: &str| -> Result<GraphNode, DeltaParseError> {
                Ok(GraphNode {
                    label: label.into(),
                    kind: kind(k)?,
                })
            };
            let edge = |a: &str, b: &str, label: &str| GraphEdge {
                ends: (a.into(), b.into()),
                label: label.into(),
            };
            let id = f.get(1).map(|s| s.to_string()).unwrap_or_default();
            let op = match f[0] {
                "-edge" => {
                    arity(5)?;
                    DeltaOp::RemoveEdge {
                        id,
                        edge: edge(f[2], f[3], f[4]),
                    }
                }
                "+edge" => {
                    arity(5)?;
                    DeltaOp::AddEdge {
                        id,
                        edge: edge(f[2], f[3], f[4]),
                    }
                }
                "-node" => {
                    arity(4)?;
                    DeltaOp::RemoveNode {
                        id,
                        node: node(f[2], f[3])?,
                    }
                }
                "+node" => {
                    arity(4)?;
                    DeltaOp::AddNode {
                        id,
                        node: node(f[2], f[3])?,
                    }
                }
                "~node" => {
                    arity(6)?;
                    DeltaOp::ChangeNode {
                        id,
                        old: node(f[2], f[3])?,
                        new: node(f[4], f[5])?,
                    }
                }
                "~edge" => {
                    arity(4)?;
                    DeltaOp::ChangeEdge {
                        id,
                        old: f[2].into(),
                        new: f[3].into(),
                    }
                }
                other => return Err(err(format!("unknown operation `{other}`"))),
            };
            ops.push(op);
        }
        Ok(GraphDelta { ops })
    }
}

impl fmt::Display for GraphDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            match op {
                DeltaOp::RemoveEdge { id, edge } => {
                    writeln!(f, "-edge {id} {} {} {}", edge.ends.0, edge.ends.1, edge.label)?
                }
                DeltaOp::RemoveNode { id, node } => writeln!(f, "-node {id} {} {}", node.label, node.kind)?,
                DeltaOp::AddNode { id, node } => writeln!(f, "+node {id} {} {}", node.label, node.kind)?,
                DeltaOp::ChangeNode { id, old, new } => writeln!(
                    f,
                    "~node {id} {} {} {} {}",
                    old.label, old.kind, new.label, new.kind
                )?,
                DeltaOp::AddEdge { id, edge } => {
                    writeln!(f, "+edge {id} {} {} {}", edge.ends.0, edge.ends.1, edge.label)?
                }
                DeltaOp::ChangeEdge { id, old, new } => writeln!(f, "~edge {id} {old} {new}")?,
            }
        }
        Ok(())
    }
}

/// The delta that turns `old` into `new`. Operations come grouped in
/// application order, each group sorted by id.
pub fn diff(old: &LabelledGraph, new: &LabelledGraph) -> GraphDelta {
    let mut remove_edges = Vec::new();
    let mut add_edges = Vec::new();
    let mut change_edges = Vec::new();
    for (id, e) in &old.edges {
        match new.edges.get(id) {
            Some(n) if n.ends == e.ends => {
                if n.label != e.label {
                    change_edges.push(DeltaOp::ChangeEdge {
                        id: id.clone(),
                        old: e.label.clone(),
                        new: n.label.clone(),
                    });
                }
            }
            Some(n) => {
                remove_edges.push(DeltaOp::RemoveEdge {
                    id: id.clone(),
                    edge: e.clone(),
                });
                add_edges.push(DeltaOp::AddEdge {
                    id: id.clone(),
                    edge: n.clone(),
                });
            }
            None => remove_edges.push(DeltaOp::RemoveEdge {
                id: id.clone(),
                edge: e.clone(),
            }),
        }
    }
    for (id, e) in &new.edges {
        if !old.edges.contains_key(id) {
            add_edges.push(DeltaOp::AddEdge {
                id: id.clone(),
                edge: e.clone(),
            });
        }
    }
    add_edges.sort_by(|a, b| op_id(a).cmp(op_id(b)));

    let mut remove_nodes = Vec::new();
    let mut add_nodes = Vec::new();
    let mut change_nodes = Vec::new();
    for (id, n) in &old.nodes {
        match new.nodes.get(id) {
            Some(m) if m != n => change_nodes.push(DeltaOp::ChangeNode {
                id: id.clone(),
                old: n.clone(),
                new: m.clone(),
            }),
            Some(_) => {}
            None => remove_nodes.push(DeltaOp::RemoveNode {
                id: id.clone(),
                node: n.clone(),
            }),
        }
    }
    for (id, n) in &new.nodes {
        if !old.nodes.contains_key(id) {
            add_nodes.push(DeltaOp::AddNode {
                id: id.clone(),
                node: n.clone(),
            });
        }
    }
    let mut ops = remove_edges;
    ops.extend(remove_nodes);
    ops.extend(add_nodes);
    ops.extend(change_nodes);
    ops.extend(add_edges);
    ops.extend(change_edges);
    GraphDelta { ops }
}

fn op_id(op: &DeltaOp) -> &str {
    match op {
        DeltaOp::RemoveEdge { id, .. }
        | DeltaOp::RemoveNode { id, .. }
        | DeltaOp::AddNode { id, .. }
        | DeltaOp::ChangeNode { id, .. }
        | DeltaOp::AddEdge { id, .. }
        | DeltaOp::ChangeEdge { id, .. } => id,
    }
}

/// Applies `delta` strictly: every removal and change must match the
/// current graph exactly, additions must be fresh, and wires must end on
/// present nodes after each step.
pub fn patch(g: &LabelledGraph, delta: &GraphDelta) -> Result<LabelledGraph, PatchError> {
    let mut g = g.clone();
    for op in &delta.ops {
        match op {
            DeltaOp::RemoveEdge { id, edge } => {
                if g.edges.get(id) != Some(edge) {
                    return Err(PatchError::RemoveMismatch(id.clone()));
                }
                g.edges.remove(id);
            }
            DeltaOp::RemoveNode { id, node } => {
                if g.nodes.get(id) != Some(node) {
                    return Err(PatchError::RemoveMismatch(id.clone()));
                }
                if let Some((eid, _)) = g.edges.iter().find(|(_, e)| e.ends.0 == *id || e.ends.1 == *id) {
                    return Err(PatchError::NodeInUse {
                        node: id.clone(),
                        edge: eid.clone(),
                    });
                }
                g.nodes.remove(id);
            }
            DeltaOp::AddNode { id, node } => {
                if g.nodes.contains_key(id) {
                    return Err(PatchError::AlreadyPresent(id.clone()));
                }
                g.nodes.insert(id.clone(), node.clone());
            }
            DeltaOp::ChangeNode { id, old, new } => match g.nodes.get_mut(id) {
                Some(n) if n == old => *n = new.clone(),
                _ => return Err(PatchError::ChangeMismatch(id.clone())),
            },
            DeltaOp::AddEdge { id, edge } => {
                if g.edges.contains_key(id) {
                    return Err(PatchError::AlreadyPresent(id.clone()));
                }
                for end in [&edge.ends.0, &edge.ends.1] {
                    if !g.nodes.contains_key(end) {
                        return Err(PatchError::DanglingEdge {
                            edge: id.clone(),
                            node: end.clone(),
                        });
                    }
                }
                g.edges.insert(id.clone(), edge.clone());
            }
            DeltaOp::ChangeEdge { id, old, new } => match g.edges.get_mut(id) {
                Some(e) if e.label == *old => e.label = new.clone(),
                _ => return Err(PatchError::ChangeMismatch(id.clone())),
            },
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_graph() -> impl Strategy<Value = LabelledGraph> {
        let node = (0u8..3, 0usize..5).prop_map(|(l, k)| GraphNode {
            label: format!("L{l}"),
            kind: NodeKind::ALL[k],
        });
        proptest::collection::btree_map(0u8..8, node, 0..8).prop_flat_map(|nodes| {
            let ids: Vec<String> = nodes.keys().map(|k| format!("m::n{k}")).collect();
            let nodes: std::collections::BTreeMap<String, GraphNode> =
                nodes.into_iter().map(|(k, v)| (format!("m::n{k}"), v)).collect();
            let n = ids.len();
            let edges = if n == 0 {
                Just(std::collections::BTreeMap::new()).boxed()
            } else {
                proptest::collection::btree_map(0u8..8, (0..n, 0..n, 0u8..3), 0..8)
                    .prop_map(move |m| {
                        m.into_iter()
                            .map(|(k, (a, b, l))| {
                                (
                                    format!("m::e{k}"),
                                    GraphEdge {
                                        ends: (ids[a].clone(), ids[b].clone()),
                                        label: format!("C{l}"),
                                    },
                                )
                            })
                            .collect()
                    })
                    .boxed()
            };
            edges.prop_map(move |edges| LabelledGraph {
                nodes: nodes.clone(),
                edges,
            })
        })
    }

    proptest! {
        #[test]
        fn patch_of_diff_reconstructs(a in arb_graph(), b in arb_graph()) {
            let d = diff(&a, &b);
            prop_assert_eq!(patch(&a, &d).unwrap(), b.clone());
            let reparsed = GraphDelta::parse(&d.to_string()).unwrap();
            prop_assert_eq!(&reparsed, &d);
            prop_assert!(diff(&b, &b).is_empty());
        }
    }

    #[test]
    fn patch_is_strict() {
        let d = GraphDelta::parse("+node m::a X internal\n+edge m::e m::a m::b C\n").unwrap();
        assert_eq!(
            patch(&LabelledGraph::default(), &d),
            Err(PatchError::DanglingEdge {
                edge: "m::e".into(),
                node: "m::b".into()
            })
        );
        let d = GraphDelta::parse("-node m::a Y internal\n").unwrap();
        let g = patch(&LabelledGraph::default(), &GraphDelta::parse("+node m::a X internal").unwrap()).unwrap();
        assert_eq!(patch(&g, &d), Err(PatchError::RemoveMismatch("m::a".into())));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = GraphDelta::parse("\n+node a X\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(GraphDelta::parse("*node a X internal").is_err());
        assert!(GraphDelta::parse("+node a X gadget").is_err());
    }
}
