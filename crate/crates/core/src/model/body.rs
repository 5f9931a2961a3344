use super::{Module, ModuleGraph, NodeKind};

/// The internal elements of a module: the full subgraph without the
/// provides node, the requires nodes and every wire touching them. Task
/// modules have neither, so their body is their graph.
pub fn body(m: &Module) -> ModuleGraph {
    let graph = m.graph();
    if !m.is_vo() {
        return graph.clone();
    }
    let dropped: Vec<&str> = graph
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Provides | NodeKind::Requires))
        .map(|n| n.id.as_str())
        .collect();
    let keep = |id: &str| !dropped.contains(&id);
    ModuleGraph {
        nodes: graph
            .nodes
            .iter()
            .filter(|n| keep(&n.id))
            .cloned()
            .collect(),
        edges: graph
            .edges
            .iter()
            .filter(|e| keep(&e.ends.0) && keep(&e.ends.1))
            .cloned()
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, ExternalPolicy, InternalPolicy, Node, TaskModule, VoModule};
    use crate::span::Span;

    fn vo(nodes: Vec<Node>, edges: Vec<Edge>) -> Module {
        Module::Vo(VoModule {
            name: "v".into(),
            graph: ModuleGraph { nodes, edges },
            serves_map: vec![],
            uses_map: vec![],
            internal: InternalPolicy::default(),
            external: ExternalPolicy::default(),
            span: Span::default(),
        })
    }

    #[test]
    fn body_of_travel_booking_shape() {
        let m = vo(
            vec![
                Node::new("TR", NodeKind::Provides, "Customer"),
                Node::new("TC", NodeKind::Serves, "TravelCoordinator"),
                Node::new("BA", NodeKind::Internal, "BookingAgent"),
                Node::new("RS", NodeKind::Uses, "Reservation"),
                Node::new("FA", NodeKind::Requires, "FlightAgent"),
            ],
            vec![
                Edge::new("CB", "TR", "BA", "c"),
                Edge::new("BC", "BA", "TC", "c"),
                Edge::new("BR", "BA", "RS", "c"),
                Edge::new("BF", "BA", "FA", "c"),
            ],
        );
        let b = body(&m);
        let ids: Vec<_> = b.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["TC", "BA", "RS"]);
        let edges: Vec<_> = b.edges.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(edges, ["BC", "BR"]);
    }

    #[test]
    fn empty_requires_drops_only_provides() {
        let m = vo(
            vec![
                Node::new("P", NodeKind::Provides, "S"),
                Node::new("I", NodeKind::Internal, "S"),
            ],
            vec![Edge::new("e", "P", "I", "c")],
        );
        let b = body(&m);
        assert_eq!(b.nodes.len(), 1);
        assert!(b.edges.is_empty());
    }

    #[test]
    fn task_body_is_identity() {
        let g = ModuleGraph {
            nodes: vec![
                Node::new("MN", NodeKind::Serves, "RegistryManager"),
                Node::new("MO", NodeKind::Internal, "ManagementOrchestrator"),
            ],
            edges: vec![Edge::new("RM", "MN", "MO", "RegistrationLink")],
        };
        let t = Module::Task(TaskModule {
            name: "managerRO".into(),
            graph: g.clone(),
            serves_map: vec![],
            uses_map: vec![],
            span: Span::default(),
        });
        assert_eq!(body(&t), g);
    }
}
