//! Domain types for breeding environments, business configurations and
//! the task/VO modules they are assembled from.
//!
//! All values are immutable after construction. Names are plain strings;
//! cross references are resolved by lookup through [`ModelBundle`].

mod body;
mod spec;
mod validate;

use std::fmt;

pub use body::body;
pub use spec::{
    BehaviourFormula, ComponentSpec, Connector, FormulaDecl, GlueRule, Guard, GuardItem,
    InteractionDecl, InteractionKind, Param, SlaVarDecl, SpecKind,
};
pub use validate::{validate_business_configuration, validate_module, validate_vbe};

use crate::expr::{Dtype, EventExpr, Expr};
use crate::sla::ConstraintDef;
use crate::span::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeDecl {
    pub name: String,
    pub dtype: Dtype,
    pub unit: Option<String>,
    pub span: Span,
}

impl AttributeDecl {
    pub fn new(name: impl Into<String>, dtype: Dtype) -> Self {
        AttributeDecl {
            name: name.into(),
            dtype,
            unit: None,
            span: Span::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartnerKind {
    Persistent,
    Associate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partner {
    pub name: String,
    pub attributes: Vec<AttributeDecl>,
    pub persistence: PartnerKind,
    pub span: Span,
}

impl Partner {
    pub fn associate(name: impl Into<String>, attributes: Vec<AttributeDecl>) -> Self {
        Partner {
            name: name.into(),
            attributes,
            persistence: PartnerKind::Associate,
            span: Span::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResourceKind {
    Persistent,
    Transient,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceDecl {
    pub id: String,
    pub attributes: Vec<AttributeDecl>,
    pub persistence: ResourceKind,
    pub span: Span,
}

/// A first-order constraint over the attributes of the scoped partners and
/// resources, e.g. `vicinity over grandHO: grandHO.distanceKm <= 10`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyDecl {
    pub name: String,
    pub scope: Vec<String>,
    pub formula: Expr,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Provides,
    Requires,
    Serves,
    Uses,
    Internal,
}

impl NodeKind {
    pub const ALL: [NodeKind; 5] = [
        NodeKind::Provides,
        NodeKind::Requires,
        NodeKind::Serves,
        NodeKind::Uses,
        NodeKind::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Provides => "provides",
            NodeKind::Requires => "requires",
            NodeKind::Serves => "serves",
            NodeKind::Uses => "uses",
            NodeKind::Internal => "internal",
        }
    }

    pub fn from_name(s: &str) -> Option<NodeKind> {
        NodeKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    /// Name of the component specification labelling this node.
    pub label: String,
    pub span: Span,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind, label: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            kind,
            label: label.into(),
            span: Span::default(),
        }
    }
}

/// An undirected wire; direction lives in the connector roles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub ends: (String, String),
    /// Name of the connector labelling this wire.
    pub label: String,
    pub span: Span,
}

impl Edge {
    pub fn new(
        id: impl Into<String>,
        a: impl Into<String>,
        b: impl Into<String>,
        label: impl Into<String>,
    ) -> Self {
        Edge {
            id: id.into(),
            ends: (a.into(), b.into()),
            label: label.into(),
            span: Span::default(),
        }
    }

    pub fn touches(&self, node: &str) -> bool {
        self.ends.0 == node || self.ends.1 == node
    }
}

/// Labelled graph of a module. Node declarations are kept as written, so a
/// node id that appears under two kinds is representable and reported as a
/// disjointness violation rather than lost.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModuleGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl ModuleGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn ids_of(&self, kind: NodeKind) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(move |n| n.kind == kind)
            .map(|n| n.id.as_str())
    }
}

/// `serves N -> partner` or `uses N -> resource`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mapping {
    pub node: String,
    pub target: String,
    pub span: Span,
}

impl Mapping {
    pub fn new(node: impl Into<String>, target: impl Into<String>) -> Self {
        Mapping {
            node: node.into(),
            target: target.into(),
            span: Span::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskModule {
    pub name: String,
    pub graph: ModuleGraph,
    pub serves_map: Vec<Mapping>,
    pub uses_map: Vec<Mapping>,
    pub span: Span,
}

/// An event of a node's specification that triggers external service
/// discovery, e.g. `BA.findFlight.init!`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trigger {
    pub node: String,
    pub event: EventExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InternalPolicy {
    pub triggers: Vec<Trigger>,
    pub init_conditions: Vec<Expr>,
    pub term_conditions: Vec<Expr>,
}

/// `owner.var`, e.g. `TC.KD`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualifiedName {
    pub owner: String,
    pub var: String,
}

impl QualifiedName {
    pub fn new(owner: impl Into<String>, var: impl Into<String>) -> Self {
        QualifiedName {
            owner: owner.into(),
            var: var.into(),
        }
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.var)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExternalPolicy {
    pub sla_vars: Vec<QualifiedName>,
    /// Names of `POLICY` constraint blocks.
    pub constraints: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoModule {
    pub name: String,
    pub graph: ModuleGraph,
    pub serves_map: Vec<Mapping>,
    pub uses_map: Vec<Mapping>,
    pub internal: InternalPolicy,
    pub external: ExternalPolicy,
    pub span: Span,
}

impl VoModule {
    pub fn provides(&self) -> Option<&Node> {
        self.graph.nodes.iter().find(|n| n.kind == NodeKind::Provides)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Module {
    Task(TaskModule),
    Vo(VoModule),
}

impl Module {
    pub fn name(&self) -> &str {
        match self {
            Module::Task(t) => &t.name,
            Module::Vo(v) => &v.name,
        }
    }

    pub fn graph(&self) -> &ModuleGraph {
        match self {
            Module::Task(t) => &t.graph,
            Module::Vo(v) => &v.graph,
        }
    }

    pub fn serves_map(&self) -> &[Mapping] {
        match self {
            Module::Task(t) => &t.serves_map,
            Module::Vo(v) => &v.serves_map,
        }
    }

    pub fn uses_map(&self) -> &[Mapping] {
        match self {
            Module::Task(t) => &t.uses_map,
            Module::Vo(v) => &v.uses_map,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Module::Task(t) => t.span,
            Module::Vo(v) => v.span,
        }
    }

    pub fn is_vo(&self) -> bool {
        matches!(self, Module::Vo(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vbe {
    pub name: String,
    pub partners: Vec<Partner>,
    pub resources: Vec<ResourceDecl>,
    pub policies: Vec<PolicyDecl>,
    pub tasks: Vec<String>,
    pub span: Span,
}

impl Vbe {
    pub fn empty(name: impl Into<String>) -> Self {
        Vbe {
            name: name.into(),
            partners: Vec::new(),
            resources: Vec::new(),
            policies: Vec::new(),
            tasks: Vec::new(),
            span: Span::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct External {
    pub name: String,
    /// Specification that discovered providers must satisfy.
    pub spec: String,
    pub span: Span,
}

impl External {
    pub fn new(name: impl Into<String>, spec: impl Into<String>) -> Self {
        External {
            name: name.into(),
            spec: spec.into(),
            span: Span::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CustomerEntry {
    pub vo: String,
    pub spec: String,
    pub span: Span,
}

impl CustomerEntry {
    pub fn new(vo: impl Into<String>, spec: impl Into<String>) -> Self {
        CustomerEntry {
            vo: vo.into(),
            spec: spec.into(),
            span: Span::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BusinessConfiguration {
    pub name: String,
    pub base: String,
    pub associates: Vec<Partner>,
    pub transient_resources: Vec<ResourceDecl>,
    pub policies: Vec<PolicyDecl>,
    pub tasks: Vec<String>,
    pub vos: Vec<String>,
    pub externals: Vec<External>,
    pub customers: Vec<CustomerEntry>,
    pub span: Span,
}

impl BusinessConfiguration {
    pub fn empty(name: impl Into<String>, base: impl Into<String>) -> Self {
        BusinessConfiguration {
            name: name.into(),
            base: base.into(),
            associates: Vec::new(),
            transient_resources: Vec::new(),
            policies: Vec::new(),
            tasks: Vec::new(),
            vos: Vec::new(),
            externals: Vec::new(),
            customers: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn customer_of(&self, vo: &str) -> Option<&CustomerEntry> {
        self.customers.iter().find(|c| c.vo == vo)
    }
}

/// The parsed universe: one VBE plus everything defined alongside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelBundle {
    pub vbe: Vbe,
    pub configurations: Vec<BusinessConfiguration>,
    pub modules: Vec<Module>,
    pub specs: Vec<ComponentSpec>,
    pub connectors: Vec<Connector>,
    pub constraints: Vec<ConstraintDef>,
}

impl ModelBundle {
    pub fn new(vbe: Vbe) -> Self {
        ModelBundle {
            vbe,
            configurations: Vec::new(),
            modules: Vec::new(),
            specs: Vec::new(),
            connectors: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn configuration(&self, name: &str) -> Option<&BusinessConfiguration> {
        self.configurations.iter().find(|c| c.name == name)
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name() == name)
    }

    pub fn task_module(&self, name: &str) -> Option<&TaskModule> {
        match self.module(name) {
            Some(Module::Task(t)) => Some(t),
            _ => None,
        }
    }

    pub fn vo_module(&self, name: &str) -> Option<&VoModule> {
        match self.module(name) {
            Some(Module::Vo(v)) => Some(v),
            _ => None,
        }
    }

    pub fn spec(&self, name: &str) -> Option<&ComponentSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    pub fn connector(&self, name: &str) -> Option<&Connector> {
        self.connectors.iter().find(|c| c.name == name)
    }

    pub fn constraint(&self, name: &str) -> Option<&ConstraintDef> {
        self.constraints.iter().find(|c| c.name == name)
    }

    /// Returns a copy of the bundle with the named configuration replaced.
    pub fn with_configuration(&self, bc: BusinessConfiguration) -> ModelBundle {
        let mut out = self.clone();
        match out.configurations.iter_mut().find(|c| c.name == bc.name) {
            Some(slot) => *slot = bc,
            None => out.configurations.push(bc),
        }
        out
    }
}
