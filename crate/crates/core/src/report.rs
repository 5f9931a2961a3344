//! Validation findings.
//!
//! Validation never aborts: every check contributes zero or more
//! [`Finding`]s to a [`ValidationReport`], so a caller can show all problems
//! at once.

use std::fmt;

use crate::model::{self, ModelBundle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FindingCode {
    // VBE / configuration structure
    UnknownTask,
    UnknownModule,
    WrongModuleKind,
    UnknownEntity,
    UnboundPolicyVariable,
    DuplicateName,
    NameClash,
    EmptyEnum,
    UnknownVbe,
    UnknownPartner,
    UnknownResource,
    MissingCustomer,
    CustomerNotInjective,
    CustomerForUnknownVo,
    CustomerMismatch,
    UnmatchedRequires,
    // module graphs
    DisjointnessViolation,
    MultipleProvides,
    MissingProvides,
    ProvidesInTask,
    RequiresInTask,
    DuplicateId,
    DanglingEdge,
    UnknownSpec,
    UnknownConnector,
    UnmappedInterface,
    BadMapping,
    UnknownNode,
    UnknownSlaVariable,
    UnknownConstraint,
    // specifications and typing
    InvalidRange,
    InvalidParameters,
    UnknownInteraction,
    UnknownParameter,
    UnknownVariable,
    TypeMismatch,
    InvalidEventTag,
    EventDirection,
    GuardWithoutEvent,
    GlueMismatch,
    NonAffineGlue,
    // conversations
    ReplyBeforeInit,
    DuplicateInit,
    DuplicateReply,
    CommitBeforeReply,
    CancelBeforeReply,
    CommitCancelConflict,
    DuplicateCommit,
    DuplicateCancel,
    RevokeBeforeCommit,
    DuplicateRevoke,
    MissingParameter,
    UnexpectedParameter,
    ParameterType,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        use FindingCode::*;
        match self {
            UnknownTask => "UnknownTask",
            UnknownModule => "UnknownModule",
            WrongModuleKind => "WrongModuleKind",
            UnknownEntity => "UnknownEntity",
            UnboundPolicyVariable => "UnboundPolicyVariable",
            DuplicateName => "DuplicateName",
            NameClash => "NameClash",
            EmptyEnum => "EmptyEnum",
            UnknownVbe => "UnknownVbe",
            UnknownPartner => "UnknownPartner",
            UnknownResource => "UnknownResource",
            MissingCustomer => "MissingCustomer",
            CustomerNotInjective => "CustomerNotInjective",
            CustomerForUnknownVo => "CustomerForUnknownVo",
            CustomerMismatch => "CustomerMismatch",
            UnmatchedRequires => "UnmatchedRequires",
            DisjointnessViolation => "DisjointnessViolation",
            MultipleProvides => "MultipleProvides",
            MissingProvides => "MissingProvides",
            ProvidesInTask => "ProvidesInTask",
            RequiresInTask => "RequiresInTask",
            DuplicateId => "DuplicateId",
            DanglingEdge => "DanglingEdge",
            UnknownSpec => "UnknownSpec",
            UnknownConnector => "UnknownConnector",
            UnmappedInterface => "UnmappedInterface",
            BadMapping => "BadMapping",
            UnknownNode => "UnknownNode",
            UnknownSlaVariable => "UnknownSlaVariable",
            UnknownConstraint => "UnknownConstraint",
            InvalidRange => "InvalidRange",
            InvalidParameters => "InvalidParameters",
            UnknownInteraction => "UnknownInteraction",
            UnknownParameter => "UnknownParameter",
            UnknownVariable => "UnknownVariable",
            TypeMismatch => "TypeMismatch",
            InvalidEventTag => "InvalidEventTag",
            EventDirection => "EventDirection",
            GuardWithoutEvent => "GuardWithoutEvent",
            GlueMismatch => "GlueMismatch",
            NonAffineGlue => "NonAffineGlue",
            ReplyBeforeInit => "ReplyBeforeInit",
            DuplicateInit => "DuplicateInit",
            DuplicateReply => "DuplicateReply",
            CommitBeforeReply => "CommitBeforeReply",
            CancelBeforeReply => "CancelBeforeReply",
            CommitCancelConflict => "CommitCancelConflict",
            DuplicateCommit => "DuplicateCommit",
            DuplicateCancel => "DuplicateCancel",
            RevokeBeforeCommit => "RevokeBeforeCommit",
            DuplicateRevoke => "DuplicateRevoke",
            MissingParameter => "MissingParameter",
            UnexpectedParameter => "UnexpectedParameter",
            ParameterType => "ParameterType",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The element a finding is about. Every variant names an element (or a
/// reference entry) that is present in the input.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementRef {
    Vbe(String),
    Configuration(String),
    /// A partner or associate declared by a VBE or configuration.
    Partner { owner: String, name: String },
    Resource { owner: String, id: String },
    Attribute { owner: String, entity: String, name: String },
    Policy { owner: String, name: String },
    /// A task name listed by a VBE or configuration.
    TaskRef { owner: String, task: String },
    VoRef { config: String, vo: String },
    External { config: String, name: String },
    Customer { config: String, vo: String },
    Module(String),
    Node { module: String, node: String },
    Edge { module: String, edge: String },
    Mapping { module: String, node: String },
    Spec(String),
    Interaction { spec: String, name: String },
    SlaVar { spec: String, name: String },
    Formula { spec: String, index: usize },
    Connector(String),
    GlueRule { connector: String, index: usize },
    Constraint(String),
    /// An event of a trace, by index.
    TraceEvent(usize),
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ElementRef::*;
        match self {
            Vbe(n) => write!(f, "vbe {n}"),
            Configuration(n) => write!(f, "configuration {n}"),
            Partner { owner, name } => write!(f, "{owner} partner {name}"),
            Resource { owner, id } => write!(f, "{owner} resource {id}"),
            Attribute { owner, entity, name } => write!(f, "{owner} {entity}.{name}"),
            Policy { owner, name } => write!(f, "{owner} policy {name}"),
            TaskRef { owner, task } => write!(f, "{owner} task {task}"),
            VoRef { config, vo } => write!(f, "{config} vo {vo}"),
            External { config, name } => write!(f, "{config} external {name}"),
            Customer { config, vo } => write!(f, "{config} customer {vo}"),
            Module(n) => write!(f, "module {n}"),
            Node { module, node } => write!(f, "module {module} node {node}"),
            Edge { module, edge } => write!(f, "module {module} wire {edge}"),
            Mapping { module, node } => write!(f, "module {module} mapping {node}"),
            Spec(n) => write!(f, "spec {n}"),
            Interaction { spec, name } => write!(f, "spec {spec} interaction {name}"),
            SlaVar { spec, name } => write!(f, "spec {spec} sla {name}"),
            Formula { spec, index } => write!(f, "spec {spec} formula {}", index + 1),
            Connector(n) => write!(f, "connector {n}"),
            GlueRule { connector, index } => write!(f, "connector {connector} glue {}", index + 1),
            Constraint(n) => write!(f, "policy {n}"),
            TraceEvent(i) => write!(f, "event {i}"),
        }
    }
}

impl ElementRef {
    /// True when the element named by this reference is present in `bundle`.
    /// Trace events are never part of a bundle and always resolve.
    pub fn exists_in(&self, bundle: &ModelBundle) -> bool {
        use ElementRef::*;
        let partners_of = |owner: &str| -> Vec<&crate::model::Partner> {
            if bundle.vbe.name == owner {
                bundle.vbe.partners.iter().collect()
            } else {
                bundle
                    .configuration(owner)
                    .map(|c| c.associates.iter().collect())
                    .unwrap_or_default()
            }
        };
        let resources_of = |owner: &str| -> Vec<&crate::model::ResourceDecl> {
            if bundle.vbe.name == owner {
                bundle.vbe.resources.iter().collect()
            } else {
                bundle
                    .configuration(owner)
                    .map(|c| c.transient_resources.iter().collect())
                    .unwrap_or_default()
            }
        };
        match self {
            Vbe(n) => bundle.vbe.name == *n,
            Configuration(n) => bundle.configuration(n).is_some(),
            Partner { owner, name } => partners_of(owner).iter().any(|p| p.name == *name),
            Resource { owner, id } => resources_of(owner).iter().any(|r| r.id == *id),
            Attribute { owner, entity, name } => {
                partners_of(owner)
                    .iter()
                    .filter(|p| p.name == *entity)
                    .any(|p| p.attributes.iter().any(|a| a.name == *name))
                    || resources_of(owner)
                        .iter()
                        .filter(|r| r.id == *entity)
                        .any(|r| r.attributes.iter().any(|a| a.name == *name))
            }
            Policy { owner, name } => {
                if bundle.vbe.name == *owner {
                    bundle.vbe.policies.iter().any(|p| p.name == *name)
                } else {
                    bundle
                        .configuration(owner)
                        .is_some_and(|c| c.policies.iter().any(|p| p.name == *name))
                }
            }
            TaskRef { owner, task } => {
                if bundle.vbe.name == *owner {
                    bundle.vbe.tasks.contains(task)
                } else {
                    bundle
                        .configuration(owner)
                        .is_some_and(|c| c.tasks.contains(task))
                }
            }
            VoRef { config, vo } => bundle
                .configuration(config)
                .is_some_and(|c| c.vos.contains(vo)),
            External { config, name } => bundle
                .configuration(config)
                .is_some_and(|c| c.externals.iter().any(|e| e.name == *name)),
            Customer { config, vo } => bundle
                .configuration(config)
                .is_some_and(|c| c.customers.iter().any(|e| e.vo == *vo)),
            Module(n) => bundle.module(n).is_some(),
            Node { module, node } => bundle
                .module(module)
                .is_some_and(|m| m.graph().nodes.iter().any(|n| n.id == *node)),
            Edge { module, edge } => bundle
                .module(module)
                .is_some_and(|m| m.graph().edges.iter().any(|e| e.id == *edge)),
            Mapping { module, node } => bundle.module(module).is_some_and(|m| {
                m.serves_map()
                    .iter()
                    .chain(m.uses_map())
                    .any(|map| map.node == *node)
                    || match m {
                        model::Module::Vo(v) => v.internal.triggers.iter().any(|t| t.node == *node)
                            || v.external.sla_vars.iter().any(|q| q.owner == *node),
                        model::Module::Task(_) => false,
                    }
            }),
            Spec(n) => bundle.spec(n).is_some(),
            Interaction { spec, name } => bundle
                .spec(spec)
                .is_some_and(|s| s.interactions.iter().any(|i| i.name == *name)),
            SlaVar { spec, name } => bundle
                .spec(spec)
                .is_some_and(|s| s.sla_vars.iter().any(|v| v.name == *name)),
            Formula { spec, index } => bundle
                .spec(spec)
                .is_some_and(|s| *index < s.behaviour.len()),
            Connector(n) => bundle.connector(n).is_some(),
            GlueRule { connector, index } => bundle
                .connector(connector)
                .is_some_and(|c| *index < c.glue.len()),
            Constraint(n) => bundle.constraint(n).is_some(),
            TraceEvent(_) => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Finding {
    pub code: FindingCode,
    pub element: ElementRef,
    pub message: String,
}

impl Finding {
    pub fn new(code: FindingCode, element: ElementRef, message: impl Into<String>) -> Self {
        Finding {
            code,
            element,
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code, self.element, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn push(&mut self, code: FindingCode, element: ElementRef, message: impl Into<String>) {
        self.findings.push(Finding::new(code, element, message));
    }

    pub fn has(&self, code: FindingCode) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }

    pub fn codes(&self) -> Vec<FindingCode> {
        self.findings.iter().map(|f| f.code).collect()
    }

    /// Appends findings from `other` that are not already present.
    pub fn merge(&mut self, other: ValidationReport) {
        for f in other.findings {
            if !self.findings.contains(&f) {
                self.findings.push(f);
            }
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}
