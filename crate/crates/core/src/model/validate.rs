//! Structural validation of VBEs, business configurations and modules.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    AttributeDecl, BusinessConfiguration, Mapping, Module, ModelBundle, NodeKind, Partner,
    PolicyDecl, ResourceDecl, Vbe, VoModule,
};
use crate::expr::Dtype;
use crate::report::{ElementRef, FindingCode, ValidationReport};

/// Checks the VBE invariants and every task module it lists.
pub fn validate_vbe(vbe: &Vbe, bundle: &ModelBundle) -> ValidationReport {
    let mut r = ValidationReport::new();
    let owner = vbe.name.as_str();
    let partners: Vec<&Partner> = vbe.partners.iter().collect();
    let resources: Vec<&ResourceDecl> = vbe.resources.iter().collect();

    check_entities(&mut r, owner, &partners, &resources, &[], &[]);
    check_policies(&mut r, owner, &vbe.policies, &partners, &resources);

    let mut seen = BTreeSet::new();
    for task in &vbe.tasks {
        let at = ElementRef::TaskRef {
            owner: owner.into(),
            task: task.clone(),
        };
        if !seen.insert(task) {
            r.push(FindingCode::DuplicateName, at, format!("task `{task}` listed twice"));
            continue;
        }
        match bundle.module(task) {
            None => r.push(FindingCode::UnknownTask, at, format!("no task module named `{task}`")),
            Some(Module::Vo(_)) => r.push(
                FindingCode::WrongModuleKind,
                at,
                format!("`{task}` is a VO module, not a task module"),
            ),
            Some(m) => {
                r.merge(validate_module(m, bundle));
                check_targets(&mut r, m, &partners, &resources);
            }
        }
    }
    r
}

/// Checks graph and module invariants: subset disjointness, the provides
/// rule, edge endpoints, labels, interface mappings and, for VO modules,
/// the internal and external configuration policies.
pub fn validate_module(m: &Module, bundle: &ModelBundle) -> ValidationReport {
    let mut r = ValidationReport::new();
    let name = m.name();
    let graph = m.graph();
    let node_at = |id: &str| ElementRef::Node {
        module: name.into(),
        node: id.into(),
    };

    // Kinds per node id; a node id declared under two kinds sits in two
    // distinguished subsets at once.
    let mut kinds: BTreeMap<&str, Vec<NodeKind>> = BTreeMap::new();
    for n in &graph.nodes {
        let entry = kinds.entry(n.id.as_str()).or_default();
        if entry.contains(&n.kind) {
            r.push(
                FindingCode::DuplicateId,
                node_at(&n.id),
                format!("node `{}` declared twice as {}", n.id, n.kind),
            );
        } else {
            entry.push(n.kind);
        }
    }
    for (id, ks) in &kinds {
        if ks.len() > 1 {
            let names: Vec<&str> = ks.iter().map(|k| k.as_str()).collect();
            r.push(
                FindingCode::DisjointnessViolation,
                node_at(id),
                format!("node `{id}` belongs to several interface sets: {}", names.join(", ")),
            );
        }
    }

    let provides: BTreeSet<&str> = graph.ids_of(NodeKind::Provides).collect();
    let requires: BTreeSet<&str> = graph.ids_of(NodeKind::Requires).collect();
    match m {
        Module::Task(_) => {
            for id in &provides {
                r.push(
                    FindingCode::ProvidesInTask,
                    node_at(id),
                    "task modules have no provides-interface",
                );
            }
            for id in &requires {
                r.push(
                    FindingCode::RequiresInTask,
                    node_at(id),
                    "task modules have no requires-interfaces",
                );
            }
        }
        Module::Vo(_) => match provides.len() {
            0 => r.push(
                FindingCode::MissingProvides,
                ElementRef::Module(name.into()),
                "a VO module needs exactly one provides-interface",
            ),
            1 => {}
            _ => {
                for id in provides.iter().skip(1) {
                    r.push(
                        FindingCode::MultipleProvides,
                        node_at(id),
                        "a VO module has exactly one provides-interface",
                    );
                }
            }
        },
    }

    let mut edge_ids = BTreeSet::new();
    for e in &graph.edges {
        let at = ElementRef::Edge {
            module: name.into(),
            edge: e.id.clone(),
        };
        if !edge_ids.insert(e.id.as_str()) {
            r.push(FindingCode::DuplicateId, at.clone(), format!("wire `{}` declared twice", e.id));
        }
        for end in [&e.ends.0, &e.ends.1] {
            if !kinds.contains_key(end.as_str()) {
                r.push(
                    FindingCode::DanglingEdge,
                    at.clone(),
                    format!("wire `{}` ends at unknown node `{end}`", e.id),
                );
            }
        }
        if bundle.connector(&e.label).is_none() {
            r.push(
                FindingCode::UnknownConnector,
                at,
                format!("no connector named `{}`", e.label),
            );
        }
    }
    for n in &graph.nodes {
        if bundle.spec(&n.label).is_none() {
            r.push(
                FindingCode::UnknownSpec,
                node_at(&n.id),
                format!("no component specification named `{}`", n.label),
            );
        }
    }

    check_mapping(&mut r, m, NodeKind::Serves, m.serves_map());
    check_mapping(&mut r, m, NodeKind::Uses, m.uses_map());

    if let Module::Vo(vo) = m {
        check_vo_policies(&mut r, vo, bundle);
    }
    r
}

fn check_mapping(r: &mut ValidationReport, m: &Module, kind: NodeKind, map: &[Mapping]) {
    let name = m.name();
    let graph = m.graph();
    let mut mapped = BTreeSet::new();
    for entry in map {
        let at = ElementRef::Mapping {
            module: name.into(),
            node: entry.node.clone(),
        };
        if !graph.nodes.iter().any(|n| n.id == entry.node && n.kind == kind) {
            r.push(
                FindingCode::BadMapping,
                at,
                format!("`{}` is not a {kind} node of `{name}`", entry.node),
            );
        } else if !mapped.insert(entry.node.as_str()) {
            r.push(
                FindingCode::DuplicateName,
                at,
                format!("{kind} node `{}` mapped twice", entry.node),
            );
        }
    }
    for id in graph.ids_of(kind) {
        if !mapped.contains(id) {
            r.push(
                FindingCode::UnmappedInterface,
                ElementRef::Node {
                    module: name.into(),
                    node: id.into(),
                },
                format!("{kind} node `{id}` has no mapping"),
            );
        }
    }
}

fn check_vo_policies(r: &mut ValidationReport, vo: &VoModule, bundle: &ModelBundle) {
    let name = vo.name.as_str();
    let mapping_at = |node: &str| ElementRef::Mapping {
        module: name.into(),
        node: node.into(),
    };
    let spec_of = |node: &str| {
        vo.graph
            .node(node)
            .and_then(|n| bundle.spec(&n.label))
    };

    for t in &vo.internal.triggers {
        let at = mapping_at(&t.node);
        let Some(node) = vo.graph.node(&t.node) else {
            r.push(FindingCode::UnknownNode, at, format!("trigger names unknown node `{}`", t.node));
            continue;
        };
        let Some(spec) = bundle.spec(&node.label) else {
            continue; // reported as UnknownSpec on the node
        };
        match spec.interaction(&t.event.interaction) {
            None => r.push(
                FindingCode::UnknownInteraction,
                at,
                format!("`{}` declares no interaction `{}`", spec.name, t.event.interaction),
            ),
            Some(i) if !i.kind.allows(t.event.tag) => r.push(
                FindingCode::InvalidEventTag,
                at,
                format!("{} interaction `{}` has no {} event", i.kind, i.name, t.event.tag),
            ),
            Some(i) if i.kind.direction_of(t.event.tag) != t.event.direction => r.push(
                FindingCode::EventDirection,
                at,
                format!("trigger `{}.{}` has the wrong polarity", t.node, t.event),
            ),
            Some(_) => {}
        }
    }

    let mut declared = BTreeSet::new();
    for q in &vo.external.sla_vars {
        let at = mapping_at(&q.owner);
        if !declared.insert(q.clone()) {
            r.push(FindingCode::DuplicateName, at, format!("SLA variable `{q}` listed twice"));
            continue;
        }
        if vo.graph.node(&q.owner).is_none() {
            r.push(FindingCode::UnknownNode, at, format!("`{q}` names unknown node `{}`", q.owner));
            continue;
        }
        if let Some(spec) = spec_of(&q.owner) {
            if spec.sla_var(&q.var).is_none() {
                r.push(
                    FindingCode::UnknownSlaVariable,
                    at,
                    format!("`{}` declares no SLA variable `{}`", spec.name, q.var),
                );
            }
        }
    }

    let mut listed = BTreeSet::new();
    for c in &vo.external.constraints {
        let at = ElementRef::Module(name.into());
        if !listed.insert(c) {
            r.push(FindingCode::DuplicateName, at, format!("constraint `{c}` listed twice"));
            continue;
        }
        let Some(def) = bundle.constraint(c) else {
            r.push(FindingCode::UnknownConstraint, at, format!("no POLICY named `{c}`"));
            continue;
        };
        for q in &def.scope {
            if !declared.contains(q) {
                r.push(
                    FindingCode::UnknownSlaVariable,
                    ElementRef::Constraint(def.name.clone()),
                    format!("`{q}` is not an SLA variable of VO `{name}`"),
                );
            }
        }
    }
}

/// Checks that the module's interface mappings land on the given partners
/// and resources.
fn check_targets(
    r: &mut ValidationReport,
    m: &Module,
    partners: &[&Partner],
    resources: &[&ResourceDecl],
) {
    for s in m.serves_map() {
        if !partners.iter().any(|p| p.name == s.target) {
            r.push(
                FindingCode::UnknownPartner,
                ElementRef::Mapping {
                    module: m.name().into(),
                    node: s.node.clone(),
                },
                format!("serves node `{}` maps to unknown partner `{}`", s.node, s.target),
            );
        }
    }
    for u in m.uses_map() {
        if !resources.iter().any(|res| res.id == u.target) {
            r.push(
                FindingCode::UnknownResource,
                ElementRef::Mapping {
                    module: m.name().into(),
                    node: u.node.clone(),
                },
                format!("uses node `{}` maps to unknown resource `{}`", u.node, u.target),
            );
        }
    }
}

fn check_attributes(r: &mut ValidationReport, owner: &str, entity: &str, attrs: &[AttributeDecl]) {
    let mut seen = BTreeSet::new();
    for a in attrs {
        let at = ElementRef::Attribute {
            owner: owner.into(),
            entity: entity.into(),
            name: a.name.clone(),
        };
        if !seen.insert(a.name.as_str()) {
            r.push(FindingCode::DuplicateName, at.clone(), format!("attribute `{}` declared twice", a.name));
        }
        if matches!(&a.dtype, Dtype::Enum(items) if items.is_empty()) {
            r.push(FindingCode::EmptyEnum, at, format!("attribute `{}` has an empty enum", a.name));
        }
    }
}

/// Duplicate and clash checks for the entities owned by `owner`. `outer_*`
/// are names already taken by the enclosing VBE.
fn check_entities(
    r: &mut ValidationReport,
    owner: &str,
    partners: &[&Partner],
    resources: &[&ResourceDecl],
    outer_partners: &[&Partner],
    outer_resources: &[&ResourceDecl],
) {
    let mut seen = BTreeSet::new();
    for p in partners {
        let at = ElementRef::Partner {
            owner: owner.into(),
            name: p.name.clone(),
        };
        if outer_partners.iter().any(|o| o.name == p.name) {
            r.push(
                FindingCode::NameClash,
                at,
                format!("associate `{}` clashes with a persistent partner", p.name),
            );
        } else if !seen.insert(p.name.as_str()) {
            r.push(FindingCode::DuplicateName, at, format!("partner `{}` declared twice", p.name));
        }
        check_attributes(r, owner, &p.name, &p.attributes);
    }
    let mut seen = BTreeSet::new();
    for res in resources {
        let at = ElementRef::Resource {
            owner: owner.into(),
            id: res.id.clone(),
        };
        if outer_resources.iter().any(|o| o.id == res.id) {
            r.push(
                FindingCode::NameClash,
                at,
                format!("transient resource `{}` clashes with a persistent resource", res.id),
            );
        } else if !seen.insert(res.id.as_str()) {
            r.push(FindingCode::DuplicateName, at, format!("resource `{}` declared twice", res.id));
        }
        check_attributes(r, owner, &res.id, &res.attributes);
    }
}

fn check_policies(
    r: &mut ValidationReport,
    owner: &str,
    policies: &[PolicyDecl],
    partners: &[&Partner],
    resources: &[&ResourceDecl],
) {
    let attrs_of = |entity: &str| -> Option<&[AttributeDecl]> {
        partners
            .iter()
            .find(|p| p.name == entity)
            .map(|p| p.attributes.as_slice())
            .or_else(|| {
                resources
                    .iter()
                    .find(|res| res.id == entity)
                    .map(|res| res.attributes.as_slice())
            })
    };
    let mut seen = BTreeSet::new();
    for p in policies {
        let at = ElementRef::Policy {
            owner: owner.into(),
            name: p.name.clone(),
        };
        if !seen.insert(p.name.as_str()) {
            r.push(FindingCode::DuplicateName, at.clone(), format!("policy `{}` declared twice", p.name));
        }
        for entity in &p.scope {
            if attrs_of(entity).is_none() {
                r.push(
                    FindingCode::UnknownEntity,
                    at.clone(),
                    format!("policy scope names unknown partner or resource `{entity}`"),
                );
            }
        }
        for path in p.formula.refs() {
            let bound = match path {
                [entity, attr] => {
                    p.scope.contains(entity)
                        && attrs_of(entity).is_some_and(|attrs| attrs.iter().any(|a| a.name == *attr))
                }
                _ => false,
            };
            if !bound {
                r.push(
                    FindingCode::UnboundPolicyVariable,
                    at.clone(),
                    format!(
                        "`{}` is not an attribute of an entity in scope",
                        path.join(".")
                    ),
                );
            }
        }
    }
}

/// Checks a configuration against its base VBE: associates and transient
/// resources, policies, listed tasks and VOs, externals and customers.
pub fn validate_business_configuration(
    bc: &BusinessConfiguration,
    bundle: &ModelBundle,
) -> ValidationReport {
    let mut r = ValidationReport::new();
    let owner = bc.name.as_str();
    let vbe = &bundle.vbe;
    if bc.base != vbe.name {
        r.push(
            FindingCode::UnknownVbe,
            ElementRef::Configuration(owner.into()),
            format!("configuration extends `{}` but the bundle's VBE is `{}`", bc.base, vbe.name),
        );
    }

    let vbe_partners: Vec<&Partner> = vbe.partners.iter().collect();
    let vbe_resources: Vec<&ResourceDecl> = vbe.resources.iter().collect();
    let associates: Vec<&Partner> = bc.associates.iter().collect();
    let transient: Vec<&ResourceDecl> = bc.transient_resources.iter().collect();
    check_entities(&mut r, owner, &associates, &transient, &vbe_partners, &vbe_resources);

    let all_partners: Vec<&Partner> = vbe_partners.iter().chain(&associates).copied().collect();
    let all_resources: Vec<&ResourceDecl> = vbe_resources.iter().chain(&transient).copied().collect();
    check_policies(&mut r, owner, &bc.policies, &all_partners, &all_resources);

    let mut seen = BTreeSet::new();
    for task in &bc.tasks {
        let at = ElementRef::TaskRef {
            owner: owner.into(),
            task: task.clone(),
        };
        if vbe.tasks.contains(task) || !seen.insert(task) {
            r.push(FindingCode::DuplicateName, at, format!("task `{task}` listed twice"));
            continue;
        }
        match bundle.module(task) {
            None => r.push(FindingCode::UnknownTask, at, format!("no task module named `{task}`")),
            Some(Module::Vo(_)) => r.push(
                FindingCode::WrongModuleKind,
                at,
                format!("`{task}` is a VO module, not a task module"),
            ),
            Some(m) => {
                r.merge(validate_module(m, bundle));
                check_targets(&mut r, m, &all_partners, &all_resources);
            }
        }
    }

    let mut seen = BTreeSet::new();
    let mut vos: Vec<&VoModule> = Vec::new();
    for vo in &bc.vos {
        let at = ElementRef::VoRef {
            config: owner.into(),
            vo: vo.clone(),
        };
        if !seen.insert(vo) {
            r.push(FindingCode::DuplicateName, at, format!("VO `{vo}` listed twice"));
            continue;
        }
        match bundle.module(vo) {
            None => r.push(FindingCode::UnknownModule, at, format!("no VO module named `{vo}`")),
            Some(Module::Task(_)) => r.push(
                FindingCode::WrongModuleKind,
                at,
                format!("`{vo}` is a task module, not a VO module"),
            ),
            Some(m @ Module::Vo(v)) => {
                r.merge(validate_module(m, bundle));
                check_targets(&mut r, m, &all_partners, &all_resources);
                vos.push(v);
            }
        }
    }

    // Customers: total and injective on the VOs.
    let mut by_vo: BTreeMap<&str, usize> = BTreeMap::new();
    let mut by_spec: BTreeMap<&str, &str> = BTreeMap::new();
    for c in &bc.customers {
        let at = ElementRef::Customer {
            config: owner.into(),
            vo: c.vo.clone(),
        };
        *by_vo.entry(c.vo.as_str()).or_default() += 1;
        if by_vo[c.vo.as_str()] > 1 {
            r.push(FindingCode::DuplicateName, at, format!("VO `{}` has two customer entries", c.vo));
            continue;
        }
        if !bc.vos.contains(&c.vo) {
            r.push(
                FindingCode::CustomerForUnknownVo,
                at.clone(),
                format!("customer entry for `{}`, which is not a VO of this configuration", c.vo),
            );
        }
        if bundle.spec(&c.spec).is_none() {
            r.push(FindingCode::UnknownSpec, at.clone(), format!("no component specification named `{}`", c.spec));
        }
        if let Some(prev) = by_spec.insert(c.spec.as_str(), c.vo.as_str()) {
            r.push(
                FindingCode::CustomerNotInjective,
                at.clone(),
                format!("`{}` is already the customer of `{prev}`", c.spec),
            );
        }
        if let Some(p) = bundle.vo_module(&c.vo).and_then(|v| v.provides()) {
            if p.label != c.spec {
                r.push(
                    FindingCode::CustomerMismatch,
                    at,
                    format!("customer `{}` differs from the provides-interface `{}`", c.spec, p.label),
                );
            }
        }
    }
    for vo in &bc.vos {
        if !by_vo.contains_key(vo.as_str()) {
            r.push(
                FindingCode::MissingCustomer,
                ElementRef::VoRef {
                    config: owner.into(),
                    vo: vo.clone(),
                },
                format!("VO `{vo}` has no customer"),
            );
        }
    }

    let mut seen = BTreeSet::new();
    for e in &bc.externals {
        let at = ElementRef::External {
            config: owner.into(),
            name: e.name.clone(),
        };
        if all_partners.iter().any(|p| p.name == e.name) {
            r.push(FindingCode::NameClash, at.clone(), format!("external `{}` clashes with a partner", e.name));
        } else if !seen.insert(e.name.as_str()) {
            r.push(FindingCode::DuplicateName, at.clone(), format!("external `{}` declared twice", e.name));
        }
        if bundle.spec(&e.spec).is_none() {
            r.push(FindingCode::UnknownSpec, at, format!("no component specification named `{}`", e.spec));
        }
    }
    for v in vos {
        for n in v.graph.nodes.iter().filter(|n| n.kind == NodeKind::Requires) {
            if !bc.externals.iter().any(|e| e.spec == n.label) {
                r.push(
                    FindingCode::UnmatchedRequires,
                    ElementRef::Node {
                        module: v.name.clone(),
                        node: n.id.clone(),
                    },
                    format!("no external entity of type `{}` for requires node `{}`", n.label, n.id),
                );
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_bundle;
    use crate::report::FindingCode::*;

    const BASE: &str = "
BUSINESS ROLE S is
END

BUSINESS PROTOCOL C is
END

CONNECTOR L is
END
";

    fn bundle(text: &str) -> ModelBundle {
        parse_bundle(&format!("{text}\n{BASE}")).unwrap()
    }

    fn codes(r: &ValidationReport) -> BTreeSet<FindingCode> {
        r.codes().into_iter().collect()
    }

    #[test]
    fn vbe_task_list() {
        let b = bundle(
            "VBE v is
  partner p;
  partner p;
  task t;
  task t;
  task gone;
  task o;
END
TASK MODULE t is
  node A: serves S;
  serves A -> nobody;
END
VO MODULE o is
  node P: provides C;
END",
        );
        let got = codes(&validate_vbe(&b.vbe, &b));
        for c in [DuplicateName, UnknownTask, WrongModuleKind, UnknownPartner] {
            assert!(got.contains(&c), "{c:?} missing from {got:?}");
        }
    }

    #[test]
    fn module_structure() {
        let b = bundle(
            "VBE v is
END
VO MODULE twice is
  node P: provides C;
  node Q: provides C;
  node A: internal S;
  node A: uses S;
  node U: uses S;
  node W: serves Nope;
  wire E: A <-> X via L;
  wire E: A <-> P via Missing;
  uses U -> r;
  uses A -> r;
  serves U -> p;
END
VO MODULE none is
  node A: internal S;
END
TASK MODULE task is
  node P: provides C;
  node R: requires C;
END",
        );
        let got = codes(&validate_module(b.module("twice").unwrap(), &b));
        let want = [
            MultipleProvides,
            DisjointnessViolation,
            DuplicateId,
            DanglingEdge,
            UnknownConnector,
            UnknownSpec,
            BadMapping,
            UnmappedInterface,
        ];
        assert_eq!(got, want.into_iter().collect());
        assert_eq!(codes(&validate_module(b.module("none").unwrap(), &b)), [MissingProvides].into());
        assert_eq!(
            codes(&validate_module(b.module("task").unwrap(), &b)),
            [ProvidesInTask, RequiresInTask].into()
        );
    }

    #[test]
    fn configuration_customers_and_externals() {
        let b = bundle(
            "VBE v is
  partner p;
END
BUSINESS CONFIGURATION bc of v is
  vo a;
  vo b;
  vo a;
  external p: C;
  external e: Nowhere;
  customer a: S;
  customer ghost: C;
  customer ghost: C;
END
VO MODULE a is
  node P: provides C;
  node R: requires S;
  wire PR: P <-> R via L;
END
VO MODULE b is
  node P: provides C;
END",
        );
        let got = codes(&validate_business_configuration(b.configuration("bc").unwrap(), &b));
        for c in [
            DuplicateName,
            CustomerMismatch,
            CustomerForUnknownVo,
            MissingCustomer,
            NameClash,
            UnknownSpec,
            UnmatchedRequires,
        ] {
            assert!(got.contains(&c), "{c:?} missing from {got:?}");
        }
        let other = BusinessConfiguration::empty("other", "w");
        assert_eq!(codes(&validate_business_configuration(&other, &b)), [UnknownVbe].into());
    }

    #[test]
    fn customers_are_injective() {
        let b = bundle(
            "VBE v is
END
BUSINESS CONFIGURATION bc of v is
  vo a;
  vo b;
  customer a: C;
  customer b: C;
END
VO MODULE a is
  node P: provides C;
END
VO MODULE b is
  node P: provides C;
END",
        );
        let r = validate_business_configuration(b.configuration("bc").unwrap(), &b);
        assert_eq!(r.codes(), vec![CustomerNotInjective]);
    }
}
