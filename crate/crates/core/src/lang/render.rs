//! Canonical pretty-printer. Parsing the output yields the same model.

use std::fmt::Write as _;

use crate::expr::{quote_str, Dtype, PREC_AND};
use crate::graph::EvolutionAction;
use crate::model::{
    AttributeDecl, BehaviourFormula, BusinessConfiguration, ComponentSpec, Connector, External,
    Guard, GuardItem, InteractionDecl, ModelBundle, Module, Param, Partner, PolicyDecl,
    QualifiedName, ResourceDecl, Vbe,
};
use crate::sla::ConstraintDef;

/// Renders a bundle in canonical form: the VBE, then configurations,
/// modules, specifications, connectors and `POLICY` blocks, separated by
/// blank lines.
pub fn render(bundle: &ModelBundle) -> String {
    let mut blocks = vec![render_vbe(&bundle.vbe)];
    blocks.extend(bundle.configurations.iter().map(render_configuration));
    blocks.extend(bundle.modules.iter().map(render_module));
    blocks.extend(bundle.specs.iter().map(render_spec));
    blocks.extend(bundle.connectors.iter().map(render_connector));
    blocks.extend(bundle.constraints.iter().map(render_policy));
    blocks.join("\n")
}

pub fn render_policies(defs: &[ConstraintDef]) -> String {
    defs.iter().map(render_policy).collect::<Vec<_>>().join("\n")
}

pub fn render_actions(actions: &[EvolutionAction]) -> String {
    let mut out = String::new();
    for a in actions {
        match a {
            EvolutionAction::RemoveVo(n) => writeln!(out, "remove vo {n};"),
            EvolutionAction::RemoveTask(n) => writeln!(out, "remove task {n};"),
            EvolutionAction::RemoveAssociate(n) => writeln!(out, "remove associate {n};"),
            EvolutionAction::AddVo {
                vo,
                customer,
                externals,
                associates,
                policies,
            } => {
                write!(out, "add vo {vo} customer {customer}").unwrap();
                let mut items = String::new();
                for e in externals {
                    external(&mut items, "  ", e);
                }
                for p in associates {
                    entity(&mut items, "  ", "associate", &p.name, &p.attributes);
                }
                for p in policies {
                    policy_decl(&mut items, "  ", p);
                }
                with_block(&mut out, &items, true);
                Ok(())
            }
            EvolutionAction::AddTask { task, associates } => {
                write!(out, "add task {task}").unwrap();
                let mut items = String::new();
                for p in associates {
                    entity(&mut items, "  ", "associate", &p.name, &p.attributes);
                }
                with_block(&mut out, &items, true);
                Ok(())
            }
            EvolutionAction::AddAssociate { partner, resources } => {
                write!(out, "add associate {}", partner.name).unwrap();
                let has_attrs = !partner.attributes.is_empty();
                if has_attrs {
                    out.push_str(" {\n");
                    attributes(&mut out, "  ", &partner.attributes);
                    out.push('}');
                }
                let mut items = String::new();
                for r in resources {
                    entity(&mut items, "  ", "resource", &r.id, &r.attributes);
                }
                with_block(&mut out, &items, !has_attrs);
                Ok(())
            }
        }
        .unwrap();
    }
    out
}

fn with_block(out: &mut String, items: &str, semi: bool) {
    if items.is_empty() {
        out.push_str(if semi { ";\n" } else { "\n" });
    } else {
        out.push_str(" with {\n");
        out.push_str(items);
        out.push_str("}\n");
    }
}

fn attributes(out: &mut String, indent: &str, attrs: &[AttributeDecl]) {
    for a in attrs {
        write!(out, "{indent}  {}: {}", a.name, a.dtype).unwrap();
        if let Some(u) = &a.unit {
            write!(out, " unit {}", quote_str(u)).unwrap();
        }
        out.push_str(";\n");
    }
}

fn entity(out: &mut String, indent: &str, kw: &str, name: &str, attrs: &[AttributeDecl]) {
    write!(out, "{indent}{kw} {name}").unwrap();
    if attrs.is_empty() {
        out.push_str(";\n");
    } else {
        out.push_str(" {\n");
        attributes(out, indent, attrs);
        writeln!(out, "{indent}}}").unwrap();
    }
}

fn partners(out: &mut String, kw: &str, ps: &[Partner]) {
    for p in ps {
        entity(out, "  ", kw, &p.name, &p.attributes);
    }
}

fn resources(out: &mut String, rs: &[ResourceDecl]) {
    for r in rs {
        entity(out, "  ", "resource", &r.id, &r.attributes);
    }
}

fn policy_decl(out: &mut String, indent: &str, p: &PolicyDecl) {
    writeln!(
        out,
        "{indent}policy {} over {}: {};",
        p.name,
        p.scope.join(", "),
        p.formula
    )
    .unwrap();
}

fn external(out: &mut String, indent: &str, e: &External) {
    writeln!(out, "{indent}external {}: {};", e.name, e.spec).unwrap();
}

fn render_vbe(v: &Vbe) -> String {
    let mut out = format!("VBE {} is\n", v.name);
    partners(&mut out, "partner", &v.partners);
    resources(&mut out, &v.resources);
    for p in &v.policies {
        policy_decl(&mut out, "  ", p);
    }
    for t in &v.tasks {
        writeln!(out, "  task {t};").unwrap();
    }
    out.push_str("END\n");
    out
}

fn render_configuration(bc: &BusinessConfiguration) -> String {
    let mut out = format!("BUSINESS CONFIGURATION {} of {} is\n", bc.name, bc.base);
    partners(&mut out, "associate", &bc.associates);
    resources(&mut out, &bc.transient_resources);
    for p in &bc.policies {
        policy_decl(&mut out, "  ", p);
    }
    for t in &bc.tasks {
        writeln!(out, "  task {t};").unwrap();
    }
    for v in &bc.vos {
        writeln!(out, "  vo {v};").unwrap();
    }
    for e in &bc.externals {
        external(&mut out, "  ", e);
    }
    for c in &bc.customers {
        writeln!(out, "  customer {}: {};", c.vo, c.spec).unwrap();
    }
    out.push_str("END\n");
    out
}

fn render_module(m: &Module) -> String {
    let kw = if m.is_vo() { "VO" } else { "TASK" };
    let mut out = format!("{kw} MODULE {} is\n", m.name());
    let g = m.graph();
    for n in &g.nodes {
        writeln!(out, "  node {}: {} {};", n.id, n.kind, n.label).unwrap();
    }
    for e in &g.edges {
        writeln!(out, "  wire {}: {} <-> {} via {};", e.id, e.ends.0, e.ends.1, e.label).unwrap();
    }
    for s in m.serves_map() {
        writeln!(out, "  serves {} -> {};", s.node, s.target).unwrap();
    }
    for u in m.uses_map() {
        writeln!(out, "  uses {} -> {};", u.node, u.target).unwrap();
    }
    if let Module::Vo(vo) = m {
        for t in &vo.internal.triggers {
            writeln!(out, "  trigger {}.{};", t.node, t.event).unwrap();
        }
        for c in &vo.internal.init_conditions {
            writeln!(out, "  start when {c};").unwrap();
        }
        for c in &vo.internal.term_conditions {
            writeln!(out, "  stop when {c};").unwrap();
        }
        if !vo.external.sla_vars.is_empty() {
            writeln!(out, "  sla {};", qualified_list(&vo.external.sla_vars)).unwrap();
        }
        for c in &vo.external.constraints {
            writeln!(out, "  constraint {c};").unwrap();
        }
    }
    out.push_str("END\n");
    out
}

fn qualified_list(qs: &[QualifiedName]) -> String {
    qs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// `a, b: string, c: date`, merging runs of the same type.
fn param_groups(ps: &[Param]) -> String {
    let mut groups: Vec<(Vec<&str>, &Dtype)> = Vec::new();
    for p in ps {
        match groups.last_mut() {
            Some((names, d)) if **d == p.dtype => names.push(&p.name),
            _ => groups.push((vec![&p.name], &p.dtype)),
        }
    }
    groups
        .iter()
        .map(|(names, d)| format!("{}: {d}", names.join(", ")))
        .collect::<Vec<_>>()
        .join(", ")
}

fn interactions(out: &mut String, indent: &str, is: &[InteractionDecl]) {
    for i in is {
        writeln!(out, "{indent}{} {}", i.kind, i.name).unwrap();
        if !i.snd_params.is_empty() {
            writeln!(out, "{indent}  init {};", param_groups(&i.snd_params)).unwrap();
        }
        if !i.rcv_params.is_empty() {
            writeln!(out, "{indent}  reply {};", param_groups(&i.rcv_params)).unwrap();
        }
    }
}

fn guard(g: &Guard) -> String {
    let item = |i: &GuardItem, min: u8| match i {
        GuardItem::Event(e) => e.to_string(),
        GuardItem::Pred(p) => p.display_at(min),
    };
    match g.0.as_slice() {
        [one] => item(one, 0),
        many => format!(
            "({})",
            many.iter()
                .map(|i| item(i, PREC_AND + 1))
                .collect::<Vec<_>>()
                .join(" and ")
        ),
    }
}

pub(crate) fn formula(f: &BehaviourFormula) -> String {
    match f {
        BehaviourFormula::InitiallyEnabled(e) => format!("initiallyEnabled {e}"),
        BehaviourFormula::Ensures { guard: g, consequent } => {
            format!("{} ensures {consequent}", guard(g))
        }
        BehaviourFormula::EnablesUntil {
            guard: g,
            enabled,
            until,
        } => format!("{} enables {enabled} until {until}", guard(g)),
        BehaviourFormula::After { pred, anchor } => format!("{pred} after {anchor}"),
    }
}

fn render_spec(s: &ComponentSpec) -> String {
    let mut out = format!("{} {} is\n", s.kind.keyword(), s.name);
    if !s.interactions.is_empty() {
        out.push_str("  INTERACTIONS\n");
        interactions(&mut out, "    ", &s.interactions);
    }
    if !s.sla_vars.is_empty() {
        out.push_str("  SLA VARIABLES\n");
        let vars: Vec<String> = s
            .sla_vars
            .iter()
            .map(|v| format!("{}: [{}..{}]", v.name, v.lo, v.hi))
            .collect();
        writeln!(out, "    {};", vars.join(", ")).unwrap();
    }
    if !s.behaviour.is_empty() {
        out.push_str("  BEHAVIOUR\n");
        for f in &s.behaviour {
            writeln!(out, "    {};", formula(&f.formula)).unwrap();
        }
    }
    out.push_str("END\n");
    out
}

fn render_connector(c: &Connector) -> String {
    let mut out = format!("CONNECTOR {} is\n", c.name);
    if !c.role_a.is_empty() {
        out.push_str("  ROLE A\n");
        interactions(&mut out, "    ", &c.role_a);
    }
    if !c.role_b.is_empty() {
        out.push_str("  ROLE B\n");
        interactions(&mut out, "    ", &c.role_b);
    }
    if !c.glue.is_empty() {
        out.push_str("  GLUE\n");
        for g in &c.glue {
            write!(
                out,
                "    A.{}.{} -> B.{}.{}",
                g.a_interaction, g.a_tag, g.b_interaction, g.b_tag
            )
            .unwrap();
            if !g.translations.is_empty() {
                let ts: Vec<String> = g
                    .translations
                    .iter()
                    .map(|(p, e)| format!("{p} = {e}"))
                    .collect();
                write!(out, " with {}", ts.join(", ")).unwrap();
            }
            out.push_str(";\n");
        }
    }
    out.push_str("END\n");
    out
}

fn render_policy(c: &ConstraintDef) -> String {
    let mut out = format!("POLICY {} {{\n", c.name);
    writeln!(out, "  scope: {};", qualified_list(&c.scope)).unwrap();
    writeln!(out, "  semiring: {};", c.semiring.name()).unwrap();
    if c.params.is_empty() {
        writeln!(out, "  def: {};", c.def).unwrap();
    } else {
        writeln!(out, "  def({}): {};", c.params.join(", "), c.def).unwrap();
    }
    out.push_str("}\n");
    out
}
