//! Name resolution and typing for everything that carries expressions:
//! specifications, attribute policies, VO start/stop conditions, connector
//! glue and `POLICY` constraint definitions.

use std::collections::BTreeSet;

use crate::expr::{infer, BinOp, Dtype, Expr, Issue, Ty, TypeEnv, UnOp};
use crate::model::{
    AttributeDecl, ComponentSpec, Connector, InteractionDecl, ModelBundle, Module, Partner,
    PolicyDecl, ResourceDecl, VoModule,
};
use crate::report::{ElementRef, FindingCode, ValidationReport};
use crate::sla::{ConstraintDef, SemiringKind};

/// Typechecks every expression-bearing element of the bundle.
pub fn typecheck(bundle: &ModelBundle) -> ValidationReport {
    let mut r = ValidationReport::new();
    for s in &bundle.specs {
        check_spec(&mut r, s);
    }
    let vbe = &bundle.vbe;
    let partners: Vec<&Partner> = vbe.partners.iter().collect();
    let resources: Vec<&ResourceDecl> = vbe.resources.iter().collect();
    check_entity_policies(&mut r, &vbe.name, &vbe.policies, &partners, &resources);
    for bc in &bundle.configurations {
        let mut ps = partners.clone();
        ps.extend(&bc.associates);
        let mut rs = resources.clone();
        rs.extend(&bc.transient_resources);
        check_entity_policies(&mut r, &bc.name, &bc.policies, &ps, &rs);
    }
    for m in &bundle.modules {
        if let Module::Vo(vo) = m {
            check_vo_conditions(&mut r, vo, bundle);
        }
    }
    for c in &bundle.connectors {
        check_connector(&mut r, c);
    }
    for d in &bundle.constraints {
        check_constraint(&mut r, d);
    }
    r
}

fn push_issues(r: &mut ValidationReport, at: &ElementRef, issues: Vec<Issue>) {
    for (code, msg) in issues {
        r.push(code, at.clone(), msg);
    }
}

/// Infers `e` and requires a boolean result.
fn check_bool(r: &mut ValidationReport, at: &ElementRef, e: &Expr, env: &dyn TypeEnv, what: &str) {
    let mut issues = Vec::new();
    let t = infer(e, env, &mut issues);
    push_issues(r, at, issues);
    if let Some(t) = t {
        if t != Ty::Bool {
            r.push(
                FindingCode::TypeMismatch,
                at.clone(),
                format!("{what} `{e}` has type {t}, expected bool"),
            );
        }
    }
}

struct SpecEnv<'a>(&'a ComponentSpec);

impl TypeEnv for SpecEnv<'_> {
    fn resolve(&self, path: &[String]) -> Result<Ty, Issue> {
        let spec = self.0;
        match path {
            [one] if one == "today" => Ok(Ty::Date),
            [one] if spec.sla_var(one).is_some() => Ok(Ty::Int),
            [interaction, param] => {
                let Some(i) = spec.interaction(interaction) else {
                    return Err((
                        FindingCode::UnknownInteraction,
                        format!("`{interaction}` is not an interaction of {}", spec.name),
                    ));
                };
                i.param(param).map(|p| Ty::from(&p.dtype)).ok_or_else(|| {
                    (
                        FindingCode::UnknownParameter,
                        format!("interaction `{interaction}` has no parameter `{param}`"),
                    )
                })
            }
            _ => Err((
                FindingCode::UnknownVariable,
                format!("`{}` is not a parameter, SLA variable or `today`", path.join(".")),
            )),
        }
    }
}

fn check_interactions(r: &mut ValidationReport, at: impl Fn(&str) -> ElementRef, is: &[InteractionDecl]) {
    let mut names = BTreeSet::new();
    for i in is {
        let here = at(&i.name);
        if !names.insert(i.name.as_str()) {
            r.push(FindingCode::DuplicateName, here.clone(), format!("interaction `{}` declared twice", i.name));
        }
        if !i.rcv_params.is_empty() && !i.kind.has_reply() {
            r.push(
                FindingCode::InvalidParameters,
                here.clone(),
                format!("`{}` interactions have no reply, so cannot declare reply parameters", i.kind),
            );
        }
        let mut params = BTreeSet::new();
        for p in i.snd_params.iter().chain(&i.rcv_params) {
            if !params.insert(p.name.as_str()) {
                r.push(
                    FindingCode::DuplicateName,
                    here.clone(),
                    format!("parameter `{}` declared twice", p.name),
                );
            }
            if p.dtype == Dtype::Enum(Vec::new()) {
                r.push(FindingCode::EmptyEnum, here.clone(), format!("parameter `{}` has an empty enum", p.name));
            }
        }
    }
}

fn check_spec(r: &mut ValidationReport, s: &ComponentSpec) {
    check_interactions(
        r,
        |name| ElementRef::Interaction {
            spec: s.name.clone(),
            name: name.into(),
        },
        &s.interactions,
    );
    let mut vars = BTreeSet::new();
    for v in &s.sla_vars {
        let at = ElementRef::SlaVar {
            spec: s.name.clone(),
            name: v.name.clone(),
        };
        if !vars.insert(v.name.as_str()) {
            r.push(FindingCode::DuplicateName, at.clone(), format!("SLA variable `{}` declared twice", v.name));
        }
        if v.lo > v.hi {
            r.push(FindingCode::InvalidRange, at, format!("empty range [{}..{}]", v.lo, v.hi));
        }
    }
    let env = SpecEnv(s);
    for (index, f) in s.behaviour.iter().enumerate() {
        use crate::model::BehaviourFormula as F;
        let at = ElementRef::Formula {
            spec: s.name.clone(),
            index,
        };
        for ev in f.formula.events() {
            let Some(i) = s.interaction(&ev.interaction) else {
                r.push(
                    FindingCode::UnknownInteraction,
                    at.clone(),
                    format!("`{}` is not an interaction of {}", ev.interaction, s.name),
                );
                continue;
            };
            if !i.kind.allows(ev.tag) {
                r.push(
                    FindingCode::InvalidEventTag,
                    at.clone(),
                    format!("`{}` interactions have no `{}` event", i.kind, ev.tag),
                );
                continue;
            }
            let expected = i.kind.direction_of(ev.tag);
            if ev.direction != expected {
                r.push(
                    FindingCode::EventDirection,
                    at.clone(),
                    format!(
                        "`{ev}` has the wrong polarity; {} declares it as `{}.{}{}`",
                        s.name,
                        ev.interaction,
                        ev.tag,
                        expected.symbol()
                    ),
                );
            }
        }
        let (guard, preds): (Option<&crate::model::Guard>, Vec<(&Expr, &str)>) = match &f.formula {
            F::InitiallyEnabled(_) => (None, vec![]),
            F::Ensures { guard, .. } => (Some(guard), vec![]),
            F::EnablesUntil { guard, until, .. } => (Some(guard), vec![(until, "`until` condition")]),
            F::After { pred, .. } => (None, vec![(pred, "predicate")]),
        };
        let mut preds = preds;
        if let Some(g) = guard {
            if g.events().next().is_none() {
                r.push(FindingCode::GuardWithoutEvent, at.clone(), "guard mentions no event");
            }
            preds.extend(g.preds().map(|p| (p, "guard predicate")));
        }
        for (p, what) in preds {
            check_bool(r, &at, p, &env, what);
        }
    }
}

struct PolicyEnv<'a> {
    scope: &'a [String],
    partners: &'a [&'a Partner],
    resources: &'a [&'a ResourceDecl],
}

impl PolicyEnv<'_> {
    fn attrs_of(&self, entity: &str) -> Option<&[AttributeDecl]> {
        self.partners
            .iter()
            .find(|p| p.name == entity)
            .map(|p| p.attributes.as_slice())
            .or_else(|| {
                self.resources
                    .iter()
                    .find(|r| r.id == entity)
                    .map(|r| r.attributes.as_slice())
            })
    }
}

impl TypeEnv for PolicyEnv<'_> {
    fn resolve(&self, path: &[String]) -> Result<Ty, Issue> {
        if let [entity, attr] = path {
            if self.scope.contains(entity) {
                if let Some(a) = self.attrs_of(entity).and_then(|attrs| attrs.iter().find(|a| a.name == *attr)) {
                    return Ok(Ty::from(&a.dtype));
                }
            }
        }
        Err((
            FindingCode::UnboundPolicyVariable,
            format!("`{}` is not an attribute of an entity in scope", path.join(".")),
        ))
    }
}

fn check_entity_policies(
    r: &mut ValidationReport,
    owner: &str,
    policies: &[PolicyDecl],
    partners: &[&Partner],
    resources: &[&ResourceDecl],
) {
    for p in policies {
        let at = ElementRef::Policy {
            owner: owner.into(),
            name: p.name.clone(),
        };
        let env = PolicyEnv {
            scope: &p.scope,
            partners,
            resources,
        };
        check_bool(r, &at, &p.formula, &env, "policy");
    }
}

struct VoEnv<'a> {
    vo: &'a VoModule,
    bundle: &'a ModelBundle,
}

impl TypeEnv for VoEnv<'_> {
    fn resolve(&self, path: &[String]) -> Result<Ty, Issue> {
        let unknown = || {
            Err((
                FindingCode::UnknownVariable,
                format!(
                    "`{}` is not `today`, a node's SLA variable or a node's interaction parameter",
                    path.join(".")
                ),
            ))
        };
        if let [one] = path {
            if one == "today" {
                return Ok(Ty::Date);
            }
        }
        let Some(node) = path.first().and_then(|n| self.vo.graph.node(n)) else {
            return unknown();
        };
        let Some(spec) = self.bundle.spec(&node.label) else {
            return unknown();
        };
        match &path[1..] {
            [var] if spec.sla_var(var).is_some() => Ok(Ty::Int),
            [interaction, param] => match spec.interaction(interaction).and_then(|i| i.param(param)) {
                Some(p) => Ok(Ty::from(&p.dtype)),
                None => unknown(),
            },
            _ => unknown(),
        }
    }
}

fn check_vo_conditions(r: &mut ValidationReport, vo: &VoModule, bundle: &ModelBundle) {
    let at = ElementRef::Module(vo.name.clone());
    let env = VoEnv { vo, bundle };
    for c in &vo.internal.init_conditions {
        check_bool(r, &at, c, &env, "start condition");
    }
    for c in &vo.internal.term_conditions {
        check_bool(r, &at, c, &env, "stop condition");
    }
}

/// Polynomial degree of `e` in its references, or `None` when it is not a
/// polynomial of the arithmetic operators.
fn degree(e: &Expr) -> Option<u32> {
    match e {
        Expr::Int(_) => Some(0),
        Expr::Ref(_) => Some(1),
        Expr::Unary(UnOp::Neg, x) => degree(x),
        Expr::Binary(BinOp::Add | BinOp::Sub, a, b) => Some(degree(a)?.max(degree(b)?)),
        Expr::Binary(BinOp::Mul, a, b) => Some(degree(a)? + degree(b)?),
        Expr::Binary(BinOp::Div, a, b) => match degree(b)? {
            0 => degree(a),
            _ => None,
        },
        _ => None,
    }
}

fn is_affine(e: &Expr) -> bool {
    degree(e).is_some_and(|d| d <= 1)
}

struct GlueEnv<'a>(&'a [crate::model::Param]);

impl TypeEnv for GlueEnv<'_> {
    fn resolve(&self, path: &[String]) -> Result<Ty, Issue> {
        if let [name] = path {
            if let Some(p) = self.0.iter().find(|p| p.name == *name) {
                return Ok(Ty::from(&p.dtype));
            }
        }
        Err((
            FindingCode::UnknownParameter,
            format!("`{}` is not a parameter of the role A event", path.join(".")),
        ))
    }
}

fn check_connector(r: &mut ValidationReport, c: &Connector) {
    check_interactions(r, |_| ElementRef::Connector(c.name.clone()), &c.role_a);
    check_interactions(r, |_| ElementRef::Connector(c.name.clone()), &c.role_b);
    for (index, g) in c.glue.iter().enumerate() {
        let at = ElementRef::GlueRule {
            connector: c.name.clone(),
            index,
        };
        let a = c.role_a.iter().find(|i| i.name == g.a_interaction);
        let b = c.role_b.iter().find(|i| i.name == g.b_interaction);
        let (Some(a), Some(b)) = (a, b) else {
            for (side, name, found) in [("A", &g.a_interaction, a.is_some()), ("B", &g.b_interaction, b.is_some())] {
                if !found {
                    r.push(
                        FindingCode::UnknownInteraction,
                        at.clone(),
                        format!("role {side} declares no interaction `{name}`"),
                    );
                }
            }
            continue;
        };
        if b.kind != a.kind.complement() {
            r.push(
                FindingCode::GlueMismatch,
                at.clone(),
                format!("`{}` on role A cannot be glued to `{}` on role B", a.kind, b.kind),
            );
        }
        if !a.kind.allows(g.a_tag) || !b.kind.allows(g.b_tag) {
            r.push(
                FindingCode::InvalidEventTag,
                at.clone(),
                format!("`{}.{}` or `{}.{}` is not an event of its interaction", a.name, g.a_tag, b.name, g.b_tag),
            );
            continue;
        }
        let a_params = a.params_for(g.a_tag);
        let b_params = b.params_for(g.b_tag);
        if g.translations.is_empty() {
            let same = a_params.len() == b_params.len()
                && a_params.iter().zip(b_params).all(|(x, y)| x.dtype == y.dtype);
            if !same {
                r.push(
                    FindingCode::GlueMismatch,
                    at.clone(),
                    "parameters differ and no translation is given",
                );
            }
            continue;
        }
        let env = GlueEnv(a_params);
        for (target, e) in &g.translations {
            let Some(tp) = b_params.iter().find(|p| p.name == *target) else {
                r.push(
                    FindingCode::UnknownParameter,
                    at.clone(),
                    format!("`{target}` is not a parameter of the role B event"),
                );
                continue;
            };
            if !is_affine(e) {
                r.push(
                    FindingCode::NonAffineGlue,
                    at.clone(),
                    format!("translation `{target} = {e}` is not affine"),
                );
            }
            let mut issues = Vec::new();
            let t = infer(e, &env, &mut issues);
            push_issues(r, &at, issues);
            let want = Ty::from(&tp.dtype);
            if let Some(t) = t {
                let ok = t == want || (t == Ty::Lit && want.is_numeric());
                if !ok {
                    r.push(
                        FindingCode::TypeMismatch,
                        at.clone(),
                        format!("translation for `{target}` has type {t}, expected {want}"),
                    );
                }
            }
        }
        for p in b_params {
            if !g.translations.iter().any(|(t, _)| *t == p.name) {
                r.push(
                    FindingCode::GlueMismatch,
                    at.clone(),
                    format!("no translation for role B parameter `{}`", p.name),
                );
            }
        }
    }
}

struct ConstraintEnv<'a>(&'a ConstraintDef);

impl TypeEnv for ConstraintEnv<'_> {
    fn resolve(&self, path: &[String]) -> Result<Ty, Issue> {
        let d = self.0;
        let ok = match path {
            [p] => d.params.iter().position(|x| x == p).is_some_and(|i| i < d.scope.len()),
            [owner, var] => d.scope.iter().any(|q| q.owner == *owner && q.var == *var),
            _ => false,
        };
        if ok {
            Ok(Ty::Int)
        } else {
            Err((
                FindingCode::UnknownVariable,
                format!("`{}` is neither a parameter nor a scoped SLA variable", path.join(".")),
            ))
        }
    }
}

fn check_constraint(r: &mut ValidationReport, d: &ConstraintDef) {
    let at = ElementRef::Constraint(d.name.clone());
    if d.params.len() > d.scope.len() {
        r.push(
            FindingCode::InvalidParameters,
            at.clone(),
            format!("{} parameters for a scope of {}", d.params.len(), d.scope.len()),
        );
    }
    let mut issues = Vec::new();
    let t = infer(&d.def, &ConstraintEnv(d), &mut issues);
    push_issues(r, &at, issues);
    let Some(t) = t else { return };
    let ok = match d.semiring {
        SemiringKind::Boolean => t == Ty::Bool || (t.is_numeric() && t != Ty::Inf),
        SemiringKind::Fuzzy => t.is_numeric() && t != Ty::Inf,
        SemiringKind::Weighted => t.is_numeric(),
    };
    if !ok {
        r.push(
            FindingCode::TypeMismatch,
            at,
            format!("definition has type {t}, which the {} semiring cannot hold", d.semiring.name()),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_bundle;

    const SPEC: &str = "VBE v is\nEND\n\
BUSINESS PROTOCOL P is
  INTERACTIONS
    r&s bookTrip
      init out: date;
      reply amount: money;
    snd refund
      init amount: money;
  SLA VARIABLES
    KD: [0..100], PERC: [0..100];
  BEHAVIOUR
    initiallyEnabled bookTrip.init?;
    refund.amount > bookTrip.amount * PERC / 100 after refund.init!;
END
";

    #[test]
    fn well_typed_spec_is_clean() {
        let b = parse_bundle(SPEC).unwrap();
        assert!(typecheck(&b).is_clean(), "{}", typecheck(&b));
    }

    fn codes_for(formula: &str) -> Vec<FindingCode> {
        let text = SPEC.replace("initiallyEnabled bookTrip.init?;", formula);
        typecheck(&parse_bundle(&text).unwrap()).codes()
    }

    #[test]
    fn event_checks() {
        assert_eq!(codes_for("initiallyEnabled bookTrip.init!;"), vec![FindingCode::EventDirection]);
        assert_eq!(codes_for("initiallyEnabled refund.commit!;"), vec![FindingCode::InvalidEventTag]);
        assert_eq!(codes_for("initiallyEnabled nope.init!;"), vec![FindingCode::UnknownInteraction]);
        assert_eq!(
            codes_for("KD > 3 ensures refund.init!;"),
            vec![FindingCode::GuardWithoutEvent]
        );
    }

    #[test]
    fn predicate_typing() {
        assert_eq!(
            codes_for("bookTrip.amount after refund.init!;"),
            vec![FindingCode::TypeMismatch]
        );
        assert_eq!(
            codes_for("bookTrip.price > 0 after refund.init!;"),
            vec![FindingCode::UnknownParameter]
        );
        assert_eq!(codes_for("x > 0 after refund.init!;"), vec![FindingCode::UnknownVariable]);
        assert!(codes_for("today + KD >= bookTrip.out after refund.init!;").is_empty());
    }

    #[test]
    fn reply_params_on_one_way_kind() {
        let text = SPEC.replace("init amount: money;\n  SLA", "reply amount: money;\n  SLA");
        assert!(typecheck(&parse_bundle(&text).unwrap()).has(FindingCode::InvalidParameters));
    }

    #[test]
    fn affinity() {
        let p = |s| crate::lang::parse_expr(s).unwrap();
        assert!(is_affine(&p("2 * x + 3")));
        assert!(is_affine(&p("x / 100")));
        assert!(!is_affine(&p("x * y")));
        assert!(!is_affine(&p("1 / x")));
        assert!(!is_affine(&p("if a then x else y")));
    }

    #[test]
    fn glue_checks() {
        let text = "VBE v is\nEND\n\
CONNECTOR C is
  ROLE A
    snd pay
      init amount: money;
  ROLE B
    rcv payIn
      init cents: money;
  GLUE
    A.pay.init -> B.payIn.init with cents = amount * amount;
END
";
        let b = parse_bundle(text).unwrap();
        assert_eq!(typecheck(&b).codes(), vec![FindingCode::NonAffineGlue, FindingCode::TypeMismatch]);
        let ok = text.replace("amount * amount", "amount * 100");
        assert!(typecheck(&parse_bundle(&ok).unwrap()).is_clean());
        let bare = text.replace(" with cents = amount * amount", "");
        assert!(typecheck(&parse_bundle(&bare).unwrap()).is_clean());
        let wrong_kind = bare.replace("rcv payIn", "snd payIn");
        assert_eq!(typecheck(&parse_bundle(&wrong_kind).unwrap()).codes(), vec![FindingCode::GlueMismatch]);
    }

    #[test]
    fn constraint_semiring_types() {
        let text = |semiring: &str, def: &str| {
            format!("VBE v is\nEND\nPOLICY d {{\n  scope: TC.KD;\n  semiring: {semiring};\n  def(k): {def};\n}}\n")
        };
        let codes = |s, d| typecheck(&parse_bundle(&text(s, d)).unwrap()).codes();
        assert!(codes("boolean", "k <= 4").is_empty());
        assert!(codes("fuzzy", "k / 100").is_empty());
        assert!(codes("weighted", "inf").is_empty());
        assert_eq!(codes("fuzzy", "inf"), vec![FindingCode::TypeMismatch]);
        assert_eq!(codes("boolean", "TC.PERC > 1"), vec![FindingCode::UnknownVariable]);
    }
}
