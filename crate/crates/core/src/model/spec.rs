//! Component specifications ⟨signature, behaviour⟩ and connectors.

use std::fmt;

use crate::expr::{Direction, Dtype, EventExpr, EventTag, Expr};
use crate::span::Span;

/// Interaction taxonomy. `Rs`/`Sr` are conversational and carry the full
/// init/reply/commit/cancel/revoke lifecycle; `Ask`/`Rpl` are synchronous
/// request/reply pairs; the rest are one-way.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InteractionKind {
    Rs,
    Sr,
    Rcv,
    Snd,
    Ask,
    Rpl,
    Tll,
    Prf,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 8] = [
        InteractionKind::Rs,
        InteractionKind::Sr,
        InteractionKind::Rcv,
        InteractionKind::Snd,
        InteractionKind::Ask,
        InteractionKind::Rpl,
        InteractionKind::Tll,
        InteractionKind::Prf,
    ];

    pub fn token(self) -> &'static str {
        match self {
            InteractionKind::Rs => "r&s",
            InteractionKind::Sr => "s&r",
            InteractionKind::Rcv => "rcv",
            InteractionKind::Snd => "snd",
            InteractionKind::Ask => "ask",
            InteractionKind::Rpl => "rpl",
            InteractionKind::Tll => "tll",
            InteractionKind::Prf => "prf",
        }
    }

    pub fn from_token(s: &str) -> Option<InteractionKind> {
        InteractionKind::ALL.into_iter().find(|k| k.token() == s)
    }

    pub fn is_conversational(self) -> bool {
        matches!(self, InteractionKind::Rs | InteractionKind::Sr)
    }

    /// Kinds that have a reply event and may declare reply parameters.
    pub fn has_reply(self) -> bool {
        matches!(
            self,
            InteractionKind::Rs | InteractionKind::Sr | InteractionKind::Ask | InteractionKind::Rpl
        )
    }

    pub fn allows(self, tag: EventTag) -> bool {
        match tag {
            EventTag::Init => true,
            EventTag::Reply => self.has_reply(),
            EventTag::Commit | EventTag::Cancel | EventTag::Revoke => self.is_conversational(),
        }
    }

    /// Whether the owning party initiates interactions of this kind.
    pub fn party_initiates(self) -> bool {
        matches!(
            self,
            InteractionKind::Sr | InteractionKind::Snd | InteractionKind::Ask | InteractionKind::Tll
        )
    }

    /// Polarity of `tag` seen from the party that declares the interaction.
    /// The initiator emits init, commit, cancel and revoke; the co-party
    /// emits the reply.
    pub fn direction_of(self, tag: EventTag) -> Direction {
        let initiator = if self.party_initiates() {
            Direction::Emit
        } else {
            Direction::Receive
        };
        match tag {
            EventTag::Reply => initiator.flip(),
            _ => initiator,
        }
    }

    /// The kind the co-party sees for the same interaction.
    pub fn complement(self) -> InteractionKind {
        match self {
            InteractionKind::Rs => InteractionKind::Sr,
            InteractionKind::Sr => InteractionKind::Rs,
            InteractionKind::Rcv => InteractionKind::Snd,
            InteractionKind::Snd => InteractionKind::Rcv,
            InteractionKind::Ask => InteractionKind::Rpl,
            InteractionKind::Rpl => InteractionKind::Ask,
            InteractionKind::Tll => InteractionKind::Prf,
            InteractionKind::Prf => InteractionKind::Tll,
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub dtype: Dtype,
}

impl Param {
    pub fn new(name: impl Into<String>, dtype: Dtype) -> Self {
        Param {
            name: name.into(),
            dtype,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionDecl {
    pub name: String,
    pub kind: InteractionKind,
    /// Parameters carried by the init event.
    pub snd_params: Vec<Param>,
    /// Parameters carried by the reply event.
    pub rcv_params: Vec<Param>,
    pub span: Span,
}

impl InteractionDecl {
    pub fn new(name: impl Into<String>, kind: InteractionKind) -> Self {
        InteractionDecl {
            name: name.into(),
            kind,
            snd_params: Vec::new(),
            rcv_params: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn params_for(&self, tag: EventTag) -> &[Param] {
        match tag {
            EventTag::Init => &self.snd_params,
            EventTag::Reply => &self.rcv_params,
            _ => &[],
        }
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.snd_params
            .iter()
            .chain(&self.rcv_params)
            .find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlaVarDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub span: Span,
}

impl SlaVarDecl {
    pub fn new(name: impl Into<String>, lo: i64, hi: i64) -> Self {
        SlaVarDecl {
            name: name.into(),
            lo,
            hi,
            span: Span::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardItem {
    Event(EventExpr),
    Pred(Expr),
}

/// Conjunction of event atoms and state predicates. Order is significant:
/// the rightmost event atom is the one that must occur "now".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guard(pub Vec<GuardItem>);

impl Guard {
    pub fn events(&self) -> impl Iterator<Item = &EventExpr> {
        self.0.iter().filter_map(|i| match i {
            GuardItem::Event(e) => Some(e),
            GuardItem::Pred(_) => None,
        })
    }

    pub fn preds(&self) -> impl Iterator<Item = &Expr> {
        self.0.iter().filter_map(|i| match i {
            GuardItem::Pred(p) => Some(p),
            GuardItem::Event(_) => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BehaviourFormula {
    InitiallyEnabled(EventExpr),
    Ensures {
        guard: Guard,
        consequent: EventExpr,
    },
    EnablesUntil {
        guard: Guard,
        enabled: EventExpr,
        until: Expr,
    },
    After {
        pred: Expr,
        anchor: EventExpr,
    },
}

impl BehaviourFormula {
    pub fn operator(&self) -> &'static str {
        match self {
            BehaviourFormula::InitiallyEnabled(_) => "initiallyEnabled",
            BehaviourFormula::Ensures { .. } => "ensures",
            BehaviourFormula::EnablesUntil { .. } => "enables",
            BehaviourFormula::After { .. } => "after",
        }
    }

    /// Every event expression mentioned by the formula.
    pub fn events(&self) -> Vec<&EventExpr> {
        match self {
            BehaviourFormula::InitiallyEnabled(e) => vec![e],
            BehaviourFormula::Ensures { guard, consequent } => {
                guard.events().chain(std::iter::once(consequent)).collect()
            }
            BehaviourFormula::EnablesUntil { guard, enabled, .. } => {
                guard.events().chain(std::iter::once(enabled)).collect()
            }
            BehaviourFormula::After { anchor, .. } => vec![anchor],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaDecl {
    pub formula: BehaviourFormula,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpecKind {
    BusinessProtocol,
    BusinessRole,
}

impl SpecKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SpecKind::BusinessProtocol => "BUSINESS PROTOCOL",
            SpecKind::BusinessRole => "BUSINESS ROLE",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentSpec {
    pub kind: SpecKind,
    pub name: String,
    pub interactions: Vec<InteractionDecl>,
    pub sla_vars: Vec<SlaVarDecl>,
    pub behaviour: Vec<FormulaDecl>,
    pub span: Span,
}

impl ComponentSpec {
    pub fn interaction(&self, name: &str) -> Option<&InteractionDecl> {
        self.interactions.iter().find(|i| i.name == name)
    }

    pub fn sla_var(&self, name: &str) -> Option<&SlaVarDecl> {
        self.sla_vars.iter().find(|v| v.name == name)
    }

    pub fn formulas(&self) -> impl Iterator<Item = &BehaviourFormula> {
        self.behaviour.iter().map(|f| &f.formula)
    }
}

/// `A.interaction.tag -> B.interaction.tag [with p = expr, ...]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlueRule {
    pub a_interaction: String,
    pub a_tag: EventTag,
    pub b_interaction: String,
    pub b_tag: EventTag,
    /// Role-B parameter assigned from an affine expression over role-A
    /// parameters. Without translations, parameters correspond by position.
    pub translations: Vec<(String, Expr)>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connector {
    pub name: String,
    pub role_a: Vec<InteractionDecl>,
    pub glue: Vec<GlueRule>,
    pub role_b: Vec<InteractionDecl>,
    pub span: Span,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarity_of_customer_protocol_events() {
        let rs = InteractionKind::Rs;
        assert_eq!(rs.direction_of(EventTag::Init), Direction::Receive);
        assert_eq!(rs.direction_of(EventTag::Reply), Direction::Emit);
        assert_eq!(rs.direction_of(EventTag::Commit), Direction::Receive);
        assert_eq!(rs.direction_of(EventTag::Revoke), Direction::Receive);
        assert_eq!(InteractionKind::Snd.direction_of(EventTag::Init), Direction::Emit);
    }

    #[test]
    fn one_way_kinds_allow_only_init() {
        for k in [
            InteractionKind::Rcv,
            InteractionKind::Snd,
            InteractionKind::Tll,
            InteractionKind::Prf,
        ] {
            assert!(k.allows(EventTag::Init));
            for t in [EventTag::Reply, EventTag::Commit, EventTag::Cancel, EventTag::Revoke] {
                assert!(!k.allows(t), "{k} must not allow {t}");
            }
        }
        assert!(InteractionKind::Ask.allows(EventTag::Reply));
        assert!(!InteractionKind::Ask.allows(EventTag::Commit));
    }

    #[test]
    fn complement_is_an_involution() {
        for k in InteractionKind::ALL {
            assert_eq!(k.complement().complement(), k);
            assert_ne!(k.complement(), k);
        }
    }
}
