//! Lifecycle and signature checks for the conversations in a trace.

use std::collections::BTreeMap;

use super::trace::{Event, Trace};
use crate::expr::{Dtype, EventTag, Value};
use crate::model::{ComponentSpec, InteractionKind, Param};
use crate::report::{ElementRef, FindingCode, ValidationReport};

/// Progress of one conversation, i.e. one interaction within one session.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct Lifecycle {
    pub inited: bool,
    pub replied: bool,
    pub committed: bool,
    pub cancelled: bool,
    pub revoked: bool,
}

impl Lifecycle {
    /// The finding `tag` would raise now, if any.
    pub fn check(&self, kind: InteractionKind, tag: EventTag) -> Option<FindingCode> {
        use FindingCode::*;
        match tag {
            EventTag::Init if self.inited && kind.has_reply() => Some(DuplicateInit),
            EventTag::Init => None,
            EventTag::Reply if !self.inited => Some(ReplyBeforeInit),
            EventTag::Reply if self.replied => Some(DuplicateReply),
            EventTag::Reply => None,
            EventTag::Commit if !self.replied => Some(CommitBeforeReply),
            EventTag::Commit if self.cancelled => Some(CommitCancelConflict),
            EventTag::Commit if self.committed => Some(DuplicateCommit),
            EventTag::Commit => None,
            EventTag::Cancel if !self.replied => Some(CancelBeforeReply),
            EventTag::Cancel if self.committed => Some(CommitCancelConflict),
            EventTag::Cancel if self.cancelled => Some(DuplicateCancel),
            EventTag::Cancel => None,
            EventTag::Revoke if !self.committed => Some(RevokeBeforeCommit),
            EventTag::Revoke if self.revoked => Some(DuplicateRevoke),
            EventTag::Revoke => None,
        }
    }

    pub fn apply(&mut self, tag: EventTag) {
        match tag {
            EventTag::Init => self.inited = true,
            EventTag::Reply => self.replied = true,
            EventTag::Commit => self.committed = true,
            EventTag::Cancel => self.cancelled = true,
            EventTag::Revoke => self.revoked = true,
        }
    }

    /// True while the conversation can still progress toward a deal or
    /// its revocation.
    pub fn is_open(&self, kind: InteractionKind) -> bool {
        if !self.inited {
            return false;
        }
        if kind.is_conversational() {
            !(self.committed || self.cancelled || self.revoked)
        } else if kind.has_reply() {
            !self.replied
        } else {
            false
        }
    }
}

pub(crate) fn value_fits(v: &Value, d: &Dtype) -> bool {
    match (v, d) {
        (Value::Num(r), Dtype::Int | Dtype::Money | Dtype::Date) => r.is_integer(),
        (Value::Num(r), Dtype::Nat) => r.is_integer() && *r.numer() >= 0,
        (Value::Bool(_), Dtype::Bool) => true,
        (Value::Str(_), Dtype::Str) => true,
        (Value::Str(s), Dtype::Enum(items)) => items.contains(s),
        _ => false,
    }
}

/// Parameter problems of `e` against the declared parameters.
pub(crate) fn param_issues(e: &Event, declared: &[Param]) -> Vec<(FindingCode, String)> {
    let mut out = Vec::new();
    for p in declared {
        match e.params.get(&p.name) {
            None => out.push((FindingCode::MissingParameter, format!("missing parameter `{}`", p.name))),
            Some(v) if !value_fits(v, &p.dtype) => out.push((
                FindingCode::ParameterType,
                format!("parameter `{}` = {v} is not a {}", p.name, p.dtype),
            )),
            Some(_) => {}
        }
    }
    for k in e.params.keys() {
        if !declared.iter().any(|p| p.name == *k) {
            out.push((FindingCode::UnexpectedParameter, format!("unexpected parameter `{k}`")));
        }
    }
    out
}

/// Checks every event of `trace` that belongs to an interaction of `spec`
/// for polarity, parameters and lifecycle order. Events of other
/// interactions are ignored.
pub fn validate_conversation(spec: &ComponentSpec, trace: &Trace) -> ValidationReport {
    let mut r = ValidationReport::new();
    let mut state: BTreeMap<(&str, &str), Lifecycle> = BTreeMap::new();
    for (i, e) in trace.events.iter().enumerate() {
        let Some(decl) = spec.interaction(&e.interaction) else { continue };
        let at = ElementRef::TraceEvent(i);
        let ev = format!("{}.{}{}", e.interaction, e.tag, e.direction.symbol());
        if !decl.kind.allows(e.tag) {
            r.push(
                FindingCode::InvalidEventTag,
                at,
                format!("`{ev}`: `{}` interactions have no `{}` event", decl.kind, e.tag),
            );
            continue;
        }
        if e.direction != decl.kind.direction_of(e.tag) {
            r.push(FindingCode::EventDirection, at.clone(), format!("`{ev}` has the wrong polarity"));
        }
        for (code, msg) in param_issues(e, decl.params_for(e.tag)) {
            r.push(code, at.clone(), format!("`{ev}`: {msg}"));
        }
        let lc = state.entry((e.session.as_str(), e.interaction.as_str())).or_default();
        if let Some(code) = lc.check(decl.kind, e.tag) {
            r.push(code, at, format!("`{ev}` in session {}", e.session));
        }
        lc.apply(e.tag);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Direction;
    use crate::model::{InteractionDecl, SpecKind};
    use crate::runtime::trace::Time;

    fn spec() -> ComponentSpec {
        let mut i = InteractionDecl::new("q", InteractionKind::Ask);
        i.rcv_params.push(Param::new("n", Dtype::Nat));
        ComponentSpec {
            kind: SpecKind::BusinessRole,
            name: "S".into(),
            interactions: vec![i, InteractionDecl::new("note", InteractionKind::Rcv)],
            sla_vars: vec![],
            behaviour: vec![],
            span: Default::default(),
        }
    }

    fn ev(i: &str, tag: EventTag, d: Direction) -> Event {
        Event::new(Time::default(), "s", i, tag, d)
    }

    #[test]
    fn ask_uses_init_and_reply_only() {
        let t = Trace {
            start: 0,
            events: vec![
                ev("q", EventTag::Init, Direction::Emit),
                ev("q", EventTag::Reply, Direction::Receive).with("n", Value::int(-1)),
                ev("q", EventTag::Commit, Direction::Emit),
                ev("note", EventTag::Init, Direction::Receive),
                ev("note", EventTag::Init, Direction::Receive),
                ev("other", EventTag::Revoke, Direction::Emit),
            ],
        };
        assert_eq!(
            validate_conversation(&spec(), &t).codes(),
            vec![FindingCode::ParameterType, FindingCode::InvalidEventTag]
        );
    }

    #[test]
    fn polarity_and_parameters() {
        let t = Trace {
            start: 0,
            events: vec![
                ev("q", EventTag::Init, Direction::Receive).with("x", Value::Bool(true)),
                ev("q", EventTag::Reply, Direction::Receive),
            ],
        };
        assert_eq!(
            validate_conversation(&spec(), &t).codes(),
            vec![
                FindingCode::EventDirection,
                FindingCode::UnexpectedParameter,
                FindingCode::MissingParameter
            ]
        );
    }
}
