//! Finite-trace semantics of behaviour formulas.
//!
//! Every formula is evaluated per session. Predicates see `today` (the
//! event's day), the SLA variables by bare name, and the latest value of
//! every `interaction.param` seen so far in the session, including the
//! current event. A predicate that fails to evaluate counts as false.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::trace::{Event, Trace};
use crate::expr::{eval, EventExpr, Expr, Value};
use crate::model::{BehaviourFormula, ComponentSpec, Guard, GuardItem};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CheckMode {
    /// Obligations still open at the end of the trace are `Pending`.
    #[default]
    Lenient,
    /// Open obligations count as violations.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Satisfied,
    /// First violating event.
    Violated { at: usize },
    Pending,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    /// Index of the formula in the specification's behaviour section.
    pub formula: usize,
    pub status: Status,
    /// Events behind the status: violating events, or antecedents still
    /// waiting for their consequent.
    pub witnesses: Vec<usize>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let events = |w: &[usize]| w.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        match self.status {
            Status::Satisfied => write!(f, "formula {} satisfied", self.formula + 1),
            Status::Violated { at } => write!(
                f,
                "formula {} violated at event {at} (events {})",
                self.formula + 1,
                events(&self.witnesses)
            ),
            Status::Pending => write!(
                f,
                "formula {} pending (events {})",
                self.formula + 1,
                events(&self.witnesses)
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("SLA variable `{var}` = {value} is outside [{lo}..{hi}]")]
    SlaOutOfRange { var: String, value: i64, lo: i64, hi: i64 },
    #[error("no value for SLA variable `{0}`")]
    MissingSlaVariable(String),
    #[error("`{0}` is not an SLA variable of the specification")]
    UnknownSlaVariable(String),
}

/// Checks `sla` against the specification's declared ranges.
pub fn check_sla(spec: &ComponentSpec, sla: &BTreeMap<String, i64>) -> Result<(), RuntimeError> {
    for k in sla.keys() {
        if spec.sla_var(k).is_none() {
            return Err(RuntimeError::UnknownSlaVariable(k.clone()));
        }
    }
    for v in &spec.sla_vars {
        let value = *sla
            .get(&v.name)
            .ok_or_else(|| RuntimeError::MissingSlaVariable(v.name.clone()))?;
        if value < v.lo || value > v.hi {
            return Err(RuntimeError::SlaOutOfRange {
                var: v.name.clone(),
                value,
                lo: v.lo,
                hi: v.hi,
            });
        }
    }
    Ok(())
}

pub(crate) fn matches(ev: &EventExpr, e: &Event) -> bool {
    ev.interaction == e.interaction && ev.tag == e.tag && ev.direction == e.direction
}

/// Per-event view of the trace: the session-scoped parameter values after
/// each event, for predicate evaluation.
pub(crate) struct Snapshots<'a> {
    events: &'a [Event],
    sla: &'a BTreeMap<String, i64>,
    values: Vec<BTreeMap<String, Value>>,
}

impl<'a> Snapshots<'a> {
    pub fn new(events: &'a [Event], sla: &'a BTreeMap<String, i64>) -> Self {
        let mut latest: BTreeMap<&str, BTreeMap<String, Value>> = BTreeMap::new();
        let mut values = Vec::with_capacity(events.len());
        for e in events {
            let m = latest.entry(e.session.as_str()).or_default();
            for (k, v) in &e.params {
                m.insert(format!("{}.{k}", e.interaction), v.clone());
            }
            values.push(m.clone());
        }
        Snapshots { events, sla, values }
    }

    pub fn holds(&self, p: &Expr, at: usize) -> bool {
        let day = self.events[at].time.day;
        let vals = &self.values[at];
        let env = |path: &[String]| -> Option<Value> {
            match path {
                [one] if one == "today" => Some(Value::int(day)),
                [one] => self.sla.get(one).map(|n| Value::int(*n)),
                _ => vals.get(&path.join(".")).cloned(),
            }
        };
        eval(p, &env).ok().and_then(|v| v.as_bool()).unwrap_or(false)
    }

    /// Whether `guard` holds at event `i`: its rightmost event atom is
    /// event `i`, each other event atom occurred earlier in the session,
    /// and every predicate holds.
    pub fn guard_holds(&self, guard: &Guard, i: usize) -> bool {
        let e = &self.events[i];
        let events: Vec<&EventExpr> = guard.events().collect();
        let Some((last, earlier)) = events.split_last() else {
            return false;
        };
        if !matches(last, e) {
            return false;
        }
        let before = &self.events[..i];
        let occurred = |ev: &EventExpr| before.iter().any(|b| b.session == e.session && matches(ev, b));
        earlier.iter().all(|ev| occurred(ev))
            && guard.0.iter().all(|item| match item {
                GuardItem::Pred(p) => self.holds(p, i),
                GuardItem::Event(_) => true,
            })
    }
}

/// Window state of an `enables ... until` formula before step 2 at each
/// event, and the violations it finds.
struct Window {
    open_before: Vec<bool>,
    violations: Vec<usize>,
}

fn run_window(
    s: &Snapshots<'_>,
    guard: &Guard,
    enabled: &EventExpr,
    until: &Expr,
    initially: bool,
) -> Window {
    let mut open: BTreeMap<&str, bool> = BTreeMap::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut w = Window {
        open_before: Vec::with_capacity(s.events.len()),
        violations: Vec::new(),
    };
    for (k, e) in s.events.iter().enumerate() {
        let o = open.entry(e.session.as_str()).or_insert(false);
        if *o && s.holds(until, k) {
            *o = false;
        }
        w.open_before.push(*o);
        if matches(enabled, e) {
            let first = seen.insert(e.session.as_str());
            if !*o && !(first && initially) {
                w.violations.push(k);
            }
        }
        if s.guard_holds(guard, k) {
            *o = true;
        }
    }
    w
}

fn verdict(formula: usize, violations: Vec<usize>, pending: Vec<usize>) -> Verdict {
    if let Some(&at) = violations.first() {
        Verdict {
            formula,
            status: Status::Violated { at },
            witnesses: violations,
        }
    } else if !pending.is_empty() {
        Verdict {
            formula,
            status: Status::Pending,
            witnesses: pending,
        }
    } else {
        Verdict {
            formula,
            status: Status::Satisfied,
            witnesses: Vec::new(),
        }
    }
}

/// Evaluates every behaviour formula of `spec` over `trace`, one verdict
/// per formula in declaration order.
pub fn check_behaviour(
    spec: &ComponentSpec,
    trace: &Trace,
    sla: &BTreeMap<String, i64>,
    mode: CheckMode,
) -> Result<Vec<Verdict>, RuntimeError> {
    check_sla(spec, sla)?;
    let s = Snapshots::new(&trace.events, sla);
    let formulas: Vec<&BehaviourFormula> = spec.formulas().collect();
    let initially = |ev: &EventExpr| {
        formulas
            .iter()
            .any(|f| matches!(f, BehaviourFormula::InitiallyEnabled(x) if x == ev))
    };
    let mut out = Vec::new();
    for (index, f) in formulas.iter().enumerate() {
        let v = match f {
            BehaviourFormula::InitiallyEnabled(ev) => {
                let windows: Vec<Window> = formulas
                    .iter()
                    .filter_map(|g| match g {
                        BehaviourFormula::EnablesUntil {
                            guard,
                            enabled,
                            until,
                        } if enabled == ev => Some(run_window(&s, guard, enabled, until, true)),
                        _ => None,
                    })
                    .collect();
                let mut seen = BTreeSet::new();
                let mut bad = Vec::new();
                for (k, e) in trace.events.iter().enumerate() {
                    if matches(ev, e) && !seen.insert(e.session.as_str()) && !windows.iter().any(|w| w.open_before[k]) {
                        bad.push(k);
                    }
                }
                verdict(index, bad, vec![])
            }
            BehaviourFormula::Ensures { guard, consequent } => {
                let mut pending = Vec::new();
                for (i, e) in trace.events.iter().enumerate() {
                    if s.guard_holds(guard, i) {
                        let later = trace.events[i + 1..]
                            .iter()
                            .any(|l| l.session == e.session && matches(consequent, l));
                        if !later {
                            pending.push(i);
                        }
                    }
                }
                verdict(index, vec![], pending)
            }
            BehaviourFormula::EnablesUntil {
                guard,
                enabled,
                until,
            } => {
                let w = run_window(&s, guard, enabled, until, initially(enabled));
                verdict(index, w.violations, vec![])
            }
            BehaviourFormula::After { pred, anchor } => {
                let bad = trace
                    .events
                    .iter()
                    .enumerate()
                    .filter(|(i, e)| matches(anchor, e) && !s.holds(pred, *i))
                    .map(|(i, _)| i)
                    .collect();
                verdict(index, bad, vec![])
            }
        };
        out.push(strictify(v, mode));
    }
    Ok(out)
}

fn strictify(v: Verdict, mode: CheckMode) -> Verdict {
    match (mode, v.status) {
        (CheckMode::Strict, Status::Pending) => Verdict {
            status: Status::Violated { at: v.witnesses[0] },
            ..v
        },
        _ => v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_bundle;
    use crate::runtime::trace::Trace;

    const SPEC: &str = "VBE v is\nEND\n\
BUSINESS PROTOCOL P is
  INTERACTIONS
    r&s buy
      init due: date;
    snd ack
      init ok: bool;
  SLA VARIABLES
    W: [0..10];
  BEHAVIOUR
    initiallyEnabled buy.init?;
    buy.init? ensures ack.init!;
    (ack.init! and ack.ok) enables buy.revoke? until today > buy.due + W;
    ack.ok after ack.init!;
END
";

    fn run(trace: &str, mode: CheckMode) -> Vec<Status> {
        let b = parse_bundle(SPEC).unwrap();
        let t = Trace::parse(trace).unwrap();
        let sla = BTreeMap::from([("W".to_string(), 2)]);
        check_behaviour(&b.specs[0], &t, &sla, mode)
            .unwrap()
            .into_iter()
            .map(|v| v.status)
            .collect()
    }

    #[test]
    fn pending_obligation_and_strict_mode() {
        let t = "t=0.0 session=a ev=buy.init? due=3\n";
        assert_eq!(run(t, CheckMode::Lenient)[1], Status::Pending);
        assert_eq!(run(t, CheckMode::Strict)[1], Status::Violated { at: 0 });
    }

    #[test]
    fn window_opens_and_closes_per_session() {
        let t = "t=0.0 session=a ev=buy.init? due=3
t=0.1 session=a ev=ack.init! ok=true
t=4.0 session=a ev=buy.revoke?
t=6.0 session=a ev=buy.revoke?
t=6.1 session=b ev=buy.revoke?
";
        let s = run(t, CheckMode::Lenient);
        assert_eq!(s[0], Status::Satisfied);
        assert_eq!(s[2], Status::Violated { at: 3 });
        assert_eq!(s[3], Status::Satisfied);
    }

    #[test]
    fn second_init_needs_a_window() {
        let t = "t=0.0 session=a ev=buy.init? due=3\nt=0.1 session=a ev=buy.init? due=3\n";
        assert_eq!(run(t, CheckMode::Lenient)[0], Status::Violated { at: 1 });
    }

    #[test]
    fn failed_evaluation_is_false() {
        let t = "t=0.0 session=a ev=ack.init!\n";
        assert_eq!(run(t, CheckMode::Lenient)[3], Status::Violated { at: 0 });
    }

    #[test]
    fn sla_is_checked() {
        let b = parse_bundle(SPEC).unwrap();
        let t = Trace::default();
        let bad = BTreeMap::from([("W".to_string(), 11)]);
        assert!(matches!(
            check_behaviour(&b.specs[0], &t, &bad, CheckMode::Lenient),
            Err(RuntimeError::SlaOutOfRange { .. })
        ));
        assert_eq!(
            check_behaviour(&b.specs[0], &t, &BTreeMap::new(), CheckMode::Lenient),
            Err(RuntimeError::MissingSlaVariable("W".into()))
        );
    }
}
