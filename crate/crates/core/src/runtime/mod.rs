//! Trace checking and simulation against component specifications.

mod behaviour;
mod conversation;
mod simulate;
mod trace;

use std::collections::BTreeMap;

pub use behaviour::{check_behaviour, check_sla, CheckMode, RuntimeError, Status, Verdict};
pub use conversation::validate_conversation;
pub use simulate::{simulate, Script, ScriptParseError, ScriptStep, SimError};
pub use trace::{format_value, parse_value, Event, Time, Trace, TraceParseError};

use crate::graph::{LedgerError, SessionLedger};
use crate::model::ComponentSpec;
use conversation::Lifecycle;

/// The sessions of `trace` in which some conversation of `spec` is still
/// open, recorded against `vo`.
pub fn ledger_from_trace(vo: &str, spec: &ComponentSpec, trace: &Trace) -> Result<SessionLedger, LedgerError> {
    let mut state: BTreeMap<(&str, &str), Lifecycle> = BTreeMap::new();
    for e in &trace.events {
        if spec.interaction(&e.interaction).is_some() {
            state.entry((&e.session, &e.interaction)).or_default().apply(e.tag);
        }
    }
    let mut ledger = SessionLedger::new();
    let mut seen = Vec::new();
    for ((session, interaction), lc) in &state {
        let kind = spec.interaction(interaction).map(|d| d.kind).expect("filtered above");
        if lc.is_open(kind) && !seen.contains(session) {
            seen.push(*session);
            ledger.open(vo, session)?;
        }
    }
    Ok(ledger)
}
