//! Event traces and their line format:
//!
//! ```text
//! start=0
//! t=0.0 session=s1 ev=bookTrip.init? from=LIS in=27 out=20 to=JFK
//! t=0.1 session=s1 ev=bookTrip.reply! amount=1000 fconf="F 1" hconf=H1
//! ```
//!
//! Time is `<day>.<tick>` and must not decrease. Parameter values are
//! integers, `n/d` fractions, `true`/`false`, bare identifiers or quoted
//! strings.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{Direction, EventTag, Rational, Value};
use crate::lang::is_plain_ident;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time {
    pub day: i64,
    pub tick: u32,
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.day, self.tick)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub time: Time,
    pub session: String,
    pub interaction: String,
    pub tag: EventTag,
    pub direction: Direction,
    pub params: BTreeMap<String, Value>,
}

impl Event {
    pub fn new(time: Time, session: &str, interaction: &str, tag: EventTag, direction: Direction) -> Event {
        Event {
            time,
            session: session.into(),
            interaction: interaction.into(),
            tag,
            direction,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, v: Value) -> Event {
        self.params.insert(name.into(), v);
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    /// Day on which observation starts.
    pub start: i64,
    pub events: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// Renders a value for a trace or script line.
pub fn format_value(v: &Value) -> String {
    match v {
        Value::Str(s) if is_plain_ident(s) && !matches!(s.as_str(), "true" | "false" | "inf") => s.clone(),
        other => other.to_string(),
    }
}

/// Parses a value written by [`format_value`].
pub fn parse_value(s: &str) -> Option<Value> {
    match s {
        "true" => return Some(Value::Bool(true)),
        "false" => return Some(Value::Bool(false)),
        "inf" => return Some(Value::Inf),
        _ => {}
    }
    if let Some(inner) = s.strip_prefix('"') {
        return unquote(inner).map(Value::Str);
    }
    if is_plain_ident(s) {
        return Some(Value::Str(s.into()));
    }
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let num = |t: &str| -> Option<i64> {
        let digits = t.strip_prefix('-').unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        t.parse().ok()
    };
    let n = num(n)?;
    match d {
        None => Some(Value::int(n)),
        Some(d) => {
            let d = num(d).filter(|d| *d > 0)?;
            Some(Value::Num(Rational::new(n, d)))
        }
    }
}

fn unquote(body: &str) -> Option<String> {
    let body = body.strip_suffix('"')?;
    let mut out = String::new();
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next()? {
                '"' => out.push('"'),
                '\\' => out.push('\\'),
                'n' => out.push('\n'),
                't' => out.push('\t'),
                _ => return None,
            },
            '"' => return None,
            c => out.push(c),
        }
    }
    Some(out)
}

/// Splits a line into whitespace-separated fields, keeping quoted strings
/// (with their quotes) intact.
pub(crate) fn fields(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        if quoted {
            cur.push(c);
            match c {
                '\\' => cur.push(chars.next().ok_or("unterminated escape")?),
                '"' => quoted = false,
                _ => {}
            }
        } else if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            if c == '"' {
                quoted = true;
            }
            cur.push(c);
        }
    }
    if quoted {
        return Err("unterminated string".into());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

/// Parses `k=v` fields into a parameter map.
pub(crate) fn params(fs: &[String]) -> Result<BTreeMap<String, Value>, String> {
    let mut out = BTreeMap::new();
    for f in fs {
        let (k, v) = f.split_once('=').ok_or_else(|| format!("expected `name=value`, found `{f}`"))?;
        if !is_plain_ident(k) {
            return Err(format!("`{k}` is not a parameter name"));
        }
        let v = parse_value(v).ok_or_else(|| format!("malformed value `{v}`"))?;
        if out.insert(k.to_owned(), v).is_some() {
            return Err(format!("parameter `{k}` given twice"));
        }
    }
    Ok(out)
}

pub(crate) fn parse_event_ref(s: &str) -> Option<(String, EventTag, Direction)> {
    let (body, direction) = if let Some(b) = s.strip_suffix('!') {
        (b, Direction::Emit)
    } else {
        (s.strip_suffix('?')?, Direction::Receive)
    };
    let (interaction, tag) = body.split_once('.')?;
    if !is_plain_ident(interaction) {
        return None;
    }
    Some((interaction.into(), EventTag::from_name(tag)?, direction))
}

impl Trace {
    pub fn parse(text: &str) -> Result<Trace, TraceParseError> {
        let mut trace = Trace::default();
        let mut seen_event = false;
        let mut last = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| TraceParseError { line: i + 1, message };
            if let Some(day) = line.strip_prefix("start=") {
                if seen_event {
                    return Err(err("`start=` must precede every event".into()));
                }
                trace.start = day.parse().map_err(|_| err(format!("malformed start day `{day}`")))?;
                continue;
            }
            seen_event = true;
            let fs = fields(line).map_err(err)?;
            let [t, session, ev, rest @ ..] = fs.as_slice() else {
                return Err(err("expected `t=<day>.<tick> session=<id> ev=<event>`".into()));
            };
            let time = t
                .strip_prefix("t=")
                .and_then(|t| t.split_once('.'))
                .and_then(|(d, k)| Some(Time { day: d.parse().ok()?, tick: k.parse().ok()? }))
                .ok_or_else(|| err(format!("malformed time `{t}`")))?;
            if last.is_some_and(|l| time < l) {
                return Err(err(format!("time {time} goes backwards")));
            }
            last = Some(time);
            let session = session
                .strip_prefix("session=")
                .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_'))
                .ok_or_else(|| err(format!("malformed session `{session}`")))?;
            let (interaction, tag, direction) = ev
                .strip_prefix("ev=")
                .and_then(parse_event_ref)
                .ok_or_else(|| err(format!("malformed event `{ev}`")))?;
            trace.events.push(Event {
                time,
                session: session.into(),
                interaction,
                tag,
                direction,
                params: params(rest).map_err(err)?,
            });
        }
        Ok(trace)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start={}", self.start)?;
        for e in &self.events {
            write!(
                f,
                "t={} session={} ev={}.{}{}",
                e.time,
                e.session,
                e.interaction,
                e.tag,
                e.direction.symbol()
            )?;
            for (k, v) in &e.params {
                write!(f, " {k}={}", format_value(v))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn values_round_trip() {
        for v in [
            Value::int(-3),
            Value::Num(Rational::new(3, 4)),
            Value::Bool(true),
            Value::Str("LIS".into()),
            Value::Str("true".into()),
            Value::Str("two words".into()),
            Value::Str("4ever".into()),
            Value::Str(String::new()),
        ] {
            assert_eq!(parse_value(&format_value(&v)), Some(v));
        }
        assert_eq!(parse_value("1/0"), None);
        assert_eq!(parse_value("--1"), None);
    }

    #[test]
    fn time_must_not_decrease() {
        let e = Trace::parse("t=1.0 session=a ev=x.init?\nt=0.5 session=a ev=x.init?\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        prop_oneof![
            any::<i32>().prop_map(|n| Value::int(n.into())),
            any::<bool>().prop_map(Value::Bool),
            "[ -~]{0,8}".prop_map(Value::Str),
        ]
    }

    proptest! {
        #[test]
        fn traces_round_trip(
            start in -5i64..5,
            evs in proptest::collection::vec(
                (0u32..3, "[a-z]{1,4}", 0usize..5, any::<bool>(),
                 proptest::collection::btree_map("[a-z][a-z0-9]{0,3}", arb_value(), 0..3)),
                0..6)
        ) {
            let mut day = 0;
            let events = evs.into_iter().enumerate().map(|(i, (gap, s, tag, emit, params))| {
                day += i64::from(gap);
                Event {
                    time: Time { day, tick: i as u32 },
                    session: s,
                    interaction: "conv".into(),
                    tag: EventTag::ALL[tag],
                    direction: if emit { Direction::Emit } else { Direction::Receive },
                    params,
                }
            }).collect();
            let t = Trace { start, events };
            prop_assert_eq!(Trace::parse(&t.to_string()).unwrap(), t);
        }
    }
}
