use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("session `{session}` is already open in `{vo}`")]
    SessionInUse { session: String, vo: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Open sessions per VO module. A session id belongs to at most one VO.
///
/// Text form: one line per VO, `<module> <session>...`; `#` starts a comment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SessionLedger {
    open: BTreeMap<String, BTreeSet<String>>,
}

impl SessionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(&mut self, vo: &str, session: &str) -> Result<(), LedgerError> {
        if let Some((owner, _)) = self.open.iter().find(|(_, s)| s.contains(session)) {
            return Err(LedgerError::SessionInUse {
                session: session.into(),
                vo: owner.clone(),
            });
        }
        self.open.entry(vo.into()).or_default().insert(session.into());
        Ok(())
    }

    pub fn close(&mut self, vo: &str, session: &str) -> bool {
        self.open.get_mut(vo).is_some_and(|s| s.remove(session))
    }

    pub fn sessions(&self, vo: &str) -> Vec<&str> {
        self.open
            .get(vo)
            .map(|s| s.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn is_quiescent(&self, vo: &str) -> bool {
        self.sessions(vo).is_empty()
    }

    pub fn parse(text: &str) -> Result<SessionLedger, LedgerError> {
        let mut l = SessionLedger::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut words = line.split_whitespace();
            let Some(vo) = words.next() else { continue };
            l.open.entry(vo.into()).or_default();
            for s in words {
                l.open(vo, s).map_err(|e| LedgerError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            }
        }
        Ok(l)
    }
}

impl fmt::Display for SessionLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (vo, sessions) in &self.open {
            f.write_str(vo)?;
            for s in sessions {
                write!(f, " {s}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sessions_are_unique_across_vos() {
        let mut l = SessionLedger::parse("travelBK s1 s2\nweddings # none yet\n").unwrap();
        assert!(l.is_quiescent("weddings"));
        assert_eq!(l.sessions("travelBK"), vec!["s1", "s2"]);
        assert!(matches!(l.open("weddings", "s1"), Err(LedgerError::SessionInUse { .. })));
        assert!(l.close("travelBK", "s1"));
        assert!(!l.close("travelBK", "s1"));
        assert_eq!(SessionLedger::parse(&l.to_string()).unwrap(), l);
        assert!(matches!(
            SessionLedger::parse("a s\nb s\n"),
            Err(LedgerError::Parse { line: 2, .. })
        ));
    }
}
