//! The textual `.vbe` language: parsing, canonical rendering and
//! typechecking.
//!
//! A bundle is a sequence of top-level blocks: exactly one `VBE`, any
//! number of `BUSINESS CONFIGURATION`, `TASK MODULE`, `VO MODULE`,
//! `BUSINESS PROTOCOL`, `BUSINESS ROLE`, `CONNECTOR` and `POLICY` blocks,
//! and `include "file";` directives (resolved by [`load_bundle`]).

mod lexer;
mod parser;
mod render;
mod typecheck;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

pub use parser::{parse_actions, parse_expr, parse_policies};
pub use render::{render, render_actions, render_policies};
pub use typecheck::typecheck;

pub(crate) use lexer::{is_ident_char, is_ident_start};

use crate::model::ModelBundle;
use crate::span::Span;
use parser::Block;

/// A syntax error at a source position, with the set of tokens that would
/// have been accepted there.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    pub(crate) fn new(at: Span, expected: &[&str], found: &str) -> Self {
        ParseError {
            line: at.line,
            column: at.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.to_owned(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.column)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BundleError {
    #[error("{}{error}", file_prefix(.file))]
    Parse {
        file: Option<PathBuf>,
        error: ParseError,
    },
    #[error("{span}: duplicate {kind} `{name}`")]
    DuplicateName {
        kind: &'static str,
        name: String,
        span: Span,
    },
    #[error("{span}: {what} `{name}` does not resolve")]
    UnresolvedReference {
        what: &'static str,
        name: String,
        span: Span,
    },
    #[error("bundle declares no VBE block")]
    MissingVbe,
    #[error("{}: {message}", .path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}: include cycle", .0.display())]
    IncludeCycle(PathBuf),
    #[error("{span}: `include` needs a file system; use load_bundle")]
    IncludeWithoutFile { span: Span },
}

fn file_prefix(file: &Option<PathBuf>) -> String {
    file.as_ref()
        .map(|p| format!("{}:", p.display()))
        .unwrap_or_default()
}

impl From<ParseError> for BundleError {
    fn from(error: ParseError) -> Self {
        BundleError::Parse { file: None, error }
    }
}

/// Parses a self-contained bundle. `include` directives are rejected.
pub fn parse_bundle(text: &str) -> Result<ModelBundle, BundleError> {
    let blocks = parser::parse_blocks(text)?;
    if let Some(span) = blocks.iter().find_map(|b| match b {
        Block::Include(_, span) => Some(*span),
        _ => None,
    }) {
        return Err(BundleError::IncludeWithoutFile { span });
    }
    parser::assemble(blocks)
}

/// Reads and parses a bundle from disk, splicing `include "file";`
/// directives (paths relative to the including file) in place.
pub fn load_bundle(path: &Path) -> Result<ModelBundle, BundleError> {
    let mut blocks = Vec::new();
    let mut stack = BTreeSet::new();
    collect_blocks(path, &mut stack, &mut blocks)?;
    parser::assemble(blocks)
}

fn collect_blocks(path: &Path, stack: &mut BTreeSet<PathBuf>, out: &mut Vec<Block>) -> Result<(), BundleError> {
    let key = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    if !stack.insert(key.clone()) {
        return Err(BundleError::IncludeCycle(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| BundleError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let blocks = parser::parse_blocks(&text).map_err(|error| BundleError::Parse {
        file: Some(path.to_path_buf()),
        error,
    })?;
    for b in blocks {
        match b {
            Block::Include(rel, _) => {
                let next = path.parent().unwrap_or(Path::new(".")).join(rel);
                collect_blocks(&next, stack, out)?;
            }
            other => out.push(other),
        }
    }
    stack.remove(&key);
    Ok(())
}

/// True when `s` can be written as a bare identifier in the language.
pub fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char)
}
