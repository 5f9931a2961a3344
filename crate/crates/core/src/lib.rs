//! Modelling and verification toolkit for virtual organisation breeding
//! environments (VBEs).
//!
//! A `.vbe` bundle describes one VBE (persistent partners, resources,
//! policies and task modules), any number of business configurations that
//! extend it with associates, VO modules, external entities and customers,
//! and the component specifications and connectors that label module graphs.
//!
//! The crate is organised by workflow:
//!
//! - [`model`] holds the domain types and structural validation.
//! - [`lang`] parses, renders and typechecks the textual language.
//! - [`graph`] expands configurations into labelled graphs, evolves them,
//!   diffs them and exports DOT.
//! - [`runtime`] checks conversation lifecycles and behaviour formulas on
//!   finite event traces, and simulates traces from scripts.
//! - [`sla`] evaluates and optimises c-semiring constraint problems used to
//!   negotiate service-level agreements.

pub mod expr;
pub mod graph;
pub mod lang;
pub mod model;
pub mod report;
pub mod runtime;
pub mod sla;
pub mod span;

pub use lang::{load_bundle, parse_bundle, render, typecheck, BundleError, ParseError};
pub use model::ModelBundle;
pub use report::{ElementRef, Finding, FindingCode, ValidationReport};
pub use span::Span;
