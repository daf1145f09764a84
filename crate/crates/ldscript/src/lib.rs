//! A typed scripting engine for consuming Linked Data.
//!
//! Scripts dereference HTTP URIs, dynamically type-filter the returned RDF
//! into a local named-graph quad store, and are statically type checked
//! before execution. The engine is built from six layers:
//!
//! - [`term`] / [`decimal`] / [`iri`]: RDF terms with exact literal values,
//!   triples and quads, blank-node skolemization ([`skolem`]);
//! - [`turtle`]: parsing of fetched documents (N-Triples and a Turtle
//!   subset) and canonical N-Quads serialization ([`nquads`]);
//! - [`types`] / [`typing`]: the ten-type subtype lattice, the ontology map
//!   from property URIs to property types, typing judgments and the
//!   per-triple admission gate for dereferenced data;
//! - [`script`]: the scripting language itself — AST, parser, printer,
//!   static checker and select-annotation inference;
//! - [`store`] / [`eval`]: the local quad store, basic graph pattern
//!   matching, filter/expression evaluation and query solutions;
//! - [`deref`] / [`interp`]: RESTful dereferencing with fixture replay, and
//!   the small-step interpreter that drives well-typed scripts.

pub mod decimal;
pub mod deref;
pub mod eval;
pub mod interp;
pub mod iri;
pub mod nquads;
pub mod script;
pub mod skolem;
pub mod store;
pub mod term;
pub mod turtle;
pub mod types;
pub mod typing;

pub use decimal::Decimal;
pub use term::{LangTag, Quad, Term, Triple, Uri};
pub use types::{OntologyMap, SimpleType, Type, TypeEnv};
