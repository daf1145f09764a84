//! Typing judgments and the dynamic admission gate.
//!
//! Terms get base types from their lexical class, the environment, or the
//! ontology map; expressions and filters are checked structurally; triples
//! are well typed when the subject is a resource, the predicate has a
//! property type and the object fits its range. Two special triple forms
//! are typed on their own: `p rdfs:range D` (an explicit range
//! prescription) and `p rdf:type owl:ObjectProperty` (a URI-valued
//! property declaration).
//!
//! Only well-typed triples are admitted into a store; ill-typed fetched
//! triples are rejected with a machine-readable reason, never an error.

use std::fmt;

use thiserror::Error;

use crate::script::ast::{Expr, ExprKind, Filter, FilterKind, GraphBlock, Query, Span};
use crate::term::{vocab, Term, Triple, Uri};
use crate::types::{subtype, OntologyMap, SimpleType, Type, TypeEnv};

/// A typing failure, with a breadcrumb path to the offending node.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub path: Vec<String>,
    pub span: Span,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "in {}: {}", self.path.join(" > "), self.kind)
        }
    }
}

impl TypeError {
    pub fn new(kind: TypeErrorKind) -> Self {
        TypeError {
            kind,
            path: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn at(mut self, span: Span) -> Self {
        // keep the innermost span that was actually set
        if self.span.line == 0 {
            self.span = span;
        }
        self
    }

    /// Prepends a path segment, building the route from the script root to
    /// the offending node as the error propagates outward.
    pub fn in_ctx(mut self, segment: impl Into<String>) -> Self {
        self.path.insert(0, segment.into());
        self
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TypeErrorKind {
    #[error("unbound variable ${0}")]
    UnboundVariable(String),
    #[error("{term} has type {found}, which is not a subtype of {expected}")]
    NotSubtype {
        term: String,
        found: Type,
        expected: Type,
    },
    #[error("subject {term} is not a resource")]
    SubjectNotResource { term: String },
    #[error("predicate {term} has no property type")]
    PredicateNotProperty { term: String },
    #[error("object {term} has type {found}, but property {predicate} requires {expected}")]
    ObjectTypeMismatch {
        term: String,
        found: SimpleType,
        predicate: String,
        expected: SimpleType,
    },
    #[error("graph name {term} is not a resource")]
    GraphNameNotResource { term: String },
    #[error("operand has type {found}, expected a numeric type (≤ xsd:decimal)")]
    OperandNotNumeric { found: SimpleType },
    #[error("operand has type {found}, expected xsd:string")]
    OperandNotString { found: SimpleType },
    #[error("cannot compare {left} with {right}: no common simple type")]
    NotComparable { left: SimpleType, right: SimpleType },
    #[error("select ${0} has no type annotation (run inference first)")]
    MissingAnnotation(String),
    #[error("select ${0} has no binding source: a where clause must follow the select group")]
    SelectNoBindingSource(String),
}

fn err(kind: TypeErrorKind) -> TypeError {
    TypeError::new(kind)
}

/// The base type of a URI: its property type when the ontology maps it,
/// `Res` otherwise (every URI identifies a resource).
pub fn base_type(uri: &Uri, ont: &OntologyMap) -> Type {
    ont.property_type(uri).unwrap_or(Type::RESOURCE)
}

/// The base type of a term: environment lookup for variables, ontology
/// lookup for URIs, lexical classification for literals.
pub fn term_base_type(env: &TypeEnv, t: &Term, ont: &OntologyMap) -> Result<Type, TypeError> {
    match t {
        Term::Var(v) => env
            .lookup(v)
            .ok_or_else(|| err(TypeErrorKind::UnboundVariable(v.clone()))),
        Term::Uri(u) => Ok(base_type(u, ont)),
        literal => Ok(Type::Simple(literal.simple_type().expect("literal"))),
    }
}

/// `Γ ⊢ t : target` — true when the base type is a subtype of `target`.
/// An unbound variable is an error, not `false`.
pub fn has_type(
    env: &TypeEnv,
    t: &Term,
    target: Type,
    ont: &OntologyMap,
) -> Result<bool, TypeError> {
    Ok(subtype(term_base_type(env, t, ont)?, target))
}

/// The least simple type a term can be used at in an expression. A term
/// of property type may still be used as a resource.
fn least_simple_type(env: &TypeEnv, t: &Term, ont: &OntologyMap) -> Result<SimpleType, TypeError> {
    Ok(match term_base_type(env, t, ont)? {
        Type::Simple(s) => s,
        Type::Property(_) => SimpleType::Resource,
    })
}

/// Types an expression, returning its least simple type.
pub fn type_expr(env: &TypeEnv, e: &Expr, ont: &OntologyMap) -> Result<SimpleType, TypeError> {
    match &e.kind {
        ExprKind::Term(t) => least_simple_type(env, t, ont).map_err(|e2| e2.at(e.span)),
        ExprKind::Now => Ok(SimpleType::DateTime),
        ExprKind::Str(inner) => {
            type_expr(env, inner, ont).map_err(|e2| e2.in_ctx("str(..)"))?;
            Ok(SimpleType::String)
        }
        ExprKind::Abs(inner) => {
            let s = type_expr(env, inner, ont).map_err(|e2| e2.in_ctx("abs(..)"))?;
            numeric(s).map_err(|e2| e2.in_ctx("abs(..)").at(e.span))
        }
        ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
            let op = if matches!(e.kind, ExprKind::Add(..)) {
                "+"
            } else {
                "-"
            };
            let sa = type_expr(env, a, ont).map_err(|e2| e2.in_ctx(op))?;
            let sb = type_expr(env, b, ont).map_err(|e2| e2.in_ctx(op))?;
            numeric(sa).map_err(|e2| e2.in_ctx(op).at(a.span))?;
            numeric(sb).map_err(|e2| e2.in_ctx(op).at(b.span))?;
            // both ≤ decimal, so the join exists: integer only when both are
            Ok(sa.join(sb).expect("numeric types are comparable"))
        }
        ExprKind::Haversine(args) => {
            for arg in args.iter() {
                let s = type_expr(env, arg, ont).map_err(|e2| e2.in_ctx("haversine(..)"))?;
                numeric(s).map_err(|e2| e2.in_ctx("haversine(..)").at(arg.span))?;
            }
            Ok(SimpleType::Decimal)
        }
    }
}

fn numeric(s: SimpleType) -> Result<SimpleType, TypeError> {
    if s.subtype_of(SimpleType::Decimal) {
        Ok(s)
    } else {
        Err(err(TypeErrorKind::OperandNotNumeric { found: s }))
    }
}

/// Checks a filter: regex/langMatches need string operands, comparisons
/// need a shared simple type (integer widens to decimal).
pub fn check_filter(env: &TypeEnv, f: &Filter, ont: &OntologyMap) -> Result<(), TypeError> {
    match &f.kind {
        FilterKind::Or(a, b) | FilterKind::And(a, b) => {
            check_filter(env, a, ont)?;
            check_filter(env, b, ont)
        }
        FilterKind::Not(inner) => check_filter(env, inner, ont).map_err(|e| e.in_ctx("!")),
        FilterKind::Regex(e, _) | FilterKind::LangMatches(e, _) => {
            let name = if matches!(f.kind, FilterKind::Regex(..)) {
                "regex"
            } else {
                "langMatches"
            };
            let s = type_expr(env, e, ont).map_err(|e2| e2.in_ctx(name))?;
            if s != SimpleType::String {
                return Err(err(TypeErrorKind::OperandNotString { found: s })
                    .in_ctx(name)
                    .at(e.span));
            }
            Ok(())
        }
        FilterKind::Eq(a, b) | FilterKind::Lt(a, b) => {
            let op = if matches!(f.kind, FilterKind::Eq(..)) {
                "="
            } else {
                "<"
            };
            let sa = type_expr(env, a, ont).map_err(|e2| e2.in_ctx(op))?;
            let sb = type_expr(env, b, ont).map_err(|e2| e2.in_ctx(op))?;
            if sa.join(sb).is_none() {
                return Err(err(TypeErrorKind::NotComparable {
                    left: sa,
                    right: sb,
                })
                .in_ctx(op)
                .at(f.span));
            }
            Ok(())
        }
    }
}

/// The simple type a range URI prescribes: one of the datatype URIs, or
/// `Res` for any other URI (a class range means URI-valued objects).
fn range_uri_type(object: &Uri) -> SimpleType {
    SimpleType::from_datatype_uri(object.as_str()).unwrap_or(SimpleType::Resource)
}

/// Checks one triple against the data rules.
pub fn check_triple(env: &TypeEnv, triple: &Triple, ont: &OntologyMap) -> Result<(), TypeError> {
    // range prescription: `p rdfs:range D` needs p : Property(σ_D)
    if let (Term::Uri(p), Term::Uri(d)) = (&triple.predicate, &triple.object) {
        if p.as_str() == vocab::RDFS_RANGE {
            let target = Type::Property(range_uri_type(d));
            if has_type(env, &triple.subject, target, ont)? {
                return Ok(());
            }
            // a failed prescription can still be admitted as plain data
            // when rdfs:range itself has a property type
            return plain_triple(env, triple, ont).map_err(|_| {
                err(TypeErrorKind::NotSubtype {
                    term: triple.subject.to_string(),
                    found: term_base_type(env, &triple.subject, ont).unwrap_or(Type::RESOURCE),
                    expected: target,
                })
            });
        }
        // object-property declaration: needs p : Property(Res)
        if p.as_str() == vocab::RDF_TYPE && d.as_str() == vocab::OWL_OBJECT_PROPERTY {
            let target = Type::Property(SimpleType::Resource);
            if has_type(env, &triple.subject, target, ont)? {
                return Ok(());
            }
            return plain_triple(env, triple, ont).map_err(|_| {
                err(TypeErrorKind::NotSubtype {
                    term: triple.subject.to_string(),
                    found: term_base_type(env, &triple.subject, ont).unwrap_or(Type::RESOURCE),
                    expected: target,
                })
            });
        }
    }
    plain_triple(env, triple, ont)
}

/// The general data rule: subject : Res, predicate : Property(σ),
/// object : σ.
fn plain_triple(env: &TypeEnv, triple: &Triple, ont: &OntologyMap) -> Result<(), TypeError> {
    if !has_type(env, &triple.subject, Type::RESOURCE, ont)? {
        return Err(err(TypeErrorKind::SubjectNotResource {
            term: triple.subject.to_string(),
        }));
    }
    let range = match term_base_type(env, &triple.predicate, ont)? {
        Type::Property(s) => s,
        Type::Simple(_) => {
            return Err(err(TypeErrorKind::PredicateNotProperty {
                term: triple.predicate.to_string(),
            }))
        }
    };
    if !has_type(env, &triple.object, Type::Simple(range), ont)? {
        let found = match term_base_type(env, &triple.object, ont)? {
            Type::Simple(s) => s,
            Type::Property(_) => SimpleType::Resource,
        };
        return Err(err(TypeErrorKind::ObjectTypeMismatch {
            term: triple.object.to_string(),
            found,
            predicate: triple.predicate.to_string(),
            expected: range,
        }));
    }
    Ok(())
}

/// Checks a graph block: the graph name must be a resource and every
/// triple must be well typed.
pub fn check_graph_block(
    env: &TypeEnv,
    block: &GraphBlock,
    ont: &OntologyMap,
) -> Result<(), TypeError> {
    if !has_type(env, &block.graph, Type::RESOURCE, ont)? {
        return Err(err(TypeErrorKind::GraphNameNotResource {
            term: block.graph.to_string(),
        })
        .at(block.span));
    }
    for (i, triple) in block.triples.iter().enumerate() {
        check_triple(env, triple, ont)
            .map_err(|e| e.in_ctx(format!("triple {}", i + 1)).at(block.span))?;
    }
    Ok(())
}

/// Checks data: every graph block of every `Data` node, both sides of
/// conjunctions and unions, filters by `check_filter`.
pub fn check_query(env: &TypeEnv, q: &Query, ont: &OntologyMap) -> Result<(), TypeError> {
    match q {
        Query::Data(blocks) => {
            for block in blocks {
                check_graph_block(env, block, ont)
                    .map_err(|e| e.in_ctx(format!("graph {}", block.graph)))?;
            }
            Ok(())
        }
        Query::Filter(f) => check_filter(env, f, ont).map_err(|e| e.in_ctx("filter")),
        Query::Conj(a, b) => {
            check_query(env, a, ont)?;
            check_query(env, b, ont)
        }
        Query::Union(a, b) => {
            check_query(env, a, ont).map_err(|e| e.in_ctx("union left"))?;
            check_query(env, b, ont).map_err(|e| e.in_ctx("union right"))
        }
    }
}

/// Why a fetched triple was rejected by the admission gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub triple: Triple,
    pub reason: TypeError,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rejected {}: {}", self.triple, self.reason)
    }
}

/// Partitions ground triples into admitted and rejected under the empty
/// environment. Order is preserved; rejection is data, not failure.
pub fn admit_triples(triples: &[Triple], ont: &OntologyMap) -> (Vec<Triple>, Vec<Rejection>) {
    let env = TypeEnv::empty();
    let mut admitted = Vec::new();
    let mut rejected = Vec::new();
    for triple in triples {
        debug_assert!(triple.is_ground(), "admission takes ground triples");
        match check_triple(&env, triple, ont) {
            Ok(()) => admitted.push(triple.clone()),
            Err(reason) => {
                log::warn!("admission rejected {triple}: {reason}");
                rejected.push(Rejection {
                    triple: triple.clone(),
                    reason,
                });
            }
        }
    }
    (admitted, rejected)
}

/// An ontology conflict found while deriving property types from data.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("conflicting property types derived for {uri}: Property({first}) vs Property({second})")]
pub struct DerivedConflict {
    pub uri: Uri,
    pub first: SimpleType,
    pub second: SimpleType,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub struct DeriveError {
    pub conflicts: Vec<DerivedConflict>,
}

impl fmt::Display for DeriveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conflicts.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Derives the minimal ontology map from range and object-property
/// statements.
///
/// `p rdfs:range D` contributes `Property(σ_D)`; `p rdf:type
/// owl:ObjectProperty` contributes `Property(Res)`; a bare
/// `owl:DatatypeProperty` declaration contributes nothing. Comparable
/// contributions resolve to their join; incomparable ones are all
/// reported as conflicts.
pub fn derive_ontology(triples: &[Triple]) -> Result<OntologyMap, DeriveError> {
    let mut map = OntologyMap::new();
    let mut conflicts = Vec::new();
    for triple in triples {
        let (Term::Uri(subject), Term::Uri(predicate)) = (&triple.subject, &triple.predicate)
        else {
            continue;
        };
        let contributed = match (predicate.as_str(), &triple.object) {
            (vocab::RDFS_RANGE, Term::Uri(d)) => Some(range_uri_type(d)),
            (vocab::RDF_TYPE, Term::Uri(d)) if d.as_str() == vocab::OWL_OBJECT_PROPERTY => {
                Some(SimpleType::Resource)
            }
            _ => None,
        };
        let Some(range) = contributed else { continue };
        match map.range(subject) {
            None => map.insert(subject.clone(), range),
            Some(existing) => match existing.join(range) {
                Some(joined) => map.insert(subject.clone(), joined),
                None => conflicts.push(DerivedConflict {
                    uri: subject.clone(),
                    first: existing,
                    second: range,
                }),
            },
        }
    }
    if conflicts.is_empty() {
        Ok(map)
    } else {
        Err(DeriveError { conflicts })
    }
}
