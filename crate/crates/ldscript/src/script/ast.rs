//! Abstract syntax of scripts, queries, filters and expressions.
//!
//! Spans are diagnostic metadata only: they are carried for error
//! reporting and deliberately excluded from structural equality, so a
//! parsed AST compares equal to a programmatically built one.

use std::collections::{BTreeMap, BTreeSet};

use crate::term::{Term, Triple};
use crate::types::Type;

/// Source position (1-based). Equality always holds: spans never affect
/// AST comparison.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

/// An expression over terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Term(Term),
    Now,
    Str(Box<Expr>),
    Abs(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Haversine(Box<[Expr; 4]>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn term(t: Term) -> Self {
        Expr::new(ExprKind::Term(t))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            ExprKind::Term(Term::Var(v)) => {
                out.insert(v.clone());
            }
            ExprKind::Term(_) | ExprKind::Now => {}
            ExprKind::Str(e) | ExprKind::Abs(e) => e.collect_vars(out),
            ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ExprKind::Haversine(args) => {
                for e in args.iter() {
                    e.collect_vars(out);
                }
            }
        }
    }

    pub fn substitute(&self, binding: &BTreeMap<String, Term>) -> Expr {
        let kind = match &self.kind {
            ExprKind::Term(t) => ExprKind::Term(substitute_term(t, binding)),
            ExprKind::Now => ExprKind::Now,
            ExprKind::Str(e) => ExprKind::Str(Box::new(e.substitute(binding))),
            ExprKind::Abs(e) => ExprKind::Abs(Box::new(e.substitute(binding))),
            ExprKind::Add(a, b) => ExprKind::Add(
                Box::new(a.substitute(binding)),
                Box::new(b.substitute(binding)),
            ),
            ExprKind::Sub(a, b) => ExprKind::Sub(
                Box::new(a.substitute(binding)),
                Box::new(b.substitute(binding)),
            ),
            ExprKind::Haversine(args) => ExprKind::Haversine(Box::new([
                args[0].substitute(binding),
                args[1].substitute(binding),
                args[2].substitute(binding),
                args[3].substitute(binding),
            ])),
        };
        Expr {
            kind,
            span: self.span,
        }
    }
}

pub fn substitute_term(t: &Term, binding: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    }
}

/// A filter (boolean expression).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filter {
    pub kind: FilterKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterKind {
    Or(Box<Filter>, Box<Filter>),
    And(Box<Filter>, Box<Filter>),
    Not(Box<Filter>),
    /// Pattern is validated at parse time.
    Regex(Expr, String),
    LangMatches(Expr, String),
    Eq(Expr, Expr),
    Lt(Expr, Expr),
}

impl Filter {
    pub fn new(kind: FilterKind) -> Self {
        Filter {
            kind,
            span: Span::default(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            FilterKind::Or(a, b) | FilterKind::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            FilterKind::Not(f) => f.collect_vars(out),
            FilterKind::Regex(e, _) | FilterKind::LangMatches(e, _) => e.collect_vars(out),
            FilterKind::Eq(a, b) | FilterKind::Lt(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn substitute(&self, binding: &BTreeMap<String, Term>) -> Filter {
        let kind = match &self.kind {
            FilterKind::Or(a, b) => FilterKind::Or(
                Box::new(a.substitute(binding)),
                Box::new(b.substitute(binding)),
            ),
            FilterKind::And(a, b) => FilterKind::And(
                Box::new(a.substitute(binding)),
                Box::new(b.substitute(binding)),
            ),
            FilterKind::Not(f) => FilterKind::Not(Box::new(f.substitute(binding))),
            FilterKind::Regex(e, p) => FilterKind::Regex(e.substitute(binding), p.clone()),
            FilterKind::LangMatches(e, r) => {
                FilterKind::LangMatches(e.substitute(binding), r.clone())
            }
            FilterKind::Eq(a, b) => FilterKind::Eq(a.substitute(binding), b.substitute(binding)),
            FilterKind::Lt(a, b) => FilterKind::Lt(a.substitute(binding), b.substitute(binding)),
        };
        Filter {
            kind,
            span: self.span,
        }
    }
}

/// `graph t { triples }` — a named-graph block of triple patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphBlock {
    pub graph: Term,
    pub triples: Vec<Triple>,
    pub span: Span,
}

impl GraphBlock {
    pub fn new(graph: Term, triples: Vec<Triple>) -> Self {
        GraphBlock {
            graph,
            triples,
            span: Span::default(),
        }
    }
}

/// A query: data patterns, filters, conjunction and union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Data(Vec<GraphBlock>),
    Filter(Filter),
    Conj(Box<Query>, Box<Query>),
    Union(Box<Query>, Box<Query>),
}

impl Query {
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Query::Data(blocks) => {
                for b in blocks {
                    if let Term::Var(v) = &b.graph {
                        out.insert(v.clone());
                    }
                    for t in &b.triples {
                        for term in [&t.subject, &t.predicate, &t.object] {
                            if let Term::Var(v) = term {
                                out.insert(v.clone());
                            }
                        }
                    }
                }
            }
            Query::Filter(f) => f.collect_vars(out),
            Query::Conj(a, b) | Query::Union(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn is_ground(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn substitute(&self, binding: &BTreeMap<String, Term>) -> Query {
        match self {
            Query::Data(blocks) => Query::Data(
                blocks
                    .iter()
                    .map(|b| GraphBlock {
                        graph: substitute_term(&b.graph, binding),
                        triples: b
                            .triples
                            .iter()
                            .map(|t| {
                                Triple::new(
                                    substitute_term(&t.subject, binding),
                                    substitute_term(&t.predicate, binding),
                                    substitute_term(&t.object, binding),
                                )
                            })
                            .collect(),
                        span: b.span,
                    })
                    .collect(),
            ),
            Query::Filter(f) => Query::Filter(f.substitute(binding)),
            Query::Conj(a, b) => Query::Conj(
                Box::new(a.substitute(binding)),
                Box::new(b.substitute(binding)),
            ),
            Query::Union(a, b) => Query::Union(
                Box::new(a.substitute(binding)),
                Box::new(b.substitute(binding)),
            ),
        }
    }
}

/// A script: a sequence of statements ending in `Unit`. `Iterate` is a
/// terminator — its body is a complete script and nothing follows it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Script {
    Where {
        query: Query,
        rest: Box<Script>,
        span: Span,
    },
    FromNamed {
        term: Term,
        rest: Box<Script>,
        span: Span,
    },
    Select {
        var: String,
        ty: Option<Type>,
        rest: Box<Script>,
        span: Span,
    },
    Iterate {
        body: Box<Script>,
        span: Span,
    },
    Unit,
}

impl Script {
    pub fn where_(query: Query, rest: Script) -> Script {
        Script::Where {
            query,
            rest: Box::new(rest),
            span: Span::default(),
        }
    }

    pub fn from_named(term: Term, rest: Script) -> Script {
        Script::FromNamed {
            term,
            rest: Box::new(rest),
            span: Span::default(),
        }
    }

    pub fn select(var: &str, ty: Option<Type>, rest: Script) -> Script {
        Script::Select {
            var: var.to_string(),
            ty,
            rest: Box::new(rest),
            span: Span::default(),
        }
    }

    pub fn iterate(body: Script) -> Script {
        Script::Iterate {
            body: Box::new(body),
            span: Span::default(),
        }
    }

    /// Substitutes ground terms for variables; `select` statements shadow
    /// the substitution for their own variable in their scope.
    pub fn substitute(&self, binding: &BTreeMap<String, Term>) -> Script {
        match self {
            Script::Where { query, rest, span } => Script::Where {
                query: query.substitute(binding),
                rest: Box::new(rest.substitute(binding)),
                span: *span,
            },
            Script::FromNamed { term, rest, span } => Script::FromNamed {
                term: substitute_term(term, binding),
                rest: Box::new(rest.substitute(binding)),
                span: *span,
            },
            Script::Select {
                var,
                ty,
                rest,
                span,
            } => {
                if binding.contains_key(var) {
                    let mut inner = binding.clone();
                    inner.remove(var);
                    Script::Select {
                        var: var.clone(),
                        ty: *ty,
                        rest: Box::new(rest.substitute(&inner)),
                        span: *span,
                    }
                } else {
                    Script::Select {
                        var: var.clone(),
                        ty: *ty,
                        rest: Box::new(rest.substitute(binding)),
                        span: *span,
                    }
                }
            }
            Script::Iterate { body, span } => Script::Iterate {
                body: Box::new(body.substitute(binding)),
                span: *span,
            },
            Script::Unit => Script::Unit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_do_not_affect_equality() {
        let a = Script::FromNamed {
            term: Term::uri("http://x.org/a"),
            rest: Box::new(Script::Unit),
            span: Span::new(3, 7),
        };
        let b = Script::from_named(Term::uri("http://x.org/a"), Script::Unit);
        assert_eq!(a, b);
    }

    #[test]
    fn select_shadows_substitution() {
        let s = Script::select("x", None, Script::from_named(Term::var("x"), Script::Unit));
        let mut binding = BTreeMap::new();
        binding.insert("x".to_string(), Term::uri("http://x.org/a"));
        // the inner $x is bound by the select, not by the substitution
        assert_eq!(s.substitute(&binding), s);

        let free = Script::from_named(Term::var("x"), Script::Unit);
        let expected = Script::from_named(Term::uri("http://x.org/a"), Script::Unit);
        assert_eq!(free.substitute(&binding), expected);
    }

    #[test]
    fn query_var_collection() {
        let q = Query::Conj(
            Box::new(Query::Data(vec![GraphBlock::new(
                Term::var("g"),
                vec![Triple::new(
                    Term::var("s"),
                    Term::uri("http://x.org/p"),
                    Term::int(1),
                )],
            )])),
            Box::new(Query::Filter(Filter::new(FilterKind::Eq(
                Expr::term(Term::var("s")),
                Expr::term(Term::var("o")),
            )))),
        );
        let vars: Vec<String> = q.free_vars().into_iter().collect();
        assert_eq!(vars, ["g", "o", "s"]);
        assert!(!q.is_ground());
    }
}
