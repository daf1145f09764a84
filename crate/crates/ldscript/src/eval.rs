//! Evaluation of expressions, filters and queries.
//!
//! Expression arithmetic is exact (integer-preserving when both operands
//! are integers); `haversine` is the one geometric escape hatch and
//! returns a decimal rounded to micrometre-of-a-kilometre precision.
//! Filter evaluation is pure in the binding and never inspects the store.

use chrono::{DateTime, Utc};

use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::decimal::Decimal;
use crate::script::ast::{Expr, ExprKind, Filter, FilterKind, Query};
use crate::store::{Binding, QuadStore, SolutionSet};
use crate::term::{Quad, Term};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Fractional digits kept when a haversine result is normalized into a
/// decimal.
const HAVERSINE_SCALE: u32 = 6;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable ${0} at evaluation time")]
    UnboundVariable(String),
    #[error("runtime type mismatch (checker bug): {0}")]
    RuntimeType(String),
    #[error("filter references ${0}, which no data pattern of the same conjunction binds")]
    FilterVarUnbound(String),
    #[error("query is not ground")]
    NonGroundQuery,
}

/// Ambient evaluation inputs: the engine clock.
#[derive(Debug, Clone, Copy)]
pub struct EvalCtx {
    pub now: DateTime<Utc>,
}

impl EvalCtx {
    pub fn fixed(now: DateTime<Utc>) -> Self {
        EvalCtx { now }
    }
}

/// Great-circle distance in km between two (lat, long) points in degrees.
pub fn haversine_km(lat1: f64, long1: f64, lat2: f64, long2: f64) -> f64 {
    let p1 = lat1.to_radians();
    let p2 = lat2.to_radians();
    let dp = (lat2 - lat1).to_radians();
    let dl = (long2 - long1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().atan2((1.0 - a).sqrt())
}

/// Evaluates an expression under a binding to a ground term.
pub fn eval_expr(binding: &Binding, expr: &Expr, ctx: &EvalCtx) -> Result<Term, EvalError> {
    match &expr.kind {
        ExprKind::Term(Term::Var(v)) => binding
            .get(v)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        ExprKind::Term(ground) => Ok(ground.clone()),
        ExprKind::Now => Ok(Term::DateTime(ctx.now)),
        ExprKind::Str(inner) => {
            let v = eval_expr(binding, inner, ctx)?;
            Ok(Term::Str(v.lexical_form(), None))
        }
        ExprKind::Abs(inner) => match eval_expr(binding, inner, ctx)? {
            Term::Int(i) => Ok(Term::Int(i.abs())),
            Term::Dec(d) => Ok(Term::Dec(d.abs())),
            other => Err(EvalError::RuntimeType(format!(
                "abs of non-numeric {other}"
            ))),
        },
        ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
            let left = eval_expr(binding, a, ctx)?;
            let right = eval_expr(binding, b, ctx)?;
            let subtract = matches!(expr.kind, ExprKind::Sub(..));
            match (left, right) {
                (Term::Int(x), Term::Int(y)) => Ok(Term::Int(if subtract { x - y } else { x + y })),
                (x, y) => {
                    let dx = as_decimal(&x)?;
                    let dy = as_decimal(&y)?;
                    Ok(Term::Dec(if subtract { &dx - &dy } else { &dx + &dy }))
                }
            }
        }
        ExprKind::Haversine(args) => {
            let mut coords = [0f64; 4];
            for (slot, arg) in coords.iter_mut().zip(args.iter()) {
                let v = eval_expr(binding, arg, ctx)?;
                *slot = as_f64(&v)?;
            }
            let km = haversine_km(coords[0], coords[1], coords[2], coords[3]);
            Decimal::from_f64(km, HAVERSINE_SCALE)
                .map(Term::Dec)
                .ok_or_else(|| EvalError::RuntimeType(format!("haversine produced {km}")))
        }
    }
}

fn as_decimal(t: &Term) -> Result<Decimal, EvalError> {
    match t {
        Term::Int(i) => Ok(Decimal::from_bigint(i.clone())),
        Term::Dec(d) => Ok(d.clone()),
        other => Err(EvalError::RuntimeType(format!("{other} is not numeric"))),
    }
}

fn as_f64(t: &Term) -> Result<f64, EvalError> {
    match t {
        Term::Int(i) => i
            .to_f64()
            .ok_or_else(|| EvalError::RuntimeType(format!("{i} out of float range"))),
        Term::Dec(d) => Ok(d.to_f64()),
        other => Err(EvalError::RuntimeType(format!("{other} is not numeric"))),
    }
}

/// Evaluates a filter under a binding.
pub fn eval_filter(binding: &Binding, filter: &Filter, ctx: &EvalCtx) -> Result<bool, EvalError> {
    match &filter.kind {
        FilterKind::Or(a, b) => Ok(eval_filter(binding, a, ctx)? || eval_filter(binding, b, ctx)?),
        FilterKind::And(a, b) => Ok(eval_filter(binding, a, ctx)? && eval_filter(binding, b, ctx)?),
        FilterKind::Not(inner) => Ok(!eval_filter(binding, inner, ctx)?),
        FilterKind::Regex(e, pattern) => {
            let v = eval_expr(binding, e, ctx)?;
            let Term::Str(s, _) = v else {
                return Err(EvalError::RuntimeType(format!("regex on non-string {v}")));
            };
            let re = regex::Regex::new(pattern)
                .map_err(|e| EvalError::RuntimeType(format!("invalid regex: {e}")))?;
            Ok(re.is_match(&s))
        }
        FilterKind::LangMatches(e, range) => {
            let v = eval_expr(binding, e, ctx)?;
            let Term::Str(_, tag) = v else {
                return Err(EvalError::RuntimeType(format!(
                    "langMatches on non-string {v}"
                )));
            };
            Ok(match tag {
                // untagged strings match no range at all
                None => false,
                Some(tag) => lang_range_matches(tag.as_str(), range),
            })
        }
        FilterKind::Eq(a, b) => {
            let left = eval_expr(binding, a, ctx)?;
            let right = eval_expr(binding, b, ctx)?;
            value_eq(&left, &right)
        }
        FilterKind::Lt(a, b) => {
            let left = eval_expr(binding, a, ctx)?;
            let right = eval_expr(binding, b, ctx)?;
            value_lt(&left, &right)
        }
    }
}

/// RFC 4646 basic filtering: `*` matches any tag; otherwise the range
/// matches a tag iff it equals the tag or is a `-`-delimited prefix of
/// it. Comparison is case-insensitive (tags are stored lowercase).
fn lang_range_matches(tag: &str, range: &str) -> bool {
    if range == "*" {
        return true;
    }
    let range = range.to_ascii_lowercase();
    tag == range || tag.starts_with(&format!("{range}-"))
}

/// Value equality: numeric across integer/decimal, tag-sensitive for
/// strings, instant-based for dateTimes. Comparing different simple
/// types is a checker-bug signal, not `false`.
pub fn value_eq(a: &Term, b: &Term) -> Result<bool, EvalError> {
    match (a, b) {
        (Term::Int(x), Term::Int(y)) => Ok(x == y),
        (Term::Dec(x), Term::Dec(y)) => Ok(x == y),
        (Term::Int(x), Term::Dec(y)) => Ok(y.cmp_bigint(x).is_eq()),
        (Term::Dec(x), Term::Int(y)) => Ok(x.cmp_bigint(y).is_eq()),
        (Term::Str(s1, t1), Term::Str(s2, t2)) => Ok(s1 == s2 && t1 == t2),
        (Term::Uri(u1), Term::Uri(u2)) => Ok(u1 == u2),
        (Term::DateTime(d1), Term::DateTime(d2)) => Ok(d1 == d2),
        (x, y) => Err(EvalError::RuntimeType(format!("cannot compare {x} = {y}"))),
    }
}

/// Strict order: numeric, chronological, or codepoint on lexical forms,
/// by type.
pub fn value_lt(a: &Term, b: &Term) -> Result<bool, EvalError> {
    match (a, b) {
        (Term::Int(x), Term::Int(y)) => Ok(x < y),
        (Term::Dec(x), Term::Dec(y)) => Ok(x < y),
        (Term::Int(x), Term::Dec(y)) => Ok(y.cmp_bigint(x).is_gt()),
        (Term::Dec(x), Term::Int(y)) => Ok(x.cmp_bigint(y).is_lt()),
        (Term::Str(s1, _), Term::Str(s2, _)) => Ok(s1 < s2),
        (Term::Uri(u1), Term::Uri(u2)) => Ok(u1.as_str() < u2.as_str()),
        (Term::DateTime(d1), Term::DateTime(d2)) => Ok(d1 < d2),
        (x, y) => Err(EvalError::RuntimeType(format!("cannot compare {x} < {y}"))),
    }
}

/// Turns the graph blocks of a `Data` node into quad patterns.
fn data_patterns(blocks: &[crate::script::ast::GraphBlock]) -> Vec<Quad> {
    let mut patterns = Vec::new();
    for block in blocks {
        for t in &block.triples {
            patterns.push(Quad::new(block.graph.clone(), t.clone()));
        }
    }
    patterns
}

/// Evaluates a query against the store.
///
/// A conjunction evaluates its data parts first (natural join), then
/// applies its filters to the joined bindings; a filter variable that no
/// data part binds is an error. Union merges branch solutions
/// duplicate-free.
pub fn eval_query(
    store: &QuadStore,
    query: &Query,
    ctx: &EvalCtx,
) -> Result<SolutionSet, EvalError> {
    let mut data_parts = Vec::new();
    let mut filters = Vec::new();
    flatten_conjunction(query, &mut data_parts, &mut filters);

    let mut solutions = SolutionSet::unit();
    for part in data_parts {
        let part_solutions = match part {
            Query::Data(blocks) => store.match_bgp(&data_patterns(blocks)),
            Query::Union(a, b) => {
                let left = eval_query(store, a, ctx)?;
                let right = eval_query(store, b, ctx)?;
                left.union(&right)
            }
            _ => unreachable!("flattening leaves only data and union parts"),
        };
        solutions = solutions.join(&part_solutions);
    }
    for filter in filters {
        let mut vars = std::collections::BTreeSet::new();
        filter.collect_vars(&mut vars);
        let mut kept = Vec::new();
        for binding in solutions.iter() {
            for v in &vars {
                if !binding.contains(v) {
                    return Err(EvalError::FilterVarUnbound(v.clone()));
                }
            }
            if eval_filter(binding, filter, ctx)? {
                kept.push(binding.clone());
            }
        }
        solutions = SolutionSet::from_bindings(kept);
    }
    Ok(solutions)
}

/// Splits the conjunction spine into data-like parts and filters.
/// Conjunction is associative, so nested conjunctions flatten into the
/// same scope; union branches keep their own scopes.
fn flatten_conjunction<'a>(
    query: &'a Query,
    data: &mut Vec<&'a Query>,
    filters: &mut Vec<&'a Filter>,
) {
    match query {
        Query::Conj(a, b) => {
            flatten_conjunction(a, data, filters);
            flatten_conjunction(b, data, filters);
        }
        Query::Filter(f) => filters.push(f),
        other => data.push(other),
    }
}

/// The data-matches-query check used by ground `where` steps: every quad
/// of a data part must be present, filters must evaluate to true,
/// conjunction needs both sides, union either.
pub fn entails(store: &QuadStore, query: &Query, ctx: &EvalCtx) -> Result<bool, EvalError> {
    if !query.is_ground() {
        return Err(EvalError::NonGroundQuery);
    }
    entails_ground(store, query, ctx)
}

fn entails_ground(store: &QuadStore, query: &Query, ctx: &EvalCtx) -> Result<bool, EvalError> {
    match query {
        Query::Data(blocks) => Ok(data_patterns(blocks).iter().all(|q| store.contains(q))),
        Query::Filter(f) => eval_filter(&Binding::empty(), f, ctx),
        Query::Conj(a, b) => Ok(entails_ground(store, a, ctx)? && entails_ground(store, b, ctx)?),
        Query::Union(a, b) => Ok(entails_ground(store, a, ctx)? || entails_ground(store, b, ctx)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::ast::GraphBlock;
    use crate::term::{Triple, Uri};
    use crate::types::{OntologyMap, SimpleType};

    fn ctx() -> EvalCtx {
        EvalCtx::fixed("2013-03-26T15:39:49Z".parse().unwrap())
    }

    fn b() -> Binding {
        Binding::empty()
    }

    #[test]
    fn str_gives_canonical_lexical_forms() {
        let e = Expr::new(ExprKind::Str(Box::new(Expr::term(Term::int(99)))));
        assert_eq!(eval_expr(&b(), &e, &ctx()).unwrap(), Term::str("99"));
        let e = Expr::new(ExprKind::Str(Box::new(Expr::term(Term::lang_str(
            "workshop", "en-gb",
        )))));
        assert_eq!(eval_expr(&b(), &e, &ctx()).unwrap(), Term::str("workshop"));
        let e = Expr::new(ExprKind::Str(Box::new(Expr::term(Term::uri(
            "http://x.org/a",
        )))));
        assert_eq!(
            eval_expr(&b(), &e, &ctx()).unwrap(),
            Term::str("http://x.org/a")
        );
    }

    #[test]
    fn arithmetic_is_exact_and_integer_preserving() {
        let sum = Expr::new(ExprKind::Add(
            Box::new(Expr::term(Term::int(1))),
            Box::new(Expr::term(Term::int(2))),
        ));
        assert_eq!(eval_expr(&b(), &sum, &ctx()).unwrap(), Term::int(3));
        let mixed = Expr::new(ExprKind::Sub(
            Box::new(Expr::term(Term::dec("0.3"))),
            Box::new(Expr::term(Term::dec("0.1"))),
        ));
        assert_eq!(eval_expr(&b(), &mixed, &ctx()).unwrap(), Term::dec("0.2"));
        let promoted = Expr::new(ExprKind::Add(
            Box::new(Expr::term(Term::int(1))),
            Box::new(Expr::term(Term::dec("0.5"))),
        ));
        assert_eq!(
            eval_expr(&b(), &promoted, &ctx()).unwrap(),
            Term::dec("1.5")
        );
    }

    #[test]
    fn now_uses_the_injected_clock() {
        let e = Expr::new(ExprKind::Now);
        assert_eq!(
            eval_expr(&b(), &e, &ctx()).unwrap(),
            Term::date_time("2013-03-26T15:39:49Z")
        );
    }

    #[test]
    fn haversine_zero_distance() {
        let e = Expr::new(ExprKind::Haversine(Box::new([
            Expr::term(Term::dec("43.25")),
            Expr::term(Term::dec("76.90")),
            Expr::term(Term::dec("43.25")),
            Expr::term(Term::dec("76.90")),
        ])));
        assert_eq!(
            eval_expr(&b(), &e, &ctx()).unwrap(),
            Term::Dec(Decimal::zero())
        );
    }

    /// Independent oracle: spherical law of cosines.
    fn law_of_cosines_km(lat1: f64, long1: f64, lat2: f64, long2: f64) -> f64 {
        let p1 = lat1.to_radians();
        let p2 = lat2.to_radians();
        let dl = (long2 - long1).to_radians();
        let cos_angle = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
        EARTH_RADIUS_KM * cos_angle.acos()
    }

    #[test]
    fn haversine_agrees_with_independent_great_circle_oracle() {
        // Almaty to Astana
        let impl_km = haversine_km(43.25, 76.90, 51.17, 71.43);
        let oracle_km = law_of_cosines_km(43.25, 76.90, 51.17, 71.43);
        assert!(
            (impl_km - oracle_km).abs() < 0.5,
            "impl {impl_km} vs oracle {oracle_km}"
        );
        assert!((impl_km - 972.108).abs() < 0.01);
    }

    #[test]
    fn lang_matching_follows_basic_filtering() {
        let lm = |s: Term, range: &str| {
            let f = Filter::new(FilterKind::LangMatches(Expr::term(s), range.to_string()));
            eval_filter(&b(), &f, &ctx()).unwrap()
        };
        assert!(lm(Term::lang_str("Kazakhstani", "en"), "*"));
        assert!(lm(Term::lang_str("workshop", "en-gb"), "en"));
        assert!(lm(Term::lang_str("workshop", "en-gb"), "en-GB"));
        assert!(!lm(Term::lang_str("workshop", "en-gb"), "en-us"));
        assert!(!lm(Term::lang_str("workshop", "fr"), "en"));
        // a bare string has no tag to match, even against `*`
        assert!(!lm(Term::str("plain"), "*"));
        // prefix must be `-`-delimited
        assert!(!lm(Term::lang_str("x", "eng"), "en"));
    }

    #[test]
    fn equality_is_by_value_and_tag() {
        assert!(value_eq(&Term::int(15), &Term::dec("15.0")).unwrap());
        assert!(!value_eq(&Term::int(15), &Term::dec("15.5")).unwrap());
        assert!(value_eq(&Term::lang_str("a", "EN"), &Term::lang_str("a", "en")).unwrap());
        assert!(!value_eq(&Term::lang_str("a", "en"), &Term::str("a")).unwrap());
        assert!(value_eq(
            &Term::date_time("2013-06-06T13:00:00+01:00"),
            &Term::date_time("2013-06-06T12:00:00Z")
        )
        .unwrap());
        assert!(value_eq(&Term::str("x"), &Term::int(1)).is_err());
    }

    #[test]
    fn order_by_type() {
        assert!(value_lt(&Term::dec("5.94"), &Term::int(100)).unwrap());
        assert!(value_lt(&Term::str("alpha"), &Term::str("beta")).unwrap());
        assert!(value_lt(
            &Term::date_time("2013-01-01T00:00:00Z"),
            &Term::date_time("2013-06-06T12:00:00Z")
        )
        .unwrap());
        assert!(value_lt(&Term::uri("http://a.org/"), &Term::str("x")).is_err());
    }

    #[test]
    fn regex_matches_lexical_form() {
        let f = Filter::new(FilterKind::Regex(
            Expr::term(Term::lang_str("WWV2013 workshop", "en")),
            "WWV.*".to_string(),
        ));
        assert!(eval_filter(&b(), &f, &ctx()).unwrap());
        let f = Filter::new(FilterKind::Regex(
            Expr::term(Term::str("nope")),
            "^WWV".to_string(),
        ));
        assert!(!eval_filter(&b(), &f, &ctx()).unwrap());
    }

    fn label_store() -> QuadStore {
        let label = Uri::new("http://www.w3.org/2000/01/rdf-schema#label").unwrap();
        let ont = OntologyMap::from_entries([(label.clone(), SimpleType::String)]);
        let mut store = QuadStore::new(ont);
        let g = Uri::new("http://x.org/g").unwrap();
        store
            .insert_quads(
                &g,
                &[
                    Triple::new(
                        Term::uri("http://x.org/a"),
                        Term::Uri(label.clone()),
                        Term::lang_str("Алматы", "ru"),
                    ),
                    Triple::new(
                        Term::uri("http://x.org/b"),
                        Term::Uri(label),
                        Term::lang_str("Almaty", "en"),
                    ),
                ],
            )
            .unwrap();
        store
    }

    #[test]
    fn conjunction_applies_filters_after_joining() {
        let store = label_store();
        let q = Query::Conj(
            Box::new(Query::Data(vec![GraphBlock::new(
                Term::uri("http://x.org/g"),
                vec![Triple::new(
                    Term::var("x"),
                    Term::uri("http://www.w3.org/2000/01/rdf-schema#label"),
                    Term::var("y"),
                )],
            )])),
            Box::new(Query::Filter(Filter::new(FilterKind::LangMatches(
                Expr::term(Term::var("y")),
                "ru".to_string(),
            )))),
        );
        let solutions = eval_query(&store, &q, &ctx()).unwrap();
        assert_eq!(solutions.len(), 1);
        assert_eq!(
            solutions.first().unwrap().get("x"),
            Some(&Term::uri("http://x.org/a"))
        );
    }

    #[test]
    fn filter_on_unbound_variable_is_an_error() {
        let store = label_store();
        let q = Query::Filter(Filter::new(FilterKind::LangMatches(
            Expr::term(Term::var("y")),
            "ru".to_string(),
        )));
        assert!(
            matches!(eval_query(&store, &q, &ctx()), Err(EvalError::FilterVarUnbound(v)) if v == "y")
        );
    }

    #[test]
    fn label_comment_union_merges_both_branches() {
        let label = Uri::new("http://www.w3.org/2000/01/rdf-schema#label").unwrap();
        let comment = Uri::new("http://www.w3.org/2000/01/rdf-schema#comment").unwrap();
        let ont = OntologyMap::from_entries([
            (label.clone(), SimpleType::String),
            (comment.clone(), SimpleType::String),
        ]);
        let mut store = QuadStore::new(ont);
        let g = Uri::new("http://dbpedia.org/").unwrap();
        store
            .insert_quads(
                &g,
                &[
                    Triple::new(
                        Term::uri("http://x.org/p1"),
                        Term::Uri(label.clone()),
                        Term::lang_str("location of", "en"),
                    ),
                    Triple::new(
                        Term::uri("http://x.org/p2"),
                        Term::Uri(comment.clone()),
                        Term::lang_str("the location", "en"),
                    ),
                    Triple::new(
                        Term::uri("http://x.org/p3"),
                        Term::Uri(label.clone()),
                        Term::lang_str("unrelated", "en"),
                    ),
                ],
            )
            .unwrap();
        let branch = |property: &Uri| {
            Query::Data(vec![GraphBlock::new(
                Term::Uri(g.clone()),
                vec![Triple::new(
                    Term::var("p"),
                    Term::Uri(property.clone()),
                    Term::var("y"),
                )],
            )])
        };
        let q = Query::Union(Box::new(branch(&label)), Box::new(branch(&comment)));
        let all = eval_query(&store, &q, &ctx()).unwrap();
        assert_eq!(all.len(), 3, "union of both branch solutions");

        let filtered = Query::Conj(
            Box::new(q),
            Box::new(Query::Filter(Filter::new(FilterKind::Regex(
                Expr::term(Term::var("y")),
                "location".to_string(),
            )))),
        );
        let hits = eval_query(&store, &filtered, &ctx()).unwrap();
        let subjects: Vec<&Term> = hits.iter().map(|b| b.get("p").unwrap()).collect();
        assert_eq!(
            subjects,
            [&Term::uri("http://x.org/p1"), &Term::uri("http://x.org/p2")]
        );
    }

    #[test]
    fn union_is_duplicate_free_and_idempotent() {
        let store = label_store();
        let data = Query::Data(vec![GraphBlock::new(
            Term::uri("http://x.org/g"),
            vec![Triple::new(
                Term::var("x"),
                Term::uri("http://www.w3.org/2000/01/rdf-schema#label"),
                Term::var("y"),
            )],
        )]);
        let single = eval_query(&store, &data, &ctx()).unwrap();
        let union = Query::Union(Box::new(data.clone()), Box::new(data));
        let doubled = eval_query(&store, &union, &ctx()).unwrap();
        assert_eq!(single, doubled);
    }

    #[test]
    fn entails_requires_ground_queries() {
        let store = label_store();
        let present = Query::Data(vec![GraphBlock::new(
            Term::uri("http://x.org/g"),
            vec![Triple::new(
                Term::uri("http://x.org/a"),
                Term::uri("http://www.w3.org/2000/01/rdf-schema#label"),
                Term::lang_str("Алматы", "ru"),
            )],
        )]);
        assert!(entails(&store, &present, &ctx()).unwrap());
        let absent = Query::Data(vec![GraphBlock::new(
            Term::uri("http://x.org/g"),
            vec![Triple::new(
                Term::uri("http://x.org/a"),
                Term::uri("http://www.w3.org/2000/01/rdf-schema#label"),
                Term::str("missing"),
            )],
        )]);
        assert!(!entails(&store, &absent, &ctx()).unwrap());
        let open = Query::Data(vec![GraphBlock::new(
            Term::var("g"),
            vec![Triple::new(Term::var("s"), Term::var("p"), Term::var("o"))],
        )]);
        assert!(matches!(
            entails(&store, &open, &ctx()),
            Err(EvalError::NonGroundQuery)
        ));
    }
}
