//! Seeded random generators and independent oracles for the
//! property-based acceptance criteria.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ldscript::eval::{eval_filter, EvalCtx};
use ldscript::script::ast::{Expr, Filter, FilterKind, GraphBlock, Query, Script};
use ldscript::script::check_script;
use ldscript::store::{Binding, QuadStore};
use ldscript::term::{Quad, Term, Triple, Uri};
use ldscript::types::{OntologyMap, SimpleType, Type};
use rand::prelude::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const POOL: &str = "http://pool.example.org/";

pub fn pool_uri(name: &str) -> Uri {
    Uri::new(format!("{POOL}{name}")).unwrap()
}

/// Five properties, one per simple range.
pub fn pool_ontology() -> OntologyMap {
    OntologyMap::from_entries([
        (pool_uri("linkedTo"), SimpleType::Resource),
        (pool_uri("label"), SimpleType::String),
        (pool_uri("rank"), SimpleType::Integer),
        (pool_uri("density"), SimpleType::Decimal),
        (pool_uri("seen"), SimpleType::DateTime),
    ])
}

pub fn property_for(range: SimpleType) -> Uri {
    match range {
        SimpleType::Resource => pool_uri("linkedTo"),
        SimpleType::String => pool_uri("label"),
        SimpleType::Integer => pool_uri("rank"),
        SimpleType::Decimal => pool_uri("density"),
        SimpleType::DateTime => pool_uri("seen"),
    }
}

pub fn node_uris() -> Vec<Term> {
    (0..6)
        .map(|i| Term::Uri(pool_uri(&format!("n{i}"))))
        .collect()
}

pub fn graph_uris() -> Vec<Uri> {
    (0..3).map(|i| pool_uri(&format!("g{i}"))).collect()
}

/// A ground term of the given simple type, from a small pool.
pub fn random_value(rng: &mut ChaCha8Rng, ty: SimpleType) -> Term {
    match ty {
        SimpleType::Resource => node_uris().choose(rng).unwrap().clone(),
        SimpleType::String => {
            let s = ["alpha", "beta", "gamma"].choose(rng).unwrap().to_string();
            if rng.random_bool(0.5) {
                Term::Str(s, None)
            } else {
                let tag = ["en", "en-gb", "ru"].choose(rng).unwrap();
                Term::lang_str(&s, tag)
            }
        }
        SimpleType::Integer => Term::int(rng.random_range(0..4)),
        SimpleType::Decimal => {
            let choices = ["1.5", "2.25", "0.5"];
            Term::dec(choices.choose(rng).unwrap())
        }
        SimpleType::DateTime => {
            let choices = ["2013-01-01T00:00:00Z", "2013-06-06T12:00:00Z"];
            Term::date_time(choices.choose(rng).unwrap())
        }
    }
}

/// A well-typed ground triple under the pool ontology.
pub fn random_admitted_triple(rng: &mut ChaCha8Rng) -> Triple {
    let range = *SimpleType::ALL.choose(rng).unwrap();
    // integer-valued objects are also fine for decimal properties
    let object_ty = if range == SimpleType::Decimal && rng.random_bool(0.3) {
        SimpleType::Integer
    } else {
        range
    };
    Triple::new(
        node_uris().choose(rng).unwrap().clone(),
        Term::Uri(property_for(range)),
        random_value(rng, object_ty),
    )
}

/// A store of up to `max_quads` admitted quads over the pool.
pub fn random_store(rng: &mut ChaCha8Rng, max_quads: usize) -> QuadStore {
    let mut store = QuadStore::new(pool_ontology());
    let n = rng.random_range(0..=max_quads);
    for _ in 0..n {
        let graph = graph_uris().choose(rng).unwrap().clone();
        let triple = random_admitted_triple(rng);
        store
            .insert_quads(&graph, &[triple])
            .expect("generated triples are admitted");
    }
    store
}

/// The value population a query variable ranges over, fixed per variable
/// so generated filters never compare across simple types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Node,
    Text,
    Number,
}

/// A random query over `vars`, every variable used in every branch.
/// Patterns are mostly carved out of actual store quads so joins have
/// matches to find; synthetic patterns keep the empty case covered.
pub fn random_query(rng: &mut ChaCha8Rng, store: &QuadStore, vars: &[(String, VarKind)]) -> Query {
    let branch = |rng: &mut ChaCha8Rng| random_conjunction(rng, store, vars);
    if rng.random_bool(0.3) {
        Query::Union(Box::new(branch(rng)), Box::new(branch(rng)))
    } else {
        branch(rng)
    }
}

fn random_conjunction(
    rng: &mut ChaCha8Rng,
    store: &QuadStore,
    vars: &[(String, VarKind)],
) -> Query {
    let mut blocks: Vec<GraphBlock> = Vec::new();
    for (name, kind) in vars {
        let block = derive_block(rng, store, name, *kind, vars)
            .unwrap_or_else(|| synthetic_block(rng, name, *kind));
        blocks.push(block);
    }
    if rng.random_bool(0.3) {
        blocks.push(synthetic_block(rng, &vars[0].0, vars[0].1));
    }
    let mut query = Query::Data(blocks);
    for (name, kind) in vars {
        if rng.random_bool(0.35) {
            if let Some(f) = random_filter(rng, name, *kind) {
                query = Query::Conj(Box::new(query), Box::new(Query::Filter(f)));
            }
        }
    }
    query
}

/// Turns a randomly chosen store quad into a pattern binding `name` at a
/// kind-compatible position; a second node variable may replace another
/// position to force joins.
fn derive_block(
    rng: &mut ChaCha8Rng,
    store: &QuadStore,
    name: &str,
    kind: VarKind,
    vars: &[(String, VarKind)],
) -> Option<GraphBlock> {
    if store.is_empty() || rng.random_bool(0.25) {
        return None;
    }
    let quads: Vec<&Quad> = store.iter().collect();
    for _ in 0..12 {
        let quad = *quads.choose(rng)?;
        let mut graph = quad.graph.clone();
        let mut t = quad.triple.clone();
        let placed = match kind {
            VarKind::Node => {
                let mut slots: Vec<u8> = vec![0, 1];
                if t.object.is_uri() {
                    slots.push(2);
                }
                match slots.choose(rng).unwrap() {
                    0 => graph = Term::var(name),
                    1 => t.subject = Term::var(name),
                    _ => t.object = Term::var(name),
                }
                true
            }
            VarKind::Text => {
                if matches!(t.object, Term::Str(..)) {
                    t.object = Term::var(name);
                    true
                } else {
                    false
                }
            }
            VarKind::Number => {
                if matches!(t.object, Term::Int(_) | Term::Dec(_)) {
                    t.object = Term::var(name);
                    true
                } else {
                    false
                }
            }
        };
        if !placed {
            continue;
        }
        // occasionally bind a second node variable for a join
        if rng.random_bool(0.3) {
            let others: Vec<&String> = vars
                .iter()
                .filter(|(n, k)| n != name && *k == VarKind::Node)
                .map(|(n, _)| n)
                .collect();
            if let Some(other) = others.choose(rng) {
                if !graph.is_var() && rng.random_bool(0.5) {
                    graph = Term::var(other);
                } else if !t.subject.is_var() {
                    t.subject = Term::var(other);
                }
            }
        }
        return Some(GraphBlock::new(graph, vec![t]));
    }
    None
}

/// A pattern not drawn from the store; usually matches nothing.
fn synthetic_block(rng: &mut ChaCha8Rng, name: &str, kind: VarKind) -> GraphBlock {
    let graph = Term::Uri(graph_uris()[rng.random_range(0..3)].clone());
    let triple = match kind {
        VarKind::Node => Triple::new(
            Term::var(name),
            Term::Uri(property_for(SimpleType::Resource)),
            node_uris()[rng.random_range(0..6)].clone(),
        ),
        VarKind::Text => Triple::new(
            node_uris()[rng.random_range(0..6)].clone(),
            Term::Uri(property_for(SimpleType::String)),
            Term::var(name),
        ),
        VarKind::Number => Triple::new(
            node_uris()[rng.random_range(0..6)].clone(),
            Term::Uri(property_for(if rng.random_bool(0.5) {
                SimpleType::Decimal
            } else {
                SimpleType::Integer
            })),
            Term::var(name),
        ),
    };
    GraphBlock::new(graph, vec![triple])
}

fn random_filter(rng: &mut ChaCha8Rng, var: &str, kind: VarKind) -> Option<Filter> {
    let v = Expr::term(Term::var(var));
    Some(Filter::new(match kind {
        VarKind::Node => return None,
        VarKind::Text => {
            if rng.random_bool(0.5) {
                FilterKind::LangMatches(v, ["*", "en", "ru"].choose(rng).unwrap().to_string())
            } else {
                FilterKind::Regex(v, ["a", "beta", "^g"].choose(rng).unwrap().to_string())
            }
        }
        VarKind::Number => {
            let bound = Expr::term(Term::dec(["1.0", "2.0"].choose(rng).unwrap()));
            if rng.random_bool(0.5) {
                FilterKind::Lt(v, bound)
            } else {
                FilterKind::Lt(bound, v)
            }
        }
    }))
}

/// Independent query oracle: enumerate every total substitution over the
/// store's terms and keep the ones that satisfy the query.
pub fn brute_force_solutions(
    store: &QuadStore,
    query: &Query,
    ctx: &EvalCtx,
) -> BTreeSet<BTreeMap<String, Term>> {
    let vars: Vec<String> = query.free_vars().into_iter().collect();
    let mut terms: BTreeSet<Term> = BTreeSet::new();
    for quad in store.iter() {
        terms.insert(quad.graph.clone());
        terms.insert(quad.triple.subject.clone());
        terms.insert(quad.triple.predicate.clone());
        terms.insert(quad.triple.object.clone());
    }
    let terms: Vec<Term> = terms.into_iter().collect();
    let mut out = BTreeSet::new();
    let mut assignment: BTreeMap<String, Term> = BTreeMap::new();
    enumerate_assignments(
        store,
        query,
        ctx,
        &vars,
        0,
        &terms,
        &mut assignment,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn enumerate_assignments(
    store: &QuadStore,
    query: &Query,
    ctx: &EvalCtx,
    vars: &[String],
    next: usize,
    terms: &[Term],
    assignment: &mut BTreeMap<String, Term>,
    out: &mut BTreeSet<BTreeMap<String, Term>>,
) {
    if next == vars.len() {
        if satisfies(store, query, assignment, ctx) {
            out.insert(assignment.clone());
        }
        return;
    }
    for t in terms {
        assignment.insert(vars[next].clone(), t.clone());
        enumerate_assignments(store, query, ctx, vars, next + 1, terms, assignment, out);
    }
    assignment.remove(&vars[next]);
}

/// Satisfaction of a query under a total substitution: data parts first,
/// then filters, mirroring conjunction scoping.
fn satisfies(store: &QuadStore, query: &Query, mu: &BTreeMap<String, Term>, ctx: &EvalCtx) -> bool {
    let mut data = Vec::new();
    let mut filters = Vec::new();
    flatten(query, &mut data, &mut filters);
    for part in data {
        let ok = match part {
            Query::Data(blocks) => blocks.iter().all(|b| {
                b.triples.iter().all(|t| {
                    let quad = Quad::new(
                        subst(&b.graph, mu),
                        Triple::new(
                            subst(&t.subject, mu),
                            subst(&t.predicate, mu),
                            subst(&t.object, mu),
                        ),
                    );
                    store.contains(&quad)
                })
            }),
            Query::Union(a, b) => satisfies(store, a, mu, ctx) || satisfies(store, b, mu, ctx),
            _ => unreachable!(),
        };
        if !ok {
            return false;
        }
    }
    let mut binding = Binding::empty();
    for (k, v) in mu {
        binding.insert(k.clone(), v.clone());
    }
    filters
        .iter()
        .all(|f| eval_filter(&binding, f, ctx).expect("kind-consistent filters"))
}

fn flatten<'a>(query: &'a Query, data: &mut Vec<&'a Query>, filters: &mut Vec<&'a Filter>) {
    match query {
        Query::Conj(a, b) => {
            flatten(a, data, filters);
            flatten(b, data, filters);
        }
        Query::Filter(f) => filters.push(f),
        other => data.push(other),
    }
}

fn subst(t: &Term, mu: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => mu.get(v).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    }
}

/// A random, well-typed, executable-form script over the pool ontology.
/// Scripts have select groups paired with wheres, optional trailing
/// iterate blocks, and every variable use is consistent with its
/// annotation. Select queries and ground wheres are biased toward
/// patterns the store can actually satisfy, so the stepper makes real
/// progress.
pub fn random_well_typed_script(rng: &mut ChaCha8Rng, store: &QuadStore, depth: usize) -> Script {
    let script = gen_script(rng, store, depth, &mut Vec::new(), 0);
    check_script(&script, &pool_ontology())
        .unwrap_or_else(|e| panic!("generator produced an ill-typed script: {e}\n{script:?}"));
    script
}

fn fresh_var(counter: &mut usize) -> String {
    let name = format!("v{counter}");
    *counter += 1;
    name
}

fn gen_script(
    rng: &mut ChaCha8Rng,
    store: &QuadStore,
    depth: usize,
    env: &mut Vec<(String, Type)>,
    mut var_counter: usize,
) -> Script {
    if depth == 0 {
        return Script::Unit;
    }
    match rng.random_range(0..10) {
        0..=2 => {
            // dereference: a pool URI or a resource-typed variable
            let resource_vars: Vec<&(String, Type)> = env
                .iter()
                .filter(|(_, t)| ldscript::types::subtype(*t, Type::RESOURCE))
                .collect();
            let target = if !resource_vars.is_empty() && rng.random_bool(0.5) {
                Term::var(&resource_vars.choose(rng).unwrap().0)
            } else {
                Term::Uri(pool_uri(&format!("n{}", rng.random_range(0..6))))
            };
            Script::from_named(target, gen_script(rng, store, depth - 1, env, var_counter))
        }
        3..=6 => {
            // a select group with its where
            let group_size = rng.random_range(1..=2);
            let mut group = Vec::new();
            for _ in 0..group_size {
                let ty = *[
                    Type::RESOURCE,
                    Type::Simple(SimpleType::String),
                    Type::Simple(SimpleType::Integer),
                    Type::Simple(SimpleType::Decimal),
                    Type::Simple(SimpleType::DateTime),
                    Type::Property(SimpleType::Resource),
                ]
                .choose(rng)
                .unwrap();
                group.push((fresh_var(&mut var_counter), ty));
            }
            let query = gen_typed_query(rng, store, &group, env);
            for (v, t) in &group {
                env.push((v.clone(), *t));
            }
            let rest = gen_script(rng, store, depth - 1, env, var_counter);
            for _ in &group {
                env.pop();
            }
            let mut script = Script::where_(query, rest);
            for (v, t) in group.into_iter().rev() {
                script = Script::Select {
                    var: v,
                    ty: Some(t),
                    rest: Box::new(script),
                    span: Default::default(),
                };
            }
            script
        }
        7..=8 => {
            // a ground where, usually over a quad the store entails
            let (graph, triple) = match store.iter().nth(rng.random_range(0..store.len().max(1))) {
                Some(quad) if rng.random_bool(0.7) => (quad.graph.clone(), quad.triple.clone()),
                _ => (
                    Term::Uri(graph_uris()[rng.random_range(0..3)].clone()),
                    random_admitted_triple(rng),
                ),
            };
            Script::where_(
                Query::Data(vec![GraphBlock::new(graph, vec![triple])]),
                gen_script(rng, store, depth - 1, env, var_counter),
            )
        }
        _ => {
            // iterate terminates the block
            let body = gen_script(rng, store, depth - 1, env, var_counter);
            match body {
                Script::Unit => Script::Unit,
                body => Script::iterate(body),
            }
        }
    }
}

/// A query that uses each select variable consistently with its type.
/// Patterns are carved from store quads where possible so the select can
/// find bindings.
fn gen_typed_query(
    rng: &mut ChaCha8Rng,
    store: &QuadStore,
    group: &[(String, Type)],
    env: &[(String, Type)],
) -> Query {
    let mut blocks = Vec::new();
    let mut filters: Vec<Filter> = Vec::new();
    for (var, ty) in group {
        if rng.random_bool(0.7) {
            if let Some(block) = typed_block_from_store(rng, store, var, *ty) {
                if matches!(ty, Type::Simple(s) if *s == SimpleType::String) && rng.random_bool(0.4)
                {
                    filters.push(Filter::new(FilterKind::LangMatches(
                        Expr::term(Term::var(var)),
                        "*".to_string(),
                    )));
                }
                blocks.push(block);
                continue;
            }
        }
        let graph = graph_term(rng, env);
        let triple = match ty {
            Type::Simple(SimpleType::Resource) => match rng.random_range(0..3) {
                0 => Triple::new(
                    Term::var(var),
                    Term::Uri(property_for(SimpleType::Resource)),
                    node_uris()[rng.random_range(0..6)].clone(),
                ),
                1 => Triple::new(
                    node_uris()[rng.random_range(0..6)].clone(),
                    Term::Uri(property_for(SimpleType::Resource)),
                    Term::var(var),
                ),
                _ => Triple::new(
                    Term::var(var),
                    Term::Uri(property_for(SimpleType::String)),
                    random_value(rng, SimpleType::String),
                ),
            },
            Type::Simple(simple) => {
                if *simple == SimpleType::String && rng.random_bool(0.4) {
                    filters.push(Filter::new(FilterKind::LangMatches(
                        Expr::term(Term::var(var)),
                        "*".to_string(),
                    )));
                }
                if matches!(simple, SimpleType::Integer | SimpleType::Decimal)
                    && rng.random_bool(0.4)
                {
                    filters.push(Filter::new(FilterKind::Lt(
                        Expr::term(Term::var(var)),
                        Expr::term(Term::int(100)),
                    )));
                }
                Triple::new(
                    node_uris()[rng.random_range(0..6)].clone(),
                    Term::Uri(property_for(*simple)),
                    Term::var(var),
                )
            }
            Type::Property(range) => Triple::new(
                node_uris()[rng.random_range(0..6)].clone(),
                Term::var(var),
                random_value(rng, *range),
            ),
        };
        blocks.push(GraphBlock::new(graph, vec![triple]));
    }
    let mut query = Query::Data(blocks);
    for f in filters {
        query = Query::Conj(Box::new(query), Box::new(Query::Filter(f)));
    }
    query
}

/// A pattern from an actual store quad with `var` in a position whose
/// dynamic type fits the annotation.
fn typed_block_from_store(
    rng: &mut ChaCha8Rng,
    store: &QuadStore,
    var: &str,
    ty: Type,
) -> Option<GraphBlock> {
    if store.is_empty() {
        return None;
    }
    let quads: Vec<&Quad> = store.iter().collect();
    for _ in 0..12 {
        let quad = *quads.choose(rng)?;
        let mut graph = quad.graph.clone();
        let mut t = quad.triple.clone();
        match ty {
            Type::Simple(SimpleType::Resource) => match rng.random_range(0..3) {
                0 => graph = Term::var(var),
                1 => t.subject = Term::var(var),
                _ => {
                    if !t.object.is_uri() {
                        continue;
                    }
                    t.object = Term::var(var);
                }
            },
            Type::Simple(simple) => {
                // static rule: the annotation must fit the property's range
                let prop_range = pool_ontology().range(t.predicate.as_uri()?)?;
                if !simple.subtype_of(prop_range) {
                    continue;
                }
                t.object = Term::var(var);
            }
            Type::Property(range) => {
                let prop_range = pool_ontology().range(t.predicate.as_uri()?)?;
                if !ldscript::types::subtype(Type::Property(prop_range), Type::Property(range)) {
                    continue;
                }
                t.predicate = Term::var(var);
            }
        }
        return Some(GraphBlock::new(graph, vec![t]));
    }
    None
}

fn graph_term(rng: &mut ChaCha8Rng, env: &[(String, Type)]) -> Term {
    let resource_vars: Vec<&(String, Type)> = env
        .iter()
        .filter(|(_, t)| ldscript::types::subtype(*t, Type::RESOURCE))
        .collect();
    if !resource_vars.is_empty() && rng.random_bool(0.3) {
        Term::var(&resource_vars.choose(rng).unwrap().0)
    } else {
        Term::Uri(graph_uris()[rng.random_range(0..3)].clone())
    }
}
