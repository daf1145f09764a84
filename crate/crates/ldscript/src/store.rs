//! The local quad store: the application's view of the Web of Linked
//! Data.
//!
//! The store holds ground, admission-checked quads indexed by named
//! graph. Insertion is monotone (scripts only read and grow the store)
//! and set-semantic. Basic graph patterns are matched by an index-driven
//! join; solutions come back in a fixed canonical order so runs are
//! reproducible.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::term::{Quad, Term, Triple, Uri};
use crate::types::{OntologyMap, TypeEnv};
use crate::typing::{check_triple, TypeError};

/// A finite map from variable names to ground terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Binding(BTreeMap<String, Term>);

impl Binding {
    pub fn empty() -> Self {
        Binding::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: String, term: Term) {
        debug_assert!(!term.is_var(), "bindings are ground");
        self.0.insert(var, term);
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.0.iter()
    }

    pub fn as_map(&self) -> &BTreeMap<String, Term> {
        &self.0
    }

    /// Two bindings are compatible when they agree on shared variables.
    pub fn compatible(&self, other: &Binding) -> bool {
        self.0
            .iter()
            .all(|(k, v)| other.get(k).is_none_or(|w| w == v))
    }

    pub fn merged(&self, other: &Binding) -> Binding {
        let mut map = self.0.clone();
        for (k, v) in &other.0 {
            map.insert(k.clone(), v.clone());
        }
        Binding(map)
    }

    /// The binding restricted to the given variables; `None` if any is
    /// missing.
    pub fn restricted(&self, vars: &[String]) -> Option<Binding> {
        let mut map = BTreeMap::new();
        for v in vars {
            map.insert(v.clone(), self.get(v)?.clone());
        }
        Some(Binding(map))
    }

    /// A stable text key, used to remember consumed bindings.
    pub fn canonical_key(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.0 {
            out.push_str(k);
            out.push('=');
            out.push_str(&v.canonical_token());
            out.push(';');
        }
        out
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(k, v)| format!("${k} := {}", v.canonical_token()))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// An ordered, duplicate-free list of bindings in canonical term order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolutionSet {
    bindings: Vec<Binding>,
}

impl SolutionSet {
    pub fn empty() -> Self {
        SolutionSet::default()
    }

    /// The identity of the natural join: one empty binding.
    pub fn unit() -> Self {
        SolutionSet {
            bindings: vec![Binding::empty()],
        }
    }

    pub fn from_bindings(bindings: impl IntoIterator<Item = Binding>) -> Self {
        let set: BTreeSet<Binding> = bindings.into_iter().collect();
        SolutionSet {
            bindings: set.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn first(&self) -> Option<&Binding> {
        self.bindings.first()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Binding> {
        self.bindings.iter()
    }

    /// Natural join: all compatible merges.
    pub fn join(&self, other: &SolutionSet) -> SolutionSet {
        let mut out = BTreeSet::new();
        for a in &self.bindings {
            for b in &other.bindings {
                if a.compatible(b) {
                    out.insert(a.merged(b));
                }
            }
        }
        SolutionSet {
            bindings: out.into_iter().collect(),
        }
    }

    /// Duplicate-free merge.
    pub fn union(&self, other: &SolutionSet) -> SolutionSet {
        SolutionSet::from_bindings(self.bindings.iter().chain(other.bindings.iter()).cloned())
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Binding) -> bool) {
        self.bindings.retain(|b| keep(b));
    }
}

impl FromIterator<Binding> for SolutionSet {
    fn from_iter<I: IntoIterator<Item = Binding>>(iter: I) -> Self {
        SolutionSet::from_bindings(iter)
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("quad rejected on insert (admission must run first): {0}")]
    IllTyped(TypeError),
    #[error("quad is not ground: {0}")]
    NotGround(String),
}

/// Per-graph load bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphMeta {
    pub inserted: usize,
}

/// The named-graph quad store.
#[derive(Debug, Default)]
pub struct QuadStore {
    ont: OntologyMap,
    quads: Vec<Quad>,
    present: HashSet<Quad>,
    by_graph: HashMap<Term, Vec<usize>>,
    by_graph_subject: HashMap<(Term, Term), Vec<usize>>,
    by_graph_predicate: HashMap<(Term, Term), Vec<usize>>,
    by_graph_object: HashMap<(Term, Term), Vec<usize>>,
    graph_meta: BTreeMap<Uri, GraphMeta>,
}

impl QuadStore {
    pub fn new(ont: OntologyMap) -> Self {
        QuadStore {
            ont,
            ..QuadStore::default()
        }
    }

    pub fn ontology(&self) -> &OntologyMap {
        &self.ont
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    pub fn contains(&self, quad: &Quad) -> bool {
        self.present.contains(quad)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Quad> {
        self.quads.iter()
    }

    pub fn graph_names(&self) -> impl Iterator<Item = &Uri> {
        self.graph_meta.keys()
    }

    pub fn graph_meta(&self, graph: &Uri) -> Option<&GraphMeta> {
        self.graph_meta.get(graph)
    }

    /// Inserts admitted triples into the named graph. Every triple is
    /// re-checked against the store's ontology; a failure means the caller
    /// bypassed admission. Returns the number of quads actually added.
    pub fn insert_quads(&mut self, graph: &Uri, triples: &[Triple]) -> Result<usize, StoreError> {
        let env = TypeEnv::empty();
        for t in triples {
            if !t.is_ground() {
                return Err(StoreError::NotGround(t.to_string()));
            }
            check_triple(&env, t, &self.ont).map_err(StoreError::IllTyped)?;
        }
        let mut added = 0;
        for t in triples {
            let quad = Quad::new(Term::Uri(graph.clone()), t.clone());
            if self.insert_raw(quad) {
                added += 1;
            }
        }
        self.graph_meta.entry(graph.clone()).or_default().inserted += added;
        Ok(added)
    }

    /// Inserts quads without the admission re-check. Reserved for
    /// reloading a previously dumped store, whose quads were admitted
    /// when first fetched.
    pub fn insert_trusted(&mut self, quads: impl IntoIterator<Item = Quad>) -> usize {
        let mut added = 0;
        for quad in quads {
            assert!(quad.is_ground(), "store quads are ground");
            let graph = quad.graph.as_uri().expect("graph names are URIs").clone();
            if self.insert_raw(quad) {
                added += 1;
                self.graph_meta.entry(graph).or_default().inserted += 1;
            }
        }
        added
    }

    fn insert_raw(&mut self, quad: Quad) -> bool {
        if self.present.contains(&quad) {
            return false;
        }
        let idx = self.quads.len();
        self.by_graph
            .entry(quad.graph.clone())
            .or_default()
            .push(idx);
        self.by_graph_subject
            .entry((quad.graph.clone(), quad.triple.subject.clone()))
            .or_default()
            .push(idx);
        self.by_graph_predicate
            .entry((quad.graph.clone(), quad.triple.predicate.clone()))
            .or_default()
            .push(idx);
        self.by_graph_object
            .entry((quad.graph.clone(), quad.triple.object.clone()))
            .or_default()
            .push(idx);
        self.present.insert(quad.clone());
        self.quads.push(quad);
        true
    }

    /// Candidate quad indices for one pattern, via the most selective
    /// applicable index.
    fn candidates(&self, pattern: &Quad) -> Candidates<'_> {
        if pattern.graph.is_var() {
            return Candidates::All(self.quads.len());
        }
        let g = &pattern.graph;
        let mut best: Option<&Vec<usize>> = None;
        let lookups = [
            (&pattern.triple.subject, &self.by_graph_subject),
            (&pattern.triple.predicate, &self.by_graph_predicate),
            (&pattern.triple.object, &self.by_graph_object),
        ];
        for (term, index) in lookups {
            if term.is_var() {
                continue;
            }
            match index.get(&(g.clone(), term.clone())) {
                Some(list) => {
                    if best.is_none_or(|b| list.len() < b.len()) {
                        best = Some(list);
                    }
                }
                None => return Candidates::None,
            }
        }
        match best {
            Some(list) => Candidates::Indexed(list),
            None => match self.by_graph.get(g) {
                Some(list) => Candidates::Indexed(list),
                None => Candidates::None,
            },
        }
    }

    fn candidate_count(&self, pattern: &Quad) -> usize {
        match self.candidates(pattern) {
            Candidates::All(n) => n,
            Candidates::Indexed(l) => l.len(),
            Candidates::None => 0,
        }
    }

    /// Matches a basic graph pattern: all bindings μ with μ(patterns) ⊆
    /// store. Join order is by ascending candidate-set size.
    pub fn match_bgp(&self, patterns: &[Quad]) -> SolutionSet {
        let mut order: Vec<&Quad> = patterns.iter().collect();
        order.sort_by_key(|p| self.candidate_count(p));

        let mut solutions = vec![Binding::empty()];
        for pattern in order {
            let mut next = Vec::new();
            for binding in &solutions {
                let substituted = apply_binding(pattern, binding);
                let indices: Vec<usize> = match self.candidates(&substituted) {
                    Candidates::All(n) => (0..n).collect(),
                    Candidates::Indexed(l) => l.clone(),
                    Candidates::None => Vec::new(),
                };
                for idx in indices {
                    if let Some(extended) = unify(&substituted, &self.quads[idx], binding) {
                        next.push(extended);
                    }
                }
            }
            solutions = next;
            if solutions.is_empty() {
                break;
            }
        }
        SolutionSet::from_bindings(solutions)
    }

    /// Store-wide well-typedness sweep: every quad must pass the triple
    /// check under the store's ontology.
    pub fn verify_well_typed(&self) -> Result<(), TypeError> {
        let env = TypeEnv::empty();
        for quad in &self.quads {
            check_triple(&env, &quad.triple, &self.ont)?;
        }
        Ok(())
    }
}

enum Candidates<'a> {
    All(usize),
    Indexed(&'a Vec<usize>),
    None,
}

fn apply_binding(pattern: &Quad, binding: &Binding) -> Quad {
    let subst = |t: &Term| match t {
        Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    };
    Quad::new(
        subst(&pattern.graph),
        Triple::new(
            subst(&pattern.triple.subject),
            subst(&pattern.triple.predicate),
            subst(&pattern.triple.object),
        ),
    )
}

fn unify(pattern: &Quad, quad: &Quad, binding: &Binding) -> Option<Binding> {
    let mut extended = binding.clone();
    let mut bind = |p: &Term, actual: &Term| -> bool {
        match p {
            Term::Var(v) => match extended.get(v) {
                Some(existing) => existing == actual,
                None => {
                    extended.insert(v.clone(), actual.clone());
                    true
                }
            },
            ground => ground == actual,
        }
    };
    if bind(&pattern.graph, &quad.graph)
        && bind(&pattern.triple.subject, &quad.triple.subject)
        && bind(&pattern.triple.predicate, &quad.triple.predicate)
        && bind(&pattern.triple.object, &quad.triple.object)
    {
        Some(extended)
    } else {
        None
    }
}
