//! Small-step execution of well-typed scripts.
//!
//! A system is a set of script continuations running in parallel over
//! one store. Each step applies exactly one reduction to the first
//! reducible continuation, scanning left to right:
//!
//! - `from named u` loads the graph named `u` (through the fetch
//!   registry) and continues; a failed dereference is recorded and the
//!   script continues unless strict mode is on.
//! - a `select` group paired with its following `where` enumerates the
//!   query's solutions, dynamically re-checks each candidate term against
//!   the declared types, and substitutes — one binding under the First
//!   strategy, one forked continuation per binding under All.
//! - a ground `where` proceeds iff the store entails its query.
//! - `unit` removes the continuation.
//! - `iterate` runs its body to completion in passes under the All
//!   strategy, never re-consuming a top-level binding, until a pass
//!   produces no new bindings or the pass bound is hit.
//!
//! The system is `Done` when no continuations remain and `Stuck` when
//! continuations remain but none can reduce. Every reduction appends one
//! trace line, and all scheduling is deterministic.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::deref::{Dereferencer, LoadStatus};
use crate::eval::{eval_query, EvalCtx, EvalError};
use crate::script::ast::{Query, Script};
use crate::store::{Binding, QuadStore, SolutionSet};
use crate::term::{Term, Uri};
use crate::types::{Type, TypeEnv};
use crate::typing::has_type;

/// How a select picks bindings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectStrategy {
    /// One binding per select group, in canonical order.
    First,
    /// Fork one continuation per binding (set semantics).
    All,
}

/// The engine clock: live, or frozen at run start.
#[derive(Debug, Clone, Copy)]
pub enum ClockSource {
    Real,
    Fixed(DateTime<Utc>),
}

impl ClockSource {
    pub fn now(&self) -> DateTime<Utc> {
        match self {
            ClockSource::Real => Utc::now(),
            ClockSource::Fixed(t) => *t,
        }
    }
}

/// Execution knobs. All bounds are at least 1.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub max_iterations: usize,
    pub strategy: SelectStrategy,
    pub step_limit: usize,
    pub strict_deref: bool,
    pub clock: ClockSource,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_iterations: 100,
            strategy: SelectStrategy::First,
            step_limit: 10_000,
            strict_deref: false,
            clock: ClockSource::Real,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("dereference of <{uri}> failed in strict mode: {reason}")]
    StrictFetch { uri: Uri, reason: String },
    #[error("internal evaluation failure: {0}")]
    Eval(#[from] EvalError),
    #[error("ill-typed continuation reached the engine (checker bug): {0}")]
    IllTyped(String),
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Done,
    Stuck,
    StepLimit,
}

/// One parallel continuation.
#[derive(Debug, Clone)]
struct Cont {
    script: Script,
    /// The iterate pass this continuation belongs to, if any.
    parent: Option<u64>,
    /// Iterate block whose consumed-set gates this continuation's first
    /// select group.
    gate: Option<u64>,
    /// Select strategy in force for this continuation.
    all: bool,
}

/// Bookkeeping for one `iterate` block instance.
#[derive(Debug)]
struct IterState {
    body: Script,
    parent: Option<u64>,
    consumed: std::collections::BTreeSet<String>,
    passes: usize,
    live: usize,
    productive: bool,
}

#[derive(Debug)]
enum Unit {
    Cont(Cont),
    Iter(u64),
}

/// The executing system: continuations, store, fetch registry and trace.
pub struct SystemState {
    pub store: QuadStore,
    pub deref: Dereferencer,
    pub trace: Vec<String>,
    units: Vec<Unit>,
    iterates: BTreeMap<u64, IterState>,
    next_iter_id: u64,
    steps: usize,
}

impl SystemState {
    pub fn new(store: QuadStore, deref: Dereferencer) -> Self {
        SystemState {
            store,
            deref,
            trace: Vec::new(),
            units: Vec::new(),
            iterates: BTreeMap::new(),
            next_iter_id: 0,
            steps: 0,
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Scripts (continuations) currently composed in parallel, for
    /// inspection and well-typedness sweeps.
    pub fn continuations(&self) -> Vec<&Script> {
        let mut out = Vec::new();
        for unit in &self.units {
            match unit {
                Unit::Cont(c) => out.push(&c.script),
                Unit::Iter(id) => out.push(&self.iterates[id].body),
            }
        }
        out
    }

    pub fn push_script(&mut self, script: Script, cfg: &RunConfig) {
        self.units.push(Unit::Cont(Cont {
            script,
            parent: None,
            gate: None,
            all: cfg.strategy == SelectStrategy::All,
        }));
    }

    fn log(&mut self, rule: &str, detail: String) {
        self.steps += 1;
        let line = format!("STEP {} {} {}", self.steps, rule, detail);
        self.trace.push(line);
    }

    fn parent_done(&mut self, parent: Option<u64>) {
        if let Some(id) = parent {
            let it = self.iterates.get_mut(&id).expect("live iterate");
            it.live -= 1;
        }
    }
}

/// The result of one step attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// One reduction was applied.
    Progressed,
    /// No continuations remain.
    Done,
    /// Continuations remain but none can reduce.
    Stuck,
}

/// Applies exactly one reduction to the first reducible unit, scanning
/// left to right.
pub fn step(state: &mut SystemState, cfg: &RunConfig) -> Result<StepOutcome, RunError> {
    if state.units.is_empty() {
        return Ok(StepOutcome::Done);
    }
    let ctx = EvalCtx {
        now: cfg.clock.now(),
    };
    for i in 0..state.units.len() {
        let reducible = match &state.units[i] {
            Unit::Cont(c) => cont_reducible(state, c, &ctx)?,
            Unit::Iter(id) => state.iterates[id].live == 0,
        };
        if !reducible {
            continue;
        }
        match &state.units[i] {
            Unit::Cont(_) => apply_cont_reduction(state, i, &ctx, cfg)?,
            Unit::Iter(_) => reduce_iterate(state, i, cfg),
        }
        return Ok(StepOutcome::Progressed);
    }
    Ok(StepOutcome::Stuck)
}

/// Drives a script to completion.
pub fn run_script(
    script: Script,
    state: &mut SystemState,
    cfg: &RunConfig,
) -> Result<RunStatus, RunError> {
    state.push_script(script, cfg);
    run_to_completion(state, cfg)
}

pub fn run_to_completion(state: &mut SystemState, cfg: &RunConfig) -> Result<RunStatus, RunError> {
    loop {
        if state.steps >= cfg.step_limit && !state.units.is_empty() {
            return Ok(RunStatus::StepLimit);
        }
        match step(state, cfg)? {
            StepOutcome::Progressed => {}
            StepOutcome::Done => return Ok(RunStatus::Done),
            StepOutcome::Stuck => return Ok(RunStatus::Stuck),
        }
    }
}

/// Whether a continuation's head can reduce right now. Loading and
/// substitution happen in `apply_cont_reduction`; this predicate is
/// side-effect free.
fn cont_reducible(state: &SystemState, cont: &Cont, ctx: &EvalCtx) -> Result<bool, RunError> {
    match &cont.script {
        Script::Unit => Ok(true),
        Script::FromNamed { .. } => Ok(true),
        Script::Iterate { .. } => Ok(true),
        Script::Where { query, .. } => {
            if !query.is_ground() {
                return Err(RunError::IllTyped(
                    "where reached with unsubstituted variables".to_string(),
                ));
            }
            Ok(crate::eval::entails(&state.store, query, ctx)?)
        }
        Script::Select { .. } => {
            let (group, query, _) = split_select_group(&cont.script)?;
            let solutions = enumerate_bindings(&group, query, &state.store, ctx)?;
            let remaining = remaining_bindings(state, cont, &solutions);
            // under All, zero bindings reduce to zero forks; under First
            // an empty pool blocks
            Ok(cont.all || !remaining.is_empty())
        }
    }
}

fn apply_cont_reduction(
    state: &mut SystemState,
    i: usize,
    ctx: &EvalCtx,
    cfg: &RunConfig,
) -> Result<(), RunError> {
    let Unit::Cont(cont) = &state.units[i] else {
        unreachable!()
    };
    let cont = cont.clone();
    match &cont.script {
        Script::Unit => {
            state.units.remove(i);
            state.parent_done(cont.parent);
            state.log("unit", "terminated".to_string());
            Ok(())
        }
        Script::FromNamed { term, rest, .. } => {
            let Term::Uri(uri) = term else {
                return Err(RunError::IllTyped(format!(
                    "from named reached with non-URI term {term}"
                )));
            };
            let status = state.deref.load_named(&mut state.store, uri, ctx.now);
            let detail = match &status {
                LoadStatus::Loaded { admitted, rejected } => {
                    format!("<{uri}> loaded admitted={admitted} rejected={rejected}")
                }
                LoadStatus::AlreadyLoaded { .. } => format!("<{uri}> already-loaded"),
                LoadStatus::Failed { reason, cached } => {
                    format!(
                        "<{uri}> failed ({reason}){}",
                        if *cached { " cached" } else { "" }
                    )
                }
            };
            if let LoadStatus::Failed { reason, .. } = &status {
                if cfg.strict_deref {
                    return Err(RunError::StrictFetch {
                        uri: uri.clone(),
                        reason: reason.clone(),
                    });
                }
            }
            let rest = (**rest).clone();
            match &mut state.units[i] {
                Unit::Cont(c) => c.script = rest,
                Unit::Iter(_) => unreachable!(),
            }
            state.log("from-named", detail);
            Ok(())
        }
        Script::Where { query, rest, .. } => {
            // reducibility established entailment already
            debug_assert!(query.is_ground());
            let rest = (**rest).clone();
            match &mut state.units[i] {
                Unit::Cont(c) => c.script = rest,
                Unit::Iter(_) => unreachable!(),
            }
            state.log("where", "query entailed by store".to_string());
            Ok(())
        }
        Script::Select { .. } => {
            let (group, query, rest) = split_select_group(&cont.script)?;
            let solutions = enumerate_bindings(&group, query, &state.store, ctx)?;
            let remaining = remaining_bindings(state, &cont, &solutions);
            let where_script = after_select_group(&cont.script);
            let vars: Vec<String> = group.iter().map(|(v, _)| v.clone()).collect();
            let _ = rest;
            if cont.all {
                let mut clones = Vec::new();
                let mut consumed_keys = Vec::new();
                for binding in &remaining {
                    let substituted = where_script.substitute(binding.as_map());
                    clones.push(Unit::Cont(Cont {
                        script: substituted,
                        parent: cont.parent,
                        gate: None,
                        all: true,
                    }));
                    consumed_keys.push(binding.canonical_key());
                }
                let k = clones.len();
                state.units.splice(i..=i, clones);
                if let Some(gid) = cont.gate {
                    let it = state.iterates.get_mut(&gid).expect("live iterate");
                    for key in consumed_keys {
                        if it.consumed.insert(key) {
                            it.productive = true;
                        }
                    }
                }
                if let Some(pid) = cont.parent {
                    let it = state.iterates.get_mut(&pid).expect("live iterate");
                    it.live = it.live + k - 1;
                }
                state.log(
                    "select",
                    format!("${} forked {k} binding(s)", vars.join(", $")),
                );
                Ok(())
            } else {
                let binding = remaining.first().cloned().expect("reducibility checked");
                let substituted = where_script.substitute(binding.as_map());
                if let Some(gid) = cont.gate {
                    let it = state.iterates.get_mut(&gid).expect("live iterate");
                    if it.consumed.insert(binding.canonical_key()) {
                        it.productive = true;
                    }
                }
                match &mut state.units[i] {
                    Unit::Cont(c) => {
                        c.script = substituted;
                        c.gate = None;
                    }
                    Unit::Iter(_) => unreachable!(),
                }
                state.log("select", format!("{binding}"));
                Ok(())
            }
        }
        Script::Iterate { body, .. } => {
            let id = state.next_iter_id;
            state.next_iter_id += 1;
            state.iterates.insert(
                id,
                IterState {
                    body: (**body).clone(),
                    parent: cont.parent,
                    consumed: Default::default(),
                    passes: 0,
                    live: 0,
                    productive: false,
                },
            );
            // the iterate inherits the continuation's slot and liveness
            state.units[i] = Unit::Iter(id);
            state.log("iterate", format!("block {id} started"));
            Ok(())
        }
    }
}

/// Steps an iterate block whose current pass has finished: spawn the next
/// pass, or finish the block.
fn reduce_iterate(state: &mut SystemState, i: usize, cfg: &RunConfig) {
    let Unit::Iter(id) = state.units[i] else {
        unreachable!()
    };
    let it = state.iterates.get_mut(&id).expect("live iterate");
    let start_next = it.passes == 0 || (it.productive && it.passes < cfg.max_iterations);
    if start_next {
        if it.passes > 0 && it.passes >= cfg.max_iterations {
            // unreachable by construction, kept for clarity
        }
        it.passes += 1;
        it.live = 1;
        it.productive = false;
        let pass_cont = Cont {
            script: it.body.clone(),
            parent: Some(id),
            gate: Some(id),
            all: true,
        };
        let pass = it.passes;
        state.units.insert(i + 1, Unit::Cont(pass_cont));
        state.log("iterate", format!("block {id} pass {pass}"));
    } else {
        let parent = it.parent;
        let reason = if it.productive {
            "pass bound reached"
        } else {
            "fixpoint"
        };
        let passes = it.passes;
        if it.productive {
            log::warn!("iterate block {id} stopped by pass bound ({passes} passes)");
        }
        state.iterates.remove(&id);
        state.units.remove(i);
        state.parent_done(parent);
        state.log(
            "iterate",
            format!("block {id} finished after {passes} pass(es) ({reason})"),
        );
    }
}

/// A select group's annotated variables, the query of its where, and the
/// script after that where.
type SelectGroup<'a> = (Vec<(String, Type)>, &'a Query, &'a Script);

/// Splits a select group off a script.
fn split_select_group(script: &Script) -> Result<SelectGroup<'_>, RunError> {
    let mut group = Vec::new();
    let mut cur = script;
    while let Script::Select { var, ty, rest, .. } = cur {
        let ty = ty.ok_or_else(|| {
            RunError::IllTyped(format!("select ${var} reached the engine unannotated"))
        })?;
        group.push((var.clone(), ty));
        cur = rest;
    }
    match cur {
        Script::Where { query, rest, .. } => Ok((group, query, rest)),
        _ => Err(RunError::IllTyped(
            "select group without a following where reached the engine".to_string(),
        )),
    }
}

/// The `where …` script that follows a select group (substitution target).
fn after_select_group(script: &Script) -> &Script {
    let mut cur = script;
    while let Script::Select { rest, .. } = cur {
        cur = rest;
    }
    cur
}

fn remaining_bindings(state: &SystemState, cont: &Cont, solutions: &SolutionSet) -> Vec<Binding> {
    match cont.gate {
        None => solutions.iter().cloned().collect(),
        Some(gid) => {
            let consumed = &state.iterates[&gid].consumed;
            solutions
                .iter()
                .filter(|b| !consumed.contains(&b.canonical_key()))
                .cloned()
                .collect()
        }
    }
}

/// Solutions of `query` restricted to the select group's variables, keeping
/// only bindings whose every term dynamically has its declared type.
pub fn enumerate_bindings(
    vars: &[(String, Type)],
    query: &Query,
    store: &QuadStore,
    ctx: &EvalCtx,
) -> Result<SolutionSet, EvalError> {
    let names: Vec<String> = vars.iter().map(|(v, _)| v.clone()).collect();
    let solutions = eval_query(store, query, ctx)?;
    let env = TypeEnv::empty();
    let mut kept = Vec::new();
    'next: for binding in solutions.iter() {
        let Some(restricted) = binding.restricted(&names) else {
            // a union branch did not bind every select variable
            continue;
        };
        for (var, ty) in vars {
            let term = restricted.get(var).expect("restricted to names");
            let ok = has_type(&env, term, *ty, store.ontology())
                .expect("ground terms never hit unbound-variable errors");
            if !ok {
                log::warn!("select ${var}: dynamic check rejected {term} against {ty}");
                continue 'next;
            }
        }
        kept.push(restricted);
    }
    Ok(SolutionSet::from_bindings(kept))
}
