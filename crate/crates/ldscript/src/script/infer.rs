//! Select-annotation inference over the finite type lattice.
//!
//! Annotations may be omitted by the programmer. For each unannotated
//! select occurrence, inference computes the set of types under which the
//! whole script checks (quantifying over the other unannotated
//! occurrences), then picks the greatest element of that set: the most
//! permissive binding pool. An empty set means the uses are
//! contradictory; several maximal incomparable candidates mean the choice
//! is genuinely ambiguous and must be made by hand.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::script::ast::Script;
use crate::script::check::{check_script, describe_var_uses};
use crate::types::{unique_maximal, OntologyMap, Type};

/// Enumeration bound: the candidate space is 10^n over unannotated
/// occurrences. Scripts stay tiny in practice; this bound keeps inference
/// under a second even in pathological cases.
const MAX_UNANNOTATED: usize = 5;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InferenceError {
    #[error("no type works for ${var}: its uses are contradictory ({})", uses.join("; "))]
    Contradictory { var: String, uses: Vec<String> },
    #[error("ambiguous annotation for ${var}: {} are all maximal; annotate it explicitly",
            candidates.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "))]
    Ambiguous { var: String, candidates: Vec<Type> },
    #[error(
        "too many unannotated select variables ({0} > {MAX_UNANNOTATED}); annotate some explicitly"
    )]
    TooManyUnannotated(usize),
}

/// Infers annotations for every unannotated select. Existing annotations
/// are preserved, and the result always satisfies `check_script`.
pub fn infer_select_types(script: &Script, ont: &OntologyMap) -> Result<Script, InferenceError> {
    let slots = count_unannotated(script);
    if slots == 0 {
        return Ok(script.clone());
    }
    if slots > MAX_UNANNOTATED {
        return Err(InferenceError::TooManyUnannotated(slots));
    }

    let universe = Type::universe();
    let mut assignment = vec![universe[0]; slots];
    let mut valid: Vec<BTreeSet<Type>> = vec![BTreeSet::new(); slots];
    // exhaust the candidate space, projecting passing combinations onto
    // each occurrence
    enumerate(script, ont, &universe, &mut assignment, 0, &mut valid);

    let mut chosen = Vec::with_capacity(slots);
    for (i, set) in valid.iter().enumerate() {
        let candidates: Vec<Type> = set.iter().copied().collect();
        if candidates.is_empty() {
            let var = nth_unannotated_var(script, i).expect("slot exists");
            let uses = describe_var_uses(script, &var);
            return Err(InferenceError::Contradictory { var, uses });
        }
        match unique_maximal(&candidates) {
            Some(best) => chosen.push(best),
            None => {
                let var = nth_unannotated_var(script, i).expect("slot exists");
                let maximal: Vec<Type> = candidates
                    .iter()
                    .copied()
                    .filter(|&t| {
                        candidates
                            .iter()
                            .all(|&u| t == u || !crate::types::subtype(t, u))
                    })
                    .collect();
                return Err(InferenceError::Ambiguous {
                    var,
                    candidates: maximal,
                });
            }
        }
    }
    Ok(annotate(script, &chosen, &mut 0))
}

fn enumerate(
    script: &Script,
    ont: &OntologyMap,
    universe: &[Type],
    assignment: &mut [Type],
    slot: usize,
    valid: &mut [BTreeSet<Type>],
) {
    if slot == assignment.len() {
        let candidate = annotate(script, assignment, &mut 0);
        if check_script(&candidate, ont).is_ok() {
            for (i, &t) in assignment.iter().enumerate() {
                valid[i].insert(t);
            }
        }
        return;
    }
    for &t in universe {
        assignment[slot] = t;
        enumerate(script, ont, universe, assignment, slot + 1, valid);
    }
}

fn count_unannotated(script: &Script) -> usize {
    match script {
        Script::Unit => 0,
        Script::Where { rest, .. } | Script::FromNamed { rest, .. } => count_unannotated(rest),
        Script::Select { ty, rest, .. } => usize::from(ty.is_none()) + count_unannotated(rest),
        Script::Iterate { body, .. } => count_unannotated(body),
    }
}

fn nth_unannotated_var(script: &Script, n: usize) -> Option<String> {
    fn walk(script: &Script, remaining: &mut usize) -> Option<String> {
        match script {
            Script::Unit => None,
            Script::Where { rest, .. } | Script::FromNamed { rest, .. } => walk(rest, remaining),
            Script::Select { var, ty, rest, .. } => {
                if ty.is_none() {
                    if *remaining == 0 {
                        return Some(var.clone());
                    }
                    *remaining -= 1;
                }
                walk(rest, remaining)
            }
            Script::Iterate { body, .. } => walk(body, remaining),
        }
    }
    let mut remaining = n;
    walk(script, &mut remaining)
}

/// Fills unannotated slots, in pre-order, from `types`.
fn annotate(script: &Script, types: &[Type], next: &mut usize) -> Script {
    match script {
        Script::Unit => Script::Unit,
        Script::Where { query, rest, span } => Script::Where {
            query: query.clone(),
            rest: Box::new(annotate(rest, types, next)),
            span: *span,
        },
        Script::FromNamed { term, rest, span } => Script::FromNamed {
            term: term.clone(),
            rest: Box::new(annotate(rest, types, next)),
            span: *span,
        },
        Script::Select {
            var,
            ty,
            rest,
            span,
        } => {
            let ty = match ty {
                Some(t) => Some(*t),
                None => {
                    let t = types[*next];
                    *next += 1;
                    Some(t)
                }
            };
            Script::Select {
                var: var.clone(),
                ty,
                rest: Box::new(annotate(rest, types, next)),
                span: *span,
            }
        }
        Script::Iterate { body, span } => Script::Iterate {
            body: Box::new(annotate(body, types, next)),
            span: *span,
        },
    }
}
