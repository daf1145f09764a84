//! Blank-node skolemization.
//!
//! Every blank node in consumed data is assigned a fresh URI, so blank
//! nodes never enter the local data model. Labels are scoped to one
//! document: the same label within a document maps to one URI, the same
//! label in different documents maps to different URIs.

use std::collections::HashMap;

use crate::term::{Node, RawTriple, Term, Triple, Uri};

/// Mints skolem URIs `urn:skolem:<run-id>:<counter>`. The counter is
/// monotone for the lifetime of the minter, so a URI is never issued
/// twice; the run id keeps separate runs apart when dumps are reloaded.
#[derive(Debug)]
pub struct SkolemMinter {
    run_id: String,
    counter: u64,
}

impl SkolemMinter {
    pub fn new(run_id: impl Into<String>) -> Self {
        let run_id: String = run_id.into();
        let run_id = run_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
            .collect();
        SkolemMinter { run_id, counter: 0 }
    }

    pub fn mint(&mut self) -> Uri {
        let uri = Uri::new(format!("urn:skolem:{}:{}", self.run_id, self.counter))
            .expect("skolem URIs are absolute by construction");
        self.counter += 1;
        uri
    }
}

/// Replaces every blank label in one document's triples with a fresh URI.
/// Non-blank terms pass through unchanged.
pub fn skolemize(triples: &[RawTriple], minter: &mut SkolemMinter) -> Vec<Triple> {
    let mut assigned: HashMap<String, Uri> = HashMap::new();
    let mut subst = |node: &Node| -> Term {
        match node {
            Node::Term(t) => t.clone(),
            Node::Blank(label) => {
                let uri = assigned
                    .entry(label.0.clone())
                    .or_insert_with(|| minter.mint());
                Term::Uri(uri.clone())
            }
        }
    };
    triples
        .iter()
        .map(|t| Triple::new(subst(&t.subject), subst(&t.predicate), subst(&t.object)))
        .collect()
}
