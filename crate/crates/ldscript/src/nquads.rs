//! Canonical N-Quads serialization.
//!
//! One statement per line, UTF-8, LF line endings, sorted by the
//! canonical lexical forms of (graph, subject, predicate, object). The
//! output reparses to the same quad set, and equal stores serialize to
//! identical bytes.

use crate::term::Quad;

/// Serializes a set of ground quads. Callers may pass quads in any order
/// and with duplicates; output is sorted and duplicate-free.
pub fn serialize_nquads<'a>(quads: impl IntoIterator<Item = &'a Quad>) -> Vec<u8> {
    let mut sorted: Vec<&Quad> = quads.into_iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut out = String::new();
    for quad in sorted {
        debug_assert!(quad.is_ground(), "store dumps must be ground");
        out.push_str(&quad.triple.subject.canonical_token());
        out.push(' ');
        out.push_str(&quad.triple.predicate.canonical_token());
        out.push(' ');
        out.push_str(&quad.triple.object.canonical_token());
        out.push(' ');
        out.push_str(&quad.graph.canonical_token());
        out.push_str(" .\n");
    }
    out.into_bytes()
}
