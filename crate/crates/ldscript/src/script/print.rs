//! Canonical pretty-printer for scripts.
//!
//! `parse(print(s)) = s` for scripts in canonical form (conjunction
//! chains folded right, unions folded left, adjacent graph blocks merged
//! into one data node); printing always emits canonical text, so
//! `print ∘ parse` is idempotent. Prefixes are expanded: output uses full
//! IRIs and needs no prologue.

use crate::script::ast::{Expr, ExprKind, Filter, FilterKind, GraphBlock, Query, Script};
use crate::term::{escape_literal, format_date_time, Term};

/// Renders a script back to concrete syntax. `Unit` is the empty program.
pub fn print_script(script: &Script) -> String {
    let mut out = String::new();
    print_stmts(script, 0, &mut out);
    out
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_stmts(script: &Script, level: usize, out: &mut String) {
    match script {
        Script::Unit => {}
        Script::FromNamed { term, rest, .. } => {
            indent(level, out);
            out.push_str("from named ");
            out.push_str(&term_token(term));
            out.push('\n');
            print_stmts(rest, level, out);
        }
        Script::Select { .. } => {
            indent(level, out);
            out.push_str("select ");
            let mut cur = script;
            let mut first = true;
            while let Script::Select { var, ty, rest, .. } = cur {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                out.push('$');
                out.push_str(var);
                if let Some(t) = ty {
                    out.push_str(" : ");
                    out.push_str(&t.to_string());
                }
                cur = rest;
            }
            out.push('\n');
            print_stmts(cur, level, out);
        }
        Script::Where { query, rest, .. } => {
            indent(level, out);
            out.push_str("where {\n");
            print_query(query, level + 1, out);
            indent(level, out);
            out.push_str("}\n");
            print_stmts(rest, level, out);
        }
        Script::Iterate { body, .. } => {
            indent(level, out);
            out.push_str("iterate {\n");
            print_stmts(body, level + 1, out);
            indent(level, out);
            out.push_str("}\n");
        }
    }
}

fn print_query(query: &Query, level: usize, out: &mut String) {
    match query {
        Query::Union(left, right) => {
            // unions fold left: flatten the left spine, brace a union
            // right operand
            print_query(left, level, out);
            indent(level, out);
            out.push_str("union\n");
            if matches!(**right, Query::Union(..)) {
                indent(level, out);
                out.push_str("{\n");
                print_query(right, level + 1, out);
                indent(level, out);
                out.push_str("}\n");
            } else {
                print_query(right, level, out);
            }
        }
        _ => {
            let mut parts = Vec::new();
            flatten_conj(query, &mut parts);
            let mut prev_was_data = false;
            for part in parts {
                let is_data = matches!(part, Query::Data(_));
                // adjacent data parts would merge on reparse; brace the
                // second to keep the conjunction structure
                let needs_brace = matches!(part, Query::Union(..) | Query::Conj(..))
                    || (is_data && prev_was_data);
                if needs_brace {
                    indent(level, out);
                    out.push_str("{\n");
                    print_query(part, level + 1, out);
                    indent(level, out);
                    out.push_str("}\n");
                } else {
                    match part {
                        Query::Data(blocks) => {
                            for b in blocks {
                                print_graph_block(b, level, out);
                            }
                        }
                        Query::Filter(f) => {
                            indent(level, out);
                            out.push_str(&filter_text(f));
                            out.push('\n');
                        }
                        _ => unreachable!("braced above"),
                    }
                }
                prev_was_data = is_data;
            }
        }
    }
}

/// Flattens the right spine of a conjunction into its parts.
fn flatten_conj<'a>(query: &'a Query, out: &mut Vec<&'a Query>) {
    match query {
        Query::Conj(a, b) => {
            out.push(a);
            flatten_conj(b, out);
        }
        other => out.push(other),
    }
}

fn print_graph_block(block: &GraphBlock, level: usize, out: &mut String) {
    indent(level, out);
    out.push_str("graph ");
    out.push_str(&term_token(&block.graph));
    out.push_str(" {\n");
    for t in &block.triples {
        indent(level + 1, out);
        out.push_str(&term_token(&t.subject));
        out.push(' ');
        out.push_str(&term_token(&t.predicate));
        out.push(' ');
        out.push_str(&term_token(&t.object));
        out.push_str(" .\n");
    }
    indent(level, out);
    out.push_str("}\n");
}

/// The script-surface spelling of a term: numbers and dateTimes are bare.
pub fn term_token(t: &Term) -> String {
    match t {
        Term::Uri(u) => format!("<{u}>"),
        Term::Var(v) => format!("${v}"),
        Term::Str(s, None) => format!("\"{}\"", escape_literal(s)),
        Term::Str(s, Some(tag)) => format!("\"{}\"@{}", escape_literal(s), tag),
        Term::Int(i) => i.to_string(),
        Term::Dec(d) => d.lexical(),
        Term::DateTime(dt) => format_date_time(dt),
    }
}

pub fn filter_text(f: &Filter) -> String {
    match &f.kind {
        FilterKind::Or(a, b) => {
            let left = filter_text(a);
            let right = match &b.kind {
                FilterKind::Or(..) => format!("({})", filter_text(b)),
                _ => filter_text(b),
            };
            format!("{left} || {right}")
        }
        FilterKind::And(a, b) => {
            let left = match &a.kind {
                FilterKind::Or(..) => format!("({})", filter_text(a)),
                _ => filter_text(a),
            };
            let right = match &b.kind {
                FilterKind::Or(..) | FilterKind::And(..) => format!("({})", filter_text(b)),
                _ => filter_text(b),
            };
            format!("{left} && {right}")
        }
        FilterKind::Not(inner) => match &inner.kind {
            FilterKind::Not(..) | FilterKind::Regex(..) | FilterKind::LangMatches(..) => {
                format!("!{}", filter_text(inner))
            }
            _ => format!("!({})", filter_text(inner)),
        },
        FilterKind::Regex(e, pattern) => {
            format!("regex({}, \"{}\")", expr_text(e), escape_literal(pattern))
        }
        FilterKind::LangMatches(e, range) => {
            format!(
                "langMatches({}, \"{}\")",
                expr_text(e),
                escape_literal(range)
            )
        }
        FilterKind::Eq(a, b) => format!("{} = {}", expr_text(a), expr_text(b)),
        FilterKind::Lt(a, b) => format!("{} < {}", expr_text(a), expr_text(b)),
    }
}

pub fn expr_text(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Term(t) => term_token(t),
        ExprKind::Now => "now".to_string(),
        ExprKind::Str(inner) => format!("str({})", expr_text(inner)),
        ExprKind::Abs(inner) => format!("abs({})", expr_text(inner)),
        ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
            let op = if matches!(e.kind, ExprKind::Add(..)) {
                "+"
            } else {
                "-"
            };
            let left = expr_text(a);
            let right = match &b.kind {
                ExprKind::Add(..) | ExprKind::Sub(..) => format!("({})", expr_text(b)),
                _ => expr_text(b),
            };
            format!("{left} {op} {right}")
        }
        ExprKind::Haversine(args) => format!(
            "haversine({}, {}, {}, {})",
            expr_text(&args[0]),
            expr_text(&args[1]),
            expr_text(&args[2]),
            expr_text(&args[3])
        ),
    }
}
