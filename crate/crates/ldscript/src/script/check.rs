//! Static type checking of scripts.
//!
//! A script is checked under the empty environment, so every variable
//! must be introduced by a `select` before use. Beyond the typing rules,
//! executable form is enforced: every select group must be immediately
//! followed by a `where`, which is its binding source at run time.

use crate::script::ast::Script;
use crate::term::Term;
use crate::types::{OntologyMap, Type, TypeEnv};
use crate::typing::{check_query, has_type, term_base_type, TypeError, TypeErrorKind};

/// Checks a fully annotated script. Errors carry a path to the offending
/// node.
pub fn check_script(script: &Script, ont: &OntologyMap) -> Result<(), TypeError> {
    check(&TypeEnv::empty(), script, ont)
}

fn check(env: &TypeEnv, script: &Script, ont: &OntologyMap) -> Result<(), TypeError> {
    match script {
        Script::Unit => Ok(()),
        Script::Where { query, rest, span } => {
            check_query(env, query, ont).map_err(|e| e.in_ctx("where").at(*span))?;
            check(env, rest, ont)
        }
        Script::FromNamed { term, rest, span } => {
            if !has_type(env, term, Type::RESOURCE, ont)
                .map_err(|e| e.in_ctx("from named").at(*span))?
            {
                let found = term_base_type(env, term, ont).expect("bound above");
                return Err(TypeError::new(TypeErrorKind::NotSubtype {
                    term: term.to_string(),
                    found,
                    expected: Type::RESOURCE,
                })
                .in_ctx("from named")
                .at(*span));
            }
            check(env, rest, ont)
        }
        Script::Select { span, .. } => {
            // walk the whole select group, extending the environment
            let mut env = env.clone();
            let mut cur = script;
            let mut group = Vec::new();
            while let Script::Select {
                var,
                ty,
                rest,
                span,
            } = cur
            {
                let ty = (*ty).ok_or_else(|| {
                    TypeError::new(TypeErrorKind::MissingAnnotation(var.clone())).at(*span)
                })?;
                env = env.extended(var, ty);
                group.push(var.clone());
                cur = rest;
            }
            if !matches!(cur, Script::Where { .. }) {
                return Err(TypeError::new(TypeErrorKind::SelectNoBindingSource(
                    group.join(", $"),
                ))
                .at(*span));
            }
            check(&env, cur, ont)
        }
        Script::Iterate { body, .. } => check(env, body, ont).map_err(|e| e.in_ctx("iterate")),
    }
}

/// Textual descriptions of every place a variable is used, for inference
/// diagnostics.
pub fn describe_var_uses(script: &Script, var: &str) -> Vec<String> {
    let mut uses = Vec::new();
    collect_script(script, var, &mut uses);
    uses
}

fn collect_script(script: &Script, var: &str, out: &mut Vec<String>) {
    match script {
        Script::Unit => {}
        Script::Where { query, rest, .. } => {
            collect_query(query, var, out);
            collect_script(rest, var, out);
        }
        Script::FromNamed { term, rest, .. } => {
            if is_var(term, var) {
                out.push("dereferenced by from named (requires Res)".to_string());
            }
            collect_script(rest, var, out);
        }
        Script::Select { rest, .. } => collect_script(rest, var, out),
        Script::Iterate { body, .. } => collect_script(body, var, out),
    }
}

fn collect_query(query: &crate::script::ast::Query, var: &str, out: &mut Vec<String>) {
    use crate::script::ast::Query;
    match query {
        Query::Data(blocks) => {
            for b in blocks {
                if is_var(&b.graph, var) {
                    out.push("named-graph selector (requires Res)".to_string());
                }
                for t in &b.triples {
                    if is_var(&t.subject, var) {
                        out.push(format!(
                            "subject of triple with predicate {} (requires Res)",
                            t.predicate
                        ));
                    }
                    if is_var(&t.predicate, var) {
                        out.push(format!(
                            "predicate of triple with object {} (requires a property type)",
                            t.object
                        ));
                    }
                    if is_var(&t.object, var) {
                        out.push(format!("object of property {}", t.predicate));
                    }
                }
            }
        }
        Query::Filter(f) => collect_filter(f, var, out),
        Query::Conj(a, b) | Query::Union(a, b) => {
            collect_query(a, var, out);
            collect_query(b, var, out);
        }
    }
}

fn collect_filter(f: &crate::script::ast::Filter, var: &str, out: &mut Vec<String>) {
    use crate::script::ast::FilterKind;
    match &f.kind {
        FilterKind::Or(a, b) | FilterKind::And(a, b) => {
            collect_filter(a, var, out);
            collect_filter(b, var, out);
        }
        FilterKind::Not(inner) => collect_filter(inner, var, out),
        FilterKind::Regex(e, _) => collect_expr(e, var, "regex operand (requires xsd:string)", out),
        FilterKind::LangMatches(e, _) => {
            collect_expr(e, var, "langMatches operand (requires xsd:string)", out)
        }
        FilterKind::Eq(a, b) => {
            collect_expr(a, var, "left side of =", out);
            collect_expr(b, var, "right side of =", out);
        }
        FilterKind::Lt(a, b) => {
            collect_expr(a, var, "left side of <", out);
            collect_expr(b, var, "right side of <", out);
        }
    }
}

fn collect_expr(e: &crate::script::ast::Expr, var: &str, ctx: &str, out: &mut Vec<String>) {
    use crate::script::ast::ExprKind;
    match &e.kind {
        ExprKind::Term(t) => {
            if is_var(t, var) {
                out.push(ctx.to_string());
            }
        }
        ExprKind::Now => {}
        ExprKind::Str(inner) => collect_expr(inner, var, "str operand", out),
        ExprKind::Abs(inner) => {
            collect_expr(inner, var, "abs operand (requires a numeric type)", out)
        }
        ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
            collect_expr(a, var, "arithmetic operand (requires a numeric type)", out);
            collect_expr(b, var, "arithmetic operand (requires a numeric type)", out);
        }
        ExprKind::Haversine(args) => {
            for a in args.iter() {
                collect_expr(a, var, "haversine operand (requires a numeric type)", out);
            }
        }
    }
}

fn is_var(t: &Term, var: &str) -> bool {
    matches!(t, Term::Var(v) if v == var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::parse::parse_script;
    use crate::types::{OntologyMap, SimpleType};
    use crate::typing::TypeErrorKind;

    fn label_ontology() -> OntologyMap {
        OntologyMap::from_entries([(
            crate::term::Uri::new("http://www.w3.org/2000/01/rdf-schema#label").unwrap(),
            SimpleType::String,
        )])
    }

    fn check_text(text: &str, ont: &OntologyMap) -> Result<(), TypeError> {
        check_script(&parse_script(text).unwrap(), ont)
    }

    #[test]
    fn well_typed_select_where_from_named() {
        let text = r#"
            prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#>
            select $g : Res, $x : Res, $y : xsd:string
            where {
              graph $g { $x rdfs:label $y }
              langMatches($y, "ru")
            }
            from named $x
        "#;
        assert!(check_text(text, &label_ontology()).is_ok());
    }

    #[test]
    fn dereferencing_a_string_variable_fails() {
        let text = r#"
            prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#>
            select $x : Res, $y : xsd:string
            where { graph $x { $x rdfs:label $y } }
            from named $y
        "#;
        let err = check_text(text, &label_ontology()).unwrap_err();
        assert!(
            matches!(err.kind, TypeErrorKind::NotSubtype { .. }),
            "{err}"
        );
    }

    #[test]
    fn dereferencing_a_number_fails() {
        let err = check_text("from named 99", &OntologyMap::new()).unwrap_err();
        assert!(
            matches!(err.kind, TypeErrorKind::NotSubtype { .. }),
            "{err}"
        );
    }

    #[test]
    fn unbound_variable_in_data_fails() {
        let text = "where { graph <http://g.org/> { <http://g.org/> <http://www.w3.org/2000/01/rdf-schema#label> $z } }";
        let err = check_text(text, &label_ontology()).unwrap_err();
        assert!(
            matches!(err.kind, TypeErrorKind::UnboundVariable(ref v) if v == "z"),
            "{err}"
        );
    }

    #[test]
    fn literal_graph_name_fails() {
        let text = "where { graph 5 { <http://s.org/> <http://p.org/> <http://o.org/> } }";
        let err = check_text(text, &OntologyMap::new()).unwrap_err();
        assert!(
            matches!(err.kind, TypeErrorKind::GraphNameNotResource { .. }),
            "{err}"
        );
    }

    #[test]
    fn unannotated_select_is_rejected() {
        let text = "select $x where { graph $x { $x <http://p.org/> $x } }";
        let err = check_text(text, &OntologyMap::new()).unwrap_err();
        assert!(
            matches!(err.kind, TypeErrorKind::MissingAnnotation(ref v) if v == "x"),
            "{err}"
        );
    }

    #[test]
    fn select_without_where_is_rejected() {
        let text = "select $x : Res from named $x";
        let err = check_text(text, &OntologyMap::new()).unwrap_err();
        assert!(
            matches!(err.kind, TypeErrorKind::SelectNoBindingSource(_)),
            "{err}"
        );
    }

    #[test]
    fn errors_carry_a_path() {
        let text = r#"
            select $y : xsd:string
            where {
              graph <http://g.org/> { <http://g.org/> <http://www.w3.org/2000/01/rdf-schema#label> $y }
              regex($y + 1, "x")
            }
            from named <http://g.org/>
        "#;
        let err = check_text(text, &label_ontology()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("where") && text.contains("regex"), "{text}");
    }

    #[test]
    fn var_use_descriptions() {
        let text = r#"
            prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#>
            select $x : Res, $y : xsd:string
            where {
              graph $x { $x rdfs:label $y }
              langMatches($y, "ru")
            }
            from named $y
        "#;
        let script = parse_script(text).unwrap();
        let uses = describe_var_uses(&script, "y");
        assert!(
            uses.iter().any(|u| u.contains("object of property")),
            "{uses:?}"
        );
        assert!(uses.iter().any(|u| u.contains("langMatches")), "{uses:?}");
        assert!(uses.iter().any(|u| u.contains("from named")), "{uses:?}");
    }
}
