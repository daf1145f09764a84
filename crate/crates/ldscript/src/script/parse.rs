//! Recursive-descent parser for script files.
//!
//! The concrete syntax stays close to SPARQL: a `prefix` prologue, then a
//! sequence of `from named`, `select`, `where { … }` and `iterate { … }`
//! statements. Filters drop the `filter` keyword — the syntax is
//! unambiguous without it. `iterate` bodies are explicit braced blocks
//! and terminate the enclosing sequence.

use std::collections::HashMap;

use thiserror::Error;

use crate::script::ast::{Expr, ExprKind, Filter, FilterKind, GraphBlock, Query, Script, Span};
use crate::term::{LangTag, Term, Triple, Uri};
use crate::types::{SimpleType, Type};

use super::lex::{tokenize, Tok};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{span:?}: {message}")]
pub struct ScriptParseError {
    pub span: Span,
    pub message: String,
}

impl ScriptParseError {
    pub fn line(&self) -> u32 {
        self.span.line
    }

    pub fn col(&self) -> u32 {
        self.span.col
    }
}

/// Parses a complete script. The result ends in `Unit` on every branch;
/// select annotations may be absent (inference fills them in).
pub fn parse_script(text: &str) -> Result<Script, ScriptParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        prefixes: HashMap::new(),
    };
    parser.prologue()?;
    let script = parser.script_block()?;
    parser.expect_eof()?;
    Ok(script)
}

struct Parser {
    tokens: Vec<(Tok, Span)>,
    pos: usize,
    prefixes: HashMap<String, String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].1
    }

    fn next(&mut self) -> (Tok, Span) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ScriptParseError> {
        Err(ScriptParseError {
            span: self.peek_span(),
            message: message.into(),
        })
    }

    fn expect_word(&mut self, word: &str) -> Result<Span, ScriptParseError> {
        match self.peek() {
            Tok::Word(w) if w == word => Ok(self.next().1),
            other => {
                let found = other.describe();
                self.err(format!("expected `{word}`, found {found}"))
            }
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, ScriptParseError> {
        if *self.peek() == tok {
            Ok(self.next().1)
        } else {
            let found = self.peek().describe();
            self.err(format!("expected {}, found {found}", tok.describe()))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ScriptParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            other => {
                let found = other.describe();
                self.err(format!("expected end of script, found {found}"))
            }
        }
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w == word)
    }

    fn prologue(&mut self) -> Result<(), ScriptParseError> {
        while self.at_word("prefix") {
            self.next();
            let (tok, span) = self.next();
            let Tok::PName(prefix, local) = tok else {
                return Err(ScriptParseError {
                    span,
                    message: "expected a prefix name ending in `:`".to_string(),
                });
            };
            if !local.is_empty() {
                return Err(ScriptParseError {
                    span,
                    message: "prefix declaration must end with `:`".to_string(),
                });
            }
            let (tok, span) = self.next();
            let Tok::Iri(iri) = tok else {
                return Err(ScriptParseError {
                    span,
                    message: "expected an IRI in prefix declaration".to_string(),
                });
            };
            self.prefixes.insert(prefix, iri);
        }
        Ok(())
    }

    /// Parses statements until `}` (or end of input at top level).
    /// `iterate` must be the final statement of its block.
    fn script_block(&mut self) -> Result<Script, ScriptParseError> {
        match self.peek().clone() {
            Tok::Eof | Tok::RBrace => Ok(Script::Unit),
            Tok::Word(w) if w == "from" => {
                let span = self.next().1;
                self.expect_word("named")?;
                let term = self.term()?;
                let rest = self.script_block()?;
                Ok(Script::FromNamed {
                    term,
                    rest: Box::new(rest),
                    span,
                })
            }
            Tok::Word(w) if w == "select" => {
                let span = self.next().1;
                let mut vars = Vec::new();
                loop {
                    let (tok, vspan) = self.next();
                    let Tok::Var(name) = tok else {
                        return Err(ScriptParseError {
                            span: vspan,
                            message: "expected a variable in select".to_string(),
                        });
                    };
                    let ty = if *self.peek() == Tok::Colon {
                        self.next();
                        Some(self.type_annotation()?)
                    } else {
                        None
                    };
                    vars.push((name, ty));
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                let rest = self.script_block()?;
                let mut script = rest;
                for (name, ty) in vars.into_iter().rev() {
                    script = Script::Select {
                        var: name,
                        ty,
                        rest: Box::new(script),
                        span,
                    };
                }
                Ok(script)
            }
            Tok::Word(w) if w == "where" => {
                let span = self.next().1;
                self.expect(Tok::LBrace)?;
                let query = self.query()?;
                self.expect(Tok::RBrace)?;
                let rest = self.script_block()?;
                Ok(Script::Where {
                    query,
                    rest: Box::new(rest),
                    span,
                })
            }
            Tok::Word(w) if w == "iterate" => {
                let span = self.next().1;
                self.expect(Tok::LBrace)?;
                let body = self.script_block()?;
                self.expect(Tok::RBrace)?;
                match self.peek() {
                    Tok::Eof | Tok::RBrace => Ok(Script::Iterate {
                        body: Box::new(body),
                        span,
                    }),
                    other => {
                        let found = other.describe();
                        self.err(format!(
                            "iterate must be the final statement of its block, found {found}"
                        ))
                    }
                }
            }
            Tok::Word(w) if w == "prefix" => {
                self.err("prefix declarations are only allowed before the first statement")
            }
            other => {
                let found = other.describe();
                self.err(format!("expected a statement, found {found}"))
            }
        }
    }

    fn type_annotation(&mut self) -> Result<Type, ScriptParseError> {
        match self.peek().clone() {
            Tok::Word(w) if w == "Property" => {
                self.next();
                self.expect(Tok::LParen)?;
                let inner = self.simple_type()?;
                self.expect(Tok::RParen)?;
                Ok(Type::Property(inner))
            }
            _ => Ok(Type::Simple(self.simple_type()?)),
        }
    }

    fn simple_type(&mut self) -> Result<SimpleType, ScriptParseError> {
        match self.next() {
            (Tok::Word(w), _) if w == "Res" => Ok(SimpleType::Resource),
            (Tok::PName(p, l), span) if p == "xsd" => match l.as_str() {
                "string" => Ok(SimpleType::String),
                "integer" => Ok(SimpleType::Integer),
                "decimal" => Ok(SimpleType::Decimal),
                "dateTime" => Ok(SimpleType::DateTime),
                "anyURI" => Ok(SimpleType::Resource),
                other => Err(ScriptParseError {
                    span,
                    message: format!("unknown simple type xsd:{other}"),
                }),
            },
            (tok, span) => Err(ScriptParseError {
                span,
                message: format!(
                    "expected a type (Res, xsd:string, xsd:integer, xsd:decimal, xsd:dateTime), found {}",
                    tok.describe()
                ),
            }),
        }
    }

    fn term(&mut self) -> Result<Term, ScriptParseError> {
        let (tok, span) = self.next();
        let fail = |message: String| ScriptParseError { span, message };
        match tok {
            Tok::Var(v) => Ok(Term::Var(v)),
            Tok::Iri(iri) => Uri::new(iri)
                .map(Term::Uri)
                .map_err(|e| fail(e.to_string())),
            Tok::PName(p, l) => {
                let base = self
                    .prefixes
                    .get(&p)
                    .ok_or_else(|| fail(format!("unknown prefix `{p}:`")))?;
                Uri::new(format!("{base}{l}"))
                    .map(Term::Uri)
                    .map_err(|e| fail(e.to_string()))
            }
            Tok::Quoted(s) => {
                if let Tok::LangTag(tag) = self.peek().clone() {
                    self.next();
                    let tag = LangTag::new(tag).map_err(|e| fail(e.to_string()))?;
                    Ok(Term::Str(s, Some(tag)))
                } else {
                    Ok(Term::Str(s, None))
                }
            }
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Dec(d) => Ok(Term::Dec(d)),
            Tok::DateTime(dt) => Ok(Term::DateTime(dt)),
            // a `-` in term position starts a negative literal; infix
            // minus never reaches here because expressions consume it
            // before descending
            Tok::Minus => match self.next() {
                (Tok::Int(i), _) => Ok(Term::Int(-i)),
                (Tok::Dec(d), _) => Ok(Term::Dec(-&d)),
                (tok, span) => Err(ScriptParseError {
                    span,
                    message: format!("expected a number after `-`, found {}", tok.describe()),
                }),
            },
            tok => Err(fail(format!("expected a term, found {}", tok.describe()))),
        }
    }

    // query := conj (`union` conj)*, folded left
    fn query(&mut self) -> Result<Query, ScriptParseError> {
        let mut q = self.conjunction()?;
        while self.at_word("union") {
            self.next();
            let rhs = self.conjunction()?;
            q = Query::Union(Box::new(q), Box::new(rhs));
        }
        Ok(q)
    }

    // conj := atom+, folded right; consecutive graph blocks merge into one
    // Data node
    fn conjunction(&mut self) -> Result<Query, ScriptParseError> {
        let mut parts: Vec<Query> = Vec::new();
        loop {
            if self.at_word("graph") {
                let mut blocks = Vec::new();
                while self.at_word("graph") {
                    blocks.push(self.graph_block()?);
                }
                parts.push(Query::Data(blocks));
                continue;
            }
            match self.peek() {
                Tok::RBrace | Tok::Eof => break,
                Tok::Word(w) if w == "union" => break,
                Tok::LBrace => {
                    self.next();
                    let inner = self.query()?;
                    self.expect(Tok::RBrace)?;
                    parts.push(inner);
                }
                _ => {
                    let f = self.filter()?;
                    parts.push(Query::Filter(f));
                }
            }
        }
        if parts.is_empty() {
            return self.err("expected a graph pattern or filter");
        }
        let mut q = parts.pop().unwrap();
        while let Some(prev) = parts.pop() {
            q = Query::Conj(Box::new(prev), Box::new(q));
        }
        Ok(q)
    }

    fn graph_block(&mut self) -> Result<GraphBlock, ScriptParseError> {
        let span = self.expect_word("graph")?;
        let graph = self.term()?;
        self.expect(Tok::LBrace)?;
        let mut triples = Vec::new();
        loop {
            let subject = self.term()?;
            let predicate = self.term()?;
            let object = self.term()?;
            triples.push(Triple::new(subject, predicate, object));
            if *self.peek() == Tok::Dot {
                self.next();
            }
            if *self.peek() == Tok::RBrace {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(GraphBlock {
            graph,
            triples,
            span,
        })
    }

    // filter := and (`||` and)*, folded left
    fn filter(&mut self) -> Result<Filter, ScriptParseError> {
        let span = self.peek_span();
        let mut f = self.filter_and()?;
        while *self.peek() == Tok::OrOr {
            self.next();
            let rhs = self.filter_and()?;
            f = Filter {
                kind: FilterKind::Or(Box::new(f), Box::new(rhs)),
                span,
            };
        }
        Ok(f)
    }

    fn filter_and(&mut self) -> Result<Filter, ScriptParseError> {
        let span = self.peek_span();
        let mut f = self.filter_not()?;
        while *self.peek() == Tok::AndAnd {
            self.next();
            let rhs = self.filter_not()?;
            f = Filter {
                kind: FilterKind::And(Box::new(f), Box::new(rhs)),
                span,
            };
        }
        Ok(f)
    }

    fn filter_not(&mut self) -> Result<Filter, ScriptParseError> {
        if *self.peek() == Tok::Bang {
            let span = self.next().1;
            let inner = self.filter_not()?;
            return Ok(Filter {
                kind: FilterKind::Not(Box::new(inner)),
                span,
            });
        }
        self.filter_primary()
    }

    fn filter_primary(&mut self) -> Result<Filter, ScriptParseError> {
        let span = self.peek_span();
        match self.peek().clone() {
            Tok::Word(w) if w == "regex" || w == "langMatches" => {
                self.next();
                self.expect(Tok::LParen)?;
                let operand = self.expr()?;
                self.expect(Tok::Comma)?;
                let (tok, aspan) = self.next();
                let Tok::Quoted(arg) = tok else {
                    return Err(ScriptParseError {
                        span: aspan,
                        message: format!("expected a string literal in {w}"),
                    });
                };
                self.expect(Tok::RParen)?;
                let kind = if w == "regex" {
                    regex::Regex::new(&arg).map_err(|e| ScriptParseError {
                        span: aspan,
                        message: format!("invalid regular expression: {e}"),
                    })?;
                    FilterKind::Regex(operand, arg)
                } else {
                    if arg != "*" {
                        LangTag::new(arg.clone()).map_err(|e| ScriptParseError {
                            span: aspan,
                            message: e.to_string(),
                        })?;
                    }
                    FilterKind::LangMatches(operand, arg)
                };
                Ok(Filter { kind, span })
            }
            Tok::LParen => {
                // either a parenthesized filter or a parenthesized
                // expression starting a comparison — try the filter first
                let save = self.pos;
                self.next();
                if let Ok(inner) = self.filter() {
                    if *self.peek() == Tok::RParen {
                        self.next();
                        // not followed by a comparison: it was a filter group
                        if !matches!(self.peek(), Tok::Eq | Tok::Lt) {
                            return Ok(inner);
                        }
                    }
                }
                self.pos = save;
                self.comparison(span)
            }
            _ => self.comparison(span),
        }
    }

    fn comparison(&mut self, span: Span) -> Result<Filter, ScriptParseError> {
        let left = self.expr()?;
        let (tok, _) = self.next();
        let kind = match tok {
            Tok::Eq => {
                let right = self.expr()?;
                FilterKind::Eq(left, right)
            }
            Tok::Lt => {
                let right = self.expr()?;
                FilterKind::Lt(left, right)
            }
            tok => {
                return Err(ScriptParseError {
                    span,
                    message: format!(
                        "expected `=` or `<` in comparison, found {}",
                        tok.describe()
                    ),
                })
            }
        };
        Ok(Filter { kind, span })
    }

    // expr := unary ((`+` | `-`) unary)*, folded left
    fn expr(&mut self) -> Result<Expr, ScriptParseError> {
        let span = self.peek_span();
        let mut e = self.expr_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ExprKind::Add as fn(Box<Expr>, Box<Expr>) -> ExprKind,
                Tok::Minus => ExprKind::Sub as fn(Box<Expr>, Box<Expr>) -> ExprKind,
                _ => break,
            };
            self.next();
            let rhs = self.expr_unary()?;
            e = Expr {
                kind: op(Box::new(e), Box::new(rhs)),
                span,
            };
        }
        Ok(e)
    }

    fn expr_unary(&mut self) -> Result<Expr, ScriptParseError> {
        let span = self.peek_span();
        match self.peek().clone() {
            Tok::Word(w) if w == "now" => {
                self.next();
                Ok(Expr {
                    kind: ExprKind::Now,
                    span,
                })
            }
            Tok::Word(w) if w == "str" || w == "abs" => {
                self.next();
                self.expect(Tok::LParen)?;
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                let kind = if w == "str" {
                    ExprKind::Str(Box::new(inner))
                } else {
                    ExprKind::Abs(Box::new(inner))
                };
                Ok(Expr { kind, span })
            }
            Tok::Word(w) if w == "haversine" => {
                self.next();
                self.expect(Tok::LParen)?;
                let a = self.expr()?;
                self.expect(Tok::Comma)?;
                let b = self.expr()?;
                self.expect(Tok::Comma)?;
                let c = self.expr()?;
                self.expect(Tok::Comma)?;
                let d = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr {
                    kind: ExprKind::Haversine(Box::new([a, b, c, d])),
                    span,
                })
            }
            Tok::LParen => {
                self.next();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => {
                let t = self.term()?;
                Ok(Expr {
                    kind: ExprKind::Term(t),
                    span,
                })
            }
        }
    }
}
