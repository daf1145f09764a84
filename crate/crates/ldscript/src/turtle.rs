//! Parsing of fetched RDF documents.
//!
//! Supports N-Triples and a Turtle subset: prefix/base directives and
//! semicolon/comma abbreviations, but no collections, anonymous blank
//! nodes or multi-line strings. `text/n3` documents are parsed with the
//! same subset, which covers how Linked Data sources actually use it.
//!
//! Literals with a datatype outside the five simple types do not fail the
//! document: the affected triple is reported and skipped, because data
//! published on the open Web is messy.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::decimal::Decimal;
use crate::iri;
use crate::term::{
    scan_quoted, typed_literal, vocab, BlankLabel, LangTag, Node, Quad, RawTriple, Term, Triple,
    Uri,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RdfParseError {
    #[error("unsupported content type `{0}`")]
    UnsupportedContentType(String),
    #[error("document is not valid UTF-8")]
    Encoding,
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
}

fn syntax(pos: Pos, message: impl Into<String>) -> RdfParseError {
    RdfParseError::Syntax {
        pos,
        message: message.into(),
    }
}

/// A triple skipped during parsing, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedTriple {
    pub pos: Pos,
    pub reason: String,
}

/// Result of parsing one document: triples in document order, possibly
/// holding blank-node labels, plus per-triple skips.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub triples: Vec<RawTriple>,
    pub skipped: Vec<SkippedTriple>,
}

/// Content types this engine accepts from the wire.
pub fn supported_content_type(content_type: &str) -> bool {
    let essence = content_type
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase();
    matches!(
        essence.as_str(),
        "application/n-triples" | "text/turtle" | "text/n3"
    )
}

/// Parses a fetched document body. `base` resolves relative references.
pub fn parse_rdf(
    body: &[u8],
    content_type: &str,
    base: &str,
) -> Result<ParseOutcome, RdfParseError> {
    if !supported_content_type(content_type) {
        return Err(RdfParseError::UnsupportedContentType(
            content_type.to_string(),
        ));
    }
    let text = std::str::from_utf8(body).map_err(|_| RdfParseError::Encoding)?;
    Parser::new(text, base).document()
}

/// Parses a Turtle/N-Triples document from a string (ontology files,
/// fixtures, tests).
pub fn parse_turtle(text: &str, base: &str) -> Result<ParseOutcome, RdfParseError> {
    Parser::new(text, base).document()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Iri(String),
    PName(String, String),
    Blank(String),
    Quoted(String),
    LangTag(String),
    Caret2,
    Number(String),
    Bool(bool),
    A,
    PrefixDecl,
    BaseDecl,
    Dot,
    Semi,
    Comma,
    Eof,
}

struct Scanner<'a> {
    rest: &'a str,
    line: u32,
    col: u32,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner {
            rest: src,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self, n_chars: usize) {
        let mut it = self.rest.char_indices();
        let mut end = self.rest.len();
        for _ in 0..n_chars {
            match it.next() {
                Some((_, c)) => {
                    if c == '\n' {
                        self.line += 1;
                        self.col = 1;
                    } else {
                        self.col += 1;
                    }
                }
                None => break,
            }
        }
        if let Some((i, _)) = it.next() {
            end = i;
        }
        self.rest = &self.rest[end..];
    }

    fn skip_trivia(&mut self) {
        loop {
            let mut chars = self.rest.chars();
            match chars.next() {
                Some(c) if c.is_whitespace() => self.bump(1),
                Some('#') => {
                    let n = self.rest.chars().take_while(|&c| c != '\n').count();
                    self.bump(n);
                }
                _ => return,
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.rest.starts_with(s)
    }

    fn next_token(&mut self) -> Result<(Tok, Pos), RdfParseError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek_char() else {
            return Ok((Tok::Eof, pos));
        };
        match c {
            '<' => {
                let end = self
                    .rest
                    .char_indices()
                    .find(|&(_, c)| c == '>')
                    .map(|(i, _)| i)
                    .ok_or_else(|| syntax(pos, "unterminated IRI"))?;
                let iri = self.rest[1..end].to_string();
                if iri.chars().any(|c| c.is_whitespace()) {
                    return Err(syntax(pos, "whitespace inside IRI"));
                }
                self.bump(iri.chars().count() + 2);
                Ok((Tok::Iri(iri), pos))
            }
            '"' => {
                let (content, after) =
                    scan_quoted(self.rest).ok_or_else(|| syntax(pos, "unterminated string"))?;
                let consumed = self.rest.chars().count() - after.chars().count();
                self.bump(consumed);
                Ok((Tok::Quoted(content), pos))
            }
            '@' => {
                let word: String = self.rest[1..]
                    .chars()
                    .take_while(|&c| c.is_ascii_alphanumeric() || c == '-')
                    .collect();
                self.bump(1 + word.chars().count());
                match word.as_str() {
                    "prefix" => Ok((Tok::PrefixDecl, pos)),
                    "base" => Ok((Tok::BaseDecl, pos)),
                    _ => Ok((Tok::LangTag(word), pos)),
                }
            }
            '^' if self.starts_with("^^") => {
                self.bump(2);
                Ok((Tok::Caret2, pos))
            }
            '_' if self.starts_with("_:") => {
                let label: String = self.rest[2..]
                    .chars()
                    .take_while(|&c| c.is_alphanumeric() || c == '_' || c == '-')
                    .collect();
                if label.is_empty() {
                    return Err(syntax(pos, "empty blank node label"));
                }
                self.bump(2 + label.chars().count());
                Ok((Tok::Blank(label), pos))
            }
            '.' => {
                // a dot only starts a number when followed by a digit
                if self.rest.chars().nth(1).is_some_and(|c| c.is_ascii_digit()) {
                    let lexeme = self.scan_number();
                    return Ok((Tok::Number(lexeme), pos));
                }
                self.bump(1);
                Ok((Tok::Dot, pos))
            }
            ';' => {
                self.bump(1);
                Ok((Tok::Semi, pos))
            }
            ',' => {
                self.bump(1);
                Ok((Tok::Comma, pos))
            }
            c if c.is_ascii_digit() || c == '+' || c == '-' => {
                let lexeme = self.scan_number();
                if lexeme == "+" || lexeme == "-" {
                    return Err(syntax(pos, "stray sign"));
                }
                Ok((Tok::Number(lexeme), pos))
            }
            c if c.is_alphabetic() || c == ':' => {
                let word: String = self
                    .rest
                    .chars()
                    .take_while(|&c| c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '.'))
                    .collect();
                // trailing dots belong to the statement terminator
                let word = word.trim_end_matches('.').to_string();
                self.bump(word.chars().count());
                match word.as_str() {
                    "a" => Ok((Tok::A, pos)),
                    "true" => Ok((Tok::Bool(true), pos)),
                    "false" => Ok((Tok::Bool(false), pos)),
                    "PREFIX" | "prefix" if !word.contains(':') => Ok((Tok::PrefixDecl, pos)),
                    "BASE" | "base" if !word.contains(':') => Ok((Tok::BaseDecl, pos)),
                    _ => match word.find(':') {
                        Some(i) => Ok((
                            Tok::PName(word[..i].to_string(), word[i + 1..].to_string()),
                            pos,
                        )),
                        None => Err(syntax(pos, format!("unexpected token `{word}`"))),
                    },
                }
            }
            c => Err(syntax(pos, format!("unexpected character `{c}`"))),
        }
    }

    fn scan_number(&mut self) -> String {
        let mut out = String::new();
        let mut chars = self.rest.chars().peekable();
        if matches!(chars.peek(), Some('+') | Some('-')) {
            out.push(chars.next().unwrap());
        }
        let mut seen_dot = false;
        let mut seen_exp = false;
        while let Some(&c) = chars.peek() {
            match c {
                '0'..='9' => {
                    out.push(c);
                    chars.next();
                }
                '.' if !seen_dot && !seen_exp => {
                    // include the dot only when a digit follows
                    let mut ahead = chars.clone();
                    ahead.next();
                    if ahead.peek().is_some_and(|c| c.is_ascii_digit()) {
                        seen_dot = true;
                        out.push('.');
                        chars.next();
                    } else {
                        break;
                    }
                }
                'e' | 'E' if !seen_exp && !out.is_empty() => {
                    let mut ahead = chars.clone();
                    ahead.next();
                    let next = ahead.peek().copied();
                    if next.is_some_and(|c| c.is_ascii_digit() || c == '+' || c == '-') {
                        seen_exp = true;
                        out.push(c);
                        chars.next();
                        if let Some(&sign @ ('+' | '-')) = chars.peek() {
                            out.push(sign);
                            chars.next();
                        }
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        self.bump(out.chars().count());
        out
    }
}

/// The object slot of a statement: a node, or a recorded skip.
enum ObjectSlot {
    Node(Node),
    Skip(String),
}

struct Parser<'a> {
    scanner: Scanner<'a>,
    lookahead: Option<(Tok, Pos)>,
    prefixes: HashMap<String, String>,
    base: String,
    out: ParseOutcome,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, base: &str) -> Self {
        Parser {
            scanner: Scanner::new(text),
            lookahead: None,
            prefixes: HashMap::new(),
            base: base.to_string(),
            out: ParseOutcome::default(),
        }
    }

    fn peek(&mut self) -> Result<&(Tok, Pos), RdfParseError> {
        if self.lookahead.is_none() {
            self.lookahead = Some(self.scanner.next_token()?);
        }
        Ok(self.lookahead.as_ref().unwrap())
    }

    fn next(&mut self) -> Result<(Tok, Pos), RdfParseError> {
        match self.lookahead.take() {
            Some(t) => Ok(t),
            None => self.scanner.next_token(),
        }
    }

    fn expect_dot(&mut self) -> Result<(), RdfParseError> {
        match self.next()? {
            (Tok::Dot, _) => Ok(()),
            (t, pos) => Err(syntax(pos, format!("expected `.`, found {t:?}"))),
        }
    }

    fn document(mut self) -> Result<ParseOutcome, RdfParseError> {
        loop {
            match self.peek()?.0.clone() {
                Tok::Eof => return Ok(self.out),
                Tok::PrefixDecl => {
                    let (_, pos) = self.next()?;
                    self.prefix_decl(pos)?;
                }
                Tok::BaseDecl => {
                    let (_, pos) = self.next()?;
                    self.base_decl(pos)?;
                }
                _ => self.triples_statement()?,
            }
        }
    }

    fn prefix_decl(&mut self, pos: Pos) -> Result<(), RdfParseError> {
        let (tok, tpos) = self.next()?;
        let Tok::PName(prefix, local) = tok else {
            return Err(syntax(tpos, "expected prefix name"));
        };
        if !local.is_empty() {
            return Err(syntax(tpos, "prefix declaration must end with `:`"));
        }
        let (tok, ipos) = self.next()?;
        let Tok::Iri(iri) = tok else {
            return Err(syntax(ipos, "expected IRI in prefix declaration"));
        };
        let resolved = iri::resolve(&self.base, &iri);
        self.prefixes.insert(prefix, resolved);
        // @prefix requires the dot; SPARQL-style PREFIX goes without
        if matches!(self.peek()?.0, Tok::Dot) {
            self.next()?;
        }
        let _ = pos;
        Ok(())
    }

    fn base_decl(&mut self, _pos: Pos) -> Result<(), RdfParseError> {
        let (tok, ipos) = self.next()?;
        let Tok::Iri(iri) = tok else {
            return Err(syntax(ipos, "expected IRI in base declaration"));
        };
        self.base = iri::resolve(&self.base, &iri);
        if matches!(self.peek()?.0, Tok::Dot) {
            self.next()?;
        }
        Ok(())
    }

    fn triples_statement(&mut self) -> Result<(), RdfParseError> {
        let subject = self.subject()?;
        loop {
            let predicate = self.verb()?;
            loop {
                let opos = self.peek()?.1;
                match self.object()? {
                    ObjectSlot::Node(object) => self.out.triples.push(RawTriple {
                        subject: subject.clone(),
                        predicate: predicate.clone(),
                        object,
                    }),
                    ObjectSlot::Skip(reason) => {
                        self.out.skipped.push(SkippedTriple { pos: opos, reason })
                    }
                }
                if matches!(self.peek()?.0, Tok::Comma) {
                    self.next()?;
                } else {
                    break;
                }
            }
            match self.peek()?.0 {
                Tok::Semi => {
                    self.next()?;
                    // allow a trailing semicolon before the dot
                    if matches!(self.peek()?.0, Tok::Dot) {
                        break;
                    }
                }
                _ => break,
            }
        }
        self.expect_dot()
    }

    fn uri_from(&mut self, iri: String, pos: Pos) -> Result<Uri, RdfParseError> {
        let resolved = iri::resolve(&self.base, &iri);
        Uri::new(resolved).map_err(|e| syntax(pos, e.to_string()))
    }

    fn expand_pname(&mut self, prefix: &str, local: &str, pos: Pos) -> Result<Uri, RdfParseError> {
        let base = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| syntax(pos, format!("unknown prefix `{prefix}:`")))?;
        Uri::new(format!("{base}{local}")).map_err(|e| syntax(pos, e.to_string()))
    }

    fn subject(&mut self) -> Result<Node, RdfParseError> {
        match self.next()? {
            (Tok::Iri(iri), pos) => Ok(Node::Term(Term::Uri(self.uri_from(iri, pos)?))),
            (Tok::PName(p, l), pos) => Ok(Node::Term(Term::Uri(self.expand_pname(&p, &l, pos)?))),
            (Tok::Blank(label), _) => Ok(Node::Blank(BlankLabel(label))),
            (t, pos) => Err(syntax(pos, format!("expected subject, found {t:?}"))),
        }
    }

    fn verb(&mut self) -> Result<Node, RdfParseError> {
        match self.next()? {
            (Tok::A, _) => Ok(Node::Term(Term::uri(vocab::RDF_TYPE))),
            (Tok::Iri(iri), pos) => Ok(Node::Term(Term::Uri(self.uri_from(iri, pos)?))),
            (Tok::PName(p, l), pos) => Ok(Node::Term(Term::Uri(self.expand_pname(&p, &l, pos)?))),
            (t, pos) => Err(syntax(pos, format!("expected predicate, found {t:?}"))),
        }
    }

    fn object(&mut self) -> Result<ObjectSlot, RdfParseError> {
        match self.next()? {
            (Tok::Iri(iri), pos) => Ok(ObjectSlot::Node(Node::Term(Term::Uri(
                self.uri_from(iri, pos)?,
            )))),
            (Tok::PName(p, l), pos) => Ok(ObjectSlot::Node(Node::Term(Term::Uri(
                self.expand_pname(&p, &l, pos)?,
            )))),
            (Tok::Blank(label), _) => Ok(ObjectSlot::Node(Node::Blank(BlankLabel(label)))),
            (Tok::Bool(_), _) => Ok(ObjectSlot::Skip(format!(
                "unsupported literal datatype <{}>",
                vocab::XSD_BOOLEAN
            ))),
            (Tok::Number(lexeme), pos) => {
                let term = if lexeme.contains(['.', 'e', 'E']) {
                    lexeme.parse::<Decimal>().map(Term::Dec)
                } else {
                    lexeme
                        .parse::<BigInt>()
                        .map(Term::Int)
                        .map_err(|_| crate::decimal::ParseDecimalError(lexeme.clone()))
                };
                match term {
                    Ok(t) => Ok(ObjectSlot::Node(Node::Term(t))),
                    Err(_) => Err(syntax(pos, format!("malformed numeric literal `{lexeme}`"))),
                }
            }
            (Tok::Quoted(content), pos) => self.literal_tail(content, pos),
            (t, pos) => Err(syntax(pos, format!("expected object, found {t:?}"))),
        }
    }

    fn literal_tail(&mut self, content: String, pos: Pos) -> Result<ObjectSlot, RdfParseError> {
        match self.peek()?.0.clone() {
            Tok::LangTag(tag) => {
                self.next()?;
                let tag = LangTag::new(tag).map_err(|e| syntax(pos, e.to_string()))?;
                Ok(ObjectSlot::Node(Node::Term(Term::Str(content, Some(tag)))))
            }
            Tok::Caret2 => {
                self.next()?;
                let datatype = match self.next()? {
                    (Tok::Iri(iri), dpos) => self.uri_from(iri, dpos)?,
                    (Tok::PName(p, l), dpos) => self.expand_pname(&p, &l, dpos)?,
                    (t, dpos) => {
                        return Err(syntax(dpos, format!("expected datatype IRI, found {t:?}")))
                    }
                };
                match typed_literal(&content, datatype.as_str()) {
                    Some(term) => Ok(ObjectSlot::Node(Node::Term(term))),
                    None => Ok(ObjectSlot::Skip(format!(
                        "unsupported literal datatype <{datatype}> or ill-formed value `{content}`"
                    ))),
                }
            }
            _ => Ok(ObjectSlot::Node(Node::Term(Term::Str(content, None)))),
        }
    }
}

/// Parses an N-Quads document (a store dump). Strict: absolute IRIs and
/// literals only, three or four terms per statement, no blank nodes.
pub fn parse_nquads(text: &str) -> Result<Vec<Quad>, RdfParseError> {
    let mut scanner = Scanner::new(text);
    let mut quads = Vec::new();
    loop {
        let (tok, pos) = scanner.next_token()?;
        if tok == Tok::Eof {
            return Ok(quads);
        }
        let subject = nquads_term(tok, pos, &mut scanner)?;
        let (tok, pos) = scanner.next_token()?;
        let predicate = nquads_term(tok, pos, &mut scanner)?;
        let (tok, pos) = scanner.next_token()?;
        let object = nquads_term(tok, pos, &mut scanner)?;
        let (tok, pos) = scanner.next_token()?;
        let (graph, terminator) = match tok {
            Tok::Dot => (None, None),
            other => {
                let g = nquads_term(other, pos, &mut scanner)?;
                (Some(g), Some(scanner.next_token()?))
            }
        };
        if let Some((t, tpos)) = terminator {
            if t != Tok::Dot {
                return Err(syntax(tpos, "expected `.` at end of statement"));
            }
        }
        let graph = graph.ok_or_else(|| syntax(pos, "statement has no graph term"))?;
        if !graph.is_uri() {
            return Err(syntax(pos, "graph term must be a URI"));
        }
        let quad = Quad::new(graph, Triple::new(subject, predicate, object));
        if !quad.is_ground() {
            return Err(syntax(pos, "store dumps must be ground"));
        }
        quads.push(quad);
    }
}

fn nquads_term(tok: Tok, pos: Pos, scanner: &mut Scanner) -> Result<Term, RdfParseError> {
    match tok {
        Tok::Iri(iri) => Ok(Term::Uri(
            Uri::new(iri).map_err(|e| syntax(pos, e.to_string()))?,
        )),
        Tok::Quoted(content) => {
            // lang tag or datatype must follow immediately; plain otherwise
            let save_line = scanner.line;
            let save_col = scanner.col;
            let save_rest = scanner.rest;
            match scanner.next_token()? {
                (Tok::LangTag(tag), tpos) => {
                    let tag = LangTag::new(tag).map_err(|e| syntax(tpos, e.to_string()))?;
                    Ok(Term::Str(content, Some(tag)))
                }
                (Tok::Caret2, _) => match scanner.next_token()? {
                    (Tok::Iri(dt), dpos) => typed_literal(&content, &dt)
                        .ok_or_else(|| syntax(dpos, format!("unsupported datatype <{dt}>"))),
                    (t, dpos) => Err(syntax(dpos, format!("expected datatype IRI, found {t:?}"))),
                },
                _ => {
                    scanner.line = save_line;
                    scanner.col = save_col;
                    scanner.rest = save_rest;
                    Ok(Term::Str(content, None))
                }
            }
        }
        Tok::Blank(label) => Err(syntax(
            pos,
            format!("blank node `_:{label}` not allowed in store dump"),
        )),
        t => Err(syntax(pos, format!("unexpected token {t:?}"))),
    }
}
