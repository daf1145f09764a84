//! Tokenizer for script files.

use chrono::{DateTime, Utc};
use num_bigint::BigInt;

use crate::decimal::Decimal;
use crate::script::ast::Span;
use crate::term::{parse_date_time, scan_quoted};

use super::parse::ScriptParseError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Var(String),
    Iri(String),
    PName(String, String),
    Word(String),
    Quoted(String),
    /// A `@tag` immediately following a string literal.
    LangTag(String),
    Int(BigInt),
    Dec(Decimal),
    DateTime(DateTime<Utc>),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Plus,
    Minus,
    Eq,
    Lt,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("variable ${v}"),
            Tok::Iri(i) => format!("IRI <{i}>"),
            Tok::PName(p, l) => format!("prefixed name {p}:{l}"),
            Tok::Word(w) => format!("`{w}`"),
            Tok::Quoted(_) => "string literal".to_string(),
            Tok::LangTag(t) => format!("language tag @{t}"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Dec(d) => format!("decimal {d}"),
            Tok::DateTime(_) => "dateTime literal".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Eq => "`=`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::AndAnd => "`&&`".to_string(),
            Tok::OrOr => "`||`".to_string(),
            Tok::Bang => "`!`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

pub(super) fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, ScriptParseError> {
    let mut tokens = Vec::new();
    let mut rest = src;
    let mut line = 1u32;
    let mut col = 1u32;

    let bump = |rest: &mut &str, line: &mut u32, col: &mut u32, n_chars: usize| {
        let mut it = rest.char_indices();
        let mut end = rest.len();
        for _ in 0..n_chars {
            if let Some((_, c)) = it.next() {
                if c == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
            }
        }
        if let Some((i, _)) = it.next() {
            end = i;
        }
        *rest = &rest[end..];
    };

    loop {
        // skip whitespace and comments
        loop {
            match rest.chars().next() {
                Some(c) if c.is_whitespace() => bump(&mut rest, &mut line, &mut col, 1),
                Some('#') => {
                    let n = rest.chars().take_while(|&c| c != '\n').count();
                    bump(&mut rest, &mut line, &mut col, n);
                }
                _ => break,
            }
        }
        let span = Span::new(line, col);
        let err = |msg: String| ScriptParseError { span, message: msg };
        let Some(c) = rest.chars().next() else {
            tokens.push((Tok::Eof, span));
            return Ok(tokens);
        };
        match c {
            '{' | '}' | '(' | ')' | ',' | ':' | '.' | '+' | '-' | '=' | '!' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '=' => Tok::Eq,
                    _ => Tok::Bang,
                };
                bump(&mut rest, &mut line, &mut col, 1);
                tokens.push((tok, span));
            }
            '&' => {
                if !rest.starts_with("&&") {
                    return Err(err("expected `&&`".to_string()));
                }
                bump(&mut rest, &mut line, &mut col, 2);
                tokens.push((Tok::AndAnd, span));
            }
            '|' => {
                if !rest.starts_with("||") {
                    return Err(err("expected `||`".to_string()));
                }
                bump(&mut rest, &mut line, &mut col, 2);
                tokens.push((Tok::OrOr, span));
            }
            '<' => {
                // an IRI when `>` appears before any whitespace, otherwise
                // the comparison operator
                let iri_end = rest
                    .char_indices()
                    .skip(1)
                    .take_while(|&(_, c)| !c.is_whitespace())
                    .find(|&(_, c)| c == '>')
                    .map(|(i, _)| i);
                match iri_end {
                    Some(end) => {
                        let iri = rest[1..end].to_string();
                        bump(&mut rest, &mut line, &mut col, iri.chars().count() + 2);
                        tokens.push((Tok::Iri(iri), span));
                    }
                    None => {
                        bump(&mut rest, &mut line, &mut col, 1);
                        tokens.push((Tok::Lt, span));
                    }
                }
            }
            '$' => {
                let name: String = rest[1..]
                    .chars()
                    .take_while(|&c| c.is_alphanumeric() || c == '_')
                    .collect();
                if name.is_empty() {
                    return Err(err("expected variable name after `$`".to_string()));
                }
                bump(&mut rest, &mut line, &mut col, 1 + name.chars().count());
                tokens.push((Tok::Var(name), span));
            }
            '"' => {
                let (content, after) =
                    scan_quoted(rest).ok_or_else(|| err("unterminated string".to_string()))?;
                let consumed = rest.chars().count() - after.chars().count();
                bump(&mut rest, &mut line, &mut col, consumed);
                tokens.push((Tok::Quoted(content), span));
                if rest.starts_with('@') {
                    let tag_span = Span::new(line, col);
                    let tag: String = rest[1..]
                        .chars()
                        .take_while(|&c| c.is_ascii_alphanumeric() || c == '-')
                        .collect();
                    if tag.is_empty() {
                        return Err(ScriptParseError {
                            span: tag_span,
                            message: "expected language tag after `@`".to_string(),
                        });
                    }
                    bump(&mut rest, &mut line, &mut col, 1 + tag.chars().count());
                    tokens.push((Tok::LangTag(tag), tag_span));
                }
            }
            c if c.is_ascii_digit() => {
                let (tok, consumed) = scan_number_or_datetime(rest).map_err(err)?;
                bump(&mut rest, &mut line, &mut col, consumed);
                tokens.push((tok, span));
            }
            c if c.is_alphabetic() || c == '_' => {
                let word: String = rest
                    .chars()
                    .take_while(|&c| c.is_alphanumeric() || c == '_')
                    .collect();
                let mut consumed = word.chars().count();
                // a colon turns the word into a prefixed name
                if rest[consumed_bytes(rest, consumed)..].starts_with(':') {
                    let after = &rest[consumed_bytes(rest, consumed) + 1..];
                    let local: String = after
                        .chars()
                        .take_while(|&c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
                        .collect();
                    let local = local.trim_end_matches('.').to_string();
                    consumed += 1 + local.chars().count();
                    bump(&mut rest, &mut line, &mut col, consumed);
                    tokens.push((Tok::PName(word, local), span));
                } else {
                    bump(&mut rest, &mut line, &mut col, consumed);
                    tokens.push((Tok::Word(word), span));
                }
            }
            c => return Err(err(format!("unexpected character `{c}`"))),
        }
    }
}

fn consumed_bytes(s: &str, n_chars: usize) -> usize {
    s.char_indices()
        .nth(n_chars)
        .map(|(i, _)| i)
        .unwrap_or(s.len())
}

/// Scans a number, switching to dateTime scanning when a 4-digit year is
/// followed by `-`. Returns the token and the number of chars consumed.
fn scan_number_or_datetime(rest: &str) -> Result<(Tok, usize), String> {
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    let after = &rest[digits.len()..];
    if digits.chars().count() == 4 && after.starts_with('-') {
        let lexeme: String = rest
            .chars()
            .take_while(|&c| c.is_ascii_digit() || matches!(c, '-' | ':' | 'T' | '.' | '+' | 'Z'))
            .collect();
        let dt = parse_date_time(&lexeme)
            .map_err(|_| format!("malformed dateTime literal `{lexeme}`"))?;
        let count = lexeme.chars().count();
        return Ok((Tok::DateTime(dt), count));
    }
    // plain number: digits, optional fraction, optional exponent
    let mut out = String::new();
    let mut chars = rest.chars().peekable();
    let mut is_decimal = false;
    while let Some(&c) = chars.peek() {
        match c {
            '0'..='9' => {
                out.push(c);
                chars.next();
            }
            '.' if !is_decimal => {
                let mut ahead = chars.clone();
                ahead.next();
                if ahead.peek().is_some_and(|c| c.is_ascii_digit()) {
                    is_decimal = true;
                    out.push('.');
                    chars.next();
                } else {
                    break;
                }
            }
            'e' | 'E' => {
                let mut ahead = chars.clone();
                ahead.next();
                if ahead
                    .peek()
                    .is_some_and(|c| c.is_ascii_digit() || *c == '+' || *c == '-')
                {
                    is_decimal = true;
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
    let count = out.chars().count();
    let tok = if is_decimal {
        Tok::Dec(
            out.parse()
                .map_err(|_| format!("malformed decimal literal `{out}`"))?,
        )
    } else {
        Tok::Int(
            out.parse()
                .map_err(|_| format!("malformed integer literal `{out}`"))?,
        )
    };
    Ok((tok, count))
}
