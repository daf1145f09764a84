//! RDF terms, triples and quads.
//!
//! A [`Term`] is a URI, a variable, or a literal of one of the simple
//! datatypes (string, integer, decimal, dateTime). Integer and decimal are
//! distinct constructors even when numerically equal: classification is by
//! lexical form. All values are immutable and canonical on construction —
//! language tags are lowercased, decimals normalized, dateTimes shifted to
//! UTC — so structural equality is value equality within one datatype.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use num_bigint::BigInt;
use thiserror::Error;

use crate::decimal::Decimal;
use crate::iri;
use crate::types::SimpleType;

/// Well-known vocabulary URIs.
pub mod vocab {
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
    pub const XSD_FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";
    pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
    pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
    pub const XSD_ANY_URI: &str = "http://www.w3.org/2001/XMLSchema#anyURI";
    pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
    pub const RDFS_RESOURCE: &str = "http://www.w3.org/2000/01/rdf-schema#Resource";
    pub const OWL_THING: &str = "http://www.w3.org/2002/07/owl#Thing";
    pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
    pub const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error(transparent)]
    Iri(#[from] iri::IriError),
    #[error("invalid language tag `{0}`")]
    InvalidLangTag(String),
    #[error("unknown prefix `{0}:`")]
    UnknownPrefix(String),
    #[error("malformed dateTime literal `{0}`")]
    MalformedDateTime(String),
    #[error("malformed term lexeme `{0}`")]
    MalformedLexeme(String),
    #[error("variables have no literal classification")]
    VariableInput,
}

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Uri(String);

impl Uri {
    pub fn new(iri: impl Into<String>) -> Result<Self, TermError> {
        let iri = iri.into();
        iri::validate_absolute(&iri)?;
        Ok(Uri(iri))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Uri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An RFC 4646 language tag, stored lowercase so comparison is
/// case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LangTag(String);

impl LangTag {
    pub fn new(tag: impl Into<String>) -> Result<Self, TermError> {
        let tag = tag.into();
        let mut subtags = tag.split('-');
        let primary = subtags.next().unwrap_or("");
        let primary_ok =
            (1..=8).contains(&primary.len()) && primary.chars().all(|c| c.is_ascii_alphabetic());
        let rest_ok = subtags
            .clone()
            .all(|s| (1..=8).contains(&s.len()) && s.chars().all(|c| c.is_ascii_alphanumeric()));
        if !primary_ok || !rest_ok {
            return Err(TermError::InvalidLangTag(tag));
        }
        Ok(LangTag(tag.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A term of the data and scripting language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Uri(Uri),
    /// Variable name, without the leading `$`.
    Var(String),
    Str(String, Option<LangTag>),
    Int(BigInt),
    Dec(Decimal),
    DateTime(DateTime<Utc>),
}

impl Term {
    pub fn uri(iri: &str) -> Term {
        Term::Uri(Uri::new(iri).expect("valid absolute IRI"))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn str(s: &str) -> Term {
        Term::Str(s.to_string(), None)
    }

    pub fn lang_str(s: &str, tag: &str) -> Term {
        Term::Str(
            s.to_string(),
            Some(LangTag::new(tag).expect("valid language tag")),
        )
    }

    pub fn int(i: impl Into<BigInt>) -> Term {
        Term::Int(i.into())
    }

    pub fn dec(s: &str) -> Term {
        Term::Dec(s.parse().expect("valid decimal literal"))
    }

    pub fn date_time(s: &str) -> Term {
        Term::DateTime(parse_date_time(s).expect("valid dateTime literal"))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_uri(&self) -> bool {
        matches!(self, Term::Uri(_))
    }

    pub fn as_uri(&self) -> Option<&Uri> {
        match self {
            Term::Uri(u) => Some(u),
            _ => None,
        }
    }

    /// The simple datatype of a non-variable term: URIs are resources,
    /// literals classify by their constructor. `None` for variables.
    pub fn simple_type(&self) -> Option<SimpleType> {
        match self {
            Term::Uri(_) => Some(SimpleType::Resource),
            Term::Var(_) => None,
            Term::Str(..) => Some(SimpleType::String),
            Term::Int(_) => Some(SimpleType::Integer),
            Term::Dec(_) => Some(SimpleType::Decimal),
            Term::DateTime(_) => Some(SimpleType::DateTime),
        }
    }

    /// Canonical lexical form of the value, without any quoting — what the
    /// `str` builtin returns.
    pub fn lexical_form(&self) -> String {
        match self {
            Term::Uri(u) => u.as_str().to_string(),
            Term::Var(v) => format!("${v}"),
            Term::Str(s, _) => s.clone(),
            Term::Int(i) => i.to_string(),
            Term::Dec(d) => d.lexical(),
            Term::DateTime(dt) => format_date_time(dt),
        }
    }

    /// Canonical single-token rendering: the N-Triples token for ground
    /// terms, `$name` for variables. Injective over distinct terms, which
    /// makes it usable as a total order key.
    pub fn canonical_token(&self) -> String {
        match self {
            Term::Uri(u) => format!("<{}>", u.as_str()),
            Term::Var(v) => format!("${v}"),
            Term::Str(s, None) => format!("\"{}\"", escape_literal(s)),
            Term::Str(s, Some(tag)) => format!("\"{}\"@{}", escape_literal(s), tag),
            Term::Int(i) => format!("\"{}\"^^<{}>", i, vocab::XSD_INTEGER),
            Term::Dec(d) => format!("\"{}\"^^<{}>", d.lexical(), vocab::XSD_DECIMAL),
            Term::DateTime(dt) => {
                format!("\"{}\"^^<{}>", format_date_time(dt), vocab::XSD_DATE_TIME)
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_token())
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    /// Canonical term order: lexicographic on canonical tokens. Total and
    /// consistent with `Eq` because tokens are injective.
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_token().cmp(&other.canonical_token())
    }
}

/// Parses an xsd:dateTime lexical form. The timezone is required (our
/// timestamps are instants) and the value is normalized to UTC.
pub fn parse_date_time(s: &str) -> Result<DateTime<Utc>, TermError> {
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|_| TermError::MalformedDateTime(s.to_string()))
}

/// Canonical dateTime lexical form: UTC, `Z` suffix, fraction only when
/// nonzero.
pub fn format_date_time(dt: &DateTime<Utc>) -> String {
    dt.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// A subject–predicate–object statement. Typedness is not enforced at
/// this layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }

    pub fn is_ground(&self) -> bool {
        !self.subject.is_var() && !self.predicate.is_var() && !self.object.is_var()
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// A triple plus the named graph it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quad {
    pub graph: Term,
    pub triple: Triple,
}

impl Quad {
    pub fn new(graph: Term, triple: Triple) -> Self {
        Quad { graph, triple }
    }

    pub fn is_ground(&self) -> bool {
        !self.graph.is_var() && self.triple.is_ground()
    }
}

impl PartialOrd for Quad {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Quad {
    /// Quads sort by (graph, subject, predicate, object) canonical tokens.
    fn cmp(&self, other: &Self) -> Ordering {
        (
            &self.graph,
            &self.triple.subject,
            &self.triple.predicate,
            &self.triple.object,
        )
            .cmp(&(
                &other.graph,
                &other.triple.subject,
                &other.triple.predicate,
                &other.triple.object,
            ))
    }
}

/// A document-local blank node identifier. Exists only inside parse
/// results; skolemization replaces it before anything reaches a store.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlankLabel(pub String);

/// A parse-level node: either a proper term or a blank node placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Term(Term),
    Blank(BlankLabel),
}

/// A parsed triple that may still contain blank node labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTriple {
    pub subject: Node,
    pub predicate: Node,
    pub object: Node,
}

/// Classifies a single surface-syntax lexeme into a term.
///
/// Accepts `<iri>`, `prefix:local`, `$var`, quoted strings with optional
/// `@tag` or `^^datatype`, bare integers/decimals, and bare dateTimes.
pub fn parse_term(lexeme: &str, prefixes: &HashMap<String, String>) -> Result<Term, TermError> {
    let s = lexeme.trim();
    let malformed = || TermError::MalformedLexeme(s.to_string());
    if let Some(rest) = s.strip_prefix('<') {
        let iri = rest.strip_suffix('>').ok_or_else(malformed)?;
        return Ok(Term::Uri(Uri::new(iri)?));
    }
    if let Some(name) = s.strip_prefix('$') {
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(malformed());
        }
        return Ok(Term::Var(name.to_string()));
    }
    if s.starts_with('"') {
        let (content, rest) = scan_quoted(s).ok_or_else(malformed)?;
        if rest.is_empty() {
            return Ok(Term::Str(content, None));
        }
        if let Some(tag) = rest.strip_prefix('@') {
            return Ok(Term::Str(content, Some(LangTag::new(tag)?)));
        }
        if let Some(dt) = rest.strip_prefix("^^") {
            let datatype = parse_term(dt, prefixes)?;
            let datatype = datatype.as_uri().ok_or_else(malformed)?;
            return typed_literal(&content, datatype.as_str()).ok_or_else(malformed);
        }
        return Err(malformed());
    }
    if s.starts_with(|c: char| c.is_ascii_digit()) || (s.len() > 1 && s.starts_with(['+', '-'])) {
        return classify_number_or_date(s).ok_or_else(malformed);
    }
    // prefixed name
    let colon = s.find(':').ok_or_else(malformed)?;
    let (prefix, local) = (&s[..colon], &s[colon + 1..]);
    let base = prefixes
        .get(prefix)
        .ok_or_else(|| TermError::UnknownPrefix(prefix.to_string()))?;
    Ok(Term::Uri(Uri::new(format!("{base}{local}"))?))
}

/// Scans a quoted string with escapes; returns the unescaped content and
/// the remainder after the closing quote.
pub(crate) fn scan_quoted(s: &str) -> Option<(String, &str)> {
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, '"')) => {}
        _ => return None,
    }
    let mut out = String::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Some((out, &s[i + 1..])),
            '\\' => {
                let (_, esc) = chars.next()?;
                match esc {
                    't' => out.push('\t'),
                    'b' => out.push('\u{8}'),
                    'n' => out.push('\n'),
                    'r' => out.push('\r'),
                    'f' => out.push('\u{c}'),
                    '"' => out.push('"'),
                    '\'' => out.push('\''),
                    '\\' => out.push('\\'),
                    'u' | 'U' => {
                        let len = if esc == 'u' { 4 } else { 8 };
                        let mut code = 0u32;
                        for _ in 0..len {
                            let (_, h) = chars.next()?;
                            code = code.checked_mul(16)? + h.to_digit(16)?;
                        }
                        out.push(char::from_u32(code)?);
                    }
                    _ => return None,
                }
            }
            '\n' | '\r' => return None,
            c => out.push(c),
        }
    }
    None
}

/// Maps a typed literal onto the simple-type constructors. `None` marks an
/// unknown or ill-fitting datatype (the caller skips the triple).
pub fn typed_literal(content: &str, datatype: &str) -> Option<Term> {
    match datatype {
        vocab::XSD_STRING => Some(Term::Str(content.to_string(), None)),
        vocab::XSD_INTEGER => {
            let i: BigInt = content.trim().parse().ok()?;
            Some(Term::Int(i))
        }
        // float and double are lexical representations of the same
        // abstract numeric type as decimal
        vocab::XSD_DECIMAL | vocab::XSD_FLOAT | vocab::XSD_DOUBLE => {
            let d: Decimal = content.trim().parse().ok()?;
            Some(Term::Dec(d))
        }
        vocab::XSD_DATE_TIME => parse_date_time(content.trim()).ok().map(Term::DateTime),
        vocab::XSD_ANY_URI => Uri::new(content.trim()).ok().map(Term::Uri),
        _ => None,
    }
}

fn classify_number_or_date(s: &str) -> Option<Term> {
    if s.contains('T') && s.contains(':') {
        return parse_date_time(s).ok().map(Term::DateTime);
    }
    if s.contains(['.', 'e', 'E']) {
        return s.parse::<Decimal>().ok().map(Term::Dec);
    }
    s.parse::<BigInt>().ok().map(Term::Int)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefixes() -> HashMap<String, String> {
        let mut m = HashMap::new();
        m.insert(
            "dbp".to_string(),
            "http://dbpedia.org/property/".to_string(),
        );
        m.insert(
            "res".to_string(),
            "http://dbpedia.org/resource/".to_string(),
        );
        m
    }

    #[test]
    fn parses_iri_lexemes() {
        assert_eq!(
            parse_term("<http://dbpedia.org/resource/Kazakhstan>", &prefixes()).unwrap(),
            Term::uri("http://dbpedia.org/resource/Kazakhstan"),
        );
        assert_eq!(
            parse_term("res:Kazakhstan", &prefixes()).unwrap(),
            Term::uri("http://dbpedia.org/resource/Kazakhstan"),
        );
        assert!(matches!(
            parse_term("unknown:x", &prefixes()),
            Err(TermError::UnknownPrefix(p)) if p == "unknown"
        ));
        assert!(parse_term("<relative/iri>", &prefixes()).is_err());
    }

    #[test]
    fn parses_string_lexemes() {
        assert_eq!(
            parse_term("\"workshop\"@en-gb", &prefixes()).unwrap(),
            Term::lang_str("workshop", "en-gb"),
        );
        assert_eq!(
            parse_term("\"WWV2013\"", &prefixes()).unwrap(),
            Term::str("WWV2013")
        );
        // tags compare case-insensitively: stored lowercase
        assert_eq!(
            parse_term("\"workshop\"@EN-GB", &prefixes()).unwrap(),
            Term::lang_str("workshop", "en-gb"),
        );
        assert!(parse_term("\"x\"@9nope", &prefixes()).is_err());
    }

    #[test]
    fn classifies_numbers_by_lexical_form() {
        assert_eq!(parse_term("99", &prefixes()).unwrap(), Term::int(99));
        assert_eq!(parse_term("99.9", &prefixes()).unwrap(), Term::dec("99.9"));
        assert_eq!(
            parse_term("0.999e2", &prefixes()).unwrap(),
            Term::dec("99.9")
        );
        assert_ne!(
            parse_term("99", &prefixes()).unwrap(),
            parse_term("99.0", &prefixes()).unwrap()
        );
    }

    #[test]
    fn parses_date_time_lexemes() {
        let t = parse_term("2013-06-06T13:00:00+01:00", &prefixes()).unwrap();
        assert_eq!(t, Term::date_time("2013-06-06T12:00:00Z"));
        assert_eq!(t.lexical_form(), "2013-06-06T12:00:00Z");
        assert!(matches!(
            parse_term("2013-06-06T25:00:00Z", &prefixes()),
            Err(TermError::MalformedLexeme(_))
        ));
    }

    #[test]
    fn classify_covers_all_non_variable_terms() {
        assert_eq!(
            Term::uri("http://x.org/a").simple_type(),
            Some(SimpleType::Resource)
        );
        assert_eq!(Term::str("WWV2013").simple_type(), Some(SimpleType::String));
        assert_eq!(Term::int(99).simple_type(), Some(SimpleType::Integer));
        assert_eq!(Term::dec("99.9").simple_type(), Some(SimpleType::Decimal));
        assert_eq!(
            Term::date_time("2013-06-06T12:00:00Z").simple_type(),
            Some(SimpleType::DateTime)
        );
        assert_eq!(Term::var("x").simple_type(), None);
    }

    #[test]
    fn canonical_tokens_are_injective_on_value_variants() {
        let terms = [
            Term::uri("http://x.org/a"),
            Term::str("a"),
            Term::lang_str("a", "en"),
            Term::int(5),
            Term::dec("5.0"),
            Term::date_time("2013-06-06T12:00:00Z"),
            Term::var("a"),
        ];
        for (i, a) in terms.iter().enumerate() {
            for (j, b) in terms.iter().enumerate() {
                assert_eq!(i == j, a.canonical_token() == b.canonical_token());
            }
        }
    }

    #[test]
    fn values_transfer_between_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Term>();
        assert_send_sync::<Triple>();
        assert_send_sync::<Quad>();
        assert_send_sync::<Uri>();
        assert_send_sync::<crate::types::OntologyMap>();
        assert_send_sync::<crate::store::QuadStore>();
        assert_send_sync::<crate::store::SolutionSet>();
        assert_send_sync::<crate::store::Binding>();
    }

    #[test]
    fn string_escapes_round_trip() {
        let s = "line1\nline2\t\"quoted\" \\ end\u{1}";
        let escaped = escape_literal(s);
        let quoted = format!("\"{escaped}\"");
        let (back, rest) = scan_quoted(&quoted).unwrap();
        assert_eq!(back, s);
        assert!(rest.is_empty());
    }
}
