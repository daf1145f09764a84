//! Absolute-IRI validation and relative reference resolution.
//!
//! IRIs are kept as opaque strings: no percent-encoding or case
//! normalization is applied, so a fetched IRI always round-trips
//! byte-for-byte. Resolution implements the RFC 3986 merge algorithm,
//! which is all dereferencing needs for `Location` headers and
//! relative references inside fetched documents.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IriError {
    #[error("IRI `{0}` is not absolute (missing scheme)")]
    NotAbsolute(String),
    #[error("IRI `{0}` contains whitespace or control characters")]
    ForbiddenCharacter(String),
}

/// An IRI is absolute when it starts with `scheme:` per RFC 3986.
pub fn is_absolute(iri: &str) -> bool {
    scheme_end(iri).is_some()
}

fn scheme_end(iri: &str) -> Option<usize> {
    let mut chars = iri.char_indices();
    match chars.next() {
        Some((_, c)) if c.is_ascii_alphabetic() => {}
        _ => return None,
    }
    for (i, c) in chars {
        match c {
            ':' => return Some(i),
            c if c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.') => {}
            _ => return None,
        }
    }
    None
}

pub fn validate_absolute(iri: &str) -> Result<(), IriError> {
    if iri
        .chars()
        .any(|c| c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"'))
    {
        return Err(IriError::ForbiddenCharacter(iri.to_string()));
    }
    if !is_absolute(iri) {
        return Err(IriError::NotAbsolute(iri.to_string()));
    }
    Ok(())
}

struct Parts<'a> {
    scheme: &'a str,
    authority: Option<&'a str>,
    path: &'a str,
    query: Option<&'a str>,
    fragment: Option<&'a str>,
}

fn split(iri: &str) -> Parts<'_> {
    let (scheme, rest) = match scheme_end(iri) {
        Some(i) => (&iri[..i], &iri[i + 1..]),
        None => ("", iri),
    };
    let (rest, fragment) = match rest.find('#') {
        Some(i) => (&rest[..i], Some(&rest[i + 1..])),
        None => (rest, None),
    };
    let (rest, query) = match rest.find('?') {
        Some(i) => (&rest[..i], Some(&rest[i + 1..])),
        None => (rest, None),
    };
    let (authority, path) = match rest.strip_prefix("//") {
        Some(after) => match after.find('/') {
            Some(i) => (Some(&after[..i]), &after[i..]),
            None => (Some(after), ""),
        },
        None => (None, rest),
    };
    Parts {
        scheme,
        authority,
        path,
        query,
        fragment,
    }
}

fn remove_dot_segments(path: &str) -> String {
    let absolute = path.starts_with('/');
    let segments: Vec<&str> = path.split('/').collect();
    let last = segments.len() - 1;
    let mut output: Vec<&str> = Vec::new();
    for (i, segment) in segments.iter().enumerate() {
        match *segment {
            "." => {
                // a final "." keeps the trailing slash
                if i == last {
                    output.push("");
                }
            }
            ".." => {
                if output.last().is_some_and(|s| !s.is_empty()) || output.len() > 1 {
                    output.pop();
                }
                if i == last {
                    output.push("");
                }
            }
            s => output.push(s),
        }
    }
    let joined = output.join("/");
    if absolute && !joined.starts_with('/') {
        format!("/{joined}")
    } else {
        joined
    }
}

/// Resolves `reference` against the absolute IRI `base` (RFC 3986 §5.2).
pub fn resolve(base: &str, reference: &str) -> String {
    if is_absolute(reference) {
        let r = split(reference);
        return recompose(
            r.scheme,
            r.authority,
            &remove_dot_segments(r.path),
            r.query,
            r.fragment,
        );
    }
    let b = split(base);
    let r = split(reference);
    let (authority, path, query);
    if r.authority.is_some() {
        authority = r.authority;
        path = remove_dot_segments(r.path);
        query = r.query;
    } else if r.path.is_empty() {
        authority = b.authority;
        path = b.path.to_string();
        query = r.query.or(b.query);
    } else {
        authority = b.authority;
        path = if r.path.starts_with('/') {
            remove_dot_segments(r.path)
        } else {
            remove_dot_segments(&merge_paths(&b, r.path))
        };
        query = r.query;
    }
    recompose(b.scheme, authority, &path, query, r.fragment)
}

fn merge_paths(base: &Parts, rel: &str) -> String {
    if base.authority.is_some() && base.path.is_empty() {
        return format!("/{rel}");
    }
    match base.path.rfind('/') {
        Some(i) => format!("{}{}", &base.path[..=i], rel),
        None => rel.to_string(),
    }
}

fn recompose(
    scheme: &str,
    authority: Option<&str>,
    path: &str,
    query: Option<&str>,
    fragment: Option<&str>,
) -> String {
    let mut out = String::new();
    if !scheme.is_empty() {
        out.push_str(scheme);
        out.push(':');
    }
    if let Some(a) = authority {
        out.push_str("//");
        out.push_str(a);
    }
    out.push_str(path);
    if let Some(q) = query {
        out.push('?');
        out.push_str(q);
    }
    if let Some(f) = fragment {
        out.push('#');
        out.push_str(f);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absolute_detection() {
        assert!(is_absolute("http://dbpedia.org/resource/Kazakhstan"));
        assert!(is_absolute("urn:skolem:20130326:0"));
        assert!(!is_absolute("/data/Kazakhstan.n3"));
        assert!(!is_absolute("Kazakhstan"));
        assert!(!is_absolute("://missing"));
    }

    #[test]
    fn validation_rejects_whitespace() {
        assert!(validate_absolute("http://example.org/a b").is_err());
        assert!(validate_absolute("relative/path").is_err());
        assert!(validate_absolute("http://example.org/ok").is_ok());
    }

    #[test]
    fn resolves_relative_references() {
        let base = "http://dbpedia.org/resource/Kazakhstan";
        assert_eq!(
            resolve(base, "/data/Kazakhstan.n3"),
            "http://dbpedia.org/data/Kazakhstan.n3"
        );
        assert_eq!(
            resolve(base, "Astana"),
            "http://dbpedia.org/resource/Astana"
        );
        assert_eq!(resolve(base, "../other/x"), "http://dbpedia.org/other/x");
        assert_eq!(
            resolve(base, "?q=1"),
            "http://dbpedia.org/resource/Kazakhstan?q=1"
        );
        assert_eq!(
            resolve(base, "http://other.org/abs"),
            "http://other.org/abs"
        );
        assert_eq!(resolve("http://a/b/c/d;p?q", "g"), "http://a/b/c/g");
        assert_eq!(resolve("http://a/b/c/d;p?q", "./g/."), "http://a/b/c/g/");
        assert_eq!(resolve("http://a/b/c/d;p?q", "../.."), "http://a/");
    }
}
