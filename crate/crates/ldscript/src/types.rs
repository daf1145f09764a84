//! The type universe and subtype lattice.
//!
//! There are exactly ten types: the five simple datatypes and a property
//! type over each. The subtype relation is generated by reflexivity,
//! `integer ≤ decimal`, contravariance of property types, and
//! `Property(σ) ≤ Res` (properties are URIs, hence resources).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::term::{vocab, Uri};

/// The five simple datatypes. `Resource` covers every URI; it is the
/// shared reading of xsd:anyURI, rdfs:Resource and owl:Thing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleType {
    Resource,
    String,
    Integer,
    Decimal,
    DateTime,
}

impl SimpleType {
    pub const ALL: [SimpleType; 5] = [
        SimpleType::Resource,
        SimpleType::String,
        SimpleType::Integer,
        SimpleType::Decimal,
        SimpleType::DateTime,
    ];

    /// `a ≤ b` on simple types: reflexivity plus `integer ≤ decimal`.
    pub fn subtype_of(self, other: SimpleType) -> bool {
        self == other || (self == SimpleType::Integer && other == SimpleType::Decimal)
    }

    /// Least upper bound, when one exists.
    pub fn join(self, other: SimpleType) -> Option<SimpleType> {
        if self.subtype_of(other) {
            Some(other)
        } else if other.subtype_of(self) {
            Some(self)
        } else {
            None
        }
    }

    /// The simple type denoted by a datatype URI, if any.
    pub fn from_datatype_uri(uri: &str) -> Option<SimpleType> {
        match uri {
            vocab::XSD_STRING => Some(SimpleType::String),
            vocab::XSD_INTEGER => Some(SimpleType::Integer),
            vocab::XSD_DECIMAL | vocab::XSD_FLOAT | vocab::XSD_DOUBLE => Some(SimpleType::Decimal),
            vocab::XSD_DATE_TIME => Some(SimpleType::DateTime),
            vocab::XSD_ANY_URI | vocab::RDFS_RESOURCE | vocab::OWL_THING => {
                Some(SimpleType::Resource)
            }
            _ => None,
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SimpleType::Resource => "Res",
            SimpleType::String => "xsd:string",
            SimpleType::Integer => "xsd:integer",
            SimpleType::Decimal => "xsd:decimal",
            SimpleType::DateTime => "xsd:dateTime",
        };
        f.write_str(name)
    }
}

/// A type: simple, or a property whose objects have the given simple type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Simple(SimpleType),
    Property(SimpleType),
}

impl Type {
    pub const RESOURCE: Type = Type::Simple(SimpleType::Resource);

    /// The full ten-element universe in a fixed order.
    pub fn universe() -> [Type; 10] {
        let mut all = [Type::RESOURCE; 10];
        for (i, s) in SimpleType::ALL.into_iter().enumerate() {
            all[i] = Type::Simple(s);
            all[i + 5] = Type::Property(s);
        }
        all
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Simple(s) => s.fmt(f),
            Type::Property(s) => write!(f, "Property({s})"),
        }
    }
}

/// `a ≤ b` over the ten-type universe.
///
/// Derivable exactly from: reflexivity; `integer ≤ decimal`; `σ1 ≤ σ2 ⟹
/// Property(σ2) ≤ Property(σ1)` (contravariance); `Property(σ) ≤ Res`.
pub fn subtype(a: Type, b: Type) -> bool {
    match (a, b) {
        (Type::Simple(s1), Type::Simple(s2)) => s1.subtype_of(s2),
        (Type::Property(s1), Type::Property(s2)) => s2.subtype_of(s1),
        (Type::Property(_), Type::Simple(s)) => s == SimpleType::Resource,
        (Type::Simple(_), Type::Property(_)) => false,
    }
}

/// Least upper bound in the ten-type lattice, when one exists.
pub fn type_join(a: Type, b: Type) -> Option<Type> {
    Type::universe()
        .into_iter()
        .filter(|&t| subtype(a, t) && subtype(b, t))
        .min_by(|&x, &y| {
            // among common upper bounds the least is the one below all others
            if subtype(x, y) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        })
        .filter(|&t| {
            Type::universe()
                .into_iter()
                .filter(|&u| subtype(a, u) && subtype(b, u))
                .all(|u| subtype(t, u))
        })
}

/// The unique maximal element of a set of types, if there is one.
pub fn unique_maximal(candidates: &[Type]) -> Option<Type> {
    let maximal: Vec<Type> = candidates
        .iter()
        .copied()
        .filter(|&t| candidates.iter().all(|&u| t == u || !subtype(t, u)))
        .collect();
    match maximal.as_slice() {
        [only] => Some(*only),
        _ => None,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("conflicting property types for {uri}: {first} vs {second}")]
    Conflict { uri: Uri, first: Type, second: Type },
}

/// The finite partial map from property URIs to property types.
///
/// URIs outside the map are resources only and cannot stand in predicate
/// position of an admitted triple. Immutable after load.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OntologyMap {
    entries: BTreeMap<Uri, SimpleType>,
}

impl OntologyMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a map from `(property, range)` pairs; conflicting pairs must
    /// be joined by the caller (see `derive_ontology`).
    pub fn from_entries(entries: impl IntoIterator<Item = (Uri, SimpleType)>) -> Self {
        OntologyMap {
            entries: entries.into_iter().collect(),
        }
    }

    /// The property type assigned to a URI, if any.
    pub fn property_type(&self, uri: &Uri) -> Option<Type> {
        self.entries.get(uri).map(|&s| Type::Property(s))
    }

    /// The range σ of a property URI, if mapped.
    pub fn range(&self, uri: &Uri) -> Option<SimpleType> {
        self.entries.get(uri).copied()
    }

    pub fn insert(&mut self, uri: Uri, range: SimpleType) {
        self.entries.insert(uri, range);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Uri, SimpleType)> {
        self.entries.iter().map(|(u, &s)| (u, s))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Merges another map in; equal or comparable ranges resolve to their
    /// join, incomparable ranges are a hard error.
    pub fn merge(&mut self, other: &OntologyMap) -> Result<(), OntologyError> {
        for (uri, range) in other.iter() {
            match self.entries.get(uri) {
                None => {
                    self.entries.insert(uri.clone(), range);
                }
                Some(&existing) => match existing.join(range) {
                    Some(joined) => {
                        self.entries.insert(uri.clone(), joined);
                    }
                    None => {
                        return Err(OntologyError::Conflict {
                            uri: uri.clone(),
                            first: Type::Property(existing),
                            second: Type::Property(range),
                        })
                    }
                },
            }
        }
        Ok(())
    }
}

/// A type environment: an ordered list of variable bindings where lookup
/// takes the first match. Extension is non-destructive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeEnv {
    bindings: Vec<(String, Type)>,
}

impl TypeEnv {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn lookup(&self, var: &str) -> Option<Type> {
        self.bindings
            .iter()
            .find(|(name, _)| name == var)
            .map(|&(_, t)| t)
    }

    /// A new environment with `var : ty` in front of the existing bindings.
    pub fn extended(&self, var: &str, ty: Type) -> TypeEnv {
        let mut bindings = Vec::with_capacity(self.bindings.len() + 1);
        bindings.push((var.to_string(), ty));
        bindings.extend(self.bindings.iter().cloned());
        TypeEnv { bindings }
    }
}
