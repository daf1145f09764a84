//! Shared material for integration tests: the example scripts, the
//! ontology they assume, and small builders.

#![allow(dead_code)]

pub mod generators;

use ldscript::term::Uri;
use ldscript::types::{OntologyMap, SimpleType};

pub const RES: &str = "http://dbpedia.org/resource/";
pub const DBP: &str = "http://dbpedia.org/property/";
pub const GEO: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";

pub fn uri(s: &str) -> Uri {
    Uri::new(s).unwrap()
}

/// The ontology assumed by the example scripts: latitude/longitude and
/// population density are decimal-valued, link properties are
/// URI-valued, labels/comments/demonyms are strings.
pub fn example_ontology() -> OntologyMap {
    OntologyMap::from_entries([
        (uri(&format!("{GEO}lat")), SimpleType::Decimal),
        (uri(&format!("{GEO}long")), SimpleType::Decimal),
        (uri(&format!("{DBP}populationDensity")), SimpleType::Decimal),
        (uri(&format!("{DBP}location")), SimpleType::Resource),
        (uri(&format!("{DBP}birthPlace")), SimpleType::Resource),
        (uri(&format!("{DBP}capital")), SimpleType::Resource),
        (uri(&format!("{RDFS}label")), SimpleType::String),
        (uri(&format!("{RDFS}comment")), SimpleType::String),
        (uri(&format!("{DBP}demonym")), SimpleType::String),
    ])
}

/// Dereference Kazakhstan, find its capital, dereference the capital.
pub const CAPITAL_SCRIPT: &str = r#"
prefix res: <http://dbpedia.org/resource/>
prefix dbp: <http://dbpedia.org/property/>

from named res:Kazakhstan
select $x : Res
where { graph res:Kazakhstan { res:Kazakhstan dbp:capital $x } }
from named $x
"#;

/// Crawl resources that have a Russian-language label.
pub const RUSSIAN_LABELS_SCRIPT: &str = r#"
prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#>

iterate {
  select $g : Res, $x : Res, $y : xsd:string
  where {
    graph $g { $x rdfs:label $y }
    langMatches($y, "ru")
  }
  from named $x
}
"#;

/// Same script with the select annotations erased, for inference.
pub const RUSSIAN_LABELS_SCRIPT_UNANNOTATED: &str = r#"
prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#>

iterate {
  select $g, $x, $y
  where {
    graph $g { $x rdfs:label $y }
    langMatches($y, "ru")
  }
  from named $x
}
"#;

/// Ill-typed mutant: dereferencing the string-typed label variable.
pub const RUSSIAN_LABELS_MUTANT: &str = r#"
prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#>

iterate {
  select $g : Res, $x : Res, $y : xsd:string
  where {
    graph $g { $x rdfs:label $y }
    langMatches($y, "ru")
  }
  from named $y
}
"#;

/// Dereference properties of Kazakhstan whose label or comment mentions
/// "location" in English.
pub const LOCATION_PROPERTIES_SCRIPT: &str = r#"
prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#>
prefix dbp: <http://dbpedia.org/property/>
prefix res: <http://dbpedia.org/resource/>

select $p : Property(Res), $y : xsd:string, $z : Res
where {
  {
    graph dbp: { $p rdfs:label $y }
    union
    graph dbp: { $p rdfs:comment $y }
  }
  graph res:Kazakhstan { $z $p res:Kazakhstan }
  regex($y, "location") && langMatches($y, "en")
}
from named $p
"#;

/// People born in places in Kazakhstan less than 100 km from Almaty.
pub const NEAR_ALMATY_SCRIPT: &str = r#"
prefix res: <http://dbpedia.org/resource/>
prefix dbp: <http://dbpedia.org/property/>
prefix geo: <http://www.w3.org/2003/01/geo/wgs84_pos#>

from named res:Almaty
select $almalat : xsd:decimal, $almalong : xsd:decimal
where {
  graph res:Almaty {
    res:Almaty geo:lat $almalat .
    res:Almaty geo:long $almalong
  }
}
from named res:Kazakhstan
iterate {
  select $loc : Res
  where { graph res:Kazakhstan { $loc dbp:location res:Kazakhstan } }
  from named $loc
  select $lat : xsd:decimal, $long : xsd:decimal
  where {
    graph $loc {
      $loc geo:lat $lat .
      $loc geo:long $long
    }
    haversine($lat, $long, $almalat, $almalong) < 100
  }
  iterate {
    select $person : Res
    where { graph $loc { $person dbp:birthPlace $loc } }
    from named $person
  }
}
"#;
