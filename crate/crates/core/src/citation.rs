//! `CITATION.cff` files.

use serde_yaml::{Mapping, Value};

use crate::model::{Creator, Orcid};
use crate::parsers::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CffAuthor {
    pub family: Option<String>,
    pub given: Option<String>,
    /// Set for entity authors (organisations, consortia).
    pub entity_name: Option<String>,
    pub orcid: Option<Orcid>,
    pub affiliation: Option<String>,
}

impl CffAuthor {
    pub fn display_name(&self) -> String {
        if let Some(n) = &self.entity_name {
            return n.clone();
        }
        [self.given.as_deref(), self.family.as_deref()]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn to_creator(&self) -> Creator {
        Creator {
            name: self.display_name(),
            orcid: self.orcid.clone(),
            affiliation: self.affiliation.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationMetadata {
    pub title: Option<String>,
    pub authors: Vec<CffAuthor>,
    pub version: Option<String>,
    pub doi: Option<String>,
    pub preferred_citation: Option<String>,
    /// Problems that did not stop parsing, such as malformed ORCIDs.
    pub warnings: Vec<String>,
}

impl CitationMetadata {
    pub fn creators(&self) -> Vec<Creator> {
        self.authors.iter().map(CffAuthor::to_creator).collect()
    }
}

fn field(m: &Mapping, key: &str) -> Option<String> {
    match m.get(key)? {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn authors(list: &Value, warnings: &mut Vec<String>) -> Result<Vec<CffAuthor>, ParseError> {
    let list = list
        .as_sequence()
        .ok_or_else(|| ParseError::Schema("`authors` must be a list".into()))?;
    let mut out = Vec::new();
    for (i, a) in list.iter().enumerate() {
        let m = a
            .as_mapping()
            .ok_or_else(|| ParseError::Schema(format!("author {} is not a mapping", i + 1)))?;
        let orcid = match field(m, "orcid") {
            Some(raw) => match Orcid::parse(&raw) {
                Ok(o) => Some(o),
                Err(e) => {
                    warnings.push(format!("author {}: {e}", i + 1));
                    None
                }
            },
            None => None,
        };
        let author = CffAuthor {
            family: field(m, "family-names"),
            given: field(m, "given-names"),
            entity_name: field(m, "name"),
            orcid,
            affiliation: field(m, "affiliation"),
        };
        if author.display_name().is_empty() {
            return Err(ParseError::Schema(format!("author {} has no name", i + 1)));
        }
        out.push(author);
    }
    Ok(out)
}

/// Renders a `preferred-citation` block as one line of text.
fn render_reference(m: &Mapping) -> String {
    let mut warnings = Vec::new();
    let names = m
        .get("authors")
        .and_then(|a| authors(a, &mut warnings).ok())
        .unwrap_or_default()
        .iter()
        .map(|a| match (&a.family, &a.given) {
            (Some(f), Some(g)) => format!("{f}, {g}"),
            _ => a.display_name(),
        })
        .collect::<Vec<_>>();
    let mut parts = Vec::new();
    if !names.is_empty() {
        let year = field(m, "year")
            .map(|y| format!(" ({y})"))
            .unwrap_or_default();
        parts.push(format!("{}{year}", names.join("; ")));
    }
    for key in ["title", "journal", "publisher", "volume"] {
        if let Some(v) = field(m, key) {
            parts.push(v);
        }
    }
    if let Some(doi) = field(m, "doi") {
        parts.push(format!("https://doi.org/{doi}"));
    } else if let Some(url) = field(m, "url") {
        parts.push(url);
    }
    parts.join(". ")
}

pub fn parse_citation_cff(content: &[u8]) -> Result<CitationMetadata, ParseError> {
    let doc: Value = serde_yaml::from_slice(content).map_err(ParseError::from_yaml)?;
    let m = doc
        .as_mapping()
        .ok_or_else(|| ParseError::Schema("CITATION.cff is not a mapping".into()))?;
    let mut warnings = Vec::new();
    let list = m
        .get("authors")
        .ok_or_else(|| ParseError::Schema("missing `authors`".into()))?;
    let authors = authors(list, &mut warnings)?;
    if authors.is_empty() {
        return Err(ParseError::Schema("`authors` is empty".into()));
    }

    let doi = field(m, "doi").or_else(|| {
        m.get("identifiers")?.as_sequence()?.iter().find_map(|i| {
            let i = i.as_mapping()?;
            (field(i, "type").as_deref() == Some("doi"))
                .then(|| field(i, "value"))
                .flatten()
        })
    });
    let preferred_citation = match m.get("preferred-citation") {
        Some(Value::Mapping(p)) => Some(render_reference(p)).filter(|s| !s.is_empty()),
        Some(Value::String(s)) => Some(s.clone()),
        _ => None,
    };

    Ok(CitationMetadata {
        title: field(m, "title"),
        authors,
        version: field(m, "version"),
        doi,
        preferred_citation,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orcid_url_is_normalised() {
        let cff = b"cff-version: 1.2.0
title: Demo
authors:
  - family-names: Carberry
    given-names: Josiah
    orcid: https://orcid.org/0000-0002-1825-0097
";
        let c = parse_citation_cff(cff).unwrap();
        assert_eq!(
            c.authors[0].orcid.as_ref().unwrap().as_str(),
            "0000-0002-1825-0097"
        );
        assert_eq!(c.creators()[0].name, "Josiah Carberry");
        assert_eq!(c.title.as_deref(), Some("Demo"));
    }

    #[test]
    fn preferred_citation_rendered() {
        let cff = b"cff-version: 1.2.0
title: Tool
version: 1.0
authors:
  - name: The Consortium
preferred-citation:
  type: article
  title: A paper
  journal: Journal of Things
  year: 2020
  doi: 10.1000/xyz
  authors:
    - family-names: Doe
      given-names: Jane
";
        let c = parse_citation_cff(cff).unwrap();
        assert_eq!(
            c.preferred_citation.as_deref(),
            Some("Doe, Jane (2020). A paper. Journal of Things. https://doi.org/10.1000/xyz")
        );
        assert_eq!(c.version.as_deref(), Some("1.0"));
        assert_eq!(c.authors[0].display_name(), "The Consortium");
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(
            parse_citation_cff(b"title: x\nauthors: []\n"),
            Err(ParseError::Schema(_))
        ));
        assert!(matches!(
            parse_citation_cff(b"title: x\n"),
            Err(ParseError::Schema(_))
        ));
        assert!(matches!(
            parse_citation_cff(b"authors: [\n"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn bad_orcid_is_a_warning() {
        let c = parse_citation_cff(
            b"authors:\n  - family-names: X\n    orcid: https://orcid.org/0000-0002-1825-0098\n",
        )
        .unwrap();
        assert!(c.authors[0].orcid.is_none());
        assert_eq!(c.warnings.len(), 1);
    }
}
