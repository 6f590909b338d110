//! ORCID identifiers.
//!
//! Stored bare (`0000-0002-1825-0097`); rendered as `https://orcid.org/...`
//! only when emitting linked data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ORCID_IRI_PREFIX: &str = "https://orcid.org/";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrcidError {
    #[error("ORCID `{0}` is not of the form NNNN-NNNN-NNNN-NNNX")]
    Malformed(String),
    #[error("ORCID `{0}` fails the mod 11-2 checksum")]
    Checksum(String),
}

/// A validated, bare ORCID identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Orcid(String);

impl Orcid {
    /// Parses a bare id or an `orcid.org` IRI (http or https), normalising a
    /// lowercase check digit.
    pub fn parse(raw: &str) -> Result<Self, OrcidError> {
        let trimmed = raw.trim();
        let bare = ["https://orcid.org/", "http://orcid.org/", "orcid.org/"]
            .iter()
            .find_map(|p| trimmed.strip_prefix(p))
            .unwrap_or(trimmed)
            .trim_end_matches('/');
        let bare = bare.to_ascii_uppercase();

        let bytes = bare.as_bytes();
        let well_formed = bytes.len() == 19
            && bytes.iter().enumerate().all(|(i, &b)| match i {
                4 | 9 | 14 => b == b'-',
                18 => b.is_ascii_digit() || b == b'X',
                _ => b.is_ascii_digit(),
            });
        if !well_formed {
            return Err(OrcidError::Malformed(raw.to_string()));
        }

        let digits: Vec<u8> = bytes.iter().copied().filter(|b| *b != b'-').collect();
        let expected = check_digit(&digits[..15]);
        if digits[15] != expected {
            return Err(OrcidError::Checksum(raw.to_string()));
        }
        Ok(Orcid(bare))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn iri(&self) -> String {
        format!("{ORCID_IRI_PREFIX}{}", self.0)
    }
}

/// ISO 7064 MOD 11-2 check character over the first 15 digits.
fn check_digit(base: &[u8]) -> u8 {
    let total = base
        .iter()
        .fold(0u32, |acc, d| (acc + u32::from(d - b'0')) * 2);
    let result = (12 - total % 11) % 11;
    if result == 10 {
        b'X'
    } else {
        b'0' + result as u8
    }
}

impl fmt::Display for Orcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Orcid {
    type Err = OrcidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Orcid::parse(s)
    }
}

impl TryFrom<String> for Orcid {
    type Error = OrcidError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Orcid::parse(&value)
    }
}

impl From<Orcid> for String {
    fn from(o: Orcid) -> Self {
        o.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_known_valid_ids() {
        for id in [
            "0000-0002-1825-0097",
            "0000-0001-5109-3700",
            "0000-0002-1694-233X",
        ] {
            assert_eq!(Orcid::parse(id).unwrap().as_str(), id);
        }
    }

    #[test]
    fn strips_iri_prefix_and_uppercases() {
        let o = Orcid::parse("https://orcid.org/0000-0002-1694-233x").unwrap();
        assert_eq!(o.as_str(), "0000-0002-1694-233X");
        assert_eq!(o.iri(), "https://orcid.org/0000-0002-1694-233X");
        assert!(Orcid::parse("http://orcid.org/0000-0002-1825-0097/").is_ok());
    }

    #[test]
    fn rejects_bad_checksum_and_shape() {
        assert!(matches!(
            Orcid::parse("0000-0002-1825-0098"),
            Err(OrcidError::Checksum(_))
        ));
        assert!(matches!(
            Orcid::parse("0000-0002-1825"),
            Err(OrcidError::Malformed(_))
        ));
        assert!(matches!(
            Orcid::parse("0000-000X-1825-0097"),
            Err(OrcidError::Malformed(_))
        ));
    }
}
