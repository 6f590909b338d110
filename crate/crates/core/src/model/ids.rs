use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! numeric_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl FromStr for $name {
            type Err = std::num::ParseIntError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.trim().parse().map($name)
            }
        }

        impl From<u64> for $name {
            fn from(v: u64) -> Self {
                $name(v)
            }
        }
    };
}

numeric_id!(
    /// Identifier of a registered user.
    UserId
);
numeric_id!(
    /// Identifier of an organisation (affiliation).
    OrgId
);
numeric_id!(
    /// Identifier of a space.
    SpaceId
);
numeric_id!(
    /// Identifier of a team.
    TeamId
);
numeric_id!(
    /// Identifier of a workflow entry.
    EntryId
);
numeric_id!(CollectionId);
numeric_id!(AssetId);

/// Short token naming a workflow class, e.g. `galaxy` or `cwl`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub String);

impl ClassId {
    pub fn new(token: impl Into<String>) -> Self {
        ClassId(token.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn other() -> Self {
        ClassId::new("other")
    }

    pub fn is_other(&self) -> bool {
        self.0 == "other"
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ClassId {
    fn from(s: &str) -> Self {
        ClassId::new(s)
    }
}
