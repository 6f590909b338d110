use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ids::{OrgId, SpaceId, TeamId, UserId};
use super::orcid::Orcid;
use super::policy::AccessPolicy;

pub const DEFAULT_SPACE_NAME: &str = "Independent Teams";
pub const DEFAULT_TEAM_LICENSE: &str = "CC-BY-4.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeamRole {
    Member,
    Admin,
}

/// A user's membership of one team, with the affiliations they use there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub team_id: TeamId,
    pub role: TeamRole,
    #[serde(default)]
    pub organisation_ids: BTreeSet<OrgId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    /// Login name for local authentication.
    pub username: String,
    pub display_name: String,
    #[serde(default)]
    pub orcid: Option<Orcid>,
    #[serde(default)]
    pub organisation_ids: BTreeSet<OrgId>,
    #[serde(default)]
    pub memberships: Vec<Membership>,
    #[serde(default)]
    pub expertise_tags: Vec<String>,
    /// Registry operators may create spaces.
    #[serde(default)]
    pub registry_admin: bool,
}

impl User {
    pub fn membership(&self, team: TeamId) -> Option<&Membership> {
        self.memberships.iter().find(|m| m.team_id == team)
    }

    pub fn is_member_of(&self, team: TeamId) -> bool {
        self.membership(team).is_some()
    }

    pub fn team_ids(&self) -> impl Iterator<Item = TeamId> + '_ {
        self.memberships.iter().map(|m| m.team_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Organisation {
    pub id: OrgId,
    pub name: String,
    /// ISO 3166 alpha-2 country code.
    #[serde(default)]
    pub country: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    pub id: SpaceId,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub admin_user_ids: BTreeSet<UserId>,
    #[serde(default)]
    pub is_default: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamMember {
    pub user_id: UserId,
    pub role: TeamRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Team {
    pub id: TeamId,
    pub name: String,
    pub space_id: SpaceId,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub members: Vec<TeamMember>,
    /// Sharing applied to new entries owned by this team.
    #[serde(default)]
    pub default_policy: AccessPolicy,
    /// SPDX id applied to new entries that do not state a license.
    #[serde(default = "default_team_license")]
    pub default_license: String,
}

fn default_team_license() -> String {
    DEFAULT_TEAM_LICENSE.to_string()
}

impl Team {
    pub fn has_member(&self, user: UserId) -> bool {
        self.members.iter().any(|m| m.user_id == user)
    }

    pub fn is_admin(&self, user: UserId) -> bool {
        self.members
            .iter()
            .any(|m| m.user_id == user && m.role == TeamRole::Admin)
    }

    pub fn admin_count(&self) -> usize {
        self.members
            .iter()
            .filter(|m| m.role == TeamRole::Admin)
            .count()
    }
}
