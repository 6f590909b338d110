//! Sharing policies and the access decision function.
//!
//! Rights are totally ordered: `view < download < edit < manage`, and holding
//! a right implies holding every weaker one.

use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ids::{SpaceId, TeamId, UserId};
use super::people::{Space, Team, User};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Right {
    View,
    Download,
    Edit,
    Manage,
}

impl Right {
    pub const ALL: [Right; 4] = [Right::View, Right::Download, Right::Edit, Right::Manage];

    pub fn requires_authentication(self) -> bool {
        self >= Right::Edit
    }
}

impl fmt::Display for Right {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Right::View => "view",
            Right::Download => "download",
            Right::Edit => "edit",
            Right::Manage => "manage",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Visibility {
    #[default]
    Public,
    /// Visible to any authenticated user.
    Registered,
    /// Content withheld until the given date (inclusive).
    Embargoed {
        until: NaiveDate,
    },
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Subject {
    User(UserId),
    Team(TeamId),
    Space(SpaceId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grant {
    pub subject: Subject,
    pub right: Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct AccessPolicy {
    #[serde(default)]
    pub visibility: Visibility,
    #[serde(default)]
    pub grants: Vec<Grant>,
}

impl AccessPolicy {
    pub fn public() -> Self {
        AccessPolicy::default()
    }

    pub fn private() -> Self {
        AccessPolicy {
            visibility: Visibility::Private,
            grants: Vec::new(),
        }
    }

    pub fn with_grant(mut self, subject: Subject, right: Right) -> Self {
        self.add_grant(subject, right);
        self
    }

    /// Adds a grant, keeping only the strongest right per subject.
    pub fn add_grant(&mut self, subject: Subject, right: Right) {
        match self.grants.iter_mut().find(|g| g.subject == subject) {
            Some(g) => g.right = g.right.max(right),
            None => self.grants.push(Grant { subject, right }),
        }
    }
}

/// Something access-controlled: a workflow entry or an asset.
pub trait Protected {
    fn policy(&self) -> &AccessPolicy;
    fn owner_team_ids(&self) -> &BTreeSet<TeamId>;
}

/// Read access to the collaboration hierarchy.
pub trait Directory {
    fn team(&self, id: TeamId) -> Option<&Team>;
    fn space(&self, id: SpaceId) -> Option<&Space>;
    fn user(&self, _id: UserId) -> Option<&User> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessReason {
    PublicVisibility,
    RegisteredUser,
    EmbargoLifted,
    Grant,
    SpaceAdmin,
    AuthenticationRequired,
    InsufficientRight,
    Embargoed,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessDecision {
    pub allowed: bool,
    pub reason: AccessReason,
}

impl AccessDecision {
    fn allow(reason: AccessReason) -> Self {
        AccessDecision {
            allowed: true,
            reason,
        }
    }

    fn deny(reason: AccessReason) -> Self {
        AccessDecision {
            allowed: false,
            reason,
        }
    }
}

/// Strongest right the actor holds through grants or space administration.
pub fn held_right(
    dir: &impl Directory,
    actor: &User,
    resource: &impl Protected,
) -> Option<(Right, AccessReason)> {
    let actor_teams: Vec<&Team> = actor.team_ids().filter_map(|t| dir.team(t)).collect();

    let granted = resource
        .policy()
        .grants
        .iter()
        .filter(|g| match g.subject {
            Subject::User(u) => u == actor.id,
            Subject::Team(t) => actor.is_member_of(t),
            Subject::Space(s) => actor_teams.iter().any(|t| t.space_id == s),
        })
        .map(|g| g.right)
        .max();

    let space_admin = resource.owner_team_ids().iter().any(|t| {
        dir.team(*t)
            .and_then(|team| dir.space(team.space_id))
            .is_some_and(|space| space.admin_user_ids.contains(&actor.id))
    });

    match (granted, space_admin) {
        (_, true) => Some((Right::Manage, AccessReason::SpaceAdmin)),
        (Some(r), false) => Some((r, AccessReason::Grant)),
        (None, false) => None,
    }
}

/// Decides whether `actor` (None = anonymous) may exercise `right` on
/// `resource` on the given day.
pub fn check_access(
    dir: &impl Directory,
    actor: Option<&User>,
    resource: &impl Protected,
    right: Right,
    today: NaiveDate,
) -> AccessDecision {
    let held = actor.and_then(|a| held_right(dir, a, resource));
    if let Some((r, reason)) = held {
        if r >= right {
            return AccessDecision::allow(reason);
        }
    }

    if right.requires_authentication() {
        return if actor.is_none() {
            AccessDecision::deny(AccessReason::AuthenticationRequired)
        } else {
            AccessDecision::deny(AccessReason::InsufficientRight)
        };
    }

    match resource.policy().visibility {
        Visibility::Public => AccessDecision::allow(AccessReason::PublicVisibility),
        Visibility::Registered => match actor {
            Some(_) => AccessDecision::allow(AccessReason::RegisteredUser),
            None => AccessDecision::deny(AccessReason::AuthenticationRequired),
        },
        Visibility::Embargoed { until } if today >= until => {
            AccessDecision::allow(AccessReason::EmbargoLifted)
        }
        Visibility::Embargoed { .. } => AccessDecision::deny(AccessReason::Embargoed),
        Visibility::Private => AccessDecision::deny(AccessReason::Private),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap};

    use super::*;
    use crate::model::people::{Membership, TeamMember, TeamRole};

    struct Dir {
        teams: HashMap<TeamId, Team>,
        spaces: HashMap<SpaceId, Space>,
    }

    impl Directory for Dir {
        fn team(&self, id: TeamId) -> Option<&Team> {
            self.teams.get(&id)
        }
        fn space(&self, id: SpaceId) -> Option<&Space> {
            self.spaces.get(&id)
        }
    }

    struct Res {
        policy: AccessPolicy,
        teams: BTreeSet<TeamId>,
    }

    impl Protected for Res {
        fn policy(&self) -> &AccessPolicy {
            &self.policy
        }
        fn owner_team_ids(&self) -> &BTreeSet<TeamId> {
            &self.teams
        }
    }

    fn user(id: u64, teams: &[u64]) -> User {
        User {
            id: UserId(id),
            username: format!("u{id}"),
            display_name: format!("User {id}"),
            orcid: None,
            organisation_ids: BTreeSet::new(),
            memberships: teams
                .iter()
                .map(|t| Membership {
                    team_id: TeamId(*t),
                    role: TeamRole::Member,
                    organisation_ids: BTreeSet::new(),
                })
                .collect(),
            expertise_tags: vec![],
            registry_admin: false,
        }
    }

    fn fixture() -> Dir {
        let mut teams = HashMap::new();
        teams.insert(
            TeamId(1),
            Team {
                id: TeamId(1),
                name: "t1".into(),
                space_id: SpaceId(1),
                description: String::new(),
                members: vec![TeamMember {
                    user_id: UserId(10),
                    role: TeamRole::Admin,
                }],
                default_policy: AccessPolicy::default(),
                default_license: "MIT".into(),
            },
        );
        let mut spaces = HashMap::new();
        spaces.insert(
            SpaceId(1),
            Space {
                id: SpaceId(1),
                name: "s".into(),
                description: String::new(),
                admin_user_ids: [UserId(99)].into(),
                is_default: false,
            },
        );
        Dir { teams, spaces }
    }

    fn day(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn anonymous_public_view_allowed_private_denied() {
        let dir = fixture();
        let public = Res {
            policy: AccessPolicy::public(),
            teams: [TeamId(1)].into(),
        };
        let private = Res {
            policy: AccessPolicy::private(),
            teams: [TeamId(1)].into(),
        };
        let today = day("2026-01-01");
        assert!(check_access(&dir, None, &public, Right::View, today).allowed);
        assert!(!check_access(&dir, None, &private, Right::View, today).allowed);
        assert!(!check_access(&dir, None, &public, Right::Edit, today).allowed);
    }

    #[test]
    fn team_grant_opens_embargoed_download_before_date() {
        let dir = fixture();
        let res = Res {
            policy: AccessPolicy {
                visibility: Visibility::Embargoed {
                    until: day("2030-01-01"),
                },
                grants: vec![],
            }
            .with_grant(Subject::Team(TeamId(1)), Right::Edit),
            teams: [TeamId(1)].into(),
        };
        let member = user(10, &[1]);
        let d = check_access(
            &dir,
            Some(&member),
            &res,
            Right::Download,
            day("2026-01-01"),
        );
        assert_eq!(d, AccessDecision::allow(AccessReason::Grant));
        let stranger = user(11, &[]);
        let d = check_access(
            &dir,
            Some(&stranger),
            &res,
            Right::Download,
            day("2026-01-01"),
        );
        assert_eq!(d.reason, AccessReason::Embargoed);
        let d = check_access(
            &dir,
            Some(&stranger),
            &res,
            Right::Download,
            day("2030-01-01"),
        );
        assert_eq!(d.reason, AccessReason::EmbargoLifted);
    }

    #[test]
    fn space_admin_holds_manage() {
        let dir = fixture();
        let res = Res {
            policy: AccessPolicy::private(),
            teams: [TeamId(1)].into(),
        };
        let admin = user(99, &[]);
        let d = check_access(&dir, Some(&admin), &res, Right::Manage, day("2026-01-01"));
        assert_eq!(d, AccessDecision::allow(AccessReason::SpaceAdmin));
    }

    #[test]
    fn space_grant_reaches_members_of_teams_in_space() {
        let dir = fixture();
        let res = Res {
            policy: AccessPolicy::private().with_grant(Subject::Space(SpaceId(1)), Right::View),
            teams: [TeamId(2)].into(),
        };
        assert!(
            check_access(
                &dir,
                Some(&user(10, &[1])),
                &res,
                Right::View,
                day("2026-01-01")
            )
            .allowed
        );
        assert!(
            !check_access(
                &dir,
                Some(&user(12, &[])),
                &res,
                Right::View,
                day("2026-01-01")
            )
            .allowed
        );
    }

    #[test]
    fn add_grant_keeps_strongest() {
        let p = AccessPolicy::public()
            .with_grant(Subject::User(UserId(1)), Right::Edit)
            .with_grant(Subject::User(UserId(1)), Right::View);
        assert_eq!(p.grants.len(), 1);
        assert_eq!(p.grants[0].right, Right::Edit);
    }
}
