//! Users, credentials, organisations, spaces and teams.

use std::collections::BTreeSet;

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use chrono::Duration;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    Counters, Registry, RegistryError, State, TokenRecord, KIND_ORGS, KIND_SPACES, KIND_TEAMS,
    KIND_USERS,
};
use crate::model::{
    sha256_hex, AccessPolicy, Membership, Orcid, OrgId, Organisation, Space, SpaceId, Team, TeamId,
    TeamMember, TeamRole, User, UserId, DEFAULT_TEAM_LICENSE,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewUser {
    pub username: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub password: Option<String>,
    #[serde(default)]
    pub orcid: Option<String>,
    #[serde(default)]
    pub organisation_ids: BTreeSet<OrgId>,
    #[serde(default)]
    pub expertise_tags: Vec<String>,
}

impl NewUser {
    pub fn named(username: impl Into<String>) -> Self {
        NewUser {
            username: username.into(),
            ..NewUser::default()
        }
    }

    pub fn with_password(mut self, password: impl Into<String>) -> Self {
        self.password = Some(password.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewTeam {
    pub name: String,
    /// Every team lives in a space; `None` is rejected.
    #[serde(default)]
    pub space_id: Option<SpaceId>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub default_policy: Option<AccessPolicy>,
    #[serde(default)]
    pub default_license: Option<String>,
}

impl NewTeam {
    pub fn in_space(name: impl Into<String>, space: SpaceId) -> Self {
        NewTeam {
            name: name.into(),
            space_id: Some(space),
            ..NewTeam::default()
        }
    }
}

fn hash_password(password: &str) -> Result<String, RegistryError> {
    let salt = SaltString::generate(&mut rand::rngs::OsRng);
    Argon2::default()
        .hash_password(password.as_bytes(), &salt)
        .map(|h| h.to_string())
        .map_err(|e| RegistryError::Storage(format!("password hashing failed: {e}")))
}

fn verify_password(password: &str, phc: &str) -> bool {
    PasswordHash::new(phc)
        .map(|h| {
            Argon2::default()
                .verify_password(password.as_bytes(), &h)
                .is_ok()
        })
        .unwrap_or(false)
}

fn can_admin_team(state: &State, actor: &User, team: &Team) -> bool {
    actor.registry_admin
        || team.is_admin(actor.id)
        || state
            .spaces
            .get(&team.space_id)
            .is_some_and(|s| s.admin_user_ids.contains(&actor.id))
}

impl Registry {
    /// Creates an account. The first account of a registry becomes its
    /// administrator.
    pub fn create_user(&self, new: NewUser) -> Result<User, RegistryError> {
        let username = new.username.trim().to_string();
        if username.is_empty() {
            return Err(RegistryError::InvalidInput("username is required".into()));
        }
        let orcid = new
            .orcid
            .as_deref()
            .map(Orcid::parse)
            .transpose()
            .map_err(|e| RegistryError::InvalidInput(e.to_string()))?;
        let hash = new.password.as_deref().map(hash_password).transpose()?;

        let mut state = self.state.write();
        if state.users.values().any(|u| u.username == username) {
            return Err(RegistryError::Conflict(format!(
                "username `{username}` is taken"
            )));
        }
        for org in &new.organisation_ids {
            if !state.orgs.contains_key(org) {
                return Err(RegistryError::not_found("organisation", org));
            }
        }
        let mut counters = state.counters.clone();
        let id = UserId(Counters::bump(&mut counters.user));
        let user = User {
            id,
            display_name: if new.display_name.trim().is_empty() {
                username.clone()
            } else {
                new.display_name.trim().to_string()
            },
            username,
            orcid,
            organisation_ids: new.organisation_ids,
            memberships: Vec::new(),
            expertise_tags: new.expertise_tags,
            registry_admin: state.users.is_empty(),
        };
        let mut credentials = state.credentials.clone();
        if let Some(h) = hash {
            credentials.insert(id, h);
        }
        self.persist(KIND_USERS, id, &user)?;
        self.persist(super::KIND_META, "credentials", &credentials)?;
        self.persist_counters(&counters)?;
        state.counters = counters;
        state.credentials = credentials;
        state.users.insert(id, user.clone());
        Ok(user)
    }

    pub fn user(&self, id: UserId) -> Result<User, RegistryError> {
        self.read()
            .users
            .get(&id)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("user", id))
    }

    pub fn user_by_name(&self, username: &str) -> Option<User> {
        self.read()
            .users
            .values()
            .find(|u| u.username == username)
            .cloned()
    }

    pub fn users(&self) -> Vec<User> {
        self.read().users.values().cloned().collect()
    }

    /// Checks a password and issues a bearer token.
    pub fn authenticate(&self, username: &str, password: &str) -> Result<String, RegistryError> {
        let uid = {
            let state = self.read();
            let user = state
                .users
                .values()
                .find(|u| u.username == username)
                .ok_or(RegistryError::InvalidCredentials)?;
            let phc = state
                .credentials
                .get(&user.id)
                .ok_or(RegistryError::InvalidCredentials)?;
            if !verify_password(password, phc) {
                return Err(RegistryError::InvalidCredentials);
            }
            user.id
        };
        self.issue_token(uid)
    }

    /// Issues a token without a password check. For operators working on
    /// the store directly.
    pub fn issue_token(&self, user: UserId) -> Result<String, RegistryError> {
        let mut raw = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut raw);
        let token = hex::encode(raw);
        let mut state = self.state.write();
        if !state.users.contains_key(&user) {
            return Err(RegistryError::not_found("user", user));
        }
        let now = self.now();
        let ttl = Duration::seconds(self.config.token_ttl_secs as i64);
        let mut tokens = state.tokens.clone();
        tokens.retain(|_, r| r.expires_at > now);
        tokens.insert(
            sha256_hex(token.as_bytes()),
            TokenRecord {
                user_id: user,
                expires_at: now + ttl,
            },
        );
        self.persist(super::KIND_META, "tokens", &tokens)?;
        state.tokens = tokens;
        Ok(token)
    }

    /// The user a bearer token belongs to, if it is known and unexpired.
    pub fn user_for_token(&self, token: &str) -> Result<UserId, RegistryError> {
        let state = self.read();
        let rec = state
            .tokens
            .get(&sha256_hex(token.as_bytes()))
            .ok_or(RegistryError::InvalidCredentials)?;
        if rec.expires_at <= self.now() {
            return Err(RegistryError::InvalidCredentials);
        }
        Ok(rec.user_id)
    }

    pub fn revoke_token(&self, token: &str) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        let key = sha256_hex(token.as_bytes());
        if state.tokens.contains_key(&key) {
            let mut tokens = state.tokens.clone();
            tokens.remove(&key);
            self.persist(super::KIND_META, "tokens", &tokens)?;
            state.tokens = tokens;
        }
        Ok(())
    }

    pub fn create_organisation(
        &self,
        actor: Option<UserId>,
        name: &str,
        country: Option<String>,
    ) -> Result<Organisation, RegistryError> {
        let mut state = self.state.write();
        state.require_user(actor)?;
        if name.trim().is_empty() {
            return Err(RegistryError::InvalidInput(
                "organisation name is required".into(),
            ));
        }
        let mut counters = state.counters.clone();
        let id = OrgId(Counters::bump(&mut counters.org));
        let org = Organisation {
            id,
            name: name.trim().to_string(),
            country,
        };
        self.persist(KIND_ORGS, id, &org)?;
        self.persist_counters(&counters)?;
        state.counters = counters;
        state.orgs.insert(id, org.clone());
        Ok(org)
    }

    pub fn organisations(&self) -> Vec<Organisation> {
        self.read().orgs.values().cloned().collect()
    }

    /// Spaces are created on request by registry administrators. The
    /// creator becomes the space's first administrator.
    pub fn create_space(
        &self,
        actor: Option<UserId>,
        name: &str,
        description: &str,
    ) -> Result<Space, RegistryError> {
        let mut state = self.state.write();
        let user = state.require_user(actor)?;
        if !user.registry_admin {
            return Err(RegistryError::Forbidden(
                "spaces are created by registry administrators".into(),
            ));
        }
        let uid = user.id;
        if name.trim().is_empty() {
            return Err(RegistryError::InvalidInput("space name is required".into()));
        }
        if state.spaces.values().any(|s| s.name == name.trim()) {
            return Err(RegistryError::Conflict(format!("space `{name}` exists")));
        }
        let mut counters = state.counters.clone();
        let id = SpaceId(Counters::bump(&mut counters.space));
        let space = Space {
            id,
            name: name.trim().to_string(),
            description: description.to_string(),
            admin_user_ids: BTreeSet::from([uid]),
            is_default: false,
        };
        self.persist(KIND_SPACES, id, &space)?;
        self.persist_counters(&counters)?;
        state.counters = counters;
        state.spaces.insert(id, space.clone());
        Ok(space)
    }

    pub fn add_space_admin(
        &self,
        actor: Option<UserId>,
        space: SpaceId,
        user: UserId,
    ) -> Result<Space, RegistryError> {
        let mut state = self.state.write();
        let actor = state.require_user(actor)?;
        let mut s = state
            .spaces
            .get(&space)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("space", space))?;
        if !(actor.registry_admin || s.admin_user_ids.contains(&actor.id)) {
            return Err(RegistryError::Forbidden(
                "not an administrator of this space".into(),
            ));
        }
        if !state.users.contains_key(&user) {
            return Err(RegistryError::not_found("user", user));
        }
        s.admin_user_ids.insert(user);
        self.persist(KIND_SPACES, space, &s)?;
        state.spaces.insert(space, s.clone());
        Ok(s)
    }

    /// Deletes an empty space. The default space cannot be deleted.
    pub fn delete_space(&self, actor: Option<UserId>, space: SpaceId) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        let user = state.require_user(actor)?;
        let s = state
            .spaces
            .get(&space)
            .ok_or_else(|| RegistryError::not_found("space", space))?;
        if s.is_default {
            return Err(RegistryError::Forbidden(
                "the default space cannot be deleted".into(),
            ));
        }
        if !user.registry_admin {
            return Err(RegistryError::Forbidden(
                "spaces are deleted by registry administrators".into(),
            ));
        }
        if state.teams.values().any(|t| t.space_id == space) {
            return Err(RegistryError::Conflict("space still houses teams".into()));
        }
        self.unpersist(KIND_SPACES, space)?;
        state.spaces.remove(&space);
        Ok(())
    }

    pub fn space(&self, id: SpaceId) -> Result<Space, RegistryError> {
        self.read()
            .spaces
            .get(&id)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("space", id))
    }

    pub fn spaces(&self) -> Vec<Space> {
        self.read().spaces.values().cloned().collect()
    }

    pub fn default_space(&self) -> Space {
        self.read()
            .default_space()
            .cloned()
            .expect("a default space exists from the moment the registry opens")
    }

    /// Creates a team with the actor as its administrator. Anyone may open a
    /// team in the default space; other spaces require space administration.
    pub fn create_team(&self, actor: Option<UserId>, new: NewTeam) -> Result<Team, RegistryError> {
        let mut state = self.state.write();
        let user = state.require_user(actor)?.clone();
        let space_id = new
            .space_id
            .ok_or_else(|| RegistryError::InvalidInput("a team must belong to a space".into()))?;
        let space = state
            .spaces
            .get(&space_id)
            .ok_or_else(|| RegistryError::not_found("space", space_id))?;
        if !space.is_default && !user.registry_admin && !space.admin_user_ids.contains(&user.id) {
            return Err(RegistryError::Forbidden(format!(
                "only administrators of `{}` add teams to it",
                space.name
            )));
        }
        if new.name.trim().is_empty() {
            return Err(RegistryError::InvalidInput("team name is required".into()));
        }
        let mut counters = state.counters.clone();
        let id = TeamId(Counters::bump(&mut counters.team));
        let team = Team {
            id,
            name: new.name.trim().to_string(),
            space_id,
            description: new.description,
            members: vec![TeamMember {
                user_id: user.id,
                role: TeamRole::Admin,
            }],
            default_policy: new.default_policy.unwrap_or_default(),
            default_license: new
                .default_license
                .unwrap_or_else(|| DEFAULT_TEAM_LICENSE.to_string()),
        };
        let mut member = user;
        member.memberships.push(Membership {
            team_id: id,
            role: TeamRole::Admin,
            organisation_ids: member.organisation_ids.clone(),
        });
        self.persist(KIND_TEAMS, id, &team)?;
        self.persist(KIND_USERS, member.id, &member)?;
        self.persist_counters(&counters)?;
        state.counters = counters;
        state.teams.insert(id, team.clone());
        state.users.insert(member.id, member);
        Ok(team)
    }

    /// Adds `user` to a team, or changes their role if already a member.
    /// The membership carries the user's current affiliations.
    pub fn add_member(
        &self,
        actor: Option<UserId>,
        team: TeamId,
        user: UserId,
        role: TeamRole,
    ) -> Result<Team, RegistryError> {
        let mut state = self.state.write();
        let admin = state.require_user(actor)?;
        let mut t = state
            .teams
            .get(&team)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("team", team))?;
        if !can_admin_team(&state, admin, &t) {
            return Err(RegistryError::Forbidden(
                "not an administrator of this team".into(),
            ));
        }
        let mut u = state
            .users
            .get(&user)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("user", user))?;
        let demotes_last_admin =
            t.is_admin(user) && role == TeamRole::Member && t.admin_count() <= 1;
        if demotes_last_admin {
            return Err(RegistryError::Conflict(
                "a team keeps at least one admin".into(),
            ));
        }
        match t.members.iter_mut().find(|m| m.user_id == user) {
            Some(m) => m.role = role,
            None => t.members.push(TeamMember {
                user_id: user,
                role,
            }),
        }
        match u.memberships.iter_mut().find(|m| m.team_id == team) {
            Some(m) => m.role = role,
            None => u.memberships.push(Membership {
                team_id: team,
                role,
                organisation_ids: u.organisation_ids.clone(),
            }),
        }
        self.persist(KIND_TEAMS, team, &t)?;
        self.persist(KIND_USERS, user, &u)?;
        state.teams.insert(team, t.clone());
        state.users.insert(user, u);
        Ok(t)
    }

    /// Members may leave on their own; admins may remove anyone. The last
    /// admin stays.
    pub fn remove_member(
        &self,
        actor: Option<UserId>,
        team: TeamId,
        user: UserId,
    ) -> Result<Team, RegistryError> {
        let mut state = self.state.write();
        let admin = state.require_user(actor)?;
        let mut t = state
            .teams
            .get(&team)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("team", team))?;
        if admin.id != user && !can_admin_team(&state, admin, &t) {
            return Err(RegistryError::Forbidden(
                "not an administrator of this team".into(),
            ));
        }
        if !t.has_member(user) {
            return Err(RegistryError::not_found("team member", user));
        }
        if t.is_admin(user) && t.admin_count() <= 1 {
            return Err(RegistryError::Conflict(
                "a team keeps at least one admin".into(),
            ));
        }
        t.members.retain(|m| m.user_id != user);
        let mut u = state.users[&user].clone();
        u.memberships.retain(|m| m.team_id != team);
        self.persist(KIND_TEAMS, team, &t)?;
        self.persist(KIND_USERS, user, &u)?;
        state.teams.insert(team, t.clone());
        state.users.insert(user, u);
        Ok(t)
    }

    /// Changes the sharing and license applied to the team's new entries.
    pub fn update_team_defaults(
        &self,
        actor: Option<UserId>,
        team: TeamId,
        policy: Option<AccessPolicy>,
        license: Option<String>,
    ) -> Result<Team, RegistryError> {
        let mut state = self.state.write();
        let admin = state.require_user(actor)?;
        let mut t = state
            .teams
            .get(&team)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("team", team))?;
        if !can_admin_team(&state, admin, &t) {
            return Err(RegistryError::Forbidden(
                "not an administrator of this team".into(),
            ));
        }
        if let Some(p) = policy {
            t.default_policy = p;
        }
        if let Some(l) = license {
            t.default_license = l;
        }
        self.persist(KIND_TEAMS, team, &t)?;
        state.teams.insert(team, t.clone());
        Ok(t)
    }

    /// Deletes a team that owns nothing.
    pub fn delete_team(&self, actor: Option<UserId>, team: TeamId) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        let admin = state.require_user(actor)?;
        let t = state
            .teams
            .get(&team)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("team", team))?;
        if !can_admin_team(&state, admin, &t) {
            return Err(RegistryError::Forbidden(
                "not an administrator of this team".into(),
            ));
        }
        let owns = state.entries.values().any(|e| e.team_ids.contains(&team))
            || state.assets.values().any(|a| a.team_ids.contains(&team))
            || state
                .collections
                .values()
                .any(|c| c.curator_team_ids.contains(&team));
        if owns {
            return Err(RegistryError::Conflict("team still owns items".into()));
        }
        let mut users = Vec::new();
        for m in &t.members {
            if let Some(u) = state.users.get(&m.user_id) {
                let mut u = u.clone();
                u.memberships.retain(|ms| ms.team_id != team);
                self.persist(KIND_USERS, u.id, &u)?;
                users.push(u);
            }
        }
        self.unpersist(KIND_TEAMS, team)?;
        for u in users {
            state.users.insert(u.id, u);
        }
        state.teams.remove(&team);
        Ok(())
    }

    pub fn team(&self, id: TeamId) -> Result<Team, RegistryError> {
        self.read()
            .teams
            .get(&id)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("team", id))
    }

    pub fn team_by_name(&self, name: &str) -> Option<Team> {
        self.read().teams.values().find(|t| t.name == name).cloned()
    }

    pub fn teams(&self) -> Vec<Team> {
        self.read().teams.values().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn password_round_trip() {
        let h = hash_password("s3cret").unwrap();
        assert!(h.starts_with("$argon2"));
        assert!(verify_password("s3cret", &h));
        assert!(!verify_password("nope", &h));
        assert!(!verify_password("s3cret", "garbage"));
    }
}
