//! Curated collections and the non-workflow assets they may hold.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{guard, Counters, Registry, RegistryError, State, KIND_COLLECTIONS};
use crate::model::{
    AccessPolicy, Asset, AssetContent, AssetId, Collection, CollectionId, CollectionItem, EntryId,
    ItemKind, ItemTarget, Right, Subject, TeamId, User, UserId,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewAsset {
    pub kind: ItemKind,
    pub title: String,
    pub content: AssetContent,
    pub team_ids: BTreeSet<TeamId>,
    #[serde(default)]
    pub policy: Option<AccessPolicy>,
}

fn curates(actor: &User, c: &Collection) -> bool {
    actor.registry_admin || c.curator_team_ids.iter().any(|t| actor.is_member_of(*t))
}

impl Registry {
    pub fn create_collection(
        &self,
        actor: Option<UserId>,
        title: &str,
        description: &str,
        curator_team_ids: BTreeSet<TeamId>,
    ) -> Result<Collection, RegistryError> {
        let mut state = self.state.write();
        let user = state.require_user(actor)?;
        if title.trim().is_empty() {
            return Err(RegistryError::InvalidInput(
                "collection title is required".into(),
            ));
        }
        if curator_team_ids.is_empty() {
            return Err(RegistryError::InvalidInput(
                "a collection needs a curator team".into(),
            ));
        }
        for t in &curator_team_ids {
            if !state.teams.contains_key(t) {
                return Err(RegistryError::not_found("team", t));
            }
        }
        if !user.registry_admin && !curator_team_ids.iter().any(|t| user.is_member_of(*t)) {
            return Err(RegistryError::Forbidden(
                "curators must include one of your teams".into(),
            ));
        }
        let mut counters = state.counters.clone();
        let id = CollectionId(Counters::bump(&mut counters.collection));
        let c = Collection {
            id,
            title: title.trim().to_string(),
            description: description.to_string(),
            curator_team_ids,
            items: Vec::new(),
        };
        self.persist(KIND_COLLECTIONS, id, &c)?;
        self.persist_counters(&counters)?;
        state.counters = counters;
        state.collections.insert(id, c.clone());
        Ok(c)
    }

    fn curated(
        &self,
        state: &State,
        actor: Option<UserId>,
        id: CollectionId,
    ) -> Result<Collection, RegistryError> {
        let user = state.require_user(actor)?;
        let c = state
            .collections
            .get(&id)
            .ok_or_else(|| RegistryError::not_found("collection", id))?;
        if !curates(user, c) {
            return Err(RegistryError::Forbidden(
                "not a curator of this collection".into(),
            ));
        }
        Ok(c.clone())
    }

    pub fn add_collection_item(
        &self,
        actor: Option<UserId>,
        id: CollectionId,
        item: CollectionItem,
    ) -> Result<Collection, RegistryError> {
        let mut state = self.state.write();
        let mut c = self.curated(&state, actor, id)?;
        if c.contains(&item) {
            return Err(RegistryError::DuplicateItem);
        }
        let user = state.require_user(actor)?;
        let today = self.today();
        match (item.kind, &item.target) {
            (ItemKind::Workflow, ItemTarget::Id(n)) => {
                let e = state.entry(EntryId(*n))?;
                guard(&state, Some(user), e, Right::View, today, "workflow", n)?;
            }
            (ItemKind::Workflow, ItemTarget::Url(_)) => {
                return Err(RegistryError::InvalidInput(
                    "workflow items refer to registered entries".into(),
                ));
            }
            (kind, ItemTarget::Id(n)) => {
                let a = state
                    .assets
                    .get(&AssetId(*n))
                    .ok_or_else(|| RegistryError::not_found("asset", n))?;
                if a.kind != kind {
                    return Err(RegistryError::InvalidInput(format!(
                        "asset {n} is not a {kind:?}"
                    )));
                }
                guard(&state, Some(user), a, Right::View, today, "asset", n)?;
            }
            (_, ItemTarget::Url(u)) if u.trim().is_empty() => {
                return Err(RegistryError::InvalidInput("empty item URL".into()));
            }
            _ => {}
        }
        c.items.push(item);
        self.persist(KIND_COLLECTIONS, id, &c)?;
        state.collections.insert(id, c.clone());
        Ok(c)
    }

    pub fn remove_collection_item(
        &self,
        actor: Option<UserId>,
        id: CollectionId,
        item: &CollectionItem,
    ) -> Result<Collection, RegistryError> {
        let mut state = self.state.write();
        let mut c = self.curated(&state, actor, id)?;
        let before = c.items.len();
        c.items.retain(|i| i != item);
        if c.items.len() == before {
            return Err(RegistryError::not_found(
                "collection item",
                format!("{item:?}"),
            ));
        }
        self.persist(KIND_COLLECTIONS, id, &c)?;
        state.collections.insert(id, c.clone());
        Ok(c)
    }

    /// Deletes the collection only; its items are untouched.
    pub fn delete_collection(
        &self,
        actor: Option<UserId>,
        id: CollectionId,
    ) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        self.curated(&state, actor, id)?;
        self.unpersist(KIND_COLLECTIONS, id)?;
        state.collections.remove(&id);
        Ok(())
    }

    pub fn collection(&self, id: CollectionId) -> Result<Collection, RegistryError> {
        self.read()
            .collections
            .get(&id)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("collection", id))
    }

    pub fn collections(&self) -> Vec<Collection> {
        self.read().collections.values().cloned().collect()
    }

    /// Collections listing an entry: the entry page's back-references.
    pub fn collections_containing(&self, entry: EntryId) -> Vec<CollectionId> {
        self.read()
            .collections
            .values()
            .filter(|c| c.items.iter().any(|i| i.entry_id() == Some(entry)))
            .map(|c| c.id)
            .collect()
    }

    pub fn create_asset(
        &self,
        actor: Option<UserId>,
        new: NewAsset,
    ) -> Result<Asset, RegistryError> {
        if new.kind == ItemKind::Workflow {
            return Err(RegistryError::InvalidInput(
                "workflows are registered, not created as assets".into(),
            ));
        }
        if new.title.trim().is_empty() {
            return Err(RegistryError::InvalidInput(
                "asset title is required".into(),
            ));
        }
        let mut state = self.state.write();
        let user = state.require_user(actor)?.clone();
        if new.team_ids.is_empty() {
            return Err(RegistryError::InvalidInput(
                "an asset needs an owning team".into(),
            ));
        }
        for t in &new.team_ids {
            if !state.teams.contains_key(t) {
                return Err(RegistryError::not_found("team", t));
            }
        }
        if !new.team_ids.iter().any(|t| user.is_member_of(*t)) {
            return Err(RegistryError::Forbidden(
                "the submitter must belong to one of the owning teams".into(),
            ));
        }
        let mut policy = match new.policy {
            Some(p) => p,
            None => new
                .team_ids
                .iter()
                .next()
                .and_then(|t| state.teams.get(t))
                .map(|t| t.default_policy.clone())
                .unwrap_or_default(),
        };
        for t in &new.team_ids {
            policy.add_grant(Subject::Team(*t), Right::Edit);
        }
        policy.add_grant(Subject::User(user.id), Right::Manage);

        let mut counters = state.counters.clone();
        let id = AssetId(Counters::bump(&mut counters.asset));
        let asset = Asset {
            id,
            kind: new.kind,
            title: new.title.trim().to_string(),
            content: new.content,
            team_ids: new.team_ids,
            policy,
        };
        self.persist_asset(&asset)?;
        self.persist_counters(&counters)?;
        state.counters = counters;
        state.assets.insert(id, asset.clone());
        Ok(asset)
    }

    pub fn get_asset(&self, actor: Option<UserId>, id: AssetId) -> Result<Asset, RegistryError> {
        let state = self.read();
        let user = state.user_ref(actor)?;
        let a = state
            .assets
            .get(&id)
            .ok_or_else(|| RegistryError::not_found("asset", id))?;
        guard(&state, user, a, Right::View, self.today(), "asset", id)?;
        Ok(a.clone())
    }

    pub fn delete_asset(&self, actor: Option<UserId>, id: AssetId) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        let user = state.user_ref(actor)?.cloned();
        let a = state
            .assets
            .get(&id)
            .ok_or_else(|| RegistryError::not_found("asset", id))?;
        guard(
            &state,
            user.as_ref(),
            a,
            Right::Manage,
            self.today(),
            "asset",
            id,
        )?;
        let kind = a.kind;
        let mut touched = Vec::new();
        for c in state.collections.values() {
            let item = CollectionItem {
                kind,
                target: ItemTarget::Id(id.0),
            };
            if c.contains(&item) {
                let mut c = c.clone();
                c.items.retain(|i| *i != item);
                touched.push(c);
            }
        }
        for c in &touched {
            self.persist(KIND_COLLECTIONS, c.id, c)?;
        }
        self.unpersist(super::KIND_ASSETS, id)?;
        for c in touched {
            state.collections.insert(c.id, c);
        }
        state.assets.remove(&id);
        Ok(())
    }
}
