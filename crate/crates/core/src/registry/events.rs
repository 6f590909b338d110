use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Registry, RegistryError};
use crate::model::{EntryId, Right, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    NewVersion,
    MetadataChanged,
    DoiMinted,
    /// Someone asked to contact the creators.
    ContactRequest,
}

/// One entry of the append-only event outbox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub entry_id: EntryId,
    pub kind: EventKind,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub payload: serde_json::Value,
}

impl Registry {
    /// Subscribing twice is a no-op.
    pub fn subscribe(&self, actor: Option<UserId>, entry: EntryId) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        let user = state.require_user(actor)?.clone();
        let e = state.entry(entry)?;
        self.ensure(&state, Some(&user), e, Right::View)?;
        if state.subscriptions.contains(&(user.id, entry)) {
            return Ok(());
        }
        state.subscriptions.insert((user.id, entry));
        if let Err(err) = self.persist_meta(&state) {
            state.subscriptions.remove(&(user.id, entry));
            return Err(err);
        }
        Ok(())
    }

    pub fn unsubscribe(&self, actor: Option<UserId>, entry: EntryId) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        let uid = state.require_user(actor)?.id;
        if state.subscriptions.remove(&(uid, entry)) {
            if let Err(err) = self.persist_meta(&state) {
                state.subscriptions.insert((uid, entry));
                return Err(err);
            }
        }
        Ok(())
    }

    pub fn subscriptions(&self, actor: Option<UserId>) -> Result<Vec<EntryId>, RegistryError> {
        let state = self.read();
        let uid = state.require_user(actor)?.id;
        Ok(state
            .subscriptions
            .iter()
            .filter(|(u, _)| *u == uid)
            .map(|(_, e)| *e)
            .collect())
    }

    /// Events on subscribed entries the actor may still view, newest first.
    /// Contact requests also reach the entry's submitter.
    pub fn notifications(&self, actor: Option<UserId>) -> Result<Vec<Event>, RegistryError> {
        let state = self.read();
        let user = state.require_user(actor)?;
        let today = self.today();
        let mut out: Vec<Event> = state
            .events
            .iter()
            .filter(|ev| {
                state.subscriptions.contains(&(user.id, ev.entry_id))
                    || (ev.kind == EventKind::ContactRequest
                        && state
                            .entries
                            .get(&ev.entry_id)
                            .is_some_and(|e| e.submitter == user.id))
            })
            .filter(|ev| {
                state
                    .entries
                    .get(&ev.entry_id)
                    .is_some_and(|e| state.decide(Some(user), e, Right::View, today).allowed)
            })
            .cloned()
            .collect();
        out.sort_by_key(|e| std::cmp::Reverse((e.timestamp, e.seq)));
        Ok(out)
    }

    /// Every event recorded for one entry, oldest first.
    pub fn entry_events(&self, entry: EntryId) -> Vec<Event> {
        self.read()
            .events
            .iter()
            .filter(|e| e.entry_id == entry)
            .cloned()
            .collect()
    }

    /// Records a request to contact the creators of an entry. Delivery is
    /// in-registry only: the request shows up as a notification.
    pub fn request_contact(
        &self,
        actor: Option<UserId>,
        entry: EntryId,
        message: &str,
    ) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        let user = state.require_user(actor)?.clone();
        let e = state.entry(entry)?;
        self.ensure(&state, Some(&user), e, Right::View)?;
        let payload = serde_json::json!({"from": user.id, "message": message});
        self.emit(&mut state, entry, EventKind::ContactRequest, payload)
    }

    pub(crate) fn emit(
        &self,
        state: &mut super::State,
        entry_id: EntryId,
        kind: EventKind,
        payload: serde_json::Value,
    ) -> Result<(), RegistryError> {
        let seq = state.counters.event + 1;
        let event = Event {
            seq,
            entry_id,
            kind,
            timestamp: self.now(),
            payload,
        };
        let mut counters = state.counters.clone();
        counters.event = seq;
        self.persist_counters(&counters)?;
        self.append_event(state, event)?;
        state.counters = counters;
        Ok(())
    }
}
