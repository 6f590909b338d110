//! The registry engine.
//!
//! All state lives behind one lock: reads run concurrently against committed
//! state, writes are serialized. Every write builds the new entity value
//! first, persists it, and only then swaps it into memory, so a failed
//! operation leaves nothing behind.

mod collections;
mod doi;
mod entries;
mod error;
mod events;
mod people;
mod register;
mod search;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Utc};
use parking_lot::{Mutex, RwLock, RwLockReadGuard};
use serde::{Deserialize, Serialize};

use crate::config::RegistryConfig;
use crate::model::{
    check_access, AccessDecision, Asset, AssetId, ClassRegistry, Collection, CollectionId,
    Directory, EntryId, OrgId, Organisation, Protected, Right, Space, SpaceId, Team, TeamId, User,
    UserId, ValidationContext, WorkflowClass, WorkflowEntry, DEFAULT_SPACE_NAME,
};

pub use collections::NewAsset;
pub use doi::{datacite_payload, MintClient, MockMintClient, DOI_PUBLISHER};
pub use entries::{ActivityKind, MetadataPatch};
pub use error::RegistryError;
pub use events::{Event, EventKind};
pub use people::{NewTeam, NewUser};
pub use register::{Registration, RegistrationRequest, RegistrationSource};
pub use search::{
    EmbargoStub, EntrySummary, Facet, SearchQuery, SearchResults, SortKey, SortOrder,
};

use store::FileStore;

/// Source of the current time. Tests substitute a controllable clock.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        ManualClock(Mutex::new(start))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock() = t;
    }

    pub fn advance(&self, d: chrono::Duration) {
        let mut t = self.0.lock();
        *t += d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub(crate) struct Counters {
    pub user: u64,
    pub org: u64,
    pub space: u64,
    pub team: u64,
    pub entry: u64,
    pub collection: u64,
    pub asset: u64,
    pub event: u64,
}

impl Counters {
    pub fn bump(slot: &mut u64) -> u64 {
        *slot += 1;
        *slot
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct TokenRecord {
    pub user_id: UserId,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Default)]
pub(crate) struct State {
    pub users: BTreeMap<UserId, User>,
    pub orgs: BTreeMap<OrgId, Organisation>,
    pub spaces: BTreeMap<SpaceId, Space>,
    pub teams: BTreeMap<TeamId, Team>,
    pub entries: BTreeMap<EntryId, WorkflowEntry>,
    pub collections: BTreeMap<CollectionId, Collection>,
    pub assets: BTreeMap<AssetId, Asset>,
    /// Password hashes in PHC string format.
    pub credentials: BTreeMap<UserId, String>,
    /// Keyed by the SHA-256 of the token.
    pub tokens: BTreeMap<String, TokenRecord>,
    pub subscriptions: BTreeSet<(UserId, EntryId)>,
    pub events: Vec<Event>,
    pub counters: Counters,
}

impl Directory for State {
    fn team(&self, id: TeamId) -> Option<&Team> {
        self.teams.get(&id)
    }

    fn space(&self, id: SpaceId) -> Option<&Space> {
        self.spaces.get(&id)
    }

    fn user(&self, id: UserId) -> Option<&User> {
        self.users.get(&id)
    }
}

impl State {
    pub fn default_space(&self) -> Option<&Space> {
        self.spaces.values().find(|s| s.is_default)
    }

    pub fn user_ref(&self, actor: Option<UserId>) -> Result<Option<&User>, RegistryError> {
        match actor {
            None => Ok(None),
            Some(id) => self
                .users
                .get(&id)
                .map(Some)
                .ok_or(RegistryError::InvalidCredentials),
        }
    }

    pub fn require_user(&self, actor: Option<UserId>) -> Result<&User, RegistryError> {
        self.user_ref(actor)?
            .ok_or(RegistryError::AuthenticationRequired)
    }

    pub fn decide(
        &self,
        actor: Option<&User>,
        resource: &impl Protected,
        right: Right,
        today: NaiveDate,
    ) -> AccessDecision {
        check_access(self, actor, resource, right, today)
    }

    pub fn entry(&self, id: EntryId) -> Result<&WorkflowEntry, RegistryError> {
        self.entries
            .get(&id)
            .ok_or_else(|| RegistryError::not_found("workflow", id))
    }
}

pub(crate) const KIND_USERS: &str = "users";
pub(crate) const KIND_ORGS: &str = "organisations";
pub(crate) const KIND_SPACES: &str = "spaces";
pub(crate) const KIND_TEAMS: &str = "teams";
pub(crate) const KIND_WORKFLOWS: &str = "workflows";
pub(crate) const KIND_COLLECTIONS: &str = "collections";
pub(crate) const KIND_ASSETS: &str = "assets";
const KIND_META: &str = "meta";

pub struct Registry {
    config: RegistryConfig,
    classes: RwLock<ClassRegistry>,
    state: RwLock<State>,
    store: Option<FileStore>,
    clock: Arc<dyn Clock>,
    minter: Arc<dyn MintClient>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("base_url", &self.config.base_url)
            .field("store", &self.store)
            .finish_non_exhaustive()
    }
}

impl Registry {
    /// Opens the registry described by `config`: file-backed when
    /// `store_dir` is set, in memory otherwise.
    pub fn open(config: RegistryConfig) -> Result<Self, RegistryError> {
        Self::with_parts(
            config,
            Arc::new(SystemClock),
            Arc::new(MockMintClient::default()),
        )
    }

    pub fn in_memory() -> Self {
        Self::open(RegistryConfig::default()).expect("in-memory registry cannot fail to open")
    }

    pub fn with_parts(
        config: RegistryConfig,
        clock: Arc<dyn Clock>,
        minter: Arc<dyn MintClient>,
    ) -> Result<Self, RegistryError> {
        let store = config
            .store_dir
            .as_deref()
            .map(FileStore::open)
            .transpose()?;
        let state = match &store {
            Some(s) => load_state(s)?,
            None => State::default(),
        };
        let reg = Registry {
            config,
            classes: RwLock::new(ClassRegistry::seeded()),
            state: RwLock::new(state),
            store,
            clock,
            minter,
        };
        reg.ensure_default_space()?;
        Ok(reg)
    }

    pub fn config(&self) -> &RegistryConfig {
        &self.config
    }

    pub fn base_url(&self) -> &str {
        self.config.base_url()
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn today(&self) -> NaiveDate {
        self.now().date_naive()
    }

    pub fn classes(&self) -> RwLockReadGuard<'_, ClassRegistry> {
        self.classes.read()
    }

    /// Adds a workflow class at runtime. Registry admins only.
    pub fn register_class(
        &self,
        actor: Option<UserId>,
        class: WorkflowClass,
    ) -> Result<(), RegistryError> {
        let state = self.state.read();
        let user = state.require_user(actor)?;
        if !user.registry_admin {
            return Err(RegistryError::Forbidden(
                "only registry admins add classes".into(),
            ));
        }
        self.classes.write().register(class)?;
        Ok(())
    }

    pub(crate) fn validation_context(&self) -> ValidationContext {
        ValidationContext {
            classes: self.classes.read().clone(),
            maturity_levels: self.config.maturity_levels.clone(),
        }
    }

    pub(crate) fn read(&self) -> RwLockReadGuard<'_, State> {
        self.state.read()
    }

    pub(crate) fn persist<T: Serialize>(
        &self,
        kind: &str,
        id: impl ToString,
        value: &T,
    ) -> Result<(), RegistryError> {
        match &self.store {
            Some(s) => s.save(kind, id, value),
            None => Ok(()),
        }
    }

    pub(crate) fn unpersist(&self, kind: &str, id: impl ToString) -> Result<(), RegistryError> {
        match &self.store {
            Some(s) => s.delete(kind, id),
            None => Ok(()),
        }
    }

    pub(crate) fn persist_entry(&self, entry: &WorkflowEntry) -> Result<(), RegistryError> {
        if let Some(s) = &self.store {
            for v in &entry.versions {
                s.save_blobs(&v.files)?;
            }
            s.save(KIND_WORKFLOWS, entry.id, entry)?;
        }
        Ok(())
    }

    pub(crate) fn persist_asset(&self, asset: &Asset) -> Result<(), RegistryError> {
        if let Some(s) = &self.store {
            if let crate::model::AssetContent::Stored { files } = &asset.content {
                s.save_blobs(files)?;
            }
            s.save(KIND_ASSETS, asset.id, asset)?;
        }
        Ok(())
    }

    pub(crate) fn persist_counters(&self, counters: &Counters) -> Result<(), RegistryError> {
        self.persist(KIND_META, "counters", counters)
    }

    pub(crate) fn persist_meta(&self, state: &State) -> Result<(), RegistryError> {
        if self.store.is_none() {
            return Ok(());
        }
        self.persist(KIND_META, "credentials", &state.credentials)?;
        self.persist(KIND_META, "tokens", &state.tokens)?;
        let subs: Vec<(UserId, EntryId)> = state.subscriptions.iter().copied().collect();
        self.persist(KIND_META, "subscriptions", &subs)
    }

    pub(crate) fn append_event(
        &self,
        state: &mut State,
        event: Event,
    ) -> Result<(), RegistryError> {
        if let Some(s) = &self.store {
            s.append_event(&event)?;
        }
        state.events.push(event);
        Ok(())
    }

    fn ensure_default_space(&self) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        if state.default_space().is_some() {
            return Ok(());
        }
        let mut counters = state.counters.clone();
        let id = SpaceId(Counters::bump(&mut counters.space));
        let space = Space {
            id,
            name: DEFAULT_SPACE_NAME.to_string(),
            description: "Home of teams that do not belong to a larger organisation.".into(),
            admin_user_ids: BTreeSet::new(),
            is_default: true,
        };
        self.persist(KIND_SPACES, id, &space)?;
        self.persist_counters(&counters)?;
        state.counters = counters;
        state.spaces.insert(id, space);
        Ok(())
    }
}

/// Turns an access decision into the error callers see. Anonymous callers
/// that may not even view a resource get `NotFound`, so private entries do
/// not leak their existence.
pub(crate) fn guard(
    state: &State,
    actor: Option<&User>,
    resource: &impl Protected,
    right: Right,
    today: NaiveDate,
    kind: &'static str,
    id: impl ToString,
) -> Result<(), RegistryError> {
    let d = state.decide(actor, resource, right, today);
    if d.allowed {
        return Ok(());
    }
    if actor.is_none() {
        let can_view = state.decide(None, resource, Right::View, today).allowed;
        return Err(if can_view {
            RegistryError::AuthenticationRequired
        } else {
            RegistryError::not_found(kind, id)
        });
    }
    Err(RegistryError::AccessDenied {
        right,
        reason: d.reason,
    })
}

impl Registry {
    pub(crate) fn ensure(
        &self,
        state: &State,
        actor: Option<&User>,
        entry: &WorkflowEntry,
        right: Right,
    ) -> Result<(), RegistryError> {
        guard(
            state,
            actor,
            entry,
            right,
            self.today(),
            "workflow",
            entry.id,
        )
    }
}

fn load_state(store: &FileStore) -> Result<State, RegistryError> {
    let mut state = State::default();
    for u in store.load_all::<User>(KIND_USERS)? {
        state.users.insert(u.id, u);
    }
    for o in store.load_all::<Organisation>(KIND_ORGS)? {
        state.orgs.insert(o.id, o);
    }
    for s in store.load_all::<Space>(KIND_SPACES)? {
        state.spaces.insert(s.id, s);
    }
    for t in store.load_all::<Team>(KIND_TEAMS)? {
        state.teams.insert(t.id, t);
    }
    for mut e in store.load_all::<WorkflowEntry>(KIND_WORKFLOWS)? {
        for v in &mut e.versions {
            store.hydrate(&mut v.files)?;
        }
        state.entries.insert(e.id, e);
    }
    for c in store.load_all::<Collection>(KIND_COLLECTIONS)? {
        state.collections.insert(c.id, c);
    }
    for mut a in store.load_all::<Asset>(KIND_ASSETS)? {
        if let crate::model::AssetContent::Stored { files } = &mut a.content {
            store.hydrate(files)?;
        }
        state.assets.insert(a.id, a);
    }
    state.credentials = store
        .load_one(KIND_META, "credentials")?
        .unwrap_or_default();
    state.tokens = store.load_one(KIND_META, "tokens")?.unwrap_or_default();
    let subs: Vec<(UserId, EntryId)> = store
        .load_one(KIND_META, "subscriptions")?
        .unwrap_or_default();
    state.subscriptions = subs.into_iter().collect();
    state.counters = store.load_one(KIND_META, "counters")?.unwrap_or_default();
    state.events = store.load_events()?;
    Ok(state)
}
