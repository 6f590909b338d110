//! Faceted search over the entries an actor may view.
//!
//! Text matching folds case and splits on anything that is not a letter or
//! digit; every query token must appear among the entry's tokens. Within a
//! facet, selected values are alternatives; across facets they must all
//! hold. The counts for a facet ignore that facet's own selection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::{Registry, RegistryError, State};
use crate::model::{EntryId, Right, TeamId, UserId, Visibility, WorkflowEntry};

pub const MAX_PAGE_SIZE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    Class,
    Tag,
    Creator,
    Team,
    Space,
    Organisation,
    Maturity,
    EdamTopic,
    EdamOperation,
    Tool,
}

impl Facet {
    pub const ALL: [Facet; 10] = [
        Facet::Class,
        Facet::Tag,
        Facet::Creator,
        Facet::Team,
        Facet::Space,
        Facet::Organisation,
        Facet::Maturity,
        Facet::EdamTopic,
        Facet::EdamOperation,
        Facet::Tool,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Facet::Class => "class",
            Facet::Tag => "tag",
            Facet::Creator => "creator",
            Facet::Team => "team",
            Facet::Space => "space",
            Facet::Organisation => "organisation",
            Facet::Maturity => "maturity",
            Facet::EdamTopic => "edam_topic",
            Facet::EdamOperation => "edam_operation",
            Facet::Tool => "tool",
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Facet {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Facet::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| RegistryError::BadQuery(format!("unknown facet `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    #[default]
    Title,
    Created,
    Updated,
    Views,
    Downloads,
}

impl FromStr for SortKey {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "title" => SortKey::Title,
            "created" => SortKey::Created,
            "updated" => SortKey::Updated,
            "views" => SortKey::Views,
            "downloads" => SortKey::Downloads,
            other => {
                return Err(RegistryError::BadQuery(format!(
                    "unknown sort key `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    #[default]
    Asc,
    Desc,
}

impl FromStr for SortOrder {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asc" => Ok(SortOrder::Asc),
            "desc" => Ok(SortOrder::Desc),
            other => Err(RegistryError::BadQuery(format!(
                "unknown sort order `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub filters: BTreeMap<Facet, BTreeSet<String>>,
    #[serde(default)]
    pub sort: SortKey,
    #[serde(default)]
    pub order: SortOrder,
    /// 1-based.
    #[serde(default = "one")]
    pub page: usize,
    #[serde(default = "default_page_size")]
    pub page_size: usize,
}

fn one() -> usize {
    1
}

fn default_page_size() -> usize {
    20
}

impl Default for SearchQuery {
    fn default() -> Self {
        SearchQuery {
            text: None,
            filters: BTreeMap::new(),
            sort: SortKey::default(),
            order: SortOrder::default(),
            page: 1,
            page_size: default_page_size(),
        }
    }
}

impl SearchQuery {
    pub fn text(t: impl Into<String>) -> Self {
        SearchQuery {
            text: Some(t.into()),
            ..SearchQuery::default()
        }
    }

    pub fn filter(mut self, facet: Facet, value: impl Into<String>) -> Self {
        self.filters.entry(facet).or_default().insert(value.into());
        self
    }

    pub fn sorted(mut self, key: SortKey, order: SortOrder) -> Self {
        self.sort = key;
        self.order = order;
        self
    }

    pub fn paged(mut self, page: usize, page_size: usize) -> Self {
        self.page = page;
        self.page_size = page_size;
        self
    }

    pub fn check(&self) -> Result<(), RegistryError> {
        if !(1..=MAX_PAGE_SIZE).contains(&self.page_size) {
            return Err(RegistryError::BadQuery(format!(
                "page_size must be between 1 and {MAX_PAGE_SIZE}"
            )));
        }
        if self.page == 0 {
            return Err(RegistryError::BadQuery("pages are numbered from 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntrySummary {
    pub id: EntryId,
    pub title: String,
    pub workflow_class: String,
    pub description: String,
    pub maturity: String,
    pub tags: Vec<String>,
    pub creators: Vec<String>,
    pub team_ids: Vec<TeamId>,
    pub latest_version: u32,
    pub views: u64,
    pub downloads: u64,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl EntrySummary {
    pub fn of(e: &WorkflowEntry) -> Self {
        EntrySummary {
            id: e.id,
            title: e.title.clone(),
            workflow_class: e.workflow_class.to_string(),
            description: e.description.clone(),
            maturity: e.maturity.to_string(),
            tags: e.tags.clone(),
            creators: e.creators.iter().map(|c| c.name.clone()).collect(),
            team_ids: e.team_ids.iter().copied().collect(),
            latest_version: e.latest_version().map_or(0, |v| v.version),
            views: e.metrics.views,
            downloads: e.metrics.downloads,
            created_at: e.created_at,
            updated_at: e.updated_at,
        }
    }
}

/// An embargoed entry listed without its content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbargoStub {
    pub id: EntryId,
    pub title: String,
    pub until: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResults {
    pub hits: Vec<EntrySummary>,
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub facet_counts: BTreeMap<Facet, BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embargoed: Vec<EmbargoStub>,
}

pub(crate) fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn text_matches(e: &WorkflowEntry, query: &[String]) -> bool {
    if query.is_empty() {
        return true;
    }
    let mut have: BTreeSet<String> = tokens(&e.title).chain(tokens(&e.description)).collect();
    for t in &e.tags {
        have.extend(tokens(t));
    }
    for c in &e.creators {
        have.extend(tokens(&c.name));
    }
    query.iter().all(|q| have.contains(q))
}

/// The distinct values an entry contributes to a facet.
pub(crate) fn facet_values(state: &State, e: &WorkflowEntry, facet: Facet) -> BTreeSet<String> {
    let teams = || e.team_ids.iter().filter_map(|t| state.teams.get(t));
    match facet {
        Facet::Class => BTreeSet::from([e.workflow_class.to_string()]),
        Facet::Tag => e.tags.iter().cloned().collect(),
        Facet::Creator => e.creators.iter().map(|c| c.name.clone()).collect(),
        Facet::Team => teams().map(|t| t.name.clone()).collect(),
        Facet::Space => teams()
            .filter_map(|t| state.spaces.get(&t.space_id))
            .map(|s| s.name.clone())
            .collect(),
        Facet::Organisation => teams()
            .flat_map(|t| t.members.iter().map(move |m| (t.id, m.user_id)))
            .filter_map(|(tid, uid)| state.users.get(&uid)?.membership(tid))
            .flat_map(|ms| ms.organisation_ids.iter())
            .filter_map(|o| state.orgs.get(o))
            .map(|o| o.name.clone())
            .collect(),
        Facet::Maturity => BTreeSet::from([e.maturity.to_string()]),
        Facet::EdamTopic => e.edam_topics.iter().cloned().collect(),
        Facet::EdamOperation => e.edam_operations.iter().cloned().collect(),
        Facet::Tool => e
            .tool_refs
            .iter()
            .map(|t| {
                t.biotools_id
                    .clone()
                    .unwrap_or_else(|| t.display_name.clone())
            })
            .collect(),
    }
}

fn passes(
    state: &State,
    e: &WorkflowEntry,
    filters: &BTreeMap<Facet, BTreeSet<String>>,
    skip: Option<Facet>,
) -> bool {
    filters.iter().all(|(facet, wanted)| {
        Some(*facet) == skip
            || wanted.is_empty()
            || !facet_values(state, e, *facet).is_disjoint(wanted)
    })
}

fn compare(
    a: &WorkflowEntry,
    b: &WorkflowEntry,
    key: SortKey,
    order: SortOrder,
) -> std::cmp::Ordering {
    let primary = match key {
        SortKey::Title => a.title.to_lowercase().cmp(&b.title.to_lowercase()),
        SortKey::Created => a.created_at.cmp(&b.created_at),
        SortKey::Updated => a.updated_at.cmp(&b.updated_at),
        SortKey::Views => a.metrics.views.cmp(&b.metrics.views),
        SortKey::Downloads => a.metrics.downloads.cmp(&b.metrics.downloads),
    };
    let primary = match order {
        SortOrder::Asc => primary,
        SortOrder::Desc => primary.reverse(),
    };
    primary.then(a.id.cmp(&b.id))
}

impl Registry {
    pub fn search(
        &self,
        actor: Option<UserId>,
        query: &SearchQuery,
    ) -> Result<SearchResults, RegistryError> {
        query.check()?;
        let state = self.read();
        let user = state.user_ref(actor)?;
        let today = self.today();
        let words: Vec<String> = query
            .text
            .as_deref()
            .map(|t| tokens(t).collect())
            .unwrap_or_default();

        let mut stubs = Vec::new();
        let base: Vec<&WorkflowEntry> = state
            .entries
            .values()
            .filter(|e| text_matches(e, &words))
            .filter(|e| {
                if state.decide(user, *e, Right::View, today).allowed {
                    return true;
                }
                if let Visibility::Embargoed { until } = e.policy.visibility {
                    if !self.config.embargo_hides_listing && passes(&state, e, &query.filters, None)
                    {
                        stubs.push(EmbargoStub {
                            id: e.id,
                            title: e.title.clone(),
                            until,
                        });
                    }
                }
                false
            })
            .collect();

        let mut facet_counts = BTreeMap::new();
        for facet in Facet::ALL {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for e in base
                .iter()
                .filter(|e| passes(&state, e, &query.filters, Some(facet)))
            {
                for v in facet_values(&state, e, facet) {
                    *counts.entry(v).or_default() += 1;
                }
            }
            facet_counts.insert(facet, counts);
        }

        let mut hits: Vec<&WorkflowEntry> = base
            .into_iter()
            .filter(|e| passes(&state, e, &query.filters, None))
            .collect();
        hits.sort_by(|a, b| compare(a, b, query.sort, query.order));
        let total = hits.len();
        let hits = hits
            .into_iter()
            .skip((query.page - 1).saturating_mul(query.page_size))
            .take(query.page_size)
            .map(EntrySummary::of)
            .collect();
        Ok(SearchResults {
            hits,
            total,
            page: query.page,
            page_size: query.page_size,
            facet_counts,
            embargoed: stubs,
        })
    }

    /// Every entry the actor may view, in id order.
    pub fn visible_entries(
        &self,
        actor: Option<UserId>,
    ) -> Result<Vec<WorkflowEntry>, RegistryError> {
        let state = self.read();
        let user = state.user_ref(actor)?;
        let today = self.today();
        Ok(state
            .entries
            .values()
            .filter(|e| state.decide(user, *e, Right::View, today).allowed)
            .cloned()
            .collect())
    }

    /// The facet values of one entry, as search sees them.
    pub fn entry_facets(
        &self,
        id: EntryId,
    ) -> Result<BTreeMap<Facet, BTreeSet<String>>, RegistryError> {
        let state = self.read();
        let e = state.entry(id)?;
        Ok(Facet::ALL
            .into_iter()
            .map(|f| (f, facet_values(&state, e, f)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizing() {
        let t: Vec<String> = tokens("COVID-19 variant_calling, RNA").collect();
        assert_eq!(t, ["covid", "19", "variant", "calling", "rna"]);
    }

    #[test]
    fn facet_names_round_trip() {
        for f in Facet::ALL {
            assert_eq!(f.as_str().parse::<Facet>().unwrap(), f);
            assert_eq!(serde_json::to_value(f).unwrap(), f.as_str());
        }
        assert!(matches!(
            "colour".parse::<Facet>(),
            Err(RegistryError::BadQuery(_))
        ));
    }

    #[test]
    fn page_size_bounds() {
        assert!(SearchQuery::default().paged(1, 0).check().is_err());
        assert!(SearchQuery::default().paged(1, 101).check().is_err());
        assert!(SearchQuery::default().paged(0, 10).check().is_err());
        assert!(SearchQuery::default().paged(3, 100).check().is_ok());
    }
}
