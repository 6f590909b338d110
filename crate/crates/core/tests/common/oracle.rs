//! Independent oracles: expected rights, text matching, facet values and
//! ORCID check digits, written without calling the code they check.

use std::collections::{BTreeMap, BTreeSet};

use flowhub_core::model::{EntryId, Orcid, Right, UserId, WorkflowEntry};
use flowhub_core::registry::{Facet, SearchQuery};
use flowhub_core::Registry;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use super::WORDS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Role {
    Anonymous,
    Outsider,
    TeamMember,
    Submitter,
    SpaceAdmin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Vis {
    Public,
    Registered,
    EmbargoActive,
    EmbargoLifted,
    Private,
}

/// What each role should be able to do.
pub fn expected(role: Role, vis: Vis, right: Right) -> bool {
    let readable = |r: Right| r == Right::View || r == Right::Download;
    match role {
        Role::SpaceAdmin | Role::Submitter => true,
        Role::TeamMember => right != Right::Manage,
        Role::Outsider => {
            readable(right) && matches!(vis, Vis::Public | Vis::Registered | Vis::EmbargoLifted)
        }
        Role::Anonymous => readable(right) && matches!(vis, Vis::Public | Vis::EmbargoLifted),
    }
}

pub fn words(s: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.insert(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.insert(cur);
    }
    out
}

pub fn oracle_text(e: &WorkflowEntry, q: &str) -> bool {
    let mut have = words(&e.title);
    have.extend(words(&e.description));
    for t in &e.tags {
        have.extend(words(t));
    }
    for c in &e.creators {
        have.extend(words(&c.name));
    }
    words(q).iter().all(|w| have.contains(w))
}

/// Facet values recomputed from public lookups only.
pub fn oracle_values(reg: &Registry, e: &WorkflowEntry, facet: Facet) -> BTreeSet<String> {
    let teams: Vec<_> = e.team_ids.iter().map(|t| reg.team(*t).unwrap()).collect();
    match facet {
        Facet::Class => [e.workflow_class.to_string()].into(),
        Facet::Tag => e.tags.iter().cloned().collect(),
        Facet::Creator => e.creators.iter().map(|c| c.name.clone()).collect(),
        Facet::Team => teams.iter().map(|t| t.name.clone()).collect(),
        Facet::Space => teams
            .iter()
            .map(|t| reg.space(t.space_id).unwrap().name)
            .collect(),
        Facet::Organisation => {
            let orgs: BTreeMap<_, _> = reg
                .organisations()
                .into_iter()
                .map(|o| (o.id, o.name))
                .collect();
            let mut out = BTreeSet::new();
            for t in &teams {
                for m in &t.members {
                    let u = reg.user(m.user_id).unwrap();
                    if let Some(ms) = u.memberships.iter().find(|ms| ms.team_id == t.id) {
                        out.extend(ms.organisation_ids.iter().map(|o| orgs[o].clone()));
                    }
                }
            }
            out
        }
        Facet::Maturity => [e.maturity.as_str().to_string()].into(),
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

pub fn viewable(reg: &Registry, actor: Option<UserId>, ids: &[EntryId]) -> Vec<WorkflowEntry> {
    ids.iter()
        .filter(|id| reg.rights(actor, **id).unwrap().contains(&Right::View))
        .map(|id| reg.get_entry(actor, *id).unwrap())
        .collect()
}

pub fn random_query(rng: &mut StdRng, reg: &Registry, pool: &[WorkflowEntry]) -> SearchQuery {
    let mut q = if rng.gen_bool(0.4) {
        SearchQuery::text(*WORDS.choose(rng).unwrap())
    } else {
        SearchQuery::default()
    };
    for _ in 0..rng.gen_range(0..3) {
        let facet = *Facet::ALL.choose(rng).unwrap();
        let Some(e) = pool.choose(rng) else { break };
        let values: Vec<_> = oracle_values(reg, e, facet).into_iter().collect();
        if let Some(v) = values.choose(rng) {
            q = q.filter(facet, v.clone());
        }
    }
    q.page_size = 100;
    q
}

/// Brute-force totals, hits and per-facet counts for `q` over `pool`,
/// compared with what the registry returned. Returns the first mismatch.
pub fn check_search(
    reg: &Registry,
    pool: &[WorkflowEntry],
    q: &SearchQuery,
    res: &flowhub_core::registry::SearchResults,
) -> Result<(), String> {
    let text_ok: Vec<&WorkflowEntry> = pool
        .iter()
        .filter(|e| q.text.as_deref().is_none_or(|t| oracle_text(e, t)))
        .collect();
    let passes = |e: &WorkflowEntry, skip: Option<Facet>| {
        q.filters
            .iter()
            .all(|(f, wanted)| Some(*f) == skip || !oracle_values(reg, e, *f).is_disjoint(wanted))
    };
    let hits: BTreeSet<_> = text_ok
        .iter()
        .filter(|e| passes(e, None))
        .map(|e| e.id)
        .collect();
    if res.total != hits.len() {
        return Err(format!(
            "total {} but oracle counts {} for {q:?}",
            res.total,
            hits.len()
        ));
    }
    let got: BTreeSet<_> = res.hits.iter().map(|h| h.id).collect();
    if got != hits {
        return Err(format!("hits {got:?} but oracle finds {hits:?} for {q:?}"));
    }
    for facet in Facet::ALL {
        let mut want: BTreeMap<String, usize> = BTreeMap::new();
        for e in text_ok.iter().filter(|e| passes(e, Some(facet))) {
            for v in oracle_values(reg, e, facet) {
                *want.entry(v).or_default() += 1;
            }
        }
        let have = res.facet_counts.get(&facet).cloned().unwrap_or_default();
        if have != want {
            return Err(format!(
                "facet {facet:?}: {have:?} but oracle counts {want:?} for {q:?}"
            ));
        }
    }
    Ok(())
}

/// ISO 7064 MOD 11-2, the ORCID check character.
pub fn orcid_check(digits: &str) -> char {
    let mut total = 0u32;
    for d in digits.chars() {
        total = (total + d.to_digit(10).unwrap()) * 2;
    }
    match (12 - total % 11) % 11 {
        10 => 'X',
        n => char::from_digit(n, 10).unwrap(),
    }
}

pub fn orcid_from(n: u64) -> Orcid {
    let digits = format!("{:015}", n % 1_000_000_000_000_000);
    let check = orcid_check(&digits);
    let raw = format!(
        "{}-{}-{}-{}{}",
        &digits[0..4],
        &digits[4..8],
        &digits[8..12],
        &digits[12..15],
        check
    );
    Orcid::parse(&raw).expect("generated ORCID is valid")
}
