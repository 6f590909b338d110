//! Credit resolution: who and what gets credit for a workflow entry.
//!
//! Credit flows from the entry to its creators, contributors and submitter,
//! to the teams that own it, the spaces administering those teams, the
//! organisations the team members affiliate through, and to the entries it
//! was derived from.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::entry::WorkflowEntry;
use super::ids::{EntryId, OrgId, SpaceId, TeamId, UserId};
use super::orcid::Orcid;
use super::policy::Directory;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrityError {
    #[error("team {0} referenced by entry does not exist")]
    DanglingTeam(TeamId),
    #[error("space {0} referenced by team does not exist")]
    DanglingSpace(SpaceId),
    #[error("user {0} referenced by team does not exist")]
    DanglingUser(UserId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CreditNode {
    Entry {
        id: EntryId,
    },
    Creator {
        name: String,
        orcid: Option<Orcid>,
    },
    Contributor {
        name: String,
        user_id: Option<UserId>,
    },
    Submitter {
        user_id: UserId,
    },
    Team {
        id: TeamId,
    },
    Space {
        id: SpaceId,
    },
    Organisation {
        id: OrgId,
    },
    DerivedFrom {
        id: EntryId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreditLabel {
    Created,
    Contributed,
    Submitted,
    Owns,
    Administers,
    Affiliates,
    Derives,
}

/// Directed, labelled edge between two node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CreditEdge {
    pub from: usize,
    pub to: usize,
    pub label: CreditLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreditGraph {
    pub entry_id: EntryId,
    pub nodes: Vec<CreditNode>,
    pub edges: Vec<CreditEdge>,
}

impl CreditGraph {
    fn node(&mut self, node: CreditNode) -> usize {
        if let Some(i) = self.nodes.iter().position(|n| *n == node) {
            return i;
        }
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn edge(&mut self, from: usize, to: usize, label: CreditLabel) {
        let e = CreditEdge { from, to, label };
        if !self.edges.contains(&e) {
            self.edges.push(e);
        }
    }

    pub fn teams(&self) -> BTreeSet<TeamId> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                CreditNode::Team { id } => Some(*id),
                _ => None,
            })
            .collect()
    }

    pub fn spaces(&self) -> BTreeSet<SpaceId> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                CreditNode::Space { id } => Some(*id),
                _ => None,
            })
            .collect()
    }

    pub fn organisations(&self) -> BTreeSet<OrgId> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                CreditNode::Organisation { id } => Some(*id),
                _ => None,
            })
            .collect()
    }

    pub fn edges_labelled(&self, label: CreditLabel) -> impl Iterator<Item = &CreditEdge> {
        self.edges.iter().filter(move |e| e.label == label)
    }
}

pub fn resolve_credit(
    dir: &impl Directory,
    entry: &WorkflowEntry,
) -> Result<CreditGraph, IntegrityError> {
    let mut g = CreditGraph {
        entry_id: entry.id,
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let root = g.node(CreditNode::Entry { id: entry.id });

    for c in &entry.creators {
        let n = g.node(CreditNode::Creator {
            name: c.name.clone(),
            orcid: c.orcid.clone(),
        });
        g.edge(n, root, CreditLabel::Created);
    }
    if !entry.other_contributors.trim().is_empty() {
        let n = g.node(CreditNode::Contributor {
            name: entry.other_contributors.trim().to_string(),
            user_id: None,
        });
        g.edge(n, root, CreditLabel::Contributed);
    }
    for uid in &entry.contributor_ids {
        let name = dir
            .user(*uid)
            .map(|u| u.display_name.clone())
            .ok_or(IntegrityError::DanglingUser(*uid))?;
        let n = g.node(CreditNode::Contributor {
            name,
            user_id: Some(*uid),
        });
        g.edge(n, root, CreditLabel::Contributed);
    }
    let sub = g.node(CreditNode::Submitter {
        user_id: entry.submitter,
    });
    g.edge(sub, root, CreditLabel::Submitted);

    for tid in &entry.team_ids {
        let team = dir.team(*tid).ok_or(IntegrityError::DanglingTeam(*tid))?;
        let space = dir
            .space(team.space_id)
            .ok_or(IntegrityError::DanglingSpace(team.space_id))?;
        let tn = g.node(CreditNode::Team { id: team.id });
        g.edge(tn, root, CreditLabel::Owns);
        let sn = g.node(CreditNode::Space { id: space.id });
        g.edge(sn, tn, CreditLabel::Administers);

        let mut orgs = BTreeSet::new();
        for m in &team.members {
            let user = dir
                .user(m.user_id)
                .ok_or(IntegrityError::DanglingUser(m.user_id))?;
            if let Some(ms) = user.membership(team.id) {
                orgs.extend(ms.organisation_ids.iter().copied());
            }
        }
        for org in orgs {
            let on = g.node(CreditNode::Organisation { id: org });
            g.edge(on, tn, CreditLabel::Affiliates);
        }
    }

    for base in &entry.attributions {
        let bn = g.node(CreditNode::DerivedFrom { id: *base });
        g.edge(root, bn, CreditLabel::Derives);
    }

    Ok(g)
}
