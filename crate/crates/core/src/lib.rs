//! FlowHub: a registry for computational workflows.
//!
//! The crate is organised by concern:
//!
//! * [`model`] holds the persistent domain types, access decisions, credit
//!   resolution and entry validation.
//! * [`parsers`] detects workflow classes and extracts structure from
//!   Galaxy, CWL, Nextflow and Snakemake sources, and emits Abstract CWL.
//! * [`rocrate`], [`citation`] and [`bioschemas`] cover the exchange formats:
//!   Workflow-RO-Crate archives, `CITATION.cff` and Bioschemas JSON-LD.
//! * [`git`] imports snapshots, READMEs and releases from Git repositories.
//! * [`registry`] is the transactional engine tying it all together:
//!   registration, versioning, DOIs, collections, subscriptions and search.

pub mod bioschemas;
pub mod citation;
pub mod config;
pub mod git;
pub mod model;
pub mod parsers;
pub mod registry;
pub mod rocrate;

pub use config::RegistryConfig;
pub use registry::{Registry, RegistryError};
