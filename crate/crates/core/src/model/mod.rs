//! Persistent domain types and the pure decisions made over them.

mod classes;
mod credit;
mod entry;
mod files;
mod ids;
mod orcid;
mod people;
mod policy;
mod validate;
pub mod vocab;

pub use classes::{ClassError, ClassRegistry, DetectionRule, WorkflowClass};
pub use credit::{
    resolve_credit, CreditEdge, CreditGraph, CreditLabel, CreditNode, IntegrityError,
};
pub use entry::{
    Asset, AssetContent, Collection, CollectionItem, Creator, DoiRecord, ItemKind, ItemTarget,
    Maturity, Metrics, TestStatus, ToolRef, VersionSource, WorkflowEntry, WorkflowVersion,
};
pub use files::{guess_media_type, normalize_path, sha256_hex, FileBlob, FileTree};
pub use ids::{AssetId, ClassId, CollectionId, EntryId, OrgId, SpaceId, TeamId, UserId};
pub use orcid::{Orcid, OrcidError, ORCID_IRI_PREFIX};
pub use people::{
    Membership, Organisation, Space, Team, TeamMember, TeamRole, User, DEFAULT_SPACE_NAME,
    DEFAULT_TEAM_LICENSE,
};
pub use policy::{
    check_access, held_right, AccessDecision, AccessPolicy, AccessReason, Directory, Grant,
    Protected, Right, Subject, Visibility,
};
pub use validate::{
    validate_entry, ValidationContext, ValidationError, ValidationReport, ValidationWarning,
};
