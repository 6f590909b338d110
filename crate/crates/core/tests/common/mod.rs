//! Helpers shared by the integration tests: registries with a manual clock
//! and a recording mint client, and random store generation.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{NaiveDate, TimeZone, Utc};
use flowhub_core::model::{
    AccessPolicy, ClassId, Creator, EntryId, FileTree, Maturity, OrgId, SpaceId, TeamId, ToolRef,
    UserId, Visibility,
};
use flowhub_core::registry::{
    ManualClock, MetadataPatch, MockMintClient, NewTeam, NewUser, RegistrationRequest,
    RegistrationSource,
};
use flowhub_core::{Registry, RegistryConfig};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub mod oracle;
pub mod props;

/// Resolves from any workspace crate, so other crates' tests can include
/// this module by path.
pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub struct Harness {
    pub reg: Registry,
    pub clock: Arc<ManualClock>,
    pub minter: Arc<MockMintClient>,
}

pub fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2026, 1, 1).unwrap()
}

pub fn harness_with(config: RegistryConfig) -> Harness {
    let clock = Arc::new(ManualClock::new(
        Utc.with_ymd_and_hms(2026, 1, 1, 12, 0, 0).unwrap(),
    ));
    let minter = Arc::new(MockMintClient::default());
    let reg = Registry::with_parts(config, clock.clone(), minter.clone()).unwrap();
    Harness { reg, clock, minter }
}

pub fn harness() -> Harness {
    harness_with(RegistryConfig::default())
}

pub fn user(reg: &Registry, name: &str) -> UserId {
    reg.create_user(NewUser::named(name)).unwrap().id
}

pub fn user_in(reg: &Registry, name: &str, orgs: &[OrgId]) -> UserId {
    let mut new = NewUser::named(name);
    new.organisation_ids = orgs.iter().copied().collect();
    reg.create_user(new).unwrap().id
}

/// A team in the default space, created by `owner`.
pub fn team(reg: &Registry, owner: UserId, name: &str) -> TeamId {
    let space = reg.default_space().id;
    reg.create_team(Some(owner), NewTeam::in_space(name, space))
        .unwrap()
        .id
}

pub fn team_in(reg: &Registry, owner: UserId, name: &str, space: SpaceId) -> TeamId {
    reg.create_team(Some(owner), NewTeam::in_space(name, space))
        .unwrap()
        .id
}

pub const GALAXY_DOC: &str = r#"{
  "a_galaxy_workflow": "true",
  "format-version": "0.1",
  "name": "demo",
  "steps": {
    "0": {"id": 0, "type": "data_input", "label": "reads", "tool_id": null, "inputs": [{"name": "reads"}]},
    "1": {"id": 1, "type": "tool", "tool_id": "toolshed.g2.bx.psu.edu/repos/devteam/fastqc/fastqc/0.73",
          "name": "FastQC", "workflow_outputs": [{"output_name": "html_file", "label": "report"}]}
  }
}"#;

pub fn upload(path: &str, content: &[u8]) -> RegistrationSource {
    RegistrationSource::upload(FileTree::new().with(path, content), path)
}

pub fn galaxy_upload() -> RegistrationSource {
    upload("workflow.ga", GALAXY_DOC.as_bytes())
}

/// Registers a Galaxy upload with the given title and teams.
pub fn register(reg: &Registry, actor: UserId, title: &str, teams: &[TeamId]) -> EntryId {
    let patch = MetadataPatch::default()
        .title(title)
        .teams(teams.iter().copied());
    reg.register_workflow(
        Some(actor),
        RegistrationRequest::new(galaxy_upload(), patch),
    )
    .unwrap()
    .entry
    .id
}

/// Sets visibility while keeping the grants added at registration.
pub fn set_visibility(reg: &Registry, actor: UserId, id: EntryId, vis: Visibility) {
    let mut policy = reg.get_entry(Some(actor), id).unwrap().policy;
    policy.visibility = vis;
    let patch = MetadataPatch {
        policy: Some(policy),
        ..MetadataPatch::default()
    };
    reg.update_metadata(Some(actor), id, &patch).unwrap();
}

/// A registry populated at random: users with affiliations, teams across
/// two spaces, and entries with random metadata and sharing.
pub struct RandomStore {
    pub h: Harness,
    pub users: Vec<UserId>,
    pub teams: Vec<TeamId>,
    pub entries: Vec<EntryId>,
}

pub const WORDS: [&str; 12] = [
    "rna", "seq", "variant", "calling", "assembly", "genome", "covid", "qc", "align", "protein",
    "single", "cell",
];
const TAGS: [&str; 6] = [
    "covid-19",
    "genomics",
    "proteomics",
    "metagenomics",
    "imaging",
    "training",
];
const NAMES: [&str; 6] = [
    "Ada Byron",
    "Alan Turing",
    "Grace Hopper",
    "Rosalind Franklin",
    "Carl Woese",
    "Barbara McClintock",
];
const TOOLS: [(&str, Option<&str>); 5] = [
    ("fastqc", Some("fastqc")),
    ("bwa", Some("bwa")),
    ("my-script", None),
    ("samtools", Some("samtools")),
    ("custom-filter", None),
];
const CLASSES: [(&str, &str, &[u8]); 4] = [
    ("galaxy", "wf.ga", GALAXY_DOC.as_bytes()),
    (
        "cwl",
        "wf.cwl",
        b"cwlVersion: v1.2\nclass: Workflow\ninputs: {}\noutputs: {}\nsteps: {}\n",
    ),
    ("snakemake", "Snakefile", b"rule all:\n    input: 'x'\n"),
    ("python", "run.py", b"print('hi')\n"),
];
const TOPICS: [&str; 4] = ["topic_0091", "topic_0622", "topic_3170", "topic_0080"];
const OPERATIONS: [&str; 3] = ["operation_0292", "operation_3227", "operation_0310"];

fn pick<T: Copy>(rng: &mut StdRng, items: &[T], max: usize) -> Vec<T> {
    let n = rng.gen_range(0..=max.min(items.len()));
    items.choose_multiple(rng, n).copied().collect()
}

pub fn random_visibility(rng: &mut StdRng) -> Visibility {
    let today = start();
    match rng.gen_range(0..5) {
        0 | 1 => Visibility::Public,
        2 => Visibility::Registered,
        3 => Visibility::Embargoed {
            until: today + chrono::Duration::days(rng.gen_range(-30..30)),
        },
        _ => Visibility::Private,
    }
}

impl RandomStore {
    pub fn generate(rng: &mut StdRng, n_entries: usize) -> RandomStore {
        let h = harness();
        let reg = &h.reg;
        let admin = user(reg, "admin");
        let orgs: Vec<OrgId> = ["EMBL-EBI", "ELIXIR", "Manchester"]
            .iter()
            .map(|n| reg.create_organisation(Some(admin), n, None).unwrap().id)
            .collect();
        let space = reg.create_space(Some(admin), "Research", "").unwrap().id;

        let mut users = vec![admin];
        for i in 0..5 {
            let chosen = pick(rng, &orgs, 2);
            users.push(user_in(reg, &format!("user{i}"), &chosen));
        }
        let mut teams = Vec::new();
        for i in 0..4 {
            let t = if i % 2 == 0 {
                team(reg, admin, &format!("Team {i}"))
            } else {
                team_in(reg, admin, &format!("Team {i}"), space)
            };
            for u in &users[1..] {
                if rng.gen_bool(0.4) {
                    reg.add_member(Some(admin), t, *u, flowhub_core::model::TeamRole::Member)
                        .unwrap();
                }
            }
            teams.push(t);
        }

        let mut entries = Vec::new();
        for i in 0..n_entries {
            let (class, path, content) = CLASSES[rng.gen_range(0..CLASSES.len())];
            let owners = pick(rng, &teams, 2);
            let owners: BTreeSet<TeamId> = if owners.is_empty() {
                [teams[0]].into()
            } else {
                owners.into_iter().collect()
            };
            let title: Vec<&str> = (0..rng.gen_range(1..4))
                .map(|_| *WORDS.choose(rng).unwrap())
                .collect();
            let mut policy = AccessPolicy {
                visibility: random_visibility(rng),
                grants: Vec::new(),
            };
            if rng.gen_bool(0.3) {
                let u = *users.choose(rng).unwrap();
                let right = *flowhub_core::model::Right::ALL.choose(rng).unwrap();
                policy.add_grant(flowhub_core::model::Subject::User(u), right);
            }
            let patch = MetadataPatch {
                title: Some(format!("{} {i}", title.join(" "))),
                description: Some(pick(rng, &WORDS, 3).join(" ")),
                creators: Some(
                    pick(rng, &NAMES, 2)
                        .into_iter()
                        .map(Creator::named)
                        .collect(),
                ),
                maturity: Some(if rng.gen_bool(0.5) {
                    Maturity::stable()
                } else {
                    Maturity::work_in_progress()
                }),
                tags: Some(pick(rng, &TAGS, 2).into_iter().map(String::from).collect()),
                edam_topics: Some(
                    pick(rng, &TOPICS, 2)
                        .into_iter()
                        .map(String::from)
                        .collect(),
                ),
                edam_operations: Some(
                    pick(rng, &OPERATIONS, 2)
                        .into_iter()
                        .map(String::from)
                        .collect(),
                ),
                tool_refs: Some(
                    pick(rng, &TOOLS, 2)
                        .into_iter()
                        .map(|(raw, bt)| ToolRef {
                            raw_id: raw.to_string(),
                            biotools_id: bt.map(String::from),
                            display_name: raw.to_string(),
                        })
                        .collect(),
                ),
                team_ids: Some(owners.clone()),
                policy: Some(policy),
                ..MetadataPatch::default()
            };
            // Register as the registry admin's stand-in: any member of an owning team.
            let submitter = users[1..]
                .iter()
                .copied()
                .find(|u| owners.iter().any(|t| reg.team(*t).unwrap().has_member(*u)))
                .unwrap_or(admin);
            let mut req = RegistrationRequest::new(upload(path, content), patch);
            req.class = Some(ClassId::new(class));
            let done = reg.register_workflow(Some(submitter), req).unwrap();
            entries.push(done.entry.id);
        }
        RandomStore {
            h,
            users,
            teams,
            entries,
        }
    }

    /// Every actor worth asking: anonymous and each user.
    pub fn actors(&self) -> Vec<Option<UserId>> {
        std::iter::once(None)
            .chain(self.users.iter().map(|u| Some(*u)))
            .collect()
    }
}

/// A throwaway local Git repository. Each `commit` replaces the working
/// tree with `files`; `tag` points a lightweight tag at HEAD.
pub struct GitFixture {
    pub dir: tempfile::TempDir,
    repo: git2::Repository,
    seconds: i64,
}

impl GitFixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let repo = git2::Repository::init(dir.path()).unwrap();
        GitFixture {
            dir,
            repo,
            seconds: 1_700_000_000,
        }
    }

    pub fn remote(&self) -> String {
        self.dir.path().to_string_lossy().into_owned()
    }

    pub fn commit(&mut self, files: &FileTree, message: &str) -> String {
        let mut index = self.repo.index().unwrap();
        index.clear().unwrap();
        for path in files.paths() {
            let oid = self.repo.blob(files.bytes(path).unwrap()).unwrap();
            let entry = git2::IndexEntry {
                ctime: git2::IndexTime::new(0, 0),
                mtime: git2::IndexTime::new(0, 0),
                dev: 0,
                ino: 0,
                mode: 0o100644,
                uid: 0,
                gid: 0,
                file_size: 0,
                id: oid,
                flags: path.len().min(0xfff) as u16,
                flags_extended: 0,
                path: path.as_bytes().to_vec(),
            };
            index.add(&entry).unwrap();
        }
        let tree_id = index.write_tree().unwrap();
        let tree = self.repo.find_tree(tree_id).unwrap();
        self.seconds += 60;
        let sig = git2::Signature::new(
            "Fixture",
            "fixture@example.org",
            &git2::Time::new(self.seconds, 0),
        )
        .unwrap();
        let parent = self.repo.head().ok().and_then(|h| h.peel_to_commit().ok());
        let parents: Vec<&git2::Commit> = parent.iter().collect();
        let id = self
            .repo
            .commit(Some("HEAD"), &sig, &sig, message, &tree, &parents)
            .unwrap();
        id.to_string()
    }

    pub fn tag(&self, name: &str) {
        let head = self
            .repo
            .head()
            .unwrap()
            .peel(git2::ObjectType::Commit)
            .unwrap();
        self.repo.tag_lightweight(name, &head, false).unwrap();
    }
}

/// Loads a directory of fixtures into a file tree.
pub fn tree_from_dir(root: &std::path::Path) -> FileTree {
    fn walk(root: &std::path::Path, dir: &std::path::Path, tree: &mut FileTree) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, tree);
            } else {
                let rel = p
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .replace('\\', "/");
                tree.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut tree = FileTree::new();
    walk(root, root, &mut tree);
    tree
}

/// The Snakemake fixture repository with the citation file at its root.
pub fn varlociraptor_tree() -> FileTree {
    let mut tree = tree_from_dir(&fixtures().join("repos/dna-seq-varlociraptor"));
    tree.insert(
        "CITATION.cff",
        std::fs::read(fixtures().join("citation/CITATION.cff")).unwrap(),
    );
    tree
}
