//! Strategies and property bodies shared by the proptest suites and the
//! acceptance runner.

use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use flowhub_core::config::DEFAULT_BASE_URL;
use flowhub_core::model::vocab::{bundled_edam_ids, EdamKind};
use flowhub_core::model::{
    ClassId, Creator, EntryId, FileTree, Maturity, TeamId, ToolRef, UserId, VersionSource,
    Visibility, WorkflowEntry, WorkflowVersion,
};
use flowhub_core::parsers::{
    generate_abstract_cwl, parse_cwl_abstract, PortDecl, StepDecl, WorkflowStructure,
};
use flowhub_core::rocrate::{build_crate, read_crate, validate_crate, ConformanceLevel};
use flowhub_core::RegistryError;
use proptest::prelude::*;
use proptest::sample::subsequence;

use super::oracle::orcid_from;
use super::{galaxy_upload, harness, register, set_visibility, team, user};

const CLASSES: [(&str, &str, &str); 5] = [
    (
        "galaxy",
        "workflow.ga",
        r#"{"a_galaxy_workflow": "true", "format-version": "0.1", "name": "w", "steps": {}}"#,
    ),
    (
        "cwl",
        "main.cwl",
        "cwlVersion: v1.2\nclass: Workflow\ninputs: {}\noutputs: {}\nsteps: {}\n",
    ),
    (
        "nextflow",
        "main.nf",
        "nextflow.enable.dsl = 2\nworkflow { }\n",
    ),
    (
        "snakemake",
        "workflow/Snakefile",
        "rule all:\n    input: 'x'\n",
    ),
    ("wdl", "main.wdl", "version 1.0\nworkflow w { }\n"),
];

const LICENSES: [&str; 4] = [
    "MIT",
    "Apache-2.0",
    "CC-BY-4.0",
    "https://example.org/licences/custom",
];

fn text() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9 ,.()-]{0,40}[A-Za-z0-9]".prop_map(|s| s.trim().to_string())
}

fn creators() -> impl Strategy<Value = Vec<Creator>> {
    prop::collection::btree_map(
        "[A-Z][a-z]{2,8} [A-Z][a-z]{2,10}",
        (
            prop::option::of(any::<u64>()),
            prop::option::of("[A-Z][A-Za-z ]{2,20}[a-z]"),
        ),
        0..4,
    )
    .prop_map(|people| {
        let mut seen = BTreeSet::new();
        people
            .into_iter()
            .map(|(name, (orcid, affiliation))| Creator {
                name,
                orcid: orcid.map(orcid_from).filter(|o| seen.insert(o.clone())),
                affiliation,
            })
            .collect()
    })
}

fn tools() -> impl Strategy<Value = Vec<ToolRef>> {
    prop::collection::btree_map(
        "[a-z][a-z0-9_]{2,12}",
        (any::<bool>(), "[A-Z][a-z]{2,10}"),
        0..4,
    )
    .prop_map(|tools| {
        tools
            .into_iter()
            .map(|(raw, (mapped, name))| ToolRef {
                biotools_id: mapped.then(|| raw.clone()),
                display_name: format!("{name} {raw}"),
                raw_id: raw,
            })
            .collect()
    })
}

prop_compose! {
    /// An entry with one version, every exported field populated at random.
    pub fn entry_and_version()(
        class in 0..CLASSES.len(),
        id in 1u64..10_000,
        title in text(),
        description in prop::option::of(text()),
        creators in creators(),
        other in prop::option::of(text()),
        contributor_ids in prop::collection::btree_set(1u64..500, 0..3),
        stable in any::<bool>(),
        license in prop::option::of(prop::sample::select(&LICENSES[..])),
        tags in prop::collection::btree_set("[a-z][a-z0-9-]{1,12}", 0..5),
        topics in subsequence(bundled_edam_ids(EdamKind::Topic), 0..4),
        operations in subsequence(bundled_edam_ids(EdamKind::Operation), 0..4),
        tool_refs in tools(),
        attributions in prop::collection::btree_set(10_001u64..20_000, 0..3),
        citation in prop::option::of(text()),
        teams in prop::collection::btree_set(1u64..50, 1..3),
        source in prop::option::of("[a-z]{3,10}/[a-z]{3,10}"),
        extra_files in prop::collection::btree_map("[a-z]{1,8}/[a-z]{1,8}\\.(txt|csv|yml)", "[ -~]{0,64}", 0..4),
        seconds in 0i64..1_000_000_000,
    ) -> (WorkflowEntry, WorkflowVersion) {
        let (class, main_path, main) = CLASSES[class];
        let created = Utc.timestamp_opt(1_600_000_000 + seconds, 0).unwrap();
        let mut e = WorkflowEntry::new(
            EntryId(id),
            title,
            teams.into_iter().map(TeamId),
            UserId(1),
            ClassId::new(class),
            created,
        );
        e.description = description.unwrap_or_default();
        e.creators = creators;
        e.other_contributors = other.unwrap_or_default();
        e.contributor_ids = contributor_ids.into_iter().map(UserId).collect();
        e.maturity = if stable { Maturity::stable() } else { Maturity::work_in_progress() };
        e.license = license.map(String::from);
        e.tags = tags.into_iter().collect();
        e.edam_topics = topics.into_iter().map(String::from).collect();
        e.edam_operations = operations.into_iter().map(String::from).collect();
        e.tool_refs = tool_refs;
        e.attributions = attributions.into_iter().map(EntryId).collect();
        e.custom_citation = citation;
        e.source_url = source.map(|s| format!("https://github.com/{s}"));

        let mut files = FileTree::new().with(main_path, main.as_bytes());
        for (path, content) in extra_files {
            if !files.contains(&path) {
                files.insert(&path, content.into_bytes());
            }
        }
        let v = WorkflowVersion {
            version: 1,
            files,
            main_workflow_path: main_path.to_string(),
            diagram_path: None,
            abstract_cwl_path: None,
            source: VersionSource::Upload,
            frozen: false,
            created_at: created,
            revision_comment: String::new(),
            structure: None,
            crate_extras: Vec::new(),
        };
        e.versions = vec![v.clone()];
        (e, v)
    }
}

/// Export, read back, compare every field; rebuild and compare bytes;
/// validate against the workflow profile.
pub fn crate_round_trip(e: &WorkflowEntry, v: &WorkflowVersion) -> Result<(), TestCaseError> {
    let built = build_crate(e, v).unwrap();
    let back = read_crate(&built.archive).unwrap();
    let m = &back.metadata;

    prop_assert_eq!(m.title.as_deref(), Some(e.title.as_str()));
    prop_assert_eq!(
        m.description.clone().unwrap_or_default(),
        e.description.clone()
    );
    prop_assert_eq!(&m.creators, &e.creators);
    prop_assert_eq!(
        m.other_contributors.clone().unwrap_or_default(),
        e.other_contributors.clone()
    );
    prop_assert_eq!(
        m.contributor_ids(DEFAULT_BASE_URL),
        e.contributor_ids.clone()
    );
    prop_assert_eq!(m.class.as_ref(), Some(&e.workflow_class));
    prop_assert_eq!(m.maturity.as_ref(), Some(&e.maturity));
    prop_assert_eq!(&m.license, &e.license);
    prop_assert_eq!(&m.tags, &e.tags);
    prop_assert_eq!(&m.edam_topics, &e.edam_topics);
    prop_assert_eq!(&m.edam_operations, &e.edam_operations);
    prop_assert_eq!(&m.tool_refs, &e.tool_refs);
    prop_assert_eq!(m.attribution_ids(DEFAULT_BASE_URL), e.attributions.clone());
    prop_assert_eq!(&m.custom_citation, &e.custom_citation);
    prop_assert_eq!(
        m.team_ids(DEFAULT_BASE_URL)
            .into_iter()
            .collect::<BTreeSet<_>>(),
        e.team_ids.clone()
    );
    prop_assert_eq!(&m.source_url, &e.source_url);
    prop_assert_eq!(&back.main_workflow_path, &v.main_workflow_path);
    prop_assert_eq!(&back.files, &v.files);

    let again = build_crate(e, v).unwrap();
    prop_assert!(
        again.archive == built.archive,
        "rebuilding changed the archive bytes"
    );

    let report = validate_crate(&built.archive);
    let level = if e.license.is_some() {
        ConformanceLevel::Valid
    } else {
        ConformanceLevel::Warnings
    };
    prop_assert_eq!(report.level, level, "{:?}", report.findings);
    Ok(())
}

/// Random abstract structures: inputs, labelled steps with tools, and
/// outputs wired to steps.
pub fn structure() -> impl Strategy<Value = WorkflowStructure> {
    let ident = "[a-z][a-z0-9_]{0,10}";
    (
        prop::option::of("[A-Z][a-z ]{2,20}[a-z]"),
        prop::collection::btree_set(ident, 0..6),
        prop::collection::btree_map(
            ident,
            (
                prop::option::of("[A-Z][a-z]{2,10}"),
                prop::option::of("[a-z]{3,8}/[a-z]{3,8}"),
            ),
            1..8,
        ),
        prop::collection::btree_map(ident, any::<prop::sample::Index>(), 0..6),
    )
        .prop_map(|(name, inputs, steps, outputs)| {
            let steps: Vec<StepDecl> = steps
                .into_iter()
                .map(|(id, (label, tool))| StepDecl {
                    id: format!("step_{id}"),
                    label,
                    tool_ref: tool.map(ToolRef::unmapped),
                    subworkflow: None,
                })
                .collect();
            let outputs = outputs
                .into_iter()
                .map(|(id, pick)| PortDecl {
                    source: Some(steps[pick.index(steps.len())].id.clone()),
                    ..PortDecl::new(format!("out_{id}"))
                })
                .collect();
            WorkflowStructure {
                name,
                inputs: inputs
                    .into_iter()
                    .map(|i| PortDecl::new(format!("in_{i}")))
                    .collect(),
                outputs,
                steps,
                ..WorkflowStructure::default()
            }
        })
}

fn ids(ports: &[PortDecl]) -> Vec<&str> {
    ports.iter().map(|p| p.id.as_str()).collect()
}

/// Generate abstract CWL and parse it back: name, port ids, output sources
/// and steps survive.
pub fn abstract_cwl_round_trip(s: &WorkflowStructure) -> Result<(), TestCaseError> {
    let doc = generate_abstract_cwl(s).unwrap();
    let back = parse_cwl_abstract(&doc).unwrap().structure;
    prop_assert_eq!(&back.name, &s.name);
    prop_assert_eq!(ids(&back.inputs), ids(&s.inputs));
    prop_assert_eq!(ids(&back.outputs), ids(&s.outputs));
    let sources = |x: &WorkflowStructure| {
        x.outputs
            .iter()
            .map(|o| o.source.clone())
            .collect::<Vec<_>>()
    };
    prop_assert_eq!(sources(&back), sources(s));
    let steps = |x: &WorkflowStructure| {
        x.steps
            .iter()
            .map(|st| {
                (
                    st.id.clone(),
                    st.label.clone(),
                    st.tool_ref.as_ref().map(|t| t.raw_id.clone()),
                )
            })
            .collect::<Vec<_>>()
    };
    prop_assert_eq!(steps(&back), steps(s));
    Ok(())
}

#[derive(Debug, Clone)]
pub enum Op {
    AddVersion,
    Freeze(u32),
    Mint(u32),
    PutFile(u32, String),
    RemoveFile(u32, String),
    Publish(bool),
    MinterDown(bool),
}

pub fn op() -> impl Strategy<Value = Op> {
    let v = 1u32..6;
    let path = prop::sample::select(vec!["a.txt", "b.txt", "docs/c.md"]).prop_map(String::from);
    prop_oneof![
        2 => Just(Op::AddVersion),
        2 => v.clone().prop_map(Op::Freeze),
        3 => v.clone().prop_map(Op::Mint),
        3 => (v.clone(), path.clone()).prop_map(|(v, p)| Op::PutFile(v, p)),
        2 => (v, path).prop_map(|(v, p)| Op::RemoveFile(v, p)),
        1 => any::<bool>().prop_map(Op::Publish),
        1 => any::<bool>().prop_map(Op::MinterDown),
    ]
}

#[derive(Debug, Clone)]
struct ModelVersion {
    frozen: bool,
    doi: Option<String>,
    files: BTreeSet<String>,
}

#[derive(Debug)]
struct Model {
    versions: Vec<ModelVersion>,
    public: bool,
    minter_down: bool,
}

impl Model {
    fn get(&mut self, v: u32) -> Option<&mut ModelVersion> {
        self.versions.get_mut((v as usize).checked_sub(1)?)
    }
}

fn check(model: &Model, e: &WorkflowEntry) -> Result<(), TestCaseError> {
    prop_assert_eq!(e.versions.len(), model.versions.len());
    for (i, (mv, v)) in model.versions.iter().zip(&e.versions).enumerate() {
        prop_assert_eq!(v.version as usize, i + 1, "numbers run 1..n without gaps");
        prop_assert_eq!(v.frozen, mv.frozen);
        let files: BTreeSet<String> = v.files.paths().map(String::from).collect();
        prop_assert_eq!(&files, &mv.files);
        prop_assert_eq!(
            e.doi_records.get(&v.version).map(|r| r.doi.clone()),
            mv.doi.clone()
        );
        if mv.doi.is_some() {
            prop_assert!(v.frozen, "a minted version is frozen");
        }
    }
    Ok(())
}

/// Applies `ops` to a fresh entry and to a reference model, comparing the
/// two after every step.
pub fn version_state_machine(ops: &[Op]) -> Result<(), TestCaseError> {
    let h = harness();
    let reg = &h.reg;
    let owner = user(reg, "owner");
    let t = team(reg, owner, "Lab");
    let id = register(reg, owner, "Stateful", &[t]);
    set_visibility(reg, owner, id, Visibility::Private);
    // Registration may add generated files next to the upload.
    let baseline: BTreeSet<String> = reg
        .get_version(Some(owner), id, Some(1))
        .unwrap()
        .1
        .files
        .paths()
        .map(String::from)
        .collect();
    prop_assert!(baseline.contains("workflow.ga"));
    let mut model = Model {
        versions: vec![ModelVersion {
            frozen: false,
            doi: None,
            files: baseline.clone(),
        }],
        public: false,
        minter_down: false,
    };

    for op in ops.iter().cloned() {
        match op {
            Op::AddVersion => {
                let v = reg
                    .add_version(Some(owner), id, galaxy_upload(), "next")
                    .unwrap();
                prop_assert_eq!(v.version as usize, model.versions.len() + 1);
                model.versions.push(ModelVersion {
                    frozen: false,
                    doi: None,
                    files: baseline.clone(),
                });
            }
            Op::Freeze(v) => {
                let res = reg.freeze_version(Some(owner), id, v);
                match model.get(v) {
                    Some(mv) => {
                        prop_assert!(res.unwrap().frozen);
                        mv.frozen = true;
                    }
                    None => prop_assert!(
                        matches!(res, Err(RegistryError::NotFound { .. })),
                        "{:?}",
                        res
                    ),
                }
            }
            Op::Mint(v) => {
                let res = reg.mint_doi(Some(owner), id, v);
                let (public, down) = (model.public, model.minter_down);
                let expected_doi = reg.doi_for(id, v);
                match model.get(v) {
                    None => prop_assert!(
                        matches!(res, Err(RegistryError::NotFound { .. })),
                        "{:?}",
                        res
                    ),
                    Some(mv) if mv.doi.is_some() => {
                        prop_assert_eq!(Some(res.unwrap().doi), mv.doi.clone());
                    }
                    Some(_) if !public => {
                        prop_assert!(
                            matches!(res, Err(RegistryError::VisibilityRequired)),
                            "{:?}",
                            res
                        );
                    }
                    Some(_) if down => {
                        prop_assert!(
                            matches!(res, Err(RegistryError::MintFailed(_))),
                            "{:?}",
                            res
                        );
                    }
                    Some(mv) => {
                        prop_assert_eq!(&res.unwrap().doi, &expected_doi);
                        mv.doi = Some(expected_doi);
                        mv.frozen = true;
                    }
                }
            }
            Op::PutFile(v, path) => {
                let res = reg.put_file(Some(owner), id, v, &path, b"data".to_vec());
                match model.get(v) {
                    None => prop_assert!(
                        matches!(res, Err(RegistryError::NotFound { .. })),
                        "{:?}",
                        res
                    ),
                    Some(mv) if mv.frozen => {
                        prop_assert!(
                            matches!(res, Err(RegistryError::FrozenVersion { .. })),
                            "{:?}",
                            res
                        );
                    }
                    Some(mv) => {
                        res.unwrap();
                        mv.files.insert(path);
                    }
                }
            }
            Op::RemoveFile(v, path) => {
                let res = reg.remove_file(Some(owner), id, v, &path);
                match model.get(v) {
                    None => prop_assert!(
                        matches!(res, Err(RegistryError::NotFound { .. })),
                        "{:?}",
                        res
                    ),
                    Some(mv) if mv.frozen => {
                        prop_assert!(
                            matches!(res, Err(RegistryError::FrozenVersion { .. })),
                            "{:?}",
                            res
                        );
                    }
                    Some(mv) if !mv.files.contains(&path) => {
                        prop_assert!(
                            matches!(res, Err(RegistryError::NotFound { .. })),
                            "{:?}",
                            res
                        );
                    }
                    Some(mv) => {
                        res.unwrap();
                        mv.files.remove(&path);
                    }
                }
            }
            Op::Publish(public) => {
                let vis = if public {
                    Visibility::Public
                } else {
                    Visibility::Private
                };
                set_visibility(reg, owner, id, vis);
                model.public = public;
            }
            Op::MinterDown(down) => {
                h.minter.fail_with(down.then_some("service unavailable"));
                model.minter_down = down;
            }
        }
        check(&model, &reg.get_entry(Some(owner), id).unwrap())?;
    }

    let minted = model.versions.iter().filter(|v| v.doi.is_some()).count();
    prop_assert_eq!(
        h.minter.transcript().len(),
        minted,
        "one mint call per new DOI"
    );
    Ok(())
}
