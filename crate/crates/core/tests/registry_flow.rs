mod common;

use std::sync::Arc;
use std::thread;

use common::*;
use flowhub_core::model::{ClassId, FileTree, VersionSource, Visibility};
use flowhub_core::registry::{
    ActivityKind, MetadataPatch, RegistrationRequest, RegistrationSource, SearchQuery,
};
use flowhub_core::{Registry, RegistryConfig};

fn git_source(remote: String) -> RegistrationSource {
    RegistrationSource::GitImport {
        remote,
        git_ref: None,
        main_path: None,
    }
}

#[test]
fn git_registration_prefills_from_the_repository() {
    let h = harness();
    let reg = &h.reg;
    let owner = user(reg, "owner");
    let t = team(reg, owner, "Variant calling");
    let mut git = GitFixture::new();
    let commit = git.commit(&varlociraptor_tree(), "initial import");

    let req = RegistrationRequest::new(
        git_source(git.remote()),
        MetadataPatch::default().teams([t]),
    );
    let done = reg.register_workflow(Some(owner), req).unwrap();
    let e = done.entry;

    assert_eq!(e.workflow_class, ClassId::new("snakemake"));
    assert_eq!(e.title, "Varlociraptor calling workflow");
    let names: Vec<&str> = e.creators.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["Johannes Köster", "Felix Hall", "Pjotr Prins"]);
    let orcids: Vec<Option<&str>> = e
        .creators
        .iter()
        .map(|c| c.orcid.as_ref().map(|o| o.as_str()))
        .collect();
    assert_eq!(
        orcids,
        [
            Some("0000-0001-9818-9320"),
            Some("0000-0002-1825-0097"),
            None
        ]
    );
    assert_eq!(
        e.creators[2].affiliation.as_deref(),
        Some("University of Tennessee")
    );

    let v = &e.versions[0];
    assert_eq!(v.main_workflow_path, "workflow/Snakefile");
    match &v.source {
        VersionSource::GitImport { commit_id, .. } => assert_eq!(commit_id, &commit),
        other => panic!("unexpected source {other:?}"),
    }
    let rules: Vec<&str> = v
        .structure
        .as_ref()
        .unwrap()
        .steps
        .iter()
        .map(|s| s.id.as_str())
        .collect();
    assert_eq!(rules.len(), 5);
    assert_eq!(rules.last(), Some(&"all"));
}

#[test]
fn sync_turns_new_tags_into_versions() {
    let h = harness();
    let reg = &h.reg;
    let owner = user(reg, "owner");
    let t = team(reg, owner, "Lab");
    let mut git = GitFixture::new();
    git.commit(&varlociraptor_tree(), "first");
    let req = RegistrationRequest::new(
        git_source(git.remote()),
        MetadataPatch::default().teams([t]),
    );
    let id = reg.register_workflow(Some(owner), req).unwrap().entry.id;

    assert!(reg.sync_git(Some(owner), id).unwrap().is_empty());
    git.tag("v1.0.0");
    let mut next = varlociraptor_tree();
    next.insert(
        "workflow/rules/extra.smk",
        b"rule extra:\n    shell: 'true'\n".to_vec(),
    );
    git.commit(&next, "second");
    git.tag("v1.1.0");

    git.commit(&varlociraptor_tree(), "third");
    git.tag("v1.2.0");

    // v1.0.0 points at the commit that was registered, so it adds nothing.
    let created = reg.sync_git(Some(owner), id).unwrap();
    let numbers: Vec<u32> = created.iter().map(|v| v.version).collect();
    assert_eq!(numbers, [2, 3]);
    assert!(
        reg.sync_git(Some(owner), id).unwrap().is_empty(),
        "sync is idempotent"
    );

    let e = reg.get_entry(Some(owner), id).unwrap();
    assert!(e.versions[1].files.contains("workflow/rules/extra.smk"));
    assert!(!e.versions[2].files.contains("workflow/rules/extra.smk"));
}

#[test]
fn uploads_cannot_be_synced() {
    let h = harness();
    let reg = &h.reg;
    let owner = user(reg, "owner");
    let t = team(reg, owner, "Lab");
    let id = register(reg, owner, "Uploaded", &[t]);
    assert!(reg.sync_git(Some(owner), id).is_err());
}

#[test]
fn concurrent_activity_is_counted_exactly() {
    let h = harness();
    let reg = Arc::new(h.reg);
    let owner = user(&reg, "owner");
    let t = team(&reg, owner, "Lab");
    let id = register(&reg, owner, "Popular", &[t]);

    let handles: Vec<_> = (0..100)
        .map(|i| {
            let reg = reg.clone();
            thread::spawn(move || {
                let kind = if i % 2 == 0 {
                    ActivityKind::View
                } else {
                    ActivityKind::Download
                };
                reg.record_activity(id, kind).unwrap();
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let m = reg.get_entry(None, id).unwrap().metrics;
    assert_eq!((m.views, m.downloads), (50, 50));
}

#[test]
fn concurrent_versions_get_distinct_numbers() {
    let h = harness();
    let reg = Arc::new(h.reg);
    let owner = user(&reg, "owner");
    let t = team(&reg, owner, "Lab");
    let id = register(&reg, owner, "Busy", &[t]);

    let handles: Vec<_> = (0..24)
        .map(|_| {
            let reg = reg.clone();
            thread::spawn(move || {
                reg.add_version(Some(owner), id, galaxy_upload(), "parallel")
                    .unwrap()
                    .version
            })
        })
        .collect();
    let mut got: Vec<u32> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    got.sort();
    assert_eq!(got, (2..=25).collect::<Vec<_>>());
    let e = reg.get_entry(Some(owner), id).unwrap();
    let numbers: Vec<u32> = e.versions.iter().map(|v| v.version).collect();
    assert_eq!(numbers, (1..=25).collect::<Vec<_>>());
}

#[test]
fn exported_crates_register_elsewhere_with_the_same_metadata() {
    let h = harness();
    let reg = &h.reg;
    let owner = user(reg, "owner");
    let t = team(reg, owner, "Lab");
    let patch = MetadataPatch {
        description: Some("Quality control for reads".into()),
        tags: Some(vec!["qc".into(), "reads".into()]),
        license: Some("MIT".into()),
        edam_topics: Some(vec!["topic_3170".into()]),
        ..MetadataPatch::default().title("Read QC").teams([t])
    };
    let id = reg
        .register_workflow(
            Some(owner),
            RegistrationRequest::new(galaxy_upload(), patch),
        )
        .unwrap()
        .entry
        .id;
    let exported = reg.entry_crate(Some(owner), id, None).unwrap();

    let other = harness();
    let someone = user(&other.reg, "someone");
    let their_team = team(&other.reg, someone, "Elsewhere");
    let req = RegistrationRequest::new(
        RegistrationSource::CrateImport {
            archive: exported.archive,
        },
        MetadataPatch::default().teams([their_team]),
    );
    let imported = other
        .reg
        .register_workflow(Some(someone), req)
        .unwrap()
        .entry;
    let original = reg.get_entry(Some(owner), id).unwrap();
    assert_eq!(imported.title, original.title);
    assert_eq!(imported.description, original.description);
    assert_eq!(imported.tags, original.tags);
    assert_eq!(imported.license, original.license);
    assert_eq!(imported.edam_topics, original.edam_topics);
    assert_eq!(imported.workflow_class, original.workflow_class);
    assert_eq!(
        imported.versions[0].files.bytes("workflow.ga"),
        original.versions[0].files.bytes("workflow.ga")
    );
}

#[test]
fn a_file_store_survives_reopening() {
    let dir = tempfile::tempdir().unwrap();
    let config = RegistryConfig {
        store_dir: Some(dir.path().to_path_buf()),
        ..RegistryConfig::default()
    };
    let (id, owner, before) = {
        let reg = Registry::open(config.clone()).unwrap();
        let owner = user(&reg, "owner");
        let t = team(&reg, owner, "Lab");
        let id = register(&reg, owner, "Durable", &[t]);
        reg.put_file(Some(owner), id, 1, "notes/readme.txt", b"hello".to_vec())
            .unwrap();
        set_visibility(&reg, owner, id, Visibility::Registered);
        (id, owner, reg.get_entry(Some(owner), id).unwrap())
    };
    let reg = Registry::open(config).unwrap();
    let after = reg.get_entry(Some(owner), id).unwrap();
    assert_eq!(after, before);
    assert_eq!(
        after.versions[0].files.bytes("notes/readme.txt"),
        Some(&b"hello"[..])
    );
    let hits = reg
        .search(Some(owner), &SearchQuery::text("durable"))
        .unwrap();
    assert_eq!(hits.total, 1);
}

#[test]
fn upload_without_main_path_picks_the_workflow_file() {
    let h = harness();
    let reg = &h.reg;
    let owner = user(reg, "owner");
    let t = team(reg, owner, "Lab");
    let files = FileTree::new()
        .with("README.md", "# Counting\n")
        .with("scripts/helper.sh", "#!/bin/bash\necho hi\n")
        .with(
            "count.cwl",
            "cwlVersion: v1.2\nclass: Workflow\ninputs: {}\noutputs: {}\nsteps: {}\n",
        );
    let source = RegistrationSource::Upload {
        files,
        main_path: None,
    };
    let e = reg
        .register_workflow(
            Some(owner),
            RegistrationRequest::new(source, MetadataPatch::default().teams([t])),
        )
        .unwrap()
        .entry;
    assert_eq!(e.versions[0].main_workflow_path, "count.cwl");
    assert_eq!(e.workflow_class, ClassId::new("cwl"));
    assert_eq!(e.title, "Counting");
}
