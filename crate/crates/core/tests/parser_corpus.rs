mod common;

use std::fs;
use std::path::Path;

use common::fixtures;
use common::props::{abstract_cwl_round_trip, structure};
use flowhub_core::model::{ClassId, ClassRegistry, FileTree};
use flowhub_core::parsers::{detect_class, parse_cwl_abstract, parse_galaxy, parse_snakemake};
use proptest::prelude::*;
use proptest::test_runner::FileFailurePersistence;

fn walk(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            walk(&p, out);
        } else {
            out.push(p);
        }
    }
}

#[test]
fn every_corpus_file_is_detected_as_its_directory_class() {
    let classes = ClassRegistry::seeded();
    let root = fixtures().join("classes");
    let mut total = 0;
    let mut wrong = Vec::new();
    let mut seen_classes = std::collections::BTreeSet::new();
    for class_dir in fs::read_dir(&root).unwrap() {
        let class_dir = class_dir.unwrap().path();
        let expected = class_dir.file_name().unwrap().to_string_lossy().to_string();
        let mut files = Vec::new();
        walk(&class_dir, &mut files);
        assert!(
            files.len() >= 5,
            "{expected} has only {} fixtures",
            files.len()
        );
        seen_classes.insert(expected.clone());
        for f in files {
            let rel = f
                .strip_prefix(&class_dir)
                .unwrap()
                .to_string_lossy()
                .replace('\\', "/");
            let got = detect_class(&classes, &rel, &fs::read(&f).unwrap());
            total += 1;
            if got.as_ref().ok() != Some(&ClassId::new(&expected)) {
                wrong.push(format!("{expected}/{rel} -> {got:?}"));
            }
        }
    }
    let seeded: std::collections::BTreeSet<String> =
        classes.iter().map(|c| c.id.to_string()).collect();
    assert_eq!(
        seen_classes, seeded,
        "every seeded class has a fixture directory"
    );
    assert!(total >= 45, "corpus has only {total} files");
    assert!(wrong.is_empty(), "misdetected:\n{}", wrong.join("\n"));
}

#[test]
fn galaxy_transcript_workflow_matches_hand_counts() {
    let doc = fs::read(fixtures().join("classes/galaxy/find-transcripts-tsi.ga")).unwrap();
    let s = parse_galaxy(&doc).unwrap();
    assert_eq!(s.name.as_deref(), Some("Find transcripts - TSI"));

    let inputs: Vec<&str> = s.inputs.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(
        inputs,
        ["Reference genome", "RNA-seq reads", "Gene annotation"]
    );
    assert_eq!(s.inputs[1].data_type.as_deref(), Some("File[]"));

    assert_eq!(s.steps.len(), 8);
    let outputs: Vec<&str> = s.outputs.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(
        outputs,
        [
            "merged_transcripts",
            "transcript_comparison",
            "transcript_sequences"
        ]
    );

    let mut tools: Vec<&str> = s
        .raw_tool_ids
        .iter()
        .map(|t| t.trim_end_matches('/').rsplit('/').nth(1).unwrap())
        .collect();
    tools.sort();
    assert_eq!(
        tools,
        [
            "gffcompare",
            "gffread",
            "hisat2",
            "stringtie",
            "stringtie_merge"
        ]
    );
}

#[test]
fn snakemake_rules_follow_include_order() {
    let repo = fixtures().join("repos/dna-seq-varlociraptor");
    let mut files = Vec::new();
    walk(&repo, &mut files);
    let mut tree = FileTree::new();
    for f in files {
        let rel = f
            .strip_prefix(&repo)
            .unwrap()
            .to_string_lossy()
            .replace('\\', "/");
        tree.insert(rel, fs::read(&f).unwrap());
    }
    let s = parse_snakemake(&tree).unwrap();
    let rules: Vec<&str> = s.steps.iter().map(|st| st.id.as_str()).collect();
    assert_eq!(
        rules,
        [
            "map_reads",
            "mark_duplicates",
            "varlociraptor_preprocess",
            "varlociraptor_call",
            "all"
        ]
    );
}

#[test]
fn cwl_fixture_formats_become_edam_ids() {
    let doc = fs::read(fixtures().join("classes/cwl/count-lines.cwl")).unwrap();
    let a = parse_cwl_abstract(&doc).unwrap();
    let formats: Vec<_> = a
        .structure
        .inputs
        .iter()
        .filter_map(|p| p.edam_format.clone())
        .collect();
    assert!(formats.contains(&"format_1964".to_string()), "{formats:?}");
}

#[test]
fn a_cwl_tool_is_not_a_workflow() {
    let doc = fs::read(fixtures().join("classes/cwl/tool.cwl")).unwrap();
    assert!(parse_cwl_abstract(&doc).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 100,
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        ..ProptestConfig::default()
    })]

    #[test]
    fn abstract_cwl_keeps_ids_and_counts(s in structure()) {
        abstract_cwl_round_trip(&s)?;
    }
}
