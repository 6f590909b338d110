use crate::model::{ClassId, ClassRegistry};

use super::{check_size, ParseError, DEFAULT_MAX_PARSE_BYTES};

/// Content probes only look at this many leading bytes.
pub const PROBE_WINDOW: usize = 64 * 1024;

/// Determines the workflow class of a file.
///
/// All content probes are tried first, in class order, then all file-name
/// globs. Nothing matching yields `other`.
pub fn detect_class(
    classes: &ClassRegistry,
    filename: &str,
    content: &[u8],
) -> Result<ClassId, ParseError> {
    detect_class_with_limit(classes, filename, content, DEFAULT_MAX_PARSE_BYTES)
}

pub fn detect_class_with_limit(
    classes: &ClassRegistry,
    filename: &str,
    content: &[u8],
    max_bytes: usize,
) -> Result<ClassId, ParseError> {
    check_size(content, max_bytes)?;
    let name = filename.rsplit('/').next().unwrap_or(filename);
    let head = &content[..content.len().min(PROBE_WINDOW)];

    for (id, rules) in classes.compiled() {
        let hit = rules.iter().any(|r| match &r.probe {
            Some(p) => p.is_match(head) && r.glob.as_ref().is_none_or(|g| g.is_match(name)),
            None => false,
        });
        if hit {
            return Ok(id.clone());
        }
    }
    for (id, rules) in classes.compiled() {
        let hit = rules
            .iter()
            .any(|r| r.probe.is_none() && r.glob.as_ref().is_some_and(|g| g.is_match(name)));
        if hit {
            return Ok(id.clone());
        }
    }
    Ok(ClassId::other())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect(name: &str, content: &str) -> String {
        detect_class(&ClassRegistry::seeded(), name, content.as_bytes())
            .unwrap()
            .to_string()
    }

    #[test]
    fn galaxy_probe_wins_over_extension() {
        assert_eq!(
            detect("wf.json", r#"{"a_galaxy_workflow": "true"}"#),
            "galaxy"
        );
        assert_eq!(detect("wf.ga", "{}"), "galaxy");
    }

    #[test]
    fn nextflow_by_name_any_content() {
        assert_eq!(detect("main.nf", ""), "nextflow");
        assert_eq!(detect("dir/nextflow.config", "x"), "nextflow");
    }

    #[test]
    fn fallback_is_other() {
        assert_eq!(detect("notes.txt", ""), "other");
        assert_eq!(detect("README.md", "# hello"), "other");
    }

    #[test]
    fn probes_need_their_glob_when_both_given() {
        // The Jupyter probe is bound to *.ipynb, so a JSON file mentioning
        // nbformat stays unclassified.
        assert_eq!(detect("x.json", r#"{"nbformat": 4}"#), "other");
        assert_eq!(detect("x.ipynb", r#"{"nbformat": 4}"#), "jupyter");
    }

    #[test]
    fn shebangs() {
        assert_eq!(detect("run", "#!/usr/bin/env python3\nprint(1)"), "python");
        assert_eq!(detect("run", "#!/bin/bash\necho"), "bash");
    }

    #[test]
    fn oversize_is_rejected() {
        let err = detect_class_with_limit(&ClassRegistry::seeded(), "a.cwl", &[b'x'; 11], 10);
        assert!(matches!(
            err,
            Err(ParseError::SizeLimit {
                size: 11,
                limit: 10
            })
        ));
    }
}
