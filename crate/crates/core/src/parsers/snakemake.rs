//! Snakemake workflows, read only as far as rule names.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use super::nextflow::shallowest;
use super::{check_size, ParseError, StepDecl, WorkflowStructure, DEFAULT_MAX_PARSE_BYTES};
use crate::model::{normalize_path, FileTree};

fn rule_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\s*rule\s+([A-Za-z_][A-Za-z0-9_]*)\s*:").unwrap())
}

fn include_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?m)^\s*include\s*:\s*["']([^"']+)["']"#).unwrap())
}

/// Resolves `rel` against the directory of `from`, folding `..` segments.
fn join(from: &str, rel: &str) -> String {
    let mut parts: Vec<&str> = from.split('/').collect();
    parts.pop();
    for seg in rel.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    normalize_path(&parts.join("/"))
}

fn collect(
    files: &FileTree,
    path: &str,
    seen: &mut HashSet<String>,
    steps: &mut Vec<StepDecl>,
) -> Result<(), ParseError> {
    if !seen.insert(path.to_string()) {
        return Ok(());
    }
    let Some(bytes) = files.bytes(path) else {
        return Ok(());
    };
    check_size(bytes, DEFAULT_MAX_PARSE_BYTES)?;
    let text = String::from_utf8_lossy(bytes);
    // Includes are expanded where they appear, so steps keep source order.
    let mut events: Vec<(usize, Result<String, String>)> = rule_re()
        .captures_iter(&text)
        .map(|c| (c.get(0).unwrap().start(), Ok(c[1].to_string())))
        .collect();
    events.extend(
        include_re()
            .captures_iter(&text)
            .map(|c| (c.get(0).unwrap().start(), Err(c[1].to_string()))),
    );
    events.sort_by_key(|(pos, _)| *pos);
    for (_, ev) in events {
        match ev {
            Ok(rule) => {
                if !steps.iter().any(|s| s.id == rule) {
                    steps.push(StepDecl::new(rule));
                }
            }
            Err(include) => collect(files, &join(path, &include), seen, steps)?,
        }
    }
    Ok(())
}

/// Lists rules of the main `Snakefile` (at the root, under `workflow/`, or
/// the shallowest elsewhere), following `include:` directives.
pub fn parse_snakemake(files: &FileTree) -> Result<WorkflowStructure, ParseError> {
    let main = ["Snakefile", "workflow/Snakefile"]
        .into_iter()
        .find(|p| files.contains(p))
        .map(str::to_string)
        .or_else(|| shallowest(files.find_by_name("Snakefile")))
        .ok_or_else(|| ParseError::NotFound("Snakefile".into()))?;

    let mut steps = Vec::new();
    collect(files, &main, &mut HashSet::new(), &mut steps)?;
    Ok(WorkflowStructure {
        steps,
        ..WorkflowStructure::default()
    })
}
