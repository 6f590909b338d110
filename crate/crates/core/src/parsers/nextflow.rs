//! Nextflow pipelines, read only as far as the `manifest` settings.

use std::sync::OnceLock;

use regex::Regex;

use super::{check_size, ParseError, WorkflowStructure, DEFAULT_MAX_PARSE_BYTES};
use crate::model::FileTree;

fn block_start() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\s*manifest\s*\{").unwrap())
}

fn assignment() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Triple-quoted strings first so `"""x"""` is not read as an empty `""`.
    RE.get_or_init(|| {
        Regex::new(
            r#"(?s)(?:^|\n)\s*(?:manifest\.)?(\w+)\s*=\s*(?:"""(.*?)"""|'''(.*?)'''|"((?:[^"\\\n]|\\.)*)"|'((?:[^'\\\n]|\\.)*)')"#,
        )
        .unwrap()
    })
}

/// Body of the first `manifest { ... }` block, honouring nested braces and
/// skipping braces inside quotes.
fn manifest_block(text: &str) -> Option<&str> {
    let m = block_start().find(text)?;
    let body_start = m.end();
    let mut depth = 1usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in text[body_start..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[body_start..body_start + i]);
                }
            }
            _ => {}
        }
    }
    None
}

fn apply(s: &mut WorkflowStructure, key: &str, value: String) {
    let slot = match key {
        "name" => &mut s.name,
        "description" => &mut s.description,
        "version" => &mut s.version,
        "nextflowVersion" => &mut s.language_version,
        _ => return,
    };
    if slot.is_none() {
        *slot = Some(value);
    }
}

fn read_manifest(s: &mut WorkflowStructure, text: &str) {
    if let Some(block) = manifest_block(text) {
        for c in assignment().captures_iter(block) {
            let value = (2..=5)
                .find_map(|i| c.get(i))
                .map(|m| m.as_str().to_string());
            if let Some(v) = value {
                apply(s, &c[1], v);
            }
        }
    }
    for c in assignment().captures_iter(text) {
        if c.get(0).is_some_and(|m| m.as_str().contains("manifest.")) {
            let value = (2..=5)
                .find_map(|i| c.get(i))
                .map(|m| m.as_str().to_string());
            if let Some(v) = value {
                apply(s, &c[1], v);
            }
        }
    }
}

/// The least nested of `paths`, ties broken by path order.
pub(crate) fn shallowest(mut paths: Vec<&str>) -> Option<String> {
    paths.sort_by_key(|p| (p.matches('/').count(), *p));
    paths.first().map(|p| p.to_string())
}

/// Reads `name`, `description`, `version` and `nextflowVersion` from the
/// manifest in `nextflow.config` (or, failing that, `main.nf`). Steps and
/// tools are not extracted.
pub fn parse_nextflow_manifest(files: &FileTree) -> Result<WorkflowStructure, ParseError> {
    let find = |name: &str| {
        files
            .get(name)
            .map(|_| name.to_string())
            .or_else(|| shallowest(files.find_by_name(name)))
    };
    let config = find("nextflow.config");
    let main = find("main.nf");
    if config.is_none() && main.is_none() {
        return Err(ParseError::NotFound("nextflow.config or main.nf".into()));
    }

    let mut s = WorkflowStructure::default();
    for path in config.iter().chain(main.iter()) {
        let Some(bytes) = files.bytes(path) else {
            continue;
        };
        check_size(bytes, DEFAULT_MAX_PARSE_BYTES)?;
        read_manifest(&mut s, &String::from_utf8_lossy(bytes));
    }
    Ok(s)
}
