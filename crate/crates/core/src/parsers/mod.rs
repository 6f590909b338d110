//! Workflow source parsing.
//!
//! Each parser turns a workflow document into a [`WorkflowStructure`]: the
//! workflow's inputs, outputs, steps and the tool identifiers it mentions.
//! Depth varies by language; Galaxy and CWL are parsed fully, Nextflow and
//! Snakemake only for names.

mod biotools;
mod cwl;
mod detect;
mod galaxy;
mod nextflow;
mod snakemake;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ClassId, FileTree, ToolRef};

pub use biotools::{map_tools_to_biotools, BiotoolsMapper};
pub use cwl::{generate_abstract_cwl, parse_cwl_abstract, AbstractCwl};
pub use detect::{detect_class, detect_class_with_limit, PROBE_WINDOW};
pub use galaxy::parse_galaxy;
pub use nextflow::parse_nextflow_manifest;
pub use snakemake::parse_snakemake;

/// Files larger than this are stored but never parsed.
pub const DEFAULT_MAX_PARSE_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("input is {size} bytes, over the {limit} byte parse limit")]
    SizeLimit { size: usize, limit: usize },
    #[error("{format} syntax error at line {line}, column {column}: {message}")]
    Syntax {
        format: &'static str,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("document class is `{0}`, not Workflow")]
    NotAWorkflow(String),
    #[error("required file not found: {0}")]
    NotFound(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
}

impl ParseError {
    pub(crate) fn from_json(e: serde_json::Error) -> Self {
        ParseError::Syntax {
            format: "JSON",
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    pub(crate) fn from_yaml(e: serde_yaml::Error) -> Self {
        let (line, column) = e
            .location()
            .map(|l| (l.line(), l.column()))
            .unwrap_or((0, 0));
        ParseError::Syntax {
            format: "YAML",
            line,
            column,
            message: e.to_string(),
        }
    }
}

pub(crate) fn check_size(content: &[u8], limit: usize) -> Result<(), ParseError> {
    if content.len() > limit {
        Err(ParseError::SizeLimit {
            size: content.len(),
            limit,
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub id: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub data_type: Option<String>,
    /// Bare EDAM format id, e.g. `format_1929`.
    #[serde(default)]
    pub edam_format: Option<String>,
    /// Step producing this output, when declared.
    #[serde(default)]
    pub source: Option<String>,
}

impl PortDecl {
    pub fn new(id: impl Into<String>) -> Self {
        PortDecl {
            id: id.into(),
            ..PortDecl::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepDecl {
    pub id: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub tool_ref: Option<ToolRef>,
    #[serde(default)]
    pub subworkflow: Option<String>,
}

impl StepDecl {
    pub fn new(id: impl Into<String>) -> Self {
        StepDecl {
            id: id.into(),
            ..StepDecl::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowStructure {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    /// The workflow's own release version, when the source declares one.
    #[serde(default)]
    pub version: Option<String>,
    #[serde(default)]
    pub inputs: Vec<PortDecl>,
    #[serde(default)]
    pub outputs: Vec<PortDecl>,
    #[serde(default)]
    pub steps: Vec<StepDecl>,
    #[serde(default)]
    pub raw_tool_ids: Vec<String>,
    #[serde(default)]
    pub language_version: Option<String>,
}

impl WorkflowStructure {
    /// Checks id uniqueness and output-source references.
    pub fn check(&self) -> Result<(), ParseError> {
        fn unique<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<(), ParseError> {
            let mut seen = HashSet::new();
            for id in ids {
                if id.trim().is_empty() {
                    return Err(ParseError::InvalidStructure(format!("empty {what} id")));
                }
                if !seen.insert(id) {
                    return Err(ParseError::InvalidStructure(format!(
                        "duplicate {what} id `{id}`"
                    )));
                }
            }
            Ok(())
        }
        unique("input", self.inputs.iter().map(|p| p.id.as_str()))?;
        unique("output", self.outputs.iter().map(|p| p.id.as_str()))?;
        unique("step", self.steps.iter().map(|s| s.id.as_str()))?;

        for s in &self.steps {
            if s.tool_ref.is_some() && s.subworkflow.is_some() {
                return Err(ParseError::InvalidStructure(format!(
                    "step `{}` has both a tool and a subworkflow",
                    s.id
                )));
            }
        }
        for o in &self.outputs {
            if let Some(src) = &o.source {
                if !self.steps.iter().any(|s| &s.id == src) {
                    return Err(ParseError::InvalidStructure(format!(
                        "output `{}` references unknown step `{src}`",
                        o.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parses the main workflow of a tree according to its class. Returns
/// `Ok(None)` for classes without a structure parser.
pub fn parse_structure(
    class: &ClassId,
    files: &FileTree,
    main_path: &str,
) -> Result<Option<WorkflowStructure>, ParseError> {
    let main = || {
        files
            .bytes(main_path)
            .ok_or_else(|| ParseError::NotFound(main_path.to_string()))
    };
    match class.as_str() {
        "galaxy" => parse_galaxy(main()?).map(Some),
        "cwl" => parse_cwl_abstract(main()?).map(|a| Some(a.structure)),
        "nextflow" => parse_nextflow_manifest(files).map(Some),
        "snakemake" => parse_snakemake(files).map(Some),
        _ => Ok(None),
    }
}

/// Deduplicates while keeping first-seen order.
pub(crate) fn dedup_ordered(items: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    items
        .into_iter()
        .filter(|i| seen.insert(i.clone()))
        .collect()
}
