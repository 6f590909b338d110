//! Workflow classes (languages / management systems) and their detection
//! rules.

use globset::{Glob, GlobMatcher};
use regex::bytes::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ids::ClassId;

/// One detection rule. A rule with a `probe` is a content probe and is tried
/// before any glob-only rule. When both are set, both must match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRule {
    /// Glob over the file name (not the full path).
    #[serde(default)]
    pub glob: Option<String>,
    /// Regex over the leading bytes of the file.
    #[serde(default)]
    pub probe: Option<String>,
}

impl DetectionRule {
    pub fn glob(g: &str) -> Self {
        DetectionRule {
            glob: Some(g.to_string()),
            probe: None,
        }
    }

    pub fn probe(p: &str) -> Self {
        DetectionRule {
            glob: None,
            probe: Some(p.to_string()),
        }
    }

    pub fn both(g: &str, p: &str) -> Self {
        DetectionRule {
            glob: Some(g.to_string()),
            probe: Some(p.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowClass {
    pub id: ClassId,
    pub display_name: String,
    /// GA4GH TRS descriptor type, when the standard defines one.
    #[serde(default)]
    pub trs_descriptor_type: Option<String>,
    #[serde(default)]
    pub detection_rules: Vec<DetectionRule>,
    /// Workflow languages rank above plain scripts when proposing a main file.
    #[serde(default)]
    pub is_workflow_language: bool,
    #[serde(default)]
    pub homepage: Option<String>,
}

impl WorkflowClass {
    /// TRS descriptor type, falling back to `PLAIN_<ID>`.
    pub fn descriptor_type(&self) -> String {
        self.trs_descriptor_type
            .clone()
            .unwrap_or_else(|| format!("PLAIN_{}", self.id.as_str().to_ascii_uppercase()))
    }
}

#[derive(Debug, Error)]
pub enum ClassError {
    #[error("workflow class `{0}` already registered")]
    Duplicate(ClassId),
    #[error("invalid glob `{0}`: {1}")]
    Glob(String, globset::Error),
    #[error("invalid probe `{0}`: {1}")]
    Probe(String, regex::Error),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledRule {
    pub glob: Option<GlobMatcher>,
    pub probe: Option<Regex>,
}

#[derive(Debug, Clone)]
struct Entry {
    class: WorkflowClass,
    rules: Vec<CompiledRule>,
}

/// Ordered set of known workflow classes.
#[derive(Debug, Clone)]
pub struct ClassRegistry {
    entries: Vec<Entry>,
}

fn class(
    id: &str,
    name: &str,
    trs: Option<&str>,
    wfms: bool,
    homepage: &str,
    rules: Vec<DetectionRule>,
) -> WorkflowClass {
    WorkflowClass {
        id: ClassId::new(id),
        display_name: name.to_string(),
        trs_descriptor_type: trs.map(str::to_string),
        detection_rules: rules,
        is_workflow_language: wfms,
        homepage: Some(homepage.to_string()),
    }
}

/// The seeded classes, in detection order.
pub fn seeded_classes() -> Vec<WorkflowClass> {
    use DetectionRule as R;
    vec![
        class(
            "galaxy",
            "Galaxy",
            Some("GALAXY"),
            true,
            "https://galaxyproject.org/",
            vec![
                R::probe(r#""a_galaxy_workflow"\s*:\s*"true""#),
                R::probe(r"(?m)^class:\s*GalaxyWorkflow\b"),
                R::glob("*.ga"),
                R::glob("*.gxwf.yml"),
            ],
        ),
        class(
            "cwl",
            "Common Workflow Language",
            Some("CWL"),
            true,
            "https://www.commonwl.org/",
            vec![R::probe(r#"(?m)^\s*"?cwlVersion"?\s*:"#), R::glob("*.cwl")],
        ),
        class(
            "nextflow",
            "Nextflow",
            Some("NFL"),
            true,
            "https://www.nextflow.io/",
            vec![
                R::probe(r"(?m)^\s*nextflow\.enable\.dsl\s*="),
                R::glob("*.nf"),
                R::glob("nextflow.config"),
            ],
        ),
        class(
            "snakemake",
            "Snakemake",
            Some("SMK"),
            true,
            "https://snakemake.github.io/",
            vec![
                R::glob("Snakefile"),
                R::glob("*.smk"),
                R::glob("*.snakefile"),
            ],
        ),
        class(
            "jupyter",
            "Jupyter",
            None,
            false,
            "https://jupyter.org/",
            vec![R::both("*.ipynb", r#""nbformat"\s*:"#), R::glob("*.ipynb")],
        ),
        class(
            "python",
            "Python",
            None,
            false,
            "https://www.python.org/",
            vec![
                R::probe(r"\A#!\s*/usr/bin/env\s+python[0-9.]*\b"),
                R::probe(r"\A#!\s*/usr/bin/python[0-9.]*\b"),
                R::glob("*.py"),
            ],
        ),
        class(
            "bash",
            "Bash",
            None,
            false,
            "https://www.gnu.org/software/bash/",
            vec![
                R::probe(r"\A#!\s*/bin/(ba)?sh\b"),
                R::probe(r"\A#!\s*/usr/bin/env\s+(ba)?sh\b"),
                R::glob("*.sh"),
                R::glob("*.bash"),
            ],
        ),
        class(
            "wdl",
            "Workflow Description Language",
            Some("WDL"),
            true,
            "https://openwdl.org/",
            vec![R::glob("*.wdl")],
        ),
        class(
            "other",
            "Other",
            None,
            false,
            "https://workflowhub.eu/workflow_classes",
            vec![],
        ),
    ]
}

fn compile(class: &WorkflowClass) -> Result<Vec<CompiledRule>, ClassError> {
    class
        .detection_rules
        .iter()
        .map(|r| {
            let glob = r
                .glob
                .as_ref()
                .map(|g| {
                    Glob::new(g)
                        .map(|g| g.compile_matcher())
                        .map_err(|e| ClassError::Glob(g.clone(), e))
                })
                .transpose()?;
            let probe = r
                .probe
                .as_ref()
                .map(|p| Regex::new(p).map_err(|e| ClassError::Probe(p.clone(), e)))
                .transpose()?;
            Ok(CompiledRule { glob, probe })
        })
        .collect()
}

impl ClassRegistry {
    pub fn seeded() -> Self {
        let mut reg = ClassRegistry {
            entries: Vec::new(),
        };
        for c in seeded_classes() {
            reg.register(c).expect("seeded classes are valid");
        }
        reg
    }

    /// Adds a class at runtime. Its rules are tried after existing classes'.
    pub fn register(&mut self, class: WorkflowClass) -> Result<(), ClassError> {
        if self.get(&class.id).is_some() {
            return Err(ClassError::Duplicate(class.id));
        }
        let rules = compile(&class)?;
        self.entries.push(Entry { class, rules });
        Ok(())
    }

    pub fn get(&self, id: &ClassId) -> Option<&WorkflowClass> {
        self.entries
            .iter()
            .find(|e| &e.class.id == id)
            .map(|e| &e.class)
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        self.get(id).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = &WorkflowClass> {
        self.entries.iter().map(|e| &e.class)
    }

    /// Looks a class up by id or display name, case-insensitively.
    pub fn find_by_name(&self, name: &str) -> Option<&WorkflowClass> {
        let name = name.trim();
        self.iter().find(|c| {
            c.id.as_str().eq_ignore_ascii_case(name) || c.display_name.eq_ignore_ascii_case(name)
        })
    }

    pub fn descriptor_type(&self, id: &ClassId) -> String {
        self.get(id)
            .map(WorkflowClass::descriptor_type)
            .unwrap_or_else(|| format!("PLAIN_{}", id.as_str().to_ascii_uppercase()))
    }

    pub(crate) fn compiled(&self) -> impl Iterator<Item = (&ClassId, &[CompiledRule])> {
        self.entries
            .iter()
            .map(|e| (&e.class.id, e.rules.as_slice()))
    }
}

impl Default for ClassRegistry {
    fn default() -> Self {
        ClassRegistry::seeded()
    }
}
