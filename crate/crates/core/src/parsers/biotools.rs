//! Mapping raw tool identifiers to bio.tools ids.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::model::vocab::data_lines;
use crate::model::ToolRef;

const BIOTOOLS_IDS: &str = include_str!("../../data/biotools_ids.txt");
const GALAXY_TABLE: &str = include_str!("../../data/galaxy_biotools.tsv");

/// Resolves tool ids by exact table lookup first. Failing that, the tool name
/// (the `<tool>` segment of a Galaxy toolshed id, or the whole id otherwise)
/// is lowercased and accepted only if it is a known bio.tools id.
#[derive(Debug, Clone, Default)]
pub struct BiotoolsMapper {
    known: HashSet<String>,
    table: HashMap<String, String>,
}

/// `toolshed.g2.bx.psu.edu/repos/<owner>/<repo>/<tool>/<version>` split into
/// its parts.
struct ToolshedId<'a> {
    tool: &'a str,
    versionless: String,
}

fn toolshed_parts(raw: &str) -> Option<ToolshedId<'_>> {
    let parts: Vec<&str> = raw.split('/').collect();
    if parts.len() < 5 || parts[1] != "repos" {
        return None;
    }
    Some(ToolshedId {
        tool: parts[4],
        versionless: parts[..5].join("/"),
    })
}

impl BiotoolsMapper {
    pub fn new(
        known: impl IntoIterator<Item = String>,
        table: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        BiotoolsMapper {
            known: known.into_iter().map(|k| k.to_ascii_lowercase()).collect(),
            table: table.into_iter().collect(),
        }
    }

    /// The mapper built from the bundled id list and Galaxy table.
    pub fn bundled() -> &'static BiotoolsMapper {
        static MAPPER: OnceLock<BiotoolsMapper> = OnceLock::new();
        MAPPER.get_or_init(|| {
            let table = data_lines(GALAXY_TABLE).filter_map(|l| {
                let (k, v) = l.split_once('\t')?;
                Some((k.trim().to_string(), v.trim().to_string()))
            });
            BiotoolsMapper::new(data_lines(BIOTOOLS_IDS).map(str::to_string), table)
        })
    }

    pub fn is_known(&self, id: &str) -> bool {
        self.known.contains(&id.to_ascii_lowercase())
    }

    pub fn map(&self, raw: &str) -> Option<String> {
        let raw = raw.trim();
        if let Some(hit) = self.table.get(raw) {
            return Some(hit.clone());
        }
        let toolshed = toolshed_parts(raw);
        if let Some(ts) = &toolshed {
            if let Some(hit) = self.table.get(&ts.versionless) {
                return Some(hit.clone());
            }
        }

        let candidate = toolshed
            .map(|ts| ts.tool)
            .unwrap_or(raw)
            .to_ascii_lowercase();
        self.known.contains(&candidate).then_some(candidate)
    }

    pub fn tool_ref(&self, raw: &str) -> ToolRef {
        let display_name = toolshed_parts(raw)
            .map(|ts| ts.tool.to_string())
            .unwrap_or_else(|| raw.to_string());
        ToolRef {
            raw_id: raw.to_string(),
            biotools_id: self.map(raw),
            display_name,
        }
    }
}

/// Maps each raw id with the bundled mapper. Unmapped ids are kept with
/// `biotools_id: None`.
pub fn map_tools_to_biotools(raw_ids: &[String]) -> Vec<ToolRef> {
    let mapper = BiotoolsMapper::bundled();
    raw_ids.iter().map(|r| mapper.tool_ref(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_beats_heuristic() {
        let m = BiotoolsMapper::bundled();
        assert_eq!(
            m.map("toolshed.g2.bx.psu.edu/repos/iuc/rgrnastar/rna_star/2.7.10b")
                .as_deref(),
            Some("star")
        );
        assert_eq!(
            m.map("toolshed.g2.bx.psu.edu/repos/devteam/bwa/bwa_mem/0.7.17.2")
                .as_deref(),
            Some("bwa")
        );
    }

    #[test]
    fn heuristic_segments() {
        let m = BiotoolsMapper::bundled();
        assert_eq!(
            m.map("toolshed.g2.bx.psu.edu/repos/iuc/stringtie/stringtie/2.2.1")
                .as_deref(),
            Some("stringtie")
        );
        assert_eq!(
            m.map("toolshed.g2.bx.psu.edu/repos/iuc/bwa/bwa/0.7.17")
                .as_deref(),
            Some("bwa")
        );
        assert_eq!(m.map("bio/samtools/sort"), None);
        assert_eq!(m.map("Minimap2").as_deref(), Some("minimap2"));
        assert_eq!(m.map("cat1"), None);
    }

    #[test]
    fn unmapped_kept() {
        let refs = map_tools_to_biotools(&["no_such_tool_xyz".into()]);
        assert_eq!(refs.len(), 1);
        assert!(refs[0].biotools_id.is_none());
        assert_eq!(refs[0].raw_id, "no_such_tool_xyz");
    }

    #[test]
    fn custom_mapper() {
        let m = BiotoolsMapper::new(
            ["foo".to_string()],
            [("x/y".to_string(), "bar".to_string())],
        );
        assert_eq!(m.map("x/y").as_deref(), Some("bar"));
        assert_eq!(m.map("FOO").as_deref(), Some("foo"));
        assert!(m.is_known("Foo"));
    }
}
