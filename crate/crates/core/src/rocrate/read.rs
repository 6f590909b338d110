use std::collections::{BTreeMap, HashSet};
use std::io::{Cursor, Read};

use serde_json::Value;
use zip::ZipArchive;

use super::{
    as_list, has_type, id_to_path, ref_id, CrateError, DEFAULT_MAX_UNPACKED_BYTES, METADATA_FILE,
    SPDX_IRI_PREFIX,
};
use crate::model::vocab::{edam_bare_id, edam_kind_of, EdamKind};
use crate::model::{
    ClassId, ClassRegistry, Creator, EntryId, FileTree, Maturity, Orcid, TeamId, ToolRef, UserId,
};

const BIOTOOLS_PREFIXES: [&str; 2] = ["https://bio.tools/", "http://bio.tools/"];

/// Entry-level metadata recovered from a crate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrateMetadata {
    pub title: Option<String>,
    pub description: Option<String>,
    pub license: Option<String>,
    pub creators: Vec<Creator>,
    /// Resolved from the main entity's `programmingLanguage`.
    pub class: Option<ClassId>,
    pub language_name: Option<String>,
    pub edam_topics: Vec<String>,
    pub edam_operations: Vec<String>,
    pub tags: Vec<String>,
    pub maturity: Option<Maturity>,
    pub tool_refs: Vec<ToolRef>,
    /// `isBasedOn` IRIs, registered entries or not.
    pub based_on: Vec<String>,
    pub custom_citation: Option<String>,
    /// `producer` IRIs.
    pub producers: Vec<String>,
    /// `contributor` IRIs.
    pub contributors: Vec<String>,
    /// Free-text `contributor` values.
    pub other_contributors: Option<String>,
    pub source_url: Option<String>,
}

fn ids_under(iris: &[String], base_url: &str, segment: &str) -> Vec<u64> {
    let prefix = format!("{}/{segment}/", base_url.trim_end_matches('/'));
    iris.iter()
        .filter_map(|iri| iri.strip_prefix(&prefix))
        .filter_map(|rest| rest.split(['?', '#', '/']).next()?.parse().ok())
        .collect()
}

impl CrateMetadata {
    /// `isBasedOn` links that point at entries of the registry at `base_url`.
    pub fn attribution_ids(&self, base_url: &str) -> Vec<EntryId> {
        ids_under(&self.based_on, base_url, "workflows")
            .into_iter()
            .map(EntryId)
            .collect()
    }

    /// `contributor` links that point at users of the registry at `base_url`.
    pub fn contributor_ids(&self, base_url: &str) -> Vec<UserId> {
        ids_under(&self.contributors, base_url, "people")
            .into_iter()
            .map(UserId)
            .collect()
    }

    /// `producer` links that point at teams of the registry at `base_url`.
    pub fn team_ids(&self, base_url: &str) -> Vec<TeamId> {
        ids_under(&self.producers, base_url, "projects")
            .into_iter()
            .map(TeamId)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrateContents {
    pub metadata: CrateMetadata,
    /// Archive files, without `ro-crate-metadata.json`.
    pub files: FileTree,
    pub main_workflow_path: String,
    pub diagram_path: Option<String>,
    pub abstract_cwl_path: Option<String>,
    pub conforms_to: Vec<String>,
    /// Entities that have no counterpart in the entry model, kept verbatim.
    pub extras: Vec<Value>,
    pub raw_metadata: Value,
}

/// Unzipped archive: the metadata bytes (if any) and the remaining files.
pub(crate) struct Unpacked {
    pub metadata: Option<Vec<u8>>,
    pub files: FileTree,
}

pub(crate) fn unpack(archive: &[u8], limit: u64) -> Result<Unpacked, CrateError> {
    let mut zip = ZipArchive::new(Cursor::new(archive))?;
    let mut raw: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut total: u64 = 0;
    for i in 0..zip.len() {
        let file = zip.by_index(i)?;
        if file.is_dir() {
            continue;
        }
        let name = file
            .enclosed_name()
            .ok_or_else(|| {
                CrateError::InvalidCrate(format!(
                    "unsafe path `{}`",
                    String::from_utf8_lossy(file.name_raw())
                ))
            })?
            .to_string_lossy()
            .replace('\\', "/");
        if name.starts_with("__MACOSX/") {
            continue;
        }
        let mut buf = Vec::new();
        file.take(limit - total + 1)
            .read_to_end(&mut buf)
            .map_err(|e| CrateError::Zip(e.to_string()))?;
        total += buf.len() as u64;
        if total > limit {
            return Err(CrateError::SizeLimit { limit });
        }
        raw.insert(name, buf);
    }

    // A single wrapping directory is tolerated.
    if !raw.contains_key(METADATA_FILE) {
        let first: HashSet<&str> = raw
            .keys()
            .map(|k| k.split('/').next().unwrap_or(""))
            .collect();
        if first.len() == 1 {
            let dir = first.into_iter().next().unwrap_or_default().to_string();
            let prefix = format!("{dir}/");
            if raw.contains_key(&format!("{prefix}{METADATA_FILE}")) {
                raw = raw
                    .into_iter()
                    .filter_map(|(k, v)| k.strip_prefix(&prefix).map(|k| (k.to_string(), v)))
                    .collect();
            }
        }
    }

    let metadata = raw.remove(METADATA_FILE);
    let mut files = FileTree::new();
    for (path, bytes) in raw {
        files.insert(path, bytes);
    }
    Ok(Unpacked { metadata, files })
}

/// The parts of a crate's metadata document the readers care about.
pub(crate) struct Graph<'a> {
    pub entities: BTreeMap<&'a str, &'a Value>,
    pub order: Vec<&'a Value>,
    pub descriptor: Option<&'a Value>,
    pub root: Option<&'a Value>,
}

impl<'a> Graph<'a> {
    pub fn new(doc: &'a Value) -> Graph<'a> {
        let order: Vec<&Value> = as_list(doc.get("@graph"))
            .into_iter()
            .filter(|e| e.is_object())
            .collect();
        let entities: BTreeMap<&str, &Value> = order
            .iter()
            .filter_map(|e| Some((e.get("@id")?.as_str()?, *e)))
            .collect();
        let descriptor = entities
            .get(METADATA_FILE)
            .or_else(|| entities.get(format!("./{METADATA_FILE}").as_str()))
            .copied();
        let root_id = descriptor
            .and_then(|d| d.get("about"))
            .and_then(ref_id)
            .unwrap_or("./");
        let root = entities.get(root_id).copied();
        Graph {
            entities,
            order,
            descriptor,
            root,
        }
    }

    pub fn get(&self, v: &Value) -> Option<&'a Value> {
        ref_id(v).and_then(|id| self.entities.get(id).copied())
    }

    pub fn main_entity_id(&self) -> Option<&'a str> {
        self.root?.get("mainEntity").and_then(ref_id)
    }
}

fn text(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) if !s.trim().is_empty() => Some(s.clone()),
        Value::Array(items) => items.iter().find_map(|i| text(Some(i))),
        _ => None,
    }
}

fn license_id(v: &Value, graph: &Graph) -> Option<String> {
    let raw = match v {
        Value::String(s) => s.clone(),
        Value::Object(_) => {
            let id = ref_id(v)?;
            // Local license entities carry the real identifier.
            match graph
                .get(v)
                .and_then(|e| text(e.get("identifier")).or(text(e.get("url"))))
            {
                Some(ident) if id.starts_with('#') => ident,
                _ => id.to_string(),
            }
        }
        _ => return None,
    };
    let bare = raw
        .strip_prefix(SPDX_IRI_PREFIX)
        .or_else(|| raw.strip_prefix("http://spdx.org/licenses/"))
        .map(|s| s.trim_end_matches(".html").trim_end_matches('/'))
        .unwrap_or(&raw);
    Some(bare.to_string())
}

fn person(v: &Value, graph: &Graph, used: &mut HashSet<String>) -> Option<Creator> {
    if let Value::String(s) = v {
        if !s.starts_with('#') && !s.contains("://") {
            return Some(Creator::named(s.clone()));
        }
    }
    let id = ref_id(v)?;
    let entity = graph.get(v);
    if entity.is_some() {
        used.insert(id.to_string());
    }
    let orcid = Orcid::parse(id).ok().or_else(|| {
        entity
            .and_then(|e| text(e.get("identifier")))
            .and_then(|i| Orcid::parse(&i).ok())
    });
    let name = entity
        .and_then(|e| text(e.get("name")))
        .or_else(|| {
            let e = entity?;
            let given = text(e.get("givenName"))?;
            Some(match text(e.get("familyName")) {
                Some(f) => format!("{given} {f}"),
                None => given,
            })
        })
        .or_else(|| orcid.as_ref().map(|o| o.to_string()))?;
    let affiliation = entity.and_then(|e| match e.get("affiliation")? {
        Value::String(s) => Some(s.clone()),
        a => graph.get(a).and_then(|org| text(org.get("name"))),
    });
    Some(Creator {
        name,
        orcid,
        affiliation,
    })
}

fn resolve_class(lang: &Value, classes: &ClassRegistry) -> ClassId {
    let id = ref_id(lang).unwrap_or_default();
    let mut candidates: Vec<String> = Vec::new();
    if let Some((_, frag)) = id.rsplit_once('#') {
        candidates.push(frag.to_string());
    }
    for key in ["alternateName", "name", "identifier"] {
        if let Some(t) = text(lang.get(key)) {
            candidates.push(t);
        }
    }
    candidates
        .iter()
        .find_map(|c| classes.find_by_name(c).map(|c| c.id.clone()))
        .unwrap_or_else(ClassId::other)
}

fn tool(v: &Value, graph: &Graph, used: &mut HashSet<String>) -> Option<ToolRef> {
    let id = ref_id(v)?;
    let entity = graph.get(v);
    if entity.is_some() {
        used.insert(id.to_string());
    }
    let biotools_id = entity
        .and_then(|e| e.get("sameAs"))
        .into_iter()
        .flat_map(|s| as_list(Some(s)))
        .filter_map(ref_id)
        .chain([id])
        .find_map(|iri| {
            BIOTOOLS_PREFIXES
                .iter()
                .find_map(|p| iri.strip_prefix(p))
                .map(|b| b.trim_end_matches('/').to_string())
        });
    let name = entity.and_then(|e| text(e.get("name")));
    let raw_id = entity
        .and_then(|e| text(e.get("identifier")))
        .or_else(|| name.clone())
        .unwrap_or_else(|| id.to_string());
    Some(ToolRef {
        display_name: name.unwrap_or_else(|| raw_id.clone()),
        raw_id,
        biotools_id,
    })
}

fn edam_of(values: &[&Value], kind: EdamKind, used: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    for v in values {
        let Some(id) = ref_id(v) else { continue };
        if let Some(bare) = edam_bare_id(id).filter(|b| edam_kind_of(b) == Some(kind)) {
            used.insert(id.to_string());
            if !out.contains(&bare) {
                out.push(bare);
            }
        }
    }
    out
}

pub fn read_crate(archive: &[u8]) -> Result<CrateContents, CrateError> {
    read_crate_with(
        archive,
        &ClassRegistry::seeded(),
        DEFAULT_MAX_UNPACKED_BYTES,
    )
}

pub fn read_crate_with(
    archive: &[u8],
    classes: &ClassRegistry,
    max_unpacked: u64,
) -> Result<CrateContents, CrateError> {
    let Unpacked { metadata, files } = unpack(archive, max_unpacked)?;
    let metadata = metadata.ok_or(CrateError::NotACrate)?;
    let doc: Value = serde_json::from_slice(&metadata)
        .map_err(|e| CrateError::InvalidCrate(format!("metadata is not JSON: {e}")))?;
    let graph = Graph::new(&doc);

    let descriptor = graph
        .descriptor
        .ok_or_else(|| CrateError::InvalidCrate("no metadata descriptor entity".into()))?;
    let root = graph
        .root
        .ok_or_else(|| CrateError::InvalidCrate("no root dataset entity".into()))?;
    let main_id = graph
        .main_entity_id()
        .ok_or_else(|| CrateError::InvalidCrate("root dataset has no mainEntity".into()))?;
    let main_path = id_to_path(main_id);
    if !files.contains(&main_path) {
        return Err(CrateError::InvalidCrate(format!(
            "mainEntity `{main_id}` is not in the archive"
        )));
    }
    let main = graph.entities.get(main_id).copied().unwrap_or(&Value::Null);

    let mut used: HashSet<String> = HashSet::new();
    for id in [METADATA_FILE, main_id] {
        used.insert(id.to_string());
    }
    for e in [descriptor, root] {
        if let Some(id) = e.get("@id").and_then(Value::as_str) {
            used.insert(id.to_string());
        }
    }

    let both = |key: &str| -> Vec<&Value> {
        let mut v = as_list(root.get(key));
        v.extend(as_list(main.get(key)));
        v
    };

    let mut md = CrateMetadata {
        title: text(root.get("name")).or_else(|| text(main.get("name"))),
        description: text(root.get("description")).or_else(|| text(main.get("description"))),
        license: root
            .get("license")
            .or_else(|| main.get("license"))
            .and_then(|l| license_id(l, &graph)),
        maturity: text(root.get("creativeWorkStatus"))
            .or_else(|| text(main.get("creativeWorkStatus")))
            .map(Maturity),
        custom_citation: root
            .get("citation")
            .and_then(Value::as_str)
            .map(str::to_string),
        source_url: root.get("url").and_then(ref_id).map(str::to_string),
        ..CrateMetadata::default()
    };

    let creators = match as_list(root.get("creator")) {
        c if c.is_empty() => as_list(main.get("creator")),
        c => c,
    };
    md.creators = creators
        .into_iter()
        .filter_map(|c| person(c, &graph, &mut used))
        .collect();

    if let Some(lang_ref) = main.get("programmingLanguage") {
        let lang = graph.get(lang_ref).unwrap_or(lang_ref);
        if let Some(id) = ref_id(lang_ref) {
            used.insert(id.to_string());
        }
        md.class = Some(resolve_class(lang, classes));
        md.language_name = text(lang.get("name"));
    }

    md.edam_topics = edam_of(&both("about"), EdamKind::Topic, &mut used);
    md.edam_operations = edam_of(&both("featureList"), EdamKind::Operation, &mut used);

    md.tags = match root.get("keywords") {
        Some(Value::String(s)) => s
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        other => as_list(other)
            .into_iter()
            .filter_map(Value::as_str)
            .map(str::to_string)
            .collect(),
    };

    md.tool_refs = as_list(main.get("softwareRequirements"))
        .into_iter()
        .filter_map(|t| tool(t, &graph, &mut used))
        .collect();

    md.based_on = both("isBasedOn")
        .into_iter()
        .filter_map(ref_id)
        .map(str::to_string)
        .collect();
    md.producers = as_list(root.get("producer"))
        .into_iter()
        .filter_map(ref_id)
        .map(str::to_string)
        .collect();
    for p in &md.producers {
        if graph
            .entities
            .get(p.as_str())
            .is_some_and(|e| has_type(e, "Project") || has_type(e, "Organization"))
        {
            used.insert(p.clone());
        }
    }

    let mut free_text = Vec::new();
    for c in as_list(root.get("contributor")) {
        match c {
            Value::String(s) if !s.starts_with('#') && !s.contains("://") => {
                free_text.push(s.clone())
            }
            other => {
                if let Some(id) = ref_id(other) {
                    if graph.entities.contains_key(id) {
                        used.insert(id.to_string());
                    }
                    md.contributors.push(id.to_string());
                }
            }
        }
    }
    if !free_text.is_empty() {
        md.other_contributors = Some(free_text.join(", "));
    }

    let file_ref = |key: &str| {
        main.get(key)
            .and_then(ref_id)
            .map(id_to_path)
            .filter(|p| files.contains(p))
    };
    let diagram_path = file_ref("image");
    let abstract_cwl_path = file_ref("subjectOf");
    if let Some(cwl) = &abstract_cwl_path {
        if let Some(lang) = files
            .get(cwl)
            .and(graph.entities.get(super::path_to_id(cwl).as_str()))
            .and_then(|e| e.get("programmingLanguage"))
            .and_then(ref_id)
        {
            used.insert(lang.to_string());
        }
    }

    let extras = graph
        .order
        .iter()
        .filter(|e| {
            let id = e.get("@id").and_then(Value::as_str).unwrap_or_default();
            !used.contains(id) && !files.contains(&id_to_path(id))
        })
        .map(|e| (*e).clone())
        .collect();

    let conforms_to = as_list(descriptor.get("conformsTo"))
        .into_iter()
        .chain(as_list(root.get("conformsTo")))
        .filter_map(ref_id)
        .map(str::to_string)
        .collect();

    Ok(CrateContents {
        metadata: md,
        files,
        main_workflow_path: main_path,
        diagram_path,
        abstract_cwl_path,
        conforms_to,
        extras,
        raw_metadata: doc.clone(),
    })
}
