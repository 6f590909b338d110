use std::collections::{BTreeMap, BTreeSet};
use std::io::{Cursor, Write};

use chrono::{Datelike, SecondsFormat, Timelike};
use serde_json::{json, Map, Value};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipWriter};

use super::{
    id_ref, path_to_id, to_canonical_json, CrateError, LANGUAGE_IRI_BASE, METADATA_FILE,
    ROCRATE_CONTEXT, ROCRATE_SPEC, SPDX_IRI_PREFIX, WORKFLOW_CRATE_PROFILE,
};
use crate::config::DEFAULT_BASE_URL;
use crate::model::vocab::{edam_iri, is_known_spdx};
use crate::model::{ClassId, ClassRegistry, TeamId, WorkflowEntry, WorkflowVersion};

/// A built archive together with its parsed metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowCrate {
    pub archive: Vec<u8>,
    pub metadata: Value,
    pub main_entity_path: String,
    pub conforms_to: Vec<String>,
}

/// Builds crates for one registry. The base URL is used for links between
/// entries (`isBasedOn`) and to teams (`producer`).
#[derive(Debug, Clone)]
pub struct CrateBuilder<'a> {
    base_url: &'a str,
    classes: &'a ClassRegistry,
    team_names: BTreeMap<TeamId, String>,
}

pub fn build_crate(
    entry: &WorkflowEntry,
    version: &WorkflowVersion,
) -> Result<WorkflowCrate, CrateError> {
    let classes = ClassRegistry::seeded();
    CrateBuilder::new(DEFAULT_BASE_URL, &classes).build(entry, version)
}

pub(crate) fn language_iri(class: &ClassId) -> String {
    format!("{LANGUAGE_IRI_BASE}#{}", class.as_str())
}

pub(crate) fn license_value(license: &str) -> Value {
    if license.contains("://") {
        id_ref(license)
    } else if is_known_spdx(license) {
        id_ref(format!("{SPDX_IRI_PREFIX}{license}"))
    } else {
        Value::String(license.to_string())
    }
}

fn set_opt(obj: &mut Map<String, Value>, key: &str, value: Option<Value>) {
    if let Some(v) = value {
        obj.insert(key.to_string(), v);
    }
}

fn non_empty(list: Vec<Value>) -> Option<Value> {
    (!list.is_empty()).then_some(Value::Array(list))
}

impl<'a> CrateBuilder<'a> {
    pub fn new(base_url: &'a str, classes: &'a ClassRegistry) -> Self {
        CrateBuilder {
            base_url: base_url.trim_end_matches('/'),
            classes,
            team_names: BTreeMap::new(),
        }
    }

    /// Names for the team entities, which otherwise carry only their IRI.
    pub fn with_team_names(mut self, names: BTreeMap<TeamId, String>) -> Self {
        self.team_names = names;
        self
    }

    pub fn entry_iri(&self, entry: &WorkflowEntry) -> String {
        format!("{}/workflows/{}", self.base_url, entry.id)
    }

    fn language_entity(&self, class: &ClassId) -> Value {
        let mut lang = Map::new();
        lang.insert("@id".into(), json!(language_iri(class)));
        lang.insert("@type".into(), json!("ComputerLanguage"));
        let info = self.classes.get(class);
        lang.insert(
            "name".into(),
            json!(info.map_or(class.as_str(), |c| c.display_name.as_str())),
        );
        lang.insert("alternateName".into(), json!(class.as_str()));
        if let Some(url) = info.and_then(|c| c.homepage.as_deref()) {
            lang.insert("url".into(), id_ref(url));
        }
        Value::Object(lang)
    }

    /// The `ro-crate-metadata.json` document.
    pub fn metadata(
        &self,
        entry: &WorkflowEntry,
        version: &WorkflowVersion,
    ) -> Result<Value, CrateError> {
        let main_path = &version.main_workflow_path;
        if !version.files.contains(main_path) {
            return Err(CrateError::MissingMainFile(main_path.clone()));
        }
        let main_id = path_to_id(main_path);
        let mut others: BTreeMap<String, Value> = BTreeMap::new();
        let add = |others: &mut BTreeMap<String, Value>, v: Value| {
            let id = v["@id"].as_str().unwrap_or_default().to_string();
            others.insert(id, v);
        };

        let descriptor = json!({
            "@id": METADATA_FILE,
            "@type": "CreativeWork",
            "about": id_ref("./"),
            "conformsTo": [id_ref(ROCRATE_SPEC), id_ref(WORKFLOW_CRATE_PROFILE)],
        });

        // People
        let mut creator_refs = Vec::new();
        for (i, c) in entry.creators.iter().enumerate() {
            let id = c
                .orcid
                .as_ref()
                .map(|o| o.iri())
                .unwrap_or_else(|| format!("#creator-{}", i + 1));
            let mut person = Map::new();
            person.insert("@id".into(), json!(id));
            person.insert("@type".into(), json!("Person"));
            person.insert("name".into(), json!(c.name));
            set_opt(
                &mut person,
                "affiliation",
                c.affiliation.as_ref().map(|a| json!(a)),
            );
            creator_refs.push(id_ref(&id));
            add(&mut others, Value::Object(person));
        }

        // Programming languages
        let class = &entry.workflow_class;
        add(&mut others, self.language_entity(class));

        // EDAM terms
        let term = |others: &mut BTreeMap<String, Value>, id: &str| {
            let iri = edam_iri(id);
            add(
                others,
                json!({"@id": iri, "@type": "DefinedTerm", "termCode": id,
                       "inDefinedTermSet": id_ref("http://edamontology.org")}),
            );
            id_ref(iri)
        };
        let topics: Vec<Value> = entry
            .edam_topics
            .iter()
            .map(|t| term(&mut others, t))
            .collect();
        let operations: Vec<Value> = entry
            .edam_operations
            .iter()
            .map(|t| term(&mut others, t))
            .collect();

        // Tools
        let mut tool_refs = Vec::new();
        for (i, t) in entry.tool_refs.iter().enumerate() {
            let id = format!("#tool-{}", i + 1);
            let mut app = Map::new();
            app.insert("@id".into(), json!(id));
            app.insert("@type".into(), json!("SoftwareApplication"));
            app.insert("name".into(), json!(t.display_name));
            app.insert("identifier".into(), json!(t.raw_id));
            set_opt(&mut app, "sameAs", t.biotools_iri().map(id_ref));
            tool_refs.push(id_ref(&id));
            add(&mut others, Value::Object(app));
        }

        // Teams
        let mut producers = Vec::new();
        for team in &entry.team_ids {
            let iri = format!("{}/projects/{team}", self.base_url);
            let mut project = Map::new();
            project.insert("@id".into(), json!(iri));
            project.insert("@type".into(), json!("Project"));
            set_opt(
                &mut project,
                "name",
                self.team_names.get(team).map(|n| json!(n)),
            );
            producers.push(id_ref(&iri));
            add(&mut others, Value::Object(project));
        }

        // Contributors: registered users by link, free-text credit verbatim.
        let mut contributors = Vec::new();
        for user in &entry.contributor_ids {
            let iri = format!("{}/people/{user}", self.base_url);
            add(&mut others, json!({"@id": iri, "@type": "Person"}));
            contributors.push(id_ref(&iri));
        }
        if !entry.other_contributors.trim().is_empty() {
            contributors.push(json!(entry.other_contributors));
        }

        // Files
        let mut parts = Vec::new();
        let diagram = version
            .diagram_path
            .as_deref()
            .filter(|p| version.files.contains(p));
        let abstract_cwl = version
            .abstract_cwl_path
            .as_deref()
            .filter(|p| version.files.contains(p));
        for (path, blob) in version.files.iter() {
            if path == METADATA_FILE {
                continue;
            }
            let id = path_to_id(path);
            parts.push(id_ref(&id));
            let mut file = Map::new();
            file.insert("@id".into(), json!(id));
            file.insert(
                "name".into(),
                json!(path.rsplit('/').next().unwrap_or(path)),
            );
            file.insert("contentSize".into(), json!(blob.size().to_string()));
            file.insert("encodingFormat".into(), json!(blob.media_type()));
            if path == main_path {
                file.insert(
                    "@type".into(),
                    json!(["File", "SoftwareSourceCode", "ComputationalWorkflow"]),
                );
                file.insert("name".into(), json!(entry.title));
                file.insert("programmingLanguage".into(), id_ref(language_iri(class)));
                set_opt(&mut file, "creator", non_empty(creator_refs.clone()));
                set_opt(&mut file, "featureList", non_empty(operations.clone()));
                set_opt(
                    &mut file,
                    "softwareRequirements",
                    non_empty(tool_refs.clone()),
                );
                set_opt(&mut file, "image", diagram.map(|d| id_ref(path_to_id(d))));
                set_opt(
                    &mut file,
                    "subjectOf",
                    abstract_cwl.map(|a| id_ref(path_to_id(a))),
                );
                set_opt(
                    &mut file,
                    "dateCreated",
                    Some(json!(version
                        .created_at
                        .to_rfc3339_opts(SecondsFormat::Secs, true))),
                );
            } else if Some(path) == abstract_cwl {
                file.insert(
                    "@type".into(),
                    json!(["File", "SoftwareSourceCode", "HowTo"]),
                );
                let cwl = ClassId::new("cwl");
                file.insert("programmingLanguage".into(), id_ref(language_iri(&cwl)));
                if &cwl != class {
                    add(&mut others, self.language_entity(&cwl));
                }
            } else if Some(path) == diagram {
                file.insert("@type".into(), json!(["File", "ImageObject"]));
            } else {
                file.insert("@type".into(), json!("File"));
            }
            add(&mut others, Value::Object(file));
        }

        // Root dataset
        let mut root = Map::new();
        root.insert("@id".into(), json!("./"));
        root.insert("@type".into(), json!("Dataset"));
        root.insert("name".into(), json!(entry.title));
        root.insert("mainEntity".into(), id_ref(&main_id));
        root.insert("hasPart".into(), Value::Array(parts));
        root.insert(
            "datePublished".into(),
            json!(version
                .created_at
                .to_rfc3339_opts(SecondsFormat::Secs, true)),
        );
        root.insert("version".into(), json!(version.version.to_string()));
        root.insert(
            "identifier".into(),
            json!(format!(
                "{}?version={}",
                self.entry_iri(entry),
                version.version
            )),
        );
        root.insert("creativeWorkStatus".into(), json!(entry.maturity.as_str()));
        if !entry.description.is_empty() {
            root.insert("description".into(), json!(entry.description));
        }
        set_opt(
            &mut root,
            "license",
            entry.license.as_deref().map(license_value),
        );
        set_opt(&mut root, "creator", non_empty(creator_refs));
        set_opt(
            &mut root,
            "keywords",
            non_empty(entry.tags.iter().map(|t| json!(t)).collect()),
        );
        set_opt(&mut root, "about", non_empty(topics));
        set_opt(&mut root, "producer", non_empty(producers));
        set_opt(&mut root, "contributor", non_empty(contributors));
        set_opt(
            &mut root,
            "isBasedOn",
            non_empty(
                entry
                    .attributions
                    .iter()
                    .map(|a| id_ref(format!("{}/workflows/{a}", self.base_url)))
                    .collect(),
            ),
        );
        set_opt(
            &mut root,
            "citation",
            entry.custom_citation.as_ref().map(|c| json!(c)),
        );
        set_opt(
            &mut root,
            "url",
            entry.source_url.as_ref().map(|c| json!(c)),
        );

        // Entities carried over from an imported crate, unless regenerated.
        let generated: BTreeSet<String> = others
            .keys()
            .cloned()
            .chain([METADATA_FILE.to_string(), "./".to_string()])
            .collect();
        for extra in &version.crate_extras {
            if let Some(id) = extra.get("@id").and_then(Value::as_str) {
                if !generated.contains(id) {
                    others.insert(id.to_string(), extra.clone());
                }
            }
        }

        let main_entity = others
            .remove(&main_id)
            .expect("main file entity was generated above");
        let mut graph = vec![descriptor, Value::Object(root), main_entity];
        graph.extend(others.into_values());
        Ok(json!({ "@context": ROCRATE_CONTEXT, "@graph": graph }))
    }

    pub fn build(
        &self,
        entry: &WorkflowEntry,
        version: &WorkflowVersion,
    ) -> Result<WorkflowCrate, CrateError> {
        let metadata = self.metadata(entry, version)?;
        let archive = write_zip(&metadata, version)?;
        Ok(WorkflowCrate {
            archive,
            metadata,
            main_entity_path: version.main_workflow_path.clone(),
            conforms_to: vec![ROCRATE_SPEC.to_string(), WORKFLOW_CRATE_PROFILE.to_string()],
        })
    }
}

/// Zip timestamps cannot represent dates outside 1980..=2107.
fn zip_time(version: &WorkflowVersion) -> zip::DateTime {
    let t = version.created_at;
    let year = t.year().clamp(1980, 2107) as u16;
    let (month, day, hour, minute, second) = if (1980..=2107).contains(&t.year()) {
        (t.month(), t.day(), t.hour(), t.minute(), t.second())
    } else {
        (1, 1, 0, 0, 0)
    };
    zip::DateTime::from_date_and_time(
        year,
        month as u8,
        day as u8,
        hour as u8,
        minute as u8,
        second.min(59) as u8,
    )
    .unwrap_or_default()
}

fn write_zip(metadata: &Value, version: &WorkflowVersion) -> Result<Vec<u8>, CrateError> {
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(zip_time(version))
        .unix_permissions(0o644);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let io = |e: std::io::Error| CrateError::Zip(e.to_string());

    zip.start_file(METADATA_FILE, options)?;
    zip.write_all(&to_canonical_json(metadata)).map_err(io)?;
    for (path, blob) in version.files.iter() {
        if path == METADATA_FILE {
            continue;
        }
        zip.start_file(path, options)?;
        zip.write_all(blob.bytes()).map_err(io)?;
    }
    Ok(zip.finish()?.into_inner())
}
