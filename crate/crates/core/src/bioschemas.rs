//! Bioschemas JSON-LD for workflow landing pages.

use chrono::SecondsFormat;
use serde_json::{json, Map, Value};

use crate::model::vocab::edam_iri;
use crate::model::{ClassRegistry, WorkflowEntry, WorkflowVersion};
use crate::parsers::PortDecl;
use crate::rocrate::SPDX_IRI_PREFIX;

pub const WORKFLOW_PROFILE: &str =
    "https://bioschemas.org/profiles/ComputationalWorkflow/1.0-RELEASE";
pub const TOOL_PROFILE: &str = "https://bioschemas.org/profiles/ComputationalTool/1.0-RELEASE";
pub const PARAMETER_PROFILE: &str = "https://bioschemas.org/profiles/FormalParameter/1.0-RELEASE";

fn parameter(workflow_id: &str, direction: &str, p: &PortDecl) -> Value {
    let mut node = Map::new();
    node.insert(
        "@id".into(),
        json!(format!("{workflow_id}#{direction}-{}", p.id)),
    );
    node.insert("@type".into(), json!("FormalParameter"));
    node.insert("dct:conformsTo".into(), json!(PARAMETER_PROFILE));
    node.insert("name".into(), json!(p.id));
    if let Some(l) = &p.label {
        node.insert("description".into(), json!(l));
    }
    if let Some(t) = &p.data_type {
        node.insert("additionalType".into(), json!(t));
    }
    if let Some(f) = &p.edam_format {
        node.insert("encodingFormat".into(), json!(edam_iri(f)));
    }
    Value::Object(node)
}

/// Builds the JSON-LD graph describing `version` of `entry`: one
/// ComputationalWorkflow node followed by a FormalParameter node per parsed
/// input and output.
pub fn emit_bioschemas(
    entry: &WorkflowEntry,
    version: &WorkflowVersion,
    base_url: &str,
    classes: &ClassRegistry,
) -> Value {
    let base_url = base_url.trim_end_matches('/');
    let url = format!("{base_url}/workflows/{}", entry.id);
    let workflow_id = format!("{url}?version={}", version.version);

    let mut wf = Map::new();
    wf.insert("@id".into(), json!(workflow_id));
    wf.insert(
        "@type".into(),
        json!(["ComputationalWorkflow", "SoftwareSourceCode"]),
    );
    wf.insert("dct:conformsTo".into(), json!(WORKFLOW_PROFILE));
    wf.insert("name".into(), json!(entry.title));
    wf.insert("url".into(), json!(url));
    wf.insert("version".into(), json!(version.version.to_string()));
    let identifier = entry
        .doi_records
        .get(&version.version)
        .map(|d| d.iri())
        .unwrap_or_else(|| workflow_id.clone());
    wf.insert("identifier".into(), json!(identifier));
    if !entry.description.is_empty() {
        wf.insert("description".into(), json!(entry.description));
    }
    wf.insert(
        "dateCreated".into(),
        json!(version
            .created_at
            .to_rfc3339_opts(SecondsFormat::Secs, true)),
    );
    wf.insert(
        "dateModified".into(),
        json!(entry.updated_at.to_rfc3339_opts(SecondsFormat::Secs, true)),
    );
    wf.insert("creativeWorkStatus".into(), json!(entry.maturity.as_str()));

    let creators: Vec<Value> = entry
        .creators
        .iter()
        .map(|c| {
            let mut p = Map::new();
            p.insert("@type".into(), json!("Person"));
            p.insert("name".into(), json!(c.name));
            if let Some(o) = &c.orcid {
                p.insert("@id".into(), json!(o.iri()));
            }
            if let Some(a) = &c.affiliation {
                p.insert("affiliation".into(), json!(a));
            }
            Value::Object(p)
        })
        .collect();
    if !creators.is_empty() {
        wf.insert("creator".into(), Value::Array(creators));
    }

    if let Some(l) = &entry.license {
        let iri = if l.contains("://") {
            l.clone()
        } else {
            format!("{SPDX_IRI_PREFIX}{l}")
        };
        wf.insert("license".into(), json!(iri));
    }

    let class = classes.get(&entry.workflow_class);
    let mut lang = Map::new();
    lang.insert("@type".into(), json!("ComputerLanguage"));
    lang.insert(
        "name".into(),
        json!(class.map_or(entry.workflow_class.as_str(), |c| c.display_name.as_str())),
    );
    lang.insert("alternateName".into(), json!(entry.workflow_class.as_str()));
    if let Some(u) = class.and_then(|c| c.homepage.as_deref()) {
        lang.insert("url".into(), json!(u));
    }
    wf.insert("programmingLanguage".into(), Value::Object(lang));

    if !entry.tags.is_empty() {
        wf.insert("keywords".into(), json!(entry.tags.join(", ")));
    }
    let iris =
        |ids: &[String]| -> Value { ids.iter().map(|i| json!({"@id": edam_iri(i)})).collect() };
    if !entry.edam_topics.is_empty() {
        wf.insert("about".into(), iris(&entry.edam_topics));
    }
    if !entry.edam_operations.is_empty() {
        wf.insert("featureList".into(), iris(&entry.edam_operations));
    }

    let tools: Vec<Value> = entry
        .tool_refs
        .iter()
        .map(|t| {
            let mut node = Map::new();
            node.insert("@type".into(), json!("SoftwareApplication"));
            node.insert("dct:conformsTo".into(), json!(TOOL_PROFILE));
            node.insert("name".into(), json!(t.display_name));
            if let Some(iri) = t.biotools_iri() {
                node.insert("@id".into(), json!(iri));
                node.insert("url".into(), json!(iri));
            }
            Value::Object(node)
        })
        .collect();
    if !tools.is_empty() {
        wf.insert("softwareRequirements".into(), Value::Array(tools));
    }

    if let Some(record) = entry.doi_records.get(&version.version) {
        wf.insert("sameAs".into(), json!(record.iri()));
    }

    let mut params = Vec::new();
    if let Some(s) = &version.structure {
        let inputs: Vec<Value> = s
            .inputs
            .iter()
            .map(|p| parameter(&workflow_id, "input", p))
            .collect();
        let outputs: Vec<Value> = s
            .outputs
            .iter()
            .map(|p| parameter(&workflow_id, "output", p))
            .collect();
        let refs = |nodes: &[Value]| -> Value {
            nodes
                .iter()
                .map(|n| json!({"@id": n["@id"].clone()}))
                .collect()
        };
        if !inputs.is_empty() {
            wf.insert("input".into(), refs(&inputs));
        }
        if !outputs.is_empty() {
            wf.insert("output".into(), refs(&outputs));
        }
        params.extend(inputs);
        params.extend(outputs);
    }

    let mut graph = vec![Value::Object(wf)];
    graph.extend(params);
    json!({
        "@context": {"@vocab": "https://schema.org/", "dct": "http://purl.org/dc/terms/"},
        "@graph": graph,
    })
}
