//! Galaxy `.ga` workflow documents (JSON, format-version 0.1).

use std::collections::HashSet;

use serde_json::{Map, Value};

use super::DEFAULT_MAX_PARSE_BYTES;
use super::{check_size, dedup_ordered, ParseError, PortDecl, StepDecl, WorkflowStructure};
use crate::model::ToolRef;

fn str_field<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a str> {
    obj.get(key)
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

type Step<'a> = (u64, &'a Map<String, Value>);

/// Steps of a Galaxy document ordered by numeric key.
fn ordered_steps(doc: &Map<String, Value>) -> Result<Vec<Step<'_>>, ParseError> {
    let steps = doc
        .get("steps")
        .ok_or_else(|| ParseError::Schema("Galaxy workflow has no `steps`".into()))?
        .as_object()
        .ok_or_else(|| ParseError::Schema("`steps` is not an object".into()))?;
    let mut out = Vec::with_capacity(steps.len());
    for (key, step) in steps {
        let n: u64 = key
            .parse()
            .map_err(|_| ParseError::Schema(format!("step key `{key}` is not numeric")))?;
        let step = step
            .as_object()
            .ok_or_else(|| ParseError::Schema(format!("step `{key}` is not an object")))?;
        out.push((n, step));
    }
    out.sort_by_key(|(n, _)| *n);
    Ok(out)
}

fn collect_tool_ids(doc: &Map<String, Value>, out: &mut Vec<String>) -> Result<(), ParseError> {
    for (_, step) in ordered_steps(doc)? {
        if let Some(id) = str_field(step, "tool_id") {
            out.push(id.to_string());
        }
        if let Some(sub) = step.get("subworkflow").and_then(Value::as_object) {
            if sub.contains_key("steps") {
                collect_tool_ids(sub, out)?;
            }
        }
    }
    Ok(())
}

/// Makes `id` unique within `seen`, suffixing with the step key on clashes.
/// Port ids never contain `/` or `#`, which carry meaning in CWL references.
fn unique_id(seen: &mut HashSet<String>, id: String, key: u64) -> String {
    let id = id.replace(['/', '#'], "_");
    if seen.insert(id.clone()) {
        return id;
    }
    let mut candidate = format!("{id}_{key}");
    let mut n = 2;
    while !seen.insert(candidate.clone()) {
        candidate = format!("{id}_{key}_{n}");
        n += 1;
    }
    candidate
}

pub fn parse_galaxy(content: &[u8]) -> Result<WorkflowStructure, ParseError> {
    check_size(content, DEFAULT_MAX_PARSE_BYTES)?;
    let doc: Value = serde_json::from_slice(content).map_err(ParseError::from_json)?;
    let doc = doc
        .as_object()
        .ok_or_else(|| ParseError::Schema("Galaxy workflow is not a JSON object".into()))?;

    let mut s = WorkflowStructure {
        name: str_field(doc, "name").map(str::to_string),
        description: str_field(doc, "annotation").map(str::to_string),
        version: str_field(doc, "release").map(str::to_string),
        language_version: str_field(doc, "format-version").map(str::to_string),
        ..WorkflowStructure::default()
    };

    let mut input_ids = HashSet::new();
    let mut output_ids = HashSet::new();
    for (key, step) in ordered_steps(doc)? {
        let kind = str_field(step, "type").unwrap_or("tool");
        let label = str_field(step, "label");
        let name = str_field(step, "name");
        let step_id = key.to_string();

        if kind == "data_input" || kind == "data_collection_input" {
            let input_name = step
                .get("inputs")
                .and_then(Value::as_array)
                .and_then(|a| a.first())
                .and_then(Value::as_object)
                .and_then(|o| str_field(o, "name"));
            let id = label
                .or(input_name)
                .map(str::to_string)
                .unwrap_or_else(|| format!("input_{key}"));
            let data_type = if kind == "data_input" {
                "File"
            } else {
                "File[]"
            };
            s.inputs.push(PortDecl {
                id: unique_id(&mut input_ids, id, key),
                label: label.or(name).map(str::to_string),
                data_type: Some(data_type.to_string()),
                edam_format: None,
                source: None,
            });
        }

        let tool_ref = str_field(step, "tool_id").map(|raw| ToolRef {
            raw_id: raw.to_string(),
            biotools_id: None,
            display_name: name.unwrap_or(raw).to_string(),
        });
        let subworkflow = (kind == "subworkflow").then(|| {
            step.get("subworkflow")
                .and_then(Value::as_object)
                .and_then(|o| str_field(o, "name"))
                .or(label)
                .map(str::to_string)
                .unwrap_or_else(|| format!("subworkflow_{key}"))
        });
        s.steps.push(StepDecl {
            id: step_id.clone(),
            label: label.or(name).map(str::to_string),
            tool_ref: if subworkflow.is_some() {
                None
            } else {
                tool_ref
            },
            subworkflow,
        });

        if let Some(outs) = step.get("workflow_outputs").and_then(Value::as_array) {
            for out in outs.iter().filter_map(Value::as_object) {
                let output_name = str_field(out, "output_name").unwrap_or("output");
                let out_label = str_field(out, "label");
                let id = out_label
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("{key}_{output_name}"));
                s.outputs.push(PortDecl {
                    id: unique_id(&mut output_ids, id, key),
                    label: out_label.map(str::to_string),
                    data_type: None,
                    edam_format: None,
                    source: Some(step_id.clone()),
                });
            }
        }
    }

    let mut tools = Vec::new();
    collect_tool_ids(doc, &mut tools)?;
    s.raw_tool_ids = dedup_ordered(tools);
    Ok(s)
}
