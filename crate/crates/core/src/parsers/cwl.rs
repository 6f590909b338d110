//! CWL `Workflow` documents, and generation of Abstract CWL.
//!
//! Abstract CWL describes another workflow's interface with every step body
//! replaced by an `Operation` stub, so it can be read by any CWL tooling
//! without being executable.

use serde_yaml::{Mapping, Value};

use super::DEFAULT_MAX_PARSE_BYTES;
use super::{check_size, dedup_ordered, ParseError, PortDecl, StepDecl, WorkflowStructure};
use crate::model::vocab::{edam_bare_id, edam_iri, edam_kind_of, EdamKind};
use crate::model::ToolRef;

const BIOTOOLS_PREFIXES: [&str; 3] = ["https://bio.tools/", "http://bio.tools/", "biotools:"];

/// A parsed CWL workflow plus the EDAM annotations found on its top level.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbstractCwl {
    pub structure: WorkflowStructure,
    pub edam_topics: Vec<String>,
    pub edam_operations: Vec<String>,
}

fn key_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn get<'a>(m: &'a Mapping, key: &str) -> Option<&'a Value> {
    m.get(Value::String(key.to_string()))
}

fn get_str<'a>(m: &'a Mapping, key: &str) -> Option<&'a str> {
    get(m, key).and_then(Value::as_str)
}

/// `#main/reads` and `reads` both become `reads`.
fn local_id(raw: &str) -> String {
    let raw = raw.trim_start_matches('#');
    raw.rsplit('/').next().unwrap_or(raw).to_string()
}

fn type_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if s == "Any" => None,
        Value::String(s) => Some(s.clone()),
        Value::Sequence(items) => {
            let non_null: Vec<String> = items
                .iter()
                .filter(|i| i.as_str() != Some("null"))
                .filter_map(type_string)
                .collect();
            let optional = non_null.len() < items.len();
            match non_null.as_slice() {
                [one] if optional => Some(format!("{one}?")),
                [one] => Some(one.clone()),
                _ => serde_yaml::to_string(v).ok().map(|s| s.trim().to_string()),
            }
        }
        Value::Mapping(m) if get_str(m, "type") == Some("array") => get(m, "items")
            .and_then(type_string)
            .map(|t| format!("{t}[]")),
        Value::Mapping(m) => get(m, "type").and_then(type_string),
        _ => None,
    }
}

fn edam_format(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => edam_bare_id(s).filter(|id| id.starts_with("format_")),
        Value::Sequence(items) => items.iter().find_map(edam_format),
        _ => None,
    }
}

/// Normalises map-form and list-form CWL parameter/step collections into
/// `(id, body)` pairs. Shorthand bodies (`x: File`) become `{type: File}`.
fn entries(v: Option<&Value>, what: &str) -> Result<Vec<(String, Mapping)>, ParseError> {
    let Some(v) = v else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    match v {
        Value::Null => {}
        Value::Mapping(m) => {
            for (k, body) in m {
                let id = key_string(k)
                    .ok_or_else(|| ParseError::Schema(format!("non-scalar {what} id")))?;
                let body = match body {
                    Value::Mapping(b) => b.clone(),
                    Value::Null => Mapping::new(),
                    other => {
                        let mut b = Mapping::new();
                        b.insert("type".into(), other.clone());
                        b
                    }
                };
                out.push((local_id(&id), body));
            }
        }
        Value::Sequence(items) => {
            for item in items {
                let body = item
                    .as_mapping()
                    .ok_or_else(|| ParseError::Schema(format!("{what} entry is not a mapping")))?;
                let id = get(body, "id")
                    .and_then(key_string)
                    .ok_or_else(|| ParseError::Schema(format!("{what} entry without id")))?;
                out.push((local_id(&id), body.clone()));
            }
        }
        _ => {
            return Err(ParseError::Schema(format!(
                "`{what}` must be a map or list"
            )))
        }
    }
    Ok(out)
}

fn port(id: String, body: &Mapping) -> PortDecl {
    PortDecl {
        id,
        label: get_str(body, "label").map(str::to_string),
        data_type: get(body, "type").and_then(type_string),
        edam_format: get(body, "format").and_then(edam_format),
        source: None,
    }
}

/// First SoftwareRequirement package in a hints/requirements block.
fn software_requirement(block: Option<&Value>) -> Option<ToolRef> {
    let reqs: Vec<&Mapping> = match block? {
        Value::Mapping(m) => get(m, "SoftwareRequirement")
            .and_then(Value::as_mapping)
            .into_iter()
            .collect(),
        Value::Sequence(items) => items
            .iter()
            .filter_map(Value::as_mapping)
            .filter(|m| get_str(m, "class") == Some("SoftwareRequirement"))
            .collect(),
        _ => Vec::new(),
    };
    let req = reqs.first()?;
    let (package, body) = match get(req, "packages")? {
        Value::Sequence(items) => {
            let first = items.first()?.as_mapping()?;
            (get_str(first, "package")?.to_string(), first.clone())
        }
        Value::Mapping(m) => {
            let (k, v) = m.iter().next()?;
            (key_string(k)?, v.as_mapping().cloned().unwrap_or_default())
        }
        _ => return None,
    };
    let specs: Vec<String> = match get(&body, "specs") {
        Some(Value::Sequence(s)) => s
            .iter()
            .filter_map(|x| x.as_str().map(str::to_string))
            .collect(),
        Some(Value::String(s)) => vec![s.clone()],
        _ => Vec::new(),
    };
    let biotools_id = specs.iter().find_map(|s| {
        BIOTOOLS_PREFIXES
            .iter()
            .find_map(|p| s.strip_prefix(p))
            .map(|id| id.trim_end_matches('/').to_ascii_lowercase())
    });
    Some(ToolRef {
        display_name: package.clone(),
        raw_id: package,
        biotools_id,
    })
}

fn step(id: String, body: &Mapping) -> StepDecl {
    let run = get(body, "run");
    let (tool_ref, subworkflow) = match run {
        Some(Value::Mapping(r)) if get_str(r, "class") == Some("Workflow") => {
            let name = get_str(r, "id")
                .map(local_id)
                .or_else(|| get_str(r, "label").map(str::to_string))
                .unwrap_or_else(|| format!("{id}_workflow"));
            (None, Some(name))
        }
        Some(Value::Mapping(r)) => (
            software_requirement(get(body, "hints"))
                .or_else(|| software_requirement(get(body, "requirements")))
                .or_else(|| software_requirement(get(r, "hints")))
                .or_else(|| software_requirement(get(r, "requirements"))),
            None,
        ),
        _ => (
            software_requirement(get(body, "hints"))
                .or_else(|| software_requirement(get(body, "requirements"))),
            None,
        ),
    };
    StepDecl {
        id,
        label: get_str(body, "label").map(str::to_string),
        tool_ref,
        subworkflow,
    }
}

fn collect_edam(v: &Value, topics: &mut Vec<String>, ops: &mut Vec<String>) {
    match v {
        Value::String(s) => {
            if let Some(id) = edam_bare_id(s) {
                match edam_kind_of(&id) {
                    Some(EdamKind::Topic) => topics.push(id),
                    Some(EdamKind::Operation) => ops.push(id),
                    _ => {}
                }
            }
        }
        Value::Sequence(items) => items.iter().for_each(|i| collect_edam(i, topics, ops)),
        Value::Mapping(m) => m.values().for_each(|i| collect_edam(i, topics, ops)),
        _ => {}
    }
}

/// Picks the workflow out of a packed `$graph` document.
fn select_workflow(doc: &Mapping) -> Result<Mapping, ParseError> {
    let Some(graph) = get(doc, "$graph").and_then(Value::as_sequence) else {
        return Ok(doc.clone());
    };
    let workflows: Vec<&Mapping> = graph
        .iter()
        .filter_map(Value::as_mapping)
        .filter(|m| get_str(m, "class") == Some("Workflow"))
        .collect();
    let main = workflows
        .iter()
        .find(|m| get_str(m, "id").map(local_id).as_deref() == Some("main"))
        .or(workflows.first())
        .ok_or_else(|| ParseError::NotAWorkflow("$graph without Workflow".into()))?;
    let mut merged = (*main).clone();
    if !merged.contains_key("cwlVersion") {
        if let Some(v) = get(doc, "cwlVersion") {
            merged.insert("cwlVersion".into(), v.clone());
        }
    }
    Ok(merged)
}

pub fn parse_cwl_abstract(content: &[u8]) -> Result<AbstractCwl, ParseError> {
    check_size(content, DEFAULT_MAX_PARSE_BYTES)?;
    let doc: Value = serde_yaml::from_slice(content).map_err(ParseError::from_yaml)?;
    let doc = doc
        .as_mapping()
        .ok_or_else(|| ParseError::Schema("CWL document is not a mapping".into()))?;
    let wf = select_workflow(doc)?;

    let class = get_str(&wf, "class").unwrap_or("");
    if class != "Workflow" {
        return Err(ParseError::NotAWorkflow(class.to_string()));
    }

    let doc_text = match get(&wf, "doc") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Sequence(lines)) => Some(
            lines
                .iter()
                .filter_map(Value::as_str)
                .collect::<Vec<_>>()
                .join("\n"),
        ),
        _ => None,
    };

    let mut s = WorkflowStructure {
        name: get_str(&wf, "label").map(str::to_string),
        description: doc_text,
        language_version: get_str(&wf, "cwlVersion").map(str::to_string),
        ..WorkflowStructure::default()
    };

    for (id, body) in entries(get(&wf, "inputs"), "input")? {
        s.inputs.push(port(id, &body));
    }
    for (id, body) in entries(get(&wf, "outputs"), "output")? {
        let mut p = port(id, &body);
        let source = match get(&body, "outputSource") {
            Some(Value::String(src)) => Some(src.clone()),
            Some(Value::Sequence(srcs)) => srcs.first().and_then(Value::as_str).map(str::to_string),
            _ => None,
        };
        p.source = source.and_then(|src| {
            let src = src.trim_start_matches('#');
            let src = src.strip_prefix("main/").unwrap_or(src);
            src.split_once('/').map(|(step, _)| step.to_string())
        });
        s.outputs.push(p);
    }
    for (id, body) in entries(get(&wf, "steps"), "step")? {
        s.steps.push(step(id, &body));
    }
    s.raw_tool_ids = dedup_ordered(
        s.steps
            .iter()
            .filter_map(|st| st.tool_ref.as_ref().map(|t| t.raw_id.clone())),
    );
    s.check()?;

    let mut topics = Vec::new();
    let mut ops = Vec::new();
    for (k, v) in &wf {
        let key = key_string(k).unwrap_or_default();
        if matches!(
            key.as_str(),
            "inputs" | "outputs" | "steps" | "$namespaces" | "$schemas"
        ) {
            continue;
        }
        collect_edam(v, &mut topics, &mut ops);
    }

    Ok(AbstractCwl {
        structure: s,
        edam_topics: dedup_ordered(topics),
        edam_operations: dedup_ordered(ops),
    })
}

fn str_val(s: &str) -> Value {
    Value::String(s.to_string())
}

fn check_cwl_id(what: &str, id: &str) -> Result<(), ParseError> {
    if id.contains('/') || id.contains('#') {
        return Err(ParseError::InvalidStructure(format!(
            "{what} id `{id}` cannot contain `/` or `#`"
        )));
    }
    Ok(())
}

fn port_body(p: &PortDecl) -> Mapping {
    let mut b = Mapping::new();
    b.insert(
        str_val("type"),
        str_val(p.data_type.as_deref().unwrap_or("Any")),
    );
    if let Some(l) = &p.label {
        b.insert(str_val("label"), str_val(l));
    }
    if let Some(f) = &p.edam_format {
        b.insert(str_val("format"), str_val(&edam_iri(f)));
    }
    b
}

/// Emits an Abstract CWL document for `structure`. Step bodies become
/// `Operation` stubs; tool references are carried as `SoftwareRequirement`
/// hints.
pub fn generate_abstract_cwl(structure: &WorkflowStructure) -> Result<Vec<u8>, ParseError> {
    structure.check()?;
    for p in structure.inputs.iter().chain(&structure.outputs) {
        check_cwl_id("port", &p.id)?;
    }
    for st in &structure.steps {
        check_cwl_id("step", &st.id)?;
    }

    let mut doc = Mapping::new();
    doc.insert(str_val("cwlVersion"), str_val("v1.2"));
    doc.insert(str_val("class"), str_val("Workflow"));
    if let Some(name) = &structure.name {
        doc.insert(str_val("label"), str_val(name));
    }
    if let Some(d) = &structure.description {
        doc.insert(str_val("doc"), str_val(d));
    }

    let mut inputs = Mapping::new();
    for p in &structure.inputs {
        inputs.insert(str_val(&p.id), Value::Mapping(port_body(p)));
    }
    doc.insert(str_val("inputs"), Value::Mapping(inputs));

    let mut outputs = Mapping::new();
    for p in &structure.outputs {
        let mut b = port_body(p);
        if let Some(src) = &p.source {
            b.insert(str_val("outputSource"), str_val(&format!("{src}/{}", p.id)));
        }
        outputs.insert(str_val(&p.id), Value::Mapping(b));
    }
    doc.insert(str_val("outputs"), Value::Mapping(outputs));

    let mut steps = Mapping::new();
    for st in &structure.steps {
        let outs: Vec<&str> = structure
            .outputs
            .iter()
            .filter(|o| o.source.as_deref() == Some(st.id.as_str()))
            .map(|o| o.id.as_str())
            .collect();
        let mut body = Mapping::new();
        if let Some(l) = &st.label {
            body.insert(str_val("label"), str_val(l));
        }
        body.insert(str_val("in"), Value::Mapping(Mapping::new()));
        body.insert(
            str_val("out"),
            Value::Sequence(outs.iter().map(|o| str_val(o)).collect()),
        );

        let mut out_ports = Mapping::new();
        for o in &outs {
            let mut t = Mapping::new();
            t.insert(str_val("type"), str_val("Any"));
            out_ports.insert(str_val(o), Value::Mapping(t));
        }
        let mut run = Mapping::new();
        match &st.subworkflow {
            Some(name) => {
                run.insert(str_val("class"), str_val("Workflow"));
                run.insert(str_val("id"), str_val(name));
                run.insert(str_val("inputs"), Value::Mapping(Mapping::new()));
                run.insert(str_val("outputs"), Value::Mapping(out_ports));
                run.insert(str_val("steps"), Value::Mapping(Mapping::new()));
            }
            None => {
                run.insert(str_val("class"), str_val("Operation"));
                run.insert(str_val("inputs"), Value::Mapping(Mapping::new()));
                run.insert(str_val("outputs"), Value::Mapping(out_ports));
            }
        }
        body.insert(str_val("run"), Value::Mapping(run));

        if let Some(t) = &st.tool_ref {
            let mut pkg = Mapping::new();
            pkg.insert(str_val("package"), str_val(&t.raw_id));
            if let Some(iri) = t.biotools_iri() {
                pkg.insert(str_val("specs"), Value::Sequence(vec![str_val(&iri)]));
            }
            let mut req = Mapping::new();
            req.insert(
                str_val("packages"),
                Value::Sequence(vec![Value::Mapping(pkg)]),
            );
            let mut hints = Mapping::new();
            hints.insert(str_val("SoftwareRequirement"), Value::Mapping(req));
            body.insert(str_val("hints"), Value::Mapping(hints));
        }
        steps.insert(str_val(&st.id), Value::Mapping(body));
    }
    doc.insert(str_val("steps"), Value::Mapping(steps));

    serde_yaml::to_string(&Value::Mapping(doc))
        .map(String::into_bytes)
        .map_err(|e| ParseError::InvalidStructure(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
cwlVersion: v1.2
class: Workflow
inputs:
  reads:
    type: File
    format: http://edamontology.org/format_1929
outputs:
  result:
    type: File
    outputSource: align/bam
steps:
  align:
    run: tools/align.cwl
    in: {reads: reads}
    out: [bam]
";

    #[test]
    fn minimal_counts_and_format() {
        let a = parse_cwl_abstract(MINIMAL.as_bytes()).unwrap();
        let s = &a.structure;
        assert_eq!((s.inputs.len(), s.outputs.len(), s.steps.len()), (1, 1, 1));
        assert_eq!(s.inputs[0].edam_format.as_deref(), Some("format_1929"));
        assert_eq!(s.inputs[0].data_type.as_deref(), Some("File"));
        assert_eq!(s.outputs[0].source.as_deref(), Some("align"));
        assert_eq!(s.language_version.as_deref(), Some("v1.2"));
    }

    #[test]
    fn not_a_workflow() {
        let r = parse_cwl_abstract(b"cwlVersion: v1.2\nclass: CommandLineTool\n");
        assert_eq!(r, Err(ParseError::NotAWorkflow("CommandLineTool".into())));
    }

    #[test]
    fn syntax_error_has_location() {
        let r = parse_cwl_abstract(b"class: Workflow\ninputs: [\n");
        assert!(matches!(r, Err(ParseError::Syntax { format: "YAML", .. })));
    }

    #[test]
    fn edam_annotations_surface() {
        let doc = "
cwlVersion: v1.2
class: Workflow
$namespaces:
  edam: http://edamontology.org/
  s: https://schema.org/
intent: [http://edamontology.org/operation_0525]
s:about:
  - edam:topic_0196
inputs: []
outputs: []
steps: []
";
        let a = parse_cwl_abstract(doc.as_bytes()).unwrap();
        assert_eq!(a.edam_operations, ["operation_0525"]);
        assert_eq!(a.edam_topics, ["topic_0196"]);
    }

    #[test]
    fn list_forms_and_json() {
        let doc = r##"{"cwlVersion": "v1.0", "class": "Workflow",
            "inputs": [{"id": "#main/x", "type": ["null", "File"]}],
            "outputs": [{"id": "#main/y", "type": {"type": "array", "items": "File"},
                         "outputSource": "#main/s1/out"}],
            "steps": [{"id": "#main/s1", "run": {"class": "CommandLineTool",
                "hints": [{"class": "SoftwareRequirement",
                           "packages": [{"package": "bwa", "specs": ["https://bio.tools/bwa"]}]}]},
                "in": [], "out": ["out"]}]}"##;
        let a = parse_cwl_abstract(doc.as_bytes()).unwrap();
        let s = a.structure;
        assert_eq!(s.inputs[0].id, "x");
        assert_eq!(s.inputs[0].data_type.as_deref(), Some("File?"));
        assert_eq!(s.outputs[0].data_type.as_deref(), Some("File[]"));
        assert_eq!(s.outputs[0].source.as_deref(), Some("s1"));
        let t = s.steps[0].tool_ref.as_ref().unwrap();
        assert_eq!(t.biotools_id.as_deref(), Some("bwa"));
        assert_eq!(s.raw_tool_ids, ["bwa"]);
    }

    #[test]
    fn empty_structure_generates_empty_maps() {
        let out = generate_abstract_cwl(&WorkflowStructure::default()).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("inputs: {}"), "{text}");
        assert!(text.contains("outputs: {}"));
        assert!(text.contains("steps: {}"));
        let back = parse_cwl_abstract(text.as_bytes()).unwrap().structure;
        assert!(back.inputs.is_empty() && back.steps.is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let s = WorkflowStructure {
            steps: vec![StepDecl::new("a"), StepDecl::new("a")],
            ..WorkflowStructure::default()
        };
        assert!(matches!(
            generate_abstract_cwl(&s),
            Err(ParseError::InvalidStructure(_))
        ));
    }

    #[test]
    fn two_in_one_out_two_steps_round_trip() {
        let s = WorkflowStructure {
            name: Some("demo".into()),
            inputs: vec![
                PortDecl::new("fwd"),
                PortDecl {
                    data_type: Some("File".into()),
                    edam_format: Some("format_1930".into()),
                    ..PortDecl::new("rev")
                },
            ],
            outputs: vec![PortDecl {
                source: Some("call".into()),
                ..PortDecl::new("vcf")
            }],
            steps: vec![
                StepDecl {
                    tool_ref: Some(ToolRef {
                        raw_id: "bwa".into(),
                        biotools_id: Some("bwa".into()),
                        display_name: "bwa".into(),
                    }),
                    ..StepDecl::new("map")
                },
                StepDecl {
                    subworkflow: Some("calling".into()),
                    ..StepDecl::new("call")
                },
            ],
            ..WorkflowStructure::default()
        };
        let doc = generate_abstract_cwl(&s).unwrap();
        let back = parse_cwl_abstract(&doc).unwrap().structure;
        assert_eq!(back.inputs, s.inputs);
        assert_eq!(back.outputs, s.outputs);
        assert_eq!(back.steps, s.steps);
        assert_eq!(back.name, s.name);
    }
}
