//! Server-rendered landing pages with FAIR Signposting headers and an
//! embedded Bioschemas JSON-LD block.

use axum::http::header;
use axum::response::{IntoResponse, Response};
use flowhub_core::model::{EntryId, UserId, WorkflowEntry, WorkflowVersion};
use flowhub_core::registry::ActivityKind;
use flowhub_core::Registry;

use super::{canonical_url, citation_text};
use crate::error::ApiResult;

/// The `Link` header value for one version of an entry: `cite-as` (the
/// version's DOI when minted, else the canonical URL), `describedby`,
/// `item`, one `author` per creator ORCID, and `type`.
pub fn signposting_links(base: &str, e: &WorkflowEntry, v: &WorkflowVersion) -> String {
    let url = canonical_url(base, e.id);
    let cite = e
        .doi_records
        .get(&v.version)
        .map(|r| r.iri())
        .unwrap_or_else(|| url.clone());
    let mut links = vec![
        format!("<{cite}>; rel=\"cite-as\""),
        format!(
            "<{url}/ro-crate-metadata.json?version={}>; rel=\"describedby\"; type=\"application/ld+json\"",
            v.version
        ),
        format!(
            "<{url}/ro_crate?version={}>; rel=\"item\"; type=\"application/zip\"",
            v.version
        ),
    ];
    for c in &e.creators {
        if let Some(o) = &c.orcid {
            links.push(format!("<{}>; rel=\"author\"", o.iri()));
        }
    }
    links.push("<https://schema.org/ComputationalWorkflow>; rel=\"type\"".into());
    links.push("<https://schema.org/AboutPage>; rel=\"type\"".into());
    links.join(", ")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn page(
    reg: &Registry,
    actor: Option<UserId>,
    id: EntryId,
    version: Option<u32>,
) -> ApiResult<Response> {
    let (e, v) = reg.get_version(actor, id, version)?;
    let jsonld = reg.bioschemas(actor, id, Some(v.version))?;
    reg.record_activity(id, ActivityKind::View)?;

    let base = reg.base_url();
    let url = canonical_url(base, id);
    // `</` inside a script block would end it early.
    let script = jsonld.to_string().replace("</", "<\\/");
    let creators = e
        .creators
        .iter()
        .map(|c| escape(&c.name))
        .collect::<Vec<_>>()
        .join(", ");
    let class = reg
        .classes()
        .get(&e.workflow_class)
        .map(|c| c.display_name.clone())
        .unwrap_or_else(|| e.workflow_class.to_string());
    let html = format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>{title}</title>\n<link rel=\"canonical\" href=\"{url}\">\n\
         <script type=\"application/ld+json\">{script}</script>\n</head>\n<body>\n\
         <h1>{title}</h1>\n<p class=\"class\">{class}</p>\n<p class=\"creators\">{creators}</p>\n\
         <p class=\"description\">{description}</p>\n\
         <p>Version {version}. License: {license}.</p>\n\
         <p class=\"citation\">{citation}</p>\n\
         <p><a href=\"{url}/ro_crate?version={version}\">Download RO-Crate</a></p>\n\
         </body>\n</html>\n",
        title = escape(&e.title),
        class = escape(&class),
        description = escape(&e.description),
        version = v.version,
        license = escape(e.license.as_deref().unwrap_or("none")),
        citation = escape(&citation_text(base, &e)),
    );
    Ok((
        [
            (header::CONTENT_TYPE, "text/html; charset=utf-8".to_string()),
            (header::LINK, signposting_links(base, &e, &v)),
        ],
        html,
    )
        .into_response())
}
