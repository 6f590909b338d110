//! Helpers for the HTTP tests: an app over a registry with a manual clock
//! and a recording minter, a request helper, and an RFC 8288 `Link` header
//! parser that shares no code with the server.

#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use chrono::{TimeZone, Utc};
use flowhub_core::model::{TeamId, UserId};
use flowhub_core::registry::{ManualClock, MockMintClient, NewTeam, NewUser};
use flowhub_core::{Registry, RegistryConfig};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

/// The core crate's test helpers and oracles.
#[path = "../../../core/tests/common/mod.rs"]
pub mod shared;

#[allow(unused_imports)]
pub use shared::{fixtures, varlociraptor_tree, GitFixture, GALAXY_DOC};

pub struct App {
    pub reg: Arc<Registry>,
    pub clock: Arc<ManualClock>,
    pub minter: Arc<MockMintClient>,
    pub router: Router,
}

pub fn app_with(config: RegistryConfig) -> App {
    let clock = Arc::new(ManualClock::new(
        Utc.with_ymd_and_hms(2026, 1, 1, 12, 0, 0).unwrap(),
    ));
    let minter = Arc::new(MockMintClient::default());
    let reg = Arc::new(Registry::with_parts(config, clock.clone(), minter.clone()).unwrap());
    let router = flowhub_server::router(reg.clone());
    App {
        reg,
        clock,
        minter,
        router,
    }
}

/// Serves an existing core test harness over HTTP.
pub fn app_from(h: shared::Harness) -> App {
    let reg = Arc::new(h.reg);
    let router = flowhub_server::router(reg.clone());
    App {
        reg,
        clock: h.clock,
        minter: h.minter,
        router,
    }
}

pub fn app() -> App {
    app_with(RegistryConfig::default())
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

pub struct Call<'a> {
    app: &'a App,
    req: axum::http::request::Builder,
    body: Body,
}

impl App {
    pub fn call(&self, method: Method, uri: &str) -> Call<'_> {
        Call {
            app: self,
            req: Request::builder().method(method).uri(uri),
            body: Body::empty(),
        }
    }

    pub fn get(&self, uri: &str) -> Call<'_> {
        self.call(Method::GET, uri)
    }

    pub fn post(&self, uri: &str) -> Call<'_> {
        self.call(Method::POST, uri)
    }

    pub fn user(&self, name: &str) -> (UserId, String) {
        let u = self.reg.create_user(NewUser::named(name)).unwrap();
        let token = self.reg.issue_token(u.id).unwrap();
        (u.id, token)
    }

    pub fn team(&self, owner: UserId, name: &str) -> TeamId {
        let space = self.reg.default_space().id;
        self.reg
            .create_team(Some(owner), NewTeam::in_space(name, space))
            .unwrap()
            .id
    }
}

impl Call<'_> {
    pub fn token(mut self, token: &str) -> Self {
        self.req = self.req.header("authorization", format!("Bearer {token}"));
        self
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.req = self.req.header(name, value);
        self
    }

    pub fn json(mut self, body: &Value) -> Self {
        self.req = self.req.header("content-type", "application/json");
        self.body = Body::from(body.to_string());
        self
    }

    pub fn bytes(mut self, body: Vec<u8>) -> Self {
        self.body = Body::from(body);
        self
    }

    pub async fn send(self) -> Reply {
        let req = self.req.body(self.body).unwrap();
        let res = self.app.router.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let headers = res.headers().clone();
        let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply {
            status,
            headers,
            body,
        }
    }
}

/// One parsed `Link` value: the target and its parameters, names
/// lowercased and quotes removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub target: String,
    pub params: Vec<(String, String)>,
}

impl Link {
    pub fn param(&self, name: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    /// `rel` may hold several space-separated relation types.
    pub fn has_rel(&self, rel: &str) -> bool {
        self.param("rel").is_some_and(|r| {
            r.split_ascii_whitespace()
                .any(|x| x.eq_ignore_ascii_case(rel))
        })
    }
}

/// Parses a `Link` header field value. Commas inside `<...>` or quoted
/// strings do not split links.
pub fn parse_link_header(value: &str) -> Result<Vec<Link>, String> {
    let chars: Vec<char> = value.chars().collect();
    let mut i = 0;
    let mut links = Vec::new();
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    loop {
        skip_ws(&mut i);
        if i >= chars.len() {
            break;
        }
        if chars[i] != '<' {
            return Err(format!("expected `<` at {i}"));
        }
        let end = chars[i..]
            .iter()
            .position(|c| *c == '>')
            .ok_or("unterminated URI reference")?
            + i;
        let target: String = chars[i + 1..end].iter().collect();
        i = end + 1;
        let mut params = Vec::new();
        loop {
            skip_ws(&mut i);
            if i >= chars.len() || chars[i] == ',' {
                i += 1;
                break;
            }
            if chars[i] != ';' {
                return Err(format!("expected `;` or `,` at {i}"));
            }
            i += 1;
            skip_ws(&mut i);
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || "!#$&+-.^_`|~*".contains(chars[i]))
            {
                i += 1;
            }
            let name: String = chars[start..i]
                .iter()
                .collect::<String>()
                .to_ascii_lowercase();
            if name.is_empty() {
                return Err(format!("empty parameter name at {i}"));
            }
            skip_ws(&mut i);
            let mut val = String::new();
            if i < chars.len() && chars[i] == '=' {
                i += 1;
                skip_ws(&mut i);
                if i < chars.len() && chars[i] == '"' {
                    i += 1;
                    while i < chars.len() && chars[i] != '"' {
                        if chars[i] == '\\' && i + 1 < chars.len() {
                            i += 1;
                        }
                        val.push(chars[i]);
                        i += 1;
                    }
                    if i >= chars.len() {
                        return Err("unterminated quoted string".into());
                    }
                    i += 1;
                } else {
                    while i < chars.len()
                        && !matches!(chars[i], ';' | ',')
                        && !chars[i].is_whitespace()
                    {
                        val.push(chars[i]);
                        i += 1;
                    }
                }
            }
            params.push((name, val));
        }
        links.push(Link { target, params });
    }
    Ok(links)
}

/// The first `<script type="application/ld+json">` block of a page.
pub fn jsonld_block(html: &str) -> Option<Value> {
    let open = html.find("<script type=\"application/ld+json\">")?;
    let start = open + html[open..].find('>')? + 1;
    let end = start + html[start..].find("</script>")?;
    serde_json::from_str(&html[start..end]).ok()
}

/// `@type` values of a JSON-LD node, whether given as a string or a list.
pub fn types_of(node: &Value) -> Vec<String> {
    match &node["@type"] {
        Value::String(s) => vec![s.clone()],
        Value::Array(a) => a
            .iter()
            .filter_map(|t| t.as_str().map(String::from))
            .collect(),
        _ => Vec::new(),
    }
}

/// Whether the document or any node of its `@graph` has the type.
pub fn has_type(doc: &Value, ty: &str) -> bool {
    let graph = doc["@graph"]
        .as_array()
        .map(Vec::as_slice)
        .unwrap_or_default();
    std::iter::once(doc)
        .chain(graph)
        .any(|n| types_of(n).iter().any(|t| t == ty))
}
