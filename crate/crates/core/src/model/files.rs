//! In-memory file trees with content-addressed blobs.
//!
//! A tree serialises as a manifest (`path -> {digest, size, media_type}`);
//! bytes live in a blob store keyed by SHA-256 and are re-attached with
//! [`FileTree::hydrate`] after loading.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Best-effort media type from a file name.
pub fn guess_media_type(path: &str) -> &'static str {
    let name = path.rsplit('/').next().unwrap_or(path);
    let lower = name.to_ascii_lowercase();
    if lower == "snakefile" || lower == "nextflow.config" || lower == "readme" {
        return "text/plain";
    }
    match lower.rsplit_once('.').map(|(_, ext)| ext) {
        Some("json") | Some("ga") | Some("jsonld") => "application/json",
        Some("cwl") | Some("yml") | Some("yaml") | Some("cff") => "text/yaml",
        Some("md") | Some("markdown") => "text/markdown",
        Some("ipynb") => "application/x-ipynb+json",
        Some("py") => "text/x-python",
        Some("sh") | Some("bash") => "text/x-shellscript",
        Some("nf") | Some("smk") | Some("wdl") | Some("txt") | Some("tsv") | Some("csv") => {
            "text/plain"
        }
        Some("html") | Some("htm") => "text/html",
        Some("png") => "image/png",
        Some("jpg") | Some("jpeg") => "image/jpeg",
        Some("svg") => "image/svg+xml",
        Some("zip") => "application/zip",
        _ => "application/octet-stream",
    }
}

#[derive(Debug, Clone)]
pub struct FileBlob {
    digest: String,
    size: u64,
    media_type: String,
    content: Option<Arc<[u8]>>,
}

impl FileBlob {
    pub fn new(content: impl Into<Arc<[u8]>>, media_type: impl Into<String>) -> Self {
        let content: Arc<[u8]> = content.into();
        FileBlob {
            digest: sha256_hex(&content),
            size: content.len() as u64,
            media_type: media_type.into(),
            content: Some(content),
        }
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn media_type(&self) -> &str {
        &self.media_type
    }

    /// File bytes. Trees loaded from a store must be hydrated first.
    pub fn bytes(&self) -> &[u8] {
        self.content
            .as_deref()
            .expect("file tree used before its blobs were hydrated")
    }

    pub fn shared_bytes(&self) -> Arc<[u8]> {
        self.content
            .clone()
            .expect("file tree used before its blobs were hydrated")
    }

    pub fn is_hydrated(&self) -> bool {
        self.content.is_some()
    }
}

impl PartialEq for FileBlob {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest && self.media_type == other.media_type
    }
}

impl Eq for FileBlob {}

/// Path-ordered set of files. Paths are relative, `/`-separated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileTree {
    files: BTreeMap<String, FileBlob>,
}

impl FileTree {
    pub fn new() -> Self {
        FileTree::default()
    }

    /// Inserts a file, guessing its media type from the path.
    pub fn insert(&mut self, path: impl Into<String>, content: impl Into<Arc<[u8]>>) {
        let path = normalize_path(&path.into());
        let media = guess_media_type(&path);
        self.files.insert(path, FileBlob::new(content, media));
    }

    pub fn insert_blob(&mut self, path: impl Into<String>, blob: FileBlob) {
        self.files.insert(normalize_path(&path.into()), blob);
    }

    pub fn with(mut self, path: impl Into<String>, content: impl AsRef<[u8]>) -> Self {
        self.insert(path, content.as_ref().to_vec());
        self
    }

    pub fn remove(&mut self, path: &str) -> Option<FileBlob> {
        self.files.remove(path)
    }

    pub fn get(&self, path: &str) -> Option<&FileBlob> {
        self.files.get(path)
    }

    pub fn bytes(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(FileBlob::bytes)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.files.contains_key(path)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FileBlob)> {
        self.files.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn total_size(&self) -> u64 {
        self.files.values().map(FileBlob::size).sum()
    }

    /// Finds a file by name, case-insensitively, at any depth.
    pub fn find_by_name(&self, name: &str) -> Vec<&str> {
        self.paths()
            .filter(|p| {
                p.rsplit('/')
                    .next()
                    .is_some_and(|n| n.eq_ignore_ascii_case(name))
            })
            .collect()
    }

    /// Re-attaches blob bytes after deserialisation.
    pub fn hydrate<E>(
        &mut self,
        mut load: impl FnMut(&str) -> Result<Arc<[u8]>, E>,
    ) -> Result<(), E> {
        for blob in self.files.values_mut() {
            if blob.content.is_none() {
                blob.content = Some(load(&blob.digest)?);
            }
        }
        Ok(())
    }
}

pub fn normalize_path(path: &str) -> String {
    path.trim_start_matches("./")
        .trim_start_matches('/')
        .replace('\\', "/")
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    digest: String,
    size: u64,
    media_type: String,
}

impl Serialize for FileTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let manifest: BTreeMap<&str, ManifestEntry> = self
            .files
            .iter()
            .map(|(p, b)| {
                (
                    p.as_str(),
                    ManifestEntry {
                        digest: b.digest.clone(),
                        size: b.size,
                        media_type: b.media_type.clone(),
                    },
                )
            })
            .collect();
        manifest.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FileTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let manifest = BTreeMap::<String, ManifestEntry>::deserialize(deserializer)?;
        let files = manifest
            .into_iter()
            .map(|(p, m)| {
                (
                    p,
                    FileBlob {
                        digest: m.digest,
                        size: m.size,
                        media_type: m.media_type,
                        content: None,
                    },
                )
            })
            .collect();
        Ok(FileTree { files })
    }
}
