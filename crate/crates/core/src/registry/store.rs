//! File-backed persistence.
//!
//! Layout under the store directory:
//!
//! ```text
//! entities/<kind>/<id>.json   one JSON document per entity
//! entities/meta/<name>.json   counters, credentials, tokens, subscriptions
//! blobs/<sha256>              file contents, shared across versions
//! events.log                  newline-delimited JSON, append-only
//! ```
//!
//! Writes go to a temporary file first and are renamed into place.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::RegistryError;
use crate::model::FileTree;

#[derive(Debug)]
pub(crate) struct FileStore {
    root: PathBuf,
}

fn storage(e: impl std::fmt::Display) -> RegistryError {
    RegistryError::Storage(e.to_string())
}

impl FileStore {
    pub fn open(root: &Path) -> Result<Self, RegistryError> {
        for sub in ["entities/meta", "blobs"] {
            fs::create_dir_all(root.join(sub))?;
        }
        Ok(FileStore {
            root: root.to_path_buf(),
        })
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), RegistryError> {
        let dir = path.parent().expect("store paths have a parent");
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_data()?;
        tmp.persist(path).map_err(|e| storage(e.error))?;
        Ok(())
    }

    fn entity_path(&self, kind: &str, id: &str) -> PathBuf {
        self.root
            .join("entities")
            .join(kind)
            .join(format!("{id}.json"))
    }

    pub fn save<T: Serialize>(
        &self,
        kind: &str,
        id: impl ToString,
        value: &T,
    ) -> Result<(), RegistryError> {
        let bytes = serde_json::to_vec_pretty(value).map_err(storage)?;
        self.write_atomic(&self.entity_path(kind, &id.to_string()), &bytes)
    }

    pub fn delete(&self, kind: &str, id: impl ToString) -> Result<(), RegistryError> {
        match fs::remove_file(self.entity_path(kind, &id.to_string())) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    pub fn load_all<T: DeserializeOwned>(&self, kind: &str) -> Result<Vec<T>, RegistryError> {
        let dir = self.root.join("entities").join(kind);
        let Ok(read) = fs::read_dir(&dir) else {
            return Ok(Vec::new());
        };
        let mut paths: Vec<PathBuf> = read
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths
            .iter()
            .map(|p| {
                let bytes = fs::read(p)?;
                serde_json::from_slice(&bytes).map_err(|e| storage(format!("{}: {e}", p.display())))
            })
            .collect()
    }

    pub fn load_one<T: DeserializeOwned>(
        &self,
        kind: &str,
        id: &str,
    ) -> Result<Option<T>, RegistryError> {
        let path = self.entity_path(kind, id);
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path)?;
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| storage(format!("{}: {e}", path.display())))
    }

    pub fn save_blobs(&self, files: &FileTree) -> Result<(), RegistryError> {
        for (_, blob) in files.iter() {
            let path = self.root.join("blobs").join(blob.digest());
            if !path.exists() {
                self.write_atomic(&path, blob.bytes())?;
            }
        }
        Ok(())
    }

    pub fn hydrate(&self, files: &mut FileTree) -> Result<(), RegistryError> {
        let blobs = self.root.join("blobs");
        files.hydrate(|digest| {
            fs::read(blobs.join(digest))
                .map(Arc::from)
                .map_err(|e| storage(format!("blob {digest}: {e}")))
        })
    }

    pub fn append_event<T: Serialize>(&self, event: &T) -> Result<(), RegistryError> {
        let mut line = serde_json::to_vec(event).map_err(storage)?;
        line.push(b'\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.root.join("events.log"))?;
        f.write_all(&line)?;
        f.sync_data()?;
        Ok(())
    }

    pub fn load_events<T: DeserializeOwned>(&self) -> Result<Vec<T>, RegistryError> {
        let Ok(f) = File::open(self.root.join("events.log")) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(storage)?);
        }
        Ok(out)
    }
}
