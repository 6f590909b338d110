//! Importing workflow sources from Git repositories.
//!
//! Local paths (bare or working repositories) are opened in place; `http(s)`
//! remotes are cloned into a temporary bare repository with a shallow fetch.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use chrono::{DateTime, TimeZone, Utc};
use git2::{build::RepoBuilder, Commit, FetchOptions, ObjectType, Oid, Repository, TreeWalkMode};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ClassId, ClassRegistry, FileTree};
use crate::parsers::detect_class;

pub const DEFAULT_MAX_BYTES: u64 = 256 * 1024 * 1024;
pub const DEFAULT_MAX_FILES: usize = 10_000;
pub const DEFAULT_DEPTH: i32 = 50;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GitError {
    #[error("cannot fetch `{remote}`: {message}")]
    FetchError { remote: String, message: String },
    #[error("ref `{0}` not found")]
    RefNotFound(String),
    #[error("repository exceeds the import limit of {0}")]
    SizeLimit(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitInfo {
    pub commit_id: String,
    pub message: String,
    pub timestamp: DateTime<Utc>,
}

/// A tag and the commit it points to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Release {
    pub tag: String,
    pub commit_id: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepositorySnapshot {
    pub remote: String,
    pub git_ref: String,
    pub commit_id: String,
    pub files: FileTree,
    /// Newest first; the head is `commit_id`.
    pub commit_log: Vec<CommitInfo>,
    pub tags: Vec<Release>,
}

#[derive(Debug, Clone, Copy)]
pub struct ImportOptions {
    pub max_bytes: u64,
    pub max_files: usize,
    /// Fetch depth for remote clones; `None` fetches full history.
    pub depth: Option<i32>,
}

impl Default for ImportOptions {
    fn default() -> Self {
        ImportOptions {
            max_bytes: DEFAULT_MAX_BYTES,
            max_files: DEFAULT_MAX_FILES,
            depth: Some(DEFAULT_DEPTH),
        }
    }
}

/// One lock per remote so concurrent imports of the same remote queue up.
fn remote_lock(remote: &str) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<String, Arc<Mutex<()>>>>> = OnceLock::new();
    LOCKS
        .get_or_init(Default::default)
        .lock()
        .entry(remote.to_string())
        .or_default()
        .clone()
}

fn fetch_error(remote: &str, e: impl std::fmt::Display) -> GitError {
    GitError::FetchError {
        remote: remote.to_string(),
        message: e.to_string(),
    }
}

fn timestamp(commit: &Commit) -> DateTime<Utc> {
    Utc.timestamp_opt(commit.time().seconds(), 0)
        .single()
        .unwrap_or_default()
}

fn resolve<'r>(repo: &'r Repository, name: &str) -> Result<Commit<'r>, GitError> {
    let candidates = [
        format!("refs/tags/{name}"),
        format!("refs/heads/{name}"),
        format!("refs/remotes/origin/{name}"),
        name.to_string(),
    ];
    for c in &candidates {
        if let Ok(r) = repo.find_reference(c) {
            if let Ok(commit) = r.peel_to_commit() {
                return Ok(commit);
            }
        }
    }
    if name.len() == 40 && name.chars().all(|c| c.is_ascii_hexdigit()) {
        if let Ok(commit) = Oid::from_str(name).and_then(|o| repo.find_commit(o)) {
            return Ok(commit);
        }
    }
    Err(GitError::RefNotFound(name.to_string()))
}

fn head_name(repo: &Repository) -> Result<(String, Commit<'_>), GitError> {
    let head = repo
        .head()
        .map_err(|_| GitError::RefNotFound("HEAD".into()))?;
    let name = head.shorthand().unwrap_or("HEAD").to_string();
    let commit = head
        .peel_to_commit()
        .map_err(|_| GitError::RefNotFound("HEAD".into()))?;
    Ok((name, commit))
}

fn read_tree(
    repo: &Repository,
    commit: &Commit,
    opts: &ImportOptions,
) -> Result<FileTree, GitError> {
    let tree = commit
        .tree()
        .map_err(|e| GitError::RefNotFound(e.message().to_string()))?;
    let mut files = FileTree::new();
    let mut total: u64 = 0;
    let mut failure: Option<GitError> = None;
    let walk = tree.walk(TreeWalkMode::PreOrder, |dir, entry| {
        if entry.kind() != Some(ObjectType::Blob) {
            return git2::TreeWalkResult::Ok;
        }
        let Ok(blob) = repo.find_blob(entry.id()) else {
            return git2::TreeWalkResult::Ok;
        };
        total += blob.size() as u64;
        if files.len() + 1 > opts.max_files {
            failure = Some(GitError::SizeLimit(format!("{} files", opts.max_files)));
            return git2::TreeWalkResult::Abort;
        }
        if total > opts.max_bytes {
            failure = Some(GitError::SizeLimit(format!("{} bytes", opts.max_bytes)));
            return git2::TreeWalkResult::Abort;
        }
        let name = entry.name().unwrap_or_default();
        files.insert(format!("{dir}{name}"), blob.content().to_vec());
        git2::TreeWalkResult::Ok
    });
    if let Some(f) = failure {
        return Err(f);
    }
    walk.map_err(|e| GitError::RefNotFound(e.message().to_string()))?;
    Ok(files)
}

fn commit_log(repo: &Repository, head: Oid) -> Vec<CommitInfo> {
    let Ok(mut walk) = repo.revwalk() else {
        return Vec::new();
    };
    let _ = walk.set_sorting(git2::Sort::TOPOLOGICAL | git2::Sort::TIME);
    if walk.push(head).is_err() {
        return Vec::new();
    }
    walk.filter_map(Result::ok)
        .filter_map(|oid| repo.find_commit(oid).ok())
        .map(|c| CommitInfo {
            commit_id: c.id().to_string(),
            message: c.message().unwrap_or_default().trim_end().to_string(),
            timestamp: timestamp(&c),
        })
        .collect()
}

fn tags(repo: &Repository) -> Vec<Release> {
    let Ok(names) = repo.tag_names(None) else {
        return Vec::new();
    };
    names
        .iter()
        .flatten()
        .flatten()
        .filter_map(|name| {
            let commit = repo
                .find_reference(&format!("refs/tags/{name}"))
                .ok()?
                .peel_to_commit()
                .ok()?;
            Some(Release {
                tag: name.to_string(),
                commit_id: commit.id().to_string(),
                timestamp: timestamp(&commit),
            })
        })
        .collect()
}

fn snapshot(
    repo: &Repository,
    remote: &str,
    git_ref: Option<&str>,
    opts: &ImportOptions,
) -> Result<RepositorySnapshot, GitError> {
    let (name, commit) = match git_ref {
        Some(r) => (r.to_string(), resolve(repo, r)?),
        None => head_name(repo)?,
    };
    let files = read_tree(repo, &commit, opts)?;
    Ok(RepositorySnapshot {
        remote: remote.to_string(),
        git_ref: name,
        commit_id: commit.id().to_string(),
        files,
        commit_log: commit_log(repo, commit.id()),
        tags: tags(repo),
    })
}

fn is_ssh(remote: &str) -> bool {
    remote.starts_with("ssh://")
        || remote.starts_with("git@")
        || (remote.contains('@') && remote.contains(':') && !remote.contains("://"))
}

pub fn import_repository(
    remote: &str,
    git_ref: Option<&str>,
) -> Result<RepositorySnapshot, GitError> {
    import_repository_with(remote, git_ref, &ImportOptions::default())
}

pub fn import_repository_with(
    remote: &str,
    git_ref: Option<&str>,
    opts: &ImportOptions,
) -> Result<RepositorySnapshot, GitError> {
    let lock = remote_lock(remote);
    let _guard = lock.lock();

    if remote.starts_with("https://") || remote.starts_with("http://") {
        let dir = tempfile::tempdir().map_err(|e| fetch_error(remote, e))?;
        let mut fetch = FetchOptions::new();
        if let Some(d) = opts.depth {
            fetch.depth(d);
        }
        fetch.download_tags(git2::AutotagOption::All);
        let repo = RepoBuilder::new()
            .bare(true)
            .fetch_options(fetch)
            .clone(remote, dir.path())
            .map_err(|e| fetch_error(remote, e.message()))?;
        return snapshot(&repo, remote, git_ref, opts);
    }
    if is_ssh(remote) {
        return Err(fetch_error(
            remote,
            "only https and local repositories are supported",
        ));
    }
    let path = remote.strip_prefix("file://").unwrap_or(remote);
    let repo = Repository::open(Path::new(path)).map_err(|e| fetch_error(remote, e.message()))?;
    snapshot(&repo, remote, git_ref, opts)
}

/// Candidate main workflow files, best first. Files of class `other` are
/// left out. Workflow languages rank above scripting languages, then
/// shallower paths above deeper ones, then paths sort lexicographically.
pub fn detect_workflow_files(files: &FileTree, classes: &ClassRegistry) -> Vec<(String, ClassId)> {
    let mut found: Vec<(bool, usize, String, ClassId)> = files
        .iter()
        .filter_map(|(path, blob)| {
            let class = detect_class(classes, path, blob.bytes()).ok()?;
            if class.is_other() {
                return None;
            }
            let language = classes.get(&class).is_some_and(|c| c.is_workflow_language);
            Some((
                !language,
                path.matches('/').count(),
                path.to_string(),
                class,
            ))
        })
        .collect();
    found.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    found.into_iter().map(|(_, _, p, c)| (p, c)).collect()
}

/// The repository README: `README.md` or `README` in any letter case,
/// shallowest first.
pub fn extract_readme(files: &FileTree) -> Option<String> {
    let mut candidates: Vec<(usize, bool, &str)> = files
        .paths()
        .filter_map(|p| {
            let name = p.rsplit('/').next()?;
            let md = name.eq_ignore_ascii_case("README.md");
            (md || name.eq_ignore_ascii_case("README")).then(|| (p.matches('/').count(), !md, p))
        })
        .collect();
    candidates.sort();
    let (_, _, path) = candidates.first()?;
    files
        .bytes(path)
        .map(|b| String::from_utf8_lossy(b).into_owned())
}

/// `CITATION.cff` at the repository root.
pub fn citation_file(files: &FileTree) -> Option<&[u8]> {
    files.bytes("CITATION.cff")
}

/// Tags ordered by commit time, ties broken by tag name.
pub fn enumerate_releases(snapshot: &RepositorySnapshot) -> Vec<Release> {
    let mut out = snapshot.tags.clone();
    out.sort_by(|a, b| (a.timestamp, &a.tag).cmp(&(b.timestamp, &b.tag)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking() {
        let t = FileTree::new()
            .with("deep/b.cwl", "cwlVersion: v1.2\nclass: Workflow\n")
            .with("a.cwl", "cwlVersion: v1.2\nclass: Workflow\n")
            .with("run.sh", "#!/bin/bash\n")
            .with("README.md", "# x");
        let got = detect_workflow_files(&t, &ClassRegistry::seeded());
        let paths: Vec<&str> = got.iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(paths, ["a.cwl", "deep/b.cwl", "run.sh"]);
    }

    #[test]
    fn readme_order() {
        let t = FileTree::new()
            .with("docs/README.md", "docs")
            .with("x/readme", "x");
        assert_eq!(extract_readme(&t).as_deref(), Some("docs"));
        let t = t.with("Readme.md", "root");
        assert_eq!(extract_readme(&t).as_deref(), Some("root"));
        assert_eq!(extract_readme(&FileTree::new()), None);
    }

    #[test]
    fn ssh_is_refused() {
        for r in ["git@github.com:a/b.git", "ssh://git@host/a.git"] {
            assert!(matches!(
                import_repository(r, None),
                Err(GitError::FetchError { .. })
            ));
        }
    }
}
