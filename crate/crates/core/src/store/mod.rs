//! Content-addressed element store with audit trails and check status.
//!
//! Layout under the store root (conventionally `.ringstore/`):
//!
//! ```text
//! objects/<id>.json   canonical element bytes
//! meta/<id>.json      kind, status, check record, audit chain
//! refs/<name>         id of the latest version saved under <name>
//! lock                present while a writer holds the store
//! ```

mod memory;
mod status;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{
    canonicalize, creation_changes, diff, validate_element, ChangeList, CheckRecord, Element,
    ElementKind, Status,
};

pub use memory::MemoryRepo;
pub use status::{transition, StatusEvent};

/// SHA-256 of an element's canonical bytes, as 64 lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VersionId(String);

impl VersionId {
    pub fn of(e: &Element) -> VersionId {
        VersionId(hex::encode(Sha256::digest(canonicalize(e))))
    }

    /// Wraps text without checking it; element files may carry ref names here
    /// until they are resolved at save time.
    pub fn from_raw(text: impl Into<String>) -> VersionId {
        VersionId(text.into())
    }

    pub fn is_well_formed(&self) -> bool {
        self.0.len() == 64 && self.0.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn short(&self) -> &str {
        &self.0[..self.0.len().min(12)]
    }
}

impl fmt::Display for VersionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub from_version: Option<VersionId>,
    pub to_version: VersionId,
    pub timestamp: DateTime<Utc>,
    pub author: String,
    pub changes: ChangeList,
    pub resulting_status: Status,
}

/// Store-side metadata of one version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionMeta {
    pub kind: ElementKind,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_record: Option<CheckRecord>,
    pub audit: Vec<AuditEntry>,
    /// Chains this version carried before it was re-derived from another parent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub superseded_chains: Vec<Vec<AuditEntry>>,
}

/// Read access to stored elements and their check state.
pub trait Repository {
    /// The element with its current status and check record filled in.
    fn element(&self, id: &VersionId) -> Result<Element>;
    fn meta(&self, id: &VersionId) -> Result<VersionMeta>;

    fn status(&self, id: &VersionId) -> Result<Status> {
        Ok(self.meta(id)?.status)
    }

    fn audit_log(&self, id: &VersionId) -> Result<Vec<AuditEntry>> {
        Ok(self.meta(id)?.audit)
    }
}

/// Worst status of `id` and everything it contains, transitively.
pub fn effective_status(repo: &dyn Repository, id: &VersionId) -> Result<Status> {
    let mut visiting = HashSet::new();
    effective_inner(repo, id, &mut visiting)
}

fn effective_inner(repo: &dyn Repository, id: &VersionId, visiting: &mut HashSet<VersionId>) -> Result<Status> {
    if !visiting.insert(id.clone()) {
        return Ok(Status::Ok);
    }
    let meta = repo.meta(id)?;
    let element = repo.element(id)?;
    let mut worst = meta.status;
    for child in element.children() {
        let s = match effective_inner(repo, child, visiting) {
            Err(Error::UnknownVersion(_)) => {
                return Err(Error::DanglingChild {
                    parent: id.clone(),
                    child: child.clone(),
                })
            }
            other => other?,
        };
        worst = worst.max(s);
    }
    visiting.remove(id);
    Ok(worst)
}

/// Ref names: `[A-Za-z0-9_\-/]+`, no empty segments or `..`.
pub fn is_valid_ref_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'/'))
        && name.split('/').all(|seg| !seg.is_empty())
}

pub struct Store {
    root: PathBuf,
}

struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

impl Store {
    /// Creates the directory layout if missing and opens it.
    pub fn init(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        for sub in ["objects", "meta", "refs"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(Store { root })
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        if !root.join("objects").is_dir() {
            return Err(Error::NoStore(root));
        }
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn lock(&self) -> Result<LockGuard> {
        let path = self.root.join("lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LockGuard { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(self.root.clone())),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn object_path(&self, id: &VersionId) -> PathBuf {
        self.root.join("objects").join(format!("{id}.json"))
    }

    fn meta_path(&self, id: &VersionId) -> PathBuf {
        self.root.join("meta").join(format!("{id}.json"))
    }

    pub fn contains(&self, id: &VersionId) -> bool {
        id.is_well_formed() && self.object_path(id).is_file()
    }

    fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    fn write_meta(&self, id: &VersionId, meta: &VersionMeta) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(meta)?;
        Self::write_atomic(&self.meta_path(id), &bytes)
    }

    fn write_object(&self, id: &VersionId, e: &Element) -> Result<()> {
        let path = self.object_path(id);
        if path.is_file() {
            return Ok(());
        }
        Self::write_atomic(&path, &canonicalize(e))
    }

    /// The element exactly as stored (canonical content, no check state).
    pub fn raw_element(&self, id: &VersionId) -> Result<Element> {
        if !self.contains(id) {
            return Err(Error::UnknownVersion(id.clone()));
        }
        let path = self.object_path(id);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    fn invalid_if_errors(e: &Element) -> Result<()> {
        let diags = validate_element(e);
        if crate::diagnostics::has_errors(&diags) {
            return Err(Error::InvalidElement(diags));
        }
        Ok(())
    }

    /// Stores a new element with no parent. Creation counts as one unchecked
    /// material change, so the status starts at Warning. Storing identical
    /// content again returns the existing id without touching its history.
    pub fn put_new(&self, e: &Element, author: &str, at: DateTime<Utc>) -> Result<VersionId> {
        Self::invalid_if_errors(e)?;
        let _lock = self.lock()?;
        let id = VersionId::of(e);
        if self.contains(&id) {
            return Ok(id);
        }
        self.write_object(&id, e)?;
        let status = transition(Status::Ok, StatusEvent::MaterialChange);
        let meta = VersionMeta {
            kind: e.kind(),
            status,
            check_record: None,
            audit: vec![AuditEntry {
                from_version: None,
                to_version: id.clone(),
                timestamp: at,
                author: author.to_string(),
                changes: creation_changes(e),
                resulting_status: status,
            }],
            superseded_chains: Vec::new(),
        };
        self.write_meta(&id, &meta)?;
        Ok(id)
    }

    /// Stores `e` as derived from `parent`, recording the diff and advancing
    /// the status machine. Returns `parent` unchanged when nothing differs.
    pub fn save_derived(&self, parent: &VersionId, e: &Element, author: &str, at: DateTime<Utc>) -> Result<VersionId> {
        let parent_element = self.raw_element(parent)?;
        if parent_element.kind() != e.kind() {
            return Err(Error::KindMismatch {
                expected: parent_element.kind(),
                found: e.kind(),
            });
        }
        Self::invalid_if_errors(e)?;
        let changes = diff(&parent_element, e)?;
        if changes.is_empty() {
            return Ok(parent.clone());
        }
        let _lock = self.lock()?;
        let parent_meta = self.meta(parent)?;
        let material = changes.is_material();
        let event = if material {
            StatusEvent::MaterialChange
        } else {
            StatusEvent::NonMaterialChange
        };
        let status = transition(parent_meta.status, event);
        let check_record = if material { None } else { parent_meta.check_record.clone() };
        let id = VersionId::of(e);
        let mut audit = parent_meta.audit.clone();
        audit.push(AuditEntry {
            from_version: Some(parent.clone()),
            to_version: id.clone(),
            timestamp: at,
            author: author.to_string(),
            changes,
            resulting_status: status,
        });
        let mut superseded_chains = Vec::new();
        if self.contains(&id) {
            let old = self.meta(&id)?;
            superseded_chains = old.superseded_chains;
            superseded_chains.push(old.audit);
        }
        self.write_object(&id, e)?;
        self.write_meta(
            &id,
            &VersionMeta {
                kind: e.kind(),
                status,
                check_record,
                audit,
                superseded_chains,
            },
        )?;
        Ok(id)
    }

    /// Records an independent check of `id`: status becomes OK. Content
    /// identity is unaffected, so the id stays the same.
    pub fn check_off(&self, id: &VersionId, by: &str, at: DateTime<Utc>) -> Result<VersionId> {
        let _lock = self.lock()?;
        let mut meta = self.meta(id)?;
        meta.status = transition(meta.status, StatusEvent::CheckOff);
        meta.check_record = Some(CheckRecord {
            checked_by: by.to_string(),
            checked_at: at,
        });
        meta.audit.push(AuditEntry {
            from_version: Some(id.clone()),
            to_version: id.clone(),
            timestamp: at,
            author: by.to_string(),
            changes: ChangeList::default(),
            resulting_status: meta.status,
        });
        self.write_meta(id, &meta)?;
        Ok(id.clone())
    }

    pub fn set_ref(&self, name: &str, id: &VersionId) -> Result<()> {
        if !is_valid_ref_name(name) {
            return Err(Error::BadRefName(name.to_string()));
        }
        let path = self.root.join("refs").join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Self::write_atomic(&path, format!("{id}\n").as_bytes())
    }

    /// Resolves a ref name or a full version id.
    pub fn resolve(&self, name_or_id: &str) -> Result<VersionId> {
        let as_id = VersionId::from_raw(name_or_id);
        if self.contains(&as_id) {
            return Ok(as_id);
        }
        if !is_valid_ref_name(name_or_id) {
            return Err(Error::UnknownRef(name_or_id.to_string()));
        }
        let path = self.root.join("refs").join(name_or_id);
        match fs::read_to_string(&path) {
            Ok(text) => {
                let id = VersionId::from_raw(text.trim());
                if self.contains(&id) {
                    Ok(id)
                } else {
                    Err(Error::UnknownVersion(id))
                }
            }
            Err(_) => Err(Error::UnknownRef(name_or_id.to_string())),
        }
    }

    /// All refs, sorted by name.
    pub fn refs(&self) -> Result<Vec<(String, VersionId)>> {
        let mut out = Vec::new();
        let base = self.root.join("refs");
        collect_refs(&base, &base, &mut out)?;
        out.sort();
        Ok(out)
    }
}

fn collect_refs(base: &Path, dir: &Path, out: &mut Vec<(String, VersionId)>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_refs(base, &path, out)?;
        } else if path.extension().is_none() {
            let name = path.strip_prefix(base).unwrap_or(&path).to_string_lossy().replace('\\', "/");
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            out.push((name, VersionId::from_raw(text.trim())));
        }
    }
    Ok(())
}

impl Repository for Store {
    fn element(&self, id: &VersionId) -> Result<Element> {
        let mut e = self.raw_element(id)?;
        let meta = self.meta(id)?;
        let doc = e.doc_mut();
        doc.status = meta.status;
        doc.check_record = meta.check_record;
        Ok(e)
    }

    fn meta(&self, id: &VersionId) -> Result<VersionMeta> {
        if !self.contains(id) {
            return Err(Error::UnknownVersion(id.clone()));
        }
        let path = self.meta_path(id);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}
