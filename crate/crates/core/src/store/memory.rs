use std::collections::HashMap;

use chrono::{DateTime, Utc};

use super::{AuditEntry, Repository, VersionId, VersionMeta};
use crate::error::{Error, Result};
use crate::model::{creation_changes, CheckRecord, Element, Status};

/// In-memory repository for tests, benches and one-off assemblies.
/// Elements may be inserted under arbitrary ids, which makes otherwise
/// unconstructible shapes (such as embedding cycles) expressible.
#[derive(Debug, Default, Clone)]
pub struct MemoryRepo {
    entries: HashMap<VersionId, (Element, VersionMeta)>,
}

impl MemoryRepo {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts under the content id, checked off as OK.
    pub fn insert(&mut self, e: Element) -> VersionId {
        let id = VersionId::of(&e);
        self.insert_as(id.clone(), e, Status::Ok);
        id
    }

    pub fn insert_as(&mut self, id: VersionId, e: Element, status: Status) {
        let at = DateTime::<Utc>::UNIX_EPOCH;
        let check_record = (status == Status::Ok).then(|| CheckRecord {
            checked_by: "memory".into(),
            checked_at: at,
        });
        let meta = VersionMeta {
            kind: e.kind(),
            status,
            check_record,
            audit: vec![AuditEntry {
                from_version: None,
                to_version: id.clone(),
                timestamp: at,
                author: "memory".into(),
                changes: creation_changes(&e),
                resulting_status: status,
            }],
            superseded_chains: Vec::new(),
        };
        self.entries.insert(id, (e, meta));
    }

    pub fn set_status(&mut self, id: &VersionId, status: Status) {
        if let Some((_, meta)) = self.entries.get_mut(id) {
            meta.status = status;
        }
    }
}

impl Repository for MemoryRepo {
    fn element(&self, id: &VersionId) -> Result<Element> {
        let (e, meta) = self
            .entries
            .get(id)
            .ok_or_else(|| Error::UnknownVersion(id.clone()))?;
        let mut e = e.clone();
        e.doc_mut().status = meta.status;
        e.doc_mut().check_record = meta.check_record.clone();
        Ok(e)
    }

    fn meta(&self, id: &VersionId) -> Result<VersionMeta> {
        self.entries
            .get(id)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::UnknownVersion(id.clone()))
    }
}
