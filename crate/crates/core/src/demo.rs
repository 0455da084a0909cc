//! The demo model: Sales feeding Cash over three months.

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::model::{Element, Status};
use crate::store::{MemoryRepo, Store, VersionId};

pub const SALES_JSON: &str = include_str!("../../../fixtures/demo/sales.json");
pub const CASH_JSON: &str = include_str!("../../../fixtures/demo/cash.json");
pub const SKELETON_JSON: &str = include_str!("../../../fixtures/demo/skeleton.json");
pub const MODEL_JSON: &str = include_str!("../../../fixtures/demo/model.json");

/// Element files in save order, children first.
pub const FILES: [&str; 4] = [SALES_JSON, CASH_JSON, SKELETON_JSON, MODEL_JSON];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoIds {
    pub sales: VersionId,
    pub cash: VersionId,
    pub skeleton: VersionId,
    pub model: VersionId,
}

/// Parses the demo elements, resolving child names through `names`.
fn parse_all(mut put: impl FnMut(Element) -> Result<VersionId>) -> Result<DemoIds> {
    let mut named: Vec<(String, VersionId)> = Vec::new();
    let mut ids = Vec::new();
    for text in FILES {
        let e = Element::from_json_resolving(text, |name| {
            named
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, id)| id.clone())
                .ok_or_else(|| Error::UnknownRef(name.to_string()))
        })?;
        let name = e.name().to_string();
        let id = put(e)?;
        named.push((name, id.clone()));
        ids.push(id);
    }
    let [sales, cash, skeleton, model]: [VersionId; 4] = ids.try_into().expect("four demo files");
    Ok(DemoIds { sales, cash, skeleton, model })
}

/// The demo elements, all checked off, in an in-memory repository.
pub fn memory_repo() -> (MemoryRepo, DemoIds) {
    let mut repo = MemoryRepo::new();
    let ids = parse_all(|e| Ok(repo.insert(e))).expect("demo fixtures are valid");
    (repo, ids)
}

/// Like [`memory_repo`] but with every element left at `status`.
pub fn memory_repo_with_status(status: Status) -> (MemoryRepo, DemoIds) {
    let (mut repo, ids) = memory_repo();
    for id in [&ids.sales, &ids.cash, &ids.skeleton, &ids.model] {
        repo.set_status(id, status);
    }
    (repo, ids)
}

/// Saves the demo into `store`, sets a ref per element name and, if
/// `check_by` is given, checks every element off.
pub fn install(store: &Store, author: &str, at: DateTime<Utc>, check_by: Option<&str>) -> Result<DemoIds> {
    let ids = parse_all(|e| {
        let id = store.put_new(&e, author, at)?;
        store.set_ref(e.name(), &id)?;
        Ok(id)
    })?;
    if let Some(by) = check_by {
        for id in [&ids.sales, &ids.cash, &ids.skeleton, &ids.model] {
            store.check_off(id, by, at)?;
        }
    }
    Ok(ids)
}
