//! Cell-by-cell comparison of a workbook file with regeneration from its model.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::assemble::assemble_id;
use crate::codegen::{a1, layout, quote_sheet, GenerationInfo, TOOL_VERSION};
use crate::emit::xlsx::{cell_text, read_xlsx, RawWorkbook};
use crate::error::{Error, Result};
use crate::store::{Repository, VersionId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellDifference {
    /// `Sheet!A1`, or `name:<Name>` for a defined name.
    pub cell: String,
    pub expected: Option<String>,
    pub found: Option<String>,
}

impl fmt::Display for CellDifference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &Option<String>| s.clone().unwrap_or_else(|| "(empty)".into());
        write!(f, "{}: expected {}, found {}", self.cell, show(&self.expected), show(&self.found))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub model: VersionId,
    /// Model version written in the file's Meta sheet.
    pub recorded_model: Option<String>,
    pub differences: Vec<CellDifference>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.differences.is_empty()
    }

    /// Set when Meta names a different model version than the one checked against.
    pub fn version_mismatch(&self) -> Option<Error> {
        match &self.recorded_model {
            Some(r) if r != self.model.as_str() => {
                Some(Error::VersionMismatch { recorded: r.clone(), expected: self.model.to_string() })
            }
            None => Some(Error::VersionMismatch { recorded: "(none)".into(), expected: self.model.to_string() }),
            _ => None,
        }
    }
}

/// Regenerates the workbook of `model` using the file's own generation
/// timestamp and compares every cell and defined name.
pub fn verify(bytes: &[u8], model: &VersionId, repo: &dyn Repository) -> Result<VerifyReport> {
    let raw = read_xlsx(bytes)?;
    verify_raw(&raw, model, repo)
}

pub fn verify_raw(raw: &RawWorkbook, model: &VersionId, repo: &dyn Repository) -> Result<VerifyReport> {
    let recorded_model = raw.meta_field("Model", 3);
    let generated_at = raw
        .meta_field("Generated", 2)
        .and_then(|t| DateTime::parse_from_rfc3339(&t).ok())
        .map(|t| t.with_timezone(&Utc))
        .unwrap_or_default();
    let a = assemble_id(model, repo).map_err(Error::Assembly)?;
    let info = GenerationInfo { tool_version: TOOL_VERSION.to_string(), generated_at };
    let ir = layout(&a, &info);

    let mut differences = Vec::new();
    let mut names: Vec<&str> = ir.sheets.iter().map(|s| s.name.as_str()).collect();
    for s in &raw.sheets {
        if !names.contains(&s.name.as_str()) {
            names.push(&s.name);
        }
    }
    for name in names {
        let expected = ir.sheet(name);
        let found = raw.sheet(name);
        let mut keys: BTreeSet<(u32, u32)> = BTreeSet::new();
        keys.extend(expected.iter().flat_map(|s| s.cells.keys().copied()));
        keys.extend(found.iter().flat_map(|s| s.cells.keys().copied()));
        for (r, c) in keys {
            let e = expected.and_then(|s| s.get(r, c)).map(cell_text);
            let f = found.and_then(|s| s.cells.get(&(r, c))).map(|c| c.text());
            if e != f {
                differences.push(CellDifference { cell: format!("{}!{}", quote_sheet(name), a1(r, c)), expected: e, found: f });
            }
        }
    }
    let mut defined: BTreeSet<&str> = ir.names.iter().map(|n| n.name.as_str()).collect();
    defined.extend(raw.names.keys().map(String::as_str));
    for n in defined {
        let e = ir.name(n).map(|d| d.target());
        let f = raw.names.get(n).cloned();
        if e != f {
            differences.push(CellDifference { cell: format!("name:{n}"), expected: e, found: f });
        }
    }
    Ok(VerifyReport { model: model.clone(), recorded_model, differences })
}
