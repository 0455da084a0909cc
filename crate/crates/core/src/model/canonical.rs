//! Element files, canonical bytes and structural diffs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::types::Element;
use crate::error::{Error, Result};
use crate::store::VersionId;

pub const FORMAT_VERSION: u64 = 1;

/// Parses every `expr` string up front so a bad formula reports as a
/// parse error rather than a malformed file.
fn check_formulas(v: &Value) -> Result<()> {
    match v {
        Value::Object(map) => {
            if let Some(Value::String(text)) = map.get("expr") {
                crate::expr::parse(text)?;
            }
            map.values().try_for_each(check_formulas)
        }
        Value::Array(items) => items.iter().try_for_each(check_formulas),
        _ => Ok(()),
    }
}

impl Element {
    /// Reads an element file (`format_version` 1).
    pub fn from_json(text: &str) -> Result<Element> {
        let mut value: Value = serde_json::from_str(text)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Format("top level must be an object".into()))?;
        match obj.remove("format_version").and_then(|v| v.as_u64()) {
            Some(FORMAT_VERSION) => {}
            Some(other) => return Err(Error::Format(format!("unsupported format_version {other}"))),
            None => return Err(Error::Format("missing format_version".into())),
        }
        check_formulas(&value)?;
        Ok(serde_json::from_value(value)?)
    }

    /// Reads an element file whose child references may be ref names
    /// instead of version ids; `lookup` maps each name to an id.
    pub fn from_json_resolving(text: &str, lookup: impl Fn(&str) -> Result<VersionId>) -> Result<Element> {
        let mut e = Element::from_json(text)?;
        for child in e.children_mut() {
            if !child.is_well_formed() {
                *child = lookup(child.as_str())?;
            }
        }
        Ok(e)
    }

    /// Writes an element file with sorted keys.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("elements serialize");
        value
            .as_object_mut()
            .expect("elements are objects")
            .insert("format_version".into(), Value::from(FORMAT_VERSION));
        let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
        text.push('\n');
        text
    }

    /// Identity-relevant content as a JSON value: everything except the
    /// check state (status and check record), which the store tracks.
    pub fn canonical_value(&self) -> Value {
        let mut value = serde_json::to_value(self).expect("elements serialize");
        if let Some(doc) = value.get_mut("doc").and_then(Value::as_object_mut) {
            doc.remove("status");
            doc.remove("check_record");
        }
        value
    }
}

/// Deterministic bytes for hashing: sorted keys, compact, canonical formula text.
pub fn canonicalize(e: &Element) -> Vec<u8> {
    serde_json::to_vec(&e.canonical_value()).expect("values serialize")
}

/// One field-level change between two versions of an element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub path: String,
    pub old: Option<String>,
    pub new: Option<String>,
    pub material: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct ChangeList {
    pub entries: Vec<Change>,
}

impl ChangeList {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_material(&self) -> bool {
        self.entries.iter().any(|c| c.material)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Field-level differences between two elements of the same kind.
pub fn diff(a: &Element, b: &Element) -> Result<ChangeList> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch {
            expected: a.kind(),
            found: b.kind(),
        });
    }
    Ok(diff_values(&a.canonical_value(), &b.canonical_value()))
}

/// Every leaf of `e` as an addition; used for the creation entry of an audit trail.
pub fn creation_changes(e: &Element) -> ChangeList {
    let mut right = BTreeMap::new();
    flatten(&e.canonical_value(), String::new(), &mut right);
    diff_flat(&BTreeMap::new(), &right)
}

fn diff_values(a: &Value, b: &Value) -> ChangeList {
    let mut left = BTreeMap::new();
    let mut right = BTreeMap::new();
    flatten(a, String::new(), &mut left);
    flatten(b, String::new(), &mut right);
    diff_flat(&left, &right)
}

fn diff_flat(left: &BTreeMap<String, String>, right: &BTreeMap<String, String>) -> ChangeList {
    let mut entries = Vec::new();
    for (path, old) in left {
        match right.get(path) {
            Some(new) if new == old => {}
            new => entries.push(Change {
                material: classify_materiality(path),
                path: path.clone(),
                old: Some(old.clone()),
                new: new.cloned(),
            }),
        }
    }
    for (path, new) in right {
        if !left.contains_key(path) {
            entries.push(Change {
                material: classify_materiality(path),
                path: path.clone(),
                old: None,
                new: Some(new.clone()),
            });
        }
    }
    entries.sort_by(|x, y| x.path.cmp(&y.path));
    ChangeList { entries }
}

fn flatten(v: &Value, prefix: String, out: &mut BTreeMap<String, String>) {
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, child) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(child, path, out);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, child) in items.iter().enumerate() {
                flatten(child, format!("{prefix}[{i}]"), out);
            }
        }
        leaf => {
            let text = match leaf {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.insert(prefix, text);
        }
    }
}

/// Whether a change at `path` can alter a generated formula, a computed value
/// or a check. Documentation and presentation fields are not material.
/// Unknown top-level fields count as material.
pub fn classify_materiality(path: &str) -> bool {
    let head = path
        .split(['.', '['])
        .next()
        .unwrap_or_default();
    !matches!(
        head,
        "doc" | "name" | "formats" | "sheet_assignment" | "reports" | "charts"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Component, Documentation, Port, Row, Structure};

    fn sales() -> Component {
        Component {
            name: "Sales".into(),
            ports: vec![
                Port { name: "price".into(), structure: Structure::Series },
                Port { name: "volume".into(), structure: Structure::Series },
            ],
            rows: vec![
                Row::input("Price", "price"),
                Row::input("Volume", "volume"),
                Row::formula("Revenue", "@Price * @Volume"),
            ],
            embeds: vec![],
            outputs: vec!["Revenue".into()],
            doc: Documentation::default(),
        }
    }

    #[test]
    fn canonical_bytes_are_stable() {
        let e = Element::Component(sales());
        assert_eq!(canonicalize(&e), canonicalize(&e.clone()));
    }

    #[test]
    fn whitespace_in_formulas_is_not_content() {
        let mut a = sales();
        let mut b = sales();
        a.rows[2] = Row::formula("Revenue", "@Price+ @Volume");
        b.rows[2] = Row::formula("Revenue", "@Price + @Volume");
        assert_eq!(canonicalize(&Element::Component(a)), canonicalize(&Element::Component(b)));
    }

    #[test]
    fn notes_are_content_but_status_is_not() {
        let a = sales();
        let mut b = sales();
        b.doc.notes = "reviewed pricing".into();
        assert_ne!(canonicalize(&Element::Component(a.clone())), canonicalize(&Element::Component(b)));
        let mut c = sales();
        c.doc.status = crate::model::Status::Failure;
        assert_eq!(canonicalize(&Element::Component(a)), canonicalize(&Element::Component(c)));
    }

    #[test]
    fn diff_identity_and_materiality() {
        let a = Element::Component(sales());
        assert!(diff(&a, &a).unwrap().is_empty());

        let mut changed = sales();
        changed.rows[2] = Row::formula("Revenue", "@Price + @Volume");
        let d = diff(&a, &Element::Component(changed)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.entries[0].path, "rows[2].kind.expr");
        assert!(d.entries[0].material);

        let mut documented = sales();
        documented.doc.databook_entry = "Revenue from price and volume".into();
        let d = diff(&a, &Element::Component(documented)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.entries[0].path, "doc.databook_entry");
        assert!(!d.entries[0].material);
    }

    #[test]
    fn classify_paths() {
        assert!(classify_materiality("rows[3].kind.expr"));
        assert!(classify_materiality("scenarios[0].values.price"));
        assert!(classify_materiality("gen_params.n_periods"));
        assert!(classify_materiality("skeleton"));
        assert!(!classify_materiality("doc.notes"));
        assert!(!classify_materiality("formats.sales.Margin"));
        assert!(!classify_materiality("name"));
        assert!(!classify_materiality("reports[0].items[1].row"));
    }

    #[test]
    fn file_round_trip_requires_format_version() {
        let e = Element::Component(sales());
        let text = e.to_json();
        assert!(text.contains("\"format_version\": 1"));
        assert_eq!(Element::from_json(&text).unwrap(), e);
        let bad = text.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(Element::from_json(&bad).is_err());
    }

    #[test]
    fn creation_lists_only_real_fields() {
        let c = creation_changes(&Element::Component(sales()));
        assert!(c.entries.iter().all(|e| !e.path.is_empty() && e.old.is_none()));
        assert!(c.entries.iter().any(|e| e.path == "rows[2].kind.expr" && e.material));
    }
}
