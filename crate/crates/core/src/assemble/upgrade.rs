//! Re-pointing a parent at a new version of one of its children.

use std::collections::HashSet;

use super::expand::{expand_with_id, ExpandedKind};
use super::link::link;
use super::types::FlatKind;
use crate::error::{Error, Result};
use crate::model::{Component, Element, Model, ReportItem, Skeleton, WidthClass, WireSource};
use crate::store::{Repository, VersionId};

/// Replaces `old` with `new` among the children of `parent`. Keyed overrides
/// that still resolve against the new child are kept; the rest are dropped and
/// their paths returned. The caller saves the result as a derived version.
pub fn upgrade_child(
    parent: &Element,
    old: &VersionId,
    new: &VersionId,
    repo: &dyn Repository,
) -> Result<(Element, Vec<String>)> {
    if !parent.children().contains(&old) {
        return Err(Error::NotReferenced(old.clone()));
    }
    let old_el = repo.element(old)?;
    let new_el = repo.element(new)?;
    if old_el.kind() != new_el.kind() {
        return Err(Error::KindMismatch {
            expected: old_el.kind(),
            found: new_el.kind(),
        });
    }
    let mut out = parent.clone();
    for child in out.children_mut() {
        if child == old {
            *child = new.clone();
        }
    }
    let mut discarded = Vec::new();
    match (&mut out, &new_el) {
        (Element::Component(p), Element::Component(c)) => upgrade_component(p, new, c, &mut discarded),
        (Element::Skeleton(s), Element::Component(c)) => upgrade_skeleton(s, new, c, repo, &mut discarded),
        (Element::Model(m), Element::Skeleton(s)) => upgrade_model(m, s, repo, &mut discarded),
        (p, c) => {
            return Err(Error::KindMismatch {
                expected: match p.kind() {
                    crate::model::ElementKind::Model => crate::model::ElementKind::Skeleton,
                    _ => crate::model::ElementKind::Component,
                },
                found: c.kind(),
            })
        }
    }
    discarded.sort();
    discarded.dedup();
    Ok((out, discarded))
}

fn upgrade_component(p: &mut Component, new: &VersionId, c: &Component, discarded: &mut Vec<String>) {
    let ports: HashSet<&str> = c.ports.iter().map(|x| x.name.as_str()).collect();
    for (i, emb) in p.embeds.iter_mut().enumerate() {
        if &emb.child != new {
            continue;
        }
        emb.bindings.retain(|port, _| {
            let keep = ports.contains(port.as_str());
            if !keep {
                discarded.push(format!("embeds[{i}].bindings.{port}"));
            }
            keep
        });
    }
}

fn upgrade_skeleton(
    s: &mut Skeleton,
    new: &VersionId,
    c: &Component,
    repo: &dyn Repository,
    discarded: &mut Vec<String>,
) {
    let affected: Vec<String> = s
        .instances
        .iter()
        .filter(|i| &i.component == new)
        .map(|i| i.name.clone())
        .collect();
    let value_paths: Option<HashSet<String>> = expand_with_id(c, Some(new), repo).ok().map(|ex| {
        ex.rows
            .into_iter()
            .filter(|r| !matches!(r.kind, ExpandedKind::Heading | ExpandedKind::Blank))
            .map(|r| r.path)
            .collect()
    });
    let ports: HashSet<&str> = c.ports.iter().map(|x| x.name.as_str()).collect();
    let outputs: HashSet<&str> = c.outputs.iter().map(String::as_str).collect();
    let split = |key: &str| -> Option<(String, String)> {
        let (inst, rest) = key.split_once('.')?;
        affected.iter().any(|a| a == inst).then(|| (inst.to_string(), rest.to_string()))
    };
    if let Some(paths) = &value_paths {
        s.widths.retain(|key, _| match split(key) {
            Some((_, rest)) if !paths.contains(&rest) => {
                discarded.push(format!("widths.{key}"));
                false
            }
            _ => true,
        });
    }
    s.wiring.retain(|key, source| {
        if let Some((_, port)) = split(key) {
            if !ports.contains(port.as_str()) {
                discarded.push(format!("wiring.{key}"));
                return false;
            }
        }
        if let WireSource::Output(path) = source {
            if let Some((_, out)) = split(path) {
                if !outputs.contains(out.as_str()) {
                    discarded.push(format!("wiring.{key}"));
                    return false;
                }
            }
        }
        true
    });
}

fn upgrade_model(m: &mut Model, s: &Skeleton, repo: &dyn Repository, discarded: &mut Vec<String>) {
    let inputs: HashSet<&str> = s.data_inputs.iter().map(|d| d.name.as_str()).collect();
    for (i, sc) in m.scenarios.iter_mut().enumerate() {
        sc.values.retain(|k, _| {
            let keep = inputs.contains(k.as_str());
            if !keep {
                discarded.push(format!("scenarios[{i}].values.{k}"));
            }
            keep
        });
    }
    let instances: HashSet<&str> = s.instances.iter().map(|x| x.name.as_str()).collect();
    m.sheet_assignment.retain(|k, _| {
        let keep = instances.contains(k.as_str());
        if !keep {
            discarded.push(format!("sheet_assignment.{k}"));
        }
        keep
    });
    // Row-keyed overrides need the linked row list; if the new skeleton does
    // not link, they are kept for diagnose to report.
    let Ok(linked) = link(s, repo) else { return };
    let values: HashSet<&str> = linked
        .rows
        .iter()
        .filter(|r| !matches!(r.kind, FlatKind::Heading | FlatKind::Blank))
        .map(|r| r.path.as_str())
        .collect();
    let specials: HashSet<&str> = linked
        .rows
        .iter()
        .filter(|r| r.width == WidthClass::Special)
        .map(|r| r.path.as_str())
        .collect();
    m.special_widths.retain(|k, _| {
        let keep = specials.contains(k.as_str());
        if !keep {
            discarded.push(format!("special_widths.{k}"));
        }
        keep
    });
    m.formats.retain(|k, _| {
        let keep = values.contains(k.as_str());
        if !keep {
            discarded.push(format!("formats.{k}"));
        }
        keep
    });
    for (i, r) in m.reports.iter_mut().enumerate() {
        let mut j = 0;
        r.items.retain(|item| {
            let keep = match item {
                ReportItem::Row(p) => values.contains(p.as_str()),
                ReportItem::Heading(_) => true,
            };
            if !keep {
                discarded.push(format!("reports[{i}].items[{j}]"));
            }
            j += 1;
            keep
        });
    }
    for (i, ch) in m.charts.iter_mut().enumerate() {
        let mut j = 0;
        ch.series.retain(|p| {
            let keep = values.contains(p.as_str());
            if !keep {
                discarded.push(format!("charts[{i}].series[{j}]"));
            }
            j += 1;
            keep
        });
    }
}
