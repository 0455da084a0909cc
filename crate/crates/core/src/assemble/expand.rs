//! Inlining of embedded components.

use std::collections::HashMap;

use crate::diagnostics::{Code, Diagnostic, Location};
use crate::error::Error;
use crate::expr::Expr;
use crate::model::{validate_element, Component, Element, RowKind, Structure};
use crate::store::{Repository, VersionId};

/// Outline levels above this are clamped.
pub const MAX_GROUP_DEPTH: u8 = 7;

#[derive(Debug, Clone, PartialEq)]
pub enum ExpandedKind {
    Heading,
    Blank,
    /// Landing row of an unbound port of the expanded root component.
    Landing { port: String },
    /// References use paths relative to the expanded root.
    Formula { expr: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedRow {
    /// Dotted path relative to the expanded root, e.g. `Revenue` or `tax.Due`.
    pub path: String,
    /// Label inside the declaring component.
    pub label: String,
    pub kind: ExpandedKind,
    /// 1 for rows of the root component, +1 per embedding level (max 7).
    pub depth: u8,
    /// Declaring component version; `None` for rows of the root itself.
    pub source: Option<VersionId>,
    /// Name of the declaring component.
    pub component: String,
    /// Port this row lands, at whatever level, with its declared structure.
    pub port: Option<(String, Structure)>,
    /// The formula as written in the declaring component (bound landings show
    /// their binding in parent terms).
    pub written: Option<Expr>,
    pub unit: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Expansion {
    pub rows: Vec<ExpandedRow>,
    pub warnings: Vec<Diagnostic>,
}

/// Expands `c` into its flat row list, inlining each embedded component at
/// its position with labels prefixed by the embed instance name.
pub fn expand(c: &Component, repo: &dyn Repository) -> Result<Expansion, Vec<Diagnostic>> {
    expand_with_id(c, None, repo)
}

/// As [`expand`], with the root's own id on the cycle-detection stack.
pub fn expand_with_id(
    c: &Component,
    id: Option<&VersionId>,
    repo: &dyn Repository,
) -> Result<Expansion, Vec<Diagnostic>> {
    let mut stack: Vec<VersionId> = id.into_iter().cloned().collect();
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let rows = expand_inner(c, repo, &mut stack, &mut errors, &mut warnings);
    if errors.is_empty() {
        Ok(Expansion { rows, warnings })
    } else {
        crate::diagnostics::normalize(&mut errors);
        Err(errors)
    }
}

fn expand_inner(
    c: &Component,
    repo: &dyn Repository,
    stack: &mut Vec<VersionId>,
    errors: &mut Vec<Diagnostic>,
    warnings: &mut Vec<Diagnostic>,
) -> Vec<ExpandedRow> {
    let local = validate_element(&Element::Component(c.clone()));
    if crate::diagnostics::has_errors(&local) {
        errors.extend(local.into_iter().filter(Diagnostic::is_error));
        return Vec::new();
    }
    let at = |path: String| Location::new(&c.name, path);

    // Fetch embedded children first so outputs are known.
    let mut children: HashMap<&str, (VersionId, Component)> = HashMap::new();
    for (i, emb) in c.embeds.iter().enumerate() {
        if stack.contains(&emb.child) {
            errors.push(Diagnostic::new(
                Code::ComponentCycle,
                at(format!("embeds[{i}].child")),
                format!("embedding `{}` leads back to an enclosing component", emb.instance),
            ));
            continue;
        }
        match repo.element(&emb.child) {
            Ok(Element::Component(child)) => {
                children.insert(emb.instance.as_str(), (emb.child.clone(), child));
            }
            Ok(other) => errors.push(Diagnostic::new(
                Code::KindMismatch,
                at(format!("embeds[{i}].child")),
                format!("embedded version is a {}, not a component", other.kind()),
            )),
            Err(Error::UnknownVersion(_)) => errors.push(Diagnostic::new(
                Code::DanglingChild,
                at(format!("embeds[{i}].child")),
                format!("version {} is not in the store", emb.child),
            )),
            Err(e) => errors.push(Diagnostic::new(Code::DanglingChild, at(format!("embeds[{i}].child")), e.to_string())),
        }
    }

    let value_labels: HashMap<&str, usize> = c
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind.carries_value())
        .map(|(i, r)| (r.label.as_str(), i))
        .collect();

    // Visibility: own value rows and exported outputs of direct embeds only.
    for (i, row) in c.rows.iter().enumerate() {
        let RowKind::Formula { expr } = &row.kind else { continue };
        for r in expr.refs() {
            let ok = match r.path.as_slice() {
                [label] => value_labels.contains_key(label.as_str()),
                [inst, out] => match children.get(inst.as_str()) {
                    Some((_, child)) => child.outputs.iter().any(|o| o == out),
                    // An unfetchable embed has already been reported.
                    None => c.embeds.iter().any(|e| &e.instance == inst) && !errors.is_empty(),
                },
                _ => false,
            };
            if !ok {
                errors.push(Diagnostic::new(
                    Code::UnresolvedRef,
                    at(format!("rows[{i}].kind.expr")),
                    format!("`@{}` is not a row of `{}` or an output of one of its embeds", r.dotted(), c.name),
                ));
            }
        }
    }

    let port_structure: HashMap<&str, Structure> =
        c.ports.iter().map(|p| (p.name.as_str(), p.structure)).collect();
    let landing_label: HashMap<&str, &str> = c
        .rows
        .iter()
        .filter_map(|r| match &r.kind {
            RowKind::Input { port } => Some((port.as_str(), r.label.as_str())),
            _ => None,
        })
        .collect();

    let mut out = Vec::new();
    let emit_embeds = |after: Option<&str>, out: &mut Vec<ExpandedRow>, stack: &mut Vec<VersionId>, errors: &mut Vec<Diagnostic>, warnings: &mut Vec<Diagnostic>| {
        for (i, emb) in c.embeds.iter().enumerate() {
            if emb.after.as_deref() != after {
                continue;
            }
            let Some((child_id, child)) = children.get(emb.instance.as_str()) else { continue };
            for port in emb.bindings.keys() {
                if !child.ports.iter().any(|p| &p.name == port) {
                    errors.push(Diagnostic::new(
                        Code::BadBinding,
                        at(format!("embeds[{i}].bindings.{port}")),
                        format!("`{}` has no port `{port}`", child.name),
                    ));
                }
            }
            for p in &child.ports {
                if !emb.bindings.contains_key(&p.name) {
                    errors.push(Diagnostic::new(
                        Code::UnboundPort,
                        at(format!("embeds[{i}].bindings")),
                        format!("port `{}` of `{}` is not bound", p.name, emb.instance),
                    ));
                }
            }
            stack.push(child_id.clone());
            let child_rows = expand_inner(child, repo, stack, errors, warnings);
            stack.pop();
            let mut clamped = false;
            for mut row in child_rows {
                let prefix = |p: &str| format!("{}.{p}", emb.instance);
                row.path = prefix(&row.path);
                if row.depth >= MAX_GROUP_DEPTH {
                    clamped = true;
                } else {
                    row.depth += 1;
                }
                if row.source.is_none() {
                    row.source = Some(child_id.clone());
                }
                row.kind = match row.kind {
                    ExpandedKind::Formula { mut expr } => {
                        expr.map_refs(&mut |r| r.path.insert(0, emb.instance.clone()));
                        ExpandedKind::Formula { expr }
                    }
                    ExpandedKind::Landing { port } => {
                        let target = emb.bindings.get(&port).map(|t| {
                            if value_labels.contains_key(t.as_str()) {
                                t.as_str()
                            } else {
                                landing_label.get(t.as_str()).copied().unwrap_or(t.as_str())
                            }
                        });
                        match target {
                            Some(t) => {
                                let expr = Expr::reference(t, 0);
                                row.written = Some(expr.clone());
                                ExpandedKind::Formula { expr }
                            }
                            // Unbound; reported above.
                            None => ExpandedKind::Landing { port },
                        }
                    }
                    other => other,
                };
                out.push(row);
            }
            if clamped {
                warnings.push(Diagnostic::new(
                    Code::DepthClamped,
                    at(format!("embeds[{i}]")),
                    format!("rows of `{}` are nested deeper than {MAX_GROUP_DEPTH} levels", emb.instance),
                ));
            }
        }
    };

    for row in &c.rows {
        let (kind, written) = match &row.kind {
            RowKind::Heading => (ExpandedKind::Heading, None),
            RowKind::Blank => (ExpandedKind::Blank, None),
            RowKind::Input { port } => (ExpandedKind::Landing { port: port.clone() }, None),
            RowKind::Formula { expr } => (ExpandedKind::Formula { expr: expr.clone() }, Some(expr.clone())),
        };
        let port = match &row.kind {
            RowKind::Input { port } => port_structure.get(port.as_str()).map(|s| (port.clone(), *s)),
            _ => None,
        };
        out.push(ExpandedRow {
            path: row.label.clone(),
            label: row.label.clone(),
            kind,
            depth: 1,
            source: None,
            component: c.name.clone(),
            port,
            written,
            unit: row.unit.clone(),
        });
        emit_embeds(Some(&row.label), &mut out, stack, errors, warnings);
    }
    emit_embeds(None, &mut out, stack, errors, warnings);
    out
}
