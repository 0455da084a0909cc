//! Databook and specification documents, as Markdown.

use std::fmt::Write as _;

use serde::Serialize;

use crate::assemble::{assemble, AssembledModel, FlatKind};
use crate::codegen::{placements, Placement};
use crate::error::{Error, Result};
use crate::expr::print_canonical;
use crate::model::{Element, Model, ReportItem, ScenarioValue};
use crate::store::{effective_status, AuditEntry, Repository, VersionId};

pub const UNDOCUMENTED: &str = "(undocumented)";

/// One element of the assembly, in assembly order.
struct Part {
    heading: String,
    id: VersionId,
    element: Element,
}

fn load_model(id: &VersionId, repo: &dyn Repository) -> Result<(Model, AssembledModel)> {
    let element = repo.element(id)?;
    let model = element
        .as_model()
        .cloned()
        .ok_or(Error::KindMismatch { expected: crate::model::ElementKind::Model, found: element.kind() })?;
    let a = assemble(&model, Some(id.clone()), repo).map_err(Error::Assembly)?;
    Ok((model, a))
}

/// Model, skeleton, then each instance and the components embedded in it.
fn parts(model_id: &VersionId, a: &AssembledModel, repo: &dyn Repository) -> Result<Vec<Part>> {
    let mut out = vec![
        Part { heading: format!("Model {}", a.name), id: model_id.clone(), element: repo.element(model_id)? },
        Part {
            heading: format!("Skeleton {}", a.skeleton_name),
            id: a.skeleton_id.clone(),
            element: repo.element(&a.skeleton_id)?,
        },
    ];
    for inst in &a.instances {
        out.push(Part {
            heading: format!("Instance {} ({})", inst.name, inst.component_name),
            id: inst.component.clone(),
            element: repo.element(&inst.component)?,
        });
        let mut seen: Vec<String> = Vec::new();
        for r in &a.rows[inst.rows.clone()] {
            let owner = r.path.rsplit_once('.').map(|(p, _)| p).unwrap_or(&r.path);
            if owner == inst.name || seen.iter().any(|s| s == owner) {
                continue;
            }
            seen.push(owner.to_string());
            out.push(Part {
                heading: format!("Embedded {} ({})", owner, r.component),
                id: r.source.clone(),
                element: repo.element(&r.source)?,
            });
        }
    }
    Ok(out)
}

fn entry_text(e: &Element) -> &str {
    let text = e.doc().databook_entry.trim();
    if text.is_empty() {
        UNDOCUMENTED
    } else {
        text
    }
}

/// Every Data Book Entry in assembly order, one section each.
pub fn databook(model_id: &VersionId, repo: &dyn Repository) -> Result<String> {
    let (_, a) = load_model(model_id, repo)?;
    let mut out = format!("# Databook: {}\n", a.name);
    for p in parts(model_id, &a, repo)? {
        let _ = write!(out, "\n## {}\n\n{}\n", p.heading, entry_text(&p.element));
    }
    Ok(out)
}

fn tag<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s.replace('_', " "),
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn scenario_text(v: Option<&ScenarioValue>) -> String {
    match v {
        Some(ScenarioValue::Constant(x)) => crate::codegen::number_text(*x),
        Some(ScenarioValue::Series(xs)) => {
            xs.iter().map(|x| crate::codegen::number_text(*x)).collect::<Vec<_>>().join(", ")
        }
        None => "-".into(),
    }
}

fn cell_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn audit_line(e: &AuditEntry) -> String {
    let material = e.changes.entries.iter().filter(|c| c.material).count();
    format!(
        "- {} -> {} at {} by {}: {} change(s), {} material, status {}\n",
        e.from_version.as_ref().map(|v| v.short()).unwrap_or("(new)"),
        e.to_version.short(),
        e.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        e.author,
        e.changes.entries.len(),
        material,
        e.resulting_status.badge(),
    )
}

/// Full description of a saved model: parameters, inputs, every instance with
/// its rows, checks, outputs and each element's status and audit trail.
pub fn spec_document(model_id: &VersionId, repo: &dyn Repository) -> Result<String> {
    let (model, a) = load_model(model_id, repo)?;
    let parts = parts(model_id, &a, repo)?;
    let placed = placements(&a);
    let where_is = |i: usize| match &placed[i] {
        Some(Placement { sheet, row }) => format!("{sheet} row {row}"),
        None => "unplaced".into(),
    };
    let mut out = String::new();
    let _ = writeln!(out, "# Specification: {}\n", a.name);
    let _ = writeln!(out, "Model version `{model_id}`");
    let _ = writeln!(out, "Effective status {}\n", effective_status(repo, model_id)?.badge());
    if !model.doc.notes.trim().is_empty() {
        let _ = writeln!(out, "{}\n", model.doc.notes.trim());
    }

    let g = &a.gen_params;
    let _ = writeln!(out, "## Generation parameters\n");
    let _ = writeln!(out, "- Periodicity: {}", tag(&g.periodicity));
    let _ = writeln!(out, "- Start date: {}", g.start_date);
    let _ = writeln!(out, "- Periods: {}\n", g.n_periods);

    let _ = writeln!(out, "## Data inputs\n");
    for input in &a.data_inputs {
        let landing = &a.rows[input.landing];
        let _ = writeln!(out, "### {}\n", input.name);
        let _ = writeln!(out, "- Structure: {}", tag(&input.structure));
        let _ = writeln!(out, "- Landing row: {} ({})\n", landing.path, where_is(input.landing));
        let _ = writeln!(out, "| Scenario | Value |\n|---|---|");
        for s in &a.scenarios {
            let _ = writeln!(out, "| {} | {} |", cell_escape(&s.name), scenario_text(s.values.get(&input.name)));
        }
        out.push('\n');
    }

    let _ = writeln!(out, "## Instances\n");
    for inst in &a.instances {
        let meta = repo.meta(&inst.component)?;
        let _ = writeln!(out, "### {} ({})\n", inst.name, inst.component_name);
        let _ = writeln!(out, "- Component version: `{}`", inst.component);
        let _ = writeln!(out, "- Status: {}", meta.status.badge());
        match &meta.check_record {
            Some(c) => {
                let at = c.checked_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
                let _ = writeln!(out, "- Checked by {} at {}\n", c.checked_by, at);
            }
            None => {
                let _ = writeln!(out, "- Never checked\n");
            }
        }
        let _ = writeln!(out, "| Row | Definition | Width | Format | Unit | Placed |\n|---|---|---|---|---|---|");
        for i in inst.rows.clone() {
            let r = &a.rows[i];
            let definition = match (&r.kind, &r.written, &r.port) {
                (FlatKind::Formula { .. }, Some(w), _) => format!("{} = {}", r.label, print_canonical(w)),
                (FlatKind::Landing { .. }, _, Some((port, _))) => format!("{} <- port {port}", r.label),
                (FlatKind::Heading, _, _) => format!("{} (heading)", r.label),
                (FlatKind::Blank, _, _) => "(blank)".into(),
                _ => r.label.clone(),
            };
            let width = match r.special {
                Some(s) => format!("special {}..{}", s.start_period, s.end_period),
                None => tag(&r.width),
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                cell_escape(&r.path),
                cell_escape(&definition),
                width,
                cell_escape(r.format.as_deref().unwrap_or("")),
                cell_escape(r.unit.as_deref().unwrap_or("")),
                where_is(i),
            );
        }
        out.push('\n');
    }

    let _ = writeln!(out, "## Checks\n");
    if a.checks.is_empty() {
        let _ = writeln!(out, "None.");
    }
    for c in &a.checks {
        let _ = writeln!(out, "- {}: `{}`", c.name, print_canonical(&c.written));
    }
    out.push('\n');

    let _ = writeln!(out, "## Reports\n");
    if a.reports.is_empty() {
        let _ = writeln!(out, "None.\n");
    }
    for r in &a.reports {
        let _ = writeln!(out, "### {}\n", r.name);
        for item in &r.items {
            match item {
                ReportItem::Heading(h) => {
                    let _ = writeln!(out, "- heading: {h}");
                }
                ReportItem::Row(p) => {
                    let _ = writeln!(out, "- row: {p}");
                }
            }
        }
        out.push('\n');
    }
    let _ = writeln!(out, "## Charts\n");
    if a.charts.is_empty() {
        let _ = writeln!(out, "None.");
    }
    for c in &a.charts {
        let _ = writeln!(out, "- {} ({}): {}", c.name, tag(&c.kind), c.series.join(", "));
    }
    out.push('\n');

    let _ = writeln!(out, "## Elements and audit trail\n");
    let mut listed: Vec<&VersionId> = Vec::new();
    for p in &parts {
        if listed.contains(&&p.id) {
            continue;
        }
        listed.push(&p.id);
        let meta = repo.meta(&p.id)?;
        let _ = writeln!(out, "### {} {} `{}`\n", p.element.kind(), p.element.name(), p.id);
        let _ = writeln!(out, "- Status: {}", meta.status.badge());
        let _ = writeln!(out, "- Effective status: {}", effective_status(repo, &p.id)?.badge());
        if let Some(c) = &meta.check_record {
            let at = c.checked_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
            let _ = writeln!(out, "- Checked by {} at {}", c.checked_by, at);
        }
        out.push('\n');
        for e in &meta.audit {
            out.push_str(&audit_line(e));
        }
        out.push('\n');
    }
    Ok(out)
}
