//! Completing a linked skeleton with a model's settings.

use std::collections::{HashMap, HashSet};

use super::link::link;
use super::types::*;
use crate::diagnostics::{normalize, Code, Diagnostic, Location};
use crate::error::Error;
use crate::model::{validate_element, Element, Model, ReportItem, ScenarioValue, Structure, WidthClass, DEFAULT_SHEET};
use crate::store::{Repository, VersionId};

/// Sheet names the generator uses for its own sheets.
pub const RESERVED_SHEETS: [&str; 3] = ["Inputs", "Checks", "Meta"];

fn value_row(rows: &[FlatRow], path: &str) -> Option<usize> {
    rows.iter().position(|r| r.path == path && r.carries_value())
}

/// Assembles the model stored under `id`.
pub fn assemble_id(id: &VersionId, repo: &dyn Repository) -> Result<AssembledModel, Vec<Diagnostic>> {
    match repo.element(id) {
        Ok(Element::Model(m)) => assemble(&m, Some(id.clone()), repo),
        Ok(other) => Err(vec![Diagnostic::new(
            Code::KindMismatch,
            Location::new(other.name(), ""),
            format!("{id} is a {}, not a model", other.kind()),
        )]),
        Err(e) => Err(vec![Diagnostic::new(Code::DanglingChild, Location::new(id.short(), ""), e.to_string())]),
    }
}

/// Links the model's skeleton and applies widths, formats, scenarios, sheets,
/// reports and charts. Every problem found is returned; nothing partial is.
pub fn assemble(m: &Model, model_id: Option<VersionId>, repo: &dyn Repository) -> Result<AssembledModel, Vec<Diagnostic>> {
    let mut errors: Vec<Diagnostic> = validate_element(&Element::Model(m.clone()))
        .into_iter()
        .filter(Diagnostic::is_error)
        .collect();
    if !errors.is_empty() {
        normalize(&mut errors);
        return Err(errors);
    }
    let at = |path: String| Location::new(&m.name, path);
    let skeleton = match repo.element(&m.skeleton) {
        Ok(Element::Skeleton(s)) => s,
        Ok(other) => {
            return Err(vec![Diagnostic::new(
                Code::KindMismatch,
                at("skeleton".into()),
                format!("expected a skeleton, found a {}", other.kind()),
            )])
        }
        Err(Error::UnknownVersion(_)) => {
            return Err(vec![Diagnostic::new(
                Code::DanglingChild,
                at("skeleton".into()),
                format!("version {} is not in the store", m.skeleton),
            )])
        }
        Err(e) => return Err(vec![Diagnostic::new(Code::DanglingChild, at("skeleton".into()), e.to_string())]),
    };
    let linked = link(&skeleton, repo)?;
    let LinkedSkeleton { mut rows, data_inputs, checks, instances, mut warnings, .. } = linked;

    // Special ranges.
    for (path, range) in &m.special_widths {
        match value_row(&rows, path) {
            Some(i) if rows[i].width == WidthClass::Special => rows[i].special = Some(*range),
            _ => errors.push(Diagnostic::new(
                Code::DanglingPath,
                at(format!("special_widths.{path}")),
                format!("`{path}` is not a special-width row"),
            )),
        }
    }
    for r in &rows {
        if r.width == WidthClass::Special && !m.special_widths.contains_key(&r.path) {
            errors.push(Diagnostic::new(
                Code::WidthMissing,
                at(format!("special_widths.{}", r.path)),
                format!("special row `{}` has no period range", r.path),
            ));
        }
    }

    // Formats.
    for (path, fmt) in &m.formats {
        match value_row(&rows, path) {
            Some(i) => rows[i].format = Some(fmt.clone()),
            None => errors.push(Diagnostic::new(
                Code::DanglingPath,
                at(format!("formats.{path}")),
                format!("`{path}` is not a value row"),
            )),
        }
    }

    // Scenarios.
    if m.scenarios.is_empty() {
        errors.push(Diagnostic::new(Code::NoScenario, at("scenarios".into()), "the model defines no scenario"));
    }
    let inputs: HashMap<&str, Structure> = data_inputs.iter().map(|d| (d.name.as_str(), d.structure)).collect();
    for (i, sc) in m.scenarios.iter().enumerate() {
        for d in &data_inputs {
            if !sc.values.contains_key(&d.name) {
                errors.push(Diagnostic::new(
                    Code::ScenarioIncomplete,
                    at(format!("scenarios[{i}].values.{}", d.name)),
                    format!("scenario `{}` gives no value for `{}`", sc.name, d.name),
                ));
            }
        }
        for (key, value) in &sc.values {
            let path = format!("scenarios[{i}].values.{key}");
            match inputs.get(key.as_str()) {
                None => errors.push(Diagnostic::new(Code::DanglingPath, at(path), format!("`{key}` is not a data input"))),
                Some(Structure::Scalar) if matches!(value, ScenarioValue::Series(_)) => errors.push(Diagnostic::new(
                    Code::ScenarioValue,
                    at(path),
                    format!("scalar input `{key}` is given a series"),
                )),
                _ => {}
            }
        }
    }

    // Sheets.
    let instance_names: HashSet<&str> = instances.iter().map(|x| x.name.as_str()).collect();
    for inst in m.sheet_assignment.keys() {
        if !instance_names.contains(inst.as_str()) {
            errors.push(Diagnostic::new(
                Code::DanglingPath,
                at(format!("sheet_assignment.{inst}")),
                format!("`{inst}` is not an instance"),
            ));
        }
    }
    let mut calc_sheets: Vec<String> = Vec::new();
    for inst in &instances {
        let sheet = m.sheet_assignment.get(&inst.name).map(String::as_str).unwrap_or(DEFAULT_SHEET);
        if !calc_sheets.iter().any(|s| s == sheet) {
            calc_sheets.push(sheet.to_string());
        }
        for r in &mut rows[inst.rows.clone()] {
            r.sheet = sheet.to_string();
        }
    }
    let mut taken: HashMap<String, String> =
        RESERVED_SHEETS.iter().map(|s| (s.to_lowercase(), format!("reserved sheet `{s}`"))).collect();
    let mut claim = |name: &str, path: String, what: String, errors: &mut Vec<Diagnostic>| {
        if let Some(prev) = taken.get(&name.to_lowercase()) {
            errors.push(Diagnostic::new(
                Code::SheetName,
                at(path),
                format!("sheet `{name}` for {what} clashes with {prev}"),
            ));
        } else {
            taken.insert(name.to_lowercase(), what);
        }
    };
    for sheet in &calc_sheets {
        let path = m
            .sheet_assignment
            .iter()
            .find(|(_, v)| *v == sheet)
            .map(|(k, _)| format!("sheet_assignment.{k}"))
            .unwrap_or_else(|| "sheet_assignment".into());
        claim(sheet, path, format!("calculation sheet `{sheet}`"), &mut errors);
    }
    for (i, r) in m.reports.iter().enumerate() {
        claim(&r.name, format!("reports[{i}].name"), format!("report `{}`", r.name), &mut errors);
    }
    for (i, ch) in m.charts.iter().enumerate() {
        let sheet = crate::codegen::chart_sheet_name(&ch.name);
        claim(&sheet, format!("charts[{i}].name"), format!("chart `{}`", ch.name), &mut errors);
    }

    // Reports and charts.
    for (i, r) in m.reports.iter().enumerate() {
        for (j, item) in r.items.iter().enumerate() {
            if let ReportItem::Row(path) = item {
                if value_row(&rows, path).is_none() {
                    errors.push(Diagnostic::new(
                        Code::DanglingPath,
                        at(format!("reports[{i}].items[{j}]")),
                        format!("`{path}` is not a value row"),
                    ));
                }
            }
        }
    }
    for (i, ch) in m.charts.iter().enumerate() {
        for (j, path) in ch.series.iter().enumerate() {
            if value_row(&rows, path).is_none() {
                errors.push(Diagnostic::new(
                    Code::DanglingPath,
                    at(format!("charts[{i}].series[{j}]")),
                    format!("`{path}` is not a value row"),
                ));
            }
        }
    }
    if !errors.is_empty() {
        normalize(&mut errors);
        return Err(errors);
    }
    normalize(&mut warnings);
    Ok(AssembledModel {
        name: m.name.clone(),
        model_id,
        skeleton_id: m.skeleton.clone(),
        skeleton_name: skeleton.name.clone(),
        rows,
        data_inputs,
        checks,
        instances,
        scenarios: m.scenarios.clone(),
        gen_params: m.gen_params,
        reports: m.reports.clone(),
        charts: m.charts.clone(),
        calc_sheets,
        warnings,
    })
}
