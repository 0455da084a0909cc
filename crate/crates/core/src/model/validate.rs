//! Single-element well-formedness checks. Anything that needs a referenced
//! child element is checked during assembly instead.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::types::*;
use crate::diagnostics::{normalize, Code, Diagnostic, Location};
use crate::store::VersionId;

/// Largest period count that still fits the spreadsheet column limit.
pub const MAX_PERIODS: u32 = 16_382;

pub fn is_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic())
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Sheet names follow the workbook limits: 1..=31 chars, none of `[]:*?/\`,
/// no leading or trailing apostrophe.
pub fn is_valid_sheet_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars().count() <= 31
        && !s.contains(['[', ']', ':', '*', '?', '/', '\\'])
        && !s.starts_with('\'')
        && !s.ends_with('\'')
}

struct Collector<'a> {
    element: &'a str,
    out: Vec<Diagnostic>,
}

impl Collector<'_> {
    fn push(&mut self, code: Code, path: impl Into<String>, message: impl Into<String>) {
        self.out
            .push(Diagnostic::new(code, Location::new(self.element, path), message));
    }

    fn ident(&mut self, value: &str, path: String, what: &str) {
        if !is_identifier(value) {
            self.push(
                Code::BadLabel,
                path,
                format!("{what} `{value}` must match [A-Za-z][A-Za-z0-9_]*"),
            );
        }
    }

    fn version(&mut self, id: &VersionId, path: String) {
        if !id.is_well_formed() {
            self.push(
                Code::BadVersionId,
                path,
                format!("`{id}` is not a 64-character lowercase hex version id"),
            );
        }
    }

    fn unique<'s>(&mut self, names: impl Iterator<Item = (String, &'s str)>, code: Code, what: &str) {
        let mut seen = HashSet::new();
        for (path, name) in names {
            if !seen.insert(name) {
                self.push(code, path, format!("duplicate {what} `{name}`"));
            }
        }
    }
}

/// Returns every local invariant violation, sorted by location. Empty means
/// the element is locally well-formed.
pub fn validate_element(e: &Element) -> Vec<Diagnostic> {
    let mut c = Collector {
        element: e.name(),
        out: Vec::new(),
    };
    if e.name().is_empty() || !e.name().bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
        c.push(Code::BadLabel, "name", format!("element name `{}` must be nonempty [A-Za-z0-9_-]", e.name()));
    }
    let doc = e.doc();
    if doc.status == Status::Ok && doc.check_record.is_none() {
        c.push(Code::StatusUnchecked, "doc.status", "status OK requires a check record");
    }
    match e {
        Element::Component(comp) => validate_component(comp, &mut c),
        Element::Skeleton(s) => validate_skeleton(s, &mut c),
        Element::Model(m) => validate_model(m, &mut c),
    }
    let mut out = c.out;
    normalize(&mut out);
    out
}

fn validate_component(comp: &Component, c: &mut Collector) {
    for (i, p) in comp.ports.iter().enumerate() {
        c.ident(&p.name, format!("ports[{i}].name"), "port name");
    }
    c.unique(
        comp.ports.iter().enumerate().map(|(i, p)| (format!("ports[{i}]"), p.name.as_str())),
        Code::DuplicatePort,
        "port",
    );
    for (i, r) in comp.rows.iter().enumerate() {
        c.ident(&r.label, format!("rows[{i}].label"), "row label");
    }
    c.unique(
        comp.rows.iter().enumerate().map(|(i, r)| (format!("rows[{i}]"), r.label.as_str())),
        Code::DuplicateLabel,
        "row label",
    );

    let declared: HashSet<&str> = comp.ports.iter().map(|p| p.name.as_str()).collect();
    let mut landings: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in comp.rows.iter().enumerate() {
        if let RowKind::Input { port } = &r.kind {
            if declared.contains(port.as_str()) {
                landings.entry(port).or_default().push(i);
            } else {
                c.push(Code::UnknownPort, format!("rows[{i}].kind.port"), format!("port `{port}` is not declared"));
            }
        }
    }
    for (i, p) in comp.ports.iter().enumerate() {
        match landings.get(p.name.as_str()).map(Vec::as_slice) {
            None | Some([]) => c.push(
                Code::PortNotLanded,
                format!("ports[{i}]"),
                format!("port `{}` has no input row", p.name),
            ),
            Some([_]) => {}
            Some([_, rest @ ..]) => {
                for &j in rest {
                    c.push(
                        Code::DuplicateLanding,
                        format!("rows[{j}]"),
                        format!("port `{}` already lands on an earlier row", p.name),
                    );
                }
            }
        }
    }

    let value_rows: HashMap<&str, &Row> = comp
        .rows
        .iter()
        .filter(|r| r.kind.carries_value())
        .map(|r| (r.label.as_str(), r))
        .collect();
    let all_labels: HashSet<&str> = comp.rows.iter().map(|r| r.label.as_str()).collect();
    for (i, out) in comp.outputs.iter().enumerate() {
        if !value_rows.contains_key(out.as_str()) {
            c.push(
                Code::DanglingOutput,
                format!("outputs[{i}]"),
                format!("output `{out}` is not a formula or input row"),
            );
        }
    }
    c.unique(
        comp.outputs.iter().enumerate().map(|(i, o)| (format!("outputs[{i}]"), o.as_str())),
        Code::DuplicateName,
        "output",
    );

    for (i, emb) in comp.embeds.iter().enumerate() {
        c.ident(&emb.instance, format!("embeds[{i}].instance"), "embed instance");
        c.version(&emb.child, format!("embeds[{i}].child"));
        if let Some(after) = &emb.after {
            if !all_labels.contains(after.as_str()) {
                c.push(
                    Code::DanglingPath,
                    format!("embeds[{i}].after"),
                    format!("no row labeled `{after}`"),
                );
            }
        }
        for (port, target) in &emb.bindings {
            if !value_rows.contains_key(target.as_str()) && !declared.contains(target.as_str()) {
                c.push(
                    Code::BadBinding,
                    format!("embeds[{i}].bindings.{port}"),
                    format!("`{target}` is neither a value row nor a port of `{}`", comp.name),
                );
            }
        }
    }
    c.unique(
        comp.embeds.iter().enumerate().map(|(i, e)| (format!("embeds[{i}]"), e.instance.as_str())),
        Code::DuplicateName,
        "embed instance",
    );
}

fn validate_skeleton(s: &Skeleton, c: &mut Collector) {
    for (i, inst) in s.instances.iter().enumerate() {
        c.ident(&inst.name, format!("instances[{i}].name"), "instance name");
        c.version(&inst.component, format!("instances[{i}].component"));
    }
    c.unique(
        s.instances.iter().enumerate().map(|(i, x)| (format!("instances[{i}]"), x.name.as_str())),
        Code::DuplicateName,
        "instance",
    );
    for (i, d) in s.data_inputs.iter().enumerate() {
        c.ident(&d.name, format!("data_inputs[{i}].name"), "data input name");
    }
    c.unique(
        s.data_inputs.iter().enumerate().map(|(i, d)| (format!("data_inputs[{i}]"), d.name.as_str())),
        Code::DuplicateName,
        "data input",
    );
    for (i, chk) in s.checks.iter().enumerate() {
        c.ident(&chk.name, format!("checks[{i}].name"), "check name");
    }
    c.unique(
        s.checks.iter().enumerate().map(|(i, x)| (format!("checks[{i}]"), x.name.as_str())),
        Code::DuplicateName,
        "check",
    );
}

fn validate_model(m: &Model, c: &mut Collector) {
    c.version(&m.skeleton, "skeleton".into());
    let n = m.gen_params.n_periods;
    if n == 0 || n > MAX_PERIODS {
        c.push(
            Code::BadGenParams,
            "gen_params.n_periods",
            format!("n_periods must be within 1..={MAX_PERIODS}, found {n}"),
        );
    }
    for (path, range) in &m.special_widths {
        if range.start_period < 1 || range.start_period > range.end_period || range.end_period > n {
            c.push(
                Code::SpecialRange,
                format!("special_widths.{path}"),
                format!(
                    "range {}..{} is outside 1..{n}",
                    range.start_period, range.end_period
                ),
            );
        }
    }
    for (i, sc) in m.scenarios.iter().enumerate() {
        if sc.name.trim().is_empty() {
            c.push(Code::BadLabel, format!("scenarios[{i}].name"), "scenario name is empty");
        }
        for (input, value) in &sc.values {
            let path = format!("scenarios[{i}].values.{input}");
            match value {
                ScenarioValue::Constant(v) if !v.is_finite() => {
                    c.push(Code::ScenarioValue, path, "value is not finite")
                }
                ScenarioValue::Series(vs) if vs.iter().any(|v| !v.is_finite()) => {
                    c.push(Code::ScenarioValue, path, "series holds a non-finite value")
                }
                ScenarioValue::Series(vs) if (1..=MAX_PERIODS).contains(&n) && vs.len() > n as usize => c.push(
                    Code::ScenarioValue,
                    path,
                    format!("series has {} values for {n} periods", vs.len()),
                ),
                _ => {}
            }
        }
    }
    c.unique(
        m.scenarios.iter().enumerate().map(|(i, s)| (format!("scenarios[{i}]"), s.name.as_str())),
        Code::DuplicateName,
        "scenario",
    );
    for (inst, sheet) in &m.sheet_assignment {
        if !is_valid_sheet_name(sheet) {
            c.push(
                Code::SheetName,
                format!("sheet_assignment.{inst}"),
                format!("`{sheet}` is not a valid sheet name"),
            );
        }
    }
    for (i, r) in m.reports.iter().enumerate() {
        if !is_valid_sheet_name(&r.name) {
            c.push(Code::SheetName, format!("reports[{i}].name"), format!("`{}` is not a valid sheet name", r.name));
        }
    }
    for (i, ch) in m.charts.iter().enumerate() {
        if !is_valid_sheet_name(&crate::codegen::chart_sheet_name(&ch.name)) {
            c.push(Code::SheetName, format!("charts[{i}].name"), format!("chart `{}` gives an invalid sheet name", ch.name));
        }
    }
}
