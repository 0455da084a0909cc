//! Linking a skeleton: instance expansion, wiring, widths and resolution.

use std::collections::{BTreeMap, HashMap};

use super::expand::{expand_with_id, ExpandedKind, ExpandedRow};
use super::types::*;
use crate::diagnostics::{normalize, Code, Diagnostic, Location};
use crate::error::Error;
use crate::expr::{resolve, Decimal, Defining, Expr, ExprIssue, Scope, ScopeEntry, ValueType};
use crate::model::{validate_element, Component, Element, Skeleton, WidthClass, WireSource, DEFAULT_SHEET};
use crate::store::{Repository, VersionId};

pub(crate) fn issue_diag(element: &str, path: String, issue: ExprIssue) -> Diagnostic {
    Diagnostic::new(issue.code, Location::new(element, path), issue.message)
}

enum Pre {
    Heading,
    Blank,
    Landing(usize),
    Formula(Expr),
}

enum Source {
    Input(usize),
    Output(String),
}

fn fail(mut errors: Vec<Diagnostic>) -> Result<LinkedSkeleton, Vec<Diagnostic>> {
    normalize(&mut errors);
    Err(errors)
}

/// Fetches a component child, reporting a wrong kind or a missing version.
fn fetch_component(
    repo: &dyn Repository,
    id: &VersionId,
    loc: Location,
    errors: &mut Vec<Diagnostic>,
) -> Option<Component> {
    match repo.element(id) {
        Ok(Element::Component(c)) => Some(c),
        Ok(other) => {
            errors.push(Diagnostic::new(
                Code::KindMismatch,
                loc,
                format!("expected a component, found a {}", other.kind()),
            ));
            None
        }
        Err(Error::UnknownVersion(_)) => {
            errors.push(Diagnostic::new(Code::DanglingChild, loc, format!("version {id} is not in the store")));
            None
        }
        Err(e) => {
            errors.push(Diagnostic::new(Code::DanglingChild, loc, e.to_string()));
            None
        }
    }
}

/// Links `s` into flat rows with widths attached and every formula and check resolved.
pub fn link(s: &Skeleton, repo: &dyn Repository) -> Result<LinkedSkeleton, Vec<Diagnostic>> {
    let mut errors: Vec<Diagnostic> = validate_element(&Element::Skeleton(s.clone()))
        .into_iter()
        .filter(Diagnostic::is_error)
        .collect();
    if !errors.is_empty() {
        return fail(errors);
    }
    let mut warnings = Vec::new();
    let at = |path: String| Location::new(&s.name, path);

    let mut comps: Vec<Option<Component>> = Vec::new();
    let mut expanded: Vec<Vec<ExpandedRow>> = Vec::new();
    for (i, inst) in s.instances.iter().enumerate() {
        let comp = fetch_component(repo, &inst.component, at(format!("instances[{i}].component")), &mut errors);
        let rows = match &comp {
            Some(c) => match expand_with_id(c, Some(&inst.component), repo) {
                Ok(ex) => {
                    warnings.extend(ex.warnings);
                    ex.rows
                }
                Err(errs) => {
                    errors.extend(errs);
                    Vec::new()
                }
            },
            None => Vec::new(),
        };
        comps.push(comp);
        expanded.push(rows);
    }
    if !errors.is_empty() {
        return fail(errors);
    }
    let comps: Vec<Component> = comps.into_iter().flatten().collect();
    let instance_index: HashMap<&str, usize> =
        s.instances.iter().enumerate().map(|(i, x)| (x.name.as_str(), i)).collect();
    let input_index: HashMap<&str, usize> =
        s.data_inputs.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();

    for key in s.wiring.keys() {
        let known = key.split_once('.').is_some_and(|(inst, port)| {
            instance_index
                .get(inst)
                .is_some_and(|&i| comps[i].ports.iter().any(|p| p.name == port))
        });
        if !known {
            errors.push(Diagnostic::new(
                Code::BadWiring,
                at(format!("wiring.{key}")),
                format!("`{key}` is not a port of any instance"),
            ));
        }
    }

    let mut sources: HashMap<String, Source> = HashMap::new();
    let mut input_uses: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, inst) in s.instances.iter().enumerate() {
        for port in &comps[i].ports {
            let key = format!("{}.{}", inst.name, port.name);
            let loc = at(format!("wiring.{key}"));
            match s.wiring.get(&key) {
                None => errors.push(Diagnostic::new(Code::UnwiredPort, loc, format!("port `{key}` is not wired"))),
                Some(WireSource::Input(name)) => match input_index.get(name.as_str()) {
                    Some(&k) => {
                        input_uses.entry(k).or_default().push(key.clone());
                        sources.insert(key, Source::Input(k));
                    }
                    None => errors.push(Diagnostic::new(Code::BadWiring, loc, format!("no data input named `{name}`"))),
                },
                Some(WireSource::Output(path)) => {
                    let Some((src, out)) = path.split_once('.') else {
                        errors.push(Diagnostic::new(Code::BadWiring, loc, format!("`{path}` is not `instance.output`")));
                        continue;
                    };
                    match instance_index.get(src) {
                        None => errors.push(Diagnostic::new(Code::BadWiring, loc, format!("no instance named `{src}`"))),
                        Some(&j) if j >= i => errors.push(Diagnostic::new(
                            Code::WireForward,
                            loc,
                            format!("`{key}` reads `{path}`, which is not above `{}`", inst.name),
                        )),
                        Some(&j) if !comps[j].outputs.iter().any(|o| o == out) => errors.push(Diagnostic::new(
                            Code::BadWiring,
                            loc,
                            format!("`{out}` is not an output of `{src}`"),
                        )),
                        Some(_) => {
                            sources.insert(key, Source::Output(path.clone()));
                        }
                    }
                }
            }
        }
    }
    for (k, input) in s.data_inputs.iter().enumerate() {
        match input_uses.get(&k).map(Vec::as_slice) {
            None | Some([]) => errors.push(Diagnostic::new(
                Code::InputUnused,
                at(format!("data_inputs[{k}]")),
                format!("data input `{}` is not wired to any port", input.name),
            )),
            Some([_]) => {}
            Some([_, rest @ ..]) => {
                for key in rest {
                    errors.push(Diagnostic::new(
                        Code::DuplicateLanding,
                        at(format!("wiring.{key}")),
                        format!("data input `{}` already lands on another port", input.name),
                    ));
                }
            }
        }
    }

    // Flatten, rewriting references to full paths.
    let mut pre: Vec<(FlatRow, Pre)> = Vec::new();
    let mut instances = Vec::new();
    let mut landing_of: Vec<Option<usize>> = vec![None; s.data_inputs.len()];
    for (i, ex_rows) in expanded.into_iter().enumerate() {
        let inst = &s.instances[i];
        let first = pre.len();
        for r in ex_rows {
            let kind = match r.kind {
                ExpandedKind::Heading => Pre::Heading,
                ExpandedKind::Blank => Pre::Blank,
                ExpandedKind::Formula { mut expr } => {
                    expr.map_refs(&mut |rr| rr.path.insert(0, inst.name.clone()));
                    Pre::Formula(expr)
                }
                ExpandedKind::Landing { port } => match sources.get(&format!("{}.{port}", inst.name)) {
                    Some(Source::Input(k)) => {
                        landing_of[*k].get_or_insert(pre.len());
                        Pre::Landing(*k)
                    }
                    Some(Source::Output(p)) => Pre::Formula(Expr::reference(p, 0)),
                    // Unwired; already reported.
                    None => Pre::Formula(Expr::Number(Decimal::from_u64(0))),
                },
            };
            let written = match (&kind, r.written) {
                (_, Some(w)) => Some(w),
                (Pre::Formula(e), None) => Some(e.clone()),
                _ => None,
            };
            let row = FlatRow {
                path: format!("{}.{}", inst.name, r.path),
                label: r.label,
                instance: inst.name.clone(),
                component: r.component,
                source: r.source.unwrap_or_else(|| inst.component.clone()),
                kind: FlatKind::Blank,
                width: WidthClass::FullWidth,
                special: None,
                format: None,
                sheet: DEFAULT_SHEET.to_string(),
                depth: r.depth,
                ty: ValueType::Number,
                unit: r.unit,
                written,
                port: r.port,
            };
            pre.push((row, kind));
        }
        instances.push(LinkedInstance {
            name: inst.name.clone(),
            component: inst.component.clone(),
            component_name: comps[i].name.clone(),
            rows: first..pre.len(),
        });
    }
    let is_value = |p: &Pre| matches!(p, Pre::Landing(_) | Pre::Formula(_));

    // Widths.
    let by_path: HashMap<String, usize> = pre.iter().enumerate().map(|(i, (r, _))| (r.path.clone(), i)).collect();
    for key in s.widths.keys() {
        if !by_path.get(key).is_some_and(|&i| is_value(&pre[i].1)) {
            errors.push(Diagnostic::new(
                Code::DanglingPath,
                at(format!("widths.{key}")),
                format!("`{key}` is not a value row"),
            ));
        }
    }
    let mut width_errors = Vec::new();
    for (row, kind) in pre.iter_mut() {
        if !is_value(kind) {
            continue;
        }
        let Some(w) = s.widths.get(&row.path) else {
            width_errors.push(Diagnostic::new(
                Code::WidthMissing,
                at(format!("widths.{}", row.path)),
                format!("row `{}` has no width class", row.path),
            ));
            continue;
        };
        row.width = *w;
        if let Some((port, structure)) = &row.port {
            if !w.fits(*structure) {
                width_errors.push(Diagnostic::new(
                    Code::StructureMismatch,
                    at(format!("widths.{}", row.path)),
                    format!("row `{}` lands {structure:?} port `{port}` but is {w:?}", row.path),
                ));
            }
        }
        if let Pre::Landing(k) = kind {
            let input = &s.data_inputs[*k];
            if !w.fits(input.structure) {
                width_errors.push(Diagnostic::new(
                    Code::StructureMismatch,
                    at(format!("widths.{}", row.path)),
                    format!("{:?} input `{}` lands on {w:?} row `{}`", input.structure, input.name, row.path),
                ));
            }
        }
    }
    errors.extend(width_errors);
    for (key, source) in &sources {
        let Source::Output(p) = source else { continue };
        let (Some(&src), Some((inst, port))) = (by_path.get(p), key.split_once('.')) else { continue };
        let Some(w) = s.widths.get(p) else { continue };
        let structure = comps[instance_index[inst]].ports.iter().find(|x| x.name == port).map(|x| x.structure);
        if let Some(structure) = structure {
            if !w.fits(structure) {
                errors.push(Diagnostic::new(
                    Code::StructureMismatch,
                    at(format!("wiring.{key}")),
                    format!("{structure:?} port `{key}` reads {w:?} row `{}`", pre[src].0.path),
                ));
            }
        }
    }
    if !errors.is_empty() {
        return fail(errors);
    }

    // Resolve, iterating row types to a fixpoint so that prior-period
    // references to rows further down see their final type.
    let mut scope = Scope::new(
        pre.iter()
            .enumerate()
            .filter(|(_, (_, k))| is_value(k))
            .map(|(i, (r, _))| ScopeEntry {
                path: r.path.clone(),
                flat_index: i,
                width: r.width,
                ty: ValueType::Number,
            })
            .collect(),
    );
    let positions: Vec<usize> = scope.entries().iter().map(|e| e.flat_index).collect();
    for _ in 0..=positions.len() {
        let mut changed = false;
        for (pos, &idx) in positions.iter().enumerate() {
            let Pre::Formula(expr) = &pre[idx].1 else { continue };
            let def = Defining { position: pos, width: pre[idx].0.width };
            if let Ok(r) = resolve(expr, &scope, Some(def)) {
                if scope.entries()[pos].ty != r.ty {
                    scope.set_type(pos, r.ty);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut rows = Vec::with_capacity(pre.len());
    for (idx, (mut row, kind)) in pre.into_iter().enumerate() {
        row.kind = match kind {
            Pre::Heading => FlatKind::Heading,
            Pre::Blank => FlatKind::Blank,
            Pre::Landing(input) => FlatKind::Landing { input },
            Pre::Formula(linked) => {
                let pos = scope.position_of_flat(idx).expect("value rows are in scope");
                let def = Defining { position: pos, width: row.width };
                match resolve(&linked, &scope, Some(def)) {
                    Ok(expr) => {
                        row.ty = expr.ty;
                        FlatKind::Formula { expr, linked }
                    }
                    Err(issues) => {
                        errors.extend(issues.into_iter().map(|iss| issue_diag(&s.name, row.path.clone(), iss)));
                        FlatKind::Blank
                    }
                }
            }
        };
        rows.push(row);
    }

    let mut checks = Vec::new();
    for (i, chk) in s.checks.iter().enumerate() {
        let path = format!("checks[{i}].expr");
        match resolve(&chk.expr, &scope, None) {
            Ok(expr) if expr.ty == ValueType::Boolean => checks.push(LinkedCheck {
                name: chk.name.clone(),
                expr,
                written: chk.expr.clone(),
            }),
            Ok(expr) => errors.push(Diagnostic::new(
                Code::CheckNotBoolean,
                at(path),
                format!("check `{}` is {}, not Boolean", chk.name, expr.ty),
            )),
            Err(issues) => errors.extend(issues.into_iter().map(|iss| issue_diag(&s.name, path.clone(), iss))),
        }
    }
    if !errors.is_empty() {
        return fail(errors);
    }
    normalize(&mut warnings);
    let data_inputs = s
        .data_inputs
        .iter()
        .zip(landing_of)
        .map(|(d, landing)| LinkedInput {
            name: d.name.clone(),
            structure: d.structure,
            landing: landing.expect("every wired input lands"),
        })
        .collect();
    Ok(LinkedSkeleton {
        name: s.name.clone(),
        rows,
        data_inputs,
        checks,
        instances,
        warnings,
    })
}
