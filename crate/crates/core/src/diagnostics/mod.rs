//! Diagnostic codes, reports and the element diagnosis registry.

mod code;
mod types;

use std::collections::HashSet;

pub use code::{Code, CodeInfo, Severity};
pub use types::{has_errors, normalize, Diagnostic, Location};

use crate::assemble::{assemble, dependency_graph, expand_with_id, issue_diag, link, ExpandedKind, FlatKind, FlatRow};
use crate::error::Result;
use crate::expr::{resolve, Defining, Expr, Scope, ScopeEntry, ValueType};
use crate::model::{validate_element, Element, ElementKind, WidthClass};
use crate::store::{effective_status, Repository, VersionId};
use crate::model::Status;

/// What a checker sees.
pub struct Context<'a> {
    pub id: &'a VersionId,
    pub element: &'a Element,
    pub repo: &'a dyn Repository,
}

/// One entry of the diagnosis registry.
pub struct Checker {
    pub name: &'static str,
    pub kinds: &'static [ElementKind],
    pub run: fn(&Context) -> Vec<Diagnostic>,
}

const ALL_KINDS: &[ElementKind] = &[ElementKind::Component, ElementKind::Skeleton, ElementKind::Model];

pub static CHECKERS: &[Checker] = &[
    Checker { name: "local", kinds: ALL_KINDS, run: check_local },
    Checker { name: "component-scope", kinds: &[ElementKind::Component], run: check_component },
    Checker { name: "link", kinds: &[ElementKind::Skeleton], run: check_link },
    Checker { name: "complete", kinds: &[ElementKind::Model], run: check_complete },
    Checker { name: "no-checks", kinds: &[ElementKind::Skeleton, ElementKind::Model], run: check_no_checks },
    Checker { name: "databook", kinds: ALL_KINDS, run: check_databook },
    Checker { name: "unchecked", kinds: ALL_KINDS, run: check_unchecked },
];

/// Runs every registered checker that applies to the kind of `v`.
pub fn diagnose(v: &VersionId, repo: &dyn Repository) -> Result<Vec<Diagnostic>> {
    let element = repo.element(v)?;
    let ctx = Context { id: v, element: &element, repo };
    let mut out = Vec::new();
    for checker in CHECKERS.iter().filter(|c| c.kinds.contains(&element.kind())) {
        out.extend((checker.run)(&ctx));
    }
    normalize(&mut out);
    Ok(out)
}

/// `Err` holds the blocking diagnostics: every error, plus warnings when `strict`.
pub fn gate_generation(diags: &[Diagnostic], strict: bool) -> Result<(), Vec<Diagnostic>> {
    let blocking: Vec<Diagnostic> = diags
        .iter()
        .filter(|d| strict || d.is_error())
        .cloned()
        .collect();
    if blocking.is_empty() {
        Ok(())
    } else {
        Err(blocking)
    }
}

fn check_local(ctx: &Context) -> Vec<Diagnostic> {
    validate_element(ctx.element)
}

fn constant_warnings(element: &str, path: &str, e: &Expr) -> Option<Diagnostic> {
    let constants = e.scan_constants();
    if constants.is_empty() {
        return None;
    }
    let list: Vec<&str> = constants.iter().map(|d| d.as_str()).collect();
    Some(Diagnostic::new(
        Code::ConstantInFormula,
        Location::new(element, path),
        format!("constant {} in formula; consider a data input", list.join(", ")),
    ))
}

/// Expands the component and resolves it with every row full-width, since
/// widths are only known once it is instanced in a skeleton.
fn check_component(ctx: &Context) -> Vec<Diagnostic> {
    let Element::Component(c) = ctx.element else { return vec![] };
    let mut out = Vec::new();
    for (i, row) in c.rows.iter().enumerate() {
        if let crate::model::RowKind::Formula { expr } = &row.kind {
            out.extend(constant_warnings(&c.name, &format!("rows[{i}].kind.expr"), expr));
        }
    }
    let ex = match expand_with_id(c, Some(ctx.id), ctx.repo) {
        Ok(ex) => ex,
        Err(errs) => {
            out.extend(errs);
            return out;
        }
    };
    out.extend(ex.warnings);
    let mut scope = Scope::default();
    for (i, r) in ex.rows.iter().enumerate() {
        if !matches!(r.kind, ExpandedKind::Heading | ExpandedKind::Blank) {
            scope.push(ScopeEntry {
                path: r.path.clone(),
                flat_index: i,
                width: WidthClass::FullWidth,
                ty: ValueType::Number,
            });
        }
    }
    let own: std::collections::HashMap<&str, usize> =
        c.rows.iter().enumerate().map(|(i, r)| (r.label.as_str(), i)).collect();
    for (i, r) in ex.rows.iter().enumerate() {
        let ExpandedKind::Formula { expr } = &r.kind else { continue };
        let pos = scope.position_of_flat(i).expect("value rows are in scope");
        match resolve(expr, &scope, Some(Defining { position: pos, width: WidthClass::FullWidth })) {
            Ok(res) => scope.set_type(pos, res.ty),
            Err(issues) => {
                let path = match own.get(r.path.as_str()) {
                    Some(j) => format!("rows[{j}].kind.expr"),
                    None => r.path.clone(),
                };
                out.extend(issues.into_iter().map(|iss| issue_diag(&c.name, path.clone(), iss)));
            }
        }
    }
    out
}

fn row_constants(element: &str, rows: &[FlatRow], out: &mut Vec<Diagnostic>) {
    for r in rows {
        if let FlatKind::Formula { linked, .. } = &r.kind {
            out.extend(constant_warnings(element, &r.path, linked));
        }
    }
}

fn check_link(ctx: &Context) -> Vec<Diagnostic> {
    let Element::Skeleton(s) = ctx.element else { return vec![] };
    match link(s, ctx.repo) {
        Ok(linked) => {
            let mut out = linked.warnings;
            row_constants(&s.name, &linked.rows, &mut out);
            for (i, chk) in s.checks.iter().enumerate() {
                out.extend(constant_warnings(&s.name, &format!("checks[{i}].expr"), &chk.expr));
            }
            out
        }
        Err(errs) => errs,
    }
}

fn check_complete(ctx: &Context) -> Vec<Diagnostic> {
    let Element::Model(m) = ctx.element else { return vec![] };
    match assemble(m, Some(ctx.id.clone()), ctx.repo) {
        Ok(a) => {
            let mut out = a.warnings;
            if let Err(d) = dependency_graph(&m.name, &a.rows) {
                out.push(d);
            }
            row_constants(&m.name, &a.rows, &mut out);
            for chk in &a.checks {
                out.extend(constant_warnings(&m.name, &format!("checks.{}", chk.name), &chk.written));
            }
            out
        }
        Err(errs) => errs,
    }
}

fn check_no_checks(ctx: &Context) -> Vec<Diagnostic> {
    let skeleton = match ctx.element {
        Element::Skeleton(s) => s.clone(),
        Element::Model(m) => match ctx.repo.element(&m.skeleton) {
            Ok(Element::Skeleton(s)) => s,
            _ => return vec![],
        },
        Element::Component(_) => return vec![],
    };
    if skeleton.checks.is_empty() {
        vec![Diagnostic::new(
            Code::NoChecks,
            Location::new(&skeleton.name, "checks"),
            "the skeleton defines no self-checks",
        )]
    } else {
        vec![]
    }
}

/// The element and every element below it, each once, depth first.
fn descendants(ctx: &Context) -> Vec<Element> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut stack = vec![(ctx.id.clone(), ctx.element.clone())];
    while let Some((id, el)) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        for child in el.children().into_iter().rev() {
            if let Ok(c) = ctx.repo.element(child) {
                stack.push((child.clone(), c));
            }
        }
        out.push(el);
    }
    out
}

fn check_databook(ctx: &Context) -> Vec<Diagnostic> {
    descendants(ctx)
        .into_iter()
        .filter(|e| e.doc().databook_entry.trim().is_empty())
        .map(|e| {
            Diagnostic::new(
                Code::NoDatabookEntry,
                Location::new(e.name(), "doc.databook_entry"),
                format!("{} `{}` has no data book entry", e.kind(), e.name()),
            )
        })
        .collect()
}

fn check_unchecked(ctx: &Context) -> Vec<Diagnostic> {
    match effective_status(ctx.repo, ctx.id) {
        Ok(Status::Ok) => vec![],
        Ok(status) => vec![Diagnostic::new(
            Code::Unchecked,
            Location::new(ctx.element.name(), "doc.status"),
            format!("effective status is {status}"),
        )],
        // A missing child is reported by the structural checkers.
        Err(_) => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_blocks_only_on_errors_unless_strict() {
        let w = Diagnostic::new(Code::ConstantInFormula, Location::new("m", "r"), "w");
        let e = Diagnostic::new(Code::ScenarioIncomplete, Location::new("m", "s"), "e");
        assert!(gate_generation(&[], false).is_ok());
        assert!(gate_generation(&[w.clone()], false).is_ok());
        assert_eq!(gate_generation(&[w.clone()], true).unwrap_err(), vec![w.clone()]);
        assert_eq!(gate_generation(&[w, e.clone()], false).unwrap_err(), vec![e]);
    }

    #[test]
    fn every_code_is_registered_once() {
        let mut names: Vec<&str> = Code::ALL.iter().map(|c| c.as_str()).collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
        for c in Code::ALL {
            assert_eq!(Code::from_str_code(c.as_str()), Some(*c));
            assert!(!c.summary().is_empty());
        }
    }
}
