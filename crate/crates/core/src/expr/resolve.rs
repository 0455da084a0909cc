//! Name resolution and type inference against an ordered scope of rows.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{ArithOp, Builtin, CmpOp, Expr, Func};
use crate::diagnostics::Code;
use crate::model::WidthClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Number,
    Boolean,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Number => "Number",
            ValueType::Boolean => "Boolean",
        })
    }
}

/// One visible row, in top-to-bottom order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeEntry {
    pub path: String,
    /// Index into the flat row list (which also holds headings and blanks).
    pub flat_index: usize,
    pub width: WidthClass,
    pub ty: ValueType,
}

#[derive(Debug, Clone, Default)]
pub struct Scope {
    entries: Vec<ScopeEntry>,
    by_path: HashMap<String, usize>,
}

impl Scope {
    pub fn new(entries: Vec<ScopeEntry>) -> Scope {
        let mut scope = Scope::default();
        for e in entries {
            scope.push(e);
        }
        scope
    }

    pub fn push(&mut self, entry: ScopeEntry) {
        self.by_path.insert(entry.path.clone(), self.entries.len());
        self.entries.push(entry);
    }

    /// Returns the scope position and entry for a dotted path.
    pub fn lookup(&self, path: &str) -> Option<(usize, &ScopeEntry)> {
        self.by_path.get(path).map(|&i| (i, &self.entries[i]))
    }

    pub fn entries(&self) -> &[ScopeEntry] {
        &self.entries
    }

    pub fn position_of_flat(&self, flat_index: usize) -> Option<usize> {
        self.entries.iter().position(|e| e.flat_index == flat_index)
    }

    pub fn set_type(&mut self, position: usize, ty: ValueType) {
        self.entries[position].ty = ty;
    }
}

/// The row an expression defines, if any. Checks define no row and see every row.
#[derive(Debug, Clone, Copy)]
pub struct Defining {
    pub position: usize,
    pub width: WidthClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedRef {
    pub target: usize,
    pub offset: i32,
    pub width: WidthClass,
    pub ty: ValueType,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RExpr {
    Number(f64),
    Bool(bool),
    Ref(ResolvedRef),
    Neg(Box<RExpr>),
    Binary {
        op: ArithOp,
        lhs: Box<RExpr>,
        rhs: Box<RExpr>,
    },
    Compare {
        op: CmpOp,
        lhs: Box<RExpr>,
        rhs: Box<RExpr>,
    },
    Call {
        func: Func,
        args: Vec<RExpr>,
    },
    Builtin(Builtin),
}

impl RExpr {
    pub fn refs(&self) -> Vec<ResolvedRef> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs(&self, out: &mut Vec<ResolvedRef>) {
        match self {
            RExpr::Ref(r) => out.push(*r),
            RExpr::Neg(inner) => inner.collect_refs(out),
            RExpr::Binary { lhs, rhs, .. } | RExpr::Compare { lhs, rhs, .. } => {
                lhs.collect_refs(out);
                rhs.collect_refs(out);
            }
            RExpr::Call { args, .. } => args.iter().for_each(|a| a.collect_refs(out)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedExpr {
    pub root: RExpr,
    pub ty: ValueType,
}

/// A resolution or typing problem, located by the offending sub-expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprIssue {
    pub code: Code,
    pub message: String,
}

impl ExprIssue {
    fn new(code: Code, message: impl Into<String>) -> Self {
        ExprIssue {
            code,
            message: message.into(),
        }
    }
}

/// Resolves every reference of `e` against `scope` and infers the result type.
///
/// Same-period references must point strictly above the defining row; prior-period
/// references may point anywhere. Single-column rows take no period offset, and a
/// single-column row may only read other single-column rows.
pub fn resolve(
    e: &Expr,
    scope: &Scope,
    defining: Option<Defining>,
) -> Result<ResolvedExpr, Vec<ExprIssue>> {
    let mut issues = Vec::new();
    let root = resolve_node(e, scope, defining, &mut issues);
    if !issues.is_empty() {
        return Err(issues);
    }
    match infer_type(&root) {
        Ok(ty) => Ok(ResolvedExpr { root, ty }),
        Err(issue) => Err(vec![issue]),
    }
}

fn resolve_node(
    e: &Expr,
    scope: &Scope,
    defining: Option<Defining>,
    issues: &mut Vec<ExprIssue>,
) -> RExpr {
    let sub = |x: &Expr, issues: &mut Vec<ExprIssue>| Box::new(resolve_node(x, scope, defining, issues));
    match e {
        Expr::Number(d) => RExpr::Number(d.to_f64()),
        Expr::Bool(b) => RExpr::Bool(*b),
        Expr::Builtin(b) => RExpr::Builtin(*b),
        Expr::Neg(inner) => RExpr::Neg(sub(inner, issues)),
        Expr::Binary { op, lhs, rhs } => RExpr::Binary {
            op: *op,
            lhs: sub(lhs, issues),
            rhs: sub(rhs, issues),
        },
        Expr::Compare { op, lhs, rhs } => RExpr::Compare {
            op: *op,
            lhs: sub(lhs, issues),
            rhs: sub(rhs, issues),
        },
        Expr::Call { func, args } => RExpr::Call {
            func: *func,
            args: args
                .iter()
                .map(|a| resolve_node(a, scope, defining, issues))
                .collect(),
        },
        Expr::Ref(r) => {
            let path = r.dotted();
            let Some((pos, entry)) = scope.lookup(&path) else {
                issues.push(ExprIssue::new(
                    Code::UnresolvedRef,
                    format!("`@{path}` does not name a visible value row"),
                ));
                return RExpr::Number(0.0);
            };
            if let Some(def) = defining {
                if r.offset == 0 && pos >= def.position {
                    issues.push(ExprIssue::new(
                        Code::ForwardRow,
                        format!("`@{path}` is not above this row; same-period references must read upward"),
                    ));
                }
                if def.width == WidthClass::SingleColumn && entry.width != WidthClass::SingleColumn {
                    issues.push(ExprIssue::new(
                        Code::SingleRefsSeries,
                        format!("single-column row reads period row `@{path}`"),
                    ));
                }
            }
            if entry.width == WidthClass::SingleColumn && r.offset != 0 {
                issues.push(ExprIssue::new(
                    Code::OffsetOnSingle,
                    format!("`@{path}[{}]`: single-column rows have no periods", r.offset),
                ));
            }
            RExpr::Ref(ResolvedRef {
                target: entry.flat_index,
                offset: r.offset,
                width: entry.width,
                ty: entry.ty,
            })
        }
    }
}

/// Infers the result type, rejecting ill-typed operands.
pub fn infer_type(e: &RExpr) -> Result<ValueType, ExprIssue> {
    use ValueType::*;
    let want = |node: &RExpr, ty: ValueType, ctx: &str| -> Result<(), ExprIssue> {
        let got = infer_type(node)?;
        if got == ty {
            Ok(())
        } else {
            Err(ExprIssue::new(
                Code::TypeMismatch,
                format!("{ctx} expects {ty}, found {got} in `{}`", print_resolved(node)),
            ))
        }
    };
    match e {
        RExpr::Number(_) | RExpr::Builtin(_) => Ok(Number),
        RExpr::Bool(_) => Ok(Boolean),
        RExpr::Ref(r) => Ok(r.ty),
        RExpr::Neg(inner) => want(inner, Number, "unary `-`").map(|_| Number),
        RExpr::Binary { op, lhs, rhs } => {
            let ctx = format!("operator `{}`", op.symbol());
            want(lhs, Number, &ctx)?;
            want(rhs, Number, &ctx)?;
            Ok(Number)
        }
        RExpr::Compare { op, lhs, rhs } => {
            let lt = infer_type(lhs)?;
            want(rhs, lt, &format!("comparison `{}`", op.symbol()))?;
            Ok(Boolean)
        }
        RExpr::Call { func, args } => match func {
            Func::Sum | Func::Min | Func::Max | Func::Abs | Func::Round => {
                for a in args {
                    want(a, Number, func.name())?;
                }
                Ok(Number)
            }
            Func::And | Func::Or | Func::Not => {
                for a in args {
                    want(a, Boolean, func.name())?;
                }
                Ok(Boolean)
            }
            Func::If => {
                want(&args[0], Boolean, "IF condition")?;
                let t = infer_type(&args[1])?;
                want(&args[2], t, "IF branches")?;
                Ok(t)
            }
        },
    }
}

fn print_resolved(e: &RExpr) -> String {
    match e {
        RExpr::Number(n) => n.to_string(),
        RExpr::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        RExpr::Ref(r) if r.offset == 0 => format!("row#{}", r.target),
        RExpr::Ref(r) => format!("row#{}[{}]", r.target, r.offset),
        RExpr::Builtin(b) => b.name().to_string(),
        RExpr::Neg(inner) => format!("-{}", print_resolved(inner)),
        RExpr::Binary { op, lhs, rhs } => {
            format!("{} {} {}", print_resolved(lhs), op.symbol(), print_resolved(rhs))
        }
        RExpr::Compare { op, lhs, rhs } => {
            format!("{} {} {}", print_resolved(lhs), op.symbol(), print_resolved(rhs))
        }
        RExpr::Call { func, args } => format!(
            "{}({})",
            func.name(),
            args.iter().map(print_resolved).collect::<Vec<_>>().join(", ")
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn cash_scope() -> Scope {
        let rows = [
            ("Inflow", WidthClass::FullWidth),
            ("Opening", WidthClass::FullWidth),
            ("Closing", WidthClass::FullWidth),
            ("Rate", WidthClass::SingleColumn),
        ];
        Scope::new(
            rows.iter()
                .enumerate()
                .map(|(i, (p, w))| ScopeEntry {
                    path: p.to_string(),
                    flat_index: i + 1,
                    width: *w,
                    ty: ValueType::Number,
                })
                .collect(),
        )
    }

    fn codes(r: Result<ResolvedExpr, Vec<ExprIssue>>) -> Vec<Code> {
        r.unwrap_err().into_iter().map(|i| i.code).collect()
    }

    fn at(position: usize) -> Option<Defining> {
        Some(Defining {
            position,
            width: WidthClass::FullWidth,
        })
    }

    #[test]
    fn upward_refs_resolve() {
        let scope = cash_scope();
        let r = resolve(&parse("@Opening + @Inflow").unwrap(), &scope, at(2)).unwrap();
        assert_eq!(r.ty, ValueType::Number);
        let targets: Vec<usize> = r.root.refs().iter().map(|r| r.target).collect();
        assert_eq!(targets, vec![2, 1]);
    }

    #[test]
    fn prior_period_may_point_down() {
        let scope = cash_scope();
        assert!(resolve(&parse("@Closing[-1]").unwrap(), &scope, at(1)).is_ok());
        assert!(resolve(&parse("@Closing[-1] + @Inflow").unwrap(), &scope, at(2)).is_ok());
    }

    #[test]
    fn same_period_forward_is_rejected() {
        let scope = cash_scope();
        assert_eq!(codes(resolve(&parse("@Closing").unwrap(), &scope, at(1))), vec![Code::ForwardRow]);
        // self reference
        assert_eq!(codes(resolve(&parse("@Closing").unwrap(), &scope, at(2))), vec![Code::ForwardRow]);
    }

    #[test]
    fn unknown_and_single_offsets() {
        let scope = cash_scope();
        assert_eq!(codes(resolve(&parse("@Nope").unwrap(), &scope, None)), vec![Code::UnresolvedRef]);
        assert_eq!(
            codes(resolve(&parse("@Rate[-1]").unwrap(), &scope, None)),
            vec![Code::OffsetOnSingle]
        );
        let single = Some(Defining {
            position: 4,
            width: WidthClass::SingleColumn,
        });
        assert_eq!(
            codes(resolve(&parse("@Inflow").unwrap(), &scope, single)),
            vec![Code::SingleRefsSeries]
        );
    }

    #[test]
    fn typing() {
        let scope = cash_scope();
        let ty = |t: &str| resolve(&parse(t).unwrap(), &scope, None).map(|r| r.ty);
        assert_eq!(ty("@Inflow * 2").unwrap(), ValueType::Number);
        assert_eq!(ty("@Inflow = @Closing").unwrap(), ValueType::Boolean);
        assert_eq!(ty("IF(@Inflow > 0, TRUE, FALSE)").unwrap(), ValueType::Boolean);
        assert_eq!(ty("NOT(PERIOD = NPERIODS)").unwrap(), ValueType::Boolean);
        for bad in ["AND(@Inflow, 1)", "@Inflow + TRUE", "IF(1, 2, 3)", "IF(TRUE, 2, FALSE)", "(@Inflow = 1) = 2"] {
            let err = ty(bad).unwrap_err();
            assert_eq!(err[0].code, Code::TypeMismatch, "{bad}");
        }
    }

    #[test]
    fn resolution_is_monotone_in_later_rows() {
        let mut scope = cash_scope();
        let e = parse("@Opening + @Inflow").unwrap();
        let before = resolve(&e, &scope, at(2)).unwrap();
        scope.push(ScopeEntry {
            path: "Later".into(),
            flat_index: 9,
            width: WidthClass::FullWidth,
            ty: ValueType::Boolean,
        });
        assert_eq!(resolve(&e, &scope, at(2)).unwrap(), before);
    }
}
