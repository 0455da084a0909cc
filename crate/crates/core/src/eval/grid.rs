//! Evaluation of a workbook IR, cell by cell in dependency order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use super::value::{arith, call, compare, negate, Arg, ErrorValue, Value};
use crate::codegen::{
    a1, serial, CellContent, CellExpr, CellRef, Literal, WorkbookIR, CHECKS_SHEET, FIRST_PERIOD_COL, SELECTOR_ROW,
    SINGLE_COL,
};
use crate::error::{Error, Result};

type Key = (usize, u32, u32);

/// Every populated cell's value after evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellValues {
    sheets: Vec<String>,
    values: HashMap<Key, Value>,
}

impl CellValues {
    pub fn get(&self, sheet: &str, row: u32, col: u32) -> Value {
        self.sheets
            .iter()
            .position(|s| s == sheet)
            .and_then(|i| self.values.get(&(i, row, col)).cloned())
            .unwrap_or(Value::Blank)
    }

    /// Values of one sheet, sorted by (row, col).
    pub fn sheet(&self, sheet: &str) -> Vec<((u32, u32), Value)> {
        let Some(i) = self.sheets.iter().position(|s| s == sheet) else { return vec![] };
        let mut out: Vec<_> = self
            .values
            .iter()
            .filter(|((s, _, _), _)| *s == i)
            .map(|(&(_, r, c), v)| ((r, c), v.clone()))
            .collect();
        out.sort_by_key(|(k, _)| *k);
        out
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-check results read back from the Checks sheet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// `None` marks a period whose check evaluated to an error.
    pub periods: Vec<Option<bool>>,
    pub aggregate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResults {
    pub checks: Vec<CheckResult>,
    pub all_checks: bool,
}

struct Evaluator<'a> {
    ir: &'a WorkbookIR,
    sheet_index: HashMap<&'a str, usize>,
    values: HashMap<Key, Value>,
}

impl<'a> Evaluator<'a> {
    fn sheet_of(&self, r: &CellRef, host: usize) -> Option<usize> {
        match &r.sheet {
            None => Some(host),
            Some(name) => self.sheet_index.get(name.as_str()).copied(),
        }
    }

    fn name_key(&self, name: &str) -> Option<Key> {
        let n = self.ir.name(name)?;
        Some((*self.sheet_index.get(n.sheet.as_str())?, n.row, n.col))
    }

    /// Populated cells of a rectangle, row-major.
    fn rect(&self, sheet: usize, a: &CellRef, b: &CellRef) -> Vec<(u32, u32)> {
        let (r1, r2) = (a.row.min(b.row), a.row.max(b.row));
        let (c1, c2) = (a.col.min(b.col), a.col.max(b.col));
        let cells = &self.ir.sheets[sheet].cells;
        (r1..=r2)
            .flat_map(|r| cells.range((r, c1)..=(r, c2)).map(|(k, _)| *k))
            .collect()
    }

    fn deps(&self, e: &CellExpr, host: usize, out: &mut Vec<Key>) {
        match e {
            CellExpr::Ref(r) => {
                if let Some(s) = self.sheet_of(r, host) {
                    out.push((s, r.row, r.col));
                }
            }
            CellExpr::Range(a, b) => {
                if let Some(s) = self.sheet_of(a, host) {
                    out.extend(self.rect(s, a, b).into_iter().map(|(r, c)| (s, r, c)));
                }
            }
            CellExpr::Name(n) => out.extend(self.name_key(n)),
            CellExpr::Neg(x) => self.deps(x, host, out),
            CellExpr::Binary { lhs, rhs, .. } | CellExpr::Compare { lhs, rhs, .. } => {
                self.deps(lhs, host, out);
                self.deps(rhs, host, out);
            }
            CellExpr::Call { args, .. } => args.iter().for_each(|a| self.deps(a, host, out)),
            _ => {}
        }
    }

    fn value(&self, key: Key) -> Value {
        self.values.get(&key).cloned().unwrap_or(Value::Blank)
    }

    fn range_values(&self, a: &CellRef, b: &CellRef, host: usize) -> Result<Vec<Value>, ErrorValue> {
        let s = self.sheet_of(a, host).ok_or(ErrorValue::Ref)?;
        Ok(self.rect(s, a, b).into_iter().map(|(r, c)| self.value((s, r, c))).collect())
    }

    fn eval(&self, e: &CellExpr, host: usize, col: u32) -> Value {
        let sub = |x: &CellExpr| self.eval(x, host, col);
        match e {
            CellExpr::Number(v) => Value::Number(*v),
            CellExpr::Bool(b) => Value::Bool(*b),
            CellExpr::Text(s) => Value::Text(s.clone()),
            CellExpr::Guard { boolean, .. } => {
                if *boolean {
                    Value::Bool(false)
                } else {
                    Value::Number(0.0)
                }
            }
            CellExpr::Ref(r) => match self.sheet_of(r, host) {
                Some(s) => self.value((s, r.row, r.col)),
                None => Value::Error(ErrorValue::Ref),
            },
            CellExpr::Range(a, b) => match self.range_values(a, b, host) {
                Ok(vs) if vs.len() == 1 && a == b => vs[0].clone(),
                _ => Value::Error(ErrorValue::Value),
            },
            CellExpr::Name(n) => match self.name_key(n) {
                Some(k) => self.value(k),
                None => Value::Error(ErrorValue::Ref),
            },
            CellExpr::Neg(x) => negate(&sub(x)),
            CellExpr::Binary { op, lhs, rhs } => arith(*op, &sub(lhs), &sub(rhs)),
            CellExpr::Compare { op, lhs, rhs } => compare(*op, &sub(lhs), &sub(rhs)),
            CellExpr::Call { name, args } => match (name.as_str(), args.as_slice()) {
                ("COLUMN", []) => Value::Number(f64::from(col)),
                ("COLUMNS", [CellExpr::Range(a, b)]) => Value::Number(f64::from(a.col.abs_diff(b.col) + 1)),
                ("INDEX", [CellExpr::Range(a, b), k]) => {
                    let Some(s) = self.sheet_of(a, host) else { return Value::Error(ErrorValue::Ref) };
                    let k = match sub(k).to_number() {
                        Ok(k) => k.trunc() as i64,
                        Err(e) => return Value::Error(e),
                    };
                    let (r1, c1) = (a.row.min(b.row), a.col.min(b.col));
                    let (rows, cols) = (a.row.abs_diff(b.row) + 1, a.col.abs_diff(b.col) + 1);
                    let len = i64::from(rows.max(cols));
                    if k < 1 || k > len || (rows > 1 && cols > 1) {
                        return Value::Error(ErrorValue::Ref);
                    }
                    let k = (k - 1) as u32;
                    if rows > 1 {
                        self.value((s, r1 + k, c1))
                    } else {
                        self.value((s, r1, c1 + k))
                    }
                }
                _ => {
                    let args: Vec<Arg> = args
                        .iter()
                        .map(|a| match a {
                            CellExpr::Range(x, y) => match self.range_values(x, y, host) {
                                Ok(vs) => Arg::Range(vs),
                                Err(e) => Arg::Scalar(Value::Error(e)),
                            },
                            other => Arg::Scalar(sub(other)),
                        })
                        .collect();
                    call(name, &args)
                }
            },
        }
    }
}

fn literal_value(l: &Literal) -> Value {
    match l {
        Literal::Number(v) => Value::Number(*v),
        Literal::Text(s) => Value::Text(s.clone()),
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Date(d) => Value::Number(serial(*d)),
    }
}

/// Evaluates with ActiveScenario set to `scenario`.
pub fn evaluate(ir: &WorkbookIR, scenario: &str) -> Result<CellValues> {
    let index = ir
        .scenario_names
        .iter()
        .position(|s| s == scenario)
        .ok_or_else(|| Error::UnknownScenario(scenario.to_string()))?;
    evaluate_with(ir, Some(index as f64 + 1.0))
}

/// Evaluates the workbook exactly as it stands.
pub fn evaluate_as_is(ir: &WorkbookIR) -> Result<CellValues> {
    evaluate_with(ir, None)
}

fn evaluate_with(ir: &WorkbookIR, active: Option<f64>) -> Result<CellValues> {
    let mut ev = Evaluator {
        ir,
        sheet_index: ir.sheets.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect(),
        values: HashMap::new(),
    };
    let mut formulas: Vec<(Key, &CellExpr)> = Vec::new();
    for (si, sheet) in ir.sheets.iter().enumerate() {
        for (&(r, c), cell) in &sheet.cells {
            match &cell.content {
                CellContent::Literal(l) => {
                    ev.values.insert((si, r, c), literal_value(l));
                }
                CellContent::Formula(e) => formulas.push(((si, r, c), e)),
            }
        }
    }
    if let (Some(v), Some(k)) = (active, ev.name_key("ActiveScenario")) {
        ev.values.insert(k, Value::Number(v));
    }
    let node: HashMap<Key, usize> = formulas.iter().enumerate().map(|(i, (k, _))| (*k, i)).collect();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); formulas.len()];
    let mut indegree = vec![0usize; formulas.len()];
    for (i, (key, e)) in formulas.iter().enumerate() {
        let mut deps = Vec::new();
        ev.deps(e, key.0, &mut deps);
        deps.sort();
        deps.dedup();
        for d in deps {
            if let Some(&j) = node.get(&d) {
                out_edges[j].push(i);
                indegree[i] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..formulas.len()).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut done = 0;
    while let Some(Reverse(i)) = ready.pop() {
        let ((s, r, c), e) = formulas[i];
        let v = ev.eval(e, s, c).settle();
        ev.values.insert((s, r, c), v);
        done += 1;
        for &j in &out_edges[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(Reverse(j));
            }
        }
    }
    if done < formulas.len() {
        let (s, r, c) = formulas[(0..formulas.len()).find(|&i| indegree[i] > 0).expect("stuck node")].0;
        return Err(Error::EvalCycle(format!("{}!{}", ir.sheets[s].name, a1(r, c))));
    }
    Ok(CellValues { sheets: ir.sheets.iter().map(|s| s.name.clone()).collect(), values: ev.values })
}

/// Reads the check rows, their aggregates and AllChecks.
pub fn run_checks(ir: &WorkbookIR, vals: &CellValues) -> CheckResults {
    let mut checks = Vec::new();
    if let Some(sheet) = ir.sheet(CHECKS_SHEET) {
        let (max_row, max_col) = sheet.extent();
        for row in SELECTOR_ROW + 2..=max_row {
            let Some(label) = sheet.get(row, 1) else { continue };
            let CellContent::Literal(Literal::Text(name)) = &label.content else { continue };
            let periods = (FIRST_PERIOD_COL..=max_col)
                .filter(|&c| sheet.get(row, c).is_some())
                .map(|c| vals.get(CHECKS_SHEET, row, c).as_bool())
                .collect();
            let aggregate = vals.get(CHECKS_SHEET, row, SINGLE_COL).as_bool() == Some(true);
            checks.push(CheckResult { name: name.clone(), periods, aggregate });
        }
    }
    let all_checks = ir
        .name("AllChecks")
        .map(|n| vals.get(&n.sheet, n.row, n.col).as_bool() == Some(true))
        .unwrap_or(false);
    CheckResults { checks, all_checks }
}
