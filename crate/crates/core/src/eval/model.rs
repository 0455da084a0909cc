//! Direct evaluation of an assembled model, independent of the workbook layout.

use super::grid::{CheckResult, CheckResults};
use super::value::{arith, call, compare, negate, Arg, Value};
use crate::assemble::{dependency_graph, AssembledModel, FlatKind};
use crate::error::{Error, Result};
use crate::expr::{Builtin, RExpr, ValueType};
use crate::model::{ScenarioValue, WidthClass};

#[derive(Debug, Clone, PartialEq)]
pub enum RowValues {
    Single(Value),
    /// One value per period; blank where a special row is inactive.
    Periods(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelValues {
    /// Per flat row; `None` for headings and blanks.
    pub rows: Vec<Option<RowValues>>,
    pub checks: CheckResults,
    pub n_periods: u32,
}

impl ModelValues {
    /// Value of flat row `row` in 1-based period `period`; single-column
    /// rows have one value for every period.
    pub fn get(&self, row: usize, period: u32) -> Value {
        match &self.rows[row] {
            Some(RowValues::Single(v)) => v.clone(),
            Some(RowValues::Periods(vs)) => vs.get(period as usize - 1).cloned().unwrap_or_default(),
            None => Value::Blank,
        }
    }
}

struct Ctx<'a> {
    rows: &'a [Option<RowValues>],
    n: u32,
}

impl Ctx<'_> {
    /// `period` is 0 for single-column hosts, matching the `COLUMN()-2` translation.
    fn eval(&self, e: &RExpr, period: u32) -> Value {
        let sub = |x: &RExpr| self.eval(x, period);
        match e {
            RExpr::Number(v) => Value::Number(*v),
            RExpr::Bool(b) => Value::Bool(*b),
            RExpr::Builtin(Builtin::Period) => Value::Number(f64::from(period)),
            RExpr::Builtin(Builtin::NPeriods) => Value::Number(f64::from(self.n)),
            RExpr::Neg(x) => negate(&sub(x)),
            RExpr::Binary { op, lhs, rhs } => arith(*op, &sub(lhs), &sub(rhs)),
            RExpr::Compare { op, lhs, rhs } => compare(*op, &sub(lhs), &sub(rhs)),
            RExpr::Call { func, args } => {
                let args: Vec<Arg> = args.iter().map(|a| Arg::Scalar(sub(a))).collect();
                call(func.name(), &args)
            }
            RExpr::Ref(r) => {
                let target = i64::from(period) + i64::from(r.offset);
                match &self.rows[r.target] {
                    Some(RowValues::Single(v)) => v.clone(),
                    Some(RowValues::Periods(_)) if target < 1 => match r.ty {
                        ValueType::Boolean => Value::Bool(false),
                        ValueType::Number => Value::Number(0.0),
                    },
                    Some(RowValues::Periods(vs)) => vs.get(target as usize - 1).cloned().unwrap_or_default(),
                    None => Value::Blank,
                }
            }
        }
    }
}

/// Evaluates every row and check of `a` under `scenario`.
pub fn evaluate_model(a: &AssembledModel, scenario: &str) -> Result<ModelValues> {
    let sc = a
        .scenarios
        .iter()
        .find(|s| s.name == scenario)
        .ok_or_else(|| Error::UnknownScenario(scenario.to_string()))?;
    let n = a.n_periods();
    let graph = dependency_graph(&a.name, &a.rows).map_err(|d| Error::EvalCycle(d.message))?;
    let mut rows: Vec<Option<RowValues>> = a
        .rows
        .iter()
        .map(|r| match (r.carries_value(), r.width) {
            (false, _) => None,
            (true, WidthClass::SingleColumn) => Some(RowValues::Single(Value::Blank)),
            (true, _) => Some(RowValues::Periods(vec![Value::Blank; n as usize])),
        })
        .collect();
    let input_value = |input: usize, period: u32| -> Value {
        let name = &a.data_inputs[input].name;
        match sc.values.get(name) {
            Some(ScenarioValue::Constant(v)) => Value::Number(*v),
            Some(ScenarioValue::Series(vs)) => {
                Value::Number(vs.get(period.max(1) as usize - 1).copied().unwrap_or(0.0))
            }
            None => Value::Number(0.0),
        }
    };
    let single: Vec<usize> = graph.order.iter().copied().filter(|&i| a.rows[i].width == WidthClass::SingleColumn).collect();
    let periodic: Vec<usize> = graph.order.iter().copied().filter(|&i| a.rows[i].width != WidthClass::SingleColumn).collect();
    for &i in &single {
        let v = match &a.rows[i].kind {
            FlatKind::Landing { input } => input_value(*input, 0),
            FlatKind::Formula { expr, .. } => Ctx { rows: &rows, n }.eval(&expr.root, 0).settle(),
            _ => continue,
        };
        rows[i] = Some(RowValues::Single(v));
    }
    for p in 1..=n {
        for &i in &periodic {
            if !a.rows[i].active_in(p) {
                continue;
            }
            let v = match &a.rows[i].kind {
                FlatKind::Landing { input } => input_value(*input, p),
                FlatKind::Formula { expr, .. } => Ctx { rows: &rows, n }.eval(&expr.root, p).settle(),
                _ => continue,
            };
            if let Some(RowValues::Periods(vs)) = &mut rows[i] {
                vs[p as usize - 1] = v;
            }
        }
    }
    let ctx = Ctx { rows: &rows, n };
    let checks: Vec<CheckResult> = a
        .checks
        .iter()
        .map(|chk| {
            let values: Vec<Value> = (1..=n).map(|p| ctx.eval(&chk.expr.root, p).settle()).collect();
            let aggregate = call("AND", &[Arg::Range(values.clone())]) == Value::Bool(true);
            CheckResult { name: chk.name.clone(), periods: values.iter().map(Value::as_bool).collect(), aggregate }
        })
        .collect();
    let all_checks = checks.iter().all(|c| c.aggregate);
    Ok(ModelValues { rows, checks: CheckResults { checks, all_checks }, n_periods: n })
}
