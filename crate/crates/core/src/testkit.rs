//! Seeded random expressions and small models, for property tests and benchmarks.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::eval::ErrorValue;
use crate::expr::{ArithOp, Builtin, CmpOp, Decimal, Expr, Func, RowRef};
use crate::model::{
    CheckDef, Component, DataInput, Documentation, Element, GenParams, Instance, Model, Periodicity, Port, Row,
    RowKind, Scenario, ScenarioValue, Skeleton, SpecialRange, Structure, WidthClass, WireSource,
};
use crate::store::{MemoryRepo, VersionId};

pub const INSTANCE: &str = "g";

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

const ARITH: [ArithOp; 4] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div];
const CMP: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

fn pick<T: Copy>(rng: &mut StdRng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

fn decimal(rng: &mut StdRng) -> Decimal {
    let int: u32 = rng.random_range(0..1000);
    let text = match rng.random_range(0..3) {
        0 => int.to_string(),
        1 => format!("{int}.{}", rng.random_range(1..10)),
        _ => format!("{int}.{:03}", rng.random_range(1..1000)),
    };
    Decimal::parse(&text).expect("generated decimal")
}

fn ident(rng: &mut StdRng) -> String {
    const FIRST: &[u8] = b"abcxyzABCXYZ";
    const REST: &[u8] = b"abcz09_XY";
    let mut s = String::new();
    s.push(FIRST[rng.random_range(0..FIRST.len())] as char);
    for _ in 0..rng.random_range(0..5) {
        s.push(REST[rng.random_range(0..REST.len())] as char);
    }
    s
}

/// Any syntactically valid expression, ignoring types and scoping.
pub fn random_expr(rng: &mut StdRng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..5) {
            0 => Expr::Number(decimal(rng)),
            1 => Expr::Bool(rng.random_bool(0.5)),
            2 => Expr::Builtin(pick(rng, &[Builtin::Period, Builtin::NPeriods])),
            _ => {
                let segments = rng.random_range(1..4);
                let path = (0..segments).map(|_| ident(rng)).collect();
                Expr::Ref(RowRef { path, offset: -rng.random_range(0..4) })
            }
        };
    }
    let d = depth - 1;
    match rng.random_range(0..4) {
        0 => Expr::Neg(Box::new(random_expr(rng, d))),
        1 => Expr::binary(pick(rng, &ARITH), random_expr(rng, d), random_expr(rng, d)),
        2 => Expr::compare(pick(rng, &CMP), random_expr(rng, d), random_expr(rng, d)),
        _ => {
            let func = pick(rng, &Func::ALL);
            let n = match func.arity() {
                (lo, Some(hi)) => rng.random_range(lo..=hi),
                (lo, None) => rng.random_range(lo..=lo + 3),
            };
            Expr::Call { func, args: (0..n).map(|_| random_expr(rng, d)).collect() }
        }
    }
}

/// Size knobs for [`random_model`].
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub formula_rows: usize,
    pub n_periods: u32,
    pub max_depth: u32,
    /// Allow single-column and special rows besides full-width ones.
    pub mixed_widths: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { formula_rows: 4, n_periods: 4, max_depth: 3, mixed_widths: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenDef {
    /// Lands the series input `x`.
    Series,
    /// Lands the scalar input `k`.
    Scalar,
    Formula(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenRow {
    pub label: String,
    pub width: WidthClass,
    pub special: Option<SpecialRange>,
    pub def: GenDef,
}

/// A saved one-instance model and the plain description it was built from.
pub struct RandomModel {
    pub repo: MemoryRepo,
    pub model: VersionId,
    pub rows: Vec<GenRow>,
    /// Values of input `x`, one per period.
    pub x: Vec<f64>,
    pub k: f64,
    pub n_periods: u32,
}

impl RandomModel {
    pub fn path(&self, i: usize) -> String {
        format!("{INSTANCE}.{}", self.rows[i].label)
    }
}

fn small_value(rng: &mut StdRng) -> f64 {
    f64::from(rng.random_range(-20..=40)) / 2.0
}

struct FormulaGen<'a> {
    rows: &'a [GenRow],
    /// Index of the row being defined.
    here: usize,
    width: WidthClass,
}

impl FormulaGen<'_> {
    fn reference(&self, rng: &mut StdRng) -> Option<Expr> {
        let single = self.width == WidthClass::SingleColumn;
        let mut options: Vec<(usize, i32)> = Vec::new();
        for (j, r) in self.rows.iter().enumerate() {
            let r_single = r.width == WidthClass::SingleColumn;
            if j < self.here && (!single || r_single) {
                options.push((j, 0));
            }
            if !single && !r_single && (j < self.here || matches!(r.def, GenDef::Formula(_)) || j == self.here) {
                options.push((j, -rng.random_range(1..3)));
            }
        }
        if options.is_empty() {
            return None;
        }
        let (j, offset) = options[rng.random_range(0..options.len())];
        Some(Expr::Ref(RowRef { path: vec![self.rows[j].label.clone()], offset }))
    }

    fn leaf(&self, rng: &mut StdRng) -> Expr {
        let single = self.width == WidthClass::SingleColumn;
        match rng.random_range(0..10) {
            0 => Expr::Number(Decimal::from_u64(rng.random_range(0..4))),
            1 if !single => Expr::Builtin(pick(rng, &[Builtin::Period, Builtin::NPeriods])),
            _ => self.reference(rng).unwrap_or_else(|| Expr::Number(Decimal::from_u64(1))),
        }
    }

    fn number(&self, rng: &mut StdRng, depth: u32) -> Expr {
        if depth == 0 || rng.random_bool(0.3) {
            return self.leaf(rng);
        }
        let d = depth - 1;
        match rng.random_range(0..10) {
            0 => Expr::Neg(Box::new(self.number(rng, d))),
            1..=4 => Expr::binary(pick(rng, &ARITH), self.number(rng, d), self.number(rng, d)),
            5 => {
                let func = pick(rng, &[Func::Sum, Func::Min, Func::Max]);
                let n = rng.random_range(1..4);
                Expr::Call { func, args: (0..n).map(|_| self.number(rng, d)).collect() }
            }
            6 => Expr::Call { func: Func::Abs, args: vec![self.number(rng, d)] },
            7 => Expr::Call {
                func: Func::Round,
                args: vec![self.number(rng, d), Expr::Number(Decimal::from_u64(rng.random_range(0..3)))],
            },
            _ => Expr::Call { func: Func::If, args: vec![self.boolean(rng, d), self.number(rng, d), self.number(rng, d)] },
        }
    }

    fn boolean(&self, rng: &mut StdRng, depth: u32) -> Expr {
        let d = depth.saturating_sub(1);
        match rng.random_range(0..6) {
            0 if depth > 0 => {
                let func = pick(rng, &[Func::And, Func::Or]);
                Expr::Call { func, args: vec![self.boolean(rng, d), self.boolean(rng, d)] }
            }
            1 if depth > 0 => Expr::Call { func: Func::Not, args: vec![self.boolean(rng, d)] },
            2 => Expr::Bool(rng.random_bool(0.5)),
            _ => Expr::compare(pick(rng, &CMP), self.number(rng, d), self.number(rng, d)),
        }
    }
}

/// One component `Gen` with a series input row `X`, a scalar input row `K`
/// and `shape.formula_rows` random number rows, wired into a skeleton and
/// a model with a single scenario `Base`.
pub fn random_model(rng: &mut StdRng, shape: &Shape) -> RandomModel {
    let n = shape.n_periods.max(1);
    let mut rows = vec![
        GenRow { label: "X".into(), width: WidthClass::FullWidth, special: None, def: GenDef::Series },
        GenRow { label: "K".into(), width: WidthClass::SingleColumn, special: None, def: GenDef::Scalar },
    ];
    // Widths first, so prior-period references to later rows know their targets.
    for i in 0..shape.formula_rows {
        let roll = if shape.mixed_widths { rng.random_range(0..10) } else { 0 };
        let (width, special) = match roll {
            8 => {
                let start = rng.random_range(1..=n);
                let end = rng.random_range(start..=n);
                (WidthClass::Special, Some(SpecialRange { start_period: start, end_period: end }))
            }
            9 => (WidthClass::SingleColumn, None),
            _ => (WidthClass::FullWidth, None),
        };
        rows.push(GenRow { label: format!("R{}", i + 1), width, special, def: GenDef::Formula(Expr::Bool(false)) });
    }
    for i in 2..rows.len() {
        let g = FormulaGen { rows: &rows, here: i, width: rows[i].width };
        let e = g.number(rng, shape.max_depth);
        rows[i].def = GenDef::Formula(e);
    }

    let component = Component {
        name: "Gen".into(),
        ports: vec![
            Port { name: "x".into(), structure: Structure::Series },
            Port { name: "k".into(), structure: Structure::Scalar },
        ],
        rows: rows
            .iter()
            .map(|r| Row {
                label: r.label.clone(),
                kind: match &r.def {
                    GenDef::Series => RowKind::Input { port: "x".into() },
                    GenDef::Scalar => RowKind::Input { port: "k".into() },
                    GenDef::Formula(e) => RowKind::Formula { expr: e.clone() },
                },
                unit: None,
            })
            .collect(),
        embeds: vec![],
        outputs: vec![],
        doc: Documentation::default(),
    };
    let mut repo = MemoryRepo::new();
    let component_id = repo.insert(Element::Component(component));
    let skeleton = Skeleton {
        name: "gen_skeleton".into(),
        instances: vec![Instance { name: INSTANCE.into(), component: component_id }],
        wiring: BTreeMap::from([
            (format!("{INSTANCE}.x"), WireSource::Input("x".into())),
            (format!("{INSTANCE}.k"), WireSource::Input("k".into())),
        ]),
        data_inputs: vec![
            DataInput { name: "x".into(), structure: Structure::Series },
            DataInput { name: "k".into(), structure: Structure::Scalar },
        ],
        widths: rows.iter().map(|r| (format!("{INSTANCE}.{}", r.label), r.width)).collect(),
        checks: vec![CheckDef {
            name: "x_is_finite".into(),
            expr: Expr::compare(CmpOp::Eq, Expr::reference("g.X", 0), Expr::reference("g.X", 0)),
        }],
        doc: Documentation::default(),
    };
    let skeleton_id = repo.insert(Element::Skeleton(skeleton));
    let x: Vec<f64> = (0..n).map(|_| small_value(rng)).collect();
    let k = small_value(rng);
    let model = Model {
        name: "gen".into(),
        skeleton: skeleton_id,
        special_widths: rows
            .iter()
            .filter_map(|r| r.special.map(|s| (format!("{INSTANCE}.{}", r.label), s)))
            .collect(),
        formats: BTreeMap::new(),
        scenarios: vec![Scenario {
            name: "Base".into(),
            values: BTreeMap::from([
                ("x".to_string(), ScenarioValue::Series(x.clone())),
                ("k".to_string(), ScenarioValue::Constant(k)),
            ]),
        }],
        sheet_assignment: BTreeMap::new(),
        reports: vec![],
        charts: vec![],
        gen_params: GenParams {
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid"),
            periodicity: Periodicity::Monthly,
            n_periods: n,
        },
        doc: Documentation::default(),
    };
    let model_id = repo.insert(Element::Model(model));
    RandomModel { repo, model: model_id, rows, x, k, n_periods: n }
}

impl RandomModel {
    /// Whether row `i` holds a value in 1-based period `p`.
    pub fn active(&self, i: usize, p: u32) -> bool {
        match self.rows[i].special {
            Some(s) => (s.start_period..=s.end_period).contains(&p),
            None => true,
        }
    }

    /// Every row's values by recomputing all cells from the previous round's
    /// table until nothing changes, starting from all zeros. Works straight
    /// off the generated formulas, without assembly or layout. Index 0 holds
    /// the value of a single-column row; inactive special cells stay `Ok(0.0)`.
    pub fn brute_force(&self) -> Vec<Vec<OracleValue>> {
        Oracle::solve(self)
    }
}

/// A cell value as the brute-force oracle sees it.
pub type OracleValue = Result<f64, ErrorValue>;
type V = OracleValue;

fn fin(x: f64) -> V {
    if x.is_finite() { Ok(x) } else { Err(ErrorValue::Num) }
}

struct Oracle<'a> {
    m: &'a RandomModel,
    /// Current guess per row, per period (index 0 for single rows).
    table: Vec<Vec<V>>,
}

impl Oracle<'_> {
    fn row(&self, label: &str) -> usize {
        self.m.rows.iter().position(|r| r.label == label).unwrap()
    }

    fn active(&self, i: usize, p: u32) -> bool {
        self.m.active(i, p)
    }

    fn read(&self, i: usize, p: i64) -> V {
        if self.m.rows[i].width == WidthClass::SingleColumn {
            return self.table[i][0];
        }
        if p < 1 || !self.active(i, p as u32) {
            return Ok(0.0);
        }
        self.table[i][p as usize - 1]
    }

    fn truth(&self, e: &Expr, p: u32) -> Result<bool, ErrorValue> {
        match e {
            Expr::Bool(b) => Ok(*b),
            Expr::Compare { op, lhs, rhs } => {
                let (a, b) = (self.num(lhs, p)?, self.num(rhs, p)?);
                Ok(match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                })
            }
            Expr::Call { func: Func::Not, args } => Ok(!self.truth(&args[0], p)?),
            Expr::Call { func: Func::And, args } => {
                let v: Result<Vec<bool>, _> = args.iter().map(|a| self.truth(a, p)).collect();
                Ok(v?.into_iter().all(|b| b))
            }
            Expr::Call { func: Func::Or, args } => {
                let v: Result<Vec<bool>, _> = args.iter().map(|a| self.truth(a, p)).collect();
                Ok(v?.into_iter().any(|b| b))
            }
            other => panic!("not boolean: {other:?}"),
        }
    }

    fn num(&self, e: &Expr, p: u32) -> V {
        match e {
            Expr::Number(d) => Ok(d.as_str().parse().unwrap()),
            Expr::Builtin(Builtin::Period) => Ok(f64::from(p)),
            Expr::Builtin(Builtin::NPeriods) => Ok(f64::from(self.m.n_periods)),
            Expr::Ref(r) => self.read(self.row(&r.path[0]), i64::from(p) + i64::from(r.offset)),
            Expr::Neg(x) => fin(-self.num(x, p)?),
            Expr::Binary { op, lhs, rhs } => {
                let a = self.num(lhs, p);
                let b = self.num(rhs, p);
                let (a, b) = (a?, b?);
                match op {
                    ArithOp::Add => fin(a + b),
                    ArithOp::Sub => fin(a - b),
                    ArithOp::Mul => fin(a * b),
                    ArithOp::Div if b == 0.0 => Err(ErrorValue::Div0),
                    ArithOp::Div => fin(a / b),
                }
            }
            Expr::Call { func, args } => match func {
                Func::Sum | Func::Min | Func::Max => {
                    let xs: Result<Vec<f64>, _> = args.iter().map(|a| self.num(a, p)).collect();
                    let xs = xs?;
                    fin(match func {
                        Func::Sum => xs.iter().sum(),
                        Func::Min => xs.iter().fold(f64::INFINITY, |a, &b| a.min(b)),
                        _ => xs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
                    })
                }
                Func::Abs => fin(self.num(&args[0], p)?.abs()),
                Func::Round => {
                    let x = self.num(&args[0], p)?;
                    let digits = self.num(&args[1], p)? as i32;
                    let scale = 10f64.powi(digits);
                    let y = (x * scale).round() / scale;
                    fin(if y.is_finite() { y } else { x })
                }
                Func::If => {
                    if self.truth(&args[0], p)? {
                        self.num(&args[1], p)
                    } else {
                        self.num(&args[2], p)
                    }
                }
                other => panic!("not numeric: {other:?}"),
            },
            other => panic!("not numeric: {other:?}"),
        }
    }

    fn cell(&self, i: usize, p: u32) -> V {
        match &self.m.rows[i].def {
            GenDef::Series => Ok(self.m.x[p as usize - 1]),
            GenDef::Scalar => Ok(self.m.k),
            GenDef::Formula(e) => self.num(e, p),
        }
    }

    fn solve(m: &RandomModel) -> Vec<Vec<V>> {
        let n = m.n_periods as usize;
        let mut o = Oracle { m, table: m.rows.iter().map(|_| vec![Ok(0.0); n]).collect() };
        let mut rounds = 0;
        loop {
            let mut next = o.table.clone();
            for i in 0..m.rows.len() {
                if m.rows[i].width == WidthClass::SingleColumn {
                    next[i][0] = o.cell(i, 0);
                    continue;
                }
                for p in 1..=m.n_periods {
                    if o.active(i, p) {
                        next[i][p as usize - 1] = o.cell(i, p);
                    }
                }
            }
            let same = next.iter().zip(&o.table).all(|(a, b)| a.iter().zip(b).all(|(x, y)| same_value(x, y)));
            o.table = next;
            if same {
                return o.table;
            }
            rounds += 1;
            assert!(rounds <= m.rows.len() * n + 2, "no fixed point");
        }
    }
}

fn same_value(a: &V, b: &V) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y,
        (Err(x), Err(y)) => x == y,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::assemble_id;

    #[test]
    fn generated_models_assemble() {
        let mut r = rng(7);
        for _ in 0..200 {
            let m = random_model(&mut r, &Shape::default());
            if let Err(d) = assemble_id(&m.model, &m.repo) {
                panic!("{d:?}\n{:#?}", m.rows);
            }
        }
    }

    #[test]
    fn same_seed_same_model() {
        let a = random_model(&mut rng(3), &Shape::default());
        let b = random_model(&mut rng(3), &Shape::default());
        assert_eq!(a.model, b.model);
    }
}
