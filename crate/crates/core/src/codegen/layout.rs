//! Placement of an assembled model onto sheets.

use std::collections::HashMap;

use chrono::{DateTime, SecondsFormat, Utc};

use super::dates::period_dates;
use super::ir::*;
use crate::assemble::{AssembledModel, FlatKind, FlatRow};
use crate::expr::{Builtin, RExpr, ValueType};
use crate::model::{ReportItem, ScenarioValue, Structure, WidthClass};

pub const TITLE_ROW: u32 = 1;
pub const DATE_ROW: u32 = 2;
pub const FIRST_CONTENT_ROW: u32 = 4;
pub const LABEL_COL: u32 = 1;
pub const SINGLE_COL: u32 = 2;
pub const FIRST_PERIOD_COL: u32 = 3;
pub const DATE_FORMAT: &str = "yyyy-mm-dd";

pub const INPUTS_SHEET: &str = "Inputs";
pub const CHECKS_SHEET: &str = "Checks";
pub const META_SHEET: &str = "Meta";
/// Row of the ActiveScenario cell on Inputs and of AllChecks on Checks.
pub const SELECTOR_ROW: u32 = 3;

pub const TOOL_VERSION: &str = concat!("ringforge ", env!("CARGO_PKG_VERSION"));

/// Name of the data sheet generated for a chart.
pub fn chart_sheet_name(chart: &str) -> String {
    format!("{chart} data")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub sheet: String,
    pub row: u32,
}

/// Where every flat row and every active input row sits.
pub struct GridContext<'a> {
    pub rows: &'a [FlatRow],
    /// Per flat row; `None` for rows not placed.
    pub placement: &'a [Option<Placement>],
    /// Inputs-sheet row of each data input's Active row.
    pub active_rows: &'a [u32],
    pub n_periods: u32,
}

fn last_period_col(n: u32) -> u32 {
    FIRST_PERIOD_COL + n - 1
}

impl GridContext<'_> {
    fn qualifier<'s>(&self, sheet: &'s str, host: &str) -> Option<&'s str> {
        (sheet != host).then_some(sheet)
    }

    /// The cell formula for `e` in column `col` of `host`.
    pub fn translate(&self, e: &RExpr, host: &str, col: u32) -> CellExpr {
        let sub = |x: &RExpr| self.translate(x, host, col);
        match e {
            RExpr::Number(v) => CellExpr::Number(*v),
            RExpr::Bool(b) => CellExpr::Bool(*b),
            RExpr::Builtin(Builtin::Period) => CellExpr::binary(
                crate::expr::ArithOp::Sub,
                CellExpr::call("COLUMN", vec![]),
                CellExpr::Number(f64::from(FIRST_PERIOD_COL - 1)),
            ),
            RExpr::Builtin(Builtin::NPeriods) => CellExpr::call(
                "COLUMNS",
                vec![CellExpr::Range(
                    CellRef::absolute(None, DATE_ROW, FIRST_PERIOD_COL),
                    CellRef::absolute(None, DATE_ROW, last_period_col(self.n_periods)),
                )],
            ),
            RExpr::Neg(x) => CellExpr::Neg(Box::new(sub(x))),
            RExpr::Binary { op, lhs, rhs } => CellExpr::binary(*op, sub(lhs), sub(rhs)),
            RExpr::Compare { op, lhs, rhs } => CellExpr::compare(*op, sub(lhs), sub(rhs)),
            RExpr::Call { func, args } => CellExpr::call(func.name(), args.iter().map(sub).collect()),
            RExpr::Ref(r) => {
                let p = self.placement[r.target].as_ref().expect("referenced rows are placed");
                let sheet = self.qualifier(&p.sheet, host);
                if r.width == WidthClass::SingleColumn {
                    return CellExpr::Ref(CellRef {
                        sheet: sheet.map(str::to_string),
                        row: p.row,
                        col: SINGLE_COL,
                        abs_row: false,
                        abs_col: true,
                    });
                }
                let target = i64::from(col) + i64::from(r.offset);
                if target < i64::from(FIRST_PERIOD_COL) {
                    CellExpr::Guard {
                        sheet: sheet.map(str::to_string),
                        row: p.row,
                        col_offset: r.offset,
                        boolean: r.ty == ValueType::Boolean,
                    }
                } else {
                    CellExpr::Ref(CellRef::relative(p.row, target as u32).on(sheet))
                }
            }
        }
    }

    /// Columns a row occupies: the single-column slot, or its active periods.
    pub fn columns(&self, row: &FlatRow) -> Vec<u32> {
        match row.width {
            WidthClass::SingleColumn => vec![SINGLE_COL],
            _ => (1..=self.n_periods)
                .filter(|&p| row.active_in(p))
                .map(|p| FIRST_PERIOD_COL + p - 1)
                .collect(),
        }
    }
}

/// The formulas of flat row `index`, by column.
pub fn instantiate_row(ctx: &GridContext, index: usize) -> Vec<(u32, CellExpr)> {
    let row = &ctx.rows[index];
    let host = &ctx.placement[index].as_ref().expect("row is placed").sheet;
    ctx.columns(row)
        .into_iter()
        .filter_map(|col| {
            let e = match &row.kind {
                FlatKind::Formula { expr, .. } => ctx.translate(&expr.root, host, col),
                FlatKind::Landing { input } => {
                    let active = ctx.active_rows[*input];
                    let r = if col == SINGLE_COL {
                        CellRef { sheet: None, row: active, col, abs_row: false, abs_col: true }
                    } else {
                        CellRef::relative(active, col)
                    };
                    CellExpr::Ref(r.on(Some(INPUTS_SHEET)))
                }
                FlatKind::Heading | FlatKind::Blank => return None,
            };
            Some((col, e))
        })
        .collect()
}

/// Generation metadata recorded on the Meta sheet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationInfo {
    pub tool_version: String,
    pub generated_at: DateTime<Utc>,
}

impl GenerationInfo {
    pub fn at(generated_at: DateTime<Utc>) -> GenerationInfo {
        GenerationInfo { tool_version: TOOL_VERSION.to_string(), generated_at }
    }
}

fn title_and_dates(sheet: &mut Sheet, title: &str, a: &AssembledModel) {
    sheet.set(TITLE_ROW, LABEL_COL, Cell::text(title));
    sheet.set(DATE_ROW, LABEL_COL, Cell::text("Period start"));
    for (i, d) in period_dates(&a.gen_params).into_iter().enumerate() {
        sheet.set(
            DATE_ROW,
            FIRST_PERIOD_COL + i as u32,
            Cell::literal(Literal::Date(d)).with_format(Some(DATE_FORMAT.into())),
        );
    }
}

fn period_range(row: u32, n: u32) -> CellExpr {
    CellExpr::Range(CellRef::relative(row, FIRST_PERIOD_COL), CellRef::relative(row, last_period_col(n)))
}

type HeadingRow = (String, u32, String);

fn place_rows(a: &AssembledModel) -> (Vec<Option<Placement>>, Vec<HeadingRow>) {
    let mut placement: Vec<Option<Placement>> = vec![None; a.rows.len()];
    let mut next_row: HashMap<&str, u32> = HashMap::new();
    let mut heading_rows = Vec::new();
    for inst in &a.instances {
        let Some(first) = a.rows.get(inst.rows.start) else { continue };
        let sheet = first.sheet.as_str();
        let r = next_row.entry(sheet).or_insert(FIRST_CONTENT_ROW);
        heading_rows.push((sheet.to_string(), *r, format!("{} ({})", inst.name, inst.component_name)));
        *r += 1;
        for i in inst.rows.clone() {
            placement[i] = Some(Placement { sheet: sheet.to_string(), row: *r });
            *r += 1;
        }
    }
    (placement, heading_rows)
}

/// Sheet and row of every flat row, below one heading row per instance.
pub fn placements(a: &AssembledModel) -> Vec<Option<Placement>> {
    place_rows(a).0
}

/// Lays `a` out as a workbook: Inputs, calculation sheets, Checks, reports,
/// chart data and Meta, in that order.
pub fn layout(a: &AssembledModel, info: &GenerationInfo) -> WorkbookIR {
    let n = a.n_periods();
    let (inputs, active_rows) = build_inputs_sheet(a);

    let (placement, heading_rows) = place_rows(a);
    let ctx = GridContext { rows: &a.rows, placement: &placement, active_rows: &active_rows, n_periods: n };

    let mut sheets = vec![inputs];
    for name in &a.calc_sheets {
        let mut sheet = Sheet::new(name.clone(), SheetRole::Calculation);
        title_and_dates(&mut sheet, name, a);
        for (s, row, text) in &heading_rows {
            if s == name {
                sheet.set(*row, LABEL_COL, Cell::text(text.clone()));
            }
        }
        for (i, row) in a.rows.iter().enumerate() {
            let Some(p) = placement[i].as_ref().filter(|p| &p.sheet == name) else { continue };
            let inst_prefix = format!("{}.", row.instance);
            let label = row.path.strip_prefix(&inst_prefix).unwrap_or(&row.path);
            sheet.set(p.row, LABEL_COL, Cell::text(label));
            sheet.row_levels.insert(p.row, row.depth);
            for (col, e) in instantiate_row(&ctx, i) {
                sheet.set(p.row, col, Cell::formula(e).with_format(row.format.clone()));
            }
        }
        sheets.push(sheet);
    }
    sheets.push(build_checks_sheet(a, &ctx));
    let (reports, charts) = build_outputs(a, &ctx);
    sheets.extend(reports);
    sheets.extend(charts);
    let mut ir = WorkbookIR {
        sheets,
        names: vec![
            DefinedName { name: "ActiveScenario".into(), sheet: INPUTS_SHEET.into(), row: SELECTOR_ROW, col: SINGLE_COL },
            DefinedName { name: "AllChecks".into(), sheet: CHECKS_SHEET.into(), row: SELECTOR_ROW, col: SINGLE_COL },
        ],
        scenario_names: a.scenarios.iter().map(|s| s.name.clone()).collect(),
        timestamp_cell: None,
    };
    build_meta_sheet(a, info, &mut ir);
    ir
}

/// Scenario blocks per data input and the ActiveScenario selector. Returns
/// the sheet and the Active row of each input.
pub fn build_inputs_sheet(a: &AssembledModel) -> (Sheet, Vec<u32>) {
    let n = a.n_periods();
    let mut sheet = Sheet::new(INPUTS_SHEET, SheetRole::Inputs);
    title_and_dates(&mut sheet, INPUTS_SHEET, a);
    sheet.set(SELECTOR_ROW, LABEL_COL, Cell::text("Active scenario"));
    sheet.set(SELECTOR_ROW, SINGLE_COL, Cell::number(1.0));
    let mut row = SELECTOR_ROW + 1;
    for (i, sc) in a.scenarios.iter().enumerate() {
        sheet.set(row, LABEL_COL, Cell::text(format!("Scenario {}", i + 1)));
        sheet.set(row, SINGLE_COL, Cell::text(sc.name.clone()));
        row += 1;
    }
    let mut active_rows = Vec::new();
    for input in &a.data_inputs {
        row += 1;
        let first = row;
        let format = a.rows[input.landing].format.clone();
        let cols: Vec<u32> = match input.structure {
            Structure::Scalar => vec![SINGLE_COL],
            Structure::Series => (0..n).map(|p| FIRST_PERIOD_COL + p).collect(),
        };
        for sc in &a.scenarios {
            sheet.set(row, LABEL_COL, Cell::text(format!("{}: {}", input.name, sc.name)));
            let values: Vec<Option<f64>> = match sc.values.get(&input.name) {
                Some(ScenarioValue::Constant(v)) => vec![Some(*v); cols.len()],
                Some(ScenarioValue::Series(vs)) => (0..cols.len()).map(|i| vs.get(i).copied()).collect(),
                None => vec![None; cols.len()],
            };
            for (col, v) in cols.iter().zip(values) {
                if let Some(v) = v {
                    sheet.set(row, *col, Cell::number(v).with_format(format.clone()));
                }
            }
            row += 1;
        }
        sheet.set(row, LABEL_COL, Cell::text(format!("{}: Active", input.name)));
        for &col in &cols {
            let range = CellExpr::Range(CellRef::relative(first, col), CellRef::relative(row - 1, col));
            sheet.set(
                row,
                col,
                Cell::formula(CellExpr::call("INDEX", vec![range, CellExpr::Name("ActiveScenario".into())]))
                    .with_format(format.clone()),
            );
        }
        active_rows.push(row);
        row += 1;
    }
    (sheet, active_rows)
}

/// One row per check with a per-period result and an aggregate, plus AllChecks.
pub fn build_checks_sheet(a: &AssembledModel, ctx: &GridContext) -> Sheet {
    let n = a.n_periods();
    let mut sheet = Sheet::new(CHECKS_SHEET, SheetRole::Checks);
    title_and_dates(&mut sheet, CHECKS_SHEET, a);
    sheet.set(SELECTOR_ROW, LABEL_COL, Cell::text("All checks"));
    let first = SELECTOR_ROW + 2;
    for (i, chk) in a.checks.iter().enumerate() {
        let row = first + i as u32;
        sheet.set(row, LABEL_COL, Cell::text(chk.name.clone()));
        for p in 0..n {
            let col = FIRST_PERIOD_COL + p;
            sheet.set(row, col, Cell::formula(ctx.translate(&chk.expr.root, CHECKS_SHEET, col)));
        }
        sheet.set(row, SINGLE_COL, Cell::formula(CellExpr::call("AND", vec![period_range(row, n)])));
    }
    let all = if a.checks.is_empty() {
        Cell::literal(Literal::Bool(true))
    } else {
        let last = first + a.checks.len() as u32 - 1;
        Cell::formula(CellExpr::call(
            "AND",
            vec![CellExpr::Range(CellRef::relative(first, SINGLE_COL), CellRef::relative(last, SINGLE_COL))],
        ))
    };
    sheet.set(SELECTOR_ROW, SINGLE_COL, all);
    sheet
}

/// References to a flat row's cells from another sheet, by column.
fn mirror_row(ctx: &GridContext, index: usize, host: &str) -> Vec<(u32, CellExpr)> {
    let row = &ctx.rows[index];
    let p = ctx.placement[index].as_ref().expect("row is placed");
    let sheet = ctx.qualifier(&p.sheet, host);
    ctx.columns(row)
        .into_iter()
        .map(|col| (col, CellExpr::Ref(CellRef::relative(p.row, col).on(sheet))))
        .collect()
}

/// Report sheets and chart data sheets.
pub fn build_outputs(a: &AssembledModel, ctx: &GridContext) -> (Vec<Sheet>, Vec<Sheet>) {
    let index = |path: &str| a.row_index(path).expect("report paths resolve");
    let mut reports = Vec::new();
    for r in &a.reports {
        let mut sheet = Sheet::new(r.name.clone(), SheetRole::Report);
        title_and_dates(&mut sheet, &r.name, a);
        for (j, item) in r.items.iter().enumerate() {
            let row = FIRST_CONTENT_ROW + j as u32;
            match item {
                ReportItem::Heading(text) => sheet.set(row, LABEL_COL, Cell::text(text.clone())),
                ReportItem::Row(path) => {
                    let i = index(path);
                    sheet.set(row, LABEL_COL, Cell::text(path.clone()));
                    for (col, e) in mirror_row(ctx, i, &r.name) {
                        sheet.set(row, col, Cell::formula(e).with_format(a.rows[i].format.clone()));
                    }
                }
            }
        }
        reports.push(sheet);
    }
    let mut charts = Vec::new();
    for ch in &a.charts {
        let name = chart_sheet_name(&ch.name);
        let mut sheet = Sheet::new(name.clone(), SheetRole::ChartData);
        title_and_dates(&mut sheet, &ch.name, a);
        for (j, path) in ch.series.iter().enumerate() {
            let row = FIRST_CONTENT_ROW + j as u32;
            let i = index(path);
            sheet.set(row, LABEL_COL, Cell::text(path.clone()));
            for (col, e) in mirror_row(ctx, i, &name) {
                sheet.set(row, col, Cell::formula(e).with_format(a.rows[i].format.clone()));
            }
        }
        charts.push(sheet);
    }
    (reports, charts)
}

/// Provenance, per-sheet cell counts with live COUNTA cross-checks, the
/// Clean indicator and the chart manifest. Appended to `ir` last so the
/// counts cover every other sheet.
pub fn build_meta_sheet(a: &AssembledModel, info: &GenerationInfo, ir: &mut WorkbookIR) {
    let mut sheet = Sheet::new(META_SHEET, SheetRole::Meta);
    sheet.set(TITLE_ROW, LABEL_COL, Cell::text(META_SHEET));
    let mut row = SELECTOR_ROW;
    let line = |sheet: &mut Sheet, row: &mut u32, cells: &[&str]| {
        for (i, text) in cells.iter().enumerate() {
            sheet.set(*row, LABEL_COL + i as u32, Cell::text(*text));
        }
        *row += 1;
    };
    let model_id = a.model_id.as_ref().map(|id| id.as_str()).unwrap_or("unsaved");
    line(&mut sheet, &mut row, &["Model", &a.name, model_id]);
    line(&mut sheet, &mut row, &["Skeleton", &a.skeleton_name, a.skeleton_id.as_str()]);
    for inst in &a.instances {
        line(&mut sheet, &mut row, &["Instance", &inst.name, &inst.component_name, inst.component.as_str()]);
    }
    let mut seen: Vec<&str> = a.instances.iter().map(|i| i.component.as_str()).collect();
    for r in &a.rows {
        if !seen.contains(&r.source.as_str()) {
            seen.push(r.source.as_str());
            line(&mut sheet, &mut row, &["Embedded", &r.component, r.source.as_str()]);
        }
    }
    line(&mut sheet, &mut row, &["Tool version", &info.tool_version]);
    let stamp = info.generated_at.to_rfc3339_opts(SecondsFormat::Secs, true);
    line(&mut sheet, &mut row, &["Generated", &stamp]);
    ir.timestamp_cell = Some((META_SHEET.to_string(), row - 1, SINGLE_COL));

    row += 1;
    line(&mut sheet, &mut row, &["Sheet", "Stored cells", "Live cells", "Match"]);
    let first = row;
    for s in &ir.sheets {
        let (max_row, max_col) = s.extent();
        sheet.set(row, LABEL_COL, Cell::text(s.name.clone()));
        sheet.set(row, 2, Cell::number(s.cells.len() as f64));
        let used = CellExpr::Range(
            CellRef::absolute(Some(&s.name), 1, 1),
            CellRef::absolute(None, max_row, max_col),
        );
        sheet.set(row, 3, Cell::formula(CellExpr::call("COUNTA", vec![used])));
        sheet.set(
            row,
            4,
            Cell::formula(CellExpr::compare(
                crate::expr::CmpOp::Eq,
                CellExpr::Ref(CellRef::relative(row, 2)),
                CellExpr::Ref(CellRef::relative(row, 3)),
            )),
        );
        row += 1;
    }
    let last = row - 1;
    sheet.set(row, LABEL_COL, Cell::text("Clean"));
    sheet.set(
        row,
        SINGLE_COL,
        Cell::formula(CellExpr::call(
            "AND",
            vec![CellExpr::Range(CellRef::relative(first, 4), CellRef::relative(last, 4))],
        )),
    );
    ir.names.push(DefinedName { name: "Clean".into(), sheet: META_SHEET.into(), row, col: SINGLE_COL });
    row += 2;
    if !a.charts.is_empty() {
        line(&mut sheet, &mut row, &["Chart", "Kind", "Data sheet", "Series"]);
        for ch in &a.charts {
            let kind = match ch.kind {
                crate::model::ChartKind::Line => "line",
                crate::model::ChartKind::Bar => "bar",
            };
            let series = ch.series.join(", ");
            line(&mut sheet, &mut row, &[&ch.name, kind, &chart_sheet_name(&ch.name), &series]);
        }
    }
    ir.sheets.push(sheet);
}
