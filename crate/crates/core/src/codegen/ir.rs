//! Workbook intermediate representation and A1 / R1C1 rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::Serialize;

use crate::expr::{ArithOp, CmpOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SheetRole {
    Inputs,
    Calculation,
    Checks,
    Report,
    ChartData,
    Meta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
    Bool(bool),
    Date(NaiveDate),
}

/// A cell reference; `sheet` is `None` for the host sheet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRef {
    pub sheet: Option<String>,
    pub row: u32,
    pub col: u32,
    pub abs_row: bool,
    pub abs_col: bool,
}

impl CellRef {
    pub fn relative(row: u32, col: u32) -> CellRef {
        CellRef { sheet: None, row, col, abs_row: false, abs_col: false }
    }

    pub fn absolute(sheet: Option<&str>, row: u32, col: u32) -> CellRef {
        CellRef { sheet: sheet.map(str::to_string), row, col, abs_row: true, abs_col: true }
    }

    pub fn on(mut self, sheet: Option<&str>) -> CellRef {
        self.sheet = sheet.map(str::to_string);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellExpr {
    Number(f64),
    Bool(bool),
    Text(String),
    Ref(CellRef),
    /// `start:end`; the sheet of `start` applies to both.
    Range(CellRef, CellRef),
    Name(String),
    /// A reference that would fall left of the first period column, emitted
    /// as the neutral literal `0` (or `FALSE`) but standing for the
    /// relative reference it replaces when comparing formulas across a row.
    Guard { sheet: Option<String>, row: u32, col_offset: i32, boolean: bool },
    Neg(Box<CellExpr>),
    Binary { op: ArithOp, lhs: Box<CellExpr>, rhs: Box<CellExpr> },
    Compare { op: CmpOp, lhs: Box<CellExpr>, rhs: Box<CellExpr> },
    Call { name: String, args: Vec<CellExpr> },
}

impl CellExpr {
    pub fn call(name: &str, args: Vec<CellExpr>) -> CellExpr {
        CellExpr::Call { name: name.to_string(), args }
    }

    pub fn binary(op: ArithOp, lhs: CellExpr, rhs: CellExpr) -> CellExpr {
        CellExpr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn compare(op: CmpOp, lhs: CellExpr, rhs: CellExpr) -> CellExpr {
        CellExpr::Compare { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    fn precedence(&self) -> u8 {
        match self {
            CellExpr::Compare { .. } => 1,
            CellExpr::Binary { op: ArithOp::Add | ArithOp::Sub, .. } => 2,
            CellExpr::Binary { .. } => 3,
            CellExpr::Neg(_) => 4,
            _ => 5,
        }
    }

    /// Every cell reference, with ranges expanded to their two corners.
    pub fn refs(&self) -> Vec<&CellRef> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a CellRef>) {
        match self {
            CellExpr::Ref(r) => out.push(r),
            CellExpr::Range(a, b) => {
                out.push(a);
                out.push(b);
            }
            CellExpr::Neg(x) => x.collect(out),
            CellExpr::Binary { lhs, rhs, .. } | CellExpr::Compare { lhs, rhs, .. } => {
                lhs.collect(out);
                rhs.collect(out);
            }
            CellExpr::Call { args, .. } => args.iter().for_each(|a| a.collect(out)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    Literal(Literal),
    Formula(CellExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub content: CellContent,
    pub format: Option<String>,
}

impl Cell {
    pub fn literal(l: Literal) -> Cell {
        Cell { content: CellContent::Literal(l), format: None }
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::literal(Literal::Text(s.into()))
    }

    pub fn number(v: f64) -> Cell {
        Cell::literal(Literal::Number(v))
    }

    pub fn formula(e: CellExpr) -> Cell {
        Cell { content: CellContent::Formula(e), format: None }
    }

    pub fn with_format(mut self, format: Option<String>) -> Cell {
        self.format = format;
        self
    }

    pub fn is_formula(&self) -> bool {
        matches!(self.content, CellContent::Formula(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sheet {
    pub name: String,
    pub role: SheetRole,
    /// (row, col), both 1-based.
    pub cells: BTreeMap<(u32, u32), Cell>,
    /// Outline level per row; rows absent are level 0.
    pub row_levels: BTreeMap<u32, u8>,
}

impl Sheet {
    pub fn new(name: impl Into<String>, role: SheetRole) -> Sheet {
        Sheet { name: name.into(), role, cells: BTreeMap::new(), row_levels: BTreeMap::new() }
    }

    pub fn set(&mut self, row: u32, col: u32, cell: Cell) {
        self.cells.insert((row, col), cell);
    }

    pub fn get(&self, row: u32, col: u32) -> Option<&Cell> {
        self.cells.get(&(row, col))
    }

    /// Bottom-right corner of the populated area, or (1, 1) when empty.
    pub fn extent(&self) -> (u32, u32) {
        self.cells
            .keys()
            .fold((1, 1), |(r, c), &(row, col)| (r.max(row), c.max(col)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefinedName {
    pub name: String,
    pub sheet: String,
    pub row: u32,
    pub col: u32,
}

impl DefinedName {
    /// `Sheet!$B$3`.
    pub fn target(&self) -> String {
        format!("{}!{}", quote_sheet(&self.sheet), a1_ref(&CellRef::absolute(None, self.row, self.col)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkbookIR {
    pub sheets: Vec<Sheet>,
    pub names: Vec<DefinedName>,
    pub scenario_names: Vec<String>,
    /// Meta cell holding the generation timestamp; left out of the canonical grid.
    pub timestamp_cell: Option<(String, u32, u32)>,
}

impl WorkbookIR {
    pub fn sheet(&self, name: &str) -> Option<&Sheet> {
        self.sheets.iter().find(|s| s.name == name)
    }

    pub fn sheet_mut(&mut self, name: &str) -> Option<&mut Sheet> {
        self.sheets.iter_mut().find(|s| s.name == name)
    }

    pub fn name(&self, name: &str) -> Option<&DefinedName> {
        self.names.iter().find(|n| n.name == name)
    }
}

/// 1 → `A`, 27 → `AA`.
pub fn col_letters(mut col: u32) -> String {
    let mut out = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        out.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// `A` → 1, `AA` → 27.
pub fn col_number(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    letters.bytes().try_fold(0u32, |acc, b| {
        b.is_ascii_uppercase().then(|| acc * 26 + u32::from(b - b'A' + 1))
    })
}

pub fn a1(row: u32, col: u32) -> String {
    format!("{}{row}", col_letters(col))
}

fn looks_like_cell(name: &str) -> bool {
    let upper = name.to_ascii_uppercase();
    let letters: String = upper.chars().take_while(char::is_ascii_alphabetic).collect();
    let rest = &upper[letters.len()..];
    (!letters.is_empty() && !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
        || upper.starts_with('R') && upper[1..].contains('C') && upper[1..].chars().all(|c| c.is_ascii_digit() || c == 'C')
}

/// Sheet name as it appears before `!`, quoted when needed.
pub fn quote_sheet(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !looks_like_cell(name)
        && !matches!(name.to_ascii_uppercase().as_str(), "TRUE" | "FALSE");
    if plain {
        name.to_string()
    } else {
        format!("'{}'", name.replace('\'', "''"))
    }
}

fn a1_ref(r: &CellRef) -> String {
    format!(
        "{}{}{}{}",
        if r.abs_col { "$" } else { "" },
        col_letters(r.col),
        if r.abs_row { "$" } else { "" },
        r.row
    )
}

fn sheet_prefix(sheet: &Option<String>) -> String {
    sheet.as_ref().map(|s| format!("{}!", quote_sheet(s))).unwrap_or_default()
}

/// Shortest decimal text that reads back to the same double.
pub fn number_text(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[derive(Clone, Copy)]
enum Style {
    A1,
    R1C1 { row: u32, col: u32 },
}

fn render(e: &CellExpr, style: Style, out: &mut String) {
    let child = |x: &CellExpr, min: u8, out: &mut String| {
        if x.precedence() < min {
            out.push('(');
            render(x, style, out);
            out.push(')');
        } else {
            render(x, style, out);
        }
    };
    let reference = |r: &CellRef, out: &mut String| {
        out.push_str(&sheet_prefix(&r.sheet));
        match style {
            Style::A1 => out.push_str(&a1_ref(r)),
            Style::R1C1 { row, col } => {
                let part = |abs: bool, at: u32, here: u32, tag: char| {
                    if abs {
                        format!("{tag}{at}")
                    } else {
                        format!("{tag}[{}]", i64::from(at) - i64::from(here))
                    }
                };
                out.push_str(&part(r.abs_row, r.row, row, 'R'));
                out.push_str(&part(r.abs_col, r.col, col, 'C'));
            }
        }
    };
    match e {
        CellExpr::Number(v) => out.push_str(&number_text(*v)),
        CellExpr::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        CellExpr::Text(s) => {
            let _ = write!(out, "\"{}\"", s.replace('"', "\"\""));
        }
        CellExpr::Ref(r) => reference(r, out),
        CellExpr::Range(a, b) => {
            reference(a, out);
            out.push(':');
            reference(&CellRef { sheet: None, ..b.clone() }, out);
        }
        CellExpr::Name(n) => out.push_str(n),
        CellExpr::Guard { sheet, row: target, col_offset, boolean } => match style {
            Style::A1 => out.push_str(if *boolean { "FALSE" } else { "0" }),
            Style::R1C1 { row, .. } => {
                let _ = write!(out, "{}R[{}]C[{col_offset}]", sheet_prefix(sheet), i64::from(*target) - i64::from(row));
            }
        },
        CellExpr::Neg(x) => {
            out.push('-');
            child(x, 4, out);
        }
        CellExpr::Binary { op, lhs, rhs } => {
            let p = e.precedence();
            child(lhs, p, out);
            out.push_str(op.symbol());
            child(rhs, p + 1, out);
        }
        CellExpr::Compare { op, lhs, rhs } => {
            child(lhs, 2, out);
            out.push_str(op.symbol());
            child(rhs, 2, out);
        }
        CellExpr::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(a, style, out);
            }
            out.push(')');
        }
    }
}

/// Formula text without the leading `=`.
pub fn render_a1(e: &CellExpr) -> String {
    let mut out = String::new();
    render(e, Style::A1, &mut out);
    out
}

/// R1C1 text relative to the host cell; guards show the reference they stand for.
pub fn render_r1c1(e: &CellExpr, row: u32, col: u32) -> String {
    let mut out = String::new();
    render(e, Style::R1C1 { row, col }, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_letters_round_trip() {
        for (n, s) in [(1, "A"), (2, "B"), (26, "Z"), (27, "AA"), (52, "AZ"), (703, "AAA"), (16384, "XFD")] {
            assert_eq!(col_letters(n), s);
            assert_eq!(col_number(s), Some(n));
        }
    }

    #[test]
    fn sheet_quoting() {
        assert_eq!(quote_sheet("Workings"), "Workings");
        assert_eq!(quote_sheet("Revenue data"), "'Revenue data'");
        assert_eq!(quote_sheet("AB12"), "'AB12'");
        assert_eq!(quote_sheet("R1C1"), "'R1C1'");
        assert_eq!(quote_sheet("Bob's"), "'Bob''s'");
    }

    #[test]
    fn renders_with_minimal_parens() {
        let r = |row, col| CellExpr::Ref(CellRef::relative(row, col));
        let e = CellExpr::binary(
            ArithOp::Mul,
            CellExpr::binary(ArithOp::Add, r(5, 3), r(6, 3)),
            CellExpr::Neg(Box::new(r(7, 3))),
        );
        assert_eq!(render_a1(&e), "(C5+C6)*-C7");
        assert_eq!(render_r1c1(&e, 8, 4), "(R[-3]C[-1]+R[-2]C[-1])*-R[-1]C[-1]");
        let sub = CellExpr::binary(ArithOp::Sub, r(1, 1), CellExpr::binary(ArithOp::Sub, r(2, 1), r(3, 1)));
        assert_eq!(render_a1(&sub), "A1-(A2-A3)");
    }

    #[test]
    fn guard_renders_zero_but_normalizes_to_its_target() {
        let g = CellExpr::Guard { sheet: None, row: 10, col_offset: -1, boolean: false };
        assert_eq!(render_a1(&g), "0");
        assert_eq!(render_r1c1(&g, 9, 3), "R[1]C[-1]");
        assert_eq!(render_r1c1(&CellExpr::Ref(CellRef::relative(10, 3)), 9, 4), "R[1]C[-1]");
    }

    #[test]
    fn cross_sheet_and_absolute() {
        let r = CellRef { sheet: Some("Revenue data".into()), row: 7, col: 2, abs_row: false, abs_col: true };
        assert_eq!(render_a1(&CellExpr::Ref(r)), "'Revenue data'!$B7");
        let range = CellExpr::Range(CellRef::absolute(None, 2, 3), CellRef::absolute(None, 2, 5));
        assert_eq!(render_a1(&CellExpr::call("COLUMNS", vec![range])), "COLUMNS($C$2:$E$2)");
    }

    #[test]
    fn number_text_is_exact() {
        assert_eq!(number_text(1000.0), "1000");
        assert_eq!(number_text(1.07), "1.07");
        assert_eq!(number_text(0.1 + 0.2).parse::<f64>().unwrap(), 0.1 + 0.2);
    }
}
