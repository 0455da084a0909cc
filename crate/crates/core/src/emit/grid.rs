//! Canonical JSON rendering of a workbook, used for golden files and diffs.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::codegen::{a1, number_text, quote_sheet, render_a1, CellContent, Literal, Sheet, WorkbookIR};

pub const GRID_FORMAT_VERSION: u32 = 1;

/// Cells in sheet order, then row, then column. Serialized as a JSON object
/// whose key order is the iteration order.
struct Cells<'a>(&'a WorkbookIR);

impl Serialize for Cells<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let ir = self.0;
        let mut map = s.serialize_map(None)?;
        for sheet in &ir.sheets {
            for (&(r, c), cell) in &sheet.cells {
                if ir.timestamp_cell.as_ref().is_some_and(|(ts, tr, tc)| *ts == sheet.name && *tr == r && *tc == c) {
                    continue;
                }
                let mut rec = serde_json::Map::new();
                match &cell.content {
                    CellContent::Formula(e) => {
                        rec.insert("f".into(), Json::String(format!("={}", render_a1(e))));
                    }
                    CellContent::Literal(Literal::Number(v)) => {
                        rec.insert("v".into(), number_json(*v));
                    }
                    CellContent::Literal(Literal::Text(t)) => {
                        rec.insert("v".into(), Json::String(t.clone()));
                    }
                    CellContent::Literal(Literal::Bool(b)) => {
                        rec.insert("v".into(), Json::Bool(*b));
                    }
                    CellContent::Literal(Literal::Date(d)) => {
                        rec.insert("date".into(), Json::String(d.to_string()));
                    }
                }
                if let Some(f) = &cell.format {
                    rec.insert("fmt".into(), Json::String(f.clone()));
                }
                map.serialize_entry(&format!("{}!{}", quote_sheet(&sheet.name), a1(r, c)), &rec)?;
            }
        }
        map.end()
    }
}

/// Integers print without a fraction so the file reads the same everywhere.
fn number_json(v: f64) -> Json {
    let text = number_text(v);
    serde_json::from_str(&text).unwrap_or_else(|_| Json::String(text))
}

fn sheet_entry(s: &Sheet) -> Json {
    let outline: Vec<Json> = s.row_levels.iter().map(|(r, l)| json!([r, l])).collect();
    json!({ "name": s.name, "role": s.role, "outline": outline })
}

/// Deterministic bytes, ending in a newline; the generation timestamp is left out.
pub fn canonical_grid(ir: &WorkbookIR) -> Vec<u8> {
    #[derive(Serialize)]
    struct Grid<'a> {
        format_version: u32,
        sheets: Vec<Json>,
        names: Vec<Json>,
        scenarios: &'a [String],
        cells: Cells<'a>,
    }
    let grid = Grid {
        format_version: GRID_FORMAT_VERSION,
        sheets: ir.sheets.iter().map(sheet_entry).collect(),
        names: ir.names.iter().map(|n| json!({ "name": n.name, "ref": n.target() })).collect(),
        scenarios: &ir.scenario_names,
        cells: Cells(ir),
    };
    let mut out = serde_json::to_vec_pretty(&grid).expect("grid serializes");
    out.push(b'\n');
    out
}
