//! SpreadsheetML writer and a reader for the subset it writes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, Timelike, Utc};
use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use crate::codegen::{
    a1, col_number, from_serial, number_text, render_a1, serial, Cell, CellContent, DefinedName, Literal, Sheet,
    SheetRole, WorkbookIR, CHECKS_SHEET, DATE_FORMAT, INPUTS_SHEET, LABEL_COL, META_SHEET, SINGLE_COL,
};
use crate::emit::a1::parse_a1;
use crate::error::{Error, Result};

const MAIN_NS: &str = "http://schemas.openxmlformats.org/spreadsheetml/2006/main";
const REL_NS: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
const PKG_REL_NS: &str = "http://schemas.openxmlformats.org/package/2006/relationships";
const HEADER: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";
const FIRST_CUSTOM_FORMAT: usize = 164;

/// Serializes the workbook; identical IR and epoch give identical bytes.
pub fn xlsx_bytes(ir: &WorkbookIR, epoch: DateTime<Utc>) -> Result<Vec<u8>> {
    let strings: BTreeSet<&str> = ir
        .sheets
        .iter()
        .flat_map(|s| s.cells.values())
        .filter_map(|c| match &c.content {
            CellContent::Literal(Literal::Text(t)) => Some(t.as_str()),
            _ => None,
        })
        .collect();
    let string_index: HashMap<&str, usize> = strings.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let formats: BTreeSet<&str> =
        ir.sheets.iter().flat_map(|s| s.cells.values()).filter_map(|c| c.format.as_deref()).collect();
    let style_index: HashMap<&str, usize> = formats.iter().enumerate().map(|(i, f)| (*f, i + 1)).collect();

    let mut parts: Vec<(String, String)> = vec![
        ("[Content_Types].xml".into(), content_types(ir.sheets.len())),
        ("_rels/.rels".into(), root_rels()),
        ("xl/workbook.xml".into(), workbook_xml(ir)),
        ("xl/_rels/workbook.xml.rels".into(), workbook_rels(ir.sheets.len())),
        ("xl/styles.xml".into(), styles_xml(&formats)),
        ("xl/sharedStrings.xml".into(), shared_strings_xml(&strings)),
    ];
    for (i, sheet) in ir.sheets.iter().enumerate() {
        parts.push((sheet_part(i), sheet_xml(sheet, &string_index, &style_index)));
    }

    let stamp = zip_time(epoch);
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(stamp)
        .unix_permissions(0o644);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    for (name, body) in parts {
        zip.start_file(name, options).map_err(zip_error)?;
        zip.write_all(body.as_bytes()).map_err(|e| Error::Workbook(e.to_string()))?;
    }
    Ok(zip.finish().map_err(zip_error)?.into_inner())
}

pub fn write_xlsx(ir: &WorkbookIR, path: &Path, epoch: DateTime<Utc>) -> Result<()> {
    let bytes = xlsx_bytes(ir, epoch)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Copies a workbook file with one part's text replaced, keeping entry order
/// and timestamps. Used to build hand-edited fixtures.
pub fn replace_part(bytes: &[u8], part: &str, edit: impl FnOnce(&str) -> String) -> Result<Vec<u8>> {
    let mut zip = ZipArchive::new(Cursor::new(bytes)).map_err(zip_error)?;
    let mut out = ZipWriter::new(Cursor::new(Vec::new()));
    let mut edit = Some(edit);
    for i in 0..zip.len() {
        let mut file = zip.by_index(i).map_err(zip_error)?;
        let name = file.name().to_string();
        let options = SimpleFileOptions::default()
            .compression_method(CompressionMethod::Deflated)
            .last_modified_time(file.last_modified().unwrap_or_default())
            .unix_permissions(0o644);
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(|e| Error::Workbook(format!("{name}: {e}")))?;
        if name == part {
            if let Some(f) = edit.take() {
                text = f(&text);
            }
        }
        out.start_file(name, options).map_err(zip_error)?;
        out.write_all(text.as_bytes()).map_err(|e| Error::Workbook(e.to_string()))?;
    }
    if edit.is_some() {
        return Err(Error::Workbook(format!("no part named {part}")));
    }
    Ok(out.finish().map_err(zip_error)?.into_inner())
}

/// Zip part name of the worksheet at 0-based position `index`.
pub fn sheet_part(index: usize) -> String {
    format!("xl/worksheets/sheet{}.xml", index + 1)
}

fn zip_error(e: zip::result::ZipError) -> Error {
    Error::Workbook(e.to_string())
}

/// Zip timestamps cover 1980..=2107; anything outside is clamped.
fn zip_time(t: DateTime<Utc>) -> zip::DateTime {
    let clamped = t.year().clamp(1980, 2107);
    let (month, day, hour, minute, second) = if clamped == t.year() {
        (t.month() as u8, t.day() as u8, t.hour() as u8, t.minute() as u8, t.second() as u8)
    } else if clamped > t.year() {
        (1, 1, 0, 0, 0)
    } else {
        (12, 31, 23, 59, 58)
    };
    zip::DateTime::from_date_and_time(clamped as u16, month, day, hour, minute, second)
        .unwrap_or_default()
}

fn content_types(n_sheets: usize) -> String {
    let mut x = String::from(HEADER);
    x.push_str("<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">");
    x.push_str("<Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>");
    x.push_str("<Default Extension=\"xml\" ContentType=\"application/xml\"/>");
    x.push_str("<Override PartName=\"/xl/workbook.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>");
    for i in 1..=n_sheets {
        let _ = write!(x, "<Override PartName=\"/xl/worksheets/sheet{i}.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>");
    }
    x.push_str("<Override PartName=\"/xl/styles.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml\"/>");
    x.push_str("<Override PartName=\"/xl/sharedStrings.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sharedStrings+xml\"/>");
    x.push_str("</Types>");
    x
}

fn root_rels() -> String {
    format!(
        "{HEADER}<Relationships xmlns=\"{PKG_REL_NS}\"><Relationship Id=\"rId1\" Type=\"{REL_NS}/officeDocument\" Target=\"xl/workbook.xml\"/></Relationships>"
    )
}

fn workbook_xml(ir: &WorkbookIR) -> String {
    let mut x = String::from(HEADER);
    let _ = write!(x, "<workbook xmlns=\"{MAIN_NS}\" xmlns:r=\"{REL_NS}\">");
    x.push_str("<bookViews><workbookView/></bookViews><sheets>");
    for (i, s) in ir.sheets.iter().enumerate() {
        let _ = write!(x, "<sheet name=\"{}\" sheetId=\"{}\" r:id=\"rId{}\"/>", escape(s.name.as_str()), i + 1, i + 1);
    }
    x.push_str("</sheets>");
    if !ir.names.is_empty() {
        let mut names: Vec<&DefinedName> = ir.names.iter().collect();
        names.sort_by(|a, b| a.name.cmp(&b.name));
        x.push_str("<definedNames>");
        for n in names {
            let _ = write!(x, "<definedName name=\"{}\">{}</definedName>", escape(n.name.as_str()), escape(n.target().as_str()));
        }
        x.push_str("</definedNames>");
    }
    x.push_str("<calcPr calcId=\"191029\" fullCalcOnLoad=\"1\"/></workbook>");
    x
}

fn workbook_rels(n_sheets: usize) -> String {
    let mut x = String::from(HEADER);
    let _ = write!(x, "<Relationships xmlns=\"{PKG_REL_NS}\">");
    for i in 1..=n_sheets {
        let _ = write!(x, "<Relationship Id=\"rId{i}\" Type=\"{REL_NS}/worksheet\" Target=\"worksheets/sheet{i}.xml\"/>");
    }
    let _ = write!(x, "<Relationship Id=\"rId{}\" Type=\"{REL_NS}/styles\" Target=\"styles.xml\"/>", n_sheets + 1);
    let _ = write!(x, "<Relationship Id=\"rId{}\" Type=\"{REL_NS}/sharedStrings\" Target=\"sharedStrings.xml\"/>", n_sheets + 2);
    x.push_str("</Relationships>");
    x
}

fn styles_xml(formats: &BTreeSet<&str>) -> String {
    let mut x = String::from(HEADER);
    let _ = write!(x, "<styleSheet xmlns=\"{MAIN_NS}\">");
    if !formats.is_empty() {
        let _ = write!(x, "<numFmts count=\"{}\">", formats.len());
        for (i, f) in formats.iter().enumerate() {
            let _ = write!(x, "<numFmt numFmtId=\"{}\" formatCode=\"{}\"/>", FIRST_CUSTOM_FORMAT + i, escape(*f));
        }
        x.push_str("</numFmts>");
    }
    x.push_str("<fonts count=\"1\"><font><sz val=\"11\"/><name val=\"Calibri\"/></font></fonts>");
    x.push_str("<fills count=\"2\"><fill><patternFill patternType=\"none\"/></fill><fill><patternFill patternType=\"gray125\"/></fill></fills>");
    x.push_str("<borders count=\"1\"><border><left/><right/><top/><bottom/><diagonal/></border></borders>");
    x.push_str("<cellStyleXfs count=\"1\"><xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\"/></cellStyleXfs>");
    let _ = write!(x, "<cellXfs count=\"{}\"><xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\" xfId=\"0\"/>", formats.len() + 1);
    for i in 0..formats.len() {
        let _ = write!(
            x,
            "<xf numFmtId=\"{}\" fontId=\"0\" fillId=\"0\" borderId=\"0\" xfId=\"0\" applyNumberFormat=\"1\"/>",
            FIRST_CUSTOM_FORMAT + i
        );
    }
    x.push_str("</cellXfs><cellStyles count=\"1\"><cellStyle name=\"Normal\" xfId=\"0\" builtinId=\"0\"/></cellStyles></styleSheet>");
    x
}

fn shared_strings_xml(strings: &BTreeSet<&str>) -> String {
    let mut x = String::from(HEADER);
    let _ = write!(x, "<sst xmlns=\"{MAIN_NS}\" count=\"{0}\" uniqueCount=\"{0}\">", strings.len());
    for s in strings {
        x.push_str(&text_element(s));
    }
    x.push_str("</sst>");
    x
}

fn text_element(s: &str) -> String {
    let preserve = s.starts_with(char::is_whitespace) || s.ends_with(char::is_whitespace);
    format!(
        "<si><t{}>{}</t></si>",
        if preserve { " xml:space=\"preserve\"" } else { "" },
        escape(s)
    )
}

fn sheet_xml(sheet: &Sheet, strings: &HashMap<&str, usize>, styles: &HashMap<&str, usize>) -> String {
    let mut x = String::from(HEADER);
    let _ = write!(x, "<worksheet xmlns=\"{MAIN_NS}\" xmlns:r=\"{REL_NS}\">");
    x.push_str("<sheetPr><outlinePr summaryBelow=\"0\"/></sheetPr>");
    let (max_row, max_col) = sheet.extent();
    let _ = write!(x, "<dimension ref=\"A1:{}\"/>", a1(max_row, max_col));
    let max_level = sheet.row_levels.values().copied().max().unwrap_or(0);
    let _ = write!(x, "<sheetFormatPr defaultRowHeight=\"15\"");
    if max_level > 0 {
        let _ = write!(x, " outlineLevelRow=\"{max_level}\"");
    }
    x.push_str("/><sheetData>");
    let mut rows: BTreeMap<u32, Vec<(u32, &Cell)>> = BTreeMap::new();
    for (&(r, c), cell) in &sheet.cells {
        rows.entry(r).or_default().push((c, cell));
    }
    for &r in sheet.row_levels.keys() {
        rows.entry(r).or_default();
    }
    for (r, cells) in rows {
        let _ = write!(x, "<row r=\"{r}\"");
        if let Some(level) = sheet.row_levels.get(&r).filter(|l| **l > 0) {
            let _ = write!(x, " outlineLevel=\"{level}\"");
        }
        if cells.is_empty() {
            x.push_str("/>");
            continue;
        }
        x.push('>');
        for (c, cell) in cells {
            let _ = write!(x, "<c r=\"{}\"", a1(r, c));
            if let Some(s) = cell.format.as_deref().and_then(|f| styles.get(f)) {
                let _ = write!(x, " s=\"{s}\"");
            }
            match &cell.content {
                CellContent::Formula(e) => {
                    let _ = write!(x, "><f>{}</f></c>", escape(render_a1(e).as_str()));
                }
                CellContent::Literal(Literal::Number(v)) => {
                    let _ = write!(x, "><v>{}</v></c>", number_text(*v));
                }
                CellContent::Literal(Literal::Date(d)) => {
                    let _ = write!(x, "><v>{}</v></c>", number_text(serial(*d)));
                }
                CellContent::Literal(Literal::Bool(b)) => {
                    let _ = write!(x, " t=\"b\"><v>{}</v></c>", u8::from(*b));
                }
                CellContent::Literal(Literal::Text(t)) => {
                    let _ = write!(x, " t=\"s\"><v>{}</v></c>", strings[t.as_str()]);
                }
            }
        }
        x.push_str("</row>");
    }
    x.push_str("</sheetData></worksheet>");
    x
}

/// A cell as stored in a workbook file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCell {
    /// Formula text without the leading `=`.
    pub formula: Option<String>,
    pub value: Option<RawValue>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Number(f64),
    Text(String),
    Bool(bool),
    Error(String),
}

impl RawCell {
    /// Display text used for comparison: `=` plus formula text, or the literal.
    pub fn text(&self) -> String {
        if let Some(f) = &self.formula {
            return format!("={f}");
        }
        match &self.value {
            Some(RawValue::Number(v)) if self.format.as_deref() == Some(DATE_FORMAT) => {
                from_serial(*v).map(|d| d.to_string()).unwrap_or_else(|| number_text(*v))
            }
            Some(RawValue::Number(v)) => number_text(*v),
            Some(RawValue::Text(t)) => t.clone(),
            Some(RawValue::Bool(b)) => if *b { "TRUE" } else { "FALSE" }.to_string(),
            Some(RawValue::Error(e)) => e.clone(),
            None => String::new(),
        }
    }
}

/// The same display text for a generated cell.
pub fn cell_text(cell: &Cell) -> String {
    match &cell.content {
        CellContent::Formula(e) => format!("={}", render_a1(e)),
        CellContent::Literal(Literal::Number(v)) => number_text(*v),
        CellContent::Literal(Literal::Text(t)) => t.clone(),
        CellContent::Literal(Literal::Bool(b)) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        CellContent::Literal(Literal::Date(d)) => d.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSheet {
    pub name: String,
    pub cells: BTreeMap<(u32, u32), RawCell>,
    pub row_levels: BTreeMap<u32, u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawWorkbook {
    pub sheets: Vec<RawSheet>,
    /// Defined name to its target text, e.g. `Inputs!$B$3`.
    pub names: BTreeMap<String, String>,
}

impl RawWorkbook {
    pub fn sheet(&self, name: &str) -> Option<&RawSheet> {
        self.sheets.iter().find(|s| s.name == name)
    }

    /// Text in column `col` of the first Meta row whose label is `label`.
    pub fn meta_field(&self, label: &str, col: u32) -> Option<String> {
        let meta = self.sheet(META_SHEET)?;
        let row = meta
            .cells
            .iter()
            .find(|((_, c), cell)| *c == LABEL_COL && cell.text() == label)
            .map(|((r, _), _)| *r)?;
        meta.cells.get(&(row, col)).map(RawCell::text)
    }

    /// Rebuilds an evaluable IR; every formula must parse.
    pub fn to_ir(&self) -> Result<WorkbookIR> {
        let mut ir = WorkbookIR { sheets: Vec::new(), names: Vec::new(), scenario_names: Vec::new(), timestamp_cell: None };
        for raw in &self.sheets {
            let role = match raw.name.as_str() {
                INPUTS_SHEET => SheetRole::Inputs,
                CHECKS_SHEET => SheetRole::Checks,
                META_SHEET => SheetRole::Meta,
                _ => SheetRole::Calculation,
            };
            let mut sheet = Sheet::new(raw.name.clone(), role);
            sheet.row_levels = raw.row_levels.clone();
            for (&(r, c), cell) in &raw.cells {
                let content = match (&cell.formula, &cell.value) {
                    (Some(f), _) => CellContent::Formula(parse_a1(f)?),
                    (None, Some(RawValue::Number(v))) if cell.format.as_deref() == Some(DATE_FORMAT) => {
                        CellContent::Literal(from_serial(*v).map(Literal::Date).unwrap_or(Literal::Number(*v)))
                    }
                    (None, Some(RawValue::Number(v))) => CellContent::Literal(Literal::Number(*v)),
                    (None, Some(RawValue::Text(t))) => CellContent::Literal(Literal::Text(t.clone())),
                    (None, Some(RawValue::Bool(b))) => CellContent::Literal(Literal::Bool(*b)),
                    (None, Some(RawValue::Error(e))) => {
                        return Err(Error::Workbook(format!("{}!{} holds error {e}", raw.name, a1(r, c))))
                    }
                    (None, None) => continue,
                };
                sheet.set(r, c, Cell { content, format: cell.format.clone() });
            }
            ir.sheets.push(sheet);
        }
        for (name, target) in &self.names {
            let (sheet, row, col) = split_target(target)
                .ok_or_else(|| Error::Workbook(format!("defined name {name} has unsupported target {target}")))?;
            ir.names.push(DefinedName { name: name.clone(), sheet, row, col });
        }
        let mut scenarios = Vec::new();
        if let Some(inputs) = ir.sheet(INPUTS_SHEET) {
            let mut r = 4;
            while let Some(Cell { content: CellContent::Literal(Literal::Text(label)), .. }) = inputs.get(r, LABEL_COL) {
                if !label.starts_with("Scenario ") {
                    break;
                }
                match inputs.get(r, SINGLE_COL).map(|c| &c.content) {
                    Some(CellContent::Literal(Literal::Text(n))) => scenarios.push(n.clone()),
                    _ => break,
                }
                r += 1;
            }
        }
        ir.scenario_names = scenarios;
        if let Some(meta) = ir.sheet(META_SHEET) {
            ir.timestamp_cell = meta
                .cells
                .iter()
                .find(|((_, c), cell)| *c == LABEL_COL && cell_text(cell) == "Generated")
                .map(|((r, _), _)| (META_SHEET.to_string(), *r, SINGLE_COL));
        }
        Ok(ir)
    }
}

/// `Sheet!$B$3` or `'Sheet name'!$B$3`.
fn split_target(target: &str) -> Option<(String, u32, u32)> {
    let bang = target.rfind('!')?;
    let (sheet, cell) = (&target[..bang], &target[bang + 1..]);
    let sheet = match sheet.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')) {
        Some(inner) => inner.replace("''", "'"),
        None => sheet.to_string(),
    };
    let (row, col) = split_ref(&cell.replace('$', ""))?;
    Some((sheet, row, col))
}

fn split_ref(cell: &str) -> Option<(u32, u32)> {
    let split = cell.find(|c: char| c.is_ascii_digit())?;
    let col = col_number(&cell[..split])?;
    let row = cell[split..].parse().ok()?;
    Some((row, col))
}

pub fn read_xlsx(bytes: &[u8]) -> Result<RawWorkbook> {
    let mut zip = ZipArchive::new(Cursor::new(bytes)).map_err(zip_error)?;
    let mut part = |name: &str| -> Result<Option<String>> {
        let mut file = match zip.by_name(name) {
            Ok(f) => f,
            Err(zip::result::ZipError::FileNotFound) => return Ok(None),
            Err(e) => return Err(zip_error(e)),
        };
        let mut s = String::new();
        file.read_to_string(&mut s).map_err(|e| Error::Workbook(format!("{name}: {e}")))?;
        Ok(Some(s))
    };
    let workbook = part("xl/workbook.xml")?.ok_or_else(|| Error::Workbook("missing xl/workbook.xml".into()))?;
    let rels = part("xl/_rels/workbook.xml.rels")?.ok_or_else(|| Error::Workbook("missing workbook relationships".into()))?;
    let strings = part("xl/sharedStrings.xml")?.map(|s| read_shared_strings(&s)).transpose()?.unwrap_or_default();
    let styles = part("xl/styles.xml")?.map(|s| read_styles(&s)).transpose()?.unwrap_or_default();

    let targets = read_rels(&rels)?;
    let (sheet_list, names) = read_workbook(&workbook)?;
    let mut sheets = Vec::new();
    for (name, rid) in sheet_list {
        let target = targets.get(&rid).ok_or_else(|| Error::Workbook(format!("sheet {name}: no relationship {rid}")))?;
        let path = match target.strip_prefix('/') {
            Some(abs) => abs.to_string(),
            None => format!("xl/{target}"),
        };
        let xml = part(&path)?.ok_or_else(|| Error::Workbook(format!("missing part {path}")))?;
        sheets.push(read_sheet(name, &xml, &strings, &styles)?);
    }
    Ok(RawWorkbook { sheets, names })
}

pub fn read_xlsx_file(path: &Path) -> Result<RawWorkbook> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_xlsx(&bytes)
}

fn xml_error(e: impl std::fmt::Display) -> Error {
    Error::Workbook(e.to_string())
}

fn attrs(e: &BytesStart) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for a in e.attributes() {
        let a = a.map_err(xml_error)?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        out.insert(key, a.unescape_value().map_err(xml_error)?.into_owned());
    }
    Ok(out)
}

fn read_rels(xml: &str) -> Result<HashMap<String, String>> {
    let mut reader = Reader::from_str(xml);
    let mut out = HashMap::new();
    loop {
        match reader.read_event().map_err(xml_error)? {
            Event::Start(e) | Event::Empty(e) if e.local_name().as_ref() == b"Relationship" => {
                let a = attrs(&e)?;
                if let (Some(id), Some(target)) = (a.get("Id"), a.get("Target")) {
                    out.insert(id.clone(), target.clone());
                }
            }
            Event::Eof => return Ok(out),
            _ => {}
        }
    }
}

type SheetList = Vec<(String, String)>;

fn read_workbook(xml: &str) -> Result<(SheetList, BTreeMap<String, String>)> {
    let mut reader = Reader::from_str(xml);
    let mut sheets = Vec::new();
    let mut names = BTreeMap::new();
    let mut current_name: Option<String> = None;
    let mut text = String::new();
    loop {
        match reader.read_event().map_err(xml_error)? {
            Event::Start(e) | Event::Empty(e) if e.local_name().as_ref() == b"sheet" => {
                let a = attrs(&e)?;
                let name = a.get("name").cloned().ok_or_else(|| Error::Workbook("sheet without name".into()))?;
                let rid = a.get("r:id").cloned().ok_or_else(|| Error::Workbook("sheet without r:id".into()))?;
                sheets.push((name, rid));
            }
            Event::Start(e) if e.local_name().as_ref() == b"definedName" => {
                current_name = attrs(&e)?.get("name").cloned();
                text.clear();
            }
            Event::Text(t) if current_name.is_some() => text.push_str(&t.unescape().map_err(xml_error)?),
            Event::End(e) if e.local_name().as_ref() == b"definedName" => {
                if let Some(n) = current_name.take() {
                    names.insert(n, std::mem::take(&mut text));
                }
            }
            Event::Eof => return Ok((sheets, names)),
            _ => {}
        }
    }
}

fn read_shared_strings(xml: &str) -> Result<Vec<String>> {
    let mut reader = Reader::from_str(xml);
    let mut out = Vec::new();
    let mut in_t = false;
    let mut current = String::new();
    loop {
        match reader.read_event().map_err(xml_error)? {
            Event::Start(e) if e.local_name().as_ref() == b"si" => current.clear(),
            Event::Start(e) if e.local_name().as_ref() == b"t" => in_t = true,
            Event::Text(t) if in_t => current.push_str(&t.unescape().map_err(xml_error)?),
            Event::End(e) if e.local_name().as_ref() == b"t" => in_t = false,
            Event::End(e) if e.local_name().as_ref() == b"si" => out.push(std::mem::take(&mut current)),
            Event::Eof => return Ok(out),
            _ => {}
        }
    }
}

/// Number format code of each cell style index (`None` for General).
fn read_styles(xml: &str) -> Result<Vec<Option<String>>> {
    let mut reader = Reader::from_str(xml);
    let mut codes: HashMap<String, String> = HashMap::new();
    let mut xfs = Vec::new();
    let mut in_cell_xfs = false;
    loop {
        match reader.read_event().map_err(xml_error)? {
            Event::Start(e) | Event::Empty(e) if e.local_name().as_ref() == b"numFmt" => {
                let a = attrs(&e)?;
                if let (Some(id), Some(code)) = (a.get("numFmtId"), a.get("formatCode")) {
                    codes.insert(id.clone(), code.clone());
                }
            }
            Event::Start(e) if e.local_name().as_ref() == b"cellXfs" => in_cell_xfs = true,
            Event::End(e) if e.local_name().as_ref() == b"cellXfs" => in_cell_xfs = false,
            Event::Start(e) | Event::Empty(e) if in_cell_xfs && e.local_name().as_ref() == b"xf" => {
                let id = attrs(&e)?.get("numFmtId").cloned().unwrap_or_else(|| "0".into());
                xfs.push(match (id.as_str(), codes.get(&id)) {
                    ("0", _) => None,
                    (_, Some(code)) => Some(code.clone()),
                    ("14", None) => Some(DATE_FORMAT.to_string()),
                    (other, None) => Some(format!("builtin:{other}")),
                });
            }
            Event::Eof => return Ok(xfs),
            _ => {}
        }
    }
}

#[derive(PartialEq)]
enum InCell {
    None,
    Formula,
    Value,
    Inline,
}

fn read_sheet(name: String, xml: &str, strings: &[String], styles: &[Option<String>]) -> Result<RawSheet> {
    let mut reader = Reader::from_str(xml);
    let mut sheet = RawSheet { name, cells: BTreeMap::new(), row_levels: BTreeMap::new() };
    let mut at: Option<(u32, u32)> = None;
    let mut kind = String::new();
    let mut cell = RawCell { formula: None, value: None, format: None };
    let mut text = String::new();
    let mut value_text: Option<String> = None;
    let mut inside = InCell::None;
    let label = sheet.name.clone();
    let bad = |what: &str| Error::Workbook(format!("sheet {label}: {what}"));
    loop {
        let event = reader.read_event().map_err(xml_error)?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) if e.local_name().as_ref() == b"row" => {
                let a = attrs(e)?;
                let r: u32 = a.get("r").and_then(|r| r.parse().ok()).ok_or_else(|| bad("row without number"))?;
                if let Some(level) = a.get("outlineLevel").and_then(|l| l.parse::<u8>().ok()).filter(|l| *l > 0) {
                    sheet.row_levels.insert(r, level);
                }
            }
            Event::Start(ref e) | Event::Empty(ref e) if e.local_name().as_ref() == b"c" => {
                let a = attrs(e)?;
                let pos = a.get("r").and_then(|r| split_ref(r)).ok_or_else(|| bad("cell without reference"))?;
                kind = a.get("t").cloned().unwrap_or_else(|| "n".into());
                let style: usize = a.get("s").and_then(|s| s.parse().ok()).unwrap_or(0);
                cell = RawCell { formula: None, value: None, format: styles.get(style).cloned().flatten() };
                value_text = None;
                if matches!(event, Event::Start(_)) {
                    at = Some(pos);
                } else {
                    sheet.cells.insert(pos, cell.clone());
                }
            }
            Event::Start(ref e) if at.is_some() => {
                inside = match e.local_name().as_ref() {
                    b"f" => InCell::Formula,
                    b"v" => InCell::Value,
                    b"t" => InCell::Inline,
                    _ => InCell::None,
                };
                text.clear();
            }
            Event::Text(ref t) if inside != InCell::None => text.push_str(&t.unescape().map_err(xml_error)?),
            Event::End(ref e) => match e.local_name().as_ref() {
                b"f" => {
                    cell.formula = Some(std::mem::take(&mut text));
                    inside = InCell::None;
                }
                b"v" | b"t" => {
                    value_text = Some(std::mem::take(&mut text));
                    inside = InCell::None;
                }
                b"c" => {
                    let pos = at.take().ok_or_else(|| bad("unbalanced cell"))?;
                    if let Some(v) = value_text.take() {
                        cell.value = Some(match kind.as_str() {
                            "s" => {
                                let i: usize = v.trim().parse().map_err(|_| bad("bad shared string index"))?;
                                RawValue::Text(strings.get(i).cloned().ok_or_else(|| bad("shared string out of range"))?)
                            }
                            "str" | "inlineStr" => RawValue::Text(v),
                            "b" => RawValue::Bool(v.trim() == "1"),
                            "e" => RawValue::Error(v),
                            _ => RawValue::Number(v.trim().parse().map_err(|_| bad("bad number"))?),
                        });
                    }
                    if cell.formula.is_some() || cell.value.is_some() {
                        sheet.cells.insert(pos, std::mem::replace(&mut cell, RawCell { formula: None, value: None, format: None }));
                    }
                }
                _ => {}
            },
            Event::Eof => return Ok(sheet),
            _ => {}
        }
    }
}
