use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::store::VersionId;

/// Check state of an element. Ordered so that `max` picks the worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum Status {
    #[serde(rename = "OK")]
    Ok,
    #[default]
    Warning,
    Failure,
}

impl Status {
    pub fn badge(self) -> &'static str {
        match self {
            Status::Ok => "[OK]",
            Status::Warning => "[Warning]",
            Status::Failure => "[Failure]",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "OK",
            Status::Warning => "Warning",
            Status::Failure => "Failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub checked_by: String,
    pub checked_at: DateTime<Utc>,
}

/// The user-authored documentation of an element plus the check state the
/// store maintains for it. The audit trail lives in the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Documentation {
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub databook_entry: String,
    #[serde(default)]
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_record: Option<CheckRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Scalar,
    Series,
}

/// How a row spans the period grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthClass {
    FullWidth,
    SingleColumn,
    Special,
}

impl WidthClass {
    pub fn fits(self, structure: Structure) -> bool {
        match structure {
            Structure::Scalar => self == WidthClass::SingleColumn,
            Structure::Series => self != WidthClass::SingleColumn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RowKind {
    Heading,
    Blank,
    Input {
        port: String,
    },
    Formula {
        #[serde(with = "crate::expr::serde_text")]
        expr: Expr,
    },
}

impl RowKind {
    pub fn carries_value(&self) -> bool {
        matches!(self, RowKind::Input { .. } | RowKind::Formula { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub kind: RowKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl Row {
    pub fn formula(label: &str, expr: &str) -> Row {
        Row {
            label: label.to_string(),
            kind: RowKind::Formula {
                expr: crate::expr::parse(expr).expect("valid formula"),
            },
            unit: None,
        }
    }

    pub fn input(label: &str, port: &str) -> Row {
        Row {
            label: label.to_string(),
            kind: RowKind::Input {
                port: port.to_string(),
            },
            unit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub structure: Structure,
}

/// A child component inlined into its parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embed {
    pub instance: String,
    pub child: VersionId,
    /// Label of the parent row the child rows follow; absent = after the last row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<String>,
    /// Child port name → parent row label or parent port name.
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    #[serde(default)]
    pub ports: Vec<Port>,
    pub rows: Vec<Row>,
    #[serde(default)]
    pub embeds: Vec<Embed>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub doc: Documentation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub component: VersionId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireSource {
    /// A named data input of the skeleton.
    Input(String),
    /// `instance.output` of an earlier instance.
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataInput {
    pub name: String,
    pub structure: Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckDef {
    pub name: String,
    #[serde(with = "crate::expr::serde_text")]
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub name: String,
    pub instances: Vec<Instance>,
    /// `instance.port` → source.
    #[serde(default)]
    pub wiring: BTreeMap<String, WireSource>,
    #[serde(default)]
    pub data_inputs: Vec<DataInput>,
    /// Flat row path → width class.
    #[serde(default)]
    pub widths: BTreeMap<String, WidthClass>,
    #[serde(default)]
    pub checks: Vec<CheckDef>,
    #[serde(default)]
    pub doc: Documentation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialRange {
    pub start_period: u32,
    pub end_period: u32,
}

/// Scenario value of one data input: a constant applies to every period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioValue {
    Constant(f64),
    Series(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub values: BTreeMap<String, ScenarioValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportItem {
    Heading(String),
    Row(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDef {
    pub name: String,
    pub items: Vec<ReportItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Line,
    Bar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartDef {
    pub name: String,
    pub kind: ChartKind,
    pub series: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Periodicity {
    Monthly,
    Quarterly,
    Annual,
}

impl Periodicity {
    pub fn months(self) -> u32 {
        match self {
            Periodicity::Monthly => 1,
            Periodicity::Quarterly => 3,
            Periodicity::Annual => 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub start_date: NaiveDate,
    pub periodicity: Periodicity,
    pub n_periods: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub name: String,
    pub skeleton: VersionId,
    #[serde(default)]
    pub special_widths: BTreeMap<String, SpecialRange>,
    #[serde(default)]
    pub formats: BTreeMap<String, String>,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    /// Instance → calculation sheet; unassigned instances go to `Workings`.
    #[serde(default)]
    pub sheet_assignment: BTreeMap<String, String>,
    #[serde(default)]
    pub reports: Vec<ReportDef>,
    #[serde(default)]
    pub charts: Vec<ChartDef>,
    pub gen_params: GenParams,
    #[serde(default)]
    pub doc: Documentation,
}

pub const DEFAULT_SHEET: &str = "Workings";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Component,
    Skeleton,
    Model,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Component => "component",
            ElementKind::Skeleton => "skeleton",
            ElementKind::Model => "model",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Element {
    Component(Component),
    Skeleton(Skeleton),
    Model(Model),
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        match self {
            Element::Component(_) => ElementKind::Component,
            Element::Skeleton(_) => ElementKind::Skeleton,
            Element::Model(_) => ElementKind::Model,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Element::Component(c) => &c.name,
            Element::Skeleton(s) => &s.name,
            Element::Model(m) => &m.name,
        }
    }

    pub fn doc(&self) -> &Documentation {
        match self {
            Element::Component(c) => &c.doc,
            Element::Skeleton(s) => &s.doc,
            Element::Model(m) => &m.doc,
        }
    }

    pub fn doc_mut(&mut self) -> &mut Documentation {
        match self {
            Element::Component(c) => &mut c.doc,
            Element::Skeleton(s) => &mut s.doc,
            Element::Model(m) => &mut m.doc,
        }
    }

    /// Version ids of directly contained elements, in declaration order.
    pub fn children(&self) -> Vec<&VersionId> {
        match self {
            Element::Component(c) => c.embeds.iter().map(|e| &e.child).collect(),
            Element::Skeleton(s) => s.instances.iter().map(|i| &i.component).collect(),
            Element::Model(m) => vec![&m.skeleton],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut VersionId> {
        match self {
            Element::Component(c) => c.embeds.iter_mut().map(|e| &mut e.child).collect(),
            Element::Skeleton(s) => s.instances.iter_mut().map(|i| &mut i.component).collect(),
            Element::Model(m) => vec![&mut m.skeleton],
        }
    }

    pub fn as_component(&self) -> Option<&Component> {
        match self {
            Element::Component(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_skeleton(&self) -> Option<&Skeleton> {
        match self {
            Element::Skeleton(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_model(&self) -> Option<&Model> {
        match self {
            Element::Model(m) => Some(m),
            _ => None,
        }
    }
}
