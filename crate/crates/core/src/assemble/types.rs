use std::ops::Range;

use serde::Serialize;

use crate::diagnostics::Diagnostic;
use crate::expr::{Expr, ResolvedExpr, ValueType};
use crate::model::{
    ChartDef, GenParams, ReportDef, Scenario, SpecialRange, Structure, WidthClass,
};
use crate::store::VersionId;

#[derive(Debug, Clone, PartialEq)]
pub enum FlatKind {
    Heading,
    Blank,
    /// Receives data input number `input` of the skeleton.
    Landing { input: usize },
    /// `linked` is the formula with references spelled as full flat paths.
    Formula { expr: ResolvedExpr, linked: Expr },
}

/// One row of the linked calculation block.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatRow {
    /// Full dotted path, e.g. `cash.Closing` or `sales.tax.Due`.
    pub path: String,
    pub label: String,
    pub instance: String,
    /// Name of the declaring component.
    pub component: String,
    /// Version of the declaring component.
    pub source: VersionId,
    pub kind: FlatKind,
    pub width: WidthClass,
    /// Active periods of a special row, 1-based inclusive.
    pub special: Option<SpecialRange>,
    pub format: Option<String>,
    pub sheet: String,
    pub depth: u8,
    pub ty: ValueType,
    pub unit: Option<String>,
    /// The formula as written in the declaring component.
    pub written: Option<Expr>,
    /// Port landed by this row and its declared structure.
    pub port: Option<(String, Structure)>,
}

impl FlatRow {
    pub fn carries_value(&self) -> bool {
        matches!(self.kind, FlatKind::Landing { .. } | FlatKind::Formula { .. })
    }

    /// Whether the row holds a value in 1-based period `p`.
    pub fn active_in(&self, p: u32) -> bool {
        match (self.width, self.special) {
            (WidthClass::Special, Some(r)) => (r.start_period..=r.end_period).contains(&p),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkedInput {
    pub name: String,
    pub structure: Structure,
    /// Flat index of the row the input lands on.
    pub landing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedCheck {
    pub name: String,
    pub expr: ResolvedExpr,
    pub written: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkedInstance {
    pub name: String,
    pub component: VersionId,
    pub component_name: String,
    /// Flat rows belonging to this instance.
    pub rows: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedSkeleton {
    pub name: String,
    pub rows: Vec<FlatRow>,
    pub data_inputs: Vec<LinkedInput>,
    pub checks: Vec<LinkedCheck>,
    pub instances: Vec<LinkedInstance>,
    pub warnings: Vec<Diagnostic>,
}

/// A model ready for code generation.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledModel {
    pub name: String,
    pub model_id: Option<VersionId>,
    pub skeleton_id: VersionId,
    pub skeleton_name: String,
    pub rows: Vec<FlatRow>,
    pub data_inputs: Vec<LinkedInput>,
    pub checks: Vec<LinkedCheck>,
    pub instances: Vec<LinkedInstance>,
    pub scenarios: Vec<Scenario>,
    pub gen_params: GenParams,
    pub reports: Vec<ReportDef>,
    pub charts: Vec<ChartDef>,
    /// Calculation sheets in order of first use.
    pub calc_sheets: Vec<String>,
    pub warnings: Vec<Diagnostic>,
}

impl AssembledModel {
    pub fn row_index(&self, path: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.path == path)
    }

    pub fn n_periods(&self) -> u32 {
        self.gen_params.n_periods
    }
}
