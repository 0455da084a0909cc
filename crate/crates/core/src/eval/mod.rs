//! Evaluation of generated workbooks and of assembled models.

mod grid;
mod model;
mod value;

pub use grid::{evaluate, evaluate_as_is, run_checks, CellValues, CheckResult, CheckResults};
pub use model::{evaluate_model, ModelValues, RowValues};
pub use value::{arith, call, compare, negate, round, Arg, ErrorValue, Value};
