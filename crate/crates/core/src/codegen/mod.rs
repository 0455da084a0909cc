//! Code generation: laying an assembled model onto a workbook IR.

mod dates;
mod ir;
mod layout;

pub use dates::{from_serial, period_dates, serial};
pub use ir::*;
pub use layout::*;
