//! Writers for the workbook file, canonical grid, databook and specification,
//! and verification of a workbook file against its model.

mod a1;
mod docs;
mod grid;
mod verify;
mod xlsx;

pub use a1::parse_a1;
pub use docs::{databook, spec_document, UNDOCUMENTED};
pub use grid::{canonical_grid, GRID_FORMAT_VERSION};
pub use verify::{verify, verify_raw, CellDifference, VerifyReport};
pub use xlsx::{cell_text, read_xlsx, read_xlsx_file, replace_part, sheet_part, write_xlsx, xlsx_bytes, RawCell, RawSheet, RawValue, RawWorkbook};
