//! The three element kinds (component, skeleton, model), their files,
//! canonical form, structural diff and local validation.

mod canonical;
mod types;
mod validate;

pub use canonical::{
    canonicalize, classify_materiality, creation_changes, diff, Change, ChangeList, FORMAT_VERSION,
};
pub use types::*;
pub use validate::{is_identifier, is_valid_sheet_name, validate_element, MAX_PERIODS};
