//! Core of ringforge: element model, formula language, version store,
//! assembler, diagnostics, workbook code generation, evaluation and emitters.

pub mod assemble;
pub mod codegen;
pub mod demo;
pub mod diagnostics;
pub mod emit;
pub mod error;
pub mod eval;
pub mod expr;
pub mod model;
pub mod store;
pub mod testkit;

pub use diagnostics::{Code, Diagnostic, Location, Severity};
pub use error::{Error, Result};
pub use model::{Component, Element, ElementKind, Model, Skeleton, Status};
pub use store::{Repository, Store, VersionId};
