//! The template formula language: parsing, canonical printing, resolution and typing.

mod ast;
mod parse;
mod print;
mod resolve;

pub use ast::{ArithOp, Builtin, CmpOp, Decimal, Expr, Func, RowRef};
pub use parse::{parse, ParseError};
pub use print::print_canonical;
pub use resolve::{
    infer_type, resolve, Defining, ExprIssue, RExpr, ResolvedExpr, ResolvedRef, Scope, ScopeEntry,
    ValueType,
};

/// Expressions travel through element files as their canonical text.
pub(crate) mod serde_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{parse, print_canonical, Expr};

    pub fn serialize<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&print_canonical(e))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(|e| serde::de::Error::custom(format!("`{text}`: {e}")))
    }
}
