use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Static description of a diagnostic code.
#[derive(Debug, Clone, Copy)]
pub struct CodeInfo {
    pub code: Code,
    pub summary: &'static str,
}

macro_rules! codes {
    ($($variant:ident => $text:literal, $summary:literal;)*) => {
        /// Every diagnostic code the compiler can emit. `E_*` codes block
        /// generation, `W_*` codes are advisory.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Code {
            $($variant,)*
        }

        impl Code {
            pub const ALL: &'static [Code] = &[$(Code::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Code::$variant => $text,)*
                }
            }

            pub fn summary(self) -> &'static str {
                match self {
                    $(Code::$variant => $summary,)*
                }
            }
        }
    };
}

codes! {
    Parse => "E_PARSE", "formula text does not match the grammar";
    BadLabel => "E_BAD_LABEL", "label or identifier is not of the form [A-Za-z][A-Za-z0-9_]*";
    DuplicateLabel => "E_DUPLICATE_LABEL", "two rows of one component share a label";
    DuplicatePort => "E_DUPLICATE_PORT", "two ports of one component share a name";
    DuplicateName => "E_DUPLICATE_NAME", "names of instances, inputs, checks, scenarios or outputs must be unique";
    UnknownPort => "E_UNKNOWN_PORT", "an input row names a port the component does not declare";
    PortNotLanded => "E_PORT_NOT_LANDED", "a port has no landing input row";
    DuplicateLanding => "E_DUPLICATE_LANDING", "a port or data input lands on more than one row";
    DanglingOutput => "E_DANGLING_OUTPUT", "an output names a row that does not exist or carries no value";
    BadVersionId => "E_BAD_VERSION_ID", "a child reference is not a 64-character hex version id";
    StatusUnchecked => "E_STATUS_UNCHECKED", "status OK without a check record";
    UnresolvedRef => "E_UNRESOLVED_REF", "a formula references an unknown or invisible row";
    ForwardRow => "E_FORWARD_ROW", "a same-period reference points at a later row";
    OffsetOnSingle => "E_OFFSET_ON_SINGLE", "a period offset applied to a single-column row";
    SingleRefsSeries => "E_SINGLE_REFS_SERIES", "a single-column row references a period row";
    TypeMismatch => "E_TYPE_MISMATCH", "operand types do not fit the operator or function";
    CheckNotBoolean => "E_CHECK_NOT_BOOLEAN", "a check expression is not boolean";
    ComponentCycle => "E_COMPONENT_CYCLE", "a component embeds itself directly or indirectly";
    KindMismatch => "E_KIND_MISMATCH", "a referenced version is of the wrong element kind";
    DanglingChild => "E_DANGLING_CHILD", "a referenced child version is not in the store";
    UnboundPort => "E_UNBOUND_PORT", "an embedded component port has no binding";
    BadBinding => "E_BAD_BINDING", "an embed binding names an unknown port or target";
    UnwiredPort => "E_UNWIRED_PORT", "a skeleton instance port has no wiring";
    WireForward => "E_WIRE_FORWARD", "a port is wired to the output of the same or a later instance";
    BadWiring => "E_BAD_WIRING", "a wiring entry names an unknown instance, port, input or output";
    InputUnused => "E_INPUT_UNUSED", "a data input is wired to no port";
    WidthMissing => "E_WIDTH_MISSING", "a value row has no width entry";
    StructureMismatch => "E_STRUCTURE_MISMATCH", "scalar/series structure does not match the width class";
    DanglingPath => "E_DANGLING_PATH", "a keyed entry names a row path, instance or input that does not exist";
    SpecialRange => "E_SPECIAL_RANGE", "a special width range lies outside 1..n_periods";
    ScenarioIncomplete => "E_SCENARIO_INCOMPLETE", "a scenario does not supply every data input";
    ScenarioValue => "E_SCENARIO_VALUE", "a scenario value has the wrong shape or is not finite";
    NoScenario => "E_NO_SCENARIO", "a model has no scenarios";
    BadGenParams => "E_BAD_GEN_PARAMS", "generation parameters are out of range";
    SheetName => "E_SHEET_NAME", "a sheet name is invalid, reserved or used twice";
    Cycle => "E_CYCLE", "same-period references form a cycle";
    ConstantInFormula => "W_CONSTANT_IN_FORMULA", "a formula contains a numeric constant other than 0 or 1";
    NoDatabookEntry => "W_NO_DATABOOK_ENTRY", "an element has an empty data book entry";
    Unchecked => "W_UNCHECKED", "effective status is not OK";
    NoChecks => "W_NO_CHECKS", "the skeleton defines no checks";
    DepthClamped => "W_DEPTH_CLAMPED", "embedding is deeper than the outline limit of 7";
}

impl Code {
    pub fn severity(self) -> Severity {
        if self.as_str().starts_with("E_") {
            Severity::Error
        } else {
            Severity::Warning
        }
    }

    pub fn from_str_code(text: &str) -> Option<Code> {
        Code::ALL.iter().copied().find(|c| c.as_str() == text)
    }

    pub fn registry() -> Vec<CodeInfo> {
        Code::ALL
            .iter()
            .map(|&code| CodeInfo {
                code,
                summary: code.summary(),
            })
            .collect()
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Code::from_str_code(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown diagnostic code `{text}`")))
    }
}
