use std::fmt;

/// A numeric literal kept as normalized decimal text. Evaluation converts it
/// to `f64`; identity and printing use the text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal(String);

impl Decimal {
    /// Accepts `digits ('.' digits)?` and normalizes leading/trailing zeros.
    pub fn parse(text: &str) -> Option<Decimal> {
        let (int, frac) = match text.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (text, None),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if let Some(f) = frac {
            if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
        }
        let int = int.trim_start_matches('0');
        let int = if int.is_empty() { "0" } else { int };
        let frac = frac.map(|f| f.trim_end_matches('0')).unwrap_or("");
        Some(if frac.is_empty() {
            Decimal(int.to_string())
        } else {
            Decimal(format!("{int}.{frac}"))
        })
    }

    pub fn from_u64(n: u64) -> Decimal {
        Decimal(n.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        // Normalized decimal text always parses.
        self.0.parse().unwrap_or(f64::NAN)
    }

    /// True for the literals 0 and 1, which are not treated as hidden constants.
    pub fn is_zero_or_one(&self) -> bool {
        self.0 == "0" || self.0 == "1"
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => PREC_ADD,
            ArithOp::Mul | ArithOp::Div => PREC_MUL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

pub(crate) const PREC_CMP: u8 = 1;
pub(crate) const PREC_ADD: u8 = 2;
pub(crate) const PREC_MUL: u8 = 3;
pub(crate) const PREC_UNARY: u8 = 4;
pub(crate) const PREC_ATOM: u8 = 5;

/// The fixed function set. Each maps onto the spreadsheet function of the same name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sum,
    Min,
    Max,
    Abs,
    Round,
    If,
    And,
    Or,
    Not,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sum,
        Func::Min,
        Func::Max,
        Func::Abs,
        Func::Round,
        Func::If,
        Func::And,
        Func::Or,
        Func::Not,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sum => "SUM",
            Func::Min => "MIN",
            Func::Max => "MAX",
            Func::Abs => "ABS",
            Func::Round => "ROUND",
            Func::If => "IF",
            Func::And => "AND",
            Func::Or => "OR",
            Func::Not => "NOT",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Minimum and maximum argument counts (`None` = unbounded).
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            Func::Sum | Func::Min | Func::Max | Func::And | Func::Or => (1, None),
            Func::Abs | Func::Not => (1, Some(1)),
            Func::Round => (2, Some(2)),
            Func::If => (3, Some(3)),
        }
    }

    pub fn accepts(self, n: usize) -> bool {
        let (lo, hi) = self.arity();
        n >= lo && hi.is_none_or(|hi| n <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// 1-based index of the current period column.
    Period,
    /// Number of period columns.
    NPeriods,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Period => "PERIOD",
            Builtin::NPeriods => "NPERIODS",
        }
    }
}

/// Reference to another row, optionally to an earlier period of it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RowRef {
    pub path: Vec<String>,
    /// Always zero or negative.
    pub offset: i32,
}

impl RowRef {
    pub fn new(path: &str, offset: i32) -> RowRef {
        RowRef {
            path: path.split('.').map(str::to_string).collect(),
            offset,
        }
    }

    pub fn dotted(&self) -> String {
        self.path.join(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Number(Decimal),
    Bool(bool),
    Ref(RowRef),
    Neg(Box<Expr>),
    Binary {
        op: ArithOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Compare {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
    },
    Builtin(Builtin),
}

impl Expr {
    pub fn reference(path: &str, offset: i32) -> Expr {
        Expr::Ref(RowRef::new(path, offset))
    }

    pub fn binary(op: ArithOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn compare(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Compare {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub(crate) fn precedence(&self) -> u8 {
        match self {
            Expr::Compare { .. } => PREC_CMP,
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Neg(_) => PREC_UNARY,
            _ => PREC_ATOM,
        }
    }

    /// Visits every row reference in evaluation order.
    pub fn refs(&self) -> Vec<&RowRef> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Ref(r) = e {
                out.push(r);
            }
        });
        out
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Neg(inner) => inner.walk(f),
            Expr::Binary { lhs, rhs, .. } | Expr::Compare { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.walk(f)),
            _ => {}
        }
    }

    /// Rewrites every reference path in place.
    pub fn map_refs(&mut self, f: &mut impl FnMut(&mut RowRef)) {
        match self {
            Expr::Ref(r) => f(r),
            Expr::Neg(inner) => inner.map_refs(f),
            Expr::Binary { lhs, rhs, .. } | Expr::Compare { lhs, rhs, .. } => {
                lhs.map_refs(f);
                rhs.map_refs(f);
            }
            Expr::Call { args, .. } => args.iter_mut().for_each(|a| a.map_refs(f)),
            _ => {}
        }
    }

    /// Numeric literals that should be flagged as hard-coded constants.
    /// 0 and 1 are exempt, as is the digits argument of ROUND.
    pub fn scan_constants(&self) -> Vec<Decimal> {
        let mut out = Vec::new();
        scan(self, &mut out);
        out
    }
}

fn scan(e: &Expr, out: &mut Vec<Decimal>) {
    match e {
        Expr::Number(d) if !d.is_zero_or_one() => out.push(d.clone()),
        Expr::Neg(inner) => scan(inner, out),
        Expr::Binary { lhs, rhs, .. } | Expr::Compare { lhs, rhs, .. } => {
            scan(lhs, out);
            scan(rhs, out);
        }
        Expr::Call {
            func: Func::Round,
            args,
        } => {
            scan(&args[0], out);
            if !matches!(args[1], Expr::Number(_)) {
                scan(&args[1], out);
            }
        }
        Expr::Call { args, .. } => args.iter().for_each(|a| scan(a, out)),
        _ => {}
    }
}
