use std::fmt::Write;

use super::ast::{Expr, PREC_ADD, PREC_ATOM, PREC_CMP, PREC_UNARY};

/// Renders an expression with single spaces around binary operators and only
/// the parentheses the grammar needs to reproduce the same tree.
pub fn print_canonical(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, 0, &mut out);
    out
}

fn write_expr(e: &Expr, min_prec: u8, out: &mut String) {
    let parens = e.precedence() < min_prec;
    if parens {
        out.push('(');
    }
    match e {
        Expr::Number(d) => out.push_str(d.as_str()),
        Expr::Bool(true) => out.push_str("TRUE"),
        Expr::Bool(false) => out.push_str("FALSE"),
        Expr::Ref(r) => {
            out.push('@');
            out.push_str(&r.dotted());
            if r.offset != 0 {
                let _ = write!(out, "[{}]", r.offset);
            }
        }
        Expr::Neg(inner) => {
            out.push('-');
            write_expr(inner, PREC_UNARY, out);
        }
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            write_expr(lhs, p, out);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(rhs, p + 1, out);
        }
        Expr::Compare { op, lhs, rhs } => {
            write_expr(lhs, PREC_ADD, out);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(rhs, PREC_ADD, out);
        }
        Expr::Call { func, args } => {
            out.push_str(func.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, PREC_CMP, out);
            }
            out.push(')');
        }
        Expr::Builtin(b) => out.push_str(b.name()),
    }
    if parens {
        out.push(')');
    }
    debug_assert!(PREC_ATOM > PREC_UNARY);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn canon(t: &str) -> String {
        print_canonical(&parse(t).unwrap())
    }

    #[test]
    fn spacing_normalized() {
        assert_eq!(canon("@a+@b"), "@a + @b");
        assert_eq!(canon("@a+ @b"), canon("@a + @b"));
    }

    #[test]
    fn needed_parens_kept() {
        assert_eq!(canon("(@a+@b)*@c"), "(@a + @b) * @c");
        assert_eq!(canon("@a-(@b-@c)"), "@a - (@b - @c)");
        assert_eq!(canon("-(@a*@b)"), "-(@a * @b)");
        assert_eq!(canon("(@a=@b)=FALSE"), "(@a = @b) = FALSE");
    }

    #[test]
    fn redundant_parens_dropped() {
        assert_eq!(canon("@a+(@b*@c)"), "@a + @b * @c");
        assert_eq!(canon("((@a))"), "@a");
        assert_eq!(canon("(@a-@b)-@c"), "@a - @b - @c");
        assert_eq!(canon("-(@a)"), "-@a");
    }

    #[test]
    fn calls_offsets_builtins() {
        assert_eq!(canon("ROUND( @x[-2] ,2)"), "ROUND(@x[-2], 2)");
        assert_eq!(canon("IF(PERIOD=1,0,@c.Closing[-1])"), "IF(PERIOD = 1, 0, @c.Closing[-1])");
        assert_eq!(canon("@a[-0]"), "@a");
    }
}
