//! Lexer and recursive-descent parser for the template formula language.
//!
//! ```text
//! expr  := cmp
//! cmp   := add (('=' | '<>' | '<' | '<=' | '>' | '>=') add)?
//! add   := mul (('+' | '-') mul)*
//! mul   := unary (('*' | '/') unary)*
//! unary := '-' unary | atom
//! atom  := number | TRUE | FALSE | ref | call | PERIOD | NPERIODS | '(' expr ')'
//! ref   := '@' ident ('.' ident)* ('[' '-' int ']')?
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::{ArithOp, Builtin, CmpOp, Decimal, Expr, Func, RowRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at byte {}: expected {}, found {}",
            self.offset,
            self.expected.join(" | "),
            self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(String),
    Ident(String),
    Ref(Vec<String>),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Ident(i) => format!("`{i}`"),
            Tok::Ref(p) => format!("`@{}`", p.join(".")),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic()
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, expected: &[&str], found: String| ParseError {
        offset,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    };
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match b {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'=' => Tok::Cmp(CmpOp::Eq),
            b'<' => match bytes.get(i + 1) {
                Some(b'>') => {
                    i += 1;
                    Tok::Cmp(CmpOp::Ne)
                }
                Some(b'=') => {
                    i += 1;
                    Tok::Cmp(CmpOp::Le)
                }
                _ => Tok::Cmp(CmpOp::Lt),
            },
            b'>' => match bytes.get(i + 1) {
                Some(b'=') => {
                    i += 1;
                    Tok::Cmp(CmpOp::Ge)
                }
                _ => Tok::Cmp(CmpOp::Gt),
            },
            b'@' => {
                let mut segments = Vec::new();
                i += 1;
                loop {
                    let seg_start = i;
                    if i >= bytes.len() || !is_ident_start(bytes[i]) {
                        let found = src[i..].chars().next().map_or("end of input".to_string(), |c| format!("`{c}`"));
                        return Err(err(i, &["identifier"], found));
                    }
                    while i < bytes.len() && is_ident_continue(bytes[i]) {
                        i += 1;
                    }
                    segments.push(src[seg_start..i].to_string());
                    if i < bytes.len() && bytes[i] == b'.' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((start, Tok::Ref(segments)));
                continue;
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return Err(err(i, &["digit"], describe_at(src, i)));
                    }
                }
                out.push((start, Tok::Number(src[start..i].to_string())));
                continue;
            }
            b if is_ident_start(b) => {
                while i < bytes.len() && is_ident_continue(bytes[i]) {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => return Err(err(i, &["expression"], describe_at(src, i))),
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((src.len(), Tok::Eof));
    Ok(out)
}

fn describe_at(src: &str, i: usize) -> String {
    src[i..]
        .chars()
        .next()
        .map_or("end of input".to_string(), |c| format!("`{c}`"))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&[name])
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.add()?;
        if let Tok::Cmp(op) = *self.peek() {
            self.bump();
            let rhs = self.add()?;
            return Ok(Expr::compare(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn add(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn mul(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        const ATOM: &[&str] = &["number", "TRUE", "FALSE", "@reference", "function", "PERIOD", "NPERIODS", "`(`", "`-`"];
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                Ok(Expr::Number(Decimal::parse(&text).expect("lexer yields valid decimals")))
            }
            Tok::Ref(path) => {
                self.bump();
                let offset = self.ref_offset()?;
                Ok(Expr::Ref(RowRef { path, offset }))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "TRUE" => return Ok(Expr::Bool(true)),
                    "FALSE" => return Ok(Expr::Bool(false)),
                    "PERIOD" => return Ok(Expr::Builtin(Builtin::Period)),
                    "NPERIODS" => return Ok(Expr::Builtin(Builtin::NPeriods)),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError {
                        offset,
                        expected: ATOM.iter().map(|s| s.to_string()).collect(),
                        found: format!("unknown name `{name}`"),
                    });
                };
                self.expect(Tok::LParen, "`(`")?;
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                if *self.peek() != Tok::RParen {
                    return self.fail(&["`,`", "`)`"]);
                }
                let close = self.offset();
                self.bump();
                if !func.accepts(args.len()) {
                    let (lo, hi) = func.arity();
                    let want = match hi {
                        Some(hi) if hi == lo => format!("{lo} argument(s) to {}", func.name()),
                        Some(hi) => format!("{lo}..{hi} arguments to {}", func.name()),
                        None => format!("at least {lo} argument(s) to {}", func.name()),
                    };
                    return Err(ParseError {
                        offset: close,
                        expected: vec![want],
                        found: format!("{} argument(s)", args.len()),
                    });
                }
                Ok(Expr::Call { func, args })
            }
            _ => self.fail(ATOM),
        }
    }

    fn ref_offset(&mut self) -> Result<i32, ParseError> {
        if *self.peek() != Tok::LBracket {
            return Ok(0);
        }
        self.bump();
        self.expect(Tok::Minus, "`-`")?;
        let Tok::Number(text) = self.peek().clone() else {
            return self.fail(&["integer"]);
        };
        let n: i32 = match text.parse() {
            Ok(n) => n,
            Err(_) => return self.fail(&["integer"]),
        };
        self.bump();
        self.expect(Tok::RBracket, "`]`")?;
        Ok(-n)
    }
}

/// Parses template formula text.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        let expected: &[&str] = if matches!(p.peek(), Tok::Cmp(_)) {
            &["end of input"]
        } else {
            &["operator", "end of input"]
        };
        return p.fail(expected);
    }
    Ok(e)
}
