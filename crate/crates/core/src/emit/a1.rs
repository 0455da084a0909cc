//! Parser for the A1 formula subset the writer emits.

use crate::codegen::{col_number, CellExpr, CellRef};
use crate::error::{Error, Result};
use crate::expr::{ArithOp, CmpOp};

/// Parses formula text, with or without the leading `=`.
pub fn parse_a1(text: &str) -> Result<CellExpr> {
    let body = text.strip_prefix('=').unwrap_or(text);
    let mut p = Parser { src: body.as_bytes(), pos: 0, text: body };
    let e = p.compare()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Workbook(format!("formula `{}`: {what} at offset {}", self.text, self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos] == b' ' {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn compare(&mut self) -> Result<CellExpr> {
        let mut lhs = self.additive()?;
        loop {
            let op = if self.eat("<>") {
                CmpOp::Ne
            } else if self.eat("<=") {
                CmpOp::Le
            } else if self.eat(">=") {
                CmpOp::Ge
            } else if self.eat("<") {
                CmpOp::Lt
            } else if self.eat(">") {
                CmpOp::Gt
            } else if self.eat("=") {
                CmpOp::Eq
            } else {
                return Ok(lhs);
            };
            let rhs = self.additive()?;
            lhs = CellExpr::compare(op, lhs, rhs);
        }
    }

    fn additive(&mut self) -> Result<CellExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => ArithOp::Add,
                Some(b'-') => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = CellExpr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<CellExpr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => ArithOp::Mul,
                Some(b'/') => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = CellExpr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<CellExpr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(CellExpr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<CellExpr> {
        match self.peek() {
            None => Err(self.error("unexpected end")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.compare()?;
                if !self.eat(")") {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(b'"') => self.string().map(CellExpr::Text),
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(b'\'') => {
                let sheet = self.quoted_sheet()?;
                self.reference(Some(sheet))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' || c == b'$' => self.word(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn string(&mut self) -> Result<String> {
        self.pos += 1;
        let mut out = Vec::new();
        loop {
            match self.src.get(self.pos) {
                None => return Err(self.error("unterminated string")),
                Some(b'"') if self.src.get(self.pos + 1) == Some(&b'"') => {
                    out.push(b'"');
                    self.pos += 2;
                }
                Some(b'"') => {
                    self.pos += 1;
                    break;
                }
                Some(&c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
        String::from_utf8(out).map_err(|_| self.error("invalid utf-8"))
    }

    fn number(&mut self) -> Result<CellExpr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        self.text[start..self.pos].parse().map(CellExpr::Number).map_err(|_| self.error("bad number"))
    }

    fn quoted_sheet(&mut self) -> Result<String> {
        self.pos += 1;
        let mut out = Vec::new();
        loop {
            match self.src.get(self.pos) {
                None => return Err(self.error("unterminated sheet name")),
                Some(b'\'') if self.src.get(self.pos + 1) == Some(&b'\'') => {
                    out.push(b'\'');
                    self.pos += 2;
                }
                Some(b'\'') => {
                    self.pos += 1;
                    break;
                }
                Some(&c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
        if self.src.get(self.pos) != Some(&b'!') {
            return Err(self.error("expected `!`"));
        }
        self.pos += 1;
        String::from_utf8(out).map_err(|_| self.error("invalid utf-8"))
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || matches!(self.src[self.pos], b'_' | b'.'))
        {
            self.pos += 1;
        }
        &self.text[start..self.pos]
    }

    fn word(&mut self) -> Result<CellExpr> {
        if self.src[self.pos] == b'$' {
            return self.reference(None);
        }
        let start = self.pos;
        let word = self.ident().to_string();
        match self.src.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let mut args = Vec::new();
                if !self.eat(")") {
                    loop {
                        args.push(self.compare()?);
                        if self.eat(")") {
                            break;
                        }
                        if !self.eat(",") {
                            return Err(self.error("expected `,` or `)`"));
                        }
                    }
                }
                Ok(CellExpr::Call { name: word, args })
            }
            Some(b'!') => {
                self.pos += 1;
                self.reference(Some(word))
            }
            _ if word == "TRUE" => Ok(CellExpr::Bool(true)),
            _ if word == "FALSE" => Ok(CellExpr::Bool(false)),
            _ if split_cell(&word).is_some() => {
                self.pos = start;
                self.reference(None)
            }
            _ => Ok(CellExpr::Name(word)),
        }
    }

    fn cell(&mut self, sheet: Option<String>) -> Result<CellRef> {
        let abs_col = self.src.get(self.pos) == Some(&b'$');
        if abs_col {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let letters = &self.text[start..self.pos];
        let abs_row = self.src.get(self.pos) == Some(&b'$');
        if abs_row {
            self.pos += 1;
        }
        let digits_at = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let col = col_number(letters).ok_or_else(|| self.error("bad column"))?;
        let row: u32 = self.text[digits_at..self.pos].parse().map_err(|_| self.error("bad row"))?;
        if row == 0 {
            return Err(self.error("bad row"));
        }
        Ok(CellRef { sheet, row, col, abs_row, abs_col })
    }

    fn reference(&mut self, sheet: Option<String>) -> Result<CellExpr> {
        let a = self.cell(sheet)?;
        if self.src.get(self.pos) == Some(&b':') {
            self.pos += 1;
            let b = self.cell(None)?;
            return Ok(CellExpr::Range(a, b));
        }
        Ok(CellExpr::Ref(a))
    }
}

fn split_cell(word: &str) -> Option<(u32, u32)> {
    let split = word.find(|c: char| c.is_ascii_digit())?;
    let (letters, digits) = word.split_at(split);
    if letters.len() > 3 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let col = col_number(letters)?;
    let row: u32 = digits.parse().ok()?;
    (row > 0 && col <= 16384).then_some((row, col))
}
