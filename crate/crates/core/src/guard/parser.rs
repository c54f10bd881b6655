//! Lexer and recursive-descent parser for declarations, expressions,
//! statements and parameter lists.

use crate::value::{Type, Value};
use crate::word::{Address, Bytes32, Word};

use super::ast::*;
use super::GuardError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(Word),
    Str(String),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: [&str; 24] = [
    "-->", "->", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", ",", ";", ":", ".", "=",
    "<", ">", "+", "-", "*", "/", "!",
];

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, usize)>, GuardError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric()) {
                i += 1;
            }
            let text = &src[start..i];
            let w: Word = text
                .parse()
                .map_err(|_| GuardError::Syntax { pos: start, msg: format!("bad number `{text}`") })?;
            out.push((Tok::Number(w), start));
            continue;
        }
        if c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                i += 1;
            }
            if i >= bytes.len() {
                return Err(GuardError::Syntax { pos: start, msg: "unterminated string".into() });
            }
            out.push((Tok::Str(src[start + 1..i].to_string()), start));
            i += 1;
            continue;
        }
        for sym in SYMBOLS {
            if src[i..].starts_with(sym) {
                out.push((Tok::Sym(sym), start));
                i += sym.len();
                continue 'outer;
            }
        }
        return Err(GuardError::Syntax {
            pos: start,
            msg: format!("unexpected character `{}`", src[i..].chars().next().unwrap()),
        });
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, GuardError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].0
    }

    pub(crate) fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, GuardError> {
        Err(GuardError::Syntax { pos: self.offset(), msg: msg.into() })
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<(), GuardError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn expect_eof(&self) -> Result<(), GuardError> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    fn ident(&mut self) -> Result<String, GuardError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn ty(&mut self) -> Result<Type, GuardError> {
        let name = self.ident()?;
        Ok(match name.as_str() {
            "uint" | "uint256" => Type::Uint,
            "bool" => Type::Bool,
            "bytes32" => Type::Bytes32,
            "address" => Type::Address,
            _ => Type::Enum(name),
        })
    }

    /// `type name, type name, ...` inside parentheses.
    pub(crate) fn params(&mut self) -> Result<Vec<Param>, GuardError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if self.eat_sym(")") {
            return Ok(out);
        }
        loop {
            let ty = self.ty()?;
            let name = self.ident()?;
            out.push(Param { ty, name });
            if self.eat_sym(",") {
                continue;
            }
            self.expect_sym(")")?;
            return Ok(out);
        }
    }

    /// `{ stmt* }`
    pub(crate) fn block(&mut self) -> Result<Vec<Stmt>, GuardError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.eat_sym("}") {
            if self.at_eof() {
                return self.err("expected `}`");
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    pub(crate) fn stmts_until_eof(&mut self) -> Result<Vec<Stmt>, GuardError> {
        let mut out = Vec::new();
        while !self.at_eof() {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    pub(crate) fn stmt(&mut self) -> Result<Stmt, GuardError> {
        if matches!(self.peek(), Tok::Ident(s) if s == "require") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.bump();
            self.expect_sym("(")?;
            let e = self.expr()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            return Ok(Stmt::Require(e));
        }
        let target = self.ident()?;
        self.expect_sym("=")?;
        let value = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::Assign { target, value })
    }

    pub(crate) fn decls(&mut self) -> Result<Decls, GuardError> {
        let mut d = Decls::default();
        while !self.at_eof() {
            if matches!(self.peek(), Tok::Ident(s) if s == "enum") {
                self.bump();
                let name = self.ident()?;
                self.expect_sym("{")?;
                let mut members = vec![self.ident()?];
                while self.eat_sym(",") {
                    if self.is_sym("}") {
                        break;
                    }
                    members.push(self.ident()?);
                }
                self.expect_sym("}")?;
                self.eat_sym(";");
                d.enums.push(EnumDecl { name, members });
                continue;
            }
            let ty = self.ty()?;
            let name = self.ident()?;
            let init = if self.eat_sym("=") { Some(self.literal_value(&ty, &d)?) } else { None };
            self.expect_sym(";")?;
            d.vars.push(VariableDecl { name, ty, init });
        }
        Ok(d)
    }

    fn literal_value(&mut self, ty: &Type, d: &Decls) -> Result<Value, GuardError> {
        let pos = self.offset();
        let e = self.unary()?;
        let table = d.enum_table();
        match (&e, ty) {
            (Expr::Uint(w), Type::Uint) => Ok(Value::Uint(*w)),
            (Expr::Bool(b), Type::Bool) => Ok(Value::Bool(*b)),
            (Expr::Bytes32(b), Type::Bytes32) => Ok(Value::Bytes32(*b)),
            (Expr::Address(a), Type::Address) => Ok(Value::Address(*a)),
            (Expr::EnumMember { ty: t, member }, Type::Enum(name)) if t == name => table
                .ordinal(t, member)
                .map(|ordinal| Value::Enum { ty: t.clone(), ordinal })
                .ok_or_else(|| GuardError::UnknownName(format!("{t}.{member}"))),
            _ => Err(GuardError::Syntax { pos, msg: format!("initializer is not a {ty} literal") }),
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, GuardError> {
        self.or()
    }

    fn or(&mut self) -> Result<Expr, GuardError> {
        let mut l = self.and()?;
        while self.eat_sym("||") {
            let r = self.and()?;
            l = Expr::binary(BinOp::Or, l, r);
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Expr, GuardError> {
        let mut l = self.cmp()?;
        while self.eat_sym("&&") {
            let r = self.cmp()?;
            l = Expr::binary(BinOp::And, l, r);
        }
        Ok(l)
    }

    fn cmp(&mut self) -> Result<Expr, GuardError> {
        let l = self.add()?;
        let op = match self.peek() {
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.add()?;
        Ok(Expr::binary(op, l, r))
    }

    fn add(&mut self) -> Result<Expr, GuardError> {
        let mut l = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.mul()?;
            l = Expr::binary(op, l, r);
        }
    }

    fn mul(&mut self) -> Result<Expr, GuardError> {
        let mut l = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.unary()?;
            l = Expr::binary(op, l, r);
        }
    }

    fn unary(&mut self) -> Result<Expr, GuardError> {
        if self.eat_sym("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat_sym("-") {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, GuardError> {
        match self.peek().clone() {
            Tok::Number(w) => {
                self.bump();
                Ok(Expr::Uint(w))
            }
            Tok::Str(s) => {
                self.bump();
                if s.len() > 32 {
                    return self.err("string literal longer than 32 bytes");
                }
                Ok(Expr::Bytes32(Bytes32::from_text(&s)))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "true" => return Ok(Expr::Bool(true)),
                    "false" => return Ok(Expr::Bool(false)),
                    "uint" | "uint256" if self.is_sym("(") => {
                        self.bump();
                        let e = self.expr()?;
                        self.expect_sym(")")?;
                        return Ok(Expr::ToUint(Box::new(e)));
                    }
                    "address" | "bytes32" if self.is_sym("(") => {
                        self.bump();
                        let pos = self.offset();
                        let lit = match self.bump() {
                            Tok::Number(w) => w,
                            _ => return Err(GuardError::Syntax { pos, msg: format!("expected {name} literal") }),
                        };
                        self.expect_sym(")")?;
                        return Ok(if name == "address" {
                            Expr::Address(Address::from_word(lit))
                        } else {
                            Expr::Bytes32(Bytes32::from_word(lit))
                        });
                    }
                    _ => {}
                }
                if self.eat_sym(".") {
                    let member = self.ident()?;
                    return Ok(Expr::EnumMember { ty: name, member });
                }
                Ok(Expr::Var(name))
            }
            Tok::Eof => self.err("unexpected end of input"),
            _ => self.err("expected expression"),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, GuardError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Statement sequence such as a script-task body.
pub fn parse_stmts(src: &str) -> Result<Vec<Stmt>, GuardError> {
    let mut p = Parser::new(src)?;
    if p.is_sym("{") {
        let b = p.block()?;
        p.expect_eof()?;
        return Ok(b);
    }
    p.stmts_until_eof()
}

pub fn parse_decls(src: &str) -> Result<Decls, GuardError> {
    Parser::new(src)?.decls()
}
