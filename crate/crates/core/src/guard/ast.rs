use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::value::{Type, Value};
use crate::word::{Address, Bytes32, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Expr {
    Uint(Word),
    Bool(bool),
    /// String literal, stored left-aligned.
    Bytes32(Bytes32),
    Address(Address),
    EnumMember { ty: String, member: String },
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `uint(e)` coercion of an enum or bool.
    ToUint(Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Names of variables read by the expression, without duplicates.
    pub fn free_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Unary(_, e) | Expr::ToUint(e) => e.free_vars(out),
            Expr::Binary(_, l, r) => {
                l.free_vars(out);
                r.free_vars(out);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Stmt {
    Assign { target: String, value: Expr },
    Require(Expr),
}

impl Stmt {
    pub fn free_vars(&self, out: &mut Vec<String>) {
        match self {
            Stmt::Assign { value, .. } => value.free_vars(out),
            Stmt::Require(e) => e.free_vars(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumDecl {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub ty: Type,
    /// Literal initial value; zero of the type when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Value>,
}

/// Enum and variable declarations of one process.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decls {
    pub enums: Vec<EnumDecl>,
    pub vars: Vec<VariableDecl>,
}

impl Decls {
    pub fn var(&self, name: &str) -> Option<&VariableDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn enum_decl(&self, name: &str) -> Option<&EnumDecl> {
        self.enums.iter().find(|e| e.name == name)
    }

    pub fn enum_table(&self) -> EnumTable {
        EnumTable(self.enums.iter().map(|e| (e.name.clone(), e.members.clone())).collect())
    }

    /// Value a variable holds before any write.
    pub fn initial_value(&self, decl: &VariableDecl) -> Value {
        decl.init.clone().unwrap_or_else(|| Value::from_word(Word::ZERO, &decl.ty))
    }
}

/// Enum name to ordered member list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumTable(pub BTreeMap<String, Vec<String>>);

impl EnumTable {
    pub fn ordinal(&self, ty: &str, member: &str) -> Option<u32> {
        self.0.get(ty)?.iter().position(|m| m == member).map(|p| p as u32)
    }

    pub fn member(&self, ty: &str, ordinal: u32) -> Option<&str> {
        self.0.get(ty)?.get(ordinal as usize).map(String::as_str)
    }

    pub fn len(&self, ty: &str) -> Option<usize> {
        self.0.get(ty).map(Vec::len)
    }
}

/// Parameter of a task annotation: `(type name)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Param {
    #[serde(rename = "type")]
    pub ty: Type,
    pub name: String,
}

/// Variable values of one contract instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarEnv {
    pub values: BTreeMap<String, Value>,
}

impl VarEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: Value) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn set(&mut self, name: &str, v: Value) {
        self.values.insert(name.to_string(), v);
    }
}
