use std::collections::BTreeMap;

use crate::value::Type;

use super::ast::*;
use super::GuardError;

/// Names visible to a program: process variables plus optional read-only parameters.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv {
    pub enums: EnumTable,
    pub vars: BTreeMap<String, Type>,
    pub params: BTreeMap<String, Type>,
}

impl TypeEnv {
    pub fn from_decls(d: &Decls) -> Self {
        TypeEnv {
            enums: d.enum_table(),
            vars: d.vars.iter().map(|v| (v.name.clone(), v.ty.clone())).collect(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_params(mut self, params: &[Param]) -> Self {
        for p in params {
            self.params.insert(p.name.clone(), p.ty.clone());
        }
        self
    }

    fn lookup(&self, name: &str) -> Option<&Type> {
        self.params.get(name).or_else(|| self.vars.get(name))
    }
}

fn mismatch<T>(msg: String) -> Result<T, GuardError> {
    Err(GuardError::TypeMismatch(msg))
}

/// Checks that every enum named in a declaration list or type exists.
pub fn check_type(t: &Type, enums: &EnumTable) -> Result<(), GuardError> {
    match t {
        Type::Enum(name) if enums.len(name).is_none() => Err(GuardError::UnknownName(name.clone())),
        _ => Ok(()),
    }
}

pub fn check_decls(d: &Decls) -> Result<(), GuardError> {
    let table = d.enum_table();
    let mut seen = std::collections::BTreeSet::new();
    for e in &d.enums {
        if e.members.is_empty() {
            return mismatch(format!("enum {} has no members", e.name));
        }
        if !seen.insert(e.name.clone()) {
            return mismatch(format!("duplicate declaration `{}`", e.name));
        }
    }
    let mut names = std::collections::BTreeSet::new();
    for v in &d.vars {
        check_type(&v.ty, &table)?;
        if !names.insert(v.name.clone()) {
            return mismatch(format!("duplicate variable `{}`", v.name));
        }
        if let Some(init) = &v.init {
            if init.type_of() != v.ty {
                return mismatch(format!("initializer of `{}` is not {}", v.name, v.ty));
            }
        }
    }
    Ok(())
}

pub fn typecheck_expr(e: &Expr, env: &TypeEnv) -> Result<Type, GuardError> {
    match e {
        Expr::Uint(_) => Ok(Type::Uint),
        Expr::Bool(_) => Ok(Type::Bool),
        Expr::Bytes32(_) => Ok(Type::Bytes32),
        Expr::Address(_) => Ok(Type::Address),
        Expr::EnumMember { ty, member } => {
            if env.enums.len(ty).is_none() {
                return Err(GuardError::UnknownName(ty.clone()));
            }
            if env.enums.ordinal(ty, member).is_none() {
                return Err(GuardError::UnknownName(format!("{ty}.{member}")));
            }
            Ok(Type::Enum(ty.clone()))
        }
        Expr::Var(name) => env.lookup(name).cloned().ok_or_else(|| GuardError::UnknownName(name.clone())),
        Expr::Unary(op, inner) => {
            let t = typecheck_expr(inner, env)?;
            match (op, &t) {
                (UnOp::Not, Type::Bool) => Ok(Type::Bool),
                (UnOp::Neg, Type::Uint) => Ok(Type::Uint),
                (UnOp::Not, _) => mismatch(format!("`!` expects bool, found {t}")),
                (UnOp::Neg, _) => mismatch(format!("`-` expects uint, found {t}")),
            }
        }
        Expr::ToUint(inner) => match typecheck_expr(inner, env)? {
            Type::Uint | Type::Bool | Type::Enum(_) => Ok(Type::Uint),
            t => mismatch(format!("cannot convert {t} to uint")),
        },
        Expr::Binary(op, l, r) => {
            let lt = typecheck_expr(l, env)?;
            let rt = typecheck_expr(r, env)?;
            match op {
                BinOp::And | BinOp::Or => {
                    if lt == Type::Bool && rt == Type::Bool {
                        Ok(Type::Bool)
                    } else {
                        mismatch(format!("`{}` expects bool operands, found {lt} and {rt}", op.symbol()))
                    }
                }
                BinOp::Eq | BinOp::Ne => {
                    if lt == rt {
                        Ok(Type::Bool)
                    } else {
                        mismatch(format!("cannot compare {lt} with {rt}"))
                    }
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    if lt == Type::Uint && rt == Type::Uint {
                        Ok(Type::Bool)
                    } else {
                        mismatch(format!("`{}` expects uint operands, found {lt} and {rt}", op.symbol()))
                    }
                }
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                    if lt == Type::Uint && rt == Type::Uint {
                        Ok(Type::Uint)
                    } else {
                        mismatch(format!("`{}` expects uint operands, found {lt} and {rt}", op.symbol()))
                    }
                }
            }
        }
    }
}

pub fn typecheck_stmt(s: &Stmt, env: &TypeEnv) -> Result<(), GuardError> {
    match s {
        Stmt::Require(e) => match typecheck_expr(e, env)? {
            Type::Bool => Ok(()),
            t => mismatch(format!("require expects bool, found {t}")),
        },
        Stmt::Assign { target, value } => {
            let tt = env.vars.get(target).ok_or_else(|| GuardError::UnknownName(target.clone()))?;
            let vt = typecheck_expr(value, env)?;
            if *tt == vt {
                Ok(())
            } else {
                mismatch(format!("cannot assign {vt} to `{target}` of type {tt}"))
            }
        }
    }
}

pub fn typecheck_stmts(stmts: &[Stmt], env: &TypeEnv) -> Result<(), GuardError> {
    stmts.iter().try_for_each(|s| typecheck_stmt(s, env))
}
