use crate::value::Value;
use crate::word::Word;

use super::ast::*;
use super::print::print_expr;
use super::GuardError;

/// Read-only view over parameters layered on top of variables.
pub struct Scope<'a> {
    pub vars: &'a VarEnv,
    pub params: Option<&'a VarEnv>,
    pub enums: &'a EnumTable,
}

impl Scope<'_> {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.params.and_then(|p| p.get(name)).or_else(|| self.vars.get(name))
    }
}

fn type_err<T>(what: &str) -> Result<T, GuardError> {
    Err(GuardError::TypeMismatch(what.to_string()))
}

fn uint(v: Value) -> Result<Word, GuardError> {
    match v {
        Value::Uint(w) => Ok(w),
        other => type_err(&format!("expected uint, found {}", other.type_of())),
    }
}

fn boolean(v: Value) -> Result<bool, GuardError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => type_err(&format!("expected bool, found {}", other.type_of())),
    }
}

pub fn eval_in(e: &Expr, s: &Scope<'_>) -> Result<Value, GuardError> {
    Ok(match e {
        Expr::Uint(w) => Value::Uint(*w),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Bytes32(b) => Value::Bytes32(*b),
        Expr::Address(a) => Value::Address(*a),
        Expr::EnumMember { ty, member } => {
            let ordinal =
                s.enums.ordinal(ty, member).ok_or_else(|| GuardError::UnknownName(format!("{ty}.{member}")))?;
            Value::Enum { ty: ty.clone(), ordinal }
        }
        Expr::Var(name) => s.lookup(name).cloned().ok_or_else(|| GuardError::UnknownName(name.clone()))?,
        Expr::Unary(UnOp::Not, inner) => Value::Bool(!boolean(eval_in(inner, s)?)?),
        Expr::Unary(UnOp::Neg, inner) => Value::Uint(Word::ZERO.wrapping_sub(uint(eval_in(inner, s)?)?)),
        Expr::ToUint(inner) => Value::Uint(eval_in(inner, s)?.to_word()),
        Expr::Binary(op, l, r) => {
            // Short-circuit boolean operators.
            if matches!(op, BinOp::And | BinOp::Or) {
                let lv = boolean(eval_in(l, s)?)?;
                return match (op, lv) {
                    (BinOp::And, false) => Ok(Value::Bool(false)),
                    (BinOp::Or, true) => Ok(Value::Bool(true)),
                    _ => Ok(Value::Bool(boolean(eval_in(r, s)?)?)),
                };
            }
            let lv = eval_in(l, s)?;
            let rv = eval_in(r, s)?;
            match op {
                BinOp::Eq | BinOp::Ne => {
                    if lv.type_of() != rv.type_of() {
                        return type_err(&format!("cannot compare {} with {}", lv.type_of(), rv.type_of()));
                    }
                    Value::Bool((lv == rv) == (*op == BinOp::Eq))
                }
                BinOp::Lt => Value::Bool(uint(lv)? < uint(rv)?),
                BinOp::Le => Value::Bool(uint(lv)? <= uint(rv)?),
                BinOp::Gt => Value::Bool(uint(lv)? > uint(rv)?),
                BinOp::Ge => Value::Bool(uint(lv)? >= uint(rv)?),
                BinOp::Add => Value::Uint(uint(lv)?.wrapping_add(uint(rv)?)),
                BinOp::Sub => Value::Uint(uint(lv)?.wrapping_sub(uint(rv)?)),
                BinOp::Mul => Value::Uint(uint(lv)?.wrapping_mul(uint(rv)?)),
                BinOp::Div => Value::Uint(uint(lv)?.checked_div(uint(rv)?).ok_or(GuardError::DivisionByZero)?),
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    })
}

pub fn eval(e: &Expr, env: &VarEnv, enums: &EnumTable) -> Result<Value, GuardError> {
    eval_in(e, &Scope { vars: env, params: None, enums })
}

/// Runs statements against a copy of `env`; parameters shadow variables on reads.
pub fn exec_with_params(
    stmts: &[Stmt],
    env: &VarEnv,
    params: &VarEnv,
    enums: &EnumTable,
) -> Result<VarEnv, GuardError> {
    let mut out = env.clone();
    for st in stmts {
        match st {
            Stmt::Require(e) => {
                let ok = boolean(eval_in(e, &Scope { vars: &out, params: Some(params), enums })?)?;
                if !ok {
                    return Err(GuardError::Revert(format!("require({}) failed", print_expr(e))));
                }
            }
            Stmt::Assign { target, value } => {
                let v = eval_in(value, &Scope { vars: &out, params: Some(params), enums })?;
                out.set(target, v);
            }
        }
    }
    Ok(out)
}

pub fn exec(stmts: &[Stmt], env: &VarEnv, enums: &EnumTable) -> Result<VarEnv, GuardError> {
    exec_with_params(stmts, env, &VarEnv::new(), enums)
}
