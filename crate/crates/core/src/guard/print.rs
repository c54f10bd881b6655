use crate::value::Value;

use super::ast::*;

fn literal_bytes32(b: &crate::word::Bytes32) -> String {
    let end = b.0.iter().rposition(|c| *c != 0).map(|p| p + 1).unwrap_or(0);
    let text = &b.0[..end];
    if text.iter().all(|c| (0x20..0x7f).contains(c) && *c != b'"') {
        format!("\"{}\"", String::from_utf8_lossy(text))
    } else {
        format!("bytes32({})", b.to_word().to_hex())
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Unary(..) => 6,
        _ => 7,
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Uint(w) => w.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Bytes32(b) => literal_bytes32(b),
        Expr::Address(a) => format!("address({})", a.to_word().to_hex()),
        Expr::EnumMember { ty, member } => format!("{ty}.{member}"),
        Expr::Var(n) => n.clone(),
        Expr::ToUint(inner) => format!("uint({})", print_expr(inner)),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            if prec(inner) < 6 {
                format!("{sym}({})", print_expr(inner))
            } else {
                format!("{sym}{}", print_expr(inner))
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let comparison = p == 3;
            let ls = if prec(l) < p || (comparison && prec(l) == p) {
                format!("({})", print_expr(l))
            } else {
                print_expr(l)
            };
            let rs = if prec(r) <= p { format!("({})", print_expr(r)) } else { print_expr(r) };
            format!("{ls} {} {rs}", op.symbol())
        }
    }
}

pub fn print_stmt(s: &Stmt) -> String {
    match s {
        Stmt::Require(e) => format!("require({});", print_expr(e)),
        Stmt::Assign { target, value } => format!("{target} = {};", print_expr(value)),
    }
}

pub fn print_block(stmts: &[Stmt]) -> String {
    if stmts.is_empty() {
        return "{}".to_string();
    }
    let body: Vec<String> = stmts.iter().map(print_stmt).collect();
    format!("{{ {} }}", body.join(" "))
}

pub fn print_params(ps: &[Param]) -> String {
    let inner: Vec<String> = ps.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
    format!("({})", inner.join(", "))
}

pub fn print_value_literal(v: &Value) -> String {
    match v {
        Value::Uint(w) => w.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Bytes32(b) => literal_bytes32(b),
        Value::Address(a) => format!("address({})", a.to_word().to_hex()),
        Value::Enum { ty, ordinal } => format!("{ty}({ordinal})"),
    }
}

/// Renders declarations; enum initializers are written as `Enum.MEMBER`.
pub fn print_decls(d: &Decls) -> String {
    let mut out = String::new();
    let table = d.enum_table();
    for e in &d.enums {
        out.push_str(&format!("enum {} {{ {} }}\n", e.name, e.members.join(", ")));
    }
    for v in &d.vars {
        match &v.init {
            None => out.push_str(&format!("{} {};\n", v.ty, v.name)),
            Some(Value::Enum { ty, ordinal }) => {
                let member = table.member(ty, *ordinal).unwrap_or("?");
                out.push_str(&format!("{} {} = {ty}.{member};\n", v.ty, v.name));
            }
            Some(init) => out.push_str(&format!("{} {} = {};\n", v.ty, v.name, print_value_literal(init))),
        }
    }
    out
}
