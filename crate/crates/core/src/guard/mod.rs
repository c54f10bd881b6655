//! Typed expression and statement language for gateway conditions,
//! script tasks and task operations.
//!
//! Arithmetic is over 256-bit words and wraps; division by zero is an error.
//! There are no loops or calls, so every program runs in bounded steps.

mod ast;
mod check;
mod eval;
mod parser;
mod print;

pub use ast::*;
pub use check::{check_decls, check_type, typecheck_expr, typecheck_stmt, typecheck_stmts, TypeEnv};
pub use eval::{eval, eval_in, exec, exec_with_params, Scope};
pub use parser::{parse_decls, parse_expr, parse_stmts};
pub(crate) use parser::Parser;
pub use print::{print_block, print_decls, print_expr, print_params, print_stmt, print_value_literal};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuardError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("revert: {0}")]
    Revert(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{Type, Value};
    use crate::word::Word;
    use proptest::prelude::*;

    const PO_DECLS: &str = "enum POStatus { PENDING, ACCEPTED, REJECTED, CANCELED }
        bytes32 sku; uint quantity; uint price; POStatus status;";

    fn po_env() -> (Decls, TypeEnv) {
        let d = parse_decls(PO_DECLS).unwrap();
        let env = TypeEnv::from_decls(&d);
        (d, env)
    }

    #[test]
    fn status_comparison_is_bool() {
        let (_, env) = po_env();
        let e = parse_expr("status == POStatus.ACCEPTED").unwrap();
        assert_eq!(typecheck_expr(&e, &env).unwrap(), Type::Bool);
    }

    #[test]
    fn bool_and_uint_mismatch() {
        let e = parse_expr("true && 3").unwrap();
        assert!(matches!(typecheck_expr(&e, &TypeEnv::default()), Err(GuardError::TypeMismatch(_))));
    }

    #[test]
    fn product_is_uint() {
        let (_, env) = po_env();
        let e = parse_expr("quantity * price").unwrap();
        assert_eq!(typecheck_expr(&e, &env).unwrap(), Type::Uint);
    }

    #[test]
    fn unknown_name_reported() {
        let e = parse_expr("missing + 1").unwrap();
        assert_eq!(typecheck_expr(&e, &TypeEnv::default()), Err(GuardError::UnknownName("missing".into())));
    }

    #[test]
    fn one_plus_one() {
        let e = parse_expr("1 + 1").unwrap();
        assert_eq!(eval(&e, &VarEnv::new(), &EnumTable::default()).unwrap(), Value::uint(2));
    }

    #[test]
    fn rejected_decision_is_not_accepted() {
        let (d, _) = po_env();
        let e = parse_expr("decision == POStatus.ACCEPTED").unwrap();
        let env = VarEnv::new().with("decision", Value::Enum { ty: "POStatus".into(), ordinal: 2 });
        assert_eq!(eval(&e, &env, &d.enum_table()).unwrap(), Value::Bool(false));
    }

    #[test]
    fn division_by_zero() {
        let e = parse_expr("x / 0").unwrap();
        let env = VarEnv::new().with("x", Value::uint(5));
        assert_eq!(eval(&e, &env, &EnumTable::default()), Err(GuardError::DivisionByZero));
    }

    #[test]
    fn max_word_plus_one_is_zero() {
        let e = parse_expr("(0 - 1) + 1 == 0").unwrap();
        assert_eq!(eval(&e, &VarEnv::new(), &EnumTable::default()).unwrap(), Value::Bool(true));
        let max = format!("{} + 1", Word::MAX);
        let e = parse_expr(&max).unwrap();
        assert_eq!(eval(&e, &VarEnv::new(), &EnumTable::default()).unwrap(), Value::uint(0));
    }

    fn validate_po_ops() -> Vec<Stmt> {
        parse_stmts(
            "{ require(decision == POStatus.ACCEPTED || decision == POStatus.REJECTED); status = decision; }",
        )
        .unwrap()
    }

    #[test]
    fn validate_po_accepts() {
        let (d, _) = po_env();
        let params = VarEnv::new().with("decision", Value::Enum { ty: "POStatus".into(), ordinal: 1 });
        let vars = VarEnv::new().with("status", Value::Enum { ty: "POStatus".into(), ordinal: 0 });
        let out = exec_with_params(&validate_po_ops(), &vars, &params, &d.enum_table()).unwrap();
        assert_eq!(out.get("status"), Some(&Value::Enum { ty: "POStatus".into(), ordinal: 1 }));
        // input environment untouched
        assert_eq!(vars.get("status"), Some(&Value::Enum { ty: "POStatus".into(), ordinal: 0 }));
    }

    #[test]
    fn validate_po_pending_reverts() {
        let (d, _) = po_env();
        let params = VarEnv::new().with("decision", Value::Enum { ty: "POStatus".into(), ordinal: 0 });
        let r = exec_with_params(&validate_po_ops(), &VarEnv::new(), &params, &d.enum_table());
        assert!(matches!(r, Err(GuardError::Revert(_))));
    }

    #[test]
    fn empty_program_is_identity() {
        let env = VarEnv::new().with("a", Value::uint(1));
        assert_eq!(exec(&[], &env, &EnumTable::default()).unwrap(), env);
    }

    #[test]
    fn decls_with_initializers() {
        let d = parse_decls("enum S { A, B } uint carriers = 2; S s = S.B; bytes32 tag = \"x\";").unwrap();
        check_decls(&d).unwrap();
        assert_eq!(d.vars[0].init, Some(Value::uint(2)));
        assert_eq!(d.vars[1].init, Some(Value::Enum { ty: "S".into(), ordinal: 1 }));
        assert_eq!(parse_decls(&print_decls(&d)).unwrap(), d);
    }

    #[test]
    fn assignment_to_parameter_rejected() {
        let (_, env) = po_env();
        let env = env.with_params(&[Param { ty: Type::Uint, name: "q".into() }]);
        let s = parse_stmts("q = 1;").unwrap();
        assert!(typecheck_stmts(&s, &env).is_err());
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_expr("1 + * 2") {
            Err(GuardError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            any::<u64>().prop_map(|v| Expr::Uint(Word::from(v))),
            any::<bool>().prop_map(Expr::Bool),
            "[a-z][a-z0-9_]{0,5}"
                .prop_filter("keyword", |s| !matches!(s.as_str(), "true" | "false" | "require" | "enum"))
                .prop_map(Expr::Var),
            ("[A-Z][a-z]{0,4}", "[A-Z]{1,5}").prop_map(|(ty, member)| Expr::EnumMember { ty, member }),
            "[a-z ]{0,10}".prop_map(|s| Expr::Bytes32(crate::word::Bytes32::from_text(&s))),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            let ops = prop_oneof![
                Just(BinOp::Eq),
                Just(BinOp::Ne),
                Just(BinOp::Lt),
                Just(BinOp::Le),
                Just(BinOp::Gt),
                Just(BinOp::Ge),
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::And),
                Just(BinOp::Or),
            ];
            prop_oneof![
                (ops, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
                inner.clone().prop_map(|e| Expr::Unary(UnOp::Not, Box::new(e))),
                inner.clone().prop_map(|e| Expr::Unary(UnOp::Neg, Box::new(e))),
                inner.prop_map(|e| Expr::ToUint(Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let text = print_expr(&e);
            prop_assert_eq!(parse_expr(&text).unwrap(), e);
        }

        #[test]
        fn uint_arithmetic_wraps(a in any::<u64>(), b in any::<u64>()) {
            let e = parse_expr(&format!("({a} - {b}) + {b} == {a}")).unwrap();
            prop_assert_eq!(eval(&e, &VarEnv::new(), &EnumTable::default()).unwrap(), Value::Bool(true));
        }

        #[test]
        fn well_typed_uint_programs_never_type_error(a in any::<u64>(), b in any::<u64>(), c in 0u64..3) {
            let env_t = TypeEnv::default().with_params(&[
                Param { ty: Type::Uint, name: "a".into() },
                Param { ty: Type::Uint, name: "b".into() },
            ]);
            let src = ["a * b + a", "a / (b + 1) - a", "(a > b) && !(a == b)"][c as usize];
            let e = parse_expr(src).unwrap();
            prop_assert!(typecheck_expr(&e, &env_t).is_ok());
            let env = VarEnv::new().with("a", Value::uint(a)).with("b", Value::uint(b));
            let r = eval(&e, &env, &EnumTable::default());
            prop_assert!(!matches!(r, Err(GuardError::TypeMismatch(_))));
        }
    }
}
