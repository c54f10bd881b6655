use serde::{Deserialize, Serialize};

use crate::guard::{
    check_type, print_block, print_params, typecheck_stmts, Decls, GuardError, Param, Parser, Stmt, TypeEnv,
};

/// Data exchanged with the outside world when a task runs, plus the
/// operations applied on completion: `(exports) : (imports) -> { ops }`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskAnnotation {
    pub export_params: Vec<Param>,
    pub import_params: Vec<Param>,
    pub operations: Vec<Stmt>,
}

impl TaskAnnotation {
    pub fn is_empty(&self) -> bool {
        self.export_params.is_empty() && self.import_params.is_empty() && self.operations.is_empty()
    }

    pub fn script(operations: Vec<Stmt>) -> Self {
        TaskAnnotation { operations, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("annotation syntax error at offset {position}: {message}")]
    AnnotationSyntax { position: usize, message: String },
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("{0}")]
    Type(String),
}

impl From<GuardError> for AnnotationError {
    fn from(e: GuardError) -> Self {
        match e {
            GuardError::Syntax { pos, msg } => AnnotationError::AnnotationSyntax { position: pos, message: msg },
            GuardError::UnknownName(n) => AnnotationError::UndeclaredVariable(n),
            other => AnnotationError::Type(other.to_string()),
        }
    }
}

/// Parses the concrete syntax without name resolution.
pub fn parse_annotation(text: &str) -> Result<TaskAnnotation, AnnotationError> {
    let mut p = Parser::new(text)?;
    let export_params = p.params()?;
    p.expect_sym(":")?;
    let import_params = p.params()?;
    if !p.eat_sym("->") {
        p.expect_sym("-->")?;
    }
    let operations = p.block()?;
    p.expect_eof()?;
    Ok(TaskAnnotation { export_params, import_params, operations })
}

/// Parses and resolves every name against the process declarations.
pub fn parse_annotation_checked(text: &str, decls: &Decls) -> Result<TaskAnnotation, AnnotationError> {
    let a = parse_annotation(text)?;
    check_annotation(&a, decls)?;
    Ok(a)
}

pub(crate) fn check_annotation(a: &TaskAnnotation, decls: &Decls) -> Result<(), AnnotationError> {
    let enums = decls.enum_table();
    for p in &a.export_params {
        let v = decls.var(&p.name).ok_or_else(|| AnnotationError::UndeclaredVariable(p.name.clone()))?;
        if v.ty != p.ty {
            return Err(AnnotationError::Type(format!(
                "exported `{}` declared as {} but exported as {}",
                p.name, v.ty, p.ty
            )));
        }
    }
    for p in &a.import_params {
        check_type(&p.ty, &enums)?;
    }
    let env = TypeEnv::from_decls(decls).with_params(&a.import_params);
    typecheck_stmts(&a.operations, &env)?;
    Ok(())
}

pub fn print_annotation(a: &TaskAnnotation) -> String {
    format!("{} : {} -> {}", print_params(&a.export_params), print_params(&a.import_params), print_block(&a.operations))
}
