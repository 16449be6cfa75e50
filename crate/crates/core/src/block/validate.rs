//! Static checks over a parsed or programmatically built program.
//!
//! A program with no error diagnostics cannot hit a type error at run time:
//! every port receives its declared type, and every variable name is used
//! with a single type across the program.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::ast::{check_field, Block, BlockProgram};
use super::registry::{PortKind, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "code")]
pub enum DiagnosticKind {
    /// A top-level value block; shown greyed out and never executed.
    DisconnectedRoot,
    MissingInput { port: String },
    TypeMismatch { port: String, expected: String, found: String },
    BadField { field: String, reason: String },
    VariableTypeConflict { name: String, expected: ValueType, found: ValueType },
    Misplaced { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub uid: String,
    pub block_kind: String,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn code(&self) -> &'static str {
        match self.kind {
            DiagnosticKind::DisconnectedRoot => "DisconnectedRoot",
            DiagnosticKind::MissingInput { .. } => "MissingInput",
            DiagnosticKind::TypeMismatch { .. } => "TypeMismatch",
            DiagnosticKind::BadField { .. } => "BadField",
            DiagnosticKind::VariableTypeConflict { .. } => "VariableTypeConflict",
            DiagnosticKind::Misplaced { .. } => "Misplaced",
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}[{}] block {} ({}): ", self.code(), self.uid, self.block_kind)?;
        match &self.kind {
            DiagnosticKind::DisconnectedRoot => f.write_str("not connected to anything; it will not run"),
            DiagnosticKind::MissingInput { port } => write!(f, "input `{port}` is empty"),
            DiagnosticKind::TypeMismatch { port, expected, found } => {
                write!(f, "`{port}` expects {expected}, got {found}")
            }
            DiagnosticKind::BadField { field, reason } => write!(f, "field `{field}`: {reason}"),
            DiagnosticKind::VariableTypeConflict { name, expected, found } => {
                write!(f, "variable `{name}` is used as {expected} elsewhere, here as {found}")
            }
            DiagnosticKind::Misplaced { reason } => f.write_str(reason),
        }
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}

#[derive(Clone, Copy)]
struct Context {
    top_level: bool,
    in_run: bool,
    in_task: bool,
}

struct Checker {
    out: Vec<Diagnostic>,
    variables: HashMap<String, ValueType>,
}

impl Checker {
    fn push(&mut self, b: &Block, severity: Severity, kind: DiagnosticKind) {
        self.out.push(Diagnostic {
            severity,
            uid: b.uid.clone(),
            block_kind: b.kind.id.to_owned(),
            kind,
        });
    }

    fn error(&mut self, b: &Block, kind: DiagnosticKind) {
        self.push(b, Severity::Error, kind);
    }

    fn declare(&mut self, b: &Block, name: &str, t: Option<ValueType>) {
        let Some(t) = t else { return };
        match self.variables.get(name) {
            None => {
                self.variables.insert(name.to_owned(), t);
            }
            Some(&expected) if expected != t => self.error(
                b,
                DiagnosticKind::VariableTypeConflict { name: name.to_owned(), expected, found: t },
            ),
            Some(_) => {}
        }
    }

    fn chain(&mut self, head: &Block, ctx: Context) {
        for b in head.chain() {
            if let Some(t) = b.output_type() {
                self.error(
                    b,
                    DiagnosticKind::TypeMismatch {
                        port: "statement".into(),
                        expected: "a statement".into(),
                        found: t.to_string(),
                    },
                );
            }
            self.block(b, ctx);
        }
    }

    fn block(&mut self, b: &Block, ctx: Context) {
        for (spec, value) in b.kind.fields.iter().zip(&b.fields) {
            if let Err(reason) = check_field(spec, value) {
                self.error(b, DiagnosticKind::BadField { field: spec.name.into(), reason });
            }
        }

        let misplaced = match b.kind.id {
            "repeat_runs" if !ctx.top_level => Some("repetitions can only run at the top level"),
            "run_id" if !ctx.in_run => Some("the run number only exists inside a repetition block"),
            "task_return" | "task_index" if !ctx.in_task => Some("only meaningful inside a parallel tasks body"),
            _ => None,
        };
        if let Some(reason) = misplaced {
            self.error(b, DiagnosticKind::Misplaced { reason: reason.into() });
        }

        match b.kind.id {
            "variable_get" | "variable_set" => {
                self.declare(b, b.text_field("name"), b.text_field("type").parse().ok())
            }
            "population_add" => self.declare(b, b.text_field("variable"), Some(ValueType::Population)),
            "for_range" => self.declare(b, b.text_field("variable"), Some(ValueType::Number)),
            "parallel_tasks" => self.declare(b, b.text_field("result"), Some(ValueType::ListOfNumber)),
            _ => {}
        }

        let inner = Context {
            top_level: false,
            in_run: ctx.in_run || b.kind.id == "repeat_runs",
            in_task: ctx.in_task || b.kind.id == "parallel_tasks",
        };
        for (i, (spec, child)) in b.kind.ports.iter().zip(&b.inputs).enumerate() {
            match (spec.kind, child) {
                (PortKind::Value(_), None) => {
                    self.error(b, DiagnosticKind::MissingInput { port: spec.name.into() })
                }
                (PortKind::Value(_), Some(child)) => {
                    let expected = b.port_type(i);
                    let found = child.output_type();
                    if found.is_none() || found != expected {
                        self.error(
                            b,
                            DiagnosticKind::TypeMismatch {
                                port: spec.name.into(),
                                expected: expected.map_or("?".into(), |t| t.to_string()),
                                found: found.map_or("a statement".into(), |t| t.to_string()),
                            },
                        );
                    }
                    if child.next.is_some() {
                        self.error(
                            child,
                            DiagnosticKind::TypeMismatch {
                                port: "next".into(),
                                expected: "nothing".into(),
                                found: "a chained block".into(),
                            },
                        );
                    }
                    self.block(child, inner);
                }
                (PortKind::Statement, Some(head)) => self.chain(head, inner),
                (PortKind::Statement, None) => {}
            }
        }
    }
}

/// Warnings for disconnected roots plus every error found in executable code.
/// Disconnected subtrees are not checked further: they never run.
pub fn validate(program: &BlockProgram) -> Vec<Diagnostic> {
    let mut checker = Checker { out: Vec::new(), variables: HashMap::new() };
    let top = Context { top_level: true, in_run: false, in_task: false };
    for root in &program.roots {
        if root.kind.is_statement() {
            checker.chain(root, top);
        } else {
            checker.push(root, Severity::Warning, DiagnosticKind::DisconnectedRoot);
        }
    }
    checker.out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(kind: &str) -> Block {
        Block::new(kind).unwrap()
    }

    fn codes(p: &BlockProgram) -> Vec<&'static str> {
        validate(p).iter().map(Diagnostic::code).collect()
    }

    #[test]
    fn dangling_crossover_is_disconnected() {
        let p = BlockProgram::from_roots(vec![b("crossover_one_point")]);
        let d = validate(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::DisconnectedRoot);
        assert_eq!(d[0].severity, Severity::Warning);
        assert!(!has_errors(&d));
    }

    #[test]
    fn empty_condition_is_missing_input() {
        let p = BlockProgram::from_roots(vec![b("if")]);
        assert_eq!(
            validate(&p)[0].kind,
            DiagnosticKind::MissingInput { port: "condition".into() }
        );
    }

    #[test]
    fn type_mismatch_on_programmatic_connection() {
        let p = BlockProgram::from_roots(vec![b("print").input("text", b("number"))]);
        assert_eq!(codes(&p), ["TypeMismatch"]);
        let stmt_in_value = BlockProgram::from_roots(vec![b("print").input("text", b("comment"))]);
        assert_eq!(codes(&stmt_in_value), ["TypeMismatch"]);
        let value_in_body = BlockProgram::from_roots(vec![b("repeat")
            .input("times", b("number"))
            .input("body", b("number"))]);
        assert_eq!(codes(&value_in_body), ["TypeMismatch"]);
    }

    #[test]
    fn variable_types_must_agree() {
        let p = BlockProgram::from_roots(vec![b("variable_set")
            .field("name", "x")
            .field("type", "Number")
            .input("value", b("number"))
            .then(b("print").input("text", b("variable_get").field("name", "x").field("type", "Text")))]);
        assert_eq!(codes(&p), ["VariableTypeConflict"]);
    }

    #[test]
    fn placement_rules() {
        let nested = BlockProgram::from_roots(vec![b("repeat_runs").input("body", b("repeat_runs"))]);
        assert_eq!(codes(&nested), ["Misplaced"]);
        let loose_run_id = BlockProgram::from_roots(vec![b("print")
            .input("text", b("to_text").input("value", b("run_id")))]);
        assert_eq!(codes(&loose_run_id), ["Misplaced"]);
        let task_ret = BlockProgram::from_roots(vec![b("task_return").input("value", b("number"))]);
        assert_eq!(codes(&task_ret), ["Misplaced"]);
        let ok = BlockProgram::from_roots(vec![b("repeat_runs").input(
            "body",
            b("parallel_tasks")
                .input("tasks", b("number"))
                .input("workers", b("run_id"))
                .input("body", b("task_return").input("value", b("task_index"))),
        )]);
        assert_eq!(codes(&ok), Vec::<&str>::new());
    }

    #[test]
    fn bad_fields_from_code_are_reported() {
        let p = BlockProgram::from_roots(vec![b("repeat_runs").field("runs", 2.5)]);
        assert_eq!(codes(&p), ["BadField"]);
    }

    #[test]
    fn display_names_the_block() {
        let p = BlockProgram::from_roots(vec![b("if")]);
        let text = validate(&p)[0].to_string();
        assert_eq!(text, "error[MissingInput] block b1 (if): input `condition` is empty");
    }
}
