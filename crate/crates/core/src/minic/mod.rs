//! Mini-C: the restricted C subset every corpus program lives in.
//!
//! A program is a single `int main` or `void main` over `int` scalars and
//! fixed-size 1-D arrays, with `if`/`else`, `for`, `while`, `return`, and the
//! two builtins `scanf` (integers only) and `printf` (text and `%d`).
//! [`check_syntax`] is the "would it compile" proxy and [`run_program`] the
//! "does it behave" one.
//!
//! ```
//! use nl2code::minic::{compile, run_program, RunStatus};
//!
//! let prog = compile("int main(){int a,b;scanf(\"%d%d\",&a,&b);printf(\"%d\\n\",a+b);return 0;}")?;
//! let out = run_program(&prog, "2 40", 1_000);
//! assert_eq!(out.status, RunStatus::Ok);
//! assert_eq!(out.stdout, "42\n");
//! # Ok::<(), nl2code::minic::MiniCError>(())
//! ```

pub mod ast;
mod interp;
mod lexer;
mod parser;

use thiserror::Error;

pub use ast::Program;
pub use interp::{run_program, RunOutcome, RunStatus, RuntimeError, RuntimeErrorKind, DEFAULT_STEP_LIMIT};
pub use lexer::{lex, Token, TokenKind, KEYWORDS};
pub use parser::{parse, MAX_DEPTH};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MiniCError {
    #[error("lex error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("syntax error at byte {offset}: found {found}, expected {}", .expected.join(" or "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("semantic error at byte {offset}: {message}")]
    Semantic { offset: usize, message: String },
}

impl MiniCError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            MiniCError::Lex { offset, .. }
            | MiniCError::Syntax { offset, .. }
            | MiniCError::Semantic { offset, .. } => Some(*offset),
        }
    }
}

/// Lex and parse in one step.
pub fn compile(text: &str) -> Result<Program, MiniCError> {
    parse(&lex(text)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxReport {
    pub valid: bool,
    pub error_offset: Option<usize>,
    pub message: Option<String>,
}

/// Total over arbitrary input: failures are report content, never panics.
pub fn check_syntax(text: &str) -> SyntaxReport {
    match compile(text) {
        Ok(_) => SyntaxReport {
            valid: true,
            error_offset: None,
            message: None,
        },
        Err(e) => SyntaxReport {
            valid: false,
            error_offset: e.offset(),
            message: Some(e.to_string()),
        },
    }
}

/// Compiles and runs; a compile failure becomes `Err`.
pub fn run_source(text: &str, stdin: &str, step_limit: u64) -> Result<RunOutcome, MiniCError> {
    Ok(run_program(&compile(text)?, stdin, step_limit))
}
