//! Deterministic tree-walking interpreter.
//!
//! Values are 64-bit signed integers with checked arithmetic. Every statement
//! and every expression node costs one step; the run stops with
//! [`RunStatus::StepLimit`] when the budget is spent.

use std::fmt;

use super::ast::*;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    RuntimeError,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuntimeErrorKind {
    Overflow,
    DivisionByZero,
    IndexOutOfBounds,
    InputExhausted,
    MalformedInput,
    PrintfArity,
    Uninitialized,
}

impl fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Overflow => "integer overflow",
            Self::DivisionByZero => "division by zero",
            Self::IndexOutOfBounds => "array index out of bounds",
            Self::InputExhausted => "input exhausted",
            Self::MalformedInput => "malformed input",
            Self::PrintfArity => "printf argument count mismatch",
            Self::Uninitialized => "use of uninitialized value",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub message: String,
    /// Byte offset of the failing construct in the source.
    pub offset: usize,
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.message, self.offset)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub stdout: String,
    pub steps: u64,
    pub error: Option<RuntimeError>,
    /// Value of `return <expr>` from `main`, if one executed.
    pub return_value: Option<i64>,
}

impl RunOutcome {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

enum Stop {
    Error(RuntimeError),
    StepLimit,
}

enum Flow {
    Normal,
    Return(Option<i64>),
}

enum Storage {
    Scalar(Option<i64>),
    Array(Vec<Option<i64>>),
}

struct Machine<'a> {
    program: &'a Program,
    slots: Vec<Storage>,
    input: &'a str,
    input_pos: usize,
    stdout: String,
    steps: u64,
    limit: u64,
}

fn fail<T>(kind: RuntimeErrorKind, offset: usize, detail: impl Into<String>) -> Result<T, Stop> {
    let detail = detail.into();
    let message = if detail.is_empty() {
        kind.to_string()
    } else {
        format!("{kind}: {detail}")
    };
    Err(Stop::Error(RuntimeError {
        kind,
        message,
        offset,
    }))
}

/// Runs `program` on `stdin`.
pub fn run_program(program: &Program, stdin: &str, step_limit: u64) -> RunOutcome {
    let mut m = Machine {
        program,
        slots: program
            .vars
            .iter()
            .map(|v| match v.array_len {
                Some(n) => Storage::Array(vec![None; n]),
                None => Storage::Scalar(None),
            })
            .collect(),
        input: stdin,
        input_pos: 0,
        stdout: String::new(),
        steps: 0,
        limit: step_limit,
    };
    let result = m.block(&program.body);
    let (status, error, return_value) = match result {
        Ok(Flow::Return(v)) => (RunStatus::Ok, None, v),
        Ok(Flow::Normal) => (RunStatus::Ok, None, None),
        Err(Stop::StepLimit) => (RunStatus::StepLimit, None, None),
        Err(Stop::Error(e)) => (RunStatus::RuntimeError, Some(e), None),
    };
    RunOutcome {
        status,
        stdout: m.stdout,
        steps: m.steps,
        error,
        return_value,
    }
}

impl<'a> Machine<'a> {
    fn tick(&mut self) -> Result<(), Stop> {
        if self.steps >= self.limit {
            return Err(Stop::StepLimit);
        }
        self.steps += 1;
        Ok(())
    }

    fn name(&self, slot: Slot) -> &str {
        &self.program.vars[slot].name
    }

    fn block(&mut self, b: &Block) -> Result<Flow, Stop> {
        for s in &b.items {
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn declare(&mut self, decls: &[Declarator]) -> Result<(), Stop> {
        for d in decls {
            // Re-entering a declaration (e.g. in a loop body) starts fresh.
            self.slots[d.slot] = match self.program.vars[d.slot].array_len {
                Some(n) => Storage::Array(vec![None; n]),
                None => Storage::Scalar(None),
            };
            if let Some(init) = &d.init {
                let v = self.expr(init)?;
                self.slots[d.slot] = Storage::Scalar(Some(v));
            }
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow, Stop> {
        self.tick()?;
        match &s.kind {
            StmtKind::Decl(decls) => self.declare(decls)?,
            StmtKind::Block(b) => return self.block(b),
            StmtKind::Empty => {}
            StmtKind::If { cond, then, els } => {
                if self.expr(cond)? != 0 {
                    return self.stmt(then);
                } else if let Some(e) = els {
                    return self.stmt(e);
                }
            }
            StmtKind::While { cond, body } => {
                while self.expr(cond)? != 0 {
                    if let Flow::Return(v) = self.stmt(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                match init {
                    Some(ForInit::Decl(d)) => self.declare(d)?,
                    Some(ForInit::Expr(e)) => {
                        self.expr(e)?;
                    }
                    None => {}
                }
                loop {
                    if let Some(c) = cond {
                        if self.expr(c)? == 0 {
                            break;
                        }
                    } else {
                        // An absent condition still costs a step per iteration.
                        self.tick()?;
                    }
                    if let Flow::Return(v) = self.stmt(body)? {
                        return Ok(Flow::Return(v));
                    }
                    if let Some(st) = step {
                        self.expr(st)?;
                    }
                }
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => Some(self.expr(e)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn read_slot(&self, slot: Slot, offset: usize) -> Result<i64, Stop> {
        match &self.slots[slot] {
            Storage::Scalar(Some(v)) => Ok(*v),
            Storage::Scalar(None) => fail(
                RuntimeErrorKind::Uninitialized,
                offset,
                format!("'{}'", self.name(slot)),
            ),
            Storage::Array(_) => unreachable!("parser rejects arrays used as values"),
        }
    }

    fn element(&mut self, slot: Slot, index: i64, offset: usize) -> Result<&mut Option<i64>, Stop> {
        let len = match &self.slots[slot] {
            Storage::Array(a) => a.len(),
            Storage::Scalar(_) => unreachable!("parser rejects subscripted scalars"),
        };
        if index < 0 || index as u64 >= len as u64 {
            let name = self.name(slot).to_string();
            return fail(
                RuntimeErrorKind::IndexOutOfBounds,
                offset,
                format!("index {index} into '{name}' of length {len}"),
            );
        }
        match &mut self.slots[slot] {
            Storage::Array(a) => Ok(&mut a[index as usize]),
            Storage::Scalar(_) => unreachable!(),
        }
    }

    /// Resolves an lvalue to a mutable cell, evaluating its index once.
    fn cell(&mut self, lv: &LValue, offset: usize) -> Result<&mut Option<i64>, Stop> {
        match lv {
            LValue::Var(slot) => match &mut self.slots[*slot] {
                Storage::Scalar(v) => Ok(v),
                Storage::Array(_) => unreachable!("parser rejects arrays used as values"),
            },
            LValue::Index(slot, index) => {
                let i = self.expr(index)?;
                self.element(*slot, i, offset)
            }
        }
    }

    fn lvalue_name(&self, lv: &LValue) -> String {
        match lv {
            LValue::Var(s) => self.name(*s).to_string(),
            LValue::Index(s, _) => format!("{}[..]", self.name(*s)),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<i64, Stop> {
        self.tick()?;
        let off = e.offset;
        match &e.kind {
            ExprKind::Int(v) => Ok(*v),
            ExprKind::Var(slot) => self.read_slot(*slot, off),
            ExprKind::Index(slot, index) => {
                let i = self.expr(index)?;
                let name = self.name(*slot).to_string();
                match *self.element(*slot, i, off)? {
                    Some(v) => Ok(v),
                    None => fail(RuntimeErrorKind::Uninitialized, off, format!("'{name}[{i}]'")),
                }
            }
            ExprKind::Assign { op, target, value } => {
                let rhs = self.expr(value)?;
                let name = self.lvalue_name(target);
                let cell = self.cell(target, off)?;
                let new = match op {
                    AssignOp::Set => rhs,
                    AssignOp::Add | AssignOp::Sub => {
                        let Some(cur) = *cell else {
                            return fail(RuntimeErrorKind::Uninitialized, off, format!("'{name}'"));
                        };
                        let r = if *op == AssignOp::Add {
                            cur.checked_add(rhs)
                        } else {
                            cur.checked_sub(rhs)
                        };
                        match r {
                            Some(v) => v,
                            None => return fail(RuntimeErrorKind::Overflow, off, ""),
                        }
                    }
                };
                *cell = Some(new);
                Ok(new)
            }
            ExprKind::PostIncrement(lv) | ExprKind::PostDecrement(lv) => {
                let inc = matches!(e.kind, ExprKind::PostIncrement(_));
                let name = self.lvalue_name(lv);
                let cell = self.cell(lv, off)?;
                let Some(cur) = *cell else {
                    return fail(RuntimeErrorKind::Uninitialized, off, format!("'{name}'"));
                };
                let next = if inc { cur.checked_add(1) } else { cur.checked_sub(1) };
                match next {
                    Some(v) => {
                        *cell = Some(v);
                        Ok(cur)
                    }
                    None => fail(RuntimeErrorKind::Overflow, off, ""),
                }
            }
            ExprKind::Unary { op, operand } => {
                let v = self.expr(operand)?;
                match op {
                    UnaryOp::Neg => v
                        .checked_neg()
                        .map_or_else(|| fail(RuntimeErrorKind::Overflow, off, ""), Ok),
                    UnaryOp::Not => Ok((v == 0) as i64),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, off),
            ExprKind::Scanf { args, .. } => {
                let mut assigned = 0;
                for a in args {
                    let v = self.read_int(off)?;
                    *self.cell(a, off)? = Some(v);
                    assigned += 1;
                }
                Ok(assigned)
            }
            ExprKind::Printf { format, args } => {
                let wanted = format.iter().filter(|p| **p == FormatPiece::Int).count();
                if wanted != args.len() {
                    return fail(
                        RuntimeErrorKind::PrintfArity,
                        off,
                        format!("{wanted} conversions, {} arguments", args.len()),
                    );
                }
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.expr(a)?);
                }
                let mut values = values.into_iter();
                let before = self.stdout.len();
                for piece in format {
                    match piece {
                        FormatPiece::Text(t) => self.stdout.push_str(t),
                        FormatPiece::Int => {
                            let v = values.next().expect("arity checked above");
                            self.stdout.push_str(&v.to_string());
                        }
                    }
                }
                Ok((self.stdout.len() - before) as i64)
            }
        }
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr, off: usize) -> Result<i64, Stop> {
        let a = self.expr(lhs)?;
        match op {
            BinOp::And => {
                return Ok((a != 0 && self.expr(rhs)? != 0) as i64);
            }
            BinOp::Or => {
                return Ok((a != 0 || self.expr(rhs)? != 0) as i64);
            }
            _ => {}
        }
        let b = self.expr(rhs)?;
        let overflow = || fail(RuntimeErrorKind::Overflow, off, "");
        Ok(match op {
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::Lt => (a < b) as i64,
            BinOp::Gt => (a > b) as i64,
            BinOp::Le => (a <= b) as i64,
            BinOp::Ge => (a >= b) as i64,
            BinOp::Add => a.checked_add(b).map_or_else(overflow, Ok)?,
            BinOp::Sub => a.checked_sub(b).map_or_else(overflow, Ok)?,
            BinOp::Mul => a.checked_mul(b).map_or_else(overflow, Ok)?,
            BinOp::Div | BinOp::Mod => {
                if b == 0 {
                    let what = if op == BinOp::Div { "'/'" } else { "'%'" };
                    return fail(RuntimeErrorKind::DivisionByZero, off, what);
                }
                let r = if op == BinOp::Div {
                    a.checked_div(b)
                } else {
                    a.checked_rem(b)
                };
                r.map_or_else(overflow, Ok)?
            }
            BinOp::And | BinOp::Or => unreachable!(),
        })
    }

    /// Reads one whitespace-delimited integer from stdin.
    fn read_int(&mut self, off: usize) -> Result<i64, Stop> {
        let rest = &self.input[self.input_pos..];
        let trimmed = rest.trim_start();
        self.input_pos += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return fail(RuntimeErrorKind::InputExhausted, off, "");
        }
        let end = trimmed
            .find(|c: char| c.is_whitespace())
            .unwrap_or(trimmed.len());
        let word = &trimmed[..end];
        match word.parse::<i64>() {
            Ok(v) => {
                self.input_pos += end;
                Ok(v)
            }
            Err(_) => fail(RuntimeErrorKind::MalformedInput, off, format!("{word:?}")),
        }
    }
}
