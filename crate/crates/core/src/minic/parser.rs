//! Recursive-descent parser with scope resolution.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::MiniCError;

/// Nesting bound for statements and expressions; keeps adversarial input from
/// exhausting the stack.
pub const MAX_DEPTH: usize = 200;
/// Largest array a declaration may request.
pub const MAX_ARRAY_LEN: usize = 1 << 20;

pub fn parse(tokens: &[Token]) -> Result<Program, MiniCError> {
    let eof = tokens.last().map_or(0, Token::end);
    let mut p = Parser {
        tokens,
        pos: 0,
        eof,
        scopes: Vec::new(),
        vars: Vec::new(),
        depth: 0,
    };
    p.program()
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    eof: usize,
    scopes: Vec<HashMap<String, Slot>>,
    vars: Vec<VarInfo>,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Token> {
        self.tokens.get(self.pos + k)
    }

    fn at(&self, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.is(lexeme))
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.eof, |t| t.offset)
    }

    fn bump(&mut self) -> &'a Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn eat(&mut self, lexeme: &str) -> bool {
        if self.at(lexeme) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, expected: &[&str]) -> Result<T, MiniCError> {
        Err(MiniCError::Syntax {
            offset: self.offset(),
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), |t| format!("{:?}", t.lexeme)),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, lexeme: &str) -> Result<&'a Token, MiniCError> {
        if self.at(lexeme) {
            Ok(self.bump())
        } else {
            self.unexpected(&[&format!("'{lexeme}'")])
        }
    }

    fn semantic<T>(offset: usize, message: impl Into<String>) -> Result<T, MiniCError> {
        Err(MiniCError::Semantic {
            offset,
            message: message.into(),
        })
    }

    fn enter(&mut self) -> Result<(), MiniCError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Self::semantic(self.offset(), "nesting too deep");
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn program(&mut self) -> Result<Program, MiniCError> {
        let return_type = if self.eat("int") {
            ReturnType::Int
        } else if self.eat("void") {
            ReturnType::Void
        } else {
            return self.unexpected(&["'int'", "'void'"]);
        };
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier && t.lexeme == "main" => {
                self.pos += 1;
            }
            _ => return self.unexpected(&["'main'"]),
        }
        self.expect("(")?;
        self.eat("void");
        self.expect(")")?;
        let body = self.block()?;
        if self.peek().is_some() {
            return self.unexpected(&["end of input"]);
        }
        Ok(Program {
            return_type,
            body,
            vars: std::mem::take(&mut self.vars),
        })
    }

    fn block(&mut self) -> Result<Block, MiniCError> {
        self.expect("{")?;
        self.enter()?;
        self.scopes.push(HashMap::new());
        let mut items = Vec::new();
        loop {
            if self.eat("}") {
                break;
            }
            if self.peek().is_none() {
                return self.unexpected(&["'}'"]);
            }
            if self.at("int") {
                let offset = self.offset();
                let decls = self.declaration()?;
                self.expect(";")?;
                items.push(Stmt {
                    kind: StmtKind::Decl(decls),
                    offset,
                });
            } else {
                items.push(self.statement()?);
            }
        }
        self.scopes.pop();
        self.leave();
        Ok(Block { items })
    }

    /// `"int" declarator { "," declarator }` without the trailing `;`.
    fn declaration(&mut self) -> Result<Vec<Declarator>, MiniCError> {
        self.expect("int")?;
        let mut out = vec![self.declarator()?];
        while self.eat(",") {
            out.push(self.declarator()?);
        }
        Ok(out)
    }

    fn declarator(&mut self) -> Result<Declarator, MiniCError> {
        let name_tok = match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => self.bump(),
            _ => return self.unexpected(&["identifier"]),
        };
        let offset = name_tok.offset;
        let mut array_len = None;
        if self.eat("[") {
            let len_tok = match self.peek() {
                Some(t) if t.kind == TokenKind::IntLiteral => self.bump(),
                _ => return self.unexpected(&["integer literal"]),
            };
            let len: i64 = len_tok.lexeme.parse().expect("lexer validated literal");
            if len <= 0 {
                return Self::semantic(len_tok.offset, "array size must be positive");
            }
            if len as u64 > MAX_ARRAY_LEN as u64 {
                return Self::semantic(len_tok.offset, format!("array size {len} too large"));
            }
            array_len = Some(len as usize);
            self.expect("]")?;
        }
        let scope = self.scopes.last_mut().expect("declarations occur inside a scope");
        if scope.contains_key(&name_tok.lexeme) {
            return Self::semantic(offset, format!("redeclaration of '{}'", name_tok.lexeme));
        }
        let slot = self.vars.len();
        self.vars.push(VarInfo {
            name: name_tok.lexeme.clone(),
            array_len,
            offset,
        });
        scope.insert(name_tok.lexeme.clone(), slot);
        let init = if self.at("=") {
            let eq = self.bump();
            if array_len.is_some() {
                return Self::semantic(eq.offset, "array declarations cannot have an initializer");
            }
            Some(self.assignment()?)
        } else {
            None
        };
        Ok(Declarator { slot, init, offset })
    }

    fn statement(&mut self) -> Result<Stmt, MiniCError> {
        self.enter()?;
        let offset = self.offset();
        let kind = match self.peek().map(|t| (t.kind, t.lexeme.as_str())) {
            Some((_, "{")) => StmtKind::Block(self.block()?),
            Some((_, ";")) => {
                self.pos += 1;
                StmtKind::Empty
            }
            Some((TokenKind::Keyword, "if")) => {
                self.pos += 1;
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let then = Box::new(self.statement()?);
                let els = if self.eat("else") {
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                StmtKind::If { cond, then, els }
            }
            Some((TokenKind::Keyword, "while")) => {
                self.pos += 1;
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let body = Box::new(self.statement()?);
                StmtKind::While { cond, body }
            }
            Some((TokenKind::Keyword, "for")) => self.for_statement()?,
            Some((TokenKind::Keyword, "return")) => {
                self.pos += 1;
                let value = if self.at(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                StmtKind::Return(value)
            }
            Some((TokenKind::Keyword, _)) | None => return self.unexpected(&["statement"]),
            Some(_) => {
                let e = self.expr()?;
                self.expect(";")?;
                StmtKind::Expr(e)
            }
        };
        self.leave();
        Ok(Stmt { kind, offset })
    }

    fn for_statement(&mut self) -> Result<StmtKind, MiniCError> {
        self.pos += 1;
        self.expect("(")?;
        self.scopes.push(HashMap::new());
        let init = if self.at(";") {
            None
        } else if self.at("int") {
            Some(ForInit::Decl(self.declaration()?))
        } else {
            Some(ForInit::Expr(self.expr()?))
        };
        self.expect(";")?;
        let cond = if self.at(";") { None } else { Some(self.expr()?) };
        self.expect(";")?;
        let step = if self.at(")") { None } else { Some(self.expr()?) };
        self.expect(")")?;
        let body = Box::new(self.statement()?);
        self.scopes.pop();
        Ok(StmtKind::For {
            init,
            cond,
            step,
            body,
        })
    }

    fn expr(&mut self) -> Result<Expr, MiniCError> {
        self.assignment()
    }

    fn assignment(&mut self) -> Result<Expr, MiniCError> {
        self.enter()?;
        let lhs = self.or()?;
        let op = match self.peek().map(|t| t.lexeme.as_str()) {
            Some("=") => AssignOp::Set,
            Some("+=") => AssignOp::Add,
            Some("-=") => AssignOp::Sub,
            _ => {
                self.leave();
                return Ok(lhs);
            }
        };
        let op_offset = self.bump().offset;
        let target = match to_lvalue(lhs.kind) {
            Some(lv) => lv,
            None => return Self::semantic(op_offset, "left side of assignment is not assignable"),
        };
        let value = Box::new(self.assignment()?);
        self.leave();
        Ok(Expr {
            kind: ExprKind::Assign { op, target, value },
            offset: lhs.offset,
        })
    }

    fn binary_level(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> Result<Expr, MiniCError>,
    ) -> Result<Expr, MiniCError> {
        let mut lhs = next(self)?;
        while let Some(t) = self.peek() {
            if t.kind != TokenKind::Operator || !ops.contains(&t.lexeme.as_str()) {
                break;
            }
            self.pos += 1;
            let op = BinOp::from_lexeme(&t.lexeme).expect("listed operator");
            let rhs = next(self)?;
            let offset = lhs.offset;
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                offset,
            };
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, MiniCError> {
        self.binary_level(&["||"], Self::and)
    }

    fn and(&mut self) -> Result<Expr, MiniCError> {
        self.binary_level(&["&&"], Self::equality)
    }

    fn equality(&mut self) -> Result<Expr, MiniCError> {
        self.binary_level(&["==", "!="], Self::relational)
    }

    fn relational(&mut self) -> Result<Expr, MiniCError> {
        self.binary_level(&["<", ">", "<=", ">="], Self::additive)
    }

    fn additive(&mut self) -> Result<Expr, MiniCError> {
        self.binary_level(&["+", "-"], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<Expr, MiniCError> {
        self.binary_level(&["*", "/", "%"], Self::unary)
    }

    fn unary(&mut self) -> Result<Expr, MiniCError> {
        let op = match self.peek() {
            Some(t) if t.is("-") => UnaryOp::Neg,
            Some(t) if t.is("!") => UnaryOp::Not,
            _ => return self.postfix(),
        };
        let offset = self.bump().offset;
        self.enter()?;
        let operand = Box::new(self.unary()?);
        self.leave();
        Ok(Expr {
            kind: ExprKind::Unary { op, operand },
            offset,
        })
    }

    fn postfix(&mut self) -> Result<Expr, MiniCError> {
        let mut e = self.primary()?;
        loop {
            if self.at("[") {
                let bracket = self.bump().offset;
                let slot = match e.kind {
                    ExprKind::Var(slot) if self.vars[slot].array_len.is_some() => slot,
                    _ => return Self::semantic(bracket, "subscripted value is not an array"),
                };
                let index = self.expr()?;
                self.expect("]")?;
                e = Expr {
                    kind: ExprKind::Index(slot, Box::new(index)),
                    offset: e.offset,
                };
            } else if self.at("++") || self.at("--") {
                let t = self.bump();
                let offset = e.offset;
                let lv = match to_lvalue(e.kind) {
                    Some(lv) => lv,
                    None => return Self::semantic(t.offset, format!("operand of {} is not assignable", t.lexeme)),
                };
                let kind = if t.lexeme == "++" {
                    ExprKind::PostIncrement(lv)
                } else {
                    ExprKind::PostDecrement(lv)
                };
                e = Expr { kind, offset };
            } else {
                break;
            }
        }
        if let ExprKind::Var(slot) = e.kind {
            if self.vars[slot].array_len.is_some() {
                return Self::semantic(e.offset, format!("array '{}' used as a value", self.vars[slot].name));
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, MiniCError> {
        let Some(t) = self.peek() else {
            return self.unexpected(&["expression"]);
        };
        let offset = t.offset;
        match t.kind {
            TokenKind::IntLiteral => {
                self.pos += 1;
                Ok(Expr {
                    kind: ExprKind::Int(t.lexeme.parse().expect("lexer validated literal")),
                    offset,
                })
            }
            TokenKind::Identifier
                if (t.lexeme == "scanf" || t.lexeme == "printf")
                    && self.peek_at(1).is_some_and(|n| n.is("(")) =>
            {
                self.call()
            }
            TokenKind::Identifier => {
                self.pos += 1;
                match self.resolve(&t.lexeme) {
                    Some(slot) => Ok(Expr {
                        kind: ExprKind::Var(slot),
                        offset,
                    }),
                    None => Self::semantic(offset, format!("undeclared identifier '{}'", t.lexeme)),
                }
            }
            _ if t.is("(") => {
                self.pos += 1;
                self.enter()?;
                let e = self.expr()?;
                self.leave();
                self.expect(")")?;
                Ok(e)
            }
            _ => self.unexpected(&["expression"]),
        }
    }

    fn resolve(&self, name: &str) -> Option<Slot> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn call(&mut self) -> Result<Expr, MiniCError> {
        let name = self.bump();
        let offset = name.offset;
        self.expect("(")?;
        let fmt_tok = match self.peek() {
            Some(t) if t.kind == TokenKind::StringLiteral => self.bump(),
            _ => return self.unexpected(&["string literal"]),
        };
        let text = unescape(&fmt_tok.lexeme[1..fmt_tok.lexeme.len() - 1])
            .map_err(|m| MiniCError::Semantic {
                offset: fmt_tok.offset,
                message: m,
            })?;
        let kind = if name.lexeme == "scanf" {
            let conversions = scanf_conversions(&text).map_err(|m| MiniCError::Semantic {
                offset: fmt_tok.offset,
                message: m,
            })?;
            let mut args = Vec::new();
            while self.eat(",") {
                self.expect("&")?;
                let target = self.postfix()?;
                let target_offset = target.offset;
                match to_lvalue(target.kind) {
                    Some(lv) => args.push(lv),
                    None => return Self::semantic(target_offset, "scanf argument is not assignable"),
                }
            }
            if args.len() != conversions {
                return Self::semantic(
                    offset,
                    format!("scanf format has {conversions} conversions but {} arguments", args.len()),
                );
            }
            ExprKind::Scanf { conversions, args }
        } else {
            let format = printf_pieces(&text).map_err(|m| MiniCError::Semantic {
                offset: fmt_tok.offset,
                message: m,
            })?;
            let mut args = Vec::new();
            while self.eat(",") {
                args.push(self.assignment()?);
            }
            let wanted = format.iter().filter(|p| **p == FormatPiece::Int).count();
            if args.len() != wanted {
                return Self::semantic(
                    offset,
                    format!("printf format has {wanted} conversions but {} arguments", args.len()),
                );
            }
            ExprKind::Printf { format, args }
        };
        self.expect(")")?;
        Ok(Expr { kind, offset })
    }
}

fn to_lvalue(kind: ExprKind) -> Option<LValue> {
    match kind {
        ExprKind::Var(slot) => Some(LValue::Var(slot)),
        ExprKind::Index(slot, index) => Some(LValue::Index(slot, index)),
        _ => None,
    }
}

fn unescape(raw: &str) -> Result<String, String> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('\\') => out.push('\\'),
            Some('"') => out.push('"'),
            Some('\'') => out.push('\''),
            Some(other) => return Err(format!("unsupported escape '\\{other}'")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

fn printf_pieces(text: &str) -> Result<Vec<FormatPiece>, String> {
    let mut pieces = Vec::new();
    let mut lit = String::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            lit.push(c);
            continue;
        }
        match chars.next() {
            Some('d') => {
                if !lit.is_empty() {
                    pieces.push(FormatPiece::Text(std::mem::take(&mut lit)));
                }
                pieces.push(FormatPiece::Int);
            }
            Some('%') => lit.push('%'),
            Some(other) => return Err(format!("unsupported conversion '%{other}'")),
            None => return Err("incomplete conversion at end of format".into()),
        }
    }
    if !lit.is_empty() {
        pieces.push(FormatPiece::Text(lit));
    }
    Ok(pieces)
}

fn scanf_conversions(text: &str) -> Result<usize, String> {
    let mut n = 0;
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            '%' => match chars.next() {
                Some('d') => n += 1,
                Some(other) => return Err(format!("unsupported scanf conversion '%{other}'")),
                None => return Err("incomplete conversion at end of format".into()),
            },
            c if c.is_whitespace() => {}
            other => return Err(format!("unsupported literal {other:?} in scanf format")),
        }
    }
    Ok(n)
}
