//! Layout of generated programs: a small statement tree printed under a
//! chosen indentation, brace placement and operator spacing.

use crate::minic::{lex, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Indent {
    Two,
    Four,
    Tab,
}

impl Indent {
    pub const ALL: [Indent; 3] = [Indent::Two, Indent::Four, Indent::Tab];

    fn unit(self) -> &'static str {
        match self {
            Indent::Two => "  ",
            Indent::Four => "    ",
            Indent::Tab => "\t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Brace {
    SameLine,
    NextLine,
}

impl Brace {
    pub const ALL: [Brace; 2] = [Brace::SameLine, Brace::NextLine];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spacing {
    /// `for (i = 0; i < n; i++) {`
    Spaced,
    /// `for(i=0;i<n;i++){`
    Tight,
}

impl Spacing {
    pub const ALL: [Spacing; 2] = [Spacing::Spaced, Spacing::Tight];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Style {
    pub indent: Indent,
    pub brace: Brace,
    pub spacing: Spacing,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            indent: Indent::Four,
            brace: Brace::SameLine,
            spacing: Spacing::Spaced,
        }
    }
}

/// Body of a compound statement.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Braced(Vec<Node>),
    Bare(Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Else {
    Body(Body),
    /// `else if (...)`
    If(Box<Node>),
}

/// Statement tree. Text is written in spaced form; [`Spacing::Tight`] is
/// derived by re-joining tokens.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Line(String),
    /// `head` followed by a body, e.g. `for (...)` or `while (...)`.
    Compound { head: String, body: Body },
    If {
        head: String,
        then: Body,
        els: Option<Else>,
    },
}

pub fn line(s: impl Into<String>) -> Node {
    Node::Line(s.into())
}

pub fn braced(head: impl Into<String>, body: Vec<Node>) -> Node {
    Node::Compound {
        head: head.into(),
        body: Body::Braced(body),
    }
}

pub fn bare(head: impl Into<String>, body: Node) -> Node {
    Node::Compound {
        head: head.into(),
        body: Body::Bare(Box::new(body)),
    }
}

/// Joins tokens with a space only where two word-like tokens meet.
fn tighten(text: &str) -> String {
    let tokens = lex(text).expect("templates are valid mini-C fragments");
    let mut out = String::with_capacity(text.len());
    let mut prev_word = false;
    for t in tokens {
        let word = matches!(
            t.kind,
            TokenKind::Keyword | TokenKind::Identifier | TokenKind::IntLiteral
        );
        if prev_word && word {
            out.push(' ');
        }
        out.push_str(&t.lexeme);
        prev_word = word;
    }
    out
}

struct Printer {
    style: Style,
    out: String,
}

impl Printer {
    fn text(&self, s: &str) -> String {
        match self.style.spacing {
            Spacing::Spaced => s.to_string(),
            Spacing::Tight => tighten(s),
        }
    }

    fn open_suffix(&self) -> &'static str {
        match self.style.spacing {
            Spacing::Spaced => " {",
            Spacing::Tight => "{",
        }
    }

    fn emit(&mut self, depth: usize, s: &str) {
        for _ in 0..depth {
            self.out.push_str(self.style.indent.unit());
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    /// Prints `head` and opens a braced body.
    fn open(&mut self, depth: usize, head: &str) {
        match self.style.brace {
            Brace::SameLine => {
                let s = format!("{head}{}", self.open_suffix());
                self.emit(depth, &s);
            }
            Brace::NextLine => {
                self.emit(depth, head);
                self.emit(depth, "{");
            }
        }
    }

    fn node(&mut self, depth: usize, n: &Node) {
        match n {
            Node::Line(s) => {
                let s = self.text(s);
                self.emit(depth, &s);
            }
            Node::Compound { head, body } => {
                let head = self.text(head);
                self.body(depth, &head, body);
                if matches!(body, Body::Braced(_)) {
                    self.emit(depth, "}");
                }
            }
            Node::If { head, then, els } => self.if_chain(depth, head, then, els.as_ref()),
        }
    }

    /// Prints `head` + body, leaving a braced body's `}` unprinted.
    fn body(&mut self, depth: usize, head: &str, body: &Body) {
        match body {
            Body::Braced(items) => {
                self.open(depth, head);
                for item in items {
                    self.node(depth + 1, item);
                }
            }
            Body::Bare(inner) => {
                self.emit(depth, head);
                self.node(depth + 1, inner);
            }
        }
    }

    fn if_chain(&mut self, depth: usize, head: &str, then: &Body, els: Option<&Else>) {
        let head = self.text(head);
        self.body(depth, &head, then);
        let then_braced = matches!(then, Body::Braced(_));
        let Some(els) = els else {
            if then_braced {
                self.emit(depth, "}");
            }
            return;
        };
        // `} else` on one line only for same-line braces after a braced body.
        let prefix = if then_braced {
            match self.style.brace {
                Brace::SameLine => match self.style.spacing {
                    Spacing::Spaced => "} else",
                    Spacing::Tight => "}else",
                },
                Brace::NextLine => {
                    self.emit(depth, "}");
                    "else"
                }
            }
        } else {
            "else"
        };
        match els {
            Else::Body(body) => {
                self.body(depth, prefix, body);
                if matches!(body, Body::Braced(_)) {
                    self.emit(depth, "}");
                }
            }
            Else::If(node) => match node.as_ref() {
                Node::If { head, then, els } => {
                    let chained = format!("{prefix} {head}");
                    self.if_chain(depth, &chained, then, els.as_ref());
                }
                other => {
                    self.emit(depth, prefix);
                    self.node(depth + 1, other);
                }
            },
        }
    }
}

/// Renders `head` (e.g. `int main()`) around `body` as a complete program.
pub fn render_program(head: &str, body: &[Node], style: Style) -> String {
    let mut p = Printer {
        style,
        out: String::new(),
    };
    p.node(0, &braced(head, body.to_vec()));
    p.out
}
