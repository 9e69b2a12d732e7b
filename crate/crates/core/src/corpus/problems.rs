//! The four problems and their program templates.

use super::render::{bare, braced, line, render_program, Body, Brace, Else, Indent, Node, Spacing, Style};
use super::TestCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// Largest and second largest of n numbers, printed `max max2`.
    MaxSecondMax,
    Sum,
    Min,
    /// The n numbers in reverse order, one per line.
    Reverse,
    /// Sum of two numbers; only used by the tiny overfitting corpus.
    Add,
}

/// Which variation axes the forge composes. A disabled axis stays at its
/// first value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Axes {
    pub identifiers: bool,
    pub loop_bound: bool,
    pub structure: bool,
    pub declarations: bool,
    pub style: bool,
    pub main_kind: bool,
}

impl Axes {
    pub const ALL: Axes = Axes {
        identifiers: true,
        loop_bound: true,
        structure: true,
        declarations: true,
        style: true,
        main_kind: true,
    };
    pub const NONE: Axes = Axes {
        identifiers: false,
        loop_bound: false,
        structure: false,
        declarations: false,
        style: false,
        main_kind: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoopBound {
    /// `i < n`
    Less,
    /// `i <= n - 1`
    LessEqualMinusOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeclPlacement {
    /// Everything declared at the top of `main`.
    Top,
    /// The problem's own variables on one line, `int n, i;` on the next.
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MainKind {
    IntReturnZero,
    Void,
}

/// One point in a problem's variation space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub names: usize,
    pub bound: LoopBound,
    pub structure: usize,
    pub decl: DeclPlacement,
    pub style: Style,
    pub main: MainKind,
}

impl Default for Variant {
    fn default() -> Self {
        Self {
            names: 0,
            bound: LoopBound::Less,
            structure: 0,
            decl: DeclPlacement::Top,
            style: Style::default(),
            main: MainKind::IntReturnZero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub problem_id: String,
    /// Comment phrasings; the first is the canonical prompt.
    pub comments: Vec<String>,
    pub input_format: String,
    pub output_format: String,
    pub tests: Vec<TestCase>,
    pub axes: Axes,
    pub kind: ProblemKind,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind) -> Self {
        let (id, comments, input, output): (&str, [&str; 2], &str, &str) = match kind {
            ProblemKind::MaxSecondMax => (
                "max2",
                [
                    "find the maximum and second maximum numbers",
                    "read n numbers and find the maximum and second maximum numbers",
                ],
                "n (2 <= n <= 100) followed by n integers",
                "the largest and second largest value separated by a space",
            ),
            ProblemKind::Sum => (
                "sum",
                ["compute the sum of n numbers", "read n numbers and print their sum"],
                "n (1 <= n <= 100) followed by n integers",
                "the sum",
            ),
            ProblemKind::Min => (
                "min",
                ["find the minimum of n numbers", "read n numbers and print the smallest one"],
                "n (1 <= n <= 100) followed by n integers",
                "the smallest value",
            ),
            ProblemKind::Reverse => (
                "reverse",
                [
                    "print n numbers in reverse order",
                    "read n numbers and print them backwards",
                ],
                "n (1 <= n <= 100) followed by n integers",
                "the integers in reverse order, one per line",
            ),
            ProblemKind::Add => (
                "add",
                ["add two numbers", "read two numbers and print their sum"],
                "two integers",
                "their sum",
            ),
        };
        let inputs: &[&[i64]] = match kind {
            ProblemKind::MaxSecondMax => &[
                &[3, 1, 4, 1, 5],
                &[1, 2],
                &[2, 1],
                &[7, 7, 2],
                &[-5, -2, -9, -1, -3, -4],
                &[10, 20, 20, 5],
                &[0, 0, 0, 0, 0, 0, 1],
            ],
            ProblemKind::Add => &[&[2, 3], &[-4, 10], &[0, 0], &[100, -1]],
            _ => &[
                &[1, 2, 3],
                &[-5],
                &[10, -3, 7, 0, 2],
                &[9, 8, 7, 6],
                &[-1, -5, 3, -5, 0, 100, 200],
            ],
        };
        let tests = inputs
            .iter()
            .map(|values| TestCase {
                problem_id: id.to_string(),
                stdin: match kind {
                    ProblemKind::Add => format!("{} {}\n", values[0], values[1]),
                    _ => format_input(values),
                },
                stdout: reference_output(kind, values),
            })
            .collect();
        Self {
            problem_id: id.to_string(),
            comments: comments.iter().map(|s| s.to_string()).collect(),
            input_format: input.to_string(),
            output_format: output.to_string(),
            tests,
            axes: Axes::ALL,
            kind,
        }
    }

    /// Every variant of enabled axes, in enumeration order.
    pub fn variants(&self) -> Vec<Variant> {
        fn pick<T: Copy>(on: bool, all: &[T]) -> Vec<T> {
            if on {
                all.to_vec()
            } else {
                all[..1].to_vec()
            }
        }
        let a = self.axes;
        let structures: Vec<usize> = pick(a.structure, &[0, 1, 2]);
        let names: Vec<usize> = pick(a.identifiers, &[0, 1]);
        let bounds = pick(a.loop_bound, &[LoopBound::Less, LoopBound::LessEqualMinusOne]);
        let decls = pick(a.declarations, &[DeclPlacement::Top, DeclPlacement::Separate]);
        let mains = pick(a.main_kind, &[MainKind::IntReturnZero, MainKind::Void]);
        let indents = pick(a.style, &[Indent::Four, Indent::Two, Indent::Tab]);
        let braces = pick(a.style, &Brace::ALL);
        let spacings = pick(a.style, &Spacing::ALL);

        let mut out = Vec::new();
        for &structure in &structures {
            for &names in &names {
                for &bound in &bounds {
                    for &decl in &decls {
                        for &main in &mains {
                            for &indent in &indents {
                                for &brace in &braces {
                                    for &spacing in &spacings {
                                        out.push(Variant {
                                            names,
                                            bound,
                                            structure,
                                            decl,
                                            style: Style {
                                                indent,
                                                brace,
                                                spacing,
                                            },
                                            main,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn render(&self, v: &Variant) -> String {
        let t = Template::new(self.kind, v);
        let mut body = t.body();
        let head = match v.main {
            MainKind::IntReturnZero => {
                body.push(line("return 0;"));
                "int main()"
            }
            MainKind::Void => "void main()",
        };
        rename(&render_program(head, &body, v.style), length_and_counter(self.kind))
    }

    /// The first variant, used as the problem's reference program.
    pub fn reference_program(&self) -> String {
        self.render(&Variant::default())
    }
}

/// The four problems in corpus order.
pub fn standard_problems() -> Vec<ProblemSpec> {
    [
        ProblemKind::MaxSecondMax,
        ProblemKind::Sum,
        ProblemKind::Min,
        ProblemKind::Reverse,
    ]
    .into_iter()
    .map(ProblemSpec::new)
    .collect()
}

pub fn format_input(values: &[i64]) -> String {
    let body: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("{}\n{}\n", values.len(), body.join(" "))
}

/// Expected stdout computed directly, independent of any template.
pub fn reference_output(kind: ProblemKind, values: &[i64]) -> String {
    match kind {
        ProblemKind::MaxSecondMax => {
            let mut sorted = values.to_vec();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            format!("{} {}\n", sorted[0], sorted[1])
        }
        ProblemKind::Sum | ProblemKind::Add => format!("{}\n", values.iter().sum::<i64>()),
        ProblemKind::Min => format!("{}\n", values.iter().min().expect("n >= 1")),
        ProblemKind::Reverse => values.iter().rev().map(|v| format!("{v}\n")).collect(),
    }
}

/// Each problem spells the element count and the main loop counter its own
/// way, so the shared read-the-input prefix already says which problem it is.
fn length_and_counter(kind: ProblemKind) -> &'static [(&'static str, &'static str)] {
    match kind {
        ProblemKind::Sum => &[("n", "N"), ("i", "k")],
        ProblemKind::Min => &[("n", "len"), ("i", "idx")],
        ProblemKind::Reverse => &[("n", "size"), ("i", "r")],
        ProblemKind::MaxSecondMax | ProblemKind::Add => &[],
    }
}

/// Replaces whole identifiers outside string literals.
fn rename(code: &str, map: &[(&str, &str)]) -> String {
    if map.is_empty() {
        return code.to_string();
    }
    let mut out = String::with_capacity(code.len() + 32);
    let mut chars = code.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '"' {
            out.push(c);
            while let Some(d) = chars.next() {
                out.push(d);
                if d == '\\' {
                    out.extend(chars.next());
                } else if d == '"' {
                    break;
                }
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::from(c);
            while let Some(&d) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                word.push(d);
                chars.next();
            }
            match map.iter().find(|(from, _)| *from == word) {
                Some((_, to)) => out.push_str(to),
                None => out.push_str(&word),
            }
        } else {
            out.push(c);
        }
    }
    out
}

struct Names {
    arr: &'static str,
    acc: &'static str,
    acc2: &'static str,
    x: &'static str,
    t: &'static str,
}

/// Scheme 0 uses short names and scheme 1 long ones; a program never mixes them.
fn names(kind: ProblemKind, k: usize) -> Names {
    let mut n = Names {
        arr: "a",
        acc: "s",
        acc2: "",
        x: "x",
        t: "t",
    };
    match kind {
        ProblemKind::MaxSecondMax => {
            n.arr = ["a", "arr"][k];
            n.acc = ["max1", "max"][k];
            n.acc2 = "max2";
        }
        ProblemKind::Sum => {
            n.arr = "num";
            n.acc = ["s", "sum"][k];
            n.x = ["x", "v"][k];
        }
        ProblemKind::Min => {
            n.arr = "b";
            n.acc = ["m", "min"][k];
            n.x = ["y", "val"][k];
        }
        ProblemKind::Reverse => {
            n.arr = ["c", "data"][k];
            n.t = ["tmp", "w"][k];
        }
        ProblemKind::Add => {
            n.arr = ["a", "x"][k];
            n.x = ["b", "y"][k];
            n.acc = ["s", "sum"][k];
        }
    }
    n
}

struct Template<'a> {
    kind: ProblemKind,
    v: &'a Variant,
    n: Names,
}

impl<'a> Template<'a> {
    fn new(kind: ProblemKind, v: &'a Variant) -> Self {
        Self {
            kind,
            v,
            n: names(kind, v.names),
        }
    }

    /// `var < base - minus`, or the equivalent `<=` form.
    fn upper(&self, var: &str, base: &str, minus: i64) -> String {
        match (self.v.bound, minus) {
            (LoopBound::Less, 0) => format!("{var} < {base}"),
            (LoopBound::Less, m) => format!("{var} < {base} - {m}"),
            (LoopBound::LessEqualMinusOne, m) => format!("{var} <= {base} - {}", m + 1),
        }
    }

    /// `var >= 0`, or the equivalent `var > -1`.
    fn lower(&self, var: &str) -> String {
        match self.v.bound {
            LoopBound::Less => format!("{var} >= 0"),
            LoopBound::LessEqualMinusOne => format!("{var} > -1"),
        }
    }

    fn for_up(&self, var: &str, start: &str, cond: String) -> String {
        format!("for ({var} = {start}; {cond}; {var}++)")
    }

    /// The declaration at the top of `main`: the problem's own variables
    /// first, then `n` and the counters. [`Template::body`] splits it for
    /// [`DeclPlacement::Separate`].
    fn decl(&self, counters: &[&str], rest: &[String]) -> Node {
        let mut items: Vec<String> = rest[1..].to_vec();
        items.push(rest[0].clone());
        items.extend(counters.iter().map(|s| s.to_string()));
        line(format!("int {};", items.join(", ")))
    }

    fn scan(&self, target: &str) -> Node {
        line(format!("scanf(\"%d\", &{target});"))
    }

    fn read_array(&self) -> Node {
        let a = self.n.arr;
        bare(
            self.for_up("i", "0", self.upper("i", "n", 0)),
            self.scan(&format!("{a}[i]")),
        )
    }

    fn body(self) -> Vec<Node> {
        let s = self.v.structure;
        let mut nodes = match self.kind {
            ProblemKind::MaxSecondMax => self.max2(s),
            ProblemKind::Sum => self.sum(s),
            ProblemKind::Min => self.min(s),
            ProblemKind::Reverse => self.reverse(s),
            ProblemKind::Add => self.add(s),
        };
        // Bodies open with `int ..., n, i;`.
        if self.v.decl == DeclPlacement::Separate {
            if let Some(Node::Line(text)) = nodes.first().cloned() {
                if let Some(k) = text.find(", n,").or_else(|| text.find(", n;")) {
                    nodes[0] = line(format!("{};", &text[..k]));
                    nodes.insert(1, line(format!("int {}", &text[k + 2..])));
                }
            }
        }
        nodes
    }

    fn max2(&self, structure: usize) -> Vec<Node> {
        let (a, m1, m2, t) = (self.n.arr, self.n.acc, self.n.acc2, self.n.t);
        let arr = format!("{a}[100]");
        let print = |x: &str, y: &str| line(format!("printf(\"%d %d\\n\", {x}, {y});"));
        match structure {
            // Two passes: locate the maximum, then the best of the rest.
            0 => vec![
                self.decl(&["i"], &["n".into(), arr, m1.into(), m2.into(), "p".into()]),
                self.scan("n"),
                self.read_array(),
                line("p = 0;"),
                bare(
                    self.for_up("i", "1", self.upper("i", "n", 0)),
                    Node::If {
                        head: format!("if ({a}[i] > {a}[p])"),
                        then: Body::Bare(Box::new(line("p = i;"))),
                        els: None,
                    },
                ),
                line(format!("{m1} = {a}[p];")),
                Node::If {
                    head: "if (p == 0)".into(),
                    then: Body::Bare(Box::new(line(format!("{m2} = {a}[1];")))),
                    els: Some(Else::Body(Body::Bare(Box::new(line(format!("{m2} = {a}[0];")))))),
                },
                bare(
                    self.for_up("i", "0", self.upper("i", "n", 0)),
                    Node::If {
                        head: format!("if (i != p && {a}[i] > {m2})"),
                        then: Body::Bare(Box::new(line(format!("{m2} = {a}[i];")))),
                        els: None,
                    },
                ),
                print(m1, m2),
            ],
            // One pass keeping the two best so far.
            1 => vec![
                self.decl(&["i"], &["n".into(), arr, m1.into(), m2.into(), t.into()]),
                self.scan("n"),
                self.read_array(),
                line(format!("{m1} = {a}[0];")),
                line(format!("{m2} = {a}[1];")),
                Node::If {
                    head: format!("if ({m2} > {m1})"),
                    then: Body::Braced(vec![
                        line(format!("{t} = {m1};")),
                        line(format!("{m1} = {m2};")),
                        line(format!("{m2} = {t};")),
                    ]),
                    els: None,
                },
                braced(
                    self.for_up("i", "2", self.upper("i", "n", 0)),
                    vec![Node::If {
                        head: format!("if ({a}[i] > {m1})"),
                        then: Body::Braced(vec![
                            line(format!("{m2} = {m1};")),
                            line(format!("{m1} = {a}[i];")),
                        ]),
                        els: Some(Else::If(Box::new(Node::If {
                            head: format!("if ({a}[i] > {m2})"),
                            then: Body::Bare(Box::new(line(format!("{m2} = {a}[i];")))),
                            els: None,
                        }))),
                    }],
                ),
                print(m1, m2),
            ],
            // Bubble sort descending, then the first two.
            _ => vec![
                self.decl(&["i", "j"], &["n".into(), arr, t.into()]),
                self.scan("n"),
                self.read_array(),
                bare(
                    self.for_up("i", "0", self.upper("i", "n", 1)),
                    bare(
                        self.for_up("j", "0", self.upper("j", "n - i", 1)),
                        Node::If {
                            head: format!("if ({a}[j] < {a}[j + 1])"),
                            then: Body::Braced(vec![
                                line(format!("{t} = {a}[j];")),
                                line(format!("{a}[j] = {a}[j + 1];")),
                                line(format!("{a}[j + 1] = {t};")),
                            ]),
                            els: None,
                        },
                    ),
                ),
                print(&format!("{a}[0]"), &format!("{a}[1]")),
            ],
        }
    }

    fn sum(&self, structure: usize) -> Vec<Node> {
        let (s, x, a) = (self.n.acc, self.n.x, self.n.arr);
        let print = line(format!("printf(\"%d\\n\", {s});"));
        match structure {
            0 => {
                        vec![
                    self.decl(&["i"], &["n".into(), x.into(), format!("{s} = 0")]),
                    self.scan("n"),
                    braced(
                        self.for_up("i", "0", self.upper("i", "n", 0)),
                        vec![self.scan(x), line(format!("{s} += {x};"))],
                    ),
                    print,
                ]
            }
            1 => vec![
                self.decl(&[], &["n".into(), x.into(), format!("{s} = 0")]),
                self.scan("n"),
                braced(
                    match self.v.bound {
                        LoopBound::Less => "while (n--)",
                        LoopBound::LessEqualMinusOne => "while (n-- > 0)",
                    },
                    vec![self.scan(x), line(format!("{s} += {x};"))],
                ),
                print,
            ],
            _ => {
                        vec![
                    self.decl(&["i"], &["n".into(), format!("{a}[100]"), format!("{s} = 0")]),
                    self.scan("n"),
                    self.read_array(),
                    bare(
                        self.for_up("i", "0", self.upper("i", "n", 0)),
                        line(format!("{s} = {s} + {a}[i];")),
                    ),
                    print,
                ]
            }
        }
    }

    fn min(&self, structure: usize) -> Vec<Node> {
        let (m, x, a) = (self.n.acc, self.n.x, self.n.arr);
        let print = line(format!("printf(\"%d\\n\", {m});"));
        match structure {
            // First value read separately.
            0 => vec![
                self.decl(&["i"], &["n".into(), x.into(), m.into()]),
                self.scan("n"),
                self.scan(m),
                braced(
                    self.for_up("i", "1", self.upper("i", "n", 0)),
                    vec![
                        self.scan(x),
                        Node::If {
                            head: format!("if ({x} < {m})"),
                            then: Body::Bare(Box::new(line(format!("{m} = {x};")))),
                            els: None,
                        },
                    ],
                ),
                print,
            ],
            1 => vec![
                self.decl(&["i"], &["n".into(), format!("{a}[100]"), m.into()]),
                self.scan("n"),
                self.read_array(),
                line(format!("{m} = {a}[0];")),
                bare(
                    self.for_up("i", "1", self.upper("i", "n", 0)),
                    Node::If {
                        head: format!("if ({a}[i] < {m})"),
                        then: Body::Bare(Box::new(line(format!("{m} = {a}[i];")))),
                        els: None,
                    },
                ),
                print,
            ],
            // Take the first value inside the loop.
            _ => vec![
                self.decl(&["i"], &["n".into(), x.into(), format!("{m} = 0")]),
                self.scan("n"),
                braced(
                    self.for_up("i", "0", self.upper("i", "n", 0)),
                    vec![
                        self.scan(x),
                        Node::If {
                            head: format!("if (i == 0 || {x} < {m})"),
                            then: Body::Bare(Box::new(line(format!("{m} = {x};")))),
                            els: None,
                        },
                    ],
                ),
                print,
            ],
        }
    }

    fn add(&self, structure: usize) -> Vec<Node> {
        let (a, b, s) = (self.n.arr, self.n.x, self.n.acc);
        match structure {
            0 => vec![
                line(format!("int {a}, {b};")),
                line(format!("scanf(\"%d %d\", &{a}, &{b});")),
                line(format!("printf(\"%d\\n\", {a} + {b});")),
            ],
            1 => vec![
                line(format!("int {a}, {b}, {s};")),
                line(format!("scanf(\"%d%d\", &{a}, &{b});")),
                line(format!("{s} = {a} + {b};")),
                line(format!("printf(\"%d\\n\", {s});")),
            ],
            _ => vec![
                line(format!("int {a}, {b};")),
                self.scan(a),
                self.scan(b),
                line(format!("printf(\"%d\\n\", {a} + {b});")),
            ],
        }
    }

    fn reverse(&self, structure: usize) -> Vec<Node> {
        let (a, t) = (self.n.arr, self.n.t);
        let arr = format!("{a}[100]");
        let print_at = |idx: &str| line(format!("printf(\"%d\\n\", {a}[{idx}]);"));
        match structure {
            0 => {
                        vec![
                    self.decl(&["i"], &["n".into(), arr]),
                    self.scan("n"),
                    self.read_array(),
                    bare(
                        format!("for (i = n - 1; {}; i--)", self.lower("i")),
                        print_at("i"),
                    ),
                ]
            }
            // Swap in place, then print forwards.
            1 => {
                        vec![
                    self.decl(&["i"], &["n".into(), arr, t.into()]),
                    self.scan("n"),
                    self.read_array(),
                    braced(
                        self.for_up("i", "0", self.upper("i", "n / 2", 0)),
                        vec![
                            line(format!("{t} = {a}[i];")),
                            line(format!("{a}[i] = {a}[n - 1 - i];")),
                            line(format!("{a}[n - 1 - i] = {t};")),
                        ],
                    ),
                    bare(self.for_up("i", "0", self.upper("i", "n", 0)), print_at("i")),
                ]
            }
            _ => vec![
                self.decl(&["i"], &["n".into(), arr]),
                self.scan("n"),
                self.read_array(),
                line("i = n - 1;"),
                braced(
                    format!("while ({})", self.lower("i")),
                    vec![print_at("i"), line("i--;")],
                ),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::{run_source, RunStatus, DEFAULT_STEP_LIMIT};

    fn passes(spec: &ProblemSpec, code: &str) -> bool {
        spec.tests.iter().all(|t| {
            let out = run_source(code, &t.stdin, DEFAULT_STEP_LIMIT).unwrap();
            out.status == RunStatus::Ok && out.stdout == t.stdout
        })
    }

    #[test]
    fn first_problem_reference_example() {
        let spec = ProblemSpec::new(ProblemKind::MaxSecondMax);
        assert!(spec.comments[0].contains("find the maximum and second maximum numbers"));
        let out = run_source(&spec.reference_program(), "5\n3 1 4 1 5", 10_000).unwrap();
        assert_eq!(out.stdout, "5 4\n");
    }

    #[test]
    fn reference_outputs() {
        assert_eq!(reference_output(ProblemKind::MaxSecondMax, &[3, 1, 4, 1, 5]), "5 4\n");
        assert_eq!(reference_output(ProblemKind::MaxSecondMax, &[7, 7, 2]), "7 7\n");
        assert_eq!(reference_output(ProblemKind::Sum, &[1, 2, 3]), "6\n");
        assert_eq!(reference_output(ProblemKind::Min, &[4, -2, 8]), "-2\n");
        assert_eq!(reference_output(ProblemKind::Reverse, &[1, 2, 3]), "3\n2\n1\n");
        assert_eq!(format_input(&[3, 1]), "2\n3 1\n");
    }

    #[test]
    fn every_variant_passes_its_tests() {
        for spec in standard_problems()
            .into_iter()
            .chain([ProblemSpec::new(ProblemKind::Add)])
        {
            for v in spec.variants() {
                let code = spec.render(&v);
                assert!(passes(&spec, &code), "{} {v:?}\n{code}", spec.problem_id);
            }
        }
    }

    #[test]
    fn bound_variants_differ_only_in_the_comparison() {
        let spec = ProblemSpec::new(ProblemKind::MaxSecondMax);
        let lt = spec.render(&Variant::default());
        let le = spec.render(&Variant {
            bound: LoopBound::LessEqualMinusOne,
            ..Variant::default()
        });
        assert!(lt.contains("i < n;"));
        assert!(le.contains("i <= n - 1;"));
        assert_eq!(lt.replace("i < n;", "i <= n - 1;"), le);
    }

    #[test]
    fn disabled_axes_collapse_to_one_variant() {
        let mut spec = ProblemSpec::new(ProblemKind::Sum);
        spec.axes = Axes::NONE;
        assert_eq!(spec.variants(), vec![Variant::default()]);
    }
}
