//! Expression language for function bodies and modulating maps.
//!
//! Two variable sets exist. Function bodies are written over `x1..xn`;
//! modulating maps are written over two points `u1..un`, `v1..vn` and the
//! parameter `s`. The grammar (precedence low to high):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?          // right-associative
//! atom   := number | 'e' | variable | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `exp`, `log`, `abs`, `sqrt` take one argument; `max` and `min` take two or
//! more. Number literals are plain decimals; the named constant `e` covers the
//! exponential base. ASTs are immutable after parsing and evaluation is pure,
//! so values can be shared freely across threads.

mod eval;
mod lexer;
mod parser;

pub use eval::{DualEval, EvalError};

use std::fmt;
use thiserror::Error;

/// Which variable set an expression is written over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarSet {
    /// Function body over `x1..xn`.
    Function,
    /// Modulating map over `u1..un`, `v1..vn`, `s`.
    ModMap,
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarSet::Function => write!(f, "function"),
            VarSet::ModMap => write!(f, "modulating-map"),
        }
    }
}

/// Variable reference; indices are 0-based internally, printed 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Var {
    X(u32),
    U(u32),
    V(u32),
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum UnaryOp {
    Neg,
    Exp,
    Log,
    Abs,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NaryOp {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, u32),
    Binary(BinOp, u32, u32),
    Nary(NaryOp, Box<[u32]>),
}

/// Immutable expression tree stored as an arena; the root is the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    nodes: Vec<Node>,
    /// 1-based source position per node; 0 for synthesized nodes.
    spans: Vec<u32>,
    dim: usize,
    var_set: VarSet,
}

/// Parse failure. `position` is the 1-based character position.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable `{name}` at position {pos} exceeds dimension {dim}")]
    VariableOutOfRange {
        pos: usize,
        name: String,
        dim: usize,
    },
    #[error("variable `{name}` at position {pos} is not part of the {expected} variable set")]
    WrongVariableSet {
        pos: usize,
        name: String,
        expected: VarSet,
    },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::VariableOutOfRange { pos, .. }
            | ParseError::WrongVariableSet { pos, .. } => *pos,
        }
    }
}

impl ExprAst {
    /// Parses `text` over the given variable set and dimension.
    pub fn parse(text: &str, dim: usize, var_set: VarSet) -> Result<Self, ParseError> {
        parser::parse(text, dim, var_set)
    }

    /// A constant expression of the requested shape.
    pub fn constant(value: f64, dim: usize, var_set: VarSet) -> Self {
        assert!(value.is_finite(), "constant expressions must be finite");
        ExprAst {
            nodes: vec![Node::Const(value)],
            spans: vec![0],
            dim,
            var_set,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn var_set(&self) -> VarSet {
        self.var_set
    }

    pub(crate) fn root(&self) -> u32 {
        (self.nodes.len() - 1) as u32
    }

    pub(crate) fn node(&self, id: u32) -> &Node {
        &self.nodes[id as usize]
    }

    pub(crate) fn span(&self, id: u32) -> usize {
        self.spans[id as usize] as usize
    }

    fn push(&mut self, node: Node, span: u32) -> u32 {
        self.nodes.push(node);
        self.spans.push(span);
        (self.nodes.len() - 1) as u32
    }

    /// Appends `other`'s arena onto `self`'s, returning the shifted root id.
    fn absorb(&mut self, other: &ExprAst) -> u32 {
        let offset = self.nodes.len() as u32;
        for node in &other.nodes {
            let shifted = match node {
                Node::Const(c) => Node::Const(*c),
                Node::Var(v) => Node::Var(*v),
                Node::Unary(op, a) => Node::Unary(*op, a + offset),
                Node::Binary(op, a, b) => Node::Binary(*op, a + offset, b + offset),
                Node::Nary(op, args) => Node::Nary(*op, args.iter().map(|a| a + offset).collect()),
            };
            self.nodes.push(shifted);
        }
        self.spans.extend_from_slice(&other.spans);
        offset + other.root()
    }

    /// `self + other`; both must share dimension and variable set.
    pub fn add(&self, other: &ExprAst) -> ExprAst {
        assert_eq!(self.dim, other.dim, "dimension mismatch in expression sum");
        assert_eq!(
            self.var_set, other.var_set,
            "variable-set mismatch in expression sum"
        );
        let mut out = self.clone();
        let left = out.root();
        let right = out.absorb(other);
        out.push(Node::Binary(BinOp::Add, left, right), 0);
        out
    }

    /// `c * self`.
    pub fn scale(&self, c: f64) -> ExprAst {
        assert!(c.is_finite(), "scale coefficient must be finite");
        let mut out = ExprAst {
            nodes: vec![Node::Const(c)],
            spans: vec![0],
            dim: self.dim,
            var_set: self.var_set,
        };
        let left = 0u32;
        let right = out.absorb(self);
        out.push(Node::Binary(BinOp::Mul, left, right), 0);
        out
    }

    /// Pointwise maximum of a non-empty family with equal shape.
    pub fn max_of(items: &[ExprAst]) -> ExprAst {
        Self::nary_of(NaryOp::Max, items)
    }

    /// Pointwise minimum of a non-empty family with equal shape.
    pub fn min_of(items: &[ExprAst]) -> ExprAst {
        Self::nary_of(NaryOp::Min, items)
    }

    fn nary_of(op: NaryOp, items: &[ExprAst]) -> ExprAst {
        assert!(!items.is_empty(), "empty expression family");
        if items.len() == 1 {
            return items[0].clone();
        }
        let mut out = ExprAst {
            nodes: Vec::new(),
            spans: Vec::new(),
            dim: items[0].dim,
            var_set: items[0].var_set,
        };
        let mut roots = Vec::with_capacity(items.len());
        for item in items {
            assert_eq!(item.dim, out.dim, "dimension mismatch in expression family");
            assert_eq!(
                item.var_set, out.var_set,
                "variable-set mismatch in expression family"
            );
            roots.push(out.absorb(item));
        }
        out.push(Node::Nary(op, roots.into()), 0);
        out
    }

    /// Renders the tree so that `parse(print(ast))` evaluates identically.
    pub fn print(&self) -> String {
        let mut s = String::new();
        self.write_node(&mut s, self.root());
        s
    }

    fn precedence(&self, id: u32) -> u8 {
        match self.node(id) {
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Unary(UnaryOp::Neg, _) => 3,
            Node::Binary(BinOp::Pow, ..) => 4,
            Node::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }

    fn write_node(&self, out: &mut String, id: u32) {
        match self.node(id) {
            Node::Const(c) => {
                if *c == std::f64::consts::E {
                    out.push('e');
                } else {
                    out.push_str(&format!("{c}"));
                }
            }
            Node::Var(v) => match v {
                Var::X(i) => out.push_str(&format!("x{}", i + 1)),
                Var::U(i) => out.push_str(&format!("u{}", i + 1)),
                Var::V(i) => out.push_str(&format!("v{}", i + 1)),
                Var::S => out.push('s'),
            },
            Node::Unary(UnaryOp::Neg, a) => {
                out.push('-');
                self.write_child(out, *a, 4);
            }
            Node::Unary(op, a) => {
                out.push_str(match op {
                    UnaryOp::Exp => "exp",
                    UnaryOp::Log => "log",
                    UnaryOp::Abs => "abs",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Neg => unreachable!(),
                });
                out.push('(');
                self.write_node(out, *a);
                out.push(')');
            }
            Node::Binary(op, a, b) => {
                let (sym, prec, left_min, right_min) = match op {
                    BinOp::Add => (" + ", 1, 1, 2),
                    BinOp::Sub => (" - ", 1, 1, 2),
                    BinOp::Mul => (" * ", 2, 2, 3),
                    BinOp::Div => (" / ", 2, 2, 3),
                    BinOp::Pow => ("^", 4, 5, 4),
                };
                let _ = prec;
                self.write_child(out, *a, left_min);
                out.push_str(sym);
                self.write_child(out, *b, right_min);
            }
            Node::Nary(op, args) => {
                out.push_str(match op {
                    NaryOp::Max => "max",
                    NaryOp::Min => "min",
                });
                out.push('(');
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    self.write_node(out, *a);
                }
                out.push(')');
            }
        }
    }

    fn write_child(&self, out: &mut String, id: u32, min_prec: u8) {
        if self.precedence(id) < min_prec {
            out.push('(');
            self.write_node(out, id);
            out.push(')');
        } else {
            self.write_node(out, id);
        }
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print())
    }
}
