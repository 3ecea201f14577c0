//! Recursive-descent parser producing the arena AST.

use super::lexer::{tokenize, Tok, Token};
use super::{BinOp, ExprAst, NaryOp, Node, ParseError, UnaryOp, Var, VarSet};

pub(super) fn parse(text: &str, dim: usize, var_set: VarSet) -> Result<ExprAst, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Syntax {
            pos: 1,
            msg: "empty expression".into(),
        });
    }
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        at: 0,
        ast: ExprAst {
            nodes: Vec::new(),
            spans: Vec::new(),
            dim,
            var_set,
        },
    };
    let root = p.expr()?;
    let end = p.peek().clone();
    if end.tok != Tok::Eof {
        return Err(ParseError::Syntax {
            pos: end.pos,
            msg: "unexpected trailing input".into(),
        });
    }
    debug_assert_eq!(root, p.ast.root());
    Ok(p.ast)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    ast: ExprAst,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn push(&mut self, node: Node, pos: usize) -> u32 {
        self.ast.nodes.push(node);
        self.ast.spans.push(pos as u32);
        (self.ast.nodes.len() - 1) as u32
    }

    fn expr(&mut self) -> Result<u32, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let (op, pos) = match self.peek() {
                Token {
                    tok: Tok::Plus,
                    pos,
                } => (BinOp::Add, *pos),
                Token {
                    tok: Tok::Minus,
                    pos,
                } => (BinOp::Sub, *pos),
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = self.push(Node::Binary(op, lhs, rhs), pos);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<u32, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let (op, pos) = match self.peek() {
                Token {
                    tok: Tok::Star,
                    pos,
                } => (BinOp::Mul, *pos),
                Token {
                    tok: Tok::Slash,
                    pos,
                } => (BinOp::Div, *pos),
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = self.push(Node::Binary(op, lhs, rhs), pos);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<u32, ParseError> {
        if let Token {
            tok: Tok::Minus,
            pos,
        } = self.peek()
        {
            let pos = *pos;
            self.bump();
            let inner = self.factor()?;
            // fold a negated literal so constant exponents stay constants
            if let Node::Const(c) = self.ast.nodes[inner as usize] {
                self.ast.nodes[inner as usize] = Node::Const(-c);
                return Ok(inner);
            }
            return Ok(self.push(Node::Unary(UnaryOp::Neg, inner), pos));
        }
        self.power()
    }

    fn power(&mut self) -> Result<u32, ParseError> {
        let base = self.atom()?;
        if let Token {
            tok: Tok::Caret,
            pos,
        } = self.peek()
        {
            let pos = *pos;
            self.bump();
            let exponent = self.factor()?;
            return Ok(self.push(Node::Binary(BinOp::Pow, base, exponent), pos));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<u32, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(self.push(Node::Const(v), t.pos)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(&name, t.pos),
            Tok::Eof => Err(ParseError::Syntax {
                pos: t.pos,
                msg: "unexpected end of input".into(),
            }),
            other => Err(ParseError::Syntax {
                pos: t.pos,
                msg: format!("unexpected token `{}`", tok_text(&other)),
            }),
        }
    }

    fn ident(&mut self, name: &str, pos: usize) -> Result<u32, ParseError> {
        match name {
            "e" => Ok(self.push(Node::Const(std::f64::consts::E), pos)),
            "exp" => self.unary_call(UnaryOp::Exp, name, pos),
            "log" => self.unary_call(UnaryOp::Log, name, pos),
            "abs" => self.unary_call(UnaryOp::Abs, name, pos),
            "sqrt" => self.unary_call(UnaryOp::Sqrt, name, pos),
            "max" => self.nary_call(NaryOp::Max, name, pos),
            "min" => self.nary_call(NaryOp::Min, name, pos),
            _ => self.variable(name, pos),
        }
    }

    fn variable(&mut self, name: &str, pos: usize) -> Result<u32, ParseError> {
        let mut chars = name.chars();
        let head = chars.next().unwrap();
        let rest = chars.as_str();
        let var = match (head, rest) {
            ('s', "") => Var::S,
            ('x', idx) if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) => {
                Var::X(self.index(name, idx, pos)?)
            }
            ('u', idx) if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) => {
                Var::U(self.index(name, idx, pos)?)
            }
            ('v', idx) if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) => {
                Var::V(self.index(name, idx, pos)?)
            }
            _ => {
                return Err(ParseError::UnknownIdentifier {
                    pos,
                    name: name.to_string(),
                });
            }
        };
        let expected = self.ast.var_set;
        let allowed = matches!(
            (var, expected),
            (Var::X(_), VarSet::Function) | (Var::U(_) | Var::V(_) | Var::S, VarSet::ModMap)
        );
        if !allowed {
            return Err(ParseError::WrongVariableSet {
                pos,
                name: name.to_string(),
                expected,
            });
        }
        Ok(self.push(Node::Var(var), pos))
    }

    fn index(&self, name: &str, digits: &str, pos: usize) -> Result<u32, ParseError> {
        let dim = self.ast.dim;
        let idx: u64 = digits.parse().map_err(|_| ParseError::VariableOutOfRange {
            pos,
            name: name.to_string(),
            dim,
        })?;
        if idx == 0 || idx > dim as u64 {
            return Err(ParseError::VariableOutOfRange {
                pos,
                name: name.to_string(),
                dim,
            });
        }
        Ok((idx - 1) as u32)
    }

    fn unary_call(&mut self, op: UnaryOp, name: &str, pos: usize) -> Result<u32, ParseError> {
        let args = self.call_args(name)?;
        if args.len() != 1 {
            return Err(ParseError::Syntax {
                pos,
                msg: format!("`{name}` expects exactly 1 argument, got {}", args.len()),
            });
        }
        Ok(self.push(Node::Unary(op, args[0]), pos))
    }

    fn nary_call(&mut self, op: NaryOp, name: &str, pos: usize) -> Result<u32, ParseError> {
        let args = self.call_args(name)?;
        if args.len() < 2 {
            return Err(ParseError::Syntax {
                pos,
                msg: format!("`{name}` expects at least 2 arguments, got {}", args.len()),
            });
        }
        Ok(self.push(Node::Nary(op, args.into()), pos))
    }

    fn call_args(&mut self, name: &str) -> Result<Vec<u32>, ParseError> {
        let open = self.bump();
        if open.tok != Tok::LParen {
            return Err(ParseError::Syntax {
                pos: open.pos,
                msg: format!("expected `(` after `{name}`"),
            });
        }
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect_rparen()?;
        Ok(args)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let t = self.bump();
        if t.tok != Tok::RParen {
            return Err(ParseError::Syntax {
                pos: t.pos,
                msg: "expected `)`".into(),
            });
        }
        Ok(())
    }
}

fn tok_text(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("{v}"),
        Tok::Ident(s) => s.clone(),
        Tok::Plus => "+".into(),
        Tok::Minus => "-".into(),
        Tok::Star => "*".into(),
        Tok::Slash => "/".into(),
        Tok::Caret => "^".into(),
        Tok::LParen => "(".into(),
        Tok::RParen => ")".into(),
        Tok::Comma => ",".into(),
        Tok::Eof => "end of input".into(),
    }
}
