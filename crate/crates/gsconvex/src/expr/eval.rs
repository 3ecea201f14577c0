//! Pure evaluation: plain values and dual numbers for directional derivatives.
//!
//! Kink convention: `abs` at zero uses the right-branch derivative (+1), and
//! `max`/`min` keep the first argument on ties. Results touched by a kink are
//! flagged non-smooth so callers can exclude them.

use super::{BinOp, ExprAst, NaryOp, Node, UnaryOp, Var, VarSet};
use thiserror::Error;

/// Evaluation failure at a specific node; `pos` is the node's 1-based source
/// position (0 for synthesized nodes).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of non-positive value {value} at position {pos}")]
    LogNonPositive { pos: usize, value: f64 },
    #[error("division by zero at position {pos}")]
    DivisionByZero { pos: usize },
    #[error("zero raised to negative power {exponent} at position {pos}")]
    ZeroToNegativePower { pos: usize, exponent: f64 },
    #[error("negative base {base} with non-integer exponent {exponent} at position {pos}")]
    NegativeBasePower {
        pos: usize,
        base: f64,
        exponent: f64,
    },
    #[error(
        "power with non-constant exponent needs a positive base, got {base} at position {pos}"
    )]
    NonConstantExponentBase { pos: usize, base: f64 },
    #[error("square root of negative value {value} at position {pos}")]
    SqrtNegative { pos: usize, value: f64 },
    #[error("derivative of sqrt is unbounded at zero (position {pos})")]
    SqrtDerivativeAtZero { pos: usize },
    #[error("non-finite result at position {pos}")]
    NonFinite { pos: usize },
}

/// Value and directional derivative with a kink flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEval {
    pub value: f64,
    pub deriv: f64,
    pub non_smooth: bool,
}

enum Binding<'a> {
    Function { x: &'a [f64] },
    ModMap { u: &'a [f64], v: &'a [f64], s: f64 },
}

impl ExprAst {
    /// Evaluates a function body at `x`.
    pub fn eval_fn(&self, x: &[f64]) -> Result<f64, EvalError> {
        assert_eq!(
            self.var_set(),
            VarSet::Function,
            "expression is not a function body"
        );
        assert_eq!(x.len(), self.dim(), "binding dimension mismatch");
        self.eval_node(self.root(), &Binding::Function { x })
    }

    /// Evaluates a modulating map at `(u, v, s)`.
    pub fn eval_mod(&self, u: &[f64], v: &[f64], s: f64) -> Result<f64, EvalError> {
        assert_eq!(
            self.var_set(),
            VarSet::ModMap,
            "expression is not a modulating map"
        );
        assert_eq!(u.len(), self.dim(), "binding dimension mismatch");
        assert_eq!(v.len(), self.dim(), "binding dimension mismatch");
        self.eval_node(self.root(), &Binding::ModMap { u, v, s })
    }

    /// Evaluates a function body and the directional derivative along `dir`.
    pub fn eval_dual(&self, x: &[f64], dir: &[f64]) -> Result<DualEval, EvalError> {
        assert_eq!(
            self.var_set(),
            VarSet::Function,
            "expression is not a function body"
        );
        assert_eq!(x.len(), self.dim(), "binding dimension mismatch");
        assert_eq!(dir.len(), self.dim(), "direction dimension mismatch");
        let mut non_smooth = false;
        let (value, deriv) = self.dual_node(self.root(), x, dir, &mut non_smooth)?;
        Ok(DualEval {
            value,
            deriv,
            non_smooth,
        })
    }

    fn eval_node(&self, id: u32, bind: &Binding<'_>) -> Result<f64, EvalError> {
        let pos = self.span(id);
        let v = match self.node(id) {
            Node::Const(c) => *c,
            Node::Var(var) => lookup(var, bind),
            Node::Unary(op, a) => {
                let a = self.eval_node(*a, bind)?;
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::LogNonPositive { pos, value: a });
                        }
                        a.ln()
                    }
                    UnaryOp::Abs => a.abs(),
                    UnaryOp::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::SqrtNegative { pos, value: a });
                        }
                        a.sqrt()
                    }
                }
            }
            Node::Binary(op, a, b) => {
                let a = self.eval_node(*a, bind)?;
                let b = self.eval_node(*b, bind)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { pos });
                        }
                        a / b
                    }
                    BinOp::Pow => checked_pow(a, b, pos)?,
                }
            }
            Node::Nary(op, args) => {
                let mut acc = self.eval_node(args[0], bind)?;
                for arg in &args[1..] {
                    let v = self.eval_node(*arg, bind)?;
                    acc = match op {
                        NaryOp::Max => {
                            if v > acc {
                                v
                            } else {
                                acc
                            }
                        }
                        NaryOp::Min => {
                            if v < acc {
                                v
                            } else {
                                acc
                            }
                        }
                    };
                }
                acc
            }
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite { pos });
        }
        Ok(v)
    }

    fn dual_node(
        &self,
        id: u32,
        x: &[f64],
        dir: &[f64],
        non_smooth: &mut bool,
    ) -> Result<(f64, f64), EvalError> {
        let pos = self.span(id);
        let (v, d) = match self.node(id) {
            Node::Const(c) => (*c, 0.0),
            Node::Var(var) => match var {
                Var::X(i) => (x[*i as usize], dir[*i as usize]),
                _ => unreachable!("modulating-map variable in function body"),
            },
            Node::Unary(op, a) => {
                let (av, ad) = self.dual_node(*a, x, dir, non_smooth)?;
                match op {
                    UnaryOp::Neg => (-av, -ad),
                    UnaryOp::Exp => {
                        let e = av.exp();
                        (e, e * ad)
                    }
                    UnaryOp::Log => {
                        if av <= 0.0 {
                            return Err(EvalError::LogNonPositive { pos, value: av });
                        }
                        (av.ln(), ad / av)
                    }
                    UnaryOp::Abs => {
                        if av > 0.0 {
                            (av, ad)
                        } else if av < 0.0 {
                            (-av, -ad)
                        } else {
                            // right-branch convention at the kink
                            *non_smooth = true;
                            (0.0, ad)
                        }
                    }
                    UnaryOp::Sqrt => {
                        if av < 0.0 {
                            return Err(EvalError::SqrtNegative { pos, value: av });
                        }
                        if av == 0.0 {
                            if ad == 0.0 {
                                (0.0, 0.0)
                            } else {
                                return Err(EvalError::SqrtDerivativeAtZero { pos });
                            }
                        } else {
                            let r = av.sqrt();
                            (r, ad / (2.0 * r))
                        }
                    }
                }
            }
            Node::Binary(op, a, b) => {
                let (av, ad) = self.dual_node(*a, x, dir, non_smooth)?;
                match op {
                    BinOp::Pow => {
                        // constant exponents get the power rule; general
                        // exponents require a positive base
                        if let Node::Const(c) = self.node(*b) {
                            self.dual_pow_const(av, ad, *c, pos)?
                        } else {
                            let (bv, bd) = self.dual_node(*b, x, dir, non_smooth)?;
                            if av <= 0.0 {
                                return Err(EvalError::NonConstantExponentBase { pos, base: av });
                            }
                            let v = checked_pow(av, bv, pos)?;
                            (v, v * (bd * av.ln() + bv * ad / av))
                        }
                    }
                    _ => {
                        let (bv, bd) = self.dual_node(*b, x, dir, non_smooth)?;
                        match op {
                            BinOp::Add => (av + bv, ad + bd),
                            BinOp::Sub => (av - bv, ad - bd),
                            BinOp::Mul => (av * bv, av * bd + ad * bv),
                            BinOp::Div => {
                                if bv == 0.0 {
                                    return Err(EvalError::DivisionByZero { pos });
                                }
                                (av / bv, (ad * bv - av * bd) / (bv * bv))
                            }
                            BinOp::Pow => unreachable!(),
                        }
                    }
                }
            }
            Node::Nary(op, args) => {
                let mut best = self.dual_node(args[0], x, dir, non_smooth)?;
                for arg in &args[1..] {
                    let cand = self.dual_node(*arg, x, dir, non_smooth)?;
                    let replace = match op {
                        NaryOp::Max => cand.0 > best.0,
                        NaryOp::Min => cand.0 < best.0,
                    };
                    if replace {
                        best = cand;
                    } else if cand.0 == best.0 {
                        // tie: keep the first-listed argument
                        *non_smooth = true;
                    }
                }
                best
            }
        };
        if !v.is_finite() || !d.is_finite() {
            return Err(EvalError::NonFinite { pos });
        }
        Ok((v, d))
    }

    fn dual_pow_const(
        &self,
        base: f64,
        bd: f64,
        c: f64,
        pos: usize,
    ) -> Result<(f64, f64), EvalError> {
        let v = checked_pow(base, c, pos)?;
        let d = if c == 0.0 {
            0.0
        } else if base == 0.0 {
            if c >= 1.0 {
                if c == 1.0 {
                    bd
                } else {
                    0.0
                }
            } else if bd == 0.0 {
                0.0
            } else {
                // derivative of x^c is unbounded at 0 for 0 < c < 1
                return Err(EvalError::NonFinite { pos });
            }
        } else {
            c * checked_pow(base, c - 1.0, pos)? * bd
        };
        Ok((v, d))
    }
}

fn lookup(var: &Var, bind: &Binding<'_>) -> f64 {
    match (var, bind) {
        (Var::X(i), Binding::Function { x }) => x[*i as usize],
        (Var::U(i), Binding::ModMap { u, .. }) => u[*i as usize],
        (Var::V(i), Binding::ModMap { v, .. }) => v[*i as usize],
        (Var::S, Binding::ModMap { s, .. }) => *s,
        _ => unreachable!("variable set validated at parse time"),
    }
}

fn checked_pow(base: f64, exponent: f64, pos: usize) -> Result<f64, EvalError> {
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::ZeroToNegativePower { pos, exponent });
    }
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(EvalError::NegativeBasePower {
            pos,
            base,
            exponent,
        });
    }
    let v = base.powf(exponent);
    if !v.is_finite() {
        return Err(EvalError::NonFinite { pos });
    }
    Ok(v)
}
