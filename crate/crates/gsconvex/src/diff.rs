//! Differentiable-case inequality margins.
//!
//! The class's gradient inequalities carry an unquantified `o(a)` remainder;
//! every margin here substitutes zero for it and is reported per mixing
//! value, so callers see the margin as a function of `a`. The small-a limit
//! is covered separately through the secant slope, which converges to the
//! directional derivative.
//!
//! The alternate non-negative-case margin uses the factor `(e^s - 1)^s` as
//! stated; since that factor does not depend on the mixing value, a switch
//! to the `(e^a - 1)^s` variant is provided.

use crate::expr::EvalError;
use crate::kernel::{weights, FunctionSpec, MixParam, ModMap, ParamError, Point, SParam};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("point {point:?} lies outside the function domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("central differences need an interior point: axis {axis} at {point:?} with h={h}")]
    BoundaryViolation {
        point: Vec<f64>,
        axis: usize,
        h: f64,
    },
    #[error("sign precondition failed: expected Q {expected} at {point:?}, got {value}")]
    SignPrecondition {
        expected: &'static str,
        point: Vec<f64>,
        value: f64,
    },
    #[error("mixing value must be positive for gradient margins")]
    ZeroMixValue,
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// How to compute a gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMethod {
    /// Forward-mode dual numbers along each basis direction.
    Dual,
    /// Central finite differences with step `h`.
    Central { h: f64 },
}

/// Gradient vector plus a kink flag (dual method only).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gradient {
    pub components: Point,
    pub non_smooth: bool,
}

/// Gradient of Q at `m` by the chosen method. Central differences reject
/// points closer than `h` to the boundary.
pub fn gradient(
    q: &FunctionSpec,
    m: &Point,
    method: GradientMethod,
) -> Result<Gradient, DiffError> {
    if !q.domain.contains(m) {
        return Err(DiffError::OutOfDomain {
            point: m.coords().to_vec(),
        });
    }
    let dim = q.dim();
    match method {
        GradientMethod::Dual => {
            let mut components = vec![0.0; dim];
            let mut non_smooth = false;
            let mut dir = vec![0.0; dim];
            for i in 0..dim {
                dir[i] = 1.0;
                let d = q
                    .body
                    .eval_dual(m.coords(), &dir)
                    .map_err(|source| DiffError::Eval {
                        point: m.coords().to_vec(),
                        source,
                    })?;
                components[i] = d.deriv;
                non_smooth |= d.non_smooth;
                dir[i] = 0.0;
            }
            Ok(Gradient {
                components: Point::new(components),
                non_smooth,
            })
        }
        GradientMethod::Central { h } => {
            for (axis, (&x, &(lo, hi))) in m.coords().iter().zip(q.domain.bounds()).enumerate() {
                if x - h < lo || x + h > hi {
                    return Err(DiffError::BoundaryViolation {
                        point: m.coords().to_vec(),
                        axis,
                        h,
                    });
                }
            }
            let mut components = vec![0.0; dim];
            let mut shifted = m.coords().to_vec();
            for i in 0..dim {
                let x = shifted[i];
                shifted[i] = x + h;
                let up = eval_at(q, &shifted)?;
                shifted[i] = x - h;
                let down = eval_at(q, &shifted)?;
                shifted[i] = x;
                components[i] = (up - down) / (2.0 * h);
            }
            Ok(Gradient {
                components: Point::new(components),
                non_smooth: false,
            })
        }
    }
}

/// Which factor the alternate non-negative-case margin uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AltFactor {
    /// `(e^s - 1)^s`, as stated.
    SFixed,
    /// `(e^a - 1)^s`, the a-dependent variant.
    MixDependent,
}

/// Margins of the two non-negative-case gradient inequalities. Positive
/// margins mean the strict inequalities hold at the sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonnegMargins {
    pub primary: f64,
    pub alternate: f64,
    pub non_smooth: bool,
}

/// Margin of a single (non-strict) gradient inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    pub margin: f64,
    pub non_smooth: bool,
}

/// Non-negative case: for `Q(m1), Q(m2) >= 0` and `a > 0`,
/// `margin = RHS - grad Q(m2) . (m1 - m2)` with
/// `RHS_primary  = (e^a-1)^s/a Q(m1) + e^((1-a)s)/a Q(m2) + G(m1,m2,s)` and
/// `RHS_alternate = [factor (Q(m1)-Q(m2)) + 3 Q(m2)]/a + G(m1,m2,s)`.
pub fn nonneg_gradient_margins(
    q: &FunctionSpec,
    g: &ModMap,
    s: SParam,
    m1: &Point,
    m2: &Point,
    a: MixParam,
    alt: AltFactor,
) -> Result<NonnegMargins, DiffError> {
    let av = positive_mix(a)?;
    let sv = s.value();
    let q1 = require_sign(q, m1, Sign::NonNegative)?;
    let q2 = require_sign(q, m2, Sign::NonNegative)?;
    let grad = gradient(q, m2, GradientMethod::Dual)?;
    let lhs = dot_diff(&grad.components, m1, m2);
    let gv = eval_g(g, m1, m2, sv)?;
    let w1 = weights(a, s).w1;
    let primary = w1 / av * q1 + ((1.0 - av) * sv).exp() / av * q2 + gv - lhs;
    let factor = match alt {
        AltFactor::SFixed => (sv * sv.exp_m1().ln()).exp(),
        AltFactor::MixDependent => w1,
    };
    let alternate = (factor * (q1 - q2) + 3.0 * q2) / av + gv - lhs;
    Ok(NonnegMargins {
        primary,
        alternate,
        non_smooth: grad.non_smooth,
    })
}

/// Non-positive case: for `Q(m1), Q(m2) <= 0` and `a > 0`,
/// `margin = (e^a-1)^s/a [Q(m1) - Q(m2)] + G(m1,m2,s) - grad Q(m2) . (m1 - m2)`.
pub fn nonpos_gradient_margin(
    q: &FunctionSpec,
    g: &ModMap,
    s: SParam,
    m1: &Point,
    m2: &Point,
    a: MixParam,
) -> Result<Margin, DiffError> {
    let av = positive_mix(a)?;
    let q1 = require_sign(q, m1, Sign::NonPositive)?;
    let q2 = require_sign(q, m2, Sign::NonPositive)?;
    let grad = gradient(q, m2, GradientMethod::Dual)?;
    let lhs = dot_diff(&grad.components, m1, m2);
    let gv = eval_g(g, m1, m2, s.value())?;
    let w1 = weights(a, s).w1;
    let margin = w1 / av * (q1 - q2) + gv - lhs;
    Ok(Margin {
        margin,
        non_smooth: grad.non_smooth,
    })
}

/// Two-point symmetric case on `grad [Q(m2) - Q(m1)] . (m1 - m2)`. The
/// positive branch (both values strictly positive) uses
/// `RHS = [(e^a-1)^s + e^((1-a)s)]/a [Q(m1)+Q(m2)] + G(m1,m2,s) + G(m2,m1,s)`;
/// the negative branch (both strictly negative) uses
/// `RHS = G(m1,m2,s) + G(m2,m1,s)`.
pub fn symmetric_gradient_margin(
    q: &FunctionSpec,
    g: &ModMap,
    s: SParam,
    m1: &Point,
    m2: &Point,
    a: MixParam,
) -> Result<Margin, DiffError> {
    let av = positive_mix(a)?;
    let sv = s.value();
    let q1 = eval_at(q, m1.coords())?;
    let q2 = eval_at(q, m2.coords())?;
    let positive = q1 > 0.0 && q2 > 0.0;
    let negative = q1 < 0.0 && q2 < 0.0;
    if !positive && !negative {
        let (point, value) = if q1 <= 0.0 { (m1, q1) } else { (m2, q2) };
        return Err(DiffError::SignPrecondition {
            expected: "of one strict sign at both points",
            point: point.coords().to_vec(),
            value,
        });
    }
    let g2 = gradient(q, m2, GradientMethod::Dual)?;
    let g1 = gradient(q, m1, GradientMethod::Dual)?;
    let mut lhs = 0.0;
    for i in 0..q.dim() {
        lhs += (g2.components[i] - g1.components[i]) * (m1[i] - m2[i]);
    }
    let g12 = eval_g(g, m1, m2, sv)?;
    let g21 = eval_g(g, m2, m1, sv)?;
    let rhs = if positive {
        let w1 = weights(a, s).w1;
        w1 / av * (q1 + q2) + ((1.0 - av) * sv).exp() / av * (q1 + q2) + g12 + g21
    } else {
        g12 + g21
    };
    Ok(Margin {
        margin: rhs - lhs,
        non_smooth: g1.non_smooth || g2.non_smooth,
    })
}

/// Secant slope `[Q(m2 + a (m1 - m2)) - Q(m2)] / a`; equals the residual
/// divided by `a` once the weighted terms are moved across, and converges to
/// the directional derivative as `a` shrinks.
pub fn secant_slope(
    q: &FunctionSpec,
    m1: &Point,
    m2: &Point,
    a: MixParam,
) -> Result<f64, DiffError> {
    let av = positive_mix(a)?;
    let mut shifted = vec![0.0; q.dim()];
    for k in 0..shifted.len() {
        shifted[k] = m2[k] + av * (m1[k] - m2[k]);
    }
    let q_shift = eval_at(q, &shifted)?;
    let q2 = eval_at(q, m2.coords())?;
    Ok((q_shift - q2) / av)
}

enum Sign {
    NonNegative,
    NonPositive,
}

fn require_sign(q: &FunctionSpec, m: &Point, sign: Sign) -> Result<f64, DiffError> {
    let v = eval_at(q, m.coords())?;
    let (ok, expected) = match sign {
        Sign::NonNegative => (v >= 0.0, "non-negative"),
        Sign::NonPositive => (v <= 0.0, "non-positive"),
    };
    if ok {
        Ok(v)
    } else {
        Err(DiffError::SignPrecondition {
            expected,
            point: m.coords().to_vec(),
            value: v,
        })
    }
}

fn eval_at(q: &FunctionSpec, x: &[f64]) -> Result<f64, DiffError> {
    q.eval(x).map_err(|source| DiffError::Eval {
        point: x.to_vec(),
        source,
    })
}

fn eval_g(g: &ModMap, m1: &Point, m2: &Point, s: f64) -> Result<f64, DiffError> {
    g.eval(m1.coords(), m2.coords(), s)
        .map_err(|source| DiffError::Eval {
            point: m1.coords().to_vec(),
            source,
        })
}

fn dot_diff(grad: &Point, m1: &Point, m2: &Point) -> f64 {
    let mut acc = 0.0;
    for i in 0..grad.dim() {
        acc += grad[i] * (m1[i] - m2[i]);
    }
    acc
}

fn positive_mix(a: MixParam) -> Result<f64, DiffError> {
    if a.value() > 0.0 {
        Ok(a.value())
    } else {
        Err(DiffError::ZeroMixValue)
    }
}
