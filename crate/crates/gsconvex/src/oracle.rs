//! Brute-force reference for the defining-inequality sweep.
//!
//! This is the trust anchor for the certification engine: a single-threaded,
//! straight-line recomputation that iterates every `(m1, m2, a, s)` sample
//! and keeps the maximum residual under the same `(s, a, m1, m2)` tie-break.
//! The weight formula, mixing arithmetic, and max tracking are written out
//! inline rather than calling the kernel helpers; the sweep engine and this
//! module share only the expression evaluator and the grid itself.

use crate::cert::ResidualSample;
use crate::expr::EvalError;
use crate::kernel::{FunctionSpec, ModMap, Point, SampleGrid};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("evaluation failed at sample (s={s}, a={a}, m1={m1:?}, m2={m2:?}): {source}")]
    Eval {
        s: f64,
        a: f64,
        m1: Vec<f64>,
        m2: Vec<f64>,
        source: EvalError,
    },
    #[error("grid enumerates {samples} samples, above the 10^7 oracle limit")]
    TooManySamples { samples: usize },
    #[error("parameters out of range: s={s}, a={a}")]
    BadParams { s: f64, a: f64 },
    #[error("sweep produced no samples")]
    EmptySweep,
}

/// Residual of the defining inequality at a single sample, recomputed from
/// scratch.
pub fn residual_at(
    q: &FunctionSpec,
    g: &ModMap,
    s: f64,
    m1: &[f64],
    m2: &[f64],
    a: f64,
) -> Result<f64, OracleError> {
    if !(s > 0.0 && s <= 1.0) || !(0.0..=1.0).contains(&a) {
        return Err(OracleError::BadParams { s, a });
    }
    let wrap = |source: EvalError| OracleError::Eval {
        s,
        a,
        m1: m1.to_vec(),
        m2: m2.to_vec(),
        source,
    };
    let q1 = q.eval(m1).map_err(wrap)?;
    let q2 = q.eval(m2).map_err(wrap)?;
    let mut mix = vec![0.0; m1.len()];
    for k in 0..mix.len() {
        mix[k] = a * m1[k] + (1.0 - a) * m2[k];
    }
    let qmix = q.eval(&mix).map_err(wrap)?;
    let gv = g.eval(m1, m2, s).map_err(wrap)?;
    let w1 = if a == 0.0 {
        0.0
    } else {
        (s * a.exp_m1().ln()).exp()
    };
    let b = 1.0 - a;
    let w2 = if b == 0.0 {
        0.0
    } else {
        (s * b.exp_m1().ln()).exp()
    };
    Ok(qmix - w1 * q1 - w2 * q2 - a * gv)
}

/// Enumerates the full sample space of `grid` and returns the maximum
/// residual together with its witness.
pub fn brute_force_worst_residual(
    q: &FunctionSpec,
    g: &ModMap,
    grid: &SampleGrid,
) -> Result<(f64, ResidualSample), OracleError> {
    let pts = grid.m_points(&q.domain);
    let refine = grid.refinement(&q.domain);
    let n_samples = pts.len() * pts.len() * grid.a_grid().len() * grid.s_list().len()
        + refine.len() * grid.s_list().len();
    if n_samples > 10_000_000 {
        return Err(OracleError::TooManySamples { samples: n_samples });
    }

    let mut best: Option<ResidualSample> = None;
    let mut consider = |r: f64, s: f64, a: f64, m1: &[f64], m2: &[f64]| {
        let replace = match &best {
            None => true,
            Some(b) => {
                r > b.residual
                    || (r == b.residual
                        && lex_less(s, a, m1, m2, b.s, b.a, b.m1.coords(), b.m2.coords()))
            }
        };
        if replace {
            best = Some(ResidualSample {
                s,
                a,
                m1: Point::new(m1.to_vec()),
                m2: Point::new(m2.to_vec()),
                residual: r,
            });
        }
    };

    for &s in grid.s_list() {
        for &a in grid.a_grid() {
            for m1 in &pts {
                for m2 in &pts {
                    let r = residual_at(q, g, s, m1.coords(), m2.coords(), a)?;
                    consider(r, s, a, m1.coords(), m2.coords());
                }
            }
        }
        for t in &refine {
            let r = residual_at(q, g, s, t.m1.coords(), t.m2.coords(), t.a)?;
            consider(r, s, t.a, t.m1.coords(), t.m2.coords());
        }
    }

    let best = best.ok_or(OracleError::EmptySweep)?;
    Ok((best.residual, best))
}

#[allow(clippy::too_many_arguments)]
fn lex_less(
    s: f64,
    a: f64,
    m1: &[f64],
    m2: &[f64],
    bs: f64,
    ba: f64,
    bm1: &[f64],
    bm2: &[f64],
) -> bool {
    if s != bs {
        return s < bs;
    }
    if a != ba {
        return a < ba;
    }
    for (x, y) in m1.iter().zip(bm1) {
        if x != y {
            return x < y;
        }
    }
    for (x, y) in m2.iter().zip(bm2) {
        if x != y {
            return x < y;
        }
    }
    false
}
