//! Closure algebra on (function, modulating map) pairs.
//!
//! Sums, non-negative scalings, non-negative linear combinations, and
//! post-composition with a non-negative linear map all stay inside the
//! GS-exponential class; the composite's residual decomposes sample-wise
//! into the inputs' residuals. Pointwise suprema of finite families are
//! supported on one-dimensional domains together with a finiteness probe.

use crate::expr::ExprAst;
use crate::kernel::{BoxDomain, FunctionSpec, ModMap, ParamError};
use thiserror::Error;

/// A function together with its modulating map.
#[derive(Debug, Clone)]
pub struct GsPair {
    pub q: FunctionSpec,
    pub g: ModMap,
}

impl GsPair {
    pub fn new(q: FunctionSpec, g: ModMap) -> Result<Self, AlgebraError> {
        if q.dim() != g.dim() {
            return Err(AlgebraError::DimensionMismatch {
                q: q.dim(),
                g: g.dim(),
            });
        }
        Ok(GsPair { q, g })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("function dimension {q} does not match modulating-map dimension {g}")]
    DimensionMismatch { q: usize, g: usize },
    #[error("domains differ; combinations need a common domain")]
    DomainMismatch,
    #[error("coefficient must be non-negative, got {0}")]
    NegativeCoefficient(f64),
    #[error("expected {pairs} coefficients, got {betas}")]
    LengthMismatch { pairs: usize, betas: usize },
    #[error("family must be non-empty")]
    EmptyFamily,
    #[error("pointwise suprema are only supported on one-dimensional domains")]
    NotOneDimensional,
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// `(Q1 + Q2, G1 + G2)`; the combined residual is the sample-wise sum of the
/// inputs' residuals.
pub fn combine_sum(p1: &GsPair, p2: &GsPair) -> Result<GsPair, AlgebraError> {
    if p1.q.domain != p2.q.domain {
        return Err(AlgebraError::DomainMismatch);
    }
    let q = FunctionSpec::new(
        format!("{}+{}", p1.q.name, p2.q.name),
        p1.q.body.add(&p2.q.body),
        p1.q.domain.clone(),
    )?;
    let g = ModMap::new(
        format!("{}+{}", p1.g.name, p2.g.name),
        p1.g.body.add(&p2.g.body),
    )?;
    GsPair::new(q, g)
}

/// `(beta Q, beta G)` for `beta >= 0`; residuals scale by exactly beta.
pub fn scale(p: &GsPair, beta: f64) -> Result<GsPair, AlgebraError> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(AlgebraError::NegativeCoefficient(beta));
    }
    let q = FunctionSpec::new(
        format!("{beta}*{}", p.q.name),
        p.q.body.scale(beta),
        p.q.domain.clone(),
    )?;
    let g = ModMap::new(format!("{beta}*{}", p.g.name), p.g.body.scale(beta))?;
    GsPair::new(q, g)
}

/// `(sum beta_i Q_i, sum beta_i G_i)` with non-negative coefficients on a
/// common domain.
pub fn linear_combination(pairs: &[GsPair], betas: &[f64]) -> Result<GsPair, AlgebraError> {
    if pairs.is_empty() {
        return Err(AlgebraError::EmptyFamily);
    }
    if pairs.len() != betas.len() {
        return Err(AlgebraError::LengthMismatch {
            pairs: pairs.len(),
            betas: betas.len(),
        });
    }
    let mut acc = scale(&pairs[0], betas[0])?;
    for (p, &b) in pairs.iter().zip(betas).skip(1) {
        acc = combine_sum(&acc, &scale(p, b)?)?;
    }
    Ok(acc)
}

/// Post-composition with a linear non-negative map on the reals, realized by
/// its coefficient `c >= 0`: `(c Q, c G)`.
pub fn post_compose_linear(p: &GsPair, c: f64) -> Result<GsPair, AlgebraError> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(AlgebraError::NegativeCoefficient(c));
    }
    scale(p, c)
}

/// Pointwise supremum of a finite family probed on a grid.
#[derive(Debug, Clone)]
pub struct SupFamily {
    /// Pointwise maximum of the members' functions.
    pub q: FunctionSpec,
    /// Pointwise maximum of the members' modulating maps.
    pub g: ModMap,
    /// Probe values where the supremum evaluates finitely.
    pub finite_points: Vec<f64>,
    /// Whether the finite probe indices form one contiguous run.
    pub contiguous: bool,
}

/// Builds the pointwise-supremum pair of a finite one-dimensional family and
/// probes where it stays finite. A probe point counts as finite only when
/// every member evaluates finitely there.
pub fn sup_family(pairs: &[GsPair], probe: &[f64]) -> Result<SupFamily, AlgebraError> {
    if pairs.is_empty() {
        return Err(AlgebraError::EmptyFamily);
    }
    if pairs[0].q.dim() != 1 {
        return Err(AlgebraError::NotOneDimensional);
    }
    for p in &pairs[1..] {
        if p.q.domain != pairs[0].q.domain {
            return Err(AlgebraError::DomainMismatch);
        }
    }
    let q_bodies: Vec<ExprAst> = pairs.iter().map(|p| p.q.body.clone()).collect();
    let g_bodies: Vec<ExprAst> = pairs.iter().map(|p| p.g.body.clone()).collect();
    let names: Vec<&str> = pairs.iter().map(|p| p.q.name.as_str()).collect();
    let q = FunctionSpec::new(
        format!("sup({})", names.join(", ")),
        ExprAst::max_of(&q_bodies),
        pairs[0].q.domain.clone(),
    )?;
    let g = ModMap::new("sup-map", ExprAst::max_of(&g_bodies))?;

    let mut finite_idx = Vec::new();
    for (i, &x) in probe.iter().enumerate() {
        if q.eval(&[x]).is_ok() {
            finite_idx.push(i);
        }
    }
    let contiguous = finite_idx.windows(2).all(|w| w[1] == w[0] + 1);
    let finite_points = finite_idx.iter().map(|&i| probe[i]).collect();
    Ok(SupFamily {
        q,
        g,
        finite_points,
        contiguous,
    })
}

/// Interval spanned by the finite probe points, usable as a domain for a
/// follow-up membership sweep.
pub fn finite_span(family: &SupFamily) -> Option<BoxDomain> {
    let first = *family.finite_points.first()?;
    let last = *family.finite_points.last()?;
    let (lo, hi) = if first <= last {
        (first, last)
    } else {
        (last, first)
    };
    BoxDomain::interval(lo, hi).ok()
}
