//! Shared domain types and the kernel weight functions.
//!
//! The defining inequality weighs function values with the pair
//! `w1 = (e^a - 1)^s`, `w2 = (e^(1-a) - 1)^s`. Both weights dominate the
//! classical convex-combination coefficients: `w1 >= a` and `w2 >= 1 - a`
//! for every `a` in `[0, 1]` and `s` in `(0, 1]`.

use crate::expr::{EvalError, ExprAst, VarSet};
use serde::Serialize;
use thiserror::Error;

/// Default residual tolerance. Double-precision kernel noise at desk scale
/// stays well under 1e-12, so 1e-9 leaves margin.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("s parameter must lie in (0, 1], got {0}")]
    SOutOfRange(f64),
    #[error("mix parameter a must lie in [0, 1], got {0}")]
    MixOutOfRange(f64),
    #[error("box interval [{lo}, {hi}] is invalid on axis {axis}")]
    BadInterval { axis: usize, lo: f64, hi: f64 },
    #[error("a-grid must stay inside [0, 1] and contain both endpoints")]
    BadAGrid,
    #[error("s-list must be non-empty with every entry in (0, 1]")]
    BadSList,
    #[error("grid needs at least one point per axis")]
    EmptyGrid,
    #[error("expression dimension {expr} does not match domain dimension {domain}")]
    DimensionMismatch { expr: usize, domain: usize },
    #[error("expected a {expected} expression")]
    WrongVariableSet { expected: VarSet },
}

/// Fixed exponent parameter, `0 < s <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SParam(f64);

impl SParam {
    pub fn new(s: f64) -> Result<Self, ParamError> {
        if s.is_finite() && s > 0.0 && s <= 1.0 {
            Ok(SParam(s))
        } else {
            Err(ParamError::SOutOfRange(s))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Mixing coefficient, `0 <= a <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MixParam(f64);

impl MixParam {
    pub fn new(a: f64) -> Result<Self, ParamError> {
        if a.is_finite() && (0.0..=1.0).contains(&a) {
            Ok(MixParam(a))
        } else {
            Err(ParamError::MixOutOfRange(a))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The kernel weight pair of the defining inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightPair {
    pub w1: f64,
    pub w2: f64,
}

/// `(e^t - 1)^s` as an exp/ln composition, with the limit value 0 at t = 0.
fn kernel_weight(t: f64, s: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        (s * t.exp_m1().ln()).exp()
    }
}

/// Computes `((e^a - 1)^s, (e^(1-a) - 1)^s)`.
pub fn weights(a: MixParam, s: SParam) -> WeightPair {
    let a = a.value();
    let s = s.value();
    WeightPair {
        w1: kernel_weight(a, s),
        w2: kernel_weight(1.0 - a, s),
    }
}

/// Margins of the weights over the plain mixing coefficients:
/// `(w1 - a, w2 - (1 - a))`. Both are non-negative.
pub fn weight_margins(a: MixParam, s: SParam) -> (f64, f64) {
    let w = weights(a, s);
    (w.w1 - a.value(), w.w2 - (1.0 - a.value()))
}

/// A point of the working space; all coordinates finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(
            coords.iter().all(|c| c.is_finite()),
            "point coordinates must be finite"
        );
        assert!(!coords.is_empty(), "points need dimension >= 1");
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords)
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// Axis-aligned box; convex by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BoxDomain {
    bounds: Vec<(f64, f64)>,
}

impl BoxDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, ParamError> {
        if bounds.is_empty() {
            return Err(ParamError::EmptyGrid);
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ParamError::BadInterval { axis, lo, hi });
            }
        }
        Ok(BoxDomain { bounds })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, ParamError> {
        Self::new(vec![(lo, hi)])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .zip(&self.bounds)
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Per-coordinate clamp onto the box.
    pub fn project(&self, coords: &[f64]) -> Vec<f64> {
        assert_eq!(coords.len(), self.dim(), "projection dimension mismatch");
        coords
            .iter()
            .zip(&self.bounds)
            .map(|(x, (lo, hi))| x.clamp(*lo, *hi))
            .collect()
    }

    /// `k` evenly spaced values on one axis, endpoints exact.
    pub fn axis_points(&self, axis: usize, k: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds[axis];
        linspace(lo, hi, k)
    }

    /// Cartesian grid with `k` points per axis.
    pub fn grid_points(&self, k: usize) -> Vec<Point> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|ax| self.axis_points(ax, k)).collect();
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        loop {
            out.push(Point::new(
                idx.iter().zip(&axes).map(|(&i, axis)| axis[i]).collect(),
            ));
            // odometer increment, last axis fastest
            let mut ax = self.dim();
            loop {
                if ax == 0 {
                    return out;
                }
                ax -= 1;
                idx[ax] += 1;
                if idx[ax] < axes[ax].len() {
                    break;
                }
                idx[ax] = 0;
            }
        }
    }
}

/// Evenly spaced values with exact endpoints; `k = 1` collapses to `lo`.
pub fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    assert!(k >= 1, "linspace needs at least one point");
    if k == 1 {
        return vec![lo];
    }
    (0..k)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == k - 1 {
                hi
            } else {
                lo + (hi - lo) * (i as f64) / ((k - 1) as f64)
            }
        })
        .collect()
}

/// A scalar function of an n-vector on a box domain.
#[derive(Debug, Clone)]
pub struct FunctionSpec {
    pub name: String,
    pub body: ExprAst,
    pub domain: BoxDomain,
}

impl FunctionSpec {
    pub fn new(
        name: impl Into<String>,
        body: ExprAst,
        domain: BoxDomain,
    ) -> Result<Self, ParamError> {
        if body.var_set() != VarSet::Function {
            return Err(ParamError::WrongVariableSet {
                expected: VarSet::Function,
            });
        }
        if body.dim() != domain.dim() {
            return Err(ParamError::DimensionMismatch {
                expr: body.dim(),
                domain: domain.dim(),
            });
        }
        Ok(FunctionSpec {
            name: name.into(),
            body,
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.body.eval_fn(x)
    }
}

/// The modulating map `G(m1, m2, s)`.
#[derive(Debug, Clone)]
pub struct ModMap {
    pub name: String,
    pub body: ExprAst,
}

impl ModMap {
    pub fn new(name: impl Into<String>, body: ExprAst) -> Result<Self, ParamError> {
        if body.var_set() != VarSet::ModMap {
            return Err(ParamError::WrongVariableSet {
                expected: VarSet::ModMap,
            });
        }
        Ok(ModMap {
            name: name.into(),
            body,
        })
    }

    /// The zero map.
    pub fn zero(dim: usize) -> Self {
        Self::constant(0.0, dim)
    }

    /// A constant map.
    pub fn constant(value: f64, dim: usize) -> Self {
        ModMap {
            name: format!("const({value})"),
            body: ExprAst::constant(value, dim, VarSet::ModMap),
        }
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    pub fn eval(&self, m1: &[f64], m2: &[f64], s: f64) -> Result<f64, EvalError> {
        self.body.eval_mod(m1, m2, s)
    }
}

/// One seeded refinement sample: endpoints plus a mixing coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineSample {
    pub m1: Point,
    pub m2: Point,
    pub a: f64,
}

/// Deterministic sampling plan: cartesian endpoint pairs on an m-grid,
/// an a-grid with both endpoints, fixed s values, and optional seeded
/// random refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    m_points_per_axis: usize,
    a_grid: Vec<f64>,
    s_list: Vec<f64>,
    refine_samples: usize,
    seed: u64,
}

impl SampleGrid {
    pub fn new(
        m_points_per_axis: usize,
        a_grid: Vec<f64>,
        s_list: Vec<f64>,
        refine_samples: usize,
        seed: u64,
    ) -> Result<Self, ParamError> {
        if m_points_per_axis == 0 || a_grid.is_empty() {
            return Err(ParamError::EmptyGrid);
        }
        let in_range = a_grid
            .iter()
            .all(|a| a.is_finite() && (0.0..=1.0).contains(a));
        if !in_range || !a_grid.contains(&0.0) || !a_grid.contains(&1.0) {
            return Err(ParamError::BadAGrid);
        }
        if s_list.is_empty()
            || !s_list
                .iter()
                .all(|s| s.is_finite() && *s > 0.0 && *s <= 1.0)
        {
            return Err(ParamError::BadSList);
        }
        Ok(SampleGrid {
            m_points_per_axis,
            a_grid,
            s_list,
            refine_samples,
            seed,
        })
    }

    /// Uniform plan: `a_count` evenly spaced mixing values including both
    /// endpoints.
    pub fn uniform(
        m_points_per_axis: usize,
        a_count: usize,
        s_list: Vec<f64>,
        refine_samples: usize,
        seed: u64,
    ) -> Result<Self, ParamError> {
        if a_count < 2 {
            return Err(ParamError::BadAGrid);
        }
        Self::new(
            m_points_per_axis,
            linspace(0.0, 1.0, a_count),
            s_list,
            refine_samples,
            seed,
        )
    }

    pub fn m_points_per_axis(&self) -> usize {
        self.m_points_per_axis
    }

    pub fn a_grid(&self) -> &[f64] {
        &self.a_grid
    }

    pub fn s_list(&self) -> &[f64] {
        &self.s_list
    }

    pub fn refine_count(&self) -> usize {
        self.refine_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m_points(&self, domain: &BoxDomain) -> Vec<Point> {
        domain.grid_points(self.m_points_per_axis)
    }

    /// Seeded random refinement tuples, independent of thread count.
    pub fn refinement(&self, domain: &BoxDomain) -> Vec<RefineSample> {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.refine_samples);
        for _ in 0..self.refine_samples {
            let sample_point = |rng: &mut rand_chacha::ChaCha8Rng| {
                Point::new(
                    domain
                        .bounds()
                        .iter()
                        .map(|&(lo, hi)| {
                            if lo == hi {
                                lo
                            } else {
                                rng.random_range(lo..=hi)
                            }
                        })
                        .collect(),
                )
            };
            let m1 = sample_point(&mut rng);
            let m2 = sample_point(&mut rng);
            let a = rng.random_range(0.0..=1.0);
            out.push(RefineSample { m1, m2, a });
        }
        out
    }
}
