//! Membership certification for the GS-exponential kind of convex class and
//! the three comparison classes, plus minimal modulating maps.
//!
//! A sweep samples every ordered endpoint pair from the m-grid, every mixing
//! value of the a-grid, and every fixed s. The residual at one sample is the
//! left side of the defining inequality minus the right side, so non-positive
//! residuals mean the inequality holds there. A `pass` verdict is a sampling
//! certificate, not a proof; a `fail` carries a genuine counterexample.
//!
//! Sweeps run in parallel over endpoint pairs. The reduction is a max under a
//! total order (residual first, then the lexicographic `(s, a, m1, m2)` key),
//! so the worst witness does not depend on thread count or execution order.

use crate::expr::EvalError;
use crate::kernel::{
    weights, FunctionSpec, MixParam, ModMap, ParamError, Point, SParam, SampleGrid,
};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

/// Which comparison class a sweep certifies against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassId {
    #[serde(rename = "gs-exponential")]
    GsExponential,
    #[serde(rename = "s-convex")]
    SConvex,
    #[serde(rename = "sub-b-s-convex")]
    SubBSConvex,
    #[serde(rename = "exponential-kind")]
    ExponentialKind,
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassId::GsExponential => "gs-exponential",
            ClassId::SConvex => "s-convex",
            ClassId::SubBSConvex => "sub-b-s-convex",
            ClassId::ExponentialKind => "exponential-kind",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One evaluated sample of the defining inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSample {
    pub s: f64,
    pub a: f64,
    pub m1: Point,
    pub m2: Point,
    pub residual: f64,
}

/// Sweep outcome for one class.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub class: ClassId,
    pub verdict: Verdict,
    pub worst: ResidualSample,
    pub samples: usize,
    pub tolerance: f64,
}

/// Minimal constant modulating value for one endpoint pair.
#[derive(Debug, Clone, Serialize)]
pub struct MinimalG {
    /// Maximum over the a-grid of the residual-with-zero-map divided by a.
    pub gstar: f64,
    pub argmax_a: f64,
    /// Whether the a = 0 constraint holds; no finite map can repair it
    /// because the modulating term vanishes there.
    pub endpoint_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("evaluation failed at sample (s={s}, a={a}, m1={m1:?}, m2={m2:?}): {source}")]
    Eval {
        s: f64,
        a: f64,
        m1: Vec<f64>,
        m2: Vec<f64>,
        source: EvalError,
    },
    #[error("evaluation failed at grid point {point:?}: {source}")]
    PointEval { point: Vec<f64>, source: EvalError },
    #[error("point {point:?} lies outside the function domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("class `{class}` requires a modulating map")]
    ModMapRequired { class: ClassId },
    #[error("class `{class}` does not take a modulating map")]
    ModMapForbidden { class: ClassId },
    #[error("positivity precondition failed: Q({point:?}) = {value}")]
    PositivityViolation { point: Vec<f64>, value: f64 },
    #[error("non-negativity precondition failed: Q({point:?}) = {value}")]
    NegativityViolation { point: Vec<f64>, value: f64 },
    #[error("modulating map dimension {modmap} does not match function dimension {function}")]
    ModMapDimension { modmap: usize, function: usize },
    #[error("a-grid for the minimal modulating map must be non-empty inside (0, 1]")]
    BadMinimalGGrid,
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Residual of the defining inequality at one sample:
/// `Q(a m1 + (1-a) m2) - w1 Q(m1) - w2 Q(m2) - a G(m1, m2, s)`.
/// Non-positive means the inequality holds at this sample.
pub fn residual(
    q: &FunctionSpec,
    g: &ModMap,
    s: SParam,
    m1: &Point,
    m2: &Point,
    a: MixParam,
) -> Result<f64, CertError> {
    check_in_domain(q, m1)?;
    check_in_domain(q, m2)?;
    check_modmap_dim(q, g)?;
    let sv = s.value();
    let av = a.value();
    let wrap = |source: EvalError| CertError::Eval {
        s: sv,
        a: av,
        m1: m1.coords().to_vec(),
        m2: m2.coords().to_vec(),
        source,
    };
    let q1 = q.eval(m1.coords()).map_err(wrap)?;
    let q2 = q.eval(m2.coords()).map_err(wrap)?;
    let mut mix = vec![0.0; q.dim()];
    mix_into(&mut mix, m1.coords(), m2.coords(), av);
    let qmix = q.eval(&mix).map_err(wrap)?;
    let gv = g.eval(m1.coords(), m2.coords(), sv).map_err(wrap)?;
    let w = weights(a, s);
    Ok(qmix - w.w1 * q1 - w.w2 * q2 - av * gv)
}

/// Full sweep against the GS-exponential class over every s in the grid's
/// s-list.
pub fn check_gs_convex(
    q: &FunctionSpec,
    g: &ModMap,
    grid: &SampleGrid,
    tolerance: f64,
) -> Result<ConvexityReport, CertError> {
    check_modmap_dim(q, g)?;
    sweep_class(
        ClassId::GsExponential,
        q,
        Some(g),
        grid.s_list(),
        grid,
        tolerance,
    )
}

/// Sweep against one class at a single fixed s. The modulating map is
/// required for the GS and sub-b-s classes and rejected otherwise; the
/// exponential-kind class additionally demands strictly positive values at
/// every sampled endpoint.
pub fn check_class(
    class: ClassId,
    q: &FunctionSpec,
    g: Option<&ModMap>,
    s: SParam,
    grid: &SampleGrid,
    tolerance: f64,
) -> Result<ConvexityReport, CertError> {
    match class {
        ClassId::GsExponential | ClassId::SubBSConvex => {
            if g.is_none() {
                return Err(CertError::ModMapRequired { class });
            }
        }
        ClassId::SConvex | ClassId::ExponentialKind => {
            if g.is_some() {
                return Err(CertError::ModMapForbidden { class });
            }
        }
    }
    if let Some(g) = g {
        check_modmap_dim(q, g)?;
    }
    if class == ClassId::ExponentialKind {
        for point in sampled_endpoints(q, grid)? {
            let value = q
                .eval(point.coords())
                .map_err(|source| CertError::PointEval {
                    point: point.coords().to_vec(),
                    source,
                })?;
            if value <= 0.0 {
                return Err(CertError::PositivityViolation {
                    point: point.coords().to_vec(),
                    value,
                });
            }
        }
    }
    sweep_class(class, q, g, &[s.value()], grid, tolerance)
}

/// Minimal constant modulating value for the pair `(m1, m2)` at fixed s,
/// maximized over an a-grid inside `(0, 1]`. The a = 0 endpoint is reported
/// separately as a feasibility flag.
pub fn minimal_g(
    q: &FunctionSpec,
    s: SParam,
    m1: &Point,
    m2: &Point,
    a_grid: &[f64],
) -> Result<MinimalG, CertError> {
    if a_grid.is_empty()
        || !a_grid
            .iter()
            .all(|a| a.is_finite() && *a > 0.0 && *a <= 1.0)
    {
        return Err(CertError::BadMinimalGGrid);
    }
    check_in_domain(q, m1)?;
    check_in_domain(q, m2)?;
    let sv = s.value();
    let wrap = |a: f64| {
        move |source: EvalError| CertError::Eval {
            s: sv,
            a,
            m1: m1.coords().to_vec(),
            m2: m2.coords().to_vec(),
            source,
        }
    };
    let q1 = q.eval(m1.coords()).map_err(wrap(a_grid[0]))?;
    let q2 = q.eval(m2.coords()).map_err(wrap(a_grid[0]))?;
    let mut mix = vec![0.0; q.dim()];
    let mut best: Option<(f64, f64)> = None;
    for &a in a_grid {
        mix_into(&mut mix, m1.coords(), m2.coords(), a);
        let qmix = q.eval(&mix).map_err(wrap(a))?;
        let w = weights(MixParam::new(a)?, s);
        let needed = (qmix - w.w1 * q1 - w.w2 * q2) / a;
        let better = match best {
            None => true,
            Some((g, arg)) => needed > g || (needed == g && a < arg),
        };
        if better {
            best = Some((needed, a));
        }
    }
    let (gstar, argmax_a) = best.expect("non-empty a-grid");
    // a = 0 reduces the inequality to Q(m2) <= (e - 1)^s Q(m2)
    let w0 = weights(MixParam::new(0.0)?, s);
    let endpoint_residual = q2 - w0.w2 * q2;
    Ok(MinimalG {
        gstar,
        argmax_a,
        endpoint_feasible: endpoint_residual <= 0.0,
    })
}

/// Whether the GS sweep at s = 1 with the zero map and the exponential-kind
/// sweep agree in verdict and worst residual (within 1e-12) on the same grid.
/// Requires Q >= 0 at every sampled endpoint.
pub fn reduction_equivalence(
    q: &FunctionSpec,
    grid: &SampleGrid,
    tolerance: f64,
) -> Result<bool, CertError> {
    for point in sampled_endpoints(q, grid)? {
        let value = q
            .eval(point.coords())
            .map_err(|source| CertError::PointEval {
                point: point.coords().to_vec(),
                source,
            })?;
        if value < 0.0 {
            return Err(CertError::NegativityViolation {
                point: point.coords().to_vec(),
                value,
            });
        }
    }
    let zero = ModMap::zero(q.dim());
    let gs = sweep_class(
        ClassId::GsExponential,
        q,
        Some(&zero),
        &[1.0],
        grid,
        tolerance,
    )?;
    let ek = sweep_class(ClassId::ExponentialKind, q, None, &[1.0], grid, tolerance)?;
    Ok(gs.verdict == ek.verdict && (gs.worst.residual - ek.worst.residual).abs() <= 1e-12)
}

fn check_in_domain(q: &FunctionSpec, p: &Point) -> Result<(), CertError> {
    if q.domain.contains(p) {
        Ok(())
    } else {
        Err(CertError::OutOfDomain {
            point: p.coords().to_vec(),
        })
    }
}

fn check_modmap_dim(q: &FunctionSpec, g: &ModMap) -> Result<(), CertError> {
    if g.dim() == q.dim() {
        Ok(())
    } else {
        Err(CertError::ModMapDimension {
            modmap: g.dim(),
            function: q.dim(),
        })
    }
}

fn sampled_endpoints(q: &FunctionSpec, grid: &SampleGrid) -> Result<Vec<Point>, CertError> {
    let mut pts = grid.m_points(&q.domain);
    for r in grid.refinement(&q.domain) {
        pts.push(r.m1);
        pts.push(r.m2);
    }
    Ok(pts)
}

pub(crate) fn mix_into(buf: &mut [f64], m1: &[f64], m2: &[f64], a: f64) {
    for k in 0..buf.len() {
        buf[k] = a * m1[k] + (1.0 - a) * m2[k];
    }
}

fn class_weights(class: ClassId, a: f64, s: f64) -> (f64, f64) {
    match class {
        ClassId::GsExponential => {
            let w = weights(
                MixParam::new(a).expect("validated a-grid"),
                SParam::new(s).expect("validated s"),
            );
            (w.w1, w.w2)
        }
        ClassId::SConvex | ClassId::SubBSConvex => (a.powf(s), (1.0 - a).powf(s)),
        ClassId::ExponentialKind => (a.exp_m1(), (1.0 - a).exp_m1()),
    }
}

#[derive(Debug, Clone)]
struct Cand {
    residual: f64,
    s: f64,
    a: f64,
    m1: Vec<f64>,
    m2: Vec<f64>,
}

fn key_cmp(x: &Cand, y: &Cand) -> Ordering {
    x.s.partial_cmp(&y.s)
        .unwrap()
        .then_with(|| x.a.partial_cmp(&y.a).unwrap())
        .then_with(|| cmp_slice(&x.m1, &y.m1))
        .then_with(|| cmp_slice(&x.m2, &y.m2))
}

fn cmp_slice(x: &[f64], y: &[f64]) -> Ordering {
    for (a, b) in x.iter().zip(y) {
        match a.partial_cmp(b).unwrap() {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Larger residual wins; exact ties go to the lexicographically smaller key.
fn worse(x: Cand, y: Cand) -> Cand {
    match x.residual.partial_cmp(&y.residual).unwrap() {
        Ordering::Greater => x,
        Ordering::Less => y,
        Ordering::Equal => {
            if key_cmp(&x, &y) == Ordering::Greater {
                y
            } else {
                x
            }
        }
    }
}

#[derive(Debug, Clone)]
struct SampleErr {
    cand: Cand,
    source: EvalError,
}

type Outcome = Result<Option<Cand>, SampleErr>;

fn merge(x: Outcome, y: Outcome) -> Outcome {
    match (x, y) {
        (Err(a), Err(b)) => {
            if key_cmp(&b.cand, &a.cand) == Ordering::Less {
                Err(b)
            } else {
                Err(a)
            }
        }
        (Err(a), Ok(_)) => Err(a),
        (Ok(_), Err(b)) => Err(b),
        (Ok(None), o) | (o, Ok(None)) => o,
        (Ok(Some(a)), Ok(Some(b))) => Ok(Some(worse(a, b))),
    }
}

fn sweep_class(
    class: ClassId,
    q: &FunctionSpec,
    g: Option<&ModMap>,
    s_vals: &[f64],
    grid: &SampleGrid,
    tolerance: f64,
) -> Result<ConvexityReport, CertError> {
    let pts = grid.m_points(&q.domain);
    let a_grid = grid.a_grid();
    let refine = grid.refinement(&q.domain);

    // endpoint values are shared across every pair they appear in
    let qvals: Vec<Result<f64, EvalError>> = pts.par_iter().map(|p| q.eval(p.coords())).collect();
    for (p, v) in pts.iter().zip(&qvals) {
        if let Err(source) = v {
            return Err(CertError::PointEval {
                point: p.coords().to_vec(),
                source: source.clone(),
            });
        }
    }
    let qvals: Vec<f64> = qvals.into_iter().map(|v| v.unwrap()).collect();

    // weight table indexed [a][s]; identical inputs give identical bits at use
    let wtab: Vec<Vec<(f64, f64)>> = a_grid
        .iter()
        .map(|&a| s_vals.iter().map(|&s| class_weights(class, a, s)).collect())
        .collect();

    let min_s = s_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_a = a_grid.iter().cloned().fold(f64::INFINITY, f64::min);

    let n = pts.len();
    let dim = q.dim();
    let pair_outcome = (0..n * n)
        .into_par_iter()
        .map(|pair| {
            let (i, j) = (pair / n, pair % n);
            let m1 = pts[i].coords();
            let m2 = pts[j].coords();
            pair_sweep(
                class,
                q,
                g,
                m1,
                m2,
                qvals[i],
                qvals[j],
                a_grid,
                s_vals,
                Some(&wtab),
                dim,
                min_s,
                min_a,
            )
        })
        .reduce(|| Ok(None), merge);

    let refine_outcome = refine
        .par_iter()
        .map(|r| {
            let m1 = r.m1.coords();
            let m2 = r.m2.coords();
            let q1 = match q.eval(m1) {
                Ok(v) => v,
                Err(source) => {
                    return Err(SampleErr {
                        cand: err_key(min_s, r.a, m1, m2),
                        source,
                    })
                }
            };
            let q2 = match q.eval(m2) {
                Ok(v) => v,
                Err(source) => {
                    return Err(SampleErr {
                        cand: err_key(min_s, r.a, m1, m2),
                        source,
                    })
                }
            };
            pair_sweep(
                class,
                q,
                g,
                m1,
                m2,
                q1,
                q2,
                std::slice::from_ref(&r.a),
                s_vals,
                None,
                dim,
                min_s,
                min_a,
            )
        })
        .reduce(|| Ok(None), merge);

    let worst = match merge(pair_outcome, refine_outcome) {
        Ok(w) => w.expect("non-empty sweep"),
        Err(e) => {
            return Err(CertError::Eval {
                s: e.cand.s,
                a: e.cand.a,
                m1: e.cand.m1,
                m2: e.cand.m2,
                source: e.source,
            })
        }
    };

    let samples = n * n * a_grid.len() * s_vals.len() + refine.len() * s_vals.len();
    let verdict = if worst.residual <= tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ConvexityReport {
        class,
        verdict,
        worst: ResidualSample {
            s: worst.s,
            a: worst.a,
            m1: Point::new(worst.m1),
            m2: Point::new(worst.m2),
            residual: worst.residual,
        },
        samples,
        tolerance,
    })
}

fn err_key(s: f64, a: f64, m1: &[f64], m2: &[f64]) -> Cand {
    Cand {
        residual: f64::NEG_INFINITY,
        s,
        a,
        m1: m1.to_vec(),
        m2: m2.to_vec(),
    }
}

#[allow(clippy::too_many_arguments)]
fn pair_sweep(
    class: ClassId,
    q: &FunctionSpec,
    g: Option<&ModMap>,
    m1: &[f64],
    m2: &[f64],
    q1: f64,
    q2: f64,
    a_vals: &[f64],
    s_vals: &[f64],
    wtab: Option<&Vec<Vec<(f64, f64)>>>,
    dim: usize,
    min_s: f64,
    min_a: f64,
) -> Outcome {
    // G depends on the pair and s only, never on a
    let uses_g = matches!(class, ClassId::GsExponential | ClassId::SubBSConvex);
    let mut gvals = Vec::new();
    if uses_g {
        let g = g.expect("modulating map checked by caller");
        for &s in s_vals {
            match g.eval(m1, m2, s) {
                Ok(v) => gvals.push(v),
                Err(source) => {
                    return Err(SampleErr {
                        cand: err_key(s, min_a, m1, m2),
                        source,
                    })
                }
            }
        }
    }

    let mut mix = vec![0.0; dim];
    let mut local: Option<Cand> = None;
    for (ai, &a) in a_vals.iter().enumerate() {
        mix_into(&mut mix, m1, m2, a);
        let qmix = match q.eval(&mix) {
            Ok(v) => v,
            Err(source) => {
                return Err(SampleErr {
                    cand: err_key(min_s, a, m1, m2),
                    source,
                })
            }
        };
        for (si, &s) in s_vals.iter().enumerate() {
            let (w1, w2) = match wtab {
                Some(tab) => tab[ai][si],
                None => class_weights(class, a, s),
            };
            let r = match class {
                ClassId::GsExponential => qmix - w1 * q1 - w2 * q2 - a * gvals[si],
                ClassId::SubBSConvex => qmix - w1 * q1 - w2 * q2 - gvals[si],
                ClassId::SConvex | ClassId::ExponentialKind => qmix - w1 * q1 - w2 * q2,
            };
            let cand = Cand {
                residual: r,
                s,
                a,
                m1: m1.to_vec(),
                m2: m2.to_vec(),
            };
            local = Some(match local.take() {
                None => cand,
                Some(prev) => worse(prev, cand),
            });
        }
    }
    Ok(local)
}
