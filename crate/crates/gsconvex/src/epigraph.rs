//! Epigraph view of the class: set-level combination of epigraph points,
//! the membership/epigraph equivalence check, and a boundedness scan on
//! intervals.
//!
//! The epigraph of Q is `E(Q) = {(m, alpha) : Q(m) <= alpha}`. Q belongs to
//! the class exactly when E(Q) is closed under the weighted combination
//! `(a m1 + (1-a) m2, w1 alpha1 + w2 alpha2 + a G(m1, m2, s))`; the check
//! here verifies both directions at sample scale.

use crate::cert::{self, ClassId, ConvexityReport, Verdict};
use crate::expr::EvalError;
use crate::kernel::{
    linspace, weights, FunctionSpec, MixParam, ModMap, ParamError, Point, SParam, SampleGrid,
};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use thiserror::Error;

/// Default epigraph offsets: the boundary and two interior heights.
pub const DEFAULT_DELTAS: [f64; 3] = [0.0, 0.1, 1.0];

/// A point of `R^{n+1}` paired with a height.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpiPoint {
    pub m: Point,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpigraphError {
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("point {point:?} lies outside the function domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("boundedness scan needs a one-dimensional function")]
    NotOneDimensional,
    #[error("scan interval [{lo}, {hi}] must sit inside the domain")]
    BadInterval { lo: f64, hi: f64 },
    #[error(transparent)]
    Cert(#[from] cert::CertError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Whether `(m, alpha)` lies in the epigraph of Q, up to `tolerance`.
pub fn epi_contains(q: &FunctionSpec, p: &EpiPoint, tolerance: f64) -> Result<bool, EpigraphError> {
    if !q.domain.contains(&p.m) {
        return Err(EpigraphError::OutOfDomain {
            point: p.m.coords().to_vec(),
        });
    }
    let v = q.eval(p.m.coords()).map_err(|source| EpigraphError::Eval {
        point: p.m.coords().to_vec(),
        source,
    })?;
    Ok(v <= p.alpha + tolerance)
}

/// The set-level combination of two epigraph points:
/// `(a m1 + (1-a) m2, w1 alpha1 + w2 alpha2 + a G(m1, m2, s))`.
pub fn gs_combine_point(
    p1: &EpiPoint,
    p2: &EpiPoint,
    a: MixParam,
    s: SParam,
    g: &ModMap,
) -> Result<EpiPoint, EpigraphError> {
    let av = a.value();
    let gv = g
        .eval(p1.m.coords(), p2.m.coords(), s.value())
        .map_err(|source| EpigraphError::Eval {
            point: p1.m.coords().to_vec(),
            source,
        })?;
    let w = weights(a, s);
    let mut m = vec![0.0; p1.m.dim()];
    cert::mix_into(&mut m, p1.m.coords(), p2.m.coords(), av);
    let alpha = w.w1 * p1.alpha + w.w2 * p2.alpha + av * gv;
    Ok(EpiPoint {
        m: Point::new(m),
        alpha,
    })
}

/// A combined epigraph point that escaped the epigraph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeSample {
    pub a: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub m1: Point,
    pub m2: Point,
    pub combined_m: Point,
    pub combined_alpha: f64,
    pub q_at_combined: f64,
}

/// Outcome of the two-directional epigraph check.
#[derive(Debug, Clone, Serialize)]
pub struct EpigraphReport {
    pub gs_report: ConvexityReport,
    pub combinations: usize,
    pub escapes: usize,
    pub first_escape: Option<EscapeSample>,
    /// Membership verdict and set-closure verdict agree.
    pub consistent: bool,
}

/// Checks both directions of the epigraph characterization at sample scale:
/// if the membership sweep passes, no sampled combination may escape the
/// epigraph; if a combination escapes, the sweep over the same grid must
/// fail.
pub fn check_epigraph_equivalence(
    q: &FunctionSpec,
    g: &ModMap,
    s: SParam,
    grid: &SampleGrid,
    deltas: &[f64],
    tolerance: f64,
) -> Result<EpigraphReport, EpigraphError> {
    let gs_report = cert::check_class(ClassId::GsExponential, q, Some(g), s, grid, tolerance)?;

    let pts = grid.m_points(&q.domain);
    let qvals: Vec<f64> = pts
        .iter()
        .map(|p| {
            q.eval(p.coords()).map_err(|source| EpigraphError::Eval {
                point: p.coords().to_vec(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let refine = grid.refinement(&q.domain);

    let n = pts.len();
    let a_grid = grid.a_grid();
    let combinations = (n * n * a_grid.len() + refine.len()) * deltas.len() * deltas.len();

    let merge_escapes = |x: (usize, Option<EscapeSample>), y: (usize, Option<EscapeSample>)| {
        let first = match (x.1, y.1) {
            (None, f) | (f, None) => f,
            (Some(a), Some(b)) => Some(if escape_key_cmp(&a, &b) == Ordering::Greater {
                b
            } else {
                a
            }),
        };
        (x.0 + y.0, first)
    };

    let grid_escapes = (0..n * n)
        .into_par_iter()
        .map(
            |pair| -> Result<(usize, Option<EscapeSample>), EpigraphError> {
                let (i, j) = (pair / n, pair % n);
                scan_pair(
                    q, g, s, &pts[i], &pts[j], qvals[i], qvals[j], deltas, a_grid, tolerance,
                )
            },
        )
        .try_reduce(|| (0usize, None), |x, y| Ok(merge_escapes(x, y)))?;

    let refine_escapes = refine
        .par_iter()
        .map(
            |r| -> Result<(usize, Option<EscapeSample>), EpigraphError> {
                let q1 = q
                    .eval(r.m1.coords())
                    .map_err(|source| EpigraphError::Eval {
                        point: r.m1.coords().to_vec(),
                        source,
                    })?;
                let q2 = q
                    .eval(r.m2.coords())
                    .map_err(|source| EpigraphError::Eval {
                        point: r.m2.coords().to_vec(),
                        source,
                    })?;
                scan_pair(
                    q,
                    g,
                    s,
                    &r.m1,
                    &r.m2,
                    q1,
                    q2,
                    deltas,
                    std::slice::from_ref(&r.a),
                    tolerance,
                )
            },
        )
        .try_reduce(|| (0usize, None), |x, y| Ok(merge_escapes(x, y)))?;

    let escapes = merge_escapes(grid_escapes, refine_escapes);
    let (escapes, first_escape) = escapes;
    let consistent = (gs_report.verdict == Verdict::Pass) == (escapes == 0);
    Ok(EpigraphReport {
        gs_report,
        combinations,
        escapes,
        first_escape,
        consistent,
    })
}

#[allow(clippy::too_many_arguments)]
fn scan_pair(
    q: &FunctionSpec,
    g: &ModMap,
    s: SParam,
    m1: &Point,
    m2: &Point,
    q1: f64,
    q2: f64,
    deltas: &[f64],
    a_values: &[f64],
    tolerance: f64,
) -> Result<(usize, Option<EscapeSample>), EpigraphError> {
    let mut count = 0usize;
    let mut first: Option<EscapeSample> = None;
    for &d1 in deltas {
        for &d2 in deltas {
            let p1 = EpiPoint {
                m: m1.clone(),
                alpha: q1 + d1,
            };
            let p2 = EpiPoint {
                m: m2.clone(),
                alpha: q2 + d2,
            };
            for &a in a_values {
                let mut combined = gs_combine_point(&p1, &p2, MixParam::new(a)?, s, g)?;
                // rounding can push the mix one ulp past the box;
                // clamp back so membership stays testable
                combined.m = Point::new(q.domain.project(combined.m.coords()));
                let inside = epi_contains(q, &combined, tolerance)?;
                if !inside {
                    count += 1;
                    let q_at =
                        q.eval(combined.m.coords())
                            .map_err(|source| EpigraphError::Eval {
                                point: combined.m.coords().to_vec(),
                                source,
                            })?;
                    let cand = EscapeSample {
                        a,
                        delta1: d1,
                        delta2: d2,
                        m1: m1.clone(),
                        m2: m2.clone(),
                        combined_m: combined.m.clone(),
                        combined_alpha: combined.alpha,
                        q_at_combined: q_at,
                    };
                    first = Some(match first.take() {
                        None => cand,
                        Some(prev) => {
                            if escape_key_cmp(&cand, &prev) == Ordering::Less {
                                cand
                            } else {
                                prev
                            }
                        }
                    });
                }
            }
        }
    }
    Ok((count, first))
}

fn escape_key_cmp(x: &EscapeSample, y: &EscapeSample) -> Ordering {
    x.a.partial_cmp(&y.a)
        .unwrap()
        .then_with(|| x.delta1.partial_cmp(&y.delta1).unwrap())
        .then_with(|| x.delta2.partial_cmp(&y.delta2).unwrap())
        .then_with(|| cmp_coords(x.m1.coords(), y.m1.coords()))
        .then_with(|| cmp_coords(x.m2.coords(), y.m2.coords()))
}

fn cmp_coords(x: &[f64], y: &[f64]) -> Ordering {
    for (a, b) in x.iter().zip(y) {
        match a.partial_cmp(b).unwrap() {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Witness that a scan hit an evaluation failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsFailure {
    pub point: f64,
    pub message: String,
}

/// Grid extrema of Q on an interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsScan {
    pub sup: f64,
    pub inf: f64,
    pub bounded: bool,
    /// User-supplied bound on the modulating map, recorded for the report.
    pub g_bound: f64,
    pub points: usize,
    pub failure: Option<BoundsFailure>,
}

/// Scans Q on `[lo, hi]` with `points` samples. Evaluation failures count as
/// unbounded evidence and carry the witness point.
pub fn boundedness_scan(
    q: &FunctionSpec,
    lo: f64,
    hi: f64,
    points: usize,
    g_bound: f64,
) -> Result<BoundsScan, EpigraphError> {
    if q.dim() != 1 {
        return Err(EpigraphError::NotOneDimensional);
    }
    let (dlo, dhi) = q.domain.bounds()[0];
    if !(dlo <= lo && lo <= hi && hi <= dhi) {
        return Err(EpigraphError::BadInterval { lo, hi });
    }
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut failure = None;
    for x in linspace(lo, hi, points.max(1)) {
        match q.eval(&[x]) {
            Ok(v) => {
                sup = sup.max(v);
                inf = inf.min(v);
            }
            Err(e) => {
                failure = Some(BoundsFailure {
                    point: x,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(BoundsScan {
        sup,
        inf,
        bounded: failure.is_none(),
        g_bound,
        points: points.max(1),
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{ExprAst, VarSet};
    use crate::kernel::BoxDomain;

    fn func(expr: &str, bounds: (f64, f64)) -> FunctionSpec {
        FunctionSpec::new(
            expr,
            ExprAst::parse(expr, 1, VarSet::Function).unwrap(),
            BoxDomain::interval(bounds.0, bounds.1).unwrap(),
        )
        .unwrap()
    }

    fn epi(m: f64, alpha: f64) -> EpiPoint {
        EpiPoint {
            m: Point::new(vec![m]),
            alpha,
        }
    }

    fn sp(v: f64) -> SParam {
        SParam::new(v).unwrap()
    }

    fn mp(v: f64) -> MixParam {
        MixParam::new(v).unwrap()
    }

    #[test]
    fn membership_with_tolerance() {
        let q = func("x1^2", (0.0, 1.0));
        assert!(epi_contains(&q, &epi(0.5, 0.3), 1e-9).unwrap());
        assert!(epi_contains(&q, &epi(0.5, 0.25), 1e-9).unwrap());
        assert!(!epi_contains(&q, &epi(0.5, 0.2), 1e-9).unwrap());
    }

    #[test]
    fn combine_midpoint() {
        let g = ModMap::zero(1);
        let c = gs_combine_point(&epi(0.0, 0.0), &epi(1.0, 1.0), mp(0.5), sp(1.0), &g).unwrap();
        assert_eq!(c.m.coords(), &[0.5]);
        assert!((c.alpha - 0.6487212707001282).abs() < 1e-12);
    }

    #[test]
    fn combine_at_a_one_keeps_first_point() {
        let g = ModMap::zero(1);
        let c = gs_combine_point(&epi(0.3, 2.0), &epi(0.9, 5.0), mp(1.0), sp(0.5), &g).unwrap();
        assert_eq!(c.m.coords(), &[0.3]);
        let w1 = weights(mp(1.0), sp(0.5)).w1;
        assert_eq!(c.alpha, w1 * 2.0);
    }

    #[test]
    fn combine_at_a_zero_scales_second_height() {
        let g = ModMap::zero(1);
        let c = gs_combine_point(&epi(0.3, 2.0), &epi(0.9, 1.0), mp(0.0), sp(1.0), &g).unwrap();
        assert_eq!(c.m.coords(), &[0.9]);
        assert!((c.alpha - 1.718281828459045).abs() < 1e-12);
    }

    #[test]
    fn square_is_consistent_with_no_escapes() {
        let q = func("x1^2", (0.0, 1.0));
        let g = ModMap::zero(1);
        let grid = SampleGrid::uniform(7, 7, vec![1.0], 0, 0).unwrap();
        let rep =
            check_epigraph_equivalence(&q, &g, sp(1.0), &grid, &DEFAULT_DELTAS, 1e-9).unwrap();
        assert_eq!(rep.gs_report.verdict, Verdict::Pass);
        assert_eq!(rep.escapes, 0);
        assert!(rep.consistent);
        assert_eq!(rep.combinations, 7 * 7 * 9 * 7);
    }

    #[test]
    fn negative_constant_escapes_and_fails_consistently() {
        let q = func("-1", (0.0, 1.0));
        let g = ModMap::zero(1);
        let grid = SampleGrid::uniform(3, 3, vec![1.0], 0, 0).unwrap();
        let rep =
            check_epigraph_equivalence(&q, &g, sp(1.0), &grid, &DEFAULT_DELTAS, 1e-9).unwrap();
        assert_eq!(rep.gs_report.verdict, Verdict::Fail);
        assert!(rep.escapes > 0);
        assert!(rep.consistent);
        let esc = rep.first_escape.unwrap();
        assert_eq!(esc.a, 0.0);
        assert_eq!(esc.delta1, 0.0);
        assert_eq!(esc.delta2, 0.0);
    }

    #[test]
    fn degenerate_grid_single_point() {
        let q = func("x1^2", (0.4, 0.4));
        let g = ModMap::zero(1);
        let grid = SampleGrid::new(1, vec![0.0, 0.5, 1.0], vec![1.0], 0, 0).unwrap();
        let rep =
            check_epigraph_equivalence(&q, &g, sp(1.0), &grid, &DEFAULT_DELTAS, 1e-9).unwrap();
        assert!(rep.consistent);
    }

    #[test]
    fn boundary_combination_matches_direct_evaluation() {
        // a = 1 with the zero map reduces membership to Q(m1) <= w1 alpha1
        let q = func("exp(x1)", (0.0, 1.0));
        let g = ModMap::zero(1);
        for (m1, alpha1, s) in [(0.2, 1.5, 1.0), (0.8, 2.5, 0.5), (0.0, 1.0, 0.25)] {
            let c = gs_combine_point(&epi(m1, alpha1), &epi(0.5, 9.0), mp(1.0), sp(s), &g).unwrap();
            let direct = q.eval(&[m1]).unwrap() <= weights(mp(1.0), sp(s)).w1 * alpha1 + 1e-9;
            assert_eq!(epi_contains(&q, &c, 1e-9).unwrap(), direct);
            assert!((c.alpha - weights(mp(1.0), sp(s)).w1 * alpha1).abs() <= 1e-12);
        }
    }

    #[test]
    fn combined_points_tolerate_one_ulp_drift_outside_the_box() {
        // a * hi + (1 - a) * hi can land one ulp above hi; the equivalence
        // check must clamp instead of erroring on those samples
        let q = func("x1^2", (0.0, 0.3));
        let g = ModMap::zero(1);
        let grid = SampleGrid::new(3, vec![0.0, 0.1, 0.2, 0.5, 1.0], vec![1.0], 0, 0).unwrap();
        let rep =
            check_epigraph_equivalence(&q, &g, sp(1.0), &grid, &DEFAULT_DELTAS, 1e-9).unwrap();
        assert!(rep.consistent);
        assert_eq!(rep.escapes, 0);
    }

    #[test]
    fn refinement_only_violation_stays_consistent() {
        // a narrow dip keeps every grid sample clean, so only random
        // refinement endpoints can expose the violation; both sweeps must
        // see the same sample set or the verdicts drift apart
        let q = func("x1^2 - max(0, 1 - 100 * abs(x1 - 0.3))", (0.0, 1.0));
        let g = ModMap::zero(1);
        let mut failures = 0;
        for seed in 0..10u64 {
            let grid = SampleGrid::new(3, vec![0.0, 0.5, 1.0], vec![1.0], 200, seed).unwrap();
            let rep =
                check_epigraph_equivalence(&q, &g, sp(1.0), &grid, &DEFAULT_DELTAS, 1e-9).unwrap();
            assert!(rep.consistent, "seed {seed}: {rep:?}");
            if rep.gs_report.verdict == Verdict::Fail {
                failures += 1;
                assert!(rep.escapes > 0, "seed {seed} failed without an escape");
            }
        }
        assert!(failures > 0, "no seed hit the dip; the fixture is too weak");
    }

    #[test]
    fn bounds_scan_square() {
        let q = func("x1^2", (0.0, 1.0));
        let scan = boundedness_scan(&q, 0.0, 1.0, 101, 10.0).unwrap();
        assert_eq!(scan.sup, 1.0);
        assert_eq!(scan.inf, 0.0);
        assert!(scan.bounded);
        assert_eq!(scan.g_bound, 10.0);
    }

    #[test]
    fn bounds_scan_exponential() {
        let q = func("exp(x1)", (0.0, 2.0));
        let scan = boundedness_scan(&q, 0.0, 2.0, 101, 1.0).unwrap();
        assert!((scan.sup - 7.38905609893065).abs() < 1e-12);
        assert!(scan.bounded);
    }

    #[test]
    fn bounds_scan_reciprocal_reports_unbounded_evidence() {
        let q = func("1/x1", (0.0, 1.0));
        let scan = boundedness_scan(&q, 0.0, 1.0, 11, 1.0).unwrap();
        assert!(!scan.bounded);
        let failure = scan.failure.unwrap();
        assert_eq!(failure.point, 0.0);
    }

    #[test]
    fn bounds_scan_extrema_monotone_under_refinement() {
        let q = func("exp(x1) * (1 - x1)", (0.0, 1.0));
        let coarse = boundedness_scan(&q, 0.0, 1.0, 51, 1.0).unwrap();
        let fine = boundedness_scan(&q, 0.0, 1.0, 101, 1.0).unwrap();
        assert!(fine.sup >= coarse.sup - 1e-12);
        assert!(fine.inf <= coarse.inf + 1e-12);
    }
}
