//! Unconstrained minimization over box domains and the sampled sufficient
//! optimality certificate.
//!
//! The solver is multi-start projected gradient descent: per-coordinate
//! clamping onto the box, backtracking line search halving from 1.0 with an
//! Armijo constant of 1e-4, deterministic for a fixed seed. The certificate
//! checks `grad Q(m) . (n - m) > G(n, m, s) + 3 Q(m) / a` over an n-grid that
//! always includes the candidate itself; a holding certificate is a sampled
//! verification of the sufficient condition, with the remainder term taken
//! as zero.

use crate::diff::{gradient, DiffError, GradientMethod};
use crate::expr::EvalError;
use crate::kernel::{FunctionSpec, ModMap, ParamError, Point, SParam};
use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error(transparent)]
    Gradient(#[from] DiffError),
    #[error("candidate point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("certificate mixing value must lie strictly inside (0, 1), got {0}")]
    BadCertifyMix(f64),
    #[error("n-grid point {point:?} lies outside the domain")]
    GridOutOfDomain { point: Vec<f64> },
    #[error("all {} starts stalled at their first step", traces.len())]
    AllStartsDiverged { traces: Vec<StartTrace> },
    #[error("report needs at least one result or certificate")]
    EmptyReport,
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Backtracking line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRule {
    pub initial: f64,
    pub shrink: f64,
    pub armijo: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule {
            initial: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeOptions {
    pub starts: usize,
    pub step: StepRule,
    pub max_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            starts: 8,
            step: StepRule::default(),
            max_iters: 200,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartStatus {
    /// Projected-gradient measure fell below tolerance.
    Converged,
    /// Line search underflowed before any acceptable step.
    Stalled,
    /// Iteration budget exhausted.
    MaxIters,
}

/// Per-start trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartTrace {
    pub start: Point,
    pub final_point: Point,
    pub final_value: f64,
    pub iterations: usize,
    pub status: StartStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub function: String,
    pub best_point: Point,
    pub best_value: f64,
    pub starts_used: usize,
    pub traces: Vec<StartTrace>,
}

/// Multi-start projected gradient descent; the first start is the box
/// center, the rest are seeded uniform draws. Returns the best final point
/// across starts.
pub fn minimize(q: &FunctionSpec, opts: &MinimizeOptions) -> Result<OptimizationResult, OptError> {
    let starts = starting_points(q, opts);
    let mut traces = Vec::with_capacity(starts.len());
    for start in starts {
        traces.push(descend(q, start, opts)?);
    }
    let diverged = traces
        .iter()
        .all(|t| t.status == StartStatus::Stalled && t.iterations == 0);
    if diverged {
        return Err(OptError::AllStartsDiverged { traces });
    }
    let best = traces
        .iter()
        .min_by(|x, y| {
            x.final_value
                .partial_cmp(&y.final_value)
                .unwrap_or(Ordering::Equal)
                .then_with(|| cmp_coords(x.final_point.coords(), y.final_point.coords()))
        })
        .expect("at least one start");
    Ok(OptimizationResult {
        function: q.name.clone(),
        best_point: best.final_point.clone(),
        best_value: best.final_value,
        starts_used: traces.len(),
        traces,
    })
}

fn starting_points(q: &FunctionSpec, opts: &MinimizeOptions) -> Vec<Point> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::with_capacity(opts.starts.max(1));
    let center: Vec<f64> = q
        .domain
        .bounds()
        .iter()
        .map(|&(lo, hi)| 0.5 * (lo + hi))
        .collect();
    out.push(Point::new(center));
    for _ in 1..opts.starts.max(1) {
        out.push(Point::new(
            q.domain
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
        ));
    }
    out
}

fn descend(q: &FunctionSpec, start: Point, opts: &MinimizeOptions) -> Result<StartTrace, OptError> {
    let mut x = q.domain.project(start.coords());
    let mut fx = eval(q, &x)?;
    let mut status = StartStatus::MaxIters;
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        let grad = gradient(q, &Point::new(x.clone()), GradientMethod::Dual)?;
        let g = grad.components.coords();

        // projected-gradient stationarity measure with unit step
        let probe = q.domain.project(&sub(&x, g, 1.0));
        if norm_diff(&probe, &x) <= opts.tolerance {
            status = StartStatus::Converged;
            break;
        }

        let mut t = opts.step.initial;
        let mut accepted = None;
        while t > 1e-18 {
            let xn = q.domain.project(&sub(&x, g, t));
            let fxn = eval(q, &xn)?;
            let slope: f64 = g
                .iter()
                .zip(xn.iter().zip(&x))
                .map(|(gi, (n, o))| gi * (n - o))
                .sum();
            if fxn <= fx + opts.step.armijo * slope {
                accepted = Some((xn, fxn));
                break;
            }
            t *= opts.step.shrink;
        }
        match accepted {
            Some((xn, fxn)) => {
                let moved = norm_diff(&xn, &x);
                x = xn;
                fx = fxn;
                iterations += 1;
                if moved <= opts.tolerance {
                    status = StartStatus::Converged;
                    break;
                }
            }
            None => {
                status = StartStatus::Stalled;
                break;
            }
        }
    }
    Ok(StartTrace {
        start,
        final_point: Point::new(x),
        final_value: fx,
        iterations,
        status,
    })
}

fn sub(x: &[f64], g: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(g).map(|(xi, gi)| xi - t * gi).collect()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn eval(q: &FunctionSpec, x: &[f64]) -> Result<f64, OptError> {
    q.eval(x).map_err(|source| OptError::Eval {
        point: x.to_vec(),
        source,
    })
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

/// Outcome of the sampled sufficient-optimality check at a candidate point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub function: String,
    pub candidate: Point,
    pub a: f64,
    pub s: f64,
    pub holds: bool,
    pub worst_margin: f64,
    pub witness: Point,
    pub samples: usize,
}

/// Evaluates `margin(n) = grad Q(m) . (n - m) - G(n, m, s) - 3 Q(m) / a`
/// over the n-grid (the candidate is added when missing, since the condition
/// quantifies over every point of the domain). The certificate holds when
/// the minimum margin is strictly positive.
pub fn certify_unconstrained(
    q: &FunctionSpec,
    g: &ModMap,
    s: SParam,
    a: f64,
    m: &Point,
    n_grid: &[Point],
) -> Result<Certificate, OptError> {
    if !(a.is_finite() && a > 0.0 && a < 1.0) {
        return Err(OptError::BadCertifyMix(a));
    }
    if !q.domain.contains(m) {
        return Err(OptError::OutOfDomain {
            point: m.coords().to_vec(),
        });
    }
    let grad = gradient(q, m, GradientMethod::Dual)?;
    let qm = eval(q, m.coords())?;
    let penalty = 3.0 * qm / a;

    let mut worst: Option<(f64, &Point)> = None;
    let mut samples = 0usize;
    let mut seen_candidate = false;
    let margin_at = |n: &Point| -> Result<f64, OptError> {
        let gv = g
            .eval(n.coords(), m.coords(), s.value())
            .map_err(|source| OptError::Eval {
                point: n.coords().to_vec(),
                source,
            })?;
        let mut dot = 0.0;
        for i in 0..q.dim() {
            dot += grad.components[i] * (n[i] - m[i]);
        }
        Ok(dot - gv - penalty)
    };
    for n in n_grid {
        if !q.domain.contains(n) {
            return Err(OptError::GridOutOfDomain {
                point: n.coords().to_vec(),
            });
        }
        seen_candidate |= n.coords() == m.coords();
        let margin = margin_at(n)?;
        samples += 1;
        let replace = match worst {
            None => true,
            Some((w, wn)) => {
                margin < w || (margin == w && cmp_coords(n.coords(), wn.coords()) == Ordering::Less)
            }
        };
        if replace {
            worst = Some((margin, n));
        }
    }
    let candidate_margin;
    if !seen_candidate {
        candidate_margin = margin_at(m)?;
        samples += 1;
        let replace = match worst {
            None => true,
            Some((w, wn)) => {
                candidate_margin < w
                    || (candidate_margin == w
                        && cmp_coords(m.coords(), wn.coords()) == Ordering::Less)
            }
        };
        if replace {
            worst = Some((candidate_margin, m));
        }
    }
    let (worst_margin, witness) = worst.expect("n-grid plus candidate is non-empty");
    Ok(Certificate {
        function: q.name.clone(),
        candidate: m.clone(),
        a,
        s: s.value(),
        holds: worst_margin > 0.0,
        worst_margin,
        witness: witness.clone(),
        samples,
    })
}

/// Aggregated run report over solver results and certificates.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub results: Vec<OptimizationResult>,
    pub certificates: Vec<Certificate>,
    /// True when at least one certificate holds.
    pub optimality_supported: bool,
}

pub fn build_report(
    results: &[OptimizationResult],
    certificates: &[Certificate],
) -> Result<RunSummary, OptError> {
    if results.is_empty() && certificates.is_empty() {
        return Err(OptError::EmptyReport);
    }
    Ok(RunSummary {
        results: results.to_vec(),
        certificates: certificates.to_vec(),
        optimality_supported: certificates.iter().any(|c| c.holds),
    })
}
