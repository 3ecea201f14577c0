//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use common::*;
use gsconvex::algebra::{self, GsPair};
use gsconvex::cert::{self, Verdict};
use gsconvex::diff::{self, AltFactor, GradientMethod};
use gsconvex::epigraph::{self, DEFAULT_DELTAS};
use gsconvex::kernel::{linspace, weight_margins, FunctionSpec, ModMap, Point, SampleGrid};
use gsconvex::opt::{self, MinimizeOptions};
use gsconvex::oracle;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

struct Criterion {
    id: usize,
    label: &'static str,
    started: Instant,
}

impl Criterion {
    fn new(id: usize, label: &'static str) -> Self {
        Criterion {
            id,
            label,
            started: Instant::now(),
        }
    }

    fn pass(self) {
        println!(
            "ACCEPTANCE {:2} PASS ({:7.3}s): {}",
            self.id,
            self.started.elapsed().as_secs_f64(),
            self.label
        );
    }

    fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }
}

#[test]
fn criterion_01_weight_margin_suite() {
    let c = Criterion::new(1, "weight margins non-negative on the 101x20 (a, s) grid");
    for i in 0..=100 {
        for j in 1..=20 {
            let a = mp(i as f64 / 100.0);
            let s = sp(j as f64 / 20.0);
            let (d1, d2) = weight_margins(a, s);
            assert!(
                d1 >= -1e-12,
                "w1 margin {d1} at a={}, s={}",
                a.value(),
                s.value()
            );
            assert!(
                d2 >= -1e-12,
                "w2 margin {d2} at a={}, s={}",
                a.value(),
                s.value()
            );
        }
    }
    assert!(
        c.elapsed() < 1.0,
        "weight-margin suite exceeded 1 s: {:.3}s",
        c.elapsed()
    );
    c.pass();
}

#[test]
fn criterion_02_nonnegative_convex_corpus() {
    let c = Criterion::new(2, "non-negative convex corpus passes with the zero map");
    let grid = SampleGrid::uniform(21, 21, CORPUS_S_VALUES.to_vec(), 0, 0).unwrap();
    for member in corpus() {
        let zero = ModMap::zero(member.spec.dim());
        let report = cert::check_gs_convex(&member.spec, &zero, &grid, 1e-9).unwrap();
        assert_eq!(
            report.verdict,
            Verdict::Pass,
            "`{}` failed with worst residual {} at {:?}",
            member.spec.name,
            report.worst.residual,
            report.worst
        );
    }
    assert!(
        c.elapsed() < 10.0,
        "corpus sweep exceeded 10 s: {:.3}s",
        c.elapsed()
    );
    c.pass();
}

#[test]
fn criterion_03_counterexample_suite() {
    let c = Criterion::new(
        3,
        "negative constant fails at a = 0 and is endpoint-infeasible",
    );
    let q = func("-1", &[(0.0, 1.0)]);
    let zero = ModMap::zero(1);
    let grid = SampleGrid::uniform(11, 11, vec![1.0], 0, 0).unwrap();
    let report = cert::check_gs_convex(&q, &zero, &grid, 1e-9).unwrap();
    assert_eq!(report.verdict, Verdict::Fail);
    assert_eq!(report.worst.a, 0.0, "witness must sit at a = 0");
    assert!(
        (report.worst.residual - 0.7182818284590451).abs() <= 1e-9,
        "worst residual {}",
        report.worst.residual
    );

    let a_grid: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
    let mg = cert::minimal_g(&q, sp(1.0), &pt(&[0.2]), &pt(&[0.9]), &a_grid).unwrap();
    assert!(
        !mg.endpoint_feasible,
        "no finite map can repair the a = 0 constraint"
    );
    c.pass();
}

#[test]
fn criterion_04_algebra_identities() {
    let c = Criterion::new(
        4,
        "residual additivity and homogeneity across 10^4 random samples",
    );
    let p1 = GsPair::new(func("x1^2", &[(0.0, 1.0)]), modmap("0.2 + s", 1)).unwrap();
    let p2 = GsPair::new(func("exp(x1)", &[(0.0, 1.0)]), modmap("abs(u1 - v1)", 1)).unwrap();
    let sum = algebra::combine_sum(&p1, &p2).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let m1 = pt(&[rng.random_range(0.0..=1.0)]);
        let m2 = pt(&[rng.random_range(0.0..=1.0)]);
        let a = mp(rng.random_range(0.0..=1.0));
        let s = sp(rng.random_range(0.01..=1.0));
        let beta = rng.random_range(0.0..=3.0);

        let r1 = cert::residual(&p1.q, &p1.g, s, &m1, &m2, a).unwrap();
        let r2 = cert::residual(&p2.q, &p2.g, s, &m1, &m2, a).unwrap();
        let rs = cert::residual(&sum.q, &sum.g, s, &m1, &m2, a).unwrap();
        assert!(
            (rs - (r1 + r2)).abs() <= 1e-12,
            "additivity violated: {rs} vs {r1} + {r2}"
        );

        let scaled = algebra::scale(&p1, beta).unwrap();
        let rb = cert::residual(&scaled.q, &scaled.g, s, &m1, &m2, a).unwrap();
        assert!(
            (rb - beta * r1).abs() <= 1e-12,
            "homogeneity violated at beta={beta}: {rb} vs {}",
            beta * r1
        );
    }

    // combinations of passing pairs keep passing
    let grid = SampleGrid::uniform(9, 9, vec![0.5, 1.0], 0, 0).unwrap();
    let zero1 = GsPair::new(func("x1^2", &[(0.0, 1.0)]), ModMap::zero(1)).unwrap();
    let zero2 = GsPair::new(func("exp(x1)", &[(0.0, 1.0)]), ModMap::zero(1)).unwrap();
    for p in [&zero1, &zero2] {
        assert_eq!(
            cert::check_gs_convex(&p.q, &p.g, &grid, 1e-9)
                .unwrap()
                .verdict,
            Verdict::Pass
        );
    }
    let composites = vec![
        algebra::combine_sum(&zero1, &zero2).unwrap(),
        algebra::scale(&zero1, 2.5).unwrap(),
        algebra::linear_combination(&[zero1.clone(), zero2.clone()], &[0.3, 1.7]).unwrap(),
        algebra::post_compose_linear(&zero2, 0.5).unwrap(),
    ];
    for p in &composites {
        let report = cert::check_gs_convex(&p.q, &p.g, &grid, 1e-9).unwrap();
        assert_eq!(
            report.verdict,
            Verdict::Pass,
            "composite `{}` failed",
            p.q.name
        );
    }
    c.pass();
}

#[test]
fn criterion_05_epigraph_zero_escapes() {
    let c = Criterion::new(5, "zero escapes across >= 10^4 epigraph combinations");
    let mut total = 0usize;
    for member in corpus() {
        let dim = member.spec.dim();
        let zero = ModMap::zero(dim);
        let points = if dim == 1 { 15 } else { 5 };
        let grid = SampleGrid::uniform(points, 11, vec![0.5], 0, 0).unwrap();
        let rep = epigraph::check_epigraph_equivalence(
            &member.spec,
            &zero,
            sp(0.5),
            &grid,
            &DEFAULT_DELTAS,
            1e-9,
        )
        .unwrap();
        assert_eq!(
            rep.gs_report.verdict,
            Verdict::Pass,
            "`{}`",
            member.spec.name
        );
        assert_eq!(
            rep.escapes, 0,
            "`{}` had {} escapes, first {:?}",
            member.spec.name, rep.escapes, rep.first_escape
        );
        assert!(rep.consistent);
        total += rep.combinations;
    }
    assert!(total >= 10_000, "only {total} combinations sampled");
    c.pass();
}

#[test]
fn criterion_06_minimal_g_sufficiency() {
    let c = Criterion::new(
        6,
        "constant map at gstar + 1e-9 clears every generating residual",
    );
    let a_grid: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
    for member in corpus() {
        let grid_pts = member.spec.domain.grid_points(3);
        for s in CORPUS_S_VALUES {
            for m1 in &grid_pts {
                for m2 in &grid_pts {
                    let mg = cert::minimal_g(&member.spec, sp(s), m1, m2, &a_grid).unwrap();
                    let g = ModMap::constant(mg.gstar + 1e-9, member.spec.dim());
                    for &a in &a_grid {
                        let r = cert::residual(&member.spec, &g, sp(s), m1, m2, mp(a)).unwrap();
                        assert!(
                            r <= 0.0,
                            "`{}` residual {r} at s={s}, a={a}, m1={:?}, m2={:?}",
                            member.spec.name,
                            m1.coords(),
                            m2.coords()
                        );
                    }
                }
            }
        }
    }
    c.pass();
}

#[test]
fn criterion_07_gradient_checks() {
    let c = Criterion::new(7, "dual vs central gradients and secant convergence");
    // 50 random smooth samples across a family of smooth test functions
    let smooth: Vec<FunctionSpec> = vec![
        func("x1^2", &[(-1.0, 1.0)]),
        func("exp(x1)", &[(-1.0, 1.0)]),
        func("exp(x1) * x1^2 + 0.3 * x1", &[(-1.0, 1.0)]),
        func("x1^3 - 2 * x1 + 1", &[(-1.0, 1.0)]),
        func("x1^2 + x2^2", &[(-1.0, 1.0), (-1.0, 1.0)]),
        func("exp(x1 * x2)", &[(-1.0, 1.0), (-1.0, 1.0)]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 50 {
        let q = &smooth[rng.random_range(0..smooth.len())];
        let m = Point::new(
            (0..q.dim())
                .map(|_| rng.random_range(-0.9..=0.9))
                .collect::<Vec<f64>>(),
        );
        let dual = diff::gradient(q, &m, GradientMethod::Dual).unwrap();
        let central = diff::gradient(q, &m, GradientMethod::Central { h: 1e-5 }).unwrap();
        for i in 0..q.dim() {
            let denom = dual.components[i].abs().max(1.0);
            let rel = (dual.components[i] - central.components[i]).abs() / denom;
            assert!(
                rel <= 1e-6,
                "relative error {rel} for `{}` at {:?}",
                q.name,
                m.coords()
            );
        }
        checked += 1;
    }

    // secant slope approaches the directional derivative monotonically
    for (q, m1, m2) in [
        (func("x1^2", &[(0.0, 1.0)]), pt(&[0.9]), pt(&[0.2])),
        (func("exp(x1)", &[(0.0, 1.0)]), pt(&[1.0]), pt(&[0.1])),
        (
            func("x1^2 + x2^2", &[(0.0, 1.0), (0.0, 1.0)]),
            pt(&[0.9, 0.8]),
            pt(&[0.1, 0.3]),
        ),
    ] {
        let grad = diff::gradient(&q, &m2, GradientMethod::Dual).unwrap();
        let mut target = 0.0;
        for i in 0..q.dim() {
            target += grad.components[i] * (m1[i] - m2[i]);
        }
        let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&a| (diff::secant_slope(&q, &m1, &m2, mp(a)).unwrap() - target).abs())
            .collect();
        assert!(
            gaps[1] < gaps[0] && gaps[2] < gaps[1],
            "gaps not decreasing for `{}`: {gaps:?}",
            q.name
        );
    }
    c.pass();
}

#[test]
fn criterion_08_differentiable_margins() {
    let c = Criterion::new(8, "worked gradient-inequality margins reproduce");
    let q = func("x1^2", &[(0.0, 1.0)]);
    let zero = ModMap::zero(1);
    let m = diff::nonneg_gradient_margins(
        &q,
        &zero,
        sp(1.0),
        &pt(&[0.0]),
        &pt(&[1.0]),
        mp(0.5),
        AltFactor::SFixed,
    )
    .unwrap();
    assert!(
        (m.primary - 5.297443).abs() <= 1e-6,
        "primary margin {}",
        m.primary
    );
    assert!(
        (m.alternate - 4.563436).abs() <= 1e-6,
        "alternate margin {}",
        m.alternate
    );

    let qn = func("-(x1 - 1)^2", &[(0.0, 1.0)]);
    let one = ModMap::constant(1.0, 1);
    let m = diff::nonpos_gradient_margin(&qn, &one, sp(1.0), &pt(&[0.0]), &pt(&[0.5]), mp(0.5))
        .unwrap();
    assert!(
        (m.margin - 0.526918).abs() <= 1e-6,
        "non-positive-case margin {}",
        m.margin
    );
    c.pass();
}

#[test]
fn criterion_09_optimality() {
    let c = Criterion::new(
        9,
        "certificates reproduce and the solver recovers minimizers",
    );
    // holding certificate
    let q = func("x1", &[(1.0, 2.0)]);
    let g = ModMap::constant(-10.0, 1);
    let n_grid: Vec<Point> = linspace(1.0, 2.0, 101)
        .into_iter()
        .map(|x| pt(&[x]))
        .collect();
    let cert = opt::certify_unconstrained(&q, &g, sp(0.5), 0.99, &pt(&[1.0]), &n_grid).unwrap();
    assert!(cert.holds);
    assert!(
        (cert.worst_margin - 6.969697).abs() <= 1e-6,
        "margin {}",
        cert.worst_margin
    );
    assert_eq!(cert.witness.coords(), &[1.0]);

    // failing: strict inequality collapses at the candidate itself
    let q2 = func("x1^2", &[(-1.0, 1.0)]);
    let zero = ModMap::zero(1);
    let n2: Vec<Point> = linspace(-1.0, 1.0, 41)
        .into_iter()
        .map(|x| pt(&[x]))
        .collect();
    let cert2 = opt::certify_unconstrained(&q2, &zero, sp(1.0), 0.5, &pt(&[0.0]), &n2).unwrap();
    assert!(!cert2.holds);
    assert_eq!(cert2.worst_margin, 0.0);

    // failing: non-minimizer candidate
    let cert3 =
        opt::certify_unconstrained(&q2, &zero, sp(1.0), 0.5, &pt(&[0.5]), &[pt(&[0.5])]).unwrap();
    assert!(!cert3.holds);
    assert!((cert3.worst_margin - (-1.5)).abs() <= 1e-9);

    // solver recovers every corpus minimizer, from every start
    for member in corpus() {
        let res = opt::minimize(
            &member.spec,
            &MinimizeOptions {
                starts: 6,
                max_iters: 400,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(member.spec.domain.contains(&res.best_point));
        for trace in &res.traces {
            for (found, expected) in trace.final_point.coords().iter().zip(&member.minimizer) {
                assert!(
                    (found - expected).abs() <= 1e-6,
                    "`{}` start {:?} reached {:?}, expected {:?}",
                    member.spec.name,
                    trace.start.coords(),
                    trace.final_point.coords(),
                    member.minimizer
                );
            }
        }
    }
    c.pass();
}

#[test]
fn criterion_10_oracle_equivalence() {
    let c = Criterion::new(10, "sweep and oracle agree on 20 randomized configurations");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..20 {
        let two_d = case % 4 == 3;
        let (q, g) = if two_d {
            let c0 = rng.random_range(-0.5..=0.5);
            let c1 = rng.random_range(-1.0..=1.0);
            let c2 = rng.random_range(-1.0..=1.0);
            let expr = format!("{c0} + {c1} * x1^2 + {c2} * x2^2 + exp(x1 * x2)");
            let lo = rng.random_range(-1.0..=0.0);
            let hi = lo + rng.random_range(0.5..=1.5);
            let q = func(&expr, &[(lo, hi), (lo, hi)]);
            let d0 = rng.random_range(-1.0..=1.0);
            let gexpr = format!("{d0} + abs(u1 - v2) * s");
            (q, modmap(&gexpr, 2))
        } else {
            let c0 = rng.random_range(-1.0..=1.0);
            let c1 = rng.random_range(-2.0..=2.0);
            let c2 = rng.random_range(-2.0..=2.0);
            let c3 = rng.random_range(-1.0..=1.0);
            let expr = format!("{c0} + {c1} * x1 + {c2} * x1^2 + {c3} * exp(x1)");
            let lo = rng.random_range(-2.0..=1.0);
            let hi = lo + rng.random_range(0.5..=2.0);
            let q = func(&expr, &[(lo, hi)]);
            let d0 = rng.random_range(-1.0..=1.0);
            let d1 = rng.random_range(-1.0..=1.0);
            let gexpr = format!("{d0} + {d1} * (u1 - v1)^2 + 0.1 * s");
            (q, modmap(&gexpr, 1))
        };
        let s_count = rng.random_range(1..=3);
        let s_list: Vec<f64> = (0..s_count).map(|_| rng.random_range(0.05..=1.0)).collect();
        let m_points = if two_d {
            rng.random_range(2..=4)
        } else {
            rng.random_range(3..=7)
        };
        let a_points = rng.random_range(2..=9);
        let refine = rng.random_range(0..=30);
        let seed = rng.random_range(0..=u64::MAX / 2);
        let grid = SampleGrid::uniform(m_points, a_points, s_list, refine, seed).unwrap();

        let report = cert::check_gs_convex(&q, &g, &grid, 1e-9).unwrap();
        let (worst, witness) = oracle::brute_force_worst_residual(&q, &g, &grid).unwrap();
        assert!(
            (report.worst.residual - worst).abs() <= 1e-12,
            "case {case}: residual {} vs oracle {worst}",
            report.worst.residual
        );
        assert!(
            (report.worst.s - witness.s).abs() <= 1e-12,
            "case {case}: witness s differs"
        );
        assert!(
            (report.worst.a - witness.a).abs() <= 1e-12,
            "case {case}: witness a differs"
        );
        for i in 0..q.dim() {
            assert!(
                (report.worst.m1[i] - witness.m1[i]).abs() <= 1e-12,
                "case {case}: m1"
            );
            assert!(
                (report.worst.m2[i] - witness.m2[i]).abs() <= 1e-12,
                "case {case}: m2"
            );
        }
    }
    assert!(
        c.elapsed() < 60.0,
        "oracle comparison exceeded 60 s: {:.3}s",
        c.elapsed()
    );
    c.pass();
}
