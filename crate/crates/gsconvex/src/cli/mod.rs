//! Configuration-driven front end.
//!
//! `run` executes one subcommand against a JSON config and writes a report
//! plus CSV tables into the output directory. Exit codes: 0 when every check
//! passes (or the certificate holds), 1 for a valid run with a negative
//! verdict, 2 for configuration or evaluation errors.

pub mod config;
pub mod report;

use crate::cert::{self, CertError, ClassId, Verdict};
use crate::diff::{self, AltFactor, DiffError};
use crate::epigraph::{self, EpigraphError};
use crate::expr::ParseError;
use crate::kernel::{MixParam, ParamError, Point, SParam};
use crate::opt::{self, MinimizeOptions, OptError, StartStatus};
use crate::oracle::{self, OracleError};
use config::{resolve, Resolved, RunConfig};
use report::{file_tag, residual_header, to_value, Csv, CsvField};
use serde_json::{json, Value};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot parse {name}: {source}")]
    Expr { name: String, source: ParseError },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Epigraph(#[from] EpigraphError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}

/// CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Check,
    Classes,
    MinimalG,
    Epi,
    Bounds,
    Diff,
    Minimize,
    Certify,
    Oracle,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Check => "check",
            Subcommand::Classes => "classes",
            Subcommand::MinimalG => "minimal-g",
            Subcommand::Epi => "epi",
            Subcommand::Bounds => "bounds",
            Subcommand::Diff => "diff",
            Subcommand::Minimize => "minimize",
            Subcommand::Certify => "certify",
            Subcommand::Oracle => "oracle",
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Runs one subcommand; returns the process exit code.
pub fn run(
    sub: Subcommand,
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
    seed: Option<u64>,
) -> i32 {
    let started = std::time::Instant::now();
    match run_checked(sub, config_path, out_dir, threads, seed) {
        Ok(all_pass) => {
            eprintln!(
                "{}: finished in {:.3}s, verdict {}",
                sub.name(),
                started.elapsed().as_secs_f64(),
                if all_pass { "pass" } else { "fail" }
            );
            if all_pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_checked(
    sub: Subcommand,
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
    seed: Option<u64>,
) -> Result<bool, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let resolved = resolve(&cfg, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    match threads {
        None => dispatch(sub, &resolved, out_dir),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::ThreadPool(e.to_string()))?;
            pool.install(|| dispatch(sub, &resolved, out_dir))
        }
    }
}

fn dispatch(sub: Subcommand, r: &Resolved, out: &Path) -> Result<bool, CliError> {
    match sub {
        Subcommand::Check => run_check(r, out),
        Subcommand::Classes => run_classes(r, out),
        Subcommand::MinimalG => run_minimal_g(r, out),
        Subcommand::Epi => run_epi(r, out),
        Subcommand::Bounds => run_bounds(r, out),
        Subcommand::Diff => run_diff(r, out),
        Subcommand::Minimize => run_minimize(r, out),
        Subcommand::Certify => run_certify(r, out),
        Subcommand::Oracle => run_oracle(r, out),
    }
}

struct ReportSink {
    verdicts: Vec<Value>,
    witnesses: Vec<Value>,
    counts: Vec<(String, usize)>,
    all_pass: bool,
}

impl ReportSink {
    fn new() -> Self {
        ReportSink {
            verdicts: Vec::new(),
            witnesses: Vec::new(),
            counts: Vec::new(),
            all_pass: true,
        }
    }

    fn write(self, sub: Subcommand, r: &Resolved, out: &Path) -> Result<bool, CliError> {
        let doc = report::assemble(
            sub.name(),
            &r.echo,
            r.seed,
            self.verdicts,
            self.witnesses,
            self.counts,
        );
        report::write_json(out, "report.json", &doc)?;
        Ok(self.all_pass)
    }
}

fn witness_row(csv: &mut Csv, s: f64, a: f64, m1: &Point, m2: &Point, residual: f64) {
    let mut fields = vec![CsvField::Num(s), CsvField::Num(a)];
    fields.extend(m1.coords().iter().map(|&c| CsvField::Num(c)));
    fields.extend(m2.coords().iter().map(|&c| CsvField::Num(c)));
    fields.push(CsvField::Num(residual));
    csv.row(&fields);
}

fn run_check(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let mut sink = ReportSink::new();
    for (idx, rf) in r.functions.iter().enumerate() {
        let rep = cert::check_gs_convex(&rf.spec, &rf.modmap, &r.grid, r.tolerance)?;
        let header = residual_header(rf.spec.dim());
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut csv = Csv::new(
            out,
            &format!("witness_{}.csv", file_tag(idx, &rf.spec.name)),
            &header_refs,
        );
        witness_row(
            &mut csv,
            rep.worst.s,
            rep.worst.a,
            &rep.worst.m1,
            &rep.worst.m2,
            rep.worst.residual,
        );
        csv.finish()?;
        sink.all_pass &= rep.verdict == Verdict::Pass;
        sink.counts.push((rf.spec.name.clone(), rep.samples));
        sink.witnesses
            .push(json!({"function": rf.spec.name, "sample": to_value(&rep.worst)}));
        sink.verdicts.push(json!({
            "function": rf.spec.name,
            "class": to_value(&rep.class),
            "verdict": to_value(&rep.verdict),
            "samples": rep.samples,
            "tolerance": rep.tolerance,
            "worst-residual": rep.worst.residual,
        }));
    }
    sink.write(Subcommand::Check, r, out)
}

fn run_classes(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let classes = [
        ClassId::GsExponential,
        ClassId::SConvex,
        ClassId::SubBSConvex,
        ClassId::ExponentialKind,
    ];
    let mut sink = ReportSink::new();
    for (idx, rf) in r.functions.iter().enumerate() {
        for class in classes {
            let tag = format!("witness_{}_{}.csv", file_tag(idx, &rf.spec.name), class);
            let header = residual_header(rf.spec.dim());
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let mut csv = Csv::new(out, &tag, &header_refs);
            let mut rows = 0usize;
            for &s in r.grid.s_list() {
                let s = SParam::new(s)?;
                let g = match class {
                    ClassId::GsExponential | ClassId::SubBSConvex => Some(&rf.modmap),
                    _ => None,
                };
                match cert::check_class(class, &rf.spec, g, s, &r.grid, r.tolerance) {
                    Ok(rep) => {
                        witness_row(
                            &mut csv,
                            rep.worst.s,
                            rep.worst.a,
                            &rep.worst.m1,
                            &rep.worst.m2,
                            rep.worst.residual,
                        );
                        rows += 1;
                        sink.all_pass &= rep.verdict == Verdict::Pass;
                        sink.counts.push((
                            format!("{}/{}/s={}", rf.spec.name, class, s.value()),
                            rep.samples,
                        ));
                        sink.witnesses.push(json!({
                            "class": to_value(&class),
                            "function": rf.spec.name,
                            "s": s.value(),
                            "sample": to_value(&rep.worst),
                        }));
                        sink.verdicts.push(json!({
                            "class": to_value(&class),
                            "function": rf.spec.name,
                            "s": s.value(),
                            "verdict": to_value(&rep.verdict),
                            "worst-residual": rep.worst.residual,
                        }));
                    }
                    Err(CertError::PositivityViolation { point, value }) => {
                        sink.verdicts.push(json!({
                            "class": to_value(&class),
                            "function": rf.spec.name,
                            "s": s.value(),
                            "verdict": "precondition-failed",
                            "detail": format!("Q({point:?}) = {value} is not strictly positive"),
                        }));
                    }
                    Err(other) => return Err(other.into()),
                }
            }
            if rows > 0 {
                csv.finish()?;
            }
        }
    }
    sink.write(Subcommand::Classes, r, out)
}

fn run_minimal_g(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let c = r.params.minimal_g_a_points.max(1);
    let a_grid: Vec<f64> = (1..=c).map(|i| i as f64 / c as f64).collect();
    let mut sink = ReportSink::new();
    for (idx, rf) in r.functions.iter().enumerate() {
        let pts = r.grid.m_points(&rf.spec.domain);
        let dim = rf.spec.dim();
        let mut cols = vec!["s".to_string()];
        for i in 1..=dim {
            cols.push(format!("m1_{i}"));
        }
        for i in 1..=dim {
            cols.push(format!("m2_{i}"));
        }
        cols.extend([
            "gstar".into(),
            "argmax_a".into(),
            "endpoint_feasible".into(),
        ]);
        let header_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
        let mut csv = Csv::new(
            out,
            &format!("landscape_{}.csv", file_tag(idx, &rf.spec.name)),
            &header_refs,
        );

        for &s in r.grid.s_list() {
            let sp = SParam::new(s)?;
            let mut max_gstar = f64::NEG_INFINITY;
            let mut all_feasible = true;
            let mut witness: Option<(Point, Point, f64)> = None;
            for m1 in &pts {
                for m2 in &pts {
                    let mg = cert::minimal_g(&rf.spec, sp, m1, m2, &a_grid)?;
                    let mut fields = vec![CsvField::Num(s)];
                    fields.extend(m1.coords().iter().map(|&x| CsvField::Num(x)));
                    fields.extend(m2.coords().iter().map(|&x| CsvField::Num(x)));
                    fields.push(CsvField::Num(mg.gstar));
                    fields.push(CsvField::Num(mg.argmax_a));
                    fields.push(CsvField::Bool(mg.endpoint_feasible));
                    csv.row(&fields);
                    all_feasible &= mg.endpoint_feasible;
                    if mg.gstar > max_gstar {
                        max_gstar = mg.gstar;
                        witness = Some((m1.clone(), m2.clone(), mg.argmax_a));
                    }
                }
            }
            sink.counts.push((
                format!("{}/s={s}", rf.spec.name),
                pts.len() * pts.len() * a_grid.len(),
            ));
            if let Some((m1, m2, arg)) = witness {
                sink.witnesses.push(json!({
                    "argmax-a": arg,
                    "function": rf.spec.name,
                    "gstar": max_gstar,
                    "m1": to_value(&m1),
                    "m2": to_value(&m2),
                    "s": s,
                }));
            }
            sink.verdicts.push(json!({
                "endpoint-feasible-all": all_feasible,
                "function": rf.spec.name,
                "max-gstar": max_gstar,
                "pairs": pts.len() * pts.len(),
                "s": s,
            }));
        }
        csv.finish()?;
    }
    sink.write(Subcommand::MinimalG, r, out)
}

fn run_epi(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let mut sink = ReportSink::new();
    for rf in r.functions.iter() {
        for &s in r.grid.s_list() {
            let sp = SParam::new(s)?;
            let rep = epigraph::check_epigraph_equivalence(
                &rf.spec,
                &rf.modmap,
                sp,
                &r.grid,
                &r.params.deltas,
                r.tolerance,
            )?;
            let pass = rep.consistent && rep.gs_report.verdict == Verdict::Pass;
            sink.all_pass &= pass;
            sink.counts
                .push((format!("{}/s={s}", rf.spec.name), rep.combinations));
            sink.witnesses.push(json!({
                "first-escape": rep.first_escape.as_ref().map(to_value),
                "function": rf.spec.name,
                "gs-worst": to_value(&rep.gs_report.worst),
                "s": s,
            }));
            sink.verdicts.push(json!({
                "combinations": rep.combinations,
                "consistent": rep.consistent,
                "escapes": rep.escapes,
                "function": rf.spec.name,
                "gs-verdict": to_value(&rep.gs_report.verdict),
                "s": s,
                "verdict": if pass { "pass" } else { "fail" },
            }));
        }
    }
    sink.write(Subcommand::Epi, r, out)
}

fn run_bounds(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let mut sink = ReportSink::new();
    for rf in r.functions.iter() {
        if rf.spec.dim() != 1 {
            return Err(CliError::Validation(format!(
                "bounds needs one-dimensional functions; `{}` has dim {}",
                rf.spec.name,
                rf.spec.dim()
            )));
        }
        let (lo, hi) = rf.spec.domain.bounds()[0];
        let scan = epigraph::boundedness_scan(
            &rf.spec,
            lo,
            hi,
            r.grid.m_points_per_axis(),
            r.params.g_bound,
        )?;
        sink.all_pass &= scan.bounded;
        sink.counts.push((rf.spec.name.clone(), scan.points));
        sink.witnesses.push(json!({
            "failure": scan.failure.as_ref().map(to_value),
            "function": rf.spec.name,
        }));
        sink.verdicts.push(json!({
            "bounded": scan.bounded,
            "function": rf.spec.name,
            "g-bound": scan.g_bound,
            "inf": if scan.inf.is_finite() { json!(scan.inf) } else { Value::Null },
            "sup": if scan.sup.is_finite() { json!(scan.sup) } else { Value::Null },
            "verdict": if scan.bounded { "pass" } else { "fail" },
        }));
    }
    sink.write(Subcommand::Bounds, r, out)
}

const MARGIN_KINDS: [&str; 4] = ["nonneg-primary", "nonneg-alternate", "nonpos", "symmetric"];

struct KindWitness {
    margin: f64,
    s: f64,
    a: f64,
    m1: Point,
    m2: Point,
}

fn run_diff(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let alt: AltFactor = r.params.alt_margin_factor.into();
    let mut sink = ReportSink::new();
    for (idx, rf) in r.functions.iter().enumerate() {
        let pts = r.grid.m_points(&rf.spec.domain);
        let mut qvals = Vec::with_capacity(pts.len());
        for p in &pts {
            qvals.push(rf.spec.eval(p.coords()).map_err(|source| DiffError::Eval {
                point: p.coords().to_vec(),
                source,
            })?);
        }

        let mut csv = Csv::new(
            out,
            &format!("margins_{}.csv", file_tag(idx, &rf.spec.name)),
            &["s", "a", "kind", "min_margin", "samples"],
        );
        // minimum margin and witness per kind across the whole sweep
        let mut overall: [Option<KindWitness>; 4] = [None, None, None, None];
        let mut skipped_non_smooth = 0usize;
        let mut total = 0usize;

        for &s in r.grid.s_list() {
            let sp = SParam::new(s)?;
            for &a in r.grid.a_grid() {
                if a == 0.0 {
                    continue;
                }
                let ap = MixParam::new(a)?;
                let mut slot: [Option<(f64, usize)>; 4] = [None; 4];
                for (i, m1) in pts.iter().enumerate() {
                    for (j, m2) in pts.iter().enumerate() {
                        let (q1, q2) = (qvals[i], qvals[j]);
                        let mut record = |kind: usize, margin: f64, non_smooth: bool| {
                            if non_smooth {
                                skipped_non_smooth += 1;
                                return;
                            }
                            total += 1;
                            slot[kind] = Some(match slot[kind] {
                                None => (margin, 1),
                                Some((m, c)) => (m.min(margin), c + 1),
                            });
                            let better = match &overall[kind] {
                                None => true,
                                Some(w) => margin < w.margin,
                            };
                            if better {
                                overall[kind] = Some(KindWitness {
                                    margin,
                                    s,
                                    a,
                                    m1: m1.clone(),
                                    m2: m2.clone(),
                                });
                            }
                        };
                        if q1 >= 0.0 && q2 >= 0.0 {
                            let m = diff::nonneg_gradient_margins(
                                &rf.spec, &rf.modmap, sp, m1, m2, ap, alt,
                            )?;
                            record(0, m.primary, m.non_smooth);
                            record(1, m.alternate, m.non_smooth);
                        }
                        if q1 <= 0.0 && q2 <= 0.0 {
                            let m =
                                diff::nonpos_gradient_margin(&rf.spec, &rf.modmap, sp, m1, m2, ap)?;
                            record(2, m.margin, m.non_smooth);
                        }
                        if (q1 > 0.0 && q2 > 0.0) || (q1 < 0.0 && q2 < 0.0) {
                            let m = diff::symmetric_gradient_margin(
                                &rf.spec, &rf.modmap, sp, m1, m2, ap,
                            )?;
                            record(3, m.margin, m.non_smooth);
                        }
                    }
                }
                for (kind, entry) in slot.iter().enumerate() {
                    if let Some((margin, count)) = entry {
                        csv.row(&[
                            CsvField::Num(s),
                            CsvField::Num(a),
                            CsvField::Text(MARGIN_KINDS[kind]),
                            CsvField::Num(*margin),
                            CsvField::Num(*count as f64),
                        ]);
                    }
                }
            }
        }
        csv.finish()?;

        let mut pass = true;
        let mut kinds_json = serde_json::Map::new();
        for (kind, entry) in overall.iter().enumerate() {
            match entry {
                None => {
                    kinds_json.insert(MARGIN_KINDS[kind].into(), Value::Null);
                }
                Some(w) => {
                    pass &= w.margin >= -r.tolerance;
                    kinds_json.insert(
                        MARGIN_KINDS[kind].into(),
                        json!({
                            "a": w.a,
                            "m1": to_value(&w.m1),
                            "m2": to_value(&w.m2),
                            "min-margin": w.margin,
                            "s": w.s,
                        }),
                    );
                }
            }
        }
        sink.all_pass &= pass;
        sink.counts.push((rf.spec.name.clone(), total));
        sink.witnesses.push(json!({
            "function": rf.spec.name,
            "kinds": Value::Object(kinds_json),
        }));
        sink.verdicts.push(json!({
            "function": rf.spec.name,
            "margin-samples": total,
            "skipped-non-smooth": skipped_non_smooth,
            "verdict": if pass { "pass" } else { "fail" },
        }));
    }
    sink.write(Subcommand::Diff, r, out)
}

fn run_minimize(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let mut sink = ReportSink::new();
    let mut results = Vec::new();
    for rf in r.functions.iter() {
        let opts = MinimizeOptions {
            starts: r.params.starts,
            max_iters: r.params.max_iters,
            tolerance: r.params.opt_tolerance,
            seed: r.seed,
            ..Default::default()
        };
        match opt::minimize(&rf.spec, &opts) {
            Ok(res) => {
                let converged = res
                    .traces
                    .iter()
                    .any(|t| t.status == StartStatus::Converged);
                sink.all_pass &= converged;
                sink.counts.push((
                    rf.spec.name.clone(),
                    res.traces.iter().map(|t| t.iterations).sum(),
                ));
                sink.verdicts.push(json!({
                    "best-point": to_value(&res.best_point),
                    "best-value": res.best_value,
                    "converged": converged,
                    "function": rf.spec.name,
                    "starts": res.starts_used,
                    "verdict": if converged { "pass" } else { "fail" },
                }));
                results.push(res);
            }
            Err(OptError::AllStartsDiverged { traces }) => {
                sink.all_pass = false;
                sink.verdicts.push(json!({
                    "detail": format!("all {} starts stalled at their first step", traces.len()),
                    "function": rf.spec.name,
                    "traces": to_value(&traces),
                    "verdict": "fail",
                }));
            }
            Err(other) => return Err(other.into()),
        }
    }
    if !results.is_empty() {
        let summary = opt::build_report(&results, &[])?;
        report::write_json(out, "summary.json", &to_value(&summary))?;
    }
    sink.write(Subcommand::Minimize, r, out)
}

fn run_certify(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let rf = r.target_function()?;
    let candidate = r.candidate_point(rf)?;
    let n_grid = r.grid.m_points(&rf.spec.domain);
    let mut sink = ReportSink::new();
    let mut certs = Vec::new();
    for &s in r.grid.s_list() {
        let sp = SParam::new(s)?;
        let cert = opt::certify_unconstrained(
            &rf.spec,
            &rf.modmap,
            sp,
            r.params.certify_a,
            &candidate,
            &n_grid,
        )?;
        sink.all_pass &= cert.holds;
        sink.counts
            .push((format!("{}/s={s}", rf.spec.name), cert.samples));
        sink.witnesses.push(json!({
            "function": rf.spec.name,
            "s": s,
            "witness-n": to_value(&cert.witness),
            "worst-margin": cert.worst_margin,
        }));
        sink.verdicts.push(json!({
            "a": cert.a,
            "candidate": to_value(&cert.candidate),
            "function": rf.spec.name,
            "holds": cert.holds,
            "s": s,
            "samples": cert.samples,
            "verdict": if cert.holds { "pass" } else { "fail" },
            "worst-margin": cert.worst_margin,
        }));
        certs.push(cert);
    }
    let summary = opt::build_report(&[], &certs)?;
    report::write_json(out, "summary.json", &to_value(&summary))?;
    sink.write(Subcommand::Certify, r, out)
}

fn run_oracle(r: &Resolved, out: &Path) -> Result<bool, CliError> {
    let mut sink = ReportSink::new();
    for (idx, rf) in r.functions.iter().enumerate() {
        let (worst, witness) = oracle::brute_force_worst_residual(&rf.spec, &rf.modmap, &r.grid)?;
        let pass = worst <= r.tolerance;
        let header = residual_header(rf.spec.dim());
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut csv = Csv::new(
            out,
            &format!("witness_{}.csv", file_tag(idx, &rf.spec.name)),
            &header_refs,
        );
        witness_row(
            &mut csv,
            witness.s,
            witness.a,
            &witness.m1,
            &witness.m2,
            witness.residual,
        );
        csv.finish()?;
        let samples = {
            let n = r.grid.m_points(&rf.spec.domain).len();
            n * n * r.grid.a_grid().len() * r.grid.s_list().len()
                + r.grid.refinement(&rf.spec.domain).len() * r.grid.s_list().len()
        };
        sink.all_pass &= pass;
        sink.counts.push((rf.spec.name.clone(), samples));
        sink.witnesses
            .push(json!({"function": rf.spec.name, "sample": to_value(&witness)}));
        sink.verdicts.push(json!({
            "function": rf.spec.name,
            "verdict": if pass { "pass" } else { "fail" },
            "worst-residual": worst,
        }));
    }
    sink.write(Subcommand::Oracle, r, out)
}
