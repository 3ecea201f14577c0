//! Run configuration: JSON schema, validation, and resolution into domain
//! objects.

use crate::diff::AltFactor;
use crate::expr::{ExprAst, VarSet};
use crate::kernel::{BoxDomain, FunctionSpec, ModMap, Point, SampleGrid, DEFAULT_TOLERANCE};
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDef {
    pub name: String,
    pub expr: String,
    pub dim: usize,
    #[serde(rename = "box")]
    pub box_bounds: Vec<[f64; 2]>,
    /// Modulating map by name; omitted means the zero map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modmap: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModMapDef {
    pub name: String,
    pub expr: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AltFactorConfig {
    /// `(e^s - 1)^s`, the factor as stated.
    SFixed,
    /// `(e^a - 1)^s`.
    ADependent,
}

impl From<AltFactorConfig> for AltFactor {
    fn from(c: AltFactorConfig) -> Self {
        match c {
            AltFactorConfig::SFixed => AltFactor::SFixed,
            AltFactorConfig::ADependent => AltFactor::MixDependent,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Target function for `certify`; optional when only one is defined.
    pub function: Option<String>,
    /// Candidate point for `certify`.
    pub candidate: Option<Vec<f64>>,
    /// Mixing value for the optimality certificate, strictly inside (0, 1).
    pub certify_a: f64,
    /// Factor used by the alternate non-negative-case margin.
    pub alt_margin_factor: AltFactorConfig,
    /// Epigraph height offsets above Q(m).
    pub deltas: Vec<f64>,
    /// Recorded bound on the modulating map for `bounds`.
    pub g_bound: f64,
    /// Solver starts for `minimize`.
    pub starts: usize,
    /// Iteration budget per start.
    pub max_iters: usize,
    /// Solver tolerance.
    pub opt_tolerance: f64,
    /// Number of a-grid points on (0, 1] for `minimal-g`.
    pub minimal_g_a_points: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            function: None,
            candidate: None,
            certify_a: 0.99,
            alt_margin_factor: AltFactorConfig::SFixed,
            deltas: vec![0.0, 0.1, 1.0],
            g_bound: 1e6,
            starts: 8,
            max_iters: 200,
            opt_tolerance: 1e-9,
            minimal_g_a_points: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub functions: Vec<FunctionDef>,
    #[serde(default)]
    pub modmaps: Vec<ModMapDef>,
    pub s_list: Vec<f64>,
    #[serde(default = "default_a_points")]
    pub a_points: usize,
    #[serde(default = "default_points_per_axis")]
    pub points_per_axis: usize,
    #[serde(default)]
    pub refine_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub params: Params,
}

fn default_a_points() -> usize {
    21
}

fn default_points_per_axis() -> usize {
    21
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }
}

/// A function paired with its resolved modulating map.
#[derive(Debug, Clone)]
pub struct ResolvedFunction {
    pub spec: FunctionSpec,
    pub modmap: ModMap,
}

/// Fully validated run inputs.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub functions: Vec<ResolvedFunction>,
    pub grid: SampleGrid,
    pub tolerance: f64,
    pub params: Params,
    pub seed: u64,
    /// Effective configuration (seed override applied), echoed in reports.
    pub echo: serde_json::Value,
}

pub fn resolve(cfg: &RunConfig, seed_override: Option<u64>) -> Result<Resolved, CliError> {
    if cfg.functions.is_empty() {
        return Err(CliError::Validation("config defines no functions".into()));
    }
    if !(cfg.tolerance.is_finite() && cfg.tolerance >= 0.0) {
        return Err(CliError::Validation(format!(
            "bad tolerance {}",
            cfg.tolerance
        )));
    }
    let seed = seed_override.unwrap_or(cfg.seed);
    if cfg.params.deltas.is_empty() || !cfg.params.deltas.iter().all(|d| d.is_finite() && *d >= 0.0)
    {
        return Err(CliError::Validation(
            "params.deltas must be non-empty, finite, and non-negative".into(),
        ));
    }

    for (label, names) in [
        (
            "function",
            cfg.functions.iter().map(|f| &f.name).collect::<Vec<_>>(),
        ),
        (
            "modmap",
            cfg.modmaps.iter().map(|m| &m.name).collect::<Vec<_>>(),
        ),
    ] {
        let mut seen = std::collections::BTreeSet::new();
        for name in names {
            if !seen.insert(name) {
                return Err(CliError::Validation(format!(
                    "duplicate {label} name `{name}`"
                )));
            }
        }
    }

    let mut modmaps = Vec::new();
    for def in &cfg.modmaps {
        let body = ExprAst::parse(&def.expr, def.dim, VarSet::ModMap).map_err(|source| {
            CliError::Expr {
                name: format!("modmap `{}`", def.name),
                source,
            }
        })?;
        modmaps.push(ModMap::new(def.name.clone(), body)?);
    }

    let mut functions = Vec::new();
    for def in &cfg.functions {
        if def.box_bounds.len() != def.dim {
            return Err(CliError::Validation(format!(
                "function `{}` declares dim {} but {} box intervals",
                def.name,
                def.dim,
                def.box_bounds.len()
            )));
        }
        let body = ExprAst::parse(&def.expr, def.dim, VarSet::Function).map_err(|source| {
            CliError::Expr {
                name: format!("function `{}`", def.name),
                source,
            }
        })?;
        let domain = BoxDomain::new(def.box_bounds.iter().map(|b| (b[0], b[1])).collect())?;
        let spec = FunctionSpec::new(def.name.clone(), body, domain)?;
        let modmap = match &def.modmap {
            None => ModMap::zero(def.dim),
            Some(name) => {
                let m = modmaps
                    .iter()
                    .find(|m| &m.name == name)
                    .ok_or_else(|| {
                        CliError::Validation(format!(
                            "function `{}` references unknown modmap `{name}`",
                            def.name
                        ))
                    })?
                    .clone();
                if m.dim() != def.dim {
                    return Err(CliError::Validation(format!(
                        "modmap `{name}` has dim {}, function `{}` has dim {}",
                        m.dim(),
                        def.name,
                        def.dim
                    )));
                }
                m
            }
        };
        functions.push(ResolvedFunction { spec, modmap });
    }

    let grid = SampleGrid::uniform(
        cfg.points_per_axis,
        cfg.a_points,
        cfg.s_list.clone(),
        cfg.refine_samples,
        seed,
    )?;

    let mut effective = cfg.clone();
    effective.seed = seed;
    let echo = serde_json::to_value(&effective)?;

    Ok(Resolved {
        functions,
        grid,
        tolerance: cfg.tolerance,
        params: cfg.params.clone(),
        seed,
        echo,
    })
}

impl Resolved {
    /// The function targeted by `certify`: the named one, or the sole entry.
    pub fn target_function(&self) -> Result<&ResolvedFunction, CliError> {
        match &self.params.function {
            Some(name) => self
                .functions
                .iter()
                .find(|f| &f.spec.name == name)
                .ok_or_else(|| CliError::Validation(format!("unknown target function `{name}`"))),
            None if self.functions.len() == 1 => Ok(&self.functions[0]),
            None => Err(CliError::Validation(
                "params.function is required when several functions are defined".into(),
            )),
        }
    }

    pub fn candidate_point(&self, f: &ResolvedFunction) -> Result<Point, CliError> {
        let coords = self
            .params
            .candidate
            .clone()
            .ok_or_else(|| CliError::Validation("params.candidate is required".into()))?;
        if coords.len() != f.spec.dim() {
            return Err(CliError::Validation(format!(
                "candidate has dim {}, function `{}` has dim {}",
                coords.len(),
                f.spec.name,
                f.spec.dim()
            )));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(CliError::Validation(
                "candidate coordinates must be finite".into(),
            ));
        }
        let p = Point::new(coords);
        if !f.spec.domain.contains(&p) {
            return Err(CliError::Validation(format!(
                "candidate {:?} lies outside the domain of `{}`",
                p.coords(),
                f.spec.name
            )));
        }
        Ok(p)
    }
}
