//! Shared fixtures: the non-negative convex corpus and small builders.

#![allow(dead_code)]

use gsconvex::expr::{ExprAst, VarSet};
use gsconvex::kernel::{BoxDomain, FunctionSpec, MixParam, ModMap, Point, SParam};

pub fn func(expr: &str, bounds: &[(f64, f64)]) -> FunctionSpec {
    let dim = bounds.len();
    FunctionSpec::new(
        expr,
        ExprAst::parse(expr, dim, VarSet::Function).unwrap(),
        BoxDomain::new(bounds.to_vec()).unwrap(),
    )
    .unwrap()
}

pub fn modmap(expr: &str, dim: usize) -> ModMap {
    ModMap::new(expr, ExprAst::parse(expr, dim, VarSet::ModMap).unwrap()).unwrap()
}

pub fn pt(coords: &[f64]) -> Point {
    Point::new(coords.to_vec())
}

pub fn sp(v: f64) -> SParam {
    SParam::new(v).unwrap()
}

pub fn mp(v: f64) -> MixParam {
    MixParam::new(v).unwrap()
}

pub struct CorpusMember {
    pub spec: FunctionSpec,
    pub minimizer: Vec<f64>,
    pub smooth: bool,
}

/// Non-negative convex corpus with known minimizers.
pub fn corpus() -> Vec<CorpusMember> {
    vec![
        CorpusMember {
            spec: func("x1^2", &[(0.0, 1.0)]),
            minimizer: vec![0.0],
            smooth: true,
        },
        CorpusMember {
            spec: func("abs(x1)", &[(-1.0, 1.0)]),
            minimizer: vec![0.0],
            smooth: false,
        },
        CorpusMember {
            spec: func("exp(x1)", &[(0.0, 1.0)]),
            minimizer: vec![0.0],
            smooth: true,
        },
        CorpusMember {
            spec: func("x1", &[(0.0, 2.0)]),
            minimizer: vec![0.0],
            smooth: true,
        },
        CorpusMember {
            spec: func("x1^2 + x2^2", &[(0.0, 1.0), (0.0, 1.0)]),
            minimizer: vec![0.0, 0.0],
            smooth: true,
        },
    ]
}

pub const CORPUS_S_VALUES: [f64; 3] = [0.25, 0.5, 1.0];
