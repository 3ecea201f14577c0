//! Numerical laboratory for the GS-exponential kind of convex class.
//!
//! The library certifies or refutes membership of user-defined functions in
//! the GS-exponential kind of convex class, computes minimal modulating maps,
//! exercises the closure algebra and epigraph characterization at desk scale,
//! verifies the differentiable-case gradient inequalities, and certifies
//! candidate minimizers of unconstrained programs.
//!
//! Everything is driven by expressions parsed into immutable ASTs
//! ([`expr::ExprAst`]) and evaluated deterministically, so sweeps can run in
//! parallel and still reduce to thread-count-independent reports.

pub mod algebra;
pub mod cert;
pub mod cli;
pub mod diff;
pub mod epigraph;
pub mod expr;
pub mod kernel;
pub mod opt;
pub mod oracle;
