//! Desk-scale laboratory for the semidirect product of circle diffeomorphisms
//! with smooth functions, its coadjoint orbit on the cotangent bundle, the
//! unitary representations that quantize it, and the tangent-groupoid
//! machinery behind semiclassical trace and character formulas.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coadjoint;
pub mod error;
pub mod groupoid;
pub mod harness;
pub mod induction;
pub mod lie_group;
pub mod manifold;
pub mod quadrature;
pub mod quantization;
pub mod sampling;
pub mod semiclassics;
pub mod spectral;

pub use error::{Error, Result};
pub use harness::{run_suite, sweep, CheckResult, Experiment, ExperimentConfig, Suite, SuiteResult};
pub use lie_group::{adjoint, bracket, exp_gm, flow, inverse, multiply, AlgebraElement, Diffeo, GroupElement};
pub use manifold::{
    ComplexField, CotangentPoint, Field, GridManifold, Manifold, ScalarField, TangentPoint, VectorField,
};
pub use num_complex::Complex64;
pub use semiclassics::{fit_slope, richardson, ConvergenceReport};
