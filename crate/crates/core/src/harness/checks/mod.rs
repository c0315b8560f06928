//! Check implementations, one module per suite.

pub mod coadjoint;
pub mod group;
pub mod groupoid;
pub mod induction;
pub mod quantization;
pub mod semiclassics;

use num_complex::Complex64;

use super::{CheckResult, ExperimentConfig, SymbolPreset};
use crate::groupoid::SeparableSymbol;
use crate::lie_group::GroupElement;
use crate::manifold::Manifold;
use crate::sampling::{random_gaussian_symbol, random_symbol, TestRng};
use crate::semiclassics::{fit_slope, ConvergenceReport};

pub(crate) fn symbol(cfg: &ExperimentConfig, m: &Manifold, rng: &mut TestRng) -> SeparableSymbol {
    match cfg.symbol {
        SymbolPreset::Bump => random_symbol(m, rng),
        SymbolPreset::Gaussian => random_gaussian_symbol(m, rng),
    }
}

/// Node-wise displacement `phi(x_i) - x_i` (modulo L) and function slot of `a`.
pub(crate) fn coordinates(a: &GroupElement) -> (Vec<f64>, Vec<f64>) {
    let m = a.manifold();
    let u = a
        .diffeo
        .forward_nodes()
        .iter()
        .zip(m.nodes())
        .map(|(y, x)| m.wrap_difference(y - x))
        .collect();
    (u, a.func.samples().to_vec())
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Step sizes `2^-k` for `k = k0..k0 + count`.
pub(crate) fn dyadic_steps(k0: i32, count: usize) -> Vec<f64> {
    (0..count).map(|j| 0.5f64.powi(k0 + j as i32)).collect()
}

/// Central-difference convergence check: `errors[j]` is the error of the
/// quotient at `steps[j]` and `limit_error` the error of the second-order
/// Richardson extrapolation from the two smallest steps.
pub(crate) fn central_difference_check(
    id: &'static str,
    steps: &[f64],
    errors: &[f64],
    limit_error: f64,
    limit_tol: f64,
) -> CheckResult {
    let slope = fit_slope(steps, errors);
    let passed = (slope - 2.0).abs() <= 0.2 && limit_error <= limit_tol;
    let report = ConvergenceReport::from_errors(
        steps.to_vec(),
        errors.iter().map(|e| Complex64::new(*e, 0.0)).collect(),
        errors.to_vec(),
        Complex64::new(0.0, 0.0),
    );
    CheckResult::new(
        id,
        passed,
        slope,
        format!("slope 2.0 +- 0.2; extrapolated error {limit_error:.3e} <= {limit_tol:.0e}"),
    )
    .with_limit_error(limit_error)
    .with_reports(vec![report])
}

/// `(4 D(t/2) - D(t)) / 3`, removing the `t^2` term of a central difference.
pub(crate) fn richardson2(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().zip(fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

/// Passes when every slope is at least `min`; the residual is the smallest slope.
pub(crate) fn rate_check(id: &'static str, reports: Vec<ConvergenceReport>, min: f64) -> CheckResult {
    let worst = reports.iter().map(|r| r.fitted_slope).fold(f64::INFINITY, f64::min);
    CheckResult::new(id, worst >= min, worst, format!("slope >= {min}")).with_reports(reports)
}
