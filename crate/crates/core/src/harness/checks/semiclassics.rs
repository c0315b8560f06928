use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::rate_check;
use crate::error::Result;
use crate::groupoid::{fiber_fourier, fiber_fourier_inv, tb_convolve, FiberFunction, FiberGrid, FiberSymbol};
use crate::harness::{check_rng, AlgebraPreset, CheckResult, ExperimentConfig};
use crate::lie_group::{multiply, AlgebraElement, GroupElement};
use crate::manifold::{Manifold, VectorField};
use crate::sampling::{
    random_algebra_element, random_diffeo, random_field, random_gaussian_symbol, random_group_element, TestRng,
};
use crate::semiclassics::{
    centralizer_apply, character_pairing, covariant_conjugate, dequantize, groupoid_quantize, symbol_transport,
    trace_functional, ConjugatedKernel, ConvergenceReport, GroupoidFamily, Kernel, Side,
};

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let m = cfg.manifold()?;
    let grid = FiberGrid::default_grid();
    Ok(vec![
        trace_canonical(cfg, &m, &grid)?,
        trace_perturbed(cfg, &m, &grid)?,
        character(cfg, &m, &grid)?,
        double_centralizer(cfg, &m, &grid)?,
        centralizer_smoothness(cfg, &m, &grid)?,
        covariance(cfg, &m, &grid)?,
        transport_coherence(cfg, &m, &grid)?,
        conjugation_homomorphism(cfg, &m, &grid)?,
    ])
}

pub(crate) fn family(
    cfg: &ExperimentConfig,
    m: &Manifold,
    grid: &Arc<FiberGrid>,
    r: &mut TestRng,
    hs: &[f64],
) -> Result<GroupoidFamily> {
    let b: Arc<dyn FiberFunction> = Arc::new(super::symbol(cfg, m, r));
    groupoid_quantize(m, grid, b, hs)
}

pub(crate) fn algebra_element(cfg: &ExperimentConfig, m: &Manifold, r: &mut TestRng) -> AlgebraElement {
    match cfg.algebra {
        AlgebraPreset::Zero => AlgebraElement::zero(m),
        AlgebraPreset::Function => AlgebraElement::new(VectorField::zeros(m), random_field(m, r, 1.0)),
        AlgebraPreset::Random => random_algebra_element(m, r),
    }
}

/// Perturbation `r(x, y)` with `|r| <= 1.1`, used for the first-order trace test.
pub(crate) fn perturbation() -> crate::semiclassics::Perturbation {
    Arc::new(|x: f64, y: f64| 0.7 * x.cos() + 0.4 * y.sin())
}

fn trace_canonical(cfg: &ExperimentConfig, m: &Manifold, grid: &Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "semiclassics.trace_canonical";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    let mut reports = Vec::new();
    for _ in 0..3 {
        let fam = family(cfg, m, grid, &mut r, &cfg.h_grid())?;
        let report = trace_functional(&fam);
        worst = worst.max(report.max_error());
        reports.push(report);
    }
    Ok(CheckResult::bound(id, worst, 1e-9).with_reports(reports))
}

fn trace_perturbed(cfg: &ExperimentConfig, m: &Manifold, grid: &Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "semiclassics.trace_perturbed";
    let mut r = check_rng(cfg, id);
    let mut reports = Vec::new();
    for _ in 0..3 {
        let fam = family(cfg, m, grid, &mut r, &cfg.h_grid())?;
        reports.push(trace_functional(&fam.perturbed(perturbation())));
    }
    Ok(rate_check(id, reports, 0.9))
}

fn character(cfg: &ExperimentConfig, m: &Manifold, grid: &Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "semiclassics.character";
    let mut r = check_rng(cfg, id);
    let hs = cfg.h_grid();
    let mut pairs = Vec::new();
    for _ in 0..20 {
        let fam = family(cfg, m, grid, &mut r, &hs)?;
        let z = algebra_element(cfg, m, &mut r);
        pairs.push((fam, z));
    }
    let reports: Vec<ConvergenceReport> = pairs
        .par_iter()
        .map(|(fam, z)| character_pairing(fam, z))
        .collect::<Result<_>>()?;
    let slope = reports.iter().map(|r| r.fitted_slope).fold(f64::INFINITY, f64::min);
    let rel = reports
        .iter()
        .map(|r| (r.extrapolated_limit - r.target).norm() / r.target.norm())
        .fold(0.0, f64::max);
    // the error of an exactly reproduced target has no slope to fit
    let exact = reports
        .iter()
        .all(|r| r.max_error() <= 1e-12 * r.target.norm().max(1.0));
    let passed = (slope >= 0.9 || exact) && rel <= 0.01;
    Ok(CheckResult::new(
        id,
        passed,
        slope,
        format!("slope >= 0.9; limit within 1% of target (worst {rel:.3e})"),
    )
    .with_limit_error(rel)
    .with_reports(reports))
}

fn max_distance(a: &FiberSymbol, b: &FiberSymbol) -> f64 {
    a.max_distance(b)
}

fn double_centralizer(cfg: &ExperimentConfig, m: &Manifold, grid: &Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "semiclassics.double_centralizer";
    let mut r = check_rng(cfg, id);
    let hs: Vec<f64> = cfg.h_grid().into_iter().take(3).collect();
    let mut worst = 0.0f64;
    for _ in 0..2 {
        // Gaussian profiles: shifted fiber convolutions stay inside the band
        let b1: Arc<dyn FiberFunction> = Arc::new(random_gaussian_symbol(m, &mut r));
        let b2: Arc<dyn FiberFunction> = Arc::new(random_gaussian_symbol(m, &mut r));
        let f1 = groupoid_quantize(m, grid, b1, &hs)?;
        let f2 = groupoid_quantize(m, grid, b2, &hs)?;
        let z = random_algebra_element(m, &mut r);
        let l2 = centralizer_apply(Side::Left, &z, &f2)?;
        let r1 = centralizer_apply(Side::Right, &z, &f1)?;
        let symbols = max_distance(
            &tb_convolve(&f1.symbol, &l2.symbol)?,
            &tb_convolve(&r1.symbol, &f2.symbol)?,
        );
        worst = worst.max(symbols);
        let slices: Vec<f64> = (0..hs.len())
            .into_par_iter()
            .map(|i| {
                let lhs = f1.kernels[i].1.materialize().compose(&l2.kernels[i].1.materialize());
                let rhs = r1.kernels[i].1.materialize().compose(&f2.kernels[i].1.materialize());
                lhs.max_distance(&rhs)
            })
            .collect();
        worst = slices.into_iter().fold(worst, f64::max);
    }
    Ok(CheckResult::bound(id, worst, 1e-7))
}

/// Sup-norm distance of `dequantize(kernel_h, h)` to `target` over the family's h-grid.
fn dequantization_report(
    grid: &Arc<FiberGrid>,
    kernels: &[(f64, Arc<dyn Kernel>)],
    target: &FiberSymbol,
) -> Result<ConvergenceReport> {
    let errors: Vec<f64> = kernels
        .par_iter()
        .map(|(h, k)| Ok(dequantize(k.as_ref(), *h, grid)?.max_distance(target)))
        .collect::<Result<_>>()?;
    let hs: Vec<f64> = kernels.iter().map(|(h, _)| *h).collect();
    let values = errors.iter().map(|e| Complex64::new(*e, 0.0)).collect();
    Ok(ConvergenceReport::from_errors(
        hs,
        values,
        errors,
        Complex64::new(0.0, 0.0),
    ))
}

fn centralizer_smoothness(cfg: &ExperimentConfig, m: &Manifold, grid: &Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "semiclassics.centralizer_smoothness";
    let mut r = check_rng(cfg, id);
    let fam = family(cfg, m, grid, &mut r, &cfg.h_grid())?;
    let z = random_algebra_element(m, &mut r);
    let mut reports = Vec::new();
    for side in [Side::Left, Side::Right] {
        let out = centralizer_apply(side, &z, &fam)?;
        reports.push(dequantization_report(grid, &out.kernels, &out.symbol)?);
    }
    Ok(rate_check(id, reports, 0.9))
}

/// `dequantize(rho^h(g) T_h rho^h(g)*)` against the transported symbol.
pub(crate) fn covariance_report(
    g: &GroupElement,
    fam: &GroupoidFamily,
    grid: &Arc<FiberGrid>,
) -> Result<ConvergenceReport> {
    let target = fiber_fourier(&symbol_transport(g, &fiber_fourier_inv(&fam.symbol)?))?;
    let kernels: Vec<(f64, Arc<dyn Kernel>)> = fam
        .h_values()
        .into_iter()
        .map(|h| {
            let k: Arc<dyn Kernel> = Arc::new(covariant_conjugate(g, fam, h)?);
            Ok((h, k))
        })
        .collect::<Result<_>>()?;
    dequantization_report(grid, &kernels, &target)
}

fn covariance(cfg: &ExperimentConfig, m: &Manifold, grid: &Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "semiclassics.covariance";
    let mut r = check_rng(cfg, id);
    let hs = cfg.h_grid();
    let fam = family(cfg, m, grid, &mut r, &hs)?;
    let by_function = GroupElement::from_function(random_field(m, &mut r, 1.0));
    let general = random_group_element(m, &mut r);
    let reports = vec![
        covariance_report(&by_function, &fam, grid)?,
        covariance_report(&general, &fam, grid)?,
    ];
    Ok(rate_check(id, reports, 0.9))
}

fn transport_coherence(cfg: &ExperimentConfig, m: &Manifold, grid: &Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "semiclassics.transport_coherence";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let b = random_gaussian_symbol(m, &mut r).sample(m, grid);
        let a = fiber_fourier_inv(&b)?;
        // the intermediate symbol a(x, p + f'(x)) must stay resolved in x
        let g1 = GroupElement::new(random_diffeo(m, &mut r), random_field(m, &mut r, 0.1));
        let g2 = GroupElement::new(random_diffeo(m, &mut r), random_field(m, &mut r, 0.1));
        let lhs = symbol_transport(&multiply(&g1, &g2)?, &a);
        let rhs = symbol_transport(&g1, &symbol_transport(&g2, &a));
        worst = worst.max(lhs.max_distance(&rhs));
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

/// Pointwise: `rho(ab) K rho(ab)*` against `rho(a) (rho(b) K rho(b)*) rho(a)*`
/// at every node pair.
fn conjugation_homomorphism(cfg: &ExperimentConfig, m: &Manifold, grid: &Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "semiclassics.conjugation_homomorphism";
    let mut r = check_rng(cfg, id);
    let h = cfg.h_grid()[0];
    let fam = family(cfg, m, grid, &mut r, &[h])?;
    let k = fam.kernels[0].1.clone();
    let nodes = m.nodes();
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let g1 = random_group_element(m, &mut r);
        let g2 = random_group_element(m, &mut r);
        let lhs = ConjugatedKernel::new(&multiply(&g1, &g2)?, h, k.clone())?;
        let inner: Arc<dyn Kernel> = Arc::new(ConjugatedKernel::new(&g2, h, k.clone())?);
        let rhs = ConjugatedKernel::new(&g1, h, inner)?;
        let (diff, size) = nodes
            .par_iter()
            .map(|&x| {
                nodes.iter().fold((0.0f64, 0.0f64), |(d, s), &y| {
                    let a = lhs.eval(x, y);
                    (d.max((a - rhs.eval(x, y)).norm()), s.max(a.norm()))
                })
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        worst = worst.max(diff / size);
    }
    Ok(CheckResult::bound(id, worst, 1e-7))
}
