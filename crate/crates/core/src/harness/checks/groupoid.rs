use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::{dyadic_steps, rate_check};
use crate::error::Result;
use crate::groupoid::{
    beta_chart, beta_inverse, extend_diffeo_eval, extend_scalar, fiber_fourier, fiber_fourier_inv, haar_integral,
    haar_integral_grid, pair_convolve, tb_convolve, DiffeoFamily, FiberFunction, FiberGrid, Profile,
    TangentGroupoidPoint,
};
use crate::harness::{check_rng, CheckResult, ExperimentConfig, MetricPreset};
use crate::manifold::{GridManifold, Manifold, ScalarField, TangentPoint};
use crate::quantization::L2Operator;
use crate::sampling::{random_diffeo, random_gaussian_symbol, random_vector_field, TestRng};
use crate::semiclassics::{fit_slope, ConvergenceReport};

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let m = cfg.manifold()?;
    let grid = FiberGrid::default_grid();
    Ok(vec![
        exp_log(&m),
        quadrature(cfg, &m),
        derivative_rate(&m),
        pair_convolution(cfg, &m)?,
        haar_left_invariance(cfg, &m),
        fourier_round_trip(cfg, &m, &grid)?,
        parseval(cfg, &m, &grid)?,
        convolution_theorem(cfg, &m, &grid)?,
        scalar_extension(cfg, &m, &grid),
        diffeo_extension(cfg, &m)?,
        haar_continuity(cfg, &m, &grid),
    ])
}

fn exp_log(m: &Manifold) -> CheckResult {
    let id = "manifold.exp_log";
    let limit = 0.99 * m.injectivity_radius();
    let mut worst = 0.0f64;
    for &x in m.nodes() {
        for &y in m.nodes() {
            if m.distance(x, y) >= limit {
                continue;
            }
            if let Ok(v) = m.riem_log(x, y) {
                worst = worst.max(m.wrap_difference(m.riem_exp(x, v) - y).abs());
            } else {
                worst = f64::INFINITY;
            }
        }
    }
    CheckResult::bound(id, worst, 1e-10)
}

fn quadrature(cfg: &ExperimentConfig, m: &Manifold) -> CheckResult {
    let id = "manifold.quadrature";
    let mut r = check_rng(cfg, id);
    let l = m.circumference();
    let omega = 2.0 * PI / l;
    let amp = match cfg.metric {
        MetricPreset::Flat => 0.0,
        MetricPreset::Cosine => cfg.amplitude,
    };
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let modes: Vec<(f64, f64)> = (0..m.num_points() / 2)
            .map(|_| (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let p = |x: f64| {
            modes
                .iter()
                .enumerate()
                .map(|(k, (a, b))| a * (omega * k as f64 * x).cos() + b * (omega * k as f64 * x).sin())
                .sum::<f64>()
        };
        let sum: f64 = m.nodes().iter().zip(m.weights()).map(|(&x, w)| p(x) * w).sum();
        // int p c over one period, c = 1 + amp cos(omega x)
        let exact = l * modes[0].0 + 0.5 * amp * l * modes[1].0;
        worst = worst.max((sum - exact).abs());
    }
    CheckResult::bound(id, worst, 1e-10)
}

fn derivative_rate(m: &Manifold) -> CheckResult {
    let id = "manifold.derivative_rate";
    let omega = 2.0 * PI / m.circumference();
    let s = ScalarField::from_fn(m, |x| (3.0 * omega * x).sin() + 0.5 * (5.0 * omega * x + 0.3).cos());
    let ds = s.derivative();
    let steps = dyadic_steps(4, 5)
        .iter()
        .map(|t| t * m.circumference() / (2.0 * PI))
        .collect::<Vec<_>>();
    let errors: Vec<f64> = steps
        .iter()
        .map(|&h| {
            m.nodes()
                .iter()
                .zip(ds.samples())
                .map(|(&x, d)| {
                    let fd =
                        (-s.at(x + 2.0 * h) + 8.0 * s.at(x + h) - 8.0 * s.at(x - h) + s.at(x - 2.0 * h)) / (12.0 * h);
                    (fd - d).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let slope = fit_slope(&steps, &errors);
    let report = ConvergenceReport::from_errors(
        steps.clone(),
        errors.iter().map(|e| Complex64::new(*e, 0.0)).collect(),
        errors.clone(),
        Complex64::new(0.0, 0.0),
    );
    CheckResult::new(id, (slope - 4.0).abs() <= 0.3, slope, "slope 4.0 +- 0.3").with_reports(vec![report])
}

fn random_kernel(m: &Manifold, r: &mut TestRng) -> L2Operator {
    let n = m.num_points();
    let k = ndarray::Array2::from_shape_fn((n, n), |_| {
        Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
    });
    L2Operator::new(m, k)
}

fn pair_convolution(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "groupoid.pair_convolution";
    let mut r = check_rng(cfg, id);
    let (a, b, c) = (
        random_kernel(m, &mut r),
        random_kernel(m, &mut r),
        random_kernel(m, &mut r),
    );
    let left = pair_convolve(&pair_convolve(&a, &b), &c);
    let right = pair_convolve(&a, &pair_convolve(&b, &c));
    let assoc = left.max_distance(&right) / left.max_abs();

    // naive triple loop on a small grid
    let small = GridManifold::cosine(32, 0.3)?;
    let (p, q) = (random_kernel(&small, &mut r), random_kernel(&small, &mut r));
    let pq = pair_convolve(&p, &q);
    let w = small.weights();
    let mut naive = 0.0f64;
    for i in 0..32 {
        for j in 0..32 {
            let s: Complex64 = w
                .iter()
                .enumerate()
                .map(|(k, wk)| p.kernel()[(i, k)] * q.kernel()[(k, j)] * *wk)
                .sum();
            naive = naive.max((s - pq.kernel()[(i, j)]).norm());
        }
    }
    Ok(CheckResult::bound(id, assoc.max(naive / pq.max_abs()), 1e-8))
}

fn haar_left_invariance(cfg: &ExperimentConfig, m: &Manifold) -> CheckResult {
    let id = "groupoid.haar_left_invariance";
    let mut r = check_rng(cfg, id);
    let grid = FiberGrid::default_grid();
    let mut worst = 0.0f64;
    let f = |pt: &TangentGroupoidPoint| match *pt {
        TangentGroupoidPoint::Pair { h, x, y } => {
            let d = m.wrap_difference(x - y) / h;
            Complex64::new((-d * d).exp() * (1.0 + 0.3 * x.sin()), 0.4 * y.cos())
        }
        TangentGroupoidPoint::Tangent(t) => Complex64::new((-t.v * t.v).exp(), 0.0),
    };
    for _ in 0..20 {
        let h = 0.5f64.powi(r.gen_range(1..6));
        let x = m.nodes()[r.gen_range(0..m.num_points())];
        let z = m.nodes()[r.gen_range(0..m.num_points())];
        // gamma = (x, z) acts on the fiber over z: (x, z)(z, y) = (x, y)
        let translated = |pt: &TangentGroupoidPoint| match *pt {
            TangentGroupoidPoint::Pair { h, y, .. } => f(&TangentGroupoidPoint::Pair { h, x, y }),
            TangentGroupoidPoint::Tangent(_) => unreachable!("h > 0"),
        };
        let lhs = haar_integral_grid(m, &grid, translated, h, z);
        let rhs = haar_integral_grid(m, &grid, f, h, x);
        worst = worst.max((lhs - rhs).norm() / rhs.norm().max(1.0));
    }
    CheckResult::bound(id, worst, 1e-8)
}

fn fourier_round_trip(cfg: &ExperimentConfig, m: &Manifold, grid: &std::sync::Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "groupoid.fourier_round_trip";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let b = super::symbol(cfg, m, &mut r).sample(m, grid);
        let a = fiber_fourier_inv(&b)?;
        let back = fiber_fourier(&a)?;
        let again = fiber_fourier_inv(&back)?;
        worst = worst
            .max(back.max_distance(&b) / b.max_abs())
            .max(again.max_distance(&a) / a.max_abs());
    }
    Ok(CheckResult::bound(id, worst, 1e-9))
}

fn parseval(cfg: &ExperimentConfig, m: &Manifold, grid: &std::sync::Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "groupoid.parseval";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let b = super::symbol(cfg, m, &mut r).sample(m, grid);
        let a = fiber_fourier_inv(&b)?;
        for i in 0..m.num_points() {
            let nb: f64 = b.values().row(i).iter().map(|z| z.norm_sqr()).sum::<f64>() * b.fiber_weight(i);
            let na: f64 = a.values().row(i).iter().map(|z| z.norm_sqr()).sum::<f64>() * a.fiber_weight(i);
            worst = worst.max((nb - na).abs() / nb.max(1e-300));
        }
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

fn convolution_theorem(cfg: &ExperimentConfig, m: &Manifold, grid: &std::sync::Arc<FiberGrid>) -> Result<CheckResult> {
    let id = "groupoid.convolution_theorem";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        // Gaussian profiles keep the convolution inside the velocity band
        let b1 = random_gaussian_symbol(m, &mut r).sample(m, grid);
        let b2 = random_gaussian_symbol(m, &mut r).sample(m, grid);
        let a1 = fiber_fourier_inv(&b1)?;
        let a2 = fiber_fourier_inv(&b2)?;
        let lhs = fiber_fourier_inv(&tb_convolve(&b1, &b2)?)?;
        let prod = &a1.values().clone() * a2.values();
        let diff = lhs
            .values()
            .iter()
            .zip(prod.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

fn scalar_extension(cfg: &ExperimentConfig, m: &Manifold, grid: &FiberGrid) -> CheckResult {
    let id = "groupoid.scalar_extension";
    let mut r = check_rng(cfg, id);
    let (k, s) = (r.gen_range(1..4) as f64, r.gen_range(0.2..1.0));
    let omega = 2.0 * PI / m.circumference();
    let g = move |h: f64, x: f64| Complex64::new(0.0, k * omega * x + s * h * (omega * x).sin()).exp();
    let vs: Vec<f64> = grid.velocities().iter().step_by(16).cloned().collect();
    // at h = 0 the pulled-back function ignores v
    let mut violation = 0.0f64;
    for &x in m.nodes() {
        let base = g(0.0, x);
        for &v in &vs {
            let at = extend_scalar(g, &beta_chart(m, 0.0, TangentPoint::new(m, x, v)));
            violation = violation.max((at - base).norm());
        }
    }
    // h-modulus of the extension is bounded by the h-modulus of g
    for h in dyadic_steps(1, 8) {
        let modulus_g = m
            .nodes()
            .iter()
            .map(|&x| (g(h, x) - g(0.0, x)).norm())
            .fold(0.0, f64::max);
        let mut modulus_ext = 0.0f64;
        for &x in m.nodes() {
            for &v in &vs {
                let tp = TangentPoint::new(m, x, v);
                let d = extend_scalar(g, &beta_chart(m, h, tp)) - extend_scalar(g, &beta_chart(m, 0.0, tp));
                modulus_ext = modulus_ext.max(d.norm());
            }
        }
        violation = violation.max(modulus_ext - modulus_g);
    }
    CheckResult::bound(id, violation, 1e-15)
}

fn diffeo_extension(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "groupoid.diffeo_extension";
    let mut r = check_rng(cfg, id);
    let families = [
        DiffeoFamily::ReverseFlow(random_vector_field(m, &mut r, 0.5)),
        DiffeoFamily::Constant(random_diffeo(m, &mut r)),
    ];
    let samples: Vec<(f64, f64)> = (0..10)
        .map(|_| (r.gen_range(0.0..m.circumference()), r.gen_range(-2.0..2.0)))
        .collect();
    let hs = cfg.h_grid();
    let mut reports = Vec::new();
    for fam in &families {
        let mut errors = Vec::with_capacity(hs.len());
        for &h in &hs {
            let mut worst = 0.0f64;
            for &(x, v) in &samples {
                let img = extend_diffeo_eval(m, fam, &beta_chart(m, h, TangentPoint::new(m, x, v)));
                let tp = beta_inverse(m, &img)?;
                let (bx, bv) = fam.boundary(x, v);
                worst = worst.max(m.wrap_difference(tp.x - bx).abs() + (tp.v - bv).abs());
            }
            errors.push(worst);
        }
        let values = errors.iter().map(|e| Complex64::new(*e, 0.0)).collect();
        reports.push(ConvergenceReport::from_errors(
            hs.clone(),
            values,
            errors,
            Complex64::new(0.0, 0.0),
        ));
    }
    Ok(rate_check(id, reports, 0.9))
}

/// Test function on the tangent groupoid: a bump of the coordinate
/// difference `(x - y) / h`, with a non-even factor.
pub(crate) fn haar_test_function(m: &Manifold, pt: &TangentGroupoidPoint) -> Complex64 {
    let prof = Profile::Bump {
        center: 1.0,
        radius: 2.0,
    };
    let s = match *pt {
        TangentGroupoidPoint::Tangent(t) => t.v,
        TangentGroupoidPoint::Pair { h, x, y } => m.wrap_difference(x - y) / h,
    };
    Complex64::new(prof.eval(s) * ((0.7 * s).sin() + 1.3), 0.0)
}

fn haar_continuity(cfg: &ExperimentConfig, m: &Manifold, grid: &FiberGrid) -> CheckResult {
    let id = "groupoid.haar_continuity";
    let mut r = check_rng(cfg, id);
    let hs = cfg.h_grid();
    let mut reports = Vec::new();
    for _ in 0..3 {
        let x = r.gen_range(0.0..m.circumference());
        let f = |pt: &TangentGroupoidPoint| haar_test_function(m, pt);
        let target = haar_integral(m, grid, f, 0.0, x);
        let values = hs.iter().map(|&h| haar_integral(m, grid, f, h, x)).collect();
        reports.push(ConvergenceReport::from_values(hs.clone(), values, target));
    }
    rate_check(id, reports, 0.9)
}
