use num_complex::Complex64;

use super::{central_difference_check, dyadic_steps};
use crate::error::Result;
use crate::harness::{check_rng, CheckResult, ExperimentConfig};
use crate::lie_group::{bracket, exp_gm, multiply, Diffeo};
use crate::manifold::{ComplexField, Manifold};
use crate::quantization::{derived_representation, l2_inner, l2_norm, quantize_affine, radon_nikodym, rho};
use crate::sampling::{random_algebra_element, random_complex_field, random_diffeo, random_group_element};

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let m = cfg.manifold()?;
    Ok(vec![
        unitarity(cfg, &m)?,
        homomorphism(cfg, &m)?,
        derived(cfg, &m)?,
        self_adjointness(cfg, &m)?,
        commutator(cfg, &m)?,
        radon_nikodym_check(cfg, &m),
        pointwise_form(cfg, &m)?,
    ])
}

const H_VALUES: [f64; 3] = [1.0, 0.5, 0.125];

fn unitarity(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "quantization.unitarity";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let a = random_group_element(m, &mut r);
        let psi = random_complex_field(m, &mut r);
        for h in H_VALUES {
            let out = rho(h, &a)?.apply(&psi);
            worst = worst.max((l2_norm(&out) - l2_norm(&psi)).abs() / l2_norm(&psi));
        }
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

fn homomorphism(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "quantization.homomorphism";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let a = random_group_element(m, &mut r);
        let b = random_group_element(m, &mut r);
        let psi = random_complex_field(m, &mut r);
        let ab = multiply(&a, &b)?;
        let h = 1.0;
        let lhs = rho(h, &ab)?.apply(&psi);
        let rhs = rho(h, &a)?.apply(&rho(h, &b)?.apply(&psi));
        worst = worst.max(lhs.max_distance(&rhs));
    }
    Ok(CheckResult::bound(id, worst, 1e-7))
}

fn derived(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "quantization.derived_representation";
    let mut r = check_rng(cfg, id);
    let z = random_algebra_element(m, &mut r);
    let psi = random_complex_field(m, &mut r);
    let h = 1.0;
    let exact = derived_representation(h, &z)?.apply(&psi);
    let steps = dyadic_steps(3, 6);
    let mut quotients: Vec<ComplexField> = Vec::new();
    for &t in &steps {
        let plus = rho(h, &exp_gm(&z.scale(t))?)?.apply(&psi);
        let minus = rho(h, &exp_gm(&z.scale(-t))?)?.apply(&psi);
        quotients.push(plus.sub(&minus).scale(Complex64::new(0.5 / t, 0.0)));
    }
    let errors: Vec<f64> = quotients.iter().map(|q| q.max_distance(&exact)).collect();
    let n = quotients.len();
    let extrapolated = quotients[n - 1]
        .scale(Complex64::new(4.0 / 3.0, 0.0))
        .sub(&quotients[n - 2].scale(Complex64::new(1.0 / 3.0, 0.0)));
    Ok(central_difference_check(
        id,
        &steps,
        &errors,
        extrapolated.max_distance(&exact),
        1e-6,
    ))
}

fn self_adjointness(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "quantization.self_adjointness";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let z = random_algebra_element(m, &mut r);
        let psi = random_complex_field(m, &mut r);
        let chi = random_complex_field(m, &mut r);
        for h in H_VALUES {
            let q = quantize_affine(h, &z)?;
            let lhs = l2_inner(&q.apply(&psi), &chi);
            let rhs = l2_inner(&psi, &q.apply(&chi));
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

fn commutator(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "quantization.commutator";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let z1 = random_algebra_element(m, &mut r);
        let z2 = random_algebra_element(m, &mut r);
        let psi = random_complex_field(m, &mut r);
        for h in [1.0, 0.5] {
            let d1 = derived_representation(h, &z1)?;
            let d2 = derived_representation(h, &z2)?;
            let lhs = d1.apply(&d2.apply(&psi)).sub(&d2.apply(&d1.apply(&psi)));
            let rhs = derived_representation(h, &bracket(&z1, &z2))?.apply(&psi);
            worst = worst.max(lhs.max_distance(&rhs));
        }
    }
    Ok(CheckResult::bound(id, worst, 1e-5))
}

/// Ratio of Riemannian measures `V_g(phi^-1 [x - d, x + d]) / V_g([x - d, x + d])`.
fn measure_ratio(m: &Manifold, phi: &Diffeo, x: f64, d: f64) -> f64 {
    let a = phi.apply_inverse(x - d);
    let b = a + m.wrap_difference(phi.apply_inverse(x + d) - a);
    (m.arclength(b) - m.arclength(a)) / (m.arclength(x + d) - m.arclength(x - d))
}

fn radon_nikodym_check(cfg: &ExperimentConfig, m: &Manifold) -> CheckResult {
    let id = "quantization.radon_nikodym";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    let d = 1e-3;
    for _ in 0..10 {
        let phi = random_diffeo(m, &mut r);
        for k in 0..20 {
            let x = (k as f64 + 0.37) * m.circumference() / 20.0;
            let coarse = measure_ratio(m, &phi, x, d);
            let fine = measure_ratio(m, &phi, x, 0.5 * d);
            let oracle = (4.0 * fine - coarse) / 3.0;
            let rn = radon_nikodym(&phi, x);
            worst = worst.max((rn - oracle).abs() / oracle);
        }
    }
    let mut res = CheckResult::bound(id, worst, 1e-6);
    if m.conformal_bounds().0 == m.conformal_bounds().1 {
        res.requirement.push_str(" (flat metric)");
    }
    res
}

fn pointwise_form(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "quantization.pointwise_form";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let a = random_group_element(m, &mut r);
        let psi = random_complex_field(m, &mut r);
        let op = rho(0.5, &a)?;
        worst = worst.max(op.apply(&psi).max_distance(&op.materialize().apply(&psi)));
    }
    Ok(CheckResult::bound(id, worst, 1e-10))
}
