use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::harness::{check_rng, CheckResult, ExperimentConfig};
use crate::induction::{descend, lift, translate_descend, translate_descend_unitary, InducedVector};
use crate::lie_group::{flow, multiply, GroupElement};
use crate::manifold::{Manifold, VectorField};
use crate::quantization::rho;
use crate::sampling::{random_complex_field, random_field, random_group_element, TestRng};

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let m = cfg.manifold()?;
    Ok(vec![
        bijection(cfg, &m)?,
        rho_identification(cfg, &m)?,
        homomorphism(cfg, &m)?,
        stabilizer(cfg, &m)?,
    ])
}

fn vector(m: &Manifold, r: &mut TestRng, h: f64) -> Result<InducedVector> {
    let x0 = m.nodes()[r.gen_range(0..m.num_points())];
    InducedVector::new(random_complex_field(m, r), x0, h)
}

fn bijection(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "induction.bijection";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for h in [1.0, 0.5, 0.125] {
        let v = vector(m, &mut r, h)?;
        worst = worst.max(descend(&v).max_distance(&v.psi));
    }
    Ok(CheckResult::bound(id, worst, 1e-12))
}

fn rho_identification(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "induction.rho_identification";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let h = 0.5f64.powi(k % 4);
        let v = vector(m, &mut r, h)?;
        let a = random_group_element(m, &mut r);
        let lhs = translate_descend_unitary(&v, &a)?;
        worst = worst.max(lhs.max_distance(&rho(h, &a)?.apply(&v.psi)));
    }
    Ok(CheckResult::bound(id, worst, 1e-10))
}

fn homomorphism(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "induction.homomorphism";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v = vector(m, &mut r, 1.0)?;
        let a = random_group_element(m, &mut r);
        let b = random_group_element(m, &mut r);
        let after_b = InducedVector::new(translate_descend(&v, &b)?, v.basepoint, v.h)?;
        let lhs = translate_descend(&after_b, &a)?;
        worst = worst.max(lhs.max_distance(&translate_descend(&v, &multiply(&a, &b)?)?));
    }
    Ok(CheckResult::bound(id, worst, 1e-9))
}

/// `(theta, g)` with `theta(x0) = x0`: `theta` is the time-one flow of a random
/// field times `sin(2 pi (x - x0) / L)`.
fn stabilizer_element(m: &Manifold, r: &mut TestRng, x0: f64) -> Result<GroupElement> {
    let l = m.circumference();
    let w = random_field(m, r, 0.5);
    let field = VectorField::from_fn(m, |x| (2.0 * PI * (x - x0) / l).sin() * w.at(x));
    Ok(GroupElement::new(flow(&field, 1.0)?, random_field(m, r, 1.0)))
}

fn stabilizer(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "induction.stabilizer";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    let v = vector(m, &mut r, 1.0)?;
    for _ in 0..50 {
        let a = random_group_element(m, &mut r);
        let s = stabilizer_element(m, &mut r, v.basepoint)?;
        let lhs = lift(&v, &multiply(&a, &s)?);
        let t = 2.0 * PI * s.func.at(v.basepoint) / v.h;
        worst = worst.max((lhs - Complex64::new(t.cos(), t.sin()) * lift(&v, &a)).norm());
    }
    Ok(CheckResult::bound(id, worst, 1e-10))
}
