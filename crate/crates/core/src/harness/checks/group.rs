use super::{central_difference_check, coordinates, dyadic_steps, richardson2, sup_diff};
use crate::error::Result;
use crate::harness::{check_rng, CheckResult, ExperimentConfig};
use crate::lie_group::{adjoint, bracket, exp_gm, flow_points, multiply, AlgebraElement, GroupElement};
use crate::manifold::Manifold;
use crate::quadrature::gauss_legendre_unit;
use crate::sampling::{random_algebra_element, random_group_element};

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let m = cfg.manifold()?;
    Ok(vec![
        associativity(cfg, &m)?,
        inverse(cfg, &m)?,
        exp_second_slot(cfg, &m)?,
        one_parameter(cfg, &m)?,
        jacobi(cfg, &m),
        adjoint_homomorphism(cfg, &m)?,
        adjoint_conjugation(cfg, &m)?,
        bracket_derivative(cfg, &m)?,
    ])
}

fn associativity(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "group.associativity";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let a = random_group_element(m, &mut r);
        let b = random_group_element(m, &mut r);
        let c = random_group_element(m, &mut r);
        let left = multiply(&multiply(&a, &b)?, &c)?;
        let right = multiply(&a, &multiply(&b, &c)?)?;
        worst = worst.max(left.max_distance(&right));
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

fn inverse(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "group.inverse";
    let mut r = check_rng(cfg, id);
    let e = GroupElement::identity(m);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let a = random_group_element(m, &mut r);
        let ai = a.inverse()?;
        worst = worst
            .max(multiply(&a, &ai)?.max_distance(&e))
            .max(multiply(&ai, &a)?.max_distance(&e));
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

/// Independent oracle for `int_0^1 f(Fl^{-X}_t x) dt`: composite Gauss-Legendre
/// in `t`, each flow integrated from `t = 0`.
fn flow_average_oracle(z: &AlgebraElement, panels: usize) -> Vec<f64> {
    let m = z.manifold();
    let (gn, gw) = gauss_legendre_unit(16);
    let neg = z.field.scale(-1.0);
    let mut acc = vec![0.0; m.num_points()];
    for p in 0..panels {
        for (t, w) in gn.iter().zip(&gw) {
            let time = (p as f64 + t) / panels as f64;
            let pts = flow_points(&neg, time, m.nodes());
            for (a, y) in acc.iter_mut().zip(&pts) {
                *a += w / panels as f64 * z.func.at(*y);
            }
        }
    }
    acc
}

fn exp_second_slot(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "group.exp_second_slot";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let z = random_algebra_element(m, &mut r);
        let e = exp_gm(&z)?;
        worst = worst.max(sup_diff(e.func.samples(), &flow_average_oracle(&z, 8)));
    }
    Ok(CheckResult::bound(id, worst, 1e-9))
}

fn one_parameter(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "group.one_parameter";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for (t, s) in [(0.3, 0.5), (-0.4, 0.9)] {
        let z = random_algebra_element(m, &mut r);
        let lhs = multiply(&exp_gm(&z.scale(t))?, &exp_gm(&z.scale(s))?)?;
        worst = worst.max(lhs.max_distance(&exp_gm(&z.scale(t + s))?));
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

fn jacobi(cfg: &ExperimentConfig, m: &Manifold) -> CheckResult {
    let id = "group.jacobi";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let a = random_algebra_element(m, &mut r);
        let b = random_algebra_element(m, &mut r);
        let c = random_algebra_element(m, &mut r);
        let sum = bracket(&a, &bracket(&b, &c))
            .add(&bracket(&b, &bracket(&c, &a)))
            .add(&bracket(&c, &bracket(&a, &b)));
        worst = worst.max(sum.max_distance(&AlgebraElement::zero(m)));
    }
    CheckResult::bound(id, worst, 1e-8)
}

fn adjoint_homomorphism(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "group.adjoint_homomorphism";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let a = random_group_element(m, &mut r);
        let b = random_group_element(m, &mut r);
        let z = random_algebra_element(m, &mut r);
        let lhs = adjoint(&multiply(&a, &b)?, &z);
        worst = worst.max(lhs.max_distance(&adjoint(&a, &adjoint(&b, &z))));
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

/// Central quotient `(F(t) - F(-t)) / 2t` of node coordinates.
fn central_quotient(t: f64, f: impl Fn(f64) -> Result<(Vec<f64>, Vec<f64>)>) -> Result<(Vec<f64>, Vec<f64>)> {
    let (u1, g1) = f(t)?;
    let (u0, g0) = f(-t)?;
    let q = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * t)).collect();
    Ok((q(&u1, &u0), q(&g1, &g0)))
}

/// Runs a central-difference sweep of `f` against `exact`.
fn derivative_sweep(
    id: &'static str,
    exact: &AlgebraElement,
    f: impl Fn(f64) -> Result<(Vec<f64>, Vec<f64>)>,
) -> Result<CheckResult> {
    let steps = dyadic_steps(3, 6);
    let ex = (exact.field.component().samples(), exact.func.samples());
    let mut errors = Vec::new();
    let mut quotients = Vec::new();
    for &t in &steps {
        let (du, dg) = central_quotient(t, &f)?;
        errors.push(sup_diff(&du, ex.0).max(sup_diff(&dg, ex.1)));
        quotients.push((du, dg));
    }
    let n = quotients.len();
    let (cu, cg) = &quotients[n - 2];
    let (fu, fg) = &quotients[n - 1];
    let limit = sup_diff(&richardson2(cu, fu), ex.0).max(sup_diff(&richardson2(cg, fg), ex.1));
    Ok(central_difference_check(id, &steps, &errors, limit, 1e-6))
}

fn adjoint_conjugation(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "group.adjoint_conjugation";
    let mut r = check_rng(cfg, id);
    let a = random_group_element(m, &mut r);
    let z = random_algebra_element(m, &mut r);
    let ai = a.inverse()?;
    let exact = adjoint(&a, &z);
    derivative_sweep(id, &exact, |t| {
        let c = multiply(&a, &multiply(&exp_gm(&z.scale(t))?, &ai)?)?;
        Ok(coordinates(&c))
    })
}

fn bracket_derivative(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "group.bracket_derivative";
    let mut r = check_rng(cfg, id);
    let z1 = random_algebra_element(m, &mut r);
    let z2 = random_algebra_element(m, &mut r);
    let exact = bracket(&z1, &z2);
    derivative_sweep(id, &exact, |t| {
        let ad = adjoint(&exp_gm(&z1.scale(t))?, &z2);
        Ok((ad.field.component().samples().to_vec(), ad.func.samples().to_vec()))
    })
}
