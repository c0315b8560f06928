use rand::Rng;

use super::{central_difference_check, dyadic_steps};
use crate::coadjoint::{
    alpha0, coadjoint_action_with_inverse, derived_action, hamiltonian_gradient_fd, moment_pairing, orbit_connector,
    separate, separating_family, symplectic_form, CovectorPoint, PhaseTangent,
};
use crate::error::Result;
use crate::harness::{check_rng, CheckResult, ExperimentConfig};
use crate::lie_group::{adjoint_at, bracket, exp_gm};
use crate::manifold::Manifold;
use crate::sampling::{random_algebra_element, random_covector, random_group_element, TestRng};

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let m = cfg.manifold()?;
    Ok(vec![
        alpha0_agreement(cfg, &m)?,
        pairing_equivariance(cfg, &m)?,
        comoment(cfg, &m),
        symplectic_pairing(cfg, &m),
        derived_action_check(cfg, &m)?,
        transitivity(cfg, &m),
        separation(cfg, &m),
    ])
}

fn covector_distance(m: &Manifold, a: &CovectorPoint, b: &CovectorPoint) -> f64 {
    m.wrap_difference(a.x - b.x).abs().max((a.p - b.p).abs())
}

fn alpha0_agreement(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "coadjoint.alpha0_agreement";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = random_group_element(m, &mut r);
        let ai = a.inverse()?;
        for _ in 0..10 {
            let eta = random_covector(m, &mut r);
            let lhs = coadjoint_action_with_inverse(&a, &ai, &eta);
            worst = worst.max(covector_distance(m, &lhs, &alpha0(&a, &eta)));
        }
    }
    Ok(CheckResult::bound(id, worst, 1e-9))
}

fn pairing_equivariance(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "coadjoint.pairing_equivariance";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a = random_group_element(m, &mut r);
        let ai = a.inverse()?;
        let z = random_algebra_element(m, &mut r);
        for _ in 0..4 {
            let eta = random_covector(m, &mut r);
            let lhs = moment_pairing(&alpha0(&a, &eta), &z);
            let (v, g) = adjoint_at(&ai, &z, eta.x);
            worst = worst.max((lhs - (eta.p * v + g)).abs());
        }
    }
    Ok(CheckResult::bound(id, worst, 1e-8))
}

fn comoment(cfg: &ExperimentConfig, m: &Manifold) -> CheckResult {
    let id = "coadjoint.comoment";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    let dx = PhaseTangent::new(1.0, 0.0);
    let dp = PhaseTangent::new(0.0, 1.0);
    for _ in 0..50 {
        let z = random_algebra_element(m, &mut r);
        for _ in 0..20 {
            let eta = random_covector(m, &mut r);
            let (hx, hp) = hamiltonian_gradient_fd(m, &z, &eta, 1e-5);
            let xi = derived_action(&z, &eta);
            worst = worst
                .max((hx - symplectic_form(&eta, &xi, &dx)).abs())
                .max((hp - symplectic_form(&eta, &xi, &dp)).abs());
        }
    }
    CheckResult::bound(id, worst, 1e-7)
}

fn symplectic_pairing(cfg: &ExperimentConfig, m: &Manifold) -> CheckResult {
    let id = "coadjoint.symplectic_pairing";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let z1 = random_algebra_element(m, &mut r);
        let z2 = random_algebra_element(m, &mut r);
        let br = bracket(&z1, &z2);
        for _ in 0..20 {
            let eta = random_covector(m, &mut r);
            let lhs = symplectic_form(&eta, &derived_action(&z1, &eta), &derived_action(&z2, &eta));
            worst = worst.max((lhs - moment_pairing(&eta, &br)).abs());
        }
    }
    CheckResult::bound(id, worst, 1e-8)
}

fn derived_action_check(cfg: &ExperimentConfig, m: &Manifold) -> Result<CheckResult> {
    let id = "coadjoint.derived_action";
    let mut r = check_rng(cfg, id);
    let z = random_algebra_element(m, &mut r);
    let etas: Vec<CovectorPoint> = (0..20).map(|_| random_covector(m, &mut r)).collect();
    let exact: Vec<PhaseTangent> = etas.iter().map(|e| derived_action(&z, e)).collect();
    let steps = dyadic_steps(3, 6);
    let mut quotients = Vec::new();
    for &t in &steps {
        let plus = exp_gm(&z.scale(t))?;
        let minus = exp_gm(&z.scale(-t))?;
        let q: Vec<(f64, f64)> = etas
            .iter()
            .map(|e| {
                let (a, b) = (alpha0(&plus, e), alpha0(&minus, e));
                (m.wrap_difference(a.x - b.x) / (2.0 * t), (a.p - b.p) / (2.0 * t))
            })
            .collect();
        quotients.push(q);
    }
    let err = |q: &[(f64, f64)]| {
        q.iter()
            .zip(&exact)
            .map(|((v, w), e)| (v - e.v).abs().max((w - e.w).abs()))
            .fold(0.0, f64::max)
    };
    let errors: Vec<f64> = quotients.iter().map(|q| err(q)).collect();
    let n = quotients.len();
    let extrapolated: Vec<(f64, f64)> = quotients[n - 2]
        .iter()
        .zip(&quotients[n - 1])
        .map(|(c, f)| ((4.0 * f.0 - c.0) / 3.0, (4.0 * f.1 - c.1) / 3.0))
        .collect();
    Ok(central_difference_check(id, &steps, &errors, err(&extrapolated), 1e-6))
}

fn grid_covector(m: &Manifold, r: &mut TestRng) -> CovectorPoint {
    let i = r.gen_range(0..m.num_points());
    CovectorPoint::new(m, m.nodes()[i], r.gen_range(-2.0..2.0))
}

fn transitivity(cfg: &ExperimentConfig, m: &Manifold) -> CheckResult {
    let id = "coadjoint.transitivity";
    let mut r = check_rng(cfg, id);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let from = grid_covector(m, &mut r);
        let to = grid_covector(m, &mut r);
        let a = orbit_connector(m, &from, &to);
        worst = worst.max(covector_distance(m, &alpha0(&a, &from), &to));
    }
    CheckResult::bound(id, worst, 1e-9)
}

fn separation(cfg: &ExperimentConfig, m: &Manifold) -> CheckResult {
    let id = "coadjoint.separation";
    let mut r = check_rng(cfg, id);
    let family = separating_family(m);
    let mut smallest = f64::INFINITY;
    let mut tested = 0;
    while tested < 1000 {
        let a = grid_covector(m, &mut r);
        // half the pairs share a base point or a momentum
        let b = match tested % 4 {
            0 => CovectorPoint::new(m, a.x, r.gen_range(-2.0..2.0)),
            1 => CovectorPoint::new(m, grid_covector(m, &mut r).x, a.p),
            _ => grid_covector(m, &mut r),
        };
        if covector_distance(m, &a, &b) == 0.0 {
            continue;
        }
        let (_, gap) = separate(&family, &a, &b);
        smallest = smallest.min(gap);
        tested += 1;
    }
    CheckResult::new(id, smallest > 0.0, smallest, "smallest pairing gap > 0")
}
