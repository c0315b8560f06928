//! The natural action of the group on the cotangent bundle, the moment map
//! (through its pairings), and the coadjoint action it intertwines with.

use std::f64::consts::PI;

use crate::error::Result;
use crate::lie_group::{adjoint_at, AlgebraElement, Diffeo, GroupElement};
use crate::manifold::{CotangentPoint, GridManifold, Manifold, ScalarField, VectorField};

/// A covector `p dq` at `x`.
pub type CovectorPoint = CotangentPoint;

/// Tangent vector `v d/dq + w d/dp` to the cotangent bundle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseTangent {
    pub v: f64,
    pub w: f64,
}

impl PhaseTangent {
    pub fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }
}

/// `alpha0_{(phi,f)}(x, p) = (phi(x), p / phi'(x) - f'(phi(x)))`.
pub fn alpha0(a: &GroupElement, eta: &CovectorPoint) -> CovectorPoint {
    let m = a.manifold();
    let y = a.diffeo.apply(eta.x);
    let df = a.func.spectrum().derivative();
    let p = eta.p / a.diffeo.jacobian(eta.x) - df.eval_re(y);
    CovectorPoint::new(m, y, p)
}

/// `<mu(x, p), (X, f)> = p X(x) + f(x)`.
pub fn moment_pairing(eta: &CovectorPoint, z: &AlgebraElement) -> f64 {
    eta.p * z.field.at(eta.x) + z.func.at(eta.x)
}

/// Coadjoint action on the image of the moment map.
///
/// The result is located at `delta_{phi(x)}`; its momentum is read off by
/// pairing `mu(eta)` with `Ad_{a^-1}` of the unit field `(d/dq, 0)`.
pub fn coadjoint_action(a: &GroupElement, eta: &CovectorPoint) -> Result<CovectorPoint> {
    let inv = a.inverse()?;
    Ok(coadjoint_action_with_inverse(a, &inv, eta))
}

/// [`coadjoint_action`] with a precomputed inverse.
pub fn coadjoint_action_with_inverse(a: &GroupElement, a_inv: &GroupElement, eta: &CovectorPoint) -> CovectorPoint {
    let m = a.manifold();
    let unit = AlgebraElement::new(VectorField::from_fn(m, |_| 1.0), ScalarField::zeros(m));
    // <mu(eta), Ad_{a^-1}(d/dq, 0)> only needs the transported pair at eta.x
    let (v, g) = adjoint_at(a_inv, &unit, eta.x);
    let p = eta.p * v + g;
    CovectorPoint::new(m, a.diffeo.apply(eta.x), p)
}

/// Infinitesimal action `(X(x), -p X'(x) - f'(x))`.
pub fn derived_action(z: &AlgebraElement, eta: &CovectorPoint) -> PhaseTangent {
    let dx = z.field.component().spectrum().derivative().eval_re(eta.x);
    let df = z.func.spectrum().derivative().eval_re(eta.x);
    PhaseTangent::new(z.field.at(eta.x), -eta.p * dx - df)
}

/// Canonical symplectic form `dq ^ dp`.
pub fn symplectic_form(_eta: &CovectorPoint, v1: &PhaseTangent, v2: &PhaseTangent) -> f64 {
    v1.v * v2.w - v2.v * v1.w
}

/// Element `(rotation, f)` carrying `from` to `to` under [`alpha0`]; `f` is a
/// single Fourier mode whose slope at the target base point is `p_from - p_to`.
pub fn orbit_connector(m: &Manifold, from: &CovectorPoint, to: &CovectorPoint) -> GroupElement {
    let shift = m.wrap_difference(to.x - from.x);
    let l = m.circumference();
    let k = 2.0 * PI / l;
    let dp = from.p - to.p;
    let x2 = to.x;
    let f = ScalarField::from_fn(m, |x| dp / k * (k * (x - x2)).sin());
    GroupElement::new(Diffeo::rotation(m, shift), f)
}

/// Fixed finite family of algebra elements whose moment pairings separate
/// distinct covectors: the unit field and the first Fourier modes.
pub fn separating_family(m: &Manifold) -> Vec<AlgebraElement> {
    let k = 2.0 * PI / m.circumference();
    vec![
        AlgebraElement::from_fns(m, |_| 1.0, |_| 0.0),
        AlgebraElement::from_fns(m, |_| 0.0, move |x| (k * x).cos()),
        AlgebraElement::from_fns(m, |_| 0.0, move |x| (k * x).sin()),
    ]
}

/// Index of the family member with the largest pairing gap, and the gap.
pub fn separate(family: &[AlgebraElement], a: &CovectorPoint, b: &CovectorPoint) -> (usize, f64) {
    family
        .iter()
        .enumerate()
        .map(|(i, z)| (i, (moment_pairing(a, z) - moment_pairing(b, z)).abs()))
        .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
}

/// Central-difference gradient `(dH/dx, dH/dp)` of `H = <mu(.), z>` with one
/// Richardson step.
pub fn hamiltonian_gradient_fd(m: &GridManifold, z: &AlgebraElement, eta: &CovectorPoint, step: f64) -> (f64, f64) {
    let h = |x: f64, p: f64| moment_pairing(&CovectorPoint { x: m.reduce(x), p }, z);
    let cd = |s: f64| {
        (
            (h(eta.x + s, eta.p) - h(eta.x - s, eta.p)) / (2.0 * s),
            (h(eta.x, eta.p + s) - h(eta.x, eta.p - s)) / (2.0 * s),
        )
    };
    let (a1, b1) = cd(step);
    let (a2, b2) = cd(0.5 * step);
    ((4.0 * a2 - a1) / 3.0, (4.0 * b2 - b1) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_group::bracket;
    use approx::assert_abs_diff_eq;

    #[test]
    fn alpha0_examples() {
        let m = GridManifold::flat(64).unwrap();
        let eta = CovectorPoint::new(&m, 1.3, -0.4);
        let same = alpha0(&GroupElement::identity(&m), &eta);
        assert_abs_diff_eq!(same.x, eta.x, epsilon = 1e-15);
        assert_abs_diff_eq!(same.p, eta.p, epsilon = 1e-15);

        let f = ScalarField::from_fn(&m, |x| (2.0 * x).sin());
        let moved = alpha0(&GroupElement::from_function(f), &eta);
        assert_abs_diff_eq!(moved.p, -0.4 - 2.0 * (2.6_f64).cos(), epsilon = 1e-12);

        let rot = alpha0(&GroupElement::from_diffeo(Diffeo::rotation(&m, 0.5)), &eta);
        assert_abs_diff_eq!(rot.x, 1.8, epsilon = 1e-14);
        assert_abs_diff_eq!(rot.p, -0.4, epsilon = 1e-14);
    }

    #[test]
    fn pairing_examples() {
        let m = GridManifold::flat(64).unwrap();
        let eta = CovectorPoint::new(&m, 1.0, 2.0);
        let z = AlgebraElement::from_fns(&m, f64::sin, f64::cos);
        assert_abs_diff_eq!(moment_pairing(&eta, &z), 2.0 * 1f64.sin() + 1f64.cos(), epsilon = 1e-13);
        let only_f = AlgebraElement::from_fns(&m, |_| 0.0, f64::cos);
        assert_abs_diff_eq!(moment_pairing(&eta, &only_f), 1f64.cos(), epsilon = 1e-13);
    }

    #[test]
    fn coadjoint_matches_alpha0_on_curved_example() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let phi = Diffeo::from_fn(&m, |x| 0.3 + 0.15 * x.sin() + 0.05 * (2.0 * x).cos()).unwrap();
        let a = GroupElement::new(phi, ScalarField::from_fn(&m, |x| (x + 0.4).cos()));
        let eta = CovectorPoint::new(&m, 2.1, 0.7);
        let c = coadjoint_action(&a, &eta).unwrap();
        let d = alpha0(&a, &eta);
        assert_abs_diff_eq!(c.x, d.x, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p, d.p, epsilon = 1e-10);
    }

    #[test]
    fn derived_action_examples() {
        let m = GridManifold::flat(64).unwrap();
        let eta = CovectorPoint::new(&m, 0.9, 1.5);
        let z = AlgebraElement::from_fns(&m, |_| 0.0, |x| x.sin());
        let v = derived_action(&z, &eta);
        assert_abs_diff_eq!(v.v, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.w, -(0.9f64).cos(), epsilon = 1e-12);
        let c = AlgebraElement::from_fns(&m, |_| 0.6, |_| 0.0);
        let v = derived_action(&c, &eta);
        assert_abs_diff_eq!(v.v, 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(v.w, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn symplectic_identities() {
        let m = GridManifold::cosine(64, 0.2).unwrap();
        let eta = CovectorPoint::new(&m, 2.4, -0.8);
        let v = PhaseTangent::new(0.3, 1.7);
        assert_eq!(symplectic_form(&eta, &v, &v), 0.0);
        assert_eq!(
            symplectic_form(&eta, &PhaseTangent::new(1.0, 0.0), &PhaseTangent::new(0.0, 1.0)),
            1.0
        );
        let z1 = AlgebraElement::from_fns(&m, |x| x.sin(), |x| (2.0 * x).cos());
        let z2 = AlgebraElement::from_fns(&m, |x| 0.5 * (x + 1.0).cos(), |x| x.sin());
        let lhs = symplectic_form(&eta, &derived_action(&z1, &eta), &derived_action(&z2, &eta));
        let rhs = moment_pairing(&eta, &bracket(&z1, &z2));
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
    }

    #[test]
    fn connector_and_separation() {
        let m = GridManifold::flat(64).unwrap();
        let a = CovectorPoint::new(&m, 0.5, 1.0);
        let b = CovectorPoint::new(&m, 4.0, -2.0);
        let g = orbit_connector(&m, &a, &b);
        let moved = alpha0(&g, &a);
        assert_abs_diff_eq!(moved.x, b.x, epsilon = 1e-12);
        assert_abs_diff_eq!(moved.p, b.p, epsilon = 1e-12);
        let fam = separating_family(&m);
        let (_, gap) = separate(&fam, &a, &b);
        assert!(gap > 0.1);
        let c = CovectorPoint::new(&m, 0.5, 1.1);
        let (i, gap) = separate(&fam, &a, &c);
        assert_eq!(i, 0);
        assert_abs_diff_eq!(gap, 0.1, epsilon = 1e-12);
    }
}
