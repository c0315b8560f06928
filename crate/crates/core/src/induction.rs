//! Induction from the stabilizer of a point: functions `Psi` on the group with
//! `Psi(a (theta, g)) = e^{2 pi i g(x0) / h} Psi(a)` whenever `theta(x0) = x0`
//! correspond to functions on `M`, and left translation of `Psi` becomes the
//! representation `rho^h` once the half-density `sqrt(RN)` is attached.
//!
//! The function space is never stored: `Psi` is evaluated on demand by
//! [`lift`], and [`descend`] reads it back through the rotation section
//! `y -> (rotation by y - x0, 0)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lie_group::{Diffeo, GroupElement};
use crate::manifold::{ComplexField, Manifold, ScalarField};
use crate::quantization::radon_nikodym;

/// A vector of the induced representation, stored as its descended function.
#[derive(Clone, Debug)]
pub struct InducedVector {
    pub psi: ComplexField,
    pub basepoint: f64,
    pub h: f64,
}

impl InducedVector {
    pub fn new(psi: ComplexField, basepoint: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidParameter(format!("h must lie in (0, 1], got {h}")));
        }
        let basepoint = psi.manifold().reduce(basepoint);
        Ok(Self { psi, basepoint, h })
    }

    pub fn manifold(&self) -> &Manifold {
        self.psi.manifold()
    }
}

/// `Psi((phi, f)) = psi(phi(x0)) e^{2 pi i f(phi(x0)) / h}`.
pub fn lift(v: &InducedVector, a: &GroupElement) -> Complex64 {
    lift_product(v, &[a])
}

/// `Psi(a_1 a_2 ... a_n)` without forming the product: the product has
/// diffeomorphism `phi_1 o ... o phi_n` and, at `phi_1 ... phi_n(x0)`, function
/// value `sum_k f_k(phi_k ... phi_n(x0))`.
pub fn lift_product(v: &InducedVector, word: &[&GroupElement]) -> Complex64 {
    let mut y = v.basepoint;
    let mut f = 0.0;
    for a in word.iter().rev() {
        y = a.diffeo.apply(y);
        f += a.func.at(y);
    }
    let t = 2.0 * PI * f / v.h;
    v.psi.at(y) * Complex64::new(t.cos(), t.sin())
}

/// Section of the orbit map `a -> phi(x0)`: the rotation carrying `x0` to `y`.
pub fn section(m: &Manifold, x0: f64, y: f64) -> GroupElement {
    GroupElement::from_diffeo(Diffeo::rotation(m, y - x0))
}

/// `y -> Psi(section(y))` at every node, for `Psi` given as a closure.
pub fn descend_with(m: &Manifold, x0: f64, psi: impl Fn(&GroupElement) -> Complex64) -> ComplexField {
    let values = m.nodes().iter().map(|&y| psi(&section(m, x0, y))).collect();
    ComplexField::new(m, values)
}

/// Round trip through the induced space: `descend(lift(v, .))`.
pub fn descend(v: &InducedVector) -> ComplexField {
    descend_with(v.manifold(), v.basepoint, |b| lift(v, b))
}

/// Left translate `(a Psi)(b) = Psi(a^-1 b)`, descended to `M`:
/// `y -> psi(phi^-1 y) e^{-2 pi i f(y) / h}`.
pub fn translate_descend(v: &InducedVector, a: &GroupElement) -> Result<ComplexField> {
    let m = v.manifold().clone();
    let a_inv = a.inverse()?;
    let values = m
        .nodes()
        .iter()
        .map(|&y| lift_product(v, &[&a_inv, &section(&m, v.basepoint, y)]))
        .collect();
    Ok(ComplexField::new(&m, values))
}

/// [`translate_descend`] times the half-density `sqrt(RN)` that makes the
/// translation unitary on `L^2(M, V_g)`.
pub fn translate_descend_unitary(v: &InducedVector, a: &GroupElement) -> Result<ComplexField> {
    let t = translate_descend(v, a)?;
    let m = v.manifold();
    let s = ScalarField::from_fn(m, |y| radon_nikodym(&a.diffeo, y).sqrt());
    Ok(t.zip_with(&s, |z, r| z * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_group::{flow, multiply};
    use crate::manifold::{GridManifold, VectorField};

    fn wave(m: &Manifold) -> ComplexField {
        ComplexField::from_fn(m, |x| Complex64::new(x.cos(), (2.0 * x).sin()))
    }

    #[test]
    fn lift_examples() {
        let m = GridManifold::flat(64).unwrap();
        let x0 = m.nodes()[7];
        let v = InducedVector::new(wave(&m), x0, 1.0).unwrap();
        let at_id = lift(&v, &GroupElement::identity(&m));
        assert!((at_id - v.psi.samples()[7]).norm() < 1e-14);
        let s = 0.37;
        let rot = GroupElement::from_diffeo(Diffeo::rotation(&m, s));
        assert!((lift(&v, &rot) - v.psi.at(x0 + s)).norm() < 1e-14);
    }

    #[test]
    fn descend_inverts_lift() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let v = InducedVector::new(wave(&m), m.nodes()[3], 0.5).unwrap();
        assert!(descend(&v).max_distance(&v.psi) < 1e-13);
    }

    #[test]
    fn translate_examples() {
        let m = GridManifold::flat(64).unwrap();
        let v = InducedVector::new(wave(&m), m.nodes()[0], 1.0).unwrap();
        let id = translate_descend(&v, &GroupElement::identity(&m)).unwrap();
        assert!(id.max_distance(&v.psi) < 1e-13);
        let f = ScalarField::from_fn(&m, |x| 0.3 * x.sin());
        let t = translate_descend(&v, &GroupElement::from_function(f.clone())).unwrap();
        for (i, &x) in m.nodes().iter().enumerate() {
            let ph = Complex64::new(0.0, -2.0 * PI * 0.3 * x.sin()).exp();
            assert!((t.samples()[i] - v.psi.samples()[i] * ph).norm() < 1e-12);
        }
    }

    #[test]
    fn stabilizer_acts_by_a_character() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let x0 = m.nodes()[10];
        let l = m.circumference();
        let v = InducedVector::new(wave(&m), x0, 0.25).unwrap();
        let field = VectorField::from_fn(&m, |x| 0.4 * (2.0 * PI * (x - x0) / l).sin() * (1.0 + 0.3 * x.cos()));
        let theta = flow(&field, 1.0).unwrap();
        assert!((theta.apply(x0) - x0).abs() < 1e-14);
        let g = ScalarField::from_fn(&m, |x| 0.2 * (x + 0.5).cos());
        let stab = GroupElement::new(theta, g.clone());
        let a = GroupElement::new(
            Diffeo::from_fn(&m, |x| 0.5 + 0.1 * x.sin()).unwrap(),
            ScalarField::from_fn(&m, |x| 0.3 * (2.0 * x).cos()),
        );
        let lhs = lift(&v, &multiply(&a, &stab).unwrap());
        let t = 2.0 * PI * g.at(x0) / v.h;
        let rhs = Complex64::new(t.cos(), t.sin()) * lift(&v, &a);
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn pointwise_products_match_the_group_law() {
        let m = GridManifold::cosine(256, 0.3).unwrap();
        let mut r = crate::sampling::rng(11);
        let v = InducedVector::new(wave(&m), m.nodes()[5], 1.0).unwrap();
        let a = crate::sampling::random_group_element(&m, &mut r);
        let b = crate::sampling::random_group_element(&m, &mut r);
        let ab = multiply(&a, &b).unwrap();
        let d = (lift_product(&v, &[&a, &b]) - lift(&v, &ab)).norm();
        assert!(d < 1e-9, "{d:e}");
    }
}
