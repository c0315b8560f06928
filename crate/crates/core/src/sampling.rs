//! Seeded random test objects.
//!
//! Fields are trigonometric polynomials with modes up to N/8 whose amplitudes
//! decay like `exp(-k/4)`; diffeomorphism displacements are scaled so that
//! `1 + u' >= 0.5` everywhere.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::coadjoint::CovectorPoint;
use crate::groupoid::{Profile, SeparableSymbol};
use crate::lie_group::{AlgebraElement, Diffeo, GroupElement};
use crate::manifold::{ComplexField, Manifold, ScalarField, VectorField};

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spectral envelope decay length (in modes).
const DECAY: f64 = 4.0;

fn max_mode(m: &Manifold) -> usize {
    (m.num_points() / 8).max(1)
}

/// Random real trig polynomial with zero mean, returned as (k, cos coeff, sin coeff).
fn random_modes(m: &Manifold, rng: &mut TestRng) -> Vec<(usize, f64, f64)> {
    (1..=max_mode(m))
        .map(|k| {
            let env = (-(k as f64 - 1.0) / DECAY).exp();
            (k, env * rng.gen_range(-1.0..1.0), env * rng.gen_range(-1.0..1.0))
        })
        .collect()
}

fn eval_modes(modes: &[(usize, f64, f64)], omega: f64, x: f64) -> f64 {
    modes
        .iter()
        .map(|&(k, a, b)| {
            let t = omega * k as f64 * x;
            a * t.cos() + b * t.sin()
        })
        .sum()
}

/// Random real field with sup-norm bound `amplitude` (constant term included).
pub fn random_field(m: &Manifold, rng: &mut TestRng, amplitude: f64) -> ScalarField {
    let modes = random_modes(m, rng);
    let c0: f64 = rng.gen_range(-1.0..1.0);
    let bound: f64 = c0.abs() + modes.iter().map(|(_, a, b)| a.abs() + b.abs()).sum::<f64>();
    let s = amplitude / bound;
    let omega = 2.0 * PI / m.circumference();
    ScalarField::from_fn(m, |x| s * (c0 + eval_modes(&modes, omega, x)))
}

/// Random complex field with unit-order amplitude.
pub fn random_complex_field(m: &Manifold, rng: &mut TestRng) -> ComplexField {
    let re = random_field(m, rng, 1.0);
    let im = random_field(m, rng, 1.0);
    re.zip_with(&im, Complex64::new)
}

/// Random vector field with sup-norm at most `amplitude`.
pub fn random_vector_field(m: &Manifold, rng: &mut TestRng, amplitude: f64) -> VectorField {
    VectorField::new(random_field(m, rng, amplitude))
}

/// Random diffeomorphism: a rotation by up to `L/2` plus a periodic
/// displacement with `|u'| <= 0.5`.
pub fn random_diffeo(m: &Manifold, rng: &mut TestRng) -> Diffeo {
    let modes = random_modes(m, rng);
    let omega = 2.0 * PI / m.circumference();
    let slope: f64 = modes
        .iter()
        .map(|&(k, a, b)| omega * k as f64 * (a.abs() + b.abs()))
        .sum();
    let s = 0.5 * rng.gen_range(0.2..1.0) / slope;
    let shift = rng.gen_range(-0.5..0.5) * m.circumference();
    Diffeo::from_fn(m, |x| shift + s * eval_modes(&modes, omega, x))
        .expect("displacement with |u'| <= 0.5 is invertible")
}

pub fn random_group_element(m: &Manifold, rng: &mut TestRng) -> GroupElement {
    let phi = random_diffeo(m, rng);
    let f = random_field(m, rng, 1.0);
    GroupElement::new(phi, f)
}

/// Random algebra element with `|X| <= 0.5`, `|f| <= 1`.
pub fn random_algebra_element(m: &Manifold, rng: &mut TestRng) -> AlgebraElement {
    AlgebraElement::new(random_vector_field(m, rng, 0.5), random_field(m, rng, 1.0))
}

pub fn random_covector(m: &Manifold, rng: &mut TestRng) -> CovectorPoint {
    let x = rng.gen_range(0.0..m.circumference());
    let p = rng.gen_range(-2.0..2.0);
    CovectorPoint::new(m, x, p)
}

/// Random separable symbol: two terms with complex base factors and bump
/// profiles centred in `[-1, 1]` with radii in `[1, 2]`.
pub fn random_symbol(m: &Manifold, rng: &mut TestRng) -> SeparableSymbol {
    let terms = (0..2)
        .map(|_| {
            let u = random_complex_field(m, rng);
            let profile = Profile::Bump {
                center: rng.gen_range(-1.0..1.0),
                radius: rng.gen_range(1.0..2.0),
            };
            (u, profile)
        })
        .collect();
    SeparableSymbol::new(terms)
}

/// Random separable symbol with Gaussian profiles: centres in `[-0.5, 0.5]`,
/// widths in `[0.5, 0.8]`. Fiber convolutions of two of them, shifted by a
/// field of size at most 0.5, stay inside the default velocity band, and
/// their grid sums are accurate to rounding.
pub fn random_gaussian_symbol(m: &Manifold, rng: &mut TestRng) -> SeparableSymbol {
    let terms = (0..2)
        .map(|_| {
            let u = random_complex_field(m, rng);
            let profile = Profile::Gaussian {
                center: rng.gen_range(-0.5..0.5),
                width: rng.gen_range(0.5..0.8),
            };
            (u, profile)
        })
        .collect();
    SeparableSymbol::new(terms)
}
