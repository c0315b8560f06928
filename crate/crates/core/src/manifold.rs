//! Periodic 1-D Riemannian manifolds `[0, L)` with metric `c(x)^2 dx^2`.
//!
//! Fields are stored as node samples and evaluated off-grid through their
//! trigonometric interpolant. Geodesics use the cumulative arclength
//! `S(x) = int_0^x c`, which turns `exp` and `log` into scalar root finds.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{self, FftPair, Spectrum};

/// Shared handle to a manifold; fields and group elements hold one.
pub type Manifold = Arc<GridManifold>;

pub struct GridManifold {
    n: usize,
    length: f64,
    conformal: Vec<f64>,
    conformal_spec: Spectrum,
    conformal_deriv: Spectrum,
    /// Periodic part of the arclength `S(x) - mean_c * x`.
    arclength_periodic: Spectrum,
    mean_c: f64,
    c_min: f64,
    c_max: f64,
    weights: Vec<f64>,
    nodes: Vec<f64>,
    fft: FftPair,
}

impl fmt::Debug for GridManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridManifold")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("mean_c", &self.mean_c)
            .finish()
    }
}

impl GridManifold {
    /// Circle of coordinate length `length` sampled at `n` nodes, with conformal
    /// factor `c` sampled at the nodes. `n` must be even and at least 4.
    pub fn new(n: usize, length: f64, c: impl Fn(f64) -> f64) -> Result<Manifold> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "grid size must be even and >= 4, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "circumference must be positive, got {length}"
            )));
        }
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * length / n as f64).collect();
        let conformal: Vec<f64> = nodes.iter().map(|&x| c(x)).collect();
        if let Some(bad) = conformal.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "conformal factor must be positive at every node, found {bad}"
            )));
        }
        let fft = FftPair::new(n);
        let cs: Vec<Complex64> = conformal.iter().map(|&v| v.into()).collect();
        let conformal_spec = Spectrum::from_samples(&fft, &cs, length);
        let conformal_deriv = conformal_spec.derivative();
        let arclength_periodic = conformal_spec.periodic_antiderivative();
        let mean_c = conformal_spec.mean().re;
        let dx = length / n as f64;
        let weights = conformal.iter().map(|&v| v * dx).collect();
        let c_min = conformal.iter().cloned().fold(f64::INFINITY, f64::min);
        let c_max = conformal.iter().cloned().fold(0.0, f64::max);
        Ok(Arc::new(Self {
            n,
            length,
            conformal,
            conformal_spec,
            conformal_deriv,
            arclength_periodic,
            mean_c,
            c_min,
            c_max,
            weights,
            nodes,
            fft,
        }))
    }

    /// Flat circle of length 2*pi.
    pub fn flat(n: usize) -> Result<Manifold> {
        Self::new(n, 2.0 * PI, |_| 1.0)
    }

    /// Circle of length 2*pi with `c(x) = 1 + amplitude * cos(x)`.
    pub fn cosine(n: usize, amplitude: f64) -> Result<Manifold> {
        Self::cosine_with_length(n, 2.0 * PI, amplitude)
    }

    pub fn cosine_with_length(n: usize, length: f64, amplitude: f64) -> Result<Manifold> {
        Self::new(n, length, move |x| 1.0 + amplitude * (2.0 * PI * x / length).cos())
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    pub fn circumference(&self) -> f64 {
        self.length
    }

    pub fn dimension(&self) -> usize {
        1
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights `w_i = c(x_i) L / N`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn conformal_samples(&self) -> &[f64] {
        &self.conformal
    }

    pub fn conformal(&self, x: f64) -> f64 {
        self.conformal_spec.eval_re(x)
    }

    pub fn conformal_derivative(&self, x: f64) -> f64 {
        self.conformal_deriv.eval_re(x)
    }

    pub fn conformal_bounds(&self) -> (f64, f64) {
        (self.c_min, self.c_max)
    }

    /// Total Riemannian length `int_0^L c`.
    pub fn total_length(&self) -> f64 {
        self.mean_c * self.length
    }

    /// Half the total length: beyond it the logarithm is undefined.
    pub fn injectivity_radius(&self) -> f64 {
        0.5 * self.total_length()
    }

    pub(crate) fn fft(&self) -> &FftPair {
        &self.fft
    }

    /// Reduce a coordinate into `[0, L)`.
    pub fn reduce(&self, x: f64) -> f64 {
        let r = x.rem_euclid(self.length);
        if r >= self.length {
            0.0
        } else {
            r
        }
    }

    /// Wrap a coordinate difference into `(-L/2, L/2]`.
    pub fn wrap_difference(&self, d: f64) -> f64 {
        let r = d.rem_euclid(self.length);
        if r > 0.5 * self.length {
            r - self.length
        } else {
            r
        }
    }

    /// Unwrapped cumulative arclength `S(x) = int_0^x c`, valid for any real `x`.
    pub fn arclength(&self, x: f64) -> f64 {
        self.mean_c * x + self.arclength_periodic.eval_re(x)
    }

    /// Two manifolds are interchangeable when they share size, length and metric.
    pub fn same_as(&self, other: &GridManifold) -> bool {
        std::ptr::eq(self, other)
            || (self.n == other.n && self.length == other.length && self.conformal == other.conformal)
    }

    /// Point at signed Riemannian arclength `c(x) v` from `x`, reduced into `[0, L)`.
    pub fn riem_exp(&self, x: f64, v: f64) -> f64 {
        self.reduce(self.exp_unwrapped(x, v))
    }

    /// Like [`GridManifold::riem_exp`] but without reduction modulo `L`.
    pub fn exp_unwrapped(&self, x: f64, v: f64) -> f64 {
        let s = self.conformal(x) * v;
        if s == 0.0 {
            return x;
        }
        self.solve_arclength(x, self.arclength(x) + s, s)
    }

    /// Solve `S(y) = target` given that `y - x` has the sign of `s = target - S(x)`.
    fn solve_arclength(&self, x: f64, target: f64, s: f64) -> f64 {
        // S' = c lies in [c_min, c_max] up to interpolation overshoot.
        let (lo_c, hi_c) = (0.5 * self.c_min, 2.0 * self.c_max);
        let (mut lo, mut hi) = if s > 0.0 {
            (x + s / hi_c, x + s / lo_c)
        } else {
            (x + s / lo_c, x + s / hi_c)
        };
        let mut y = x + s / self.mean_c;
        if !(y > lo && y < hi) {
            y = 0.5 * (lo + hi);
        }
        for _ in 0..100 {
            let r = self.arclength(y) - target;
            if r > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let step = r / self.conformal(y);
            let mut next = y - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - y).abs() <= 1e-15 * (1.0 + y.abs());
            y = next;
            if done || hi - lo <= 1e-15 * (1.0 + y.abs()) {
                break;
            }
        }
        y
    }

    /// Tangent component `v` at `x` with `riem_exp(x, v) = y` and `|c(x) v|` minimal.
    pub fn riem_log(&self, x: f64, y: f64) -> Result<f64> {
        let offset = (y - x).rem_euclid(self.length);
        let d = self.arclength(x + offset) - self.arclength(x);
        let total = self.total_length();
        let half = 0.5 * total;
        let dist = d.min(total - d);
        if half - dist <= 1e-12 * total {
            return Err(Error::CutLocus { x, y });
        }
        let signed = if d < half { d } else { d - total };
        Ok(signed / self.conformal(x))
    }

    /// Riemannian distance on the circle.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let offset = (y - x).rem_euclid(self.length);
        let d = self.arclength(x + offset) - self.arclength(x);
        d.min(self.total_length() - d)
    }
}

/// Scalar types a [`Field`] can hold.
pub trait Sample: Copy + Send + Sync + fmt::Debug + 'static {
    fn to_complex(self) -> Complex64;
    fn from_complex(c: Complex64) -> Self;
    fn zero() -> Self;
}

impl Sample for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(c: Complex64) -> Self {
        c.re
    }
    fn zero() -> Self {
        0.0
    }
}

impl Sample for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(c: Complex64) -> Self {
        c
    }
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

/// Node samples of a periodic function, with a lazily computed spectrum.
#[derive(Clone)]
pub struct Field<T: Sample> {
    manifold: Manifold,
    samples: Vec<T>,
    spectrum: OnceLock<Spectrum>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Sample> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("samples", &self.samples).finish()
    }
}

impl<T: Sample> Field<T> {
    pub fn new(manifold: &Manifold, samples: Vec<T>) -> Self {
        assert_eq!(samples.len(), manifold.num_points(), "sample count must match the grid");
        Self {
            manifold: Arc::clone(manifold),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_fn(manifold: &Manifold, f: impl Fn(f64) -> T) -> Self {
        let samples = manifold.nodes().iter().map(|&x| f(x)).collect();
        Self::new(manifold, samples)
    }

    pub fn zeros(manifold: &Manifold) -> Self {
        Self::new(manifold, vec![T::zero(); manifold.num_points()])
    }

    pub fn constant(manifold: &Manifold, value: T) -> Self {
        Self::new(manifold, vec![value; manifold.num_points()])
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let cs: Vec<Complex64> = self.samples.iter().map(|s| s.to_complex()).collect();
            Spectrum::from_samples(self.manifold.fft(), &cs, self.manifold.circumference())
        })
    }

    /// Value of the trigonometric interpolant at an arbitrary coordinate.
    pub fn at(&self, x: f64) -> T {
        T::from_complex(self.spectrum().eval(x))
    }

    pub fn at_many(&self, xs: &[f64]) -> Vec<T> {
        let s = self.spectrum();
        xs.iter().map(|&x| T::from_complex(s.eval(x))).collect()
    }

    /// Spectral derivative, sampled at the nodes.
    pub fn derivative(&self) -> Self {
        let cs: Vec<Complex64> = self.samples.iter().map(|s| s.to_complex()).collect();
        let d = spectral::derivative_samples(self.manifold.fft(), &cs, self.manifold.circumference());
        Self::new(&self.manifold, d.into_iter().map(T::from_complex).collect())
    }

    /// Riemannian integral `sum_i f(x_i) w_i`.
    pub fn integrate(&self) -> T {
        let s: Complex64 = self
            .samples
            .iter()
            .zip(self.manifold.weights())
            .map(|(f, w)| f.to_complex() * *w)
            .sum();
        T::from_complex(s)
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field::new(&self.manifold, self.samples.iter().map(|&s| f(s)).collect())
    }

    pub fn zip_with<U: Sample, V: Sample>(&self, other: &Field<U>, f: impl Fn(T, U) -> V) -> Field<V> {
        self.check_manifold(other.manifold());
        Field::new(
            &self.manifold,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub(crate) fn check_manifold(&self, other: &GridManifold) {
        assert!(self.manifold.same_as(other), "fields live on different manifolds");
    }

    /// Largest node-wise distance to another field.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a.to_complex() - b.to_complex()).norm())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|a| a.to_complex().norm()).fold(0.0, f64::max)
    }
}

impl ScalarField {
    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|a| a * s)
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|a| Complex64::new(a, 0.0))
    }
}

impl ComplexField {
    pub fn add(&self, other: &ComplexField) -> ComplexField {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> ComplexField {
        self.map(|a| a * s)
    }
}

/// Coefficient of `d/dq` at each node.
#[derive(Clone, Debug)]
pub struct VectorField(ScalarField);

impl VectorField {
    pub fn new(component: ScalarField) -> Self {
        Self(component)
    }

    pub fn from_fn(manifold: &Manifold, f: impl Fn(f64) -> f64) -> Self {
        Self(ScalarField::from_fn(manifold, f))
    }

    pub fn zeros(manifold: &Manifold) -> Self {
        Self(ScalarField::zeros(manifold))
    }

    pub fn component(&self) -> &ScalarField {
        &self.0
    }

    pub fn manifold(&self) -> &Manifold {
        self.0.manifold()
    }

    pub fn at(&self, x: f64) -> f64 {
        self.0.at(x)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// Divergence with respect to the Riemannian density: `X' + X c'/c`.
    pub fn divergence(&self) -> ScalarField {
        let m = self.manifold().clone();
        let d = self.0.derivative();
        let samples = (0..m.num_points())
            .map(|i| {
                let x = m.nodes()[i];
                d.samples()[i] + self.0.samples()[i] * m.conformal_derivative(x) / m.conformal_samples()[i]
            })
            .collect();
        ScalarField::new(&m, samples)
    }
}

/// A tangent vector `v d/dq` at base point `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentPoint {
    pub x: f64,
    pub v: f64,
}

impl TangentPoint {
    pub fn new(m: &GridManifold, x: f64, v: f64) -> Self {
        Self { x: m.reduce(x), v }
    }
}

/// A covector `p dq` at base point `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CotangentPoint {
    pub x: f64,
    pub p: f64,
}

impl CotangentPoint {
    pub fn new(m: &GridManifold, x: f64, p: f64) -> Self {
        Self { x: m.reduce(x), p }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_exp_is_translation() {
        let m = GridManifold::flat(64).unwrap();
        assert_eq!(m.riem_exp(1.0, 0.0), 1.0);
        assert_abs_diff_eq!(m.riem_exp(1.0, 0.5), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m.riem_exp(6.0, 0.5), 6.5 - 2.0 * PI, epsilon = 1e-13);
    }

    #[test]
    fn curved_exp_matches_arclength_root() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let y = m.riem_exp(0.0, 1.0);
        // independent oracle: bisection on the closed-form arclength y + 0.3 sin y
        let (mut lo, mut hi) = (0.0_f64, 2.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + 0.3 * mid.sin() < 1.3 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(y, 0.5 * (lo + hi), epsilon = 1e-12);
    }

    #[test]
    fn log_examples() {
        let m = GridManifold::flat(64).unwrap();
        assert_abs_diff_eq!(m.riem_log(0.0, 0.4).unwrap(), 0.4, epsilon = 1e-14);
        assert_eq!(m.riem_log(2.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(m.riem_log(0.2, 6.0).unwrap(), 6.0 - 2.0 * PI - 0.2, epsilon = 1e-13);
        assert!(matches!(m.riem_log(0.0, PI), Err(Error::CutLocus { .. })));
        let c = GridManifold::cosine(64, 0.3).unwrap();
        let y = c.riem_exp(0.0, 0.7);
        assert_abs_diff_eq!(c.riem_log(0.0, y).unwrap(), 0.7, epsilon = 1e-10);
    }

    #[test]
    fn exp_log_round_trip_on_grid_pairs() {
        let m = GridManifold::cosine(32, 0.3).unwrap();
        for &x in m.nodes() {
            for &y in m.nodes() {
                if m.distance(x, y) < 0.999 * m.injectivity_radius() {
                    let v = m.riem_log(x, y).unwrap();
                    let back = m.riem_exp(x, v);
                    assert!(m.wrap_difference(back - y).abs() < 1e-10, "{x} {y}");
                }
            }
        }
    }

    #[test]
    fn integration_examples() {
        let m = GridManifold::flat(64).unwrap();
        let one = ScalarField::constant(&m, 1.0);
        assert_abs_diff_eq!(one.integrate(), 2.0 * PI, epsilon = 1e-12);
        let cos = ScalarField::from_fn(&m, f64::cos);
        assert_abs_diff_eq!(cos.integrate(), 0.0, epsilon = 1e-12);
        let cos2 = ScalarField::from_fn(&m, |x| x.cos().powi(2));
        assert_abs_diff_eq!(cos2.integrate(), PI, epsilon = 1e-12);
    }

    #[test]
    fn curved_weights_sum_to_total_length() {
        let m = GridManifold::cosine(64, 0.4).unwrap();
        let s: f64 = m.weights().iter().sum();
        assert_abs_diff_eq!(s, m.total_length(), epsilon = 1e-12);
        assert_abs_diff_eq!(s, 2.0 * PI, epsilon = 1e-12);
        // int sin(2x) * c over the circle with c = 1 + 0.4 cos x is zero;
        // int cos(x) * c = 0.4 * pi.
        let f = ScalarField::from_fn(&m, f64::cos);
        assert_abs_diff_eq!(f.integrate(), 0.4 * PI, epsilon = 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let m = GridManifold::flat(64).unwrap();
        let s = ScalarField::from_fn(&m, f64::sin);
        let d = s.derivative();
        for (i, &x) in m.nodes().iter().enumerate() {
            assert_abs_diff_eq!(d.samples()[i], x.cos(), epsilon = 1e-10);
        }
        let c = ScalarField::constant(&m, 3.0);
        assert_abs_diff_eq!(c.at(1.2345), 3.0, epsilon = 1e-14);
        // central-difference oracle for e^{3ix} at 0
        let e = ComplexField::from_fn(&m, |x| Complex64::new(0.0, 3.0 * x).exp());
        let step = 1e-5;
        let fd = (e.at(step) - e.at(-step)) / (2.0 * step);
        let spectral = e.derivative().samples()[0];
        assert_abs_diff_eq!((spectral - Complex64::new(0.0, 3.0)).norm(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!((fd - spectral).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn divergence_on_curved_metric() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let x = VectorField::from_fn(&m, f64::sin);
        let div = x.divergence();
        for (i, &q) in m.nodes().iter().enumerate() {
            let c = 1.0 + 0.3 * q.cos();
            let want = q.cos() + q.sin() * (-0.3 * q.sin()) / c;
            assert_abs_diff_eq!(div.samples()[i], want, epsilon = 1e-12);
        }
    }
}
