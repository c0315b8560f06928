//! Discretized `L^2(M, V_g)`, the representations `rho^h`, and the
//! quantized affine Hamiltonians.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lie_group::{AlgebraElement, Diffeo, GroupElement};
use crate::manifold::{ComplexField, GridManifold, Manifold, ScalarField};
use crate::spectral::cardinal;

/// Integral operator with kernel `K(x_i, x_j)` acting as
/// `(T psi)(x_i) = sum_j K_ij w_j psi_j`.
#[derive(Clone, Debug)]
pub struct L2Operator {
    manifold: Manifold,
    kernel: Array2<Complex64>,
}

impl L2Operator {
    pub fn new(manifold: &Manifold, kernel: Array2<Complex64>) -> Self {
        let n = manifold.num_points();
        assert_eq!(kernel.dim(), (n, n), "kernel must be N x N");
        Self {
            manifold: manifold.clone(),
            kernel,
        }
    }

    pub fn zeros(m: &Manifold) -> Self {
        let n = m.num_points();
        Self::new(m, Array2::zeros((n, n)))
    }

    /// Identity operator, `K = diag(1 / w_i)`.
    pub fn identity(m: &Manifold) -> Self {
        let n = m.num_points();
        let mut k = Array2::zeros((n, n));
        for (i, w) in m.weights().iter().enumerate() {
            k[(i, i)] = Complex64::new(1.0 / w, 0.0);
        }
        Self::new(m, k)
    }

    /// Sample a kernel function at all node pairs.
    pub fn from_kernel_fn(m: &Manifold, k: impl Fn(f64, f64) -> Complex64) -> Self {
        let x = m.nodes();
        let n = x.len();
        Self::new(m, Array2::from_shape_fn((n, n), |(i, j)| k(x[i], x[j])))
    }

    /// From the matrix `A` of the map `psi -> T psi` on node values.
    pub fn from_action_matrix(m: &Manifold, mut a: Array2<Complex64>) -> Self {
        for (j, w) in m.weights().iter().enumerate() {
            a.column_mut(j).mapv_inplace(|v| v / *w);
        }
        Self::new(m, a)
    }

    pub fn action_matrix(&self) -> Array2<Complex64> {
        let mut a = self.kernel.clone();
        for (j, w) in self.manifold.weights().iter().enumerate() {
            a.column_mut(j).mapv_inplace(|v| v * *w);
        }
        a
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn kernel(&self) -> &Array2<Complex64> {
        &self.kernel
    }

    pub fn apply(&self, psi: &ComplexField) -> ComplexField {
        psi.check_manifold(&self.manifold);
        let w = self.manifold.weights();
        let out = self
            .kernel
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(psi.samples()).zip(w).map(|((k, p), w)| k * p * *w).sum())
            .collect();
        ComplexField::new(&self.manifold, out)
    }

    /// `sum_i K_ii w_i`.
    pub fn trace(&self) -> Complex64 {
        operator_trace(self)
    }

    /// Kernel of the Hilbert adjoint, `conj(K(y, x))`.
    pub fn adjoint(&self) -> Self {
        let k = self.kernel.t().mapv(|v| v.conj());
        Self::new(&self.manifold, k)
    }

    /// Composition `self o other`, i.e. kernel `K1 diag(w) K2`.
    pub fn compose(&self, other: &L2Operator) -> Self {
        assert!(self.manifold.same_as(&other.manifold));
        let mut k1w = self.kernel.clone();
        for (j, w) in self.manifold.weights().iter().enumerate() {
            k1w.column_mut(j).mapv_inplace(|v| v * *w);
        }
        Self::new(&self.manifold, k1w.dot(&other.kernel))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(&self.manifold, self.kernel.mapv(|v| v * s))
    }

    pub fn add(&self, other: &L2Operator) -> Self {
        Self::new(&self.manifold, &self.kernel + &other.kernel)
    }

    pub fn sub(&self, other: &L2Operator) -> Self {
        Self::new(&self.manifold, &self.kernel - &other.kernel)
    }

    /// Largest entry-wise kernel difference.
    pub fn max_distance(&self, other: &L2Operator) -> f64 {
        self.kernel
            .iter()
            .zip(other.kernel.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.kernel.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

/// `d(phi^-1)_* V_g / dV_g` at `x`: `c(phi^-1 x) (phi^-1)'(x) / c(x)`.
pub fn radon_nikodym(phi: &Diffeo, x: f64) -> f64 {
    let m = phi.manifold();
    let y = phi.apply_inverse(x);
    m.conformal(y) / (m.conformal(x) * phi.jacobian(y))
}

/// Index of the node at `x` (modulo the circumference), if `x` is one.
pub(crate) fn node_index(m: &Manifold, x: f64) -> Option<usize> {
    let pos = m.reduce(x) / m.spacing();
    let nearest = pos.round();
    ((pos - nearest).abs() < 1e-12).then(|| nearest as usize % m.num_points())
}

/// `rho^h(phi, f)` in lazy form: `psi -> multiplier * scale * psi o shift`.
#[derive(Clone, Debug)]
pub struct PointwiseOperator {
    h: f64,
    source: GroupElement,
    pub multiplier: ComplexField,
    /// `phi^-1`.
    pub shift: Diffeo,
    pub scale: ScalarField,
}

pub fn rho(h: f64, a: &GroupElement) -> Result<PointwiseOperator> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let m = a.manifold();
    let multiplier = a.func.map(|f| Complex64::new(0.0, -2.0 * PI * f / h).exp());
    let phi = &a.diffeo;
    let scale = ScalarField::new(
        m,
        phi.inverse_nodes()
            .iter()
            .zip(m.nodes())
            .zip(m.conformal_samples())
            .map(|((&y, _), &cx)| (m.conformal(y) / (cx * phi.jacobian(y))).sqrt())
            .collect(),
    );
    Ok(PointwiseOperator {
        h,
        source: a.clone(),
        multiplier,
        shift: phi.inverse()?,
        scale,
    })
}

impl PointwiseOperator {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn source(&self) -> &GroupElement {
        &self.source
    }

    pub fn manifold(&self) -> &Manifold {
        self.source.manifold()
    }

    pub fn apply(&self, psi: &ComplexField) -> ComplexField {
        let m = self.manifold();
        let inv = self.source.diffeo.inverse_nodes();
        let shifted = psi.at_many(inv);
        let out = shifted
            .iter()
            .zip(self.multiplier.samples())
            .zip(self.scale.samples())
            .map(|((p, mu), s)| p * mu * *s)
            .collect();
        ComplexField::new(m, out)
    }

    /// `(phi^-1(x), multiplier(x) * scale(x))`, read from the node samples when
    /// `x` is a grid node.
    pub fn local(&self, x: f64) -> (f64, Complex64) {
        let m = self.manifold();
        match node_index(m, x) {
            Some(i) => {
                let turns = ((x - m.nodes()[i]) / m.circumference()).round() * m.circumference();
                let y = self.source.diffeo.inverse_nodes()[i] + turns;
                (y, self.multiplier.samples()[i] * self.scale.samples()[i])
            }
            None => (self.shift.apply(x), self.multiplier_at(x) * self.scale_at(x)),
        }
    }

    /// `e^{-2 pi i f(x) / h}` at any coordinate.
    pub fn multiplier_at(&self, x: f64) -> Complex64 {
        Complex64::new(0.0, -2.0 * PI * self.source.func.at(x) / self.h).exp()
    }

    /// `sqrt(RN(x))` at any coordinate.
    pub fn scale_at(&self, x: f64) -> f64 {
        radon_nikodym(&self.source.diffeo, x).sqrt()
    }

    /// Dense kernel `K_ij = mu_i s_i l_j(phi^-1 x_i) / w_j` with `l_j` the
    /// cardinal interpolation functions.
    pub fn materialize(&self) -> L2Operator {
        let m = self.manifold();
        let n = m.num_points();
        let l = m.circumference();
        let inv = self.source.diffeo.inverse_nodes();
        let x = m.nodes();
        let w = m.weights();
        let k = Array2::from_shape_fn((n, n), |(i, j)| {
            let c = cardinal(n, l, inv[i] - x[j]);
            self.multiplier.samples()[i] * (self.scale.samples()[i] * c / w[j])
        });
        L2Operator::new(m, k)
    }
}

/// Spectral differentiation matrix on the nodes (even N).
pub fn differentiation_matrix(m: &GridManifold) -> Array2<f64> {
    let n = m.num_points();
    let omega = 2.0 * PI / m.circumference();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            let d = i as i64 - j as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            0.5 * omega * sign / (PI * d as f64 / n as f64).tan()
        }
    })
}

/// `Q^h(X,f) psi = f psi - (i h / 2 pi)(X psi' + (1/2) div(X) psi)`.
pub fn quantize_affine(h: f64, z: &AlgebraElement) -> Result<L2Operator> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let m = z.manifold();
    let n = m.num_points();
    let d = differentiation_matrix(m);
    let x = z.field.component().samples();
    let div = z.field.divergence();
    let f = z.func.samples();
    let c = Complex64::new(0.0, -h / (2.0 * PI));
    let a = Array2::from_shape_fn((n, n), |(i, j)| {
        let mut v = c * (x[i] * d[(i, j)]);
        if i == j {
            v += f[i] + c * (0.5 * div.samples()[i]);
        }
        v
    });
    Ok(L2Operator::from_action_matrix(m, a))
}

/// Derived representation `d rho^h(Z) = -(2 pi i / h) Q^h(Z)`.
pub fn derived_representation(h: f64, z: &AlgebraElement) -> Result<L2Operator> {
    Ok(quantize_affine(h, z)?.scale(Complex64::new(0.0, -2.0 * PI / h)))
}

/// `<psi, chi> = sum_i psi_i conj(chi_i) w_i`.
pub fn l2_inner(psi: &ComplexField, chi: &ComplexField) -> Complex64 {
    psi.check_manifold(chi.manifold());
    psi.samples()
        .iter()
        .zip(chi.samples())
        .zip(psi.manifold().weights())
        .map(|((a, b), w)| a * b.conj() * *w)
        .sum()
}

pub fn l2_norm(psi: &ComplexField) -> f64 {
    l2_inner(psi, psi).re.sqrt()
}

pub fn operator_trace(t: &L2Operator) -> Complex64 {
    t.kernel
        .diag()
        .iter()
        .zip(t.manifold.weights())
        .map(|(k, w)| k * *w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::VectorField;
    use approx::assert_abs_diff_eq;

    fn flat() -> Manifold {
        GridManifold::flat(64).unwrap()
    }

    #[test]
    fn radon_nikodym_examples() {
        let m = flat();
        assert_eq!(radon_nikodym(&Diffeo::identity(&m), 1.0), 1.0);
        assert_abs_diff_eq!(radon_nikodym(&Diffeo::rotation(&m, 0.7), 2.0), 1.0, epsilon = 1e-14);
        let phi = Diffeo::from_fn(&m, |x| 0.2 * x.sin()).unwrap();
        for &x in &[0.0, 1.0, 2.5, 5.0] {
            let y = phi.apply_inverse(x);
            assert_abs_diff_eq!(radon_nikodym(&phi, x), 1.0 / (1.0 + 0.2 * y.cos()), epsilon = 1e-12);
        }
    }

    #[test]
    fn rho_examples() {
        let m = flat();
        let psi = ComplexField::from_fn(&m, |x| Complex64::new(x.cos(), (2.0 * x).sin()));
        let h = 0.5;
        let f = ScalarField::from_fn(&m, |x| 0.3 * x.sin());
        let r = rho(h, &GroupElement::from_function(f.clone())).unwrap();
        let out = r.apply(&psi);
        for i in 0..m.num_points() {
            let want = psi.samples()[i] * Complex64::new(0.0, -2.0 * PI * f.samples()[i] / h).exp();
            assert_abs_diff_eq!((out.samples()[i] - want).norm(), 0.0, epsilon = 1e-14);
        }
        let id = rho(h, &GroupElement::identity(&m)).unwrap().apply(&psi);
        assert!(id.max_distance(&psi) < 1e-13);

        let s = 0.9;
        let rot = rho(h, &GroupElement::from_diffeo(Diffeo::rotation(&m, s))).unwrap();
        assert!(rot.scale.samples().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let out = rot.apply(&psi);
        for (i, &x) in m.nodes().iter().enumerate() {
            let want = Complex64::new((x - s).cos(), (2.0 * (x - s)).sin());
            assert_abs_diff_eq!((out.samples()[i] - want).norm(), 0.0, epsilon = 1e-12);
        }
        assert!(rho(0.0, &GroupElement::identity(&m)).is_err());
    }

    #[test]
    fn materialized_rho_agrees_with_lazy_form() {
        let m = GridManifold::cosine(32, 0.3).unwrap();
        let phi = Diffeo::from_fn(&m, |x| 0.4 + 0.1 * x.sin()).unwrap();
        let a = GroupElement::new(phi, ScalarField::from_fn(&m, |x| 0.2 * x.cos()));
        let r = rho(0.7, &a).unwrap();
        let psi = ComplexField::from_fn(&m, |x| Complex64::new((2.0 * x).cos(), x.sin()));
        let lazy = r.apply(&psi);
        let dense = r.materialize().apply(&psi);
        assert!(lazy.max_distance(&dense) < 1e-10);
    }

    #[test]
    fn quantize_examples() {
        let m = flat();
        let h = 0.25;
        let f = ScalarField::from_fn(&m, |x| x.cos());
        let q = quantize_affine(h, &AlgebraElement::new(VectorField::zeros(&m), f.clone())).unwrap();
        let psi = ComplexField::from_fn(&m, |x| Complex64::new(x.sin(), 1.0));
        let out = q.apply(&psi);
        for i in 0..m.num_points() {
            let want = psi.samples()[i] * f.samples()[i];
            assert_abs_diff_eq!((out.samples()[i] - want).norm(), 0.0, epsilon = 1e-12);
        }
        // flat d/dx on e^{inx}: eigenvalue h n / 2 pi
        let z = AlgebraElement::from_fns(&m, |_| 1.0, |_| 0.0);
        let q = quantize_affine(h, &z).unwrap();
        let n = 3.0;
        let e = ComplexField::from_fn(&m, |x| Complex64::new(0.0, n * x).exp());
        let out = q.apply(&e);
        for i in 0..m.num_points() {
            let want = e.samples()[i] * (h * n / (2.0 * PI));
            assert_abs_diff_eq!((out.samples()[i] - want).norm(), 0.0, epsilon = 1e-11);
        }
        // sin(x) d/dx: -(ih/2pi)(sin psi' + cos psi / 2)
        let z = AlgebraElement::from_fns(&m, f64::sin, |_| 0.0);
        let out = quantize_affine(h, &z).unwrap().apply(&psi);
        for (i, &x) in m.nodes().iter().enumerate() {
            let p = Complex64::new(x.sin(), 1.0);
            let dp = Complex64::new(x.cos(), 0.0);
            let want = Complex64::new(0.0, -h / (2.0 * PI)) * (x.sin() * dp + 0.5 * x.cos() * p);
            assert_abs_diff_eq!((out.samples()[i] - want).norm(), 0.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn trace_examples() {
        let m = GridManifold::cosine(32, 0.2).unwrap();
        assert_abs_diff_eq!(L2Operator::identity(&m).trace().re, 32.0, epsilon = 1e-12);
        let u = |x: f64| x.cos() + 2.0;
        let v = |x: f64| x.sin();
        let k = L2Operator::from_kernel_fn(&m, |x, y| Complex64::new(u(x) * v(y), 0.0));
        // int (cos x + 2) sin x (1 + 0.2 cos x) dx = 0
        assert_abs_diff_eq!(k.trace().norm(), 0.0, epsilon = 1e-12);
        let k = L2Operator::from_kernel_fn(&m, |x, y| Complex64::new(u(x) * y.cos(), 0.0));
        // int (cos x + 2) cos x (1 + 0.2 cos x) dx = pi + 0.4 pi
        assert_abs_diff_eq!(k.trace().re, 1.4 * PI, epsilon = 1e-12);
    }

    #[test]
    fn inner_product_is_positive() {
        let m = flat();
        let psi = ComplexField::from_fn(&m, |x| Complex64::new(x.sin(), 0.5));
        assert!(l2_inner(&psi, &psi).re > 0.0);
        assert_eq!(l2_inner(&ComplexField::zeros(&m), &ComplexField::zeros(&m)).norm(), 0.0);
    }
}
