//! The semidirect product of circle diffeomorphisms with smooth functions,
//! and its Lie algebra of (vector field, function) pairs.
//!
//! Products follow `(phi, f)(theta, g) = (phi o theta, g o phi^-1 + f)`;
//! the bracket is `[(X,f),(Y,g)] = (-[X,Y], -X g + Y f)`.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::manifold::{GridManifold, Manifold, ScalarField, VectorField};
use crate::quadrature::gauss_legendre_unit;
use crate::spectral::Spectrum;

const NEWTON_MAX_ITER: usize = 50;
const FLOW_TOL: f64 = 1e-12;
const EXP_QUADRATURE_NODES: usize = 16;

/// Orientation-preserving circle diffeomorphism `phi(x) = x + u(x)` with
/// periodic `u`, or the inverse of one.
///
/// Inversion flips orientation instead of resampling, so `phi^-1` is evaluated
/// by Newton iteration on the stored map and `(phi^-1)^-1` is `phi` again.
#[derive(Clone, Debug)]
pub struct Diffeo {
    map: Arc<DisplacementMap>,
    inverted: bool,
}

#[derive(Debug)]
struct DisplacementMap {
    displacement: ScalarField,
    slope: OnceLock<Spectrum>,
    /// Unwrapped `phi(x_i)`.
    forward_nodes: Vec<f64>,
    /// Unwrapped `phi^-1(x_i)`.
    inverse_nodes: Vec<f64>,
    /// Node samples of `phi^-1 - id`.
    inverse_displacement: OnceLock<ScalarField>,
}

impl DisplacementMap {
    fn slope(&self) -> &Spectrum {
        self.slope.get_or_init(|| self.displacement.spectrum().derivative())
    }

    fn apply(&self, x: f64) -> f64 {
        x + self.displacement.at(x)
    }

    fn jacobian(&self, x: f64) -> f64 {
        1.0 + self.slope().eval_re(x)
    }

    fn newton(&self, y: f64) -> (f64, bool) {
        let mut x = y - self.displacement.at(y);
        for _ in 0..NEWTON_MAX_ITER {
            let r = x + self.displacement.at(x) - y;
            let j = self.jacobian(x);
            if !(j > 0.0) {
                return (x, false);
            }
            let dx = r / j;
            x -= dx;
            if dx.abs() <= 1e-13 * (1.0 + y.abs()) {
                return (x, true);
            }
        }
        (x, false)
    }

    fn solve_inverse(&self, y: f64) -> Result<f64> {
        match self.newton(y) {
            (x, true) => Ok(x),
            (x, false) => Err(Error::NonInvertible(format!(
                "Newton did not converge in {NEWTON_MAX_ITER} iterations at y = {y} (last x = {x})"
            ))),
        }
    }

    fn apply_inverse(&self, y: f64) -> f64 {
        // Construction already solved every node, so a failure here means a
        // fold the refined monotonicity check missed; keep the last iterate.
        self.newton(y).0
    }
}

impl Diffeo {
    fn from_parts(u: ScalarField, inverse_nodes: Vec<f64>) -> Self {
        let m = u.manifold().clone();
        let forward_nodes = m.nodes().iter().zip(u.samples()).map(|(x, v)| x + v).collect();
        Self {
            map: Arc::new(DisplacementMap {
                displacement: u,
                slope: OnceLock::new(),
                forward_nodes,
                inverse_nodes,
                inverse_displacement: OnceLock::new(),
            }),
            inverted: false,
        }
    }

    pub fn identity(m: &Manifold) -> Self {
        Self::from_parts(ScalarField::zeros(m), m.nodes().to_vec())
    }

    /// Rigid rotation `x -> x + s`.
    pub fn rotation(m: &Manifold, s: f64) -> Self {
        Self::from_parts(ScalarField::constant(m, s), m.nodes().iter().map(|x| x - s).collect())
    }

    pub fn from_displacement(u: ScalarField) -> Result<Self> {
        // Whole turns do not change the circle map; keep the mean displacement small.
        let l = u.manifold().circumference();
        let mean = u.samples().iter().sum::<f64>() / u.samples().len() as f64;
        let turns = (mean / l).round();
        let u = if turns != 0.0 { u.map(|v| v - turns * l) } else { u };
        let mut d = Self::from_parts(u, Vec::new());
        let m = d.manifold().clone();
        // monotonicity on a 4x refined grid
        let fine = 4 * m.num_points();
        let h = m.circumference() / fine as f64;
        for k in 0..fine {
            let j = d.map.jacobian(k as f64 * h);
            if !(j > 0.0) {
                return Err(Error::NonInvertible(format!("1 + u' = {j} at x = {}", k as f64 * h)));
            }
        }
        let inverse_nodes = m
            .nodes()
            .iter()
            .map(|&y| d.map.solve_inverse(y))
            .collect::<Result<Vec<_>>>()?;
        Arc::get_mut(&mut d.map)
            .expect("freshly built map is unshared")
            .inverse_nodes = inverse_nodes;
        Ok(d)
    }

    pub fn from_fn(m: &Manifold, u: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_displacement(ScalarField::from_fn(m, u))
    }

    pub fn manifold(&self) -> &Manifold {
        self.map.displacement.manifold()
    }

    /// Node samples of `phi - id`.
    pub fn displacement(&self) -> &ScalarField {
        if !self.inverted {
            return &self.map.displacement;
        }
        self.map.inverse_displacement.get_or_init(|| {
            let m = self.manifold();
            let u = self
                .map
                .inverse_nodes
                .iter()
                .zip(m.nodes())
                .map(|(y, x)| y - x)
                .collect();
            ScalarField::new(m, u)
        })
    }

    /// `phi(x)` without reduction modulo L.
    pub fn apply(&self, x: f64) -> f64 {
        if self.inverted {
            self.map.apply_inverse(x)
        } else {
            self.map.apply(x)
        }
    }

    /// `phi'(x)`.
    pub fn jacobian(&self, x: f64) -> f64 {
        if self.inverted {
            1.0 / self.map.jacobian(self.map.apply_inverse(x))
        } else {
            self.map.jacobian(x)
        }
    }

    /// Unwrapped `phi^-1(x_i)` at every node.
    pub fn inverse_nodes(&self) -> &[f64] {
        if self.inverted {
            &self.map.forward_nodes
        } else {
            &self.map.inverse_nodes
        }
    }

    /// Unwrapped `phi(x_i)` at every node.
    pub fn forward_nodes(&self) -> &[f64] {
        if self.inverted {
            &self.map.inverse_nodes
        } else {
            &self.map.forward_nodes
        }
    }

    /// `phi^-1(y)` (unwrapped).
    pub fn apply_inverse(&self, y: f64) -> f64 {
        if self.inverted {
            self.map.apply(y)
        } else {
            self.map.apply_inverse(y)
        }
    }

    pub fn inverse(&self) -> Result<Diffeo> {
        Ok(Self {
            map: Arc::clone(&self.map),
            inverted: !self.inverted,
        })
    }

    /// `self o other`, resampled at the nodes.
    pub fn compose(&self, other: &Diffeo) -> Result<Diffeo> {
        self.map.displacement.check_manifold(other.manifold());
        let m = self.manifold();
        let u: Vec<f64> = m
            .nodes()
            .iter()
            .zip(other.forward_nodes())
            .map(|(&x, &y)| self.apply(y) - x)
            .collect();
        Diffeo::from_displacement(ScalarField::new(m, u))
    }

    /// Largest node-wise distance between `phi(x_i)` values, modulo L.
    pub fn max_distance(&self, other: &Diffeo) -> f64 {
        let m = self.manifold();
        self.forward_nodes()
            .iter()
            .zip(other.forward_nodes())
            .map(|(a, b)| m.wrap_difference(a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A group element `(phi, f)`.
#[derive(Clone, Debug)]
pub struct GroupElement {
    pub diffeo: Diffeo,
    pub func: ScalarField,
}

impl GroupElement {
    pub fn new(diffeo: Diffeo, func: ScalarField) -> Self {
        func.check_manifold(diffeo.manifold());
        Self { diffeo, func }
    }

    pub fn identity(m: &Manifold) -> Self {
        Self::new(Diffeo::identity(m), ScalarField::zeros(m))
    }

    /// `(id, f)`.
    pub fn from_function(f: ScalarField) -> Self {
        let m = f.manifold().clone();
        Self::new(Diffeo::identity(&m), f)
    }

    /// `(phi, 0)`.
    pub fn from_diffeo(phi: Diffeo) -> Self {
        let m = phi.manifold().clone();
        Self::new(phi, ScalarField::zeros(&m))
    }

    pub fn manifold(&self) -> &Manifold {
        self.diffeo.manifold()
    }

    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        multiply(self, other)
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        inverse(self)
    }

    /// Sup-norm distance over both slots (diffeo slot modulo L).
    pub fn max_distance(&self, other: &GroupElement) -> f64 {
        self.diffeo
            .max_distance(&other.diffeo)
            .max(self.func.max_distance(&other.func))
    }
}

/// `(phi, f)(theta, g) = (phi o theta, g o phi^-1 + f)`.
pub fn multiply(a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    let diffeo = a.diffeo.compose(&b.diffeo)?;
    let m = a.manifold();
    let func: Vec<f64> = a
        .diffeo
        .inverse_nodes()
        .iter()
        .zip(a.func.samples())
        .map(|(&y, &f)| b.func.at(y) + f)
        .collect();
    Ok(GroupElement::new(diffeo, ScalarField::new(m, func)))
}

/// `(phi, f)^-1 = (phi^-1, -f o phi)`.
pub fn inverse(a: &GroupElement) -> Result<GroupElement> {
    let diffeo = a.diffeo.inverse()?;
    let m = a.manifold();
    let func: Vec<f64> = a.diffeo.forward_nodes().iter().map(|&y| -a.func.at(y)).collect();
    Ok(GroupElement::new(diffeo, ScalarField::new(m, func)))
}

/// A Lie algebra element `(X, f)`.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    pub field: VectorField,
    pub func: ScalarField,
}

impl AlgebraElement {
    pub fn new(field: VectorField, func: ScalarField) -> Self {
        func.check_manifold(field.manifold());
        Self { field, func }
    }

    pub fn zero(m: &Manifold) -> Self {
        Self::new(VectorField::zeros(m), ScalarField::zeros(m))
    }

    pub fn from_fns(m: &Manifold, x: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64) -> Self {
        Self::new(VectorField::from_fn(m, x), ScalarField::from_fn(m, f))
    }

    pub fn manifold(&self) -> &Manifold {
        self.field.manifold()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.field.scale(s), self.func.scale(s))
    }

    pub fn add(&self, other: &AlgebraElement) -> Self {
        Self::new(
            VectorField::new(self.field.component().add(other.field.component())),
            self.func.add(&other.func),
        )
    }

    pub fn sub(&self, other: &AlgebraElement) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn max_distance(&self, other: &AlgebraElement) -> f64 {
        self.field
            .component()
            .max_distance(other.field.component())
            .max(self.func.max_distance(&other.func))
    }
}

fn rk4_points(x: &Spectrum, points: &mut [f64], dt: f64, steps: usize) {
    for y in points.iter_mut() {
        let mut q = *y;
        for _ in 0..steps {
            let k1 = x.eval_re(q);
            let k2 = x.eval_re(q + 0.5 * dt * k1);
            let k3 = x.eval_re(q + 0.5 * dt * k2);
            let k4 = x.eval_re(q + dt * k3);
            q += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        *y = q;
    }
}

/// Rough rate bound `sup|X'|` used to seed the substep count.
fn rate_bound(x: &VectorField) -> f64 {
    let d = x.component().derivative();
    d.sup_norm().max(1e-3)
}

fn initial_steps(x: &VectorField, t: f64) -> usize {
    let k = (t.abs() * rate_bound(x) * 8.0).ceil() as usize;
    k.max(8)
}

/// Flow `Fl^X_t` at arbitrary start points, with substeps doubled until the
/// endpoints move by less than the flow tolerance.
pub fn flow_points(x: &VectorField, t: f64, starts: &[f64]) -> Vec<f64> {
    if t == 0.0 || x.component().sup_norm() == 0.0 {
        return starts.to_vec();
    }
    let spec = x.component().spectrum();
    let mut steps = initial_steps(x, t);
    let mut prev = starts.to_vec();
    rk4_points(spec, &mut prev, t / steps as f64, steps);
    loop {
        steps *= 2;
        let mut next = starts.to_vec();
        rk4_points(spec, &mut next, t / steps as f64, steps);
        let change = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // fourth-order Richardson estimate of the error in `next`
        if change / 15.0 < FLOW_TOL || steps > (1 << 20) {
            return next;
        }
        prev = next;
    }
}

/// `Fl^X_t` as a diffeomorphism.
pub fn flow(x: &VectorField, t: f64) -> Result<Diffeo> {
    let m = x.manifold();
    let ends = flow_points(x, t, m.nodes());
    let u = ends.iter().zip(m.nodes()).map(|(e, x)| e - x).collect();
    Diffeo::from_displacement(ScalarField::new(m, u))
}

/// `int_0^1 f(Fl^{-X}_t(x_i)) dt` by composite Gauss-Legendre in `t` with
/// `panels` panels; the flow is advanced node to node with `rk_steps` RK4
/// substeps per unit time.
fn pullback_average(neg_x: &Spectrum, f: &ScalarField, m: &GridManifold, panels: usize, rk_steps: usize) -> Vec<f64> {
    let (gn, gw) = gauss_legendre_unit(EXP_QUADRATURE_NODES);
    let mut times = Vec::with_capacity(panels * gn.len());
    let mut weights = Vec::with_capacity(panels * gn.len());
    let width = 1.0 / panels as f64;
    for p in 0..panels {
        for (t, w) in gn.iter().zip(&gw) {
            times.push((p as f64 + t) * width);
            weights.push(w * width);
        }
    }
    let fs = f.spectrum();
    let mut pos = m.nodes().to_vec();
    let mut acc = vec![0.0; pos.len()];
    let mut now = 0.0;
    for (t, w) in times.iter().zip(&weights) {
        let gap = t - now;
        let steps = ((gap * rk_steps as f64).ceil() as usize).max(1);
        rk4_points(neg_x, &mut pos, gap / steps as f64, steps);
        now = *t;
        for (a, y) in acc.iter_mut().zip(&pos) {
            *a += w * fs.eval_re(*y);
        }
    }
    acc
}

/// `exp(X, f) = (Fl^X_1, int_0^1 f o Fl^{-X}_t dt)`.
pub fn exp_gm(z: &AlgebraElement) -> Result<GroupElement> {
    let m = z.manifold().clone();
    let phi = flow(&z.field, 1.0)?;
    if z.field.component().sup_norm() == 0.0 {
        return Ok(GroupElement::new(phi, z.func.clone()));
    }
    let neg = z.field.scale(-1.0);
    let neg_spec = neg.component().spectrum().clone();
    let mut rk = initial_steps(&z.field, 1.0) * 4;
    let mut panels = 1;
    let mut prev = pullback_average(&neg_spec, &z.func, &m, panels, rk);
    loop {
        panels *= 2;
        rk *= 2;
        let next = pullback_average(&neg_spec, &z.func, &m, panels, rk);
        let change = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev = next;
        if change / 15.0 < FLOW_TOL || panels >= 64 {
            break;
        }
    }
    Ok(GroupElement::new(phi, ScalarField::new(&m, prev)))
}

/// `[X, Y] = X Y' - Y X'` as a vector field.
pub fn vector_commutator(x: &VectorField, y: &VectorField) -> VectorField {
    let xs = x.component();
    let ys = y.component();
    let dx = xs.derivative();
    let dy = ys.derivative();
    VectorField::new(xs.mul(&dy).sub(&ys.mul(&dx)))
}

/// `[(X,f),(Y,g)] = (-[X,Y], -X g + Y f)`.
pub fn bracket(z1: &AlgebraElement, z2: &AlgebraElement) -> AlgebraElement {
    let comm = vector_commutator(&z1.field, &z2.field);
    let xg = z1.field.component().mul(&z2.func.derivative());
    let yf = z2.field.component().mul(&z1.func.derivative());
    AlgebraElement::new(comm.scale(-1.0), yf.sub(&xg))
}

/// `Ad_{(phi,f)}(X,g) = (Ad_phi X, g o phi^-1 + (Ad_phi X) f')`, where
/// `Ad_phi X(x) = phi'(phi^-1 x) X(phi^-1 x)`.
pub fn adjoint(a: &GroupElement, z: &AlgebraElement) -> AlgebraElement {
    let m = a.manifold();
    let df = a.func.derivative();
    let mut ad_x = Vec::with_capacity(m.num_points());
    let mut second = Vec::with_capacity(m.num_points());
    for (i, &y) in a.diffeo.inverse_nodes().iter().enumerate() {
        let v = a.diffeo.jacobian(y) * z.field.at(y);
        ad_x.push(v);
        second.push(z.func.at(y) + v * df.samples()[i]);
    }
    AlgebraElement::new(VectorField::new(ScalarField::new(m, ad_x)), ScalarField::new(m, second))
}

/// [`adjoint`] evaluated at a single point `x`, returned as `(vector, function)`.
pub fn adjoint_at(a: &GroupElement, z: &AlgebraElement, x: f64) -> (f64, f64) {
    let y = a.diffeo.apply_inverse(x);
    let v = a.diffeo.jacobian(y) * z.field.at(y);
    let df = a.func.spectrum().derivative().eval_re(x);
    (v, z.func.at(y) + v * df)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn flat() -> Manifold {
        GridManifold::flat(64).unwrap()
    }

    #[test]
    fn function_slot_is_abelian() {
        let m = flat();
        let a = GroupElement::from_function(ScalarField::from_fn(&m, f64::sin));
        let b = GroupElement::from_function(ScalarField::from_fn(&m, f64::cos));
        let ab = multiply(&a, &b).unwrap();
        for (i, &x) in m.nodes().iter().enumerate() {
            assert_abs_diff_eq!(ab.func.samples()[i], x.sin() + x.cos(), epsilon = 1e-14);
        }
        assert!(ab.diffeo.displacement().sup_norm() < 1e-15);
    }

    #[test]
    fn rotations_compose() {
        let m = flat();
        let (s, t) = (0.4, 1.1);
        let a = GroupElement::new(Diffeo::rotation(&m, s), ScalarField::from_fn(&m, |x| (2.0 * x).sin()));
        let b = GroupElement::new(Diffeo::rotation(&m, t), ScalarField::from_fn(&m, f64::cos));
        let ab = multiply(&a, &b).unwrap();
        for (i, &x) in m.nodes().iter().enumerate() {
            assert_abs_diff_eq!(ab.diffeo.displacement().samples()[i], s + t, epsilon = 1e-13);
            let want = (x - s).cos() + (2.0 * x).sin();
            assert_abs_diff_eq!(ab.func.samples()[i], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_examples() {
        let m = flat();
        let f = ScalarField::from_fn(&m, |x| (3.0 * x).cos());
        let inv = inverse(&GroupElement::from_function(f.clone())).unwrap();
        assert!(inv.func.max_distance(&f.scale(-1.0)) < 1e-13);

        let r = inverse(&GroupElement::from_diffeo(Diffeo::rotation(&m, 0.7))).unwrap();
        assert!(r.diffeo.max_distance(&Diffeo::rotation(&m, -0.7)) < 1e-13);

        let phi = Diffeo::from_fn(&m, |x| 0.2 * x.sin()).unwrap();
        let a = GroupElement::new(phi, f);
        let ai = inverse(&a).unwrap();
        for (i, &x) in m.nodes().iter().enumerate() {
            let want = -(3.0 * (x + 0.2 * x.sin())).cos();
            assert_abs_diff_eq!(ai.func.samples()[i], want, epsilon = 1e-10);
        }
        let e = multiply(&a, &ai).unwrap();
        assert!(e.max_distance(&GroupElement::identity(&m)) < 1e-9);
    }

    #[test]
    fn folded_map_is_rejected() {
        let m = flat();
        let err = Diffeo::from_fn(&m, |x| 1.5 * x.sin()).unwrap_err();
        assert!(matches!(err, Error::NonInvertible(_)));
    }

    #[test]
    fn flow_examples() {
        let m = flat();
        let zero = flow(&VectorField::zeros(&m), 2.0).unwrap();
        assert!(zero.displacement().sup_norm() == 0.0);
        let rot = flow(&VectorField::from_fn(&m, |_| 0.8), 1.0).unwrap();
        assert!(rot.max_distance(&Diffeo::rotation(&m, 0.8)) < 1e-13);

        let x = VectorField::from_fn(&m, f64::sin);
        for &t in &[0.3, 1.0, -0.7] {
            let end = flow_points(&x, t, &[PI / 2.0])[0];
            let want = 2.0 * (t.exp() * (PI / 4.0).tan()).atan();
            assert_abs_diff_eq!(end, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn exp_examples() {
        let m = flat();
        let f = ScalarField::from_fn(&m, |x| x.sin() + 0.5 * (2.0 * x).cos());
        let e = exp_gm(&AlgebraElement::new(VectorField::zeros(&m), f.clone())).unwrap();
        assert!(e.func.max_distance(&f) < 1e-15);
        assert!(e.diffeo.displacement().sup_norm() == 0.0);

        let c = 0.9;
        let z = AlgebraElement::new(VectorField::from_fn(&m, |_| c), f);
        let e = exp_gm(&z).unwrap();
        // (1/c) int_{x-c}^{x} (sin s + 0.5 cos 2s) ds in closed form
        let anti = |s: f64| -s.cos() + 0.25 * (2.0 * s).sin();
        for (i, &x) in m.nodes().iter().enumerate() {
            let want = (anti(x) - anti(x - c)) / c;
            assert_abs_diff_eq!(e.func.samples()[i], want, epsilon = 1e-9);
        }
        assert!(e.diffeo.max_distance(&Diffeo::rotation(&m, c)) < 1e-12);
    }

    #[test]
    fn bracket_examples() {
        let m = flat();
        let z = AlgebraElement::from_fns(&m, f64::sin, f64::cos);
        let zz = bracket(&z, &z);
        assert!(zz.max_distance(&AlgebraElement::zero(&m)) < 1e-13);

        let x = AlgebraElement::from_fns(&m, |_| 1.0, |_| 0.0);
        let y = AlgebraElement::from_fns(&m, f64::sin, |_| 0.0);
        let b = bracket(&x, &y);
        for (i, &q) in m.nodes().iter().enumerate() {
            assert_abs_diff_eq!(b.field.component().samples()[i], -q.cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(b.func.samples()[i], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn adjoint_examples() {
        let m = flat();
        let z = AlgebraElement::from_fns(&m, |x| 0.5 * x.sin(), |x| (2.0 * x).cos());
        let id = adjoint(&GroupElement::identity(&m), &z);
        assert!(id.max_distance(&z) < 1e-14);

        let f = ScalarField::from_fn(&m, |x| (3.0 * x).sin());
        let ad = adjoint(&GroupElement::from_function(f), &z);
        for (i, &x) in m.nodes().iter().enumerate() {
            let want = (2.0 * x).cos() + 0.5 * x.sin() * 3.0 * (3.0 * x).cos();
            assert_abs_diff_eq!(ad.func.samples()[i], want, epsilon = 1e-12);
        }
    }
}
