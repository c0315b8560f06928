//! Quantization and dequantization across the tangent groupoid, with the
//! `h -> 0` experiments built on them: traces, characters, the left/right
//! centralizers of `e^{-2 pi i H_Z}` and covariance under the group.
//!
//! A family is kept as continuous kernels. [`Kernel::eval`] evaluates the
//! kernel anywhere, which the chart-side quantities (diagonal traces,
//! dequantization) need once `h` drops below the grid resolution;
//! [`Kernel::materialize`] gives its image in the grid algebra, where
//! convolution is matrix multiplication.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::groupoid::{
    check_support_radius, fiber_fourier_inv, FiberFunction, FiberGrid, FiberSymbol, PhaseShifted, PhaseSymbol,
};
use crate::lie_group::{exp_gm, AlgebraElement, GroupElement};
use crate::manifold::Manifold;
use crate::quantization::{node_index, rho, L2Operator, PointwiseOperator};
use crate::spectral::cardinal;

/// Integral kernel `K(x, y)` of an operator on `L^2(M, V_g)`.
pub trait Kernel: Send + Sync {
    fn manifold(&self) -> &Manifold;

    fn eval(&self, x: f64, y: f64) -> Complex64;

    /// Image in the grid algebra; defaults to sampling at node pairs.
    fn materialize(&self) -> L2Operator {
        L2Operator::from_kernel_fn(self.manifold(), |x, y| self.eval(x, y))
    }

    /// `int K(x, x) dV_g(x)` by the node quadrature.
    fn diagonal_trace(&self) -> Complex64 {
        let m = self.manifold();
        m.nodes()
            .iter()
            .zip(m.weights())
            .map(|(&x, &w)| self.eval(x, x) * w)
            .sum()
    }
}

fn cardinal_weights(m: &Manifold, x: f64) -> Vec<f64> {
    let n = m.num_points();
    let l = m.circumference();
    m.nodes().iter().map(|xi| cardinal(n, l, x - xi)).collect()
}

/// Grid kernels evaluate off-grid through their two-dimensional
/// trigonometric interpolant.
impl Kernel for L2Operator {
    fn manifold(&self) -> &Manifold {
        L2Operator::manifold(self)
    }

    fn eval(&self, x: f64, y: f64) -> Complex64 {
        let m = L2Operator::manifold(self);
        let k = self.kernel();
        let row: Vec<Complex64> = match node_index(m, x) {
            Some(i) => k.row(i).to_vec(),
            None => {
                let cx = cardinal_weights(m, x);
                (0..m.num_points())
                    .map(|j| k.column(j).iter().zip(&cx).map(|(a, c)| a * *c).sum())
                    .collect()
            }
        };
        match node_index(m, y) {
            Some(j) => row[j],
            None => row.iter().zip(cardinal_weights(m, y)).map(|(a, c)| a * c).sum(),
        }
    }

    fn materialize(&self) -> L2Operator {
        self.clone()
    }

    fn diagonal_trace(&self) -> Complex64 {
        self.trace()
    }
}

/// `K_h(x, y) = h^-1 b(x, -log_x(y) / h)`, zero where the logarithm fails.
#[derive(Clone)]
pub struct CanonicalKernel {
    manifold: Manifold,
    h: f64,
    symbol: Arc<dyn FiberFunction>,
}

impl CanonicalKernel {
    pub fn new(m: &Manifold, h: f64, symbol: Arc<dyn FiberFunction>) -> Self {
        Self {
            manifold: m.clone(),
            h,
            symbol,
        }
    }
}

impl Kernel for CanonicalKernel {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn eval(&self, x: f64, y: f64) -> Complex64 {
        match self.manifold.riem_log(x, y) {
            Ok(l) => self.symbol.eval(x, -l / self.h) / self.h,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }
}

/// Bounded first-order perturbation `r(x, y)` of a kernel family.
pub type Perturbation = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `K(x, y) (1 + h r(x, y))`.
#[derive(Clone)]
pub struct PerturbedKernel {
    inner: Arc<dyn Kernel>,
    h: f64,
    r: Perturbation,
}

impl PerturbedKernel {
    pub fn new(inner: Arc<dyn Kernel>, h: f64, r: Perturbation) -> Self {
        Self { inner, h, r }
    }
}

impl Kernel for PerturbedKernel {
    fn manifold(&self) -> &Manifold {
        self.inner.manifold()
    }

    fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.inner.eval(x, y) * (1.0 + self.h * (self.r)(x, y))
    }
}

/// Kernel of `rho T`: `mu(x) s(x) K(phi^-1 x, y)`.
#[derive(Clone)]
pub struct LeftComposed {
    op: PointwiseOperator,
    inner: Arc<dyn Kernel>,
}

impl LeftComposed {
    pub fn new(op: PointwiseOperator, inner: Arc<dyn Kernel>) -> Self {
        Self { op, inner }
    }
}

impl Kernel for LeftComposed {
    fn manifold(&self) -> &Manifold {
        self.inner.manifold()
    }

    fn eval(&self, x: f64, y: f64) -> Complex64 {
        let (src, factor) = self.op.local(x);
        factor * self.inner.eval(src, y)
    }

    /// `A K` with `A` the action matrix of the materialized representation.
    fn materialize(&self) -> L2Operator {
        let a = self.op.materialize();
        a.compose(&self.inner.materialize())
    }
}

/// Kernel of `T rho`: `K(x, phi(y)) mu(phi y) / s(phi y)`.
#[derive(Clone)]
pub struct RightComposed {
    op: PointwiseOperator,
    inner: Arc<dyn Kernel>,
}

impl RightComposed {
    pub fn new(op: PointwiseOperator, inner: Arc<dyn Kernel>) -> Self {
        Self { op, inner }
    }
}

impl Kernel for RightComposed {
    fn manifold(&self) -> &Manifold {
        self.inner.manifold()
    }

    fn eval(&self, x: f64, y: f64) -> Complex64 {
        let z = self.op.source().diffeo.apply(y);
        self.inner.eval(x, z) * self.op.multiplier_at(z) / self.op.scale_at(z)
    }

    /// `K W A W^-1`.
    fn materialize(&self) -> L2Operator {
        self.inner.materialize().compose(&self.op.materialize())
    }
}

/// Kernel of `rho T rho*`:
/// `e^{-2 pi i (f(x) - f(y)) / h} sqrt(RN(x) RN(y)) K(phi^-1 x, phi^-1 y)`.
#[derive(Clone)]
pub struct ConjugatedKernel {
    op: PointwiseOperator,
    adjoint: PointwiseOperator,
    inner: Arc<dyn Kernel>,
}

impl ConjugatedKernel {
    pub fn new(g: &GroupElement, h: f64, inner: Arc<dyn Kernel>) -> Result<Self> {
        Ok(Self {
            op: rho(h, g)?,
            adjoint: rho(h, &g.inverse()?)?,
            inner,
        })
    }
}

impl Kernel for ConjugatedKernel {
    fn manifold(&self) -> &Manifold {
        self.inner.manifold()
    }

    fn eval(&self, x: f64, y: f64) -> Complex64 {
        let (sx, fx) = self.op.local(x);
        let (sy, fy) = self.op.local(y);
        fx * fy.conj() * self.inner.eval(sx, sy)
    }

    /// `A K W B W^-1` with `B` the materialized `rho(a^-1) = rho(a)*`.
    fn materialize(&self) -> L2Operator {
        self.op
            .materialize()
            .compose(&self.inner.materialize())
            .compose(&self.adjoint.materialize())
    }
}

/// How a family's kernels relate to its symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantizationTag {
    /// `h K_h = b o beta^-1` exactly.
    Canonical,
    /// Canonical kernels times `1 + h r(x, y)`.
    Perturbed,
}

/// A symbol on the tangent bundle with its kernel family `(T_h)`.
#[derive(Clone)]
pub struct GroupoidFamily {
    /// Node samples of `b`.
    pub symbol: FiberSymbol,
    /// `b` as a function, used by the kernels.
    pub symbol_fn: Arc<dyn FiberFunction>,
    /// `(h, T_h)` in h-grid order.
    pub kernels: Vec<(f64, Arc<dyn Kernel>)>,
    pub tag: QuantizationTag,
}

impl fmt::Debug for GroupoidFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupoidFamily")
            .field("h_values", &self.h_values())
            .field("tag", &self.tag)
            .finish()
    }
}

impl GroupoidFamily {
    pub fn manifold(&self) -> &Manifold {
        self.symbol.manifold()
    }

    pub fn grid(&self) -> &Arc<FiberGrid> {
        self.symbol.grid()
    }

    pub fn h_values(&self) -> Vec<f64> {
        self.kernels.iter().map(|(h, _)| *h).collect()
    }

    pub fn kernel(&self, h: f64) -> Option<&Arc<dyn Kernel>> {
        self.kernels.iter().find(|(hh, _)| *hh == h).map(|(_, k)| k)
    }

    /// Multiply every kernel by `1 + h r(x, y)`.
    pub fn perturbed(&self, r: Perturbation) -> GroupoidFamily {
        let kernels = self
            .kernels
            .iter()
            .map(|(h, k)| {
                let p: Arc<dyn Kernel> = Arc::new(PerturbedKernel::new(k.clone(), *h, r.clone()));
                (*h, p)
            })
            .collect();
        GroupoidFamily {
            kernels,
            tag: QuantizationTag::Perturbed,
            ..self.clone()
        }
    }
}

/// The h-grid `2^-k` for `k = k_min..=k_max`, largest `h` first.
pub fn dyadic_h_grid(k_min: u32, k_max: u32) -> Vec<f64> {
    (k_min..=k_max).map(|k| (0.5f64).powi(k as i32)).collect()
}

/// Canonical family `K_h(x, y) = h^-1 b(x, -log_x(y) / h)` over `h_grid`.
pub fn groupoid_quantize(
    m: &Manifold,
    grid: &Arc<FiberGrid>,
    b: Arc<dyn FiberFunction>,
    h_grid: &[f64],
) -> Result<GroupoidFamily> {
    if h_grid.iter().any(|&h| !(h > 0.0 && h <= 1.0)) {
        return Err(Error::InvalidParameter("h values must lie in (0, 1]".into()));
    }
    let h_max = h_grid.iter().cloned().fold(0.0, f64::max);
    check_support_radius(m, grid, h_max)?;
    let symbol = b.sample(m, grid);
    symbol.check_support()?;
    let kernels = h_grid
        .iter()
        .map(|&h| {
            let k: Arc<dyn Kernel> = Arc::new(CanonicalKernel::new(m, h, b.clone()));
            (h, k)
        })
        .collect();
    Ok(GroupoidFamily {
        symbol,
        symbol_fn: b,
        kernels,
        tag: QuantizationTag::Canonical,
    })
}

/// Chart-side datum `b_h(x_i, v_j) = h K(x_i, exp_{x_i}(-h v_j))`.
pub fn dequantize(kernel: &dyn Kernel, h: f64, grid: &Arc<FiberGrid>) -> Result<FiberSymbol> {
    let m = kernel.manifold().clone();
    let radius = m.injectivity_radius();
    let x = m.nodes();
    let v = grid.velocities();
    let mut out = Array2::zeros((x.len(), v.len()));
    for (i, &xi) in x.iter().enumerate() {
        let c = m.conformal(xi);
        for (j, &vj) in v.iter().enumerate() {
            let y = m.riem_exp(xi, -h * vj);
            if h * vj.abs() * c >= radius {
                return Err(Error::CutLocus { x: xi, y });
            }
            out[(i, j)] = kernel.eval(xi, y) * h;
        }
    }
    Ok(FiberSymbol::new(&m, grid, out))
}

/// Values of an `h`-sweep against a target, with a log-log rate fit.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub h_values: Vec<f64>,
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub fitted_slope: f64,
    pub extrapolated_limit: Complex64,
    pub target: Complex64,
}

/// Smallest error kept in the log-log fit.
const ERROR_FLOOR: f64 = 1e-300;

impl ConvergenceReport {
    /// Errors are `|value - target|`.
    pub fn from_values(h_values: Vec<f64>, values: Vec<Complex64>, target: Complex64) -> Self {
        let errors = values.iter().map(|v| (v - target).norm()).collect();
        Self::from_errors(h_values, values, errors, target)
    }

    /// Errors measured elsewhere (for instance a sup-norm over a whole symbol).
    pub fn from_errors(h_values: Vec<f64>, values: Vec<Complex64>, errors: Vec<f64>, target: Complex64) -> Self {
        assert_eq!(h_values.len(), values.len());
        assert_eq!(h_values.len(), errors.len());
        let fitted_slope = fit_slope(&h_values, &errors);
        let extrapolated_limit = richardson(&h_values, &values);
        Self {
            h_values,
            values,
            errors,
            fitted_slope,
            extrapolated_limit,
            target,
        }
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().cloned().fold(0.0, f64::max)
    }

    /// Number of points in the fitted (small-h) half.
    pub fn fit_points(&self) -> usize {
        lower_half(&self.h_values).len()
    }
}

/// Indices of the smaller half of the h-values (at least two points).
fn lower_half(h: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..h.len()).collect();
    idx.sort_by(|&a, &b| h[a].total_cmp(&h[b]));
    let keep = (h.len() / 2).max(2).min(h.len());
    idx.truncate(keep);
    idx
}

/// Least-squares slope of `log error` against `log h` over the lower half.
pub fn fit_slope(h: &[f64], errors: &[f64]) -> f64 {
    let idx = lower_half(h);
    if idx.len() < 2 {
        return f64::NAN;
    }
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (h[i].ln(), errors[i].max(ERROR_FLOOR).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Two-point extrapolation to `h = 0` from the two smallest `h` under a
/// first-order error model.
pub fn richardson(h: &[f64], values: &[Complex64]) -> Complex64 {
    let idx = lower_half(h);
    match idx.as_slice() {
        [a, b, ..] => {
            let (h1, h2) = (h[*a], h[*b]);
            (values[*a] * h2 - values[*b] * h1) / (h2 - h1)
        }
        [a] => values[*a],
        [] => Complex64::new(f64::NAN, f64::NAN),
    }
}

/// `int a dV_L`, evaluated as `sum_i b(x_i, 0) w_i`.
pub fn trace_target(symbol: &FiberSymbol) -> Complex64 {
    let m = symbol.manifold();
    let zero = symbol
        .grid()
        .velocities()
        .iter()
        .position(|&v| v == 0.0)
        .expect("velocity grid contains 0");
    symbol
        .values()
        .column(zero)
        .iter()
        .zip(m.weights())
        .map(|(b, w)| b * *w)
        .sum()
}

/// `h tr T_h` against `int a dV_L`.
pub fn trace_functional(fam: &GroupoidFamily) -> ConvergenceReport {
    let values = fam.kernels.iter().map(|(h, k)| k.diagonal_trace() * *h).collect();
    ConvergenceReport::from_values(fam.h_values(), values, trace_target(&fam.symbol))
}

/// `int a e^{-2 pi i H_Z} dV_L` by phase-space quadrature of `a = F^-1 b`.
pub fn character_target(symbol: &FiberSymbol, z: &AlgebraElement) -> Result<Complex64> {
    let a = fiber_fourier_inv(symbol)?;
    Ok(a.weighted_sum(|x, p| {
        let t = -2.0 * PI * (p * z.field.at(x) + z.func.at(x));
        Complex64::new(t.cos(), t.sin())
    }))
}

/// `int a e^{-2 pi i H_Z} dV_L` with the momentum integral done by Fourier
/// inversion: `sum_i b(x_i, -X(x_i)) e^{-2 pi i f(x_i)} w_i`. Unlike
/// [`character_target`] it has no interpolation floor in the fiber.
pub fn character_limit(fam: &GroupoidFamily, z: &AlgebraElement) -> Complex64 {
    let m = fam.manifold();
    m.nodes()
        .iter()
        .zip(m.weights())
        .map(|(&x, &w)| {
            let t = -2.0 * PI * z.func.at(x);
            fam.symbol_fn.eval(x, -z.field.at(x)) * Complex64::new(t.cos(), t.sin()) * w
        })
        .sum()
}

/// `rho^h_{exp(hX, hf)}`.
pub fn scaled_exponential(h: f64, z: &AlgebraElement) -> Result<PointwiseOperator> {
    rho(h, &exp_gm(&z.scale(h))?)
}

/// `h tr(rho^h_{exp(hZ)} T_h)` against `int a e^{-2 pi i H_Z} dV_L`.
pub fn character_pairing(fam: &GroupoidFamily, z: &AlgebraElement) -> Result<ConvergenceReport> {
    let mut values = Vec::with_capacity(fam.kernels.len());
    for (h, k) in &fam.kernels {
        let left = LeftComposed::new(scaled_exponential(*h, z)?, k.clone());
        values.push(left.diagonal_trace() * *h);
    }
    Ok(ConvergenceReport::from_values(
        fam.h_values(),
        values,
        character_limit(fam, z),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `L_Z(a, T_h) = (a e^{-2 pi i H_Z}, rho^h_{exp(hZ)} T_h)` and
/// `R_Z(a, T_h) = (a e^{-2 pi i H_Z}, T_h rho^h_{exp(hZ)})`; the symbol slot is
/// shifted and phased on the fiber side.
pub fn centralizer_apply(side: Side, z: &AlgebraElement, fam: &GroupoidFamily) -> Result<GroupoidFamily> {
    let m = fam.manifold();
    let symbol_fn: Arc<dyn FiberFunction> = Arc::new(PhaseShifted {
        inner: SharedFiberFunction(fam.symbol_fn.clone()),
        shift: z.field.clone(),
        phase: z.func.clone(),
    });
    let symbol = symbol_fn.sample(m, fam.grid());
    let mut kernels = Vec::with_capacity(fam.kernels.len());
    for (h, k) in &fam.kernels {
        let op = scaled_exponential(*h, z)?;
        let out: Arc<dyn Kernel> = match side {
            Side::Left => Arc::new(LeftComposed::new(op, k.clone())),
            Side::Right => Arc::new(RightComposed::new(op, k.clone())),
        };
        kernels.push((*h, out));
    }
    Ok(GroupoidFamily {
        symbol,
        symbol_fn,
        kernels,
        tag: fam.tag,
    })
}

/// Adapter so a shared symbol can sit inside [`PhaseShifted`].
#[derive(Clone)]
pub struct SharedFiberFunction(pub Arc<dyn FiberFunction>);

impl FiberFunction for SharedFiberFunction {
    fn eval(&self, x: f64, v: f64) -> Complex64 {
        self.0.eval(x, v)
    }
}

/// Kernel slot of the covariance action: `rho^h(g) T_h rho^h(g)*`.
pub fn covariant_conjugate(g: &GroupElement, fam: &GroupoidFamily, h: f64) -> Result<ConjugatedKernel> {
    let m = fam.manifold();
    let k = fam
        .kernel(h)
        .ok_or_else(|| Error::InvalidParameter(format!("family has no kernel at h = {h}")))?;
    // The conjugated kernel at (x, y) reads K at (phi^-1 x, phi^-1 y); its
    // support stretches by at most sup phi'.
    let stretch = (0..4 * m.num_points())
        .map(|i| {
            g.diffeo
                .jacobian(i as f64 * m.circumference() / (4 * m.num_points()) as f64)
        })
        .fold(0.0, f64::max);
    check_support_radius(m, fam.grid(), h * stretch)?;
    ConjugatedKernel::new(g, h, k.clone())
}

/// `a'(x, p) = a(phi^-1 x, (p + f'(x)) phi'(phi^-1 x))`, i.e. `a o (alpha0_g)^-1`.
/// Momenta are interpolated trigonometrically; values past the momentum
/// range are zero.
pub fn symbol_transport(g: &GroupElement, sym: &PhaseSymbol) -> PhaseSymbol {
    let m = sym.manifold();
    let grid = sym.grid();
    let n = m.num_points();
    let pn = grid.num_momenta();
    let period = pn as f64 * grid.dp();
    let p = grid.momenta();
    let p_lo = p[0];
    let p_hi = p[pn - 1];
    let df = g.func.derivative();
    let inv = g.diffeo.inverse_nodes();
    let values = sym.values();
    let mut out = Array2::zeros((n, pn));
    for i in 0..n {
        let y = inv[i];
        let row: Vec<Complex64> = match node_index(m, y) {
            Some(r) => values.row(r).to_vec(),
            None => {
                let cx = cardinal_weights(m, y);
                (0..pn)
                    .map(|k| values.column(k).iter().zip(&cx).map(|(a, c)| a * *c).sum())
                    .collect()
            }
        };
        let jac = g.diffeo.jacobian(y);
        let shift = df.samples()[i];
        for k in 0..pn {
            let q = (p[k] + shift) * jac;
            if q < p_lo || q > p_hi {
                continue;
            }
            out[(i, k)] = row.iter().zip(p).map(|(a, pk)| a * cardinal(pn, period, q - pk)).sum();
        }
    }
    PhaseSymbol::new(m, grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{Profile, SeparableSymbol};
    use crate::lie_group::Diffeo;
    use crate::manifold::{ComplexField, GridManifold, ScalarField, VectorField};
    use approx::assert_abs_diff_eq;

    fn bump_symbol(m: &Manifold) -> Arc<dyn FiberFunction> {
        Arc::new(SeparableSymbol::new(vec![(
            ComplexField::from_fn(m, |x| Complex64::new(1.0 + 0.5 * x.cos(), 0.3 * x.sin())),
            Profile::Bump {
                center: 0.4,
                radius: 1.5,
            },
        )]))
    }

    #[test]
    fn flat_canonical_kernel_is_closed_form() {
        let m = GridManifold::flat(64).unwrap();
        let grid = FiberGrid::default_grid();
        let u = |x: f64| 1.0 + 0.5 * x.cos();
        let w = Profile::Gaussian {
            center: 0.0,
            width: 1.0,
        };
        let b: Arc<dyn FiberFunction> = Arc::new(SeparableSymbol::new(vec![(
            ComplexField::from_fn(&m, |x| Complex64::new(u(x), 0.0)),
            w,
        )]));
        let fam = groupoid_quantize(&m, &grid, b, &[0.125, 0.0625]).unwrap();
        for (h, k) in &fam.kernels {
            for &(x, y) in &[(1.0, 1.1), (0.2, 6.2), (3.0, 3.0)] {
                let d = m.wrap_difference(x - y) / h;
                assert_abs_diff_eq!(k.eval(x, y).re, u(x) * w.eval(d) / h, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn zero_symbol_gives_zero_family() {
        let m = GridManifold::cosine(32, 0.3).unwrap();
        let grid = FiberGrid::default_grid();
        let zero = FiberSymbol::zeros(&m, &grid);
        let fam = groupoid_quantize(&m, &grid, Arc::new(zero), &[0.125]).unwrap();
        assert_eq!(fam.kernels[0].1.materialize().max_abs(), 0.0);
        let report = trace_functional(&fam);
        assert_eq!(report.values[0], Complex64::new(0.0, 0.0));
        assert_eq!(report.target, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn diagonal_and_dequantize_round_trip() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let grid = FiberGrid::default_grid();
        let b = bump_symbol(&m);
        let fam = groupoid_quantize(&m, &grid, b, &[0.125, 0.03125]).unwrap();
        for (h, k) in &fam.kernels {
            for (i, &x) in m.nodes().iter().enumerate() {
                let diag = k.eval(x, x) * *h;
                assert!((diag - fam.symbol.values()[(i, grid.num_velocities() / 2)]).norm() < 1e-14);
            }
            let back = dequantize(k.as_ref(), *h, &grid).unwrap();
            assert!(back.max_distance(&fam.symbol) < 1e-10);
        }
        let z = dequantize(&L2Operator::zeros(&m), 0.1, &grid).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn perturbed_trace_error_is_first_order() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let grid = FiberGrid::default_grid();
        let fam = groupoid_quantize(&m, &grid, bump_symbol(&m), &dyadic_h_grid(3, 8)).unwrap();
        let exact = trace_functional(&fam);
        assert!(exact.max_error() < 1e-12);
        let pert = fam.perturbed(Arc::new(|x: f64, y: f64| 0.7 * x.cos() + 0.4 * y.sin()));
        let report = trace_functional(&pert);
        assert_abs_diff_eq!(report.fitted_slope, 1.0, epsilon = 0.05);
        assert!((report.extrapolated_limit - report.target).norm() < 1e-10);
    }

    #[test]
    fn fit_and_extrapolation_on_model_data() {
        let h = dyadic_h_grid(1, 8);
        let target = Complex64::new(2.0, -1.0);
        let values: Vec<Complex64> = h.iter().map(|&h| target + Complex64::new(3.0 * h, h)).collect();
        let r = ConvergenceReport::from_values(h.clone(), values, target);
        assert_abs_diff_eq!(r.fitted_slope, 1.0, epsilon = 1e-12);
        assert!((r.extrapolated_limit - target).norm() < 1e-12);
        assert_eq!(r.fit_points(), 4);
    }

    #[test]
    fn character_reductions() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let grid = FiberGrid::default_grid();
        let fam = groupoid_quantize(&m, &grid, bump_symbol(&m), &[0.125, 0.0625]).unwrap();
        let trace = trace_functional(&fam);
        let zero = character_pairing(&fam, &AlgebraElement::zero(&m)).unwrap();
        for (a, b) in zero.values.iter().zip(&trace.values) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((zero.target - trace.target).norm() < 1e-10);

        let c = 0.3;
        let z = AlgebraElement::from_fns(&m, |_| 0.0, move |_| c);
        let phase = Complex64::new(0.0, -2.0 * PI * c).exp();
        let r = character_pairing(&fam, &z).unwrap();
        for (a, b) in r.values.iter().zip(&trace.values) {
            assert!((a - b * phase).norm() < 1e-10);
        }
        assert!((r.target - trace.target * phase).norm() < 1e-10);
    }

    #[test]
    fn character_limit_matches_phase_space_quadrature() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let grid = FiberGrid::default_grid();
        let fam = groupoid_quantize(&m, &grid, bump_symbol(&m), &[0.125]).unwrap();
        let z = AlgebraElement::from_fns(&m, |x| 0.8 * x.sin() + 0.3, |x| 0.2 * x.cos());
        let exact = character_limit(&fam, &z);
        let quadrature = character_target(&fam.symbol, &z).unwrap();
        assert!((exact - quadrature).norm() < 1e-5 * exact.norm());
    }

    #[test]
    fn centralizers_reduce_and_balance() {
        let m = GridManifold::cosine(32, 0.3).unwrap();
        let grid = FiberGrid::default_grid();
        let fam = groupoid_quantize(&m, &grid, bump_symbol(&m), &[0.125]).unwrap();
        let same = centralizer_apply(Side::Left, &AlgebraElement::zero(&m), &fam).unwrap();
        assert!(same.symbol.max_distance(&fam.symbol) < 1e-15);
        let k0 = fam.kernels[0].1.materialize();
        assert!(same.kernels[0].1.materialize().max_distance(&k0) < 1e-12 * k0.max_abs());

        // X = 0: phase-multiplied rows
        let f = ScalarField::from_fn(&m, |x| 0.5 * x.sin());
        let z = AlgebraElement::new(VectorField::zeros(&m), f.clone());
        let left = centralizer_apply(Side::Left, &z, &fam).unwrap();
        let h = 0.125;
        let kl = left.kernels[0].1.materialize();
        for (i, &x) in m.nodes().iter().enumerate() {
            let ph = Complex64::new(0.0, -2.0 * PI * f.samples()[i]).exp();
            for j in 0..m.num_points() {
                assert!((kl.kernel()[(i, j)] - ph * k0.kernel()[(i, j)]).norm() < 1e-10 / h);
            }
            let b = left.symbol.values()[(i, 100)];
            assert!((b - ph * fam.symbol.values()[(i, 100)]).norm() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn covariance_by_a_function_is_a_phase() {
        let m = GridManifold::cosine(64, 0.3).unwrap();
        let grid = FiberGrid::default_grid();
        let fam = groupoid_quantize(&m, &grid, bump_symbol(&m), &[0.125]).unwrap();
        let f = ScalarField::from_fn(&m, |x| 0.2 * (2.0 * x).cos());
        let g = GroupElement::from_function(f.clone());
        let k = covariant_conjugate(&g, &fam, 0.125).unwrap();
        let k0 = &fam.kernels[0].1;
        for &(x, y) in &[(1.0, 1.2), (4.0, 3.9)] {
            let ph = Complex64::new(0.0, -2.0 * PI * (f.at(x) - f.at(y)) / 0.125).exp();
            assert!((k.eval(x, y) - ph * k0.eval(x, y)).norm() < 1e-10);
        }

        let a = fiber_fourier_inv(&fam.symbol).unwrap();
        let id = symbol_transport(&GroupElement::identity(&m), &a);
        assert!(id.max_distance(&a) < 1e-12);
        let ident = covariant_conjugate(&GroupElement::identity(&m), &fam, 0.125).unwrap();
        assert!((ident.eval(2.0, 2.1) - k0.eval(2.0, 2.1)).norm() < 1e-12);
    }

    #[test]
    fn transport_shifts_momenta_by_the_slope() {
        let m = GridManifold::flat(32).unwrap();
        let grid = FiberGrid::reciprocal(128, 4.0).unwrap();
        let a = PhaseSymbol::from_fn(&m, &grid, |x, p| Complex64::new((-(p - x.sin()).powi(2)).exp(), 0.0));
        let f = ScalarField::from_fn(&m, |x| 0.3 * x.sin());
        let out = symbol_transport(&GroupElement::from_function(f), &a);
        for (i, &x) in m.nodes().iter().enumerate() {
            for (k, &p) in grid.momenta().iter().enumerate().skip(16).take(96) {
                let want = (-(p + 0.3 * x.cos() - x.sin()).powi(2)).exp();
                assert_abs_diff_eq!(out.values()[(i, k)].re, want, epsilon = 1e-6);
            }
        }
        let rot = Diffeo::rotation(&m, m.spacing() * 3.0);
        let out = symbol_transport(&GroupElement::from_diffeo(rot), &a);
        for i in 0..32 {
            for k in 0..128 {
                assert!((out.values()[(i, k)] - a.values()[((i + 29) % 32, k)]).norm() < 1e-12);
            }
        }
    }
}
