//! Convolution algebras of the pair groupoid `M x M` and of the tangent bundle,
//! the fiberwise Fourier transform between them, the tangent-groupoid chart
//! `beta`, its Haar system, and the extension maps onto the tangent groupoid.
//!
//! Velocity grids are `v_j = (j - M/2) dv` with `dv = 2V/M`; momentum grids are
//! `p_k = (k - P/2) dp`. Fiber measures are `lambda_x = c(x) dv` on velocities
//! and `lambda*_x = dp / c(x)` on momenta.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lie_group::{flow_points, Diffeo};
use crate::manifold::{ComplexField, Manifold, TangentPoint, VectorField};
use crate::quantization::L2Operator;
use crate::spectral::cardinal;

/// Relative level below which fiber data count as zero.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Fraction of `[-V, V]` a fiber symbol may occupy.
pub const SUPPORT_BAND: f64 = 0.9;
/// Kernels built through `beta` must reach at most this fraction of the
/// injectivity radius.
pub const CHART_MARGIN: f64 = 0.45;

/// Paired velocity and momentum grids shared by every fiber.
#[derive(Debug)]
pub struct FiberGrid {
    m_nodes: usize,
    v_max: f64,
    p_nodes: usize,
    dp: f64,
    velocities: Vec<f64>,
    momenta: Vec<f64>,
    /// `e^{2 pi i p_k v_j}`, rows indexed by `k`.
    phases: OnceLock<Array2<Complex64>>,
}

impl FiberGrid {
    pub const DEFAULT_NODES: usize = 256;
    pub const DEFAULT_V: f64 = 6.0;

    pub fn new(m_nodes: usize, v_max: f64, p_nodes: usize, dp: f64) -> Result<Arc<Self>> {
        if m_nodes < 2 || !m_nodes.is_multiple_of(2) || p_nodes < 2 || !p_nodes.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "fiber grid sizes must be even and >= 2, got {m_nodes} and {p_nodes}"
            )));
        }
        if !(v_max > 0.0 && dp > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fiber extents must be positive, got V = {v_max}, dp = {dp}"
            )));
        }
        let product = 2.0 * v_max * dp;
        if product > 1.0 + 1e-12 {
            return Err(Error::GridMismatch { product });
        }
        let dv = 2.0 * v_max / m_nodes as f64;
        let velocities = (0..m_nodes).map(|j| (j as f64 - (m_nodes / 2) as f64) * dv).collect();
        let momenta = (0..p_nodes).map(|k| (k as f64 - (p_nodes / 2) as f64) * dp).collect();
        Ok(Arc::new(Self {
            m_nodes,
            v_max,
            p_nodes,
            dp,
            velocities,
            momenta,
            phases: OnceLock::new(),
        }))
    }

    /// `P = M` and `dp = 1 / (2V)`: the transform pair is a unitary DFT.
    pub fn reciprocal(m_nodes: usize, v_max: f64) -> Result<Arc<Self>> {
        Self::new(m_nodes, v_max, m_nodes, 1.0 / (2.0 * v_max))
    }

    pub fn default_grid() -> Arc<Self> {
        Self::reciprocal(Self::DEFAULT_NODES, Self::DEFAULT_V).expect("default grid is valid")
    }

    pub fn num_velocities(&self) -> usize {
        self.m_nodes
    }

    pub fn num_momenta(&self) -> usize {
        self.p_nodes
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.v_max / self.m_nodes as f64
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    fn phases(&self) -> &Array2<Complex64> {
        self.phases.get_or_init(|| {
            Array2::from_shape_fn((self.p_nodes, self.m_nodes), |(k, j)| {
                let t = 2.0 * PI * self.momenta[k] * self.velocities[j];
                Complex64::new(t.cos(), t.sin())
            })
        })
    }

    /// Trigonometric interpolation of one fiber row at velocity `v`, treating
    /// the row as periodic in `2V`; zero for `|v| >= V`.
    pub fn interpolate_row(&self, row: &[Complex64], v: f64) -> Complex64 {
        if v.abs() >= self.v_max {
            return Complex64::new(0.0, 0.0);
        }
        let period = 2.0 * self.v_max;
        row.iter()
            .zip(&self.velocities)
            .map(|(b, vj)| b * cardinal(self.m_nodes, period, v - vj))
            .sum()
    }
}

/// A function on the tangent bundle, `b(x, v)`.
pub trait FiberFunction: Send + Sync {
    fn eval(&self, x: f64, v: f64) -> Complex64;

    /// Node samples `b(x_i, v_j)`.
    fn sample(&self, m: &Manifold, grid: &Arc<FiberGrid>) -> FiberSymbol {
        FiberSymbol::from_fn(m, grid, |x, v| self.eval(x, v))
    }
}

/// Samples `b(x_i, v_j)` of a function on the tangent bundle.
#[derive(Clone, Debug)]
pub struct FiberSymbol {
    manifold: Manifold,
    grid: Arc<FiberGrid>,
    values: Array2<Complex64>,
}

impl FiberSymbol {
    pub fn new(m: &Manifold, grid: &Arc<FiberGrid>, values: Array2<Complex64>) -> Self {
        assert_eq!(values.dim(), (m.num_points(), grid.num_velocities()));
        Self {
            manifold: m.clone(),
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(m: &Manifold, grid: &Arc<FiberGrid>) -> Self {
        Self::new(m, grid, Array2::zeros((m.num_points(), grid.num_velocities())))
    }

    pub fn from_fn(m: &Manifold, grid: &Arc<FiberGrid>, b: impl Fn(f64, f64) -> Complex64) -> Self {
        let x = m.nodes();
        let v = grid.velocities();
        Self::new(
            m,
            grid,
            Array2::from_shape_fn((x.len(), v.len()), |(i, j)| b(x[i], v[j])),
        )
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn grid(&self) -> &Arc<FiberGrid> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    /// `lambda_{x_i} = c(x_i) dv`.
    pub fn fiber_weight(&self, i: usize) -> f64 {
        self.manifold.conformal_samples()[i] * self.grid.dv()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_distance(&self, other: &FiberSymbol) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest magnitude at `|v| >= 0.9 V`.
    pub fn band_leak(&self) -> f64 {
        let edge = SUPPORT_BAND * self.grid.v_max();
        let mut leak: f64 = 0.0;
        for (j, v) in self.grid.velocities().iter().enumerate() {
            if v.abs() >= edge {
                for z in self.values.column(j) {
                    leak = leak.max(z.norm());
                }
            }
        }
        leak
    }

    /// Error unless the symbol vanishes (relative to its peak) outside the band.
    pub fn check_support(&self) -> Result<()> {
        let leak = self.band_leak();
        let allowed = SUPPORT_TOL * self.max_abs().max(1.0);
        if leak > allowed {
            return Err(Error::SupportOverflow(format!(
                "|b| = {leak:e} at |v| >= {SUPPORT_BAND} V (allowed {allowed:e})"
            )));
        }
        Ok(())
    }
}

impl FiberFunction for FiberSymbol {
    /// Spectral in `x`, trigonometric in `v`. Node coordinates skip the `x`
    /// interpolation.
    fn eval(&self, x: f64, v: f64) -> Complex64 {
        let m = &self.manifold;
        let xr = m.reduce(x);
        let pos = xr / m.spacing();
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-12 {
            let i = (nearest as usize) % m.num_points();
            return self
                .grid
                .interpolate_row(self.values.row(i).as_slice().expect("row-major"), v);
        }
        let n = m.num_points();
        let l = m.circumference();
        let mut row = vec![Complex64::new(0.0, 0.0); self.grid.num_velocities()];
        for (i, xi) in m.nodes().iter().enumerate() {
            let w = cardinal(n, l, xr - xi);
            for (r, b) in row.iter_mut().zip(self.values.row(i)) {
                *r += b * w;
            }
        }
        self.grid.interpolate_row(&row, v)
    }
}

/// Samples `a(x_i, p_k)` of a phase-space function.
#[derive(Clone, Debug)]
pub struct PhaseSymbol {
    manifold: Manifold,
    grid: Arc<FiberGrid>,
    values: Array2<Complex64>,
}

impl PhaseSymbol {
    pub fn new(m: &Manifold, grid: &Arc<FiberGrid>, values: Array2<Complex64>) -> Self {
        assert_eq!(values.dim(), (m.num_points(), grid.num_momenta()));
        Self {
            manifold: m.clone(),
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(m: &Manifold, grid: &Arc<FiberGrid>, a: impl Fn(f64, f64) -> Complex64) -> Self {
        let x = m.nodes();
        let p = grid.momenta();
        Self::new(
            m,
            grid,
            Array2::from_shape_fn((x.len(), p.len()), |(i, k)| a(x[i], p[k])),
        )
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn grid(&self) -> &Arc<FiberGrid> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    /// `lambda*_{x_i} = dp / c(x_i)`.
    pub fn fiber_weight(&self, i: usize) -> f64 {
        self.grid.dp() / self.manifold.conformal_samples()[i]
    }

    pub fn max_distance(&self, other: &PhaseSymbol) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Liouville integral `int a dp dq = sum_i w_i sum_k a(x_i, p_k) dp / c(x_i)`.
    pub fn liouville_integral(&self) -> Complex64 {
        self.weighted_sum(|_, _| Complex64::new(1.0, 0.0))
    }

    /// `sum_i w_i sum_k a(x_i, p_k) g(x_i, p_k) dp / c(x_i)`.
    pub fn weighted_sum(&self, g: impl Fn(f64, f64) -> Complex64) -> Complex64 {
        let x = self.manifold.nodes();
        let p = self.grid.momenta();
        let w = self.manifold.weights();
        let mut total = Complex64::new(0.0, 0.0);
        for (i, row) in self.values.rows().into_iter().enumerate() {
            let s: Complex64 = row.iter().zip(p).map(|(a, &pk)| a * g(x[i], pk)).sum();
            total += s * (w[i] * self.fiber_weight(i));
        }
        total
    }
}

fn same_grids(m1: &Manifold, g1: &Arc<FiberGrid>, m2: &Manifold, g2: &Arc<FiberGrid>) {
    assert!(m1.same_as(m2), "symbols live on different manifolds");
    assert!(
        Arc::ptr_eq(g1, g2)
            || (g1.m_nodes == g2.m_nodes && g1.p_nodes == g2.p_nodes && g1.v_max == g2.v_max && g1.dp == g2.dp),
        "symbols use different fiber grids"
    );
}

fn check_reciprocity(grid: &FiberGrid) -> Result<()> {
    let product = 2.0 * grid.v_max * grid.dp;
    if product > 1.0 + 1e-12 {
        return Err(Error::GridMismatch { product });
    }
    Ok(())
}

/// `b(x, v) = sum_k a(x, p_k) e^{2 pi i p_k v} dp / c(x)`.
pub fn fiber_fourier(a: &PhaseSymbol) -> Result<FiberSymbol> {
    let grid = &a.grid;
    check_reciprocity(grid)?;
    let mut b = a.values.dot(grid.phases());
    for (i, mut row) in b.rows_mut().into_iter().enumerate() {
        let s = a.fiber_weight(i);
        row.mapv_inplace(|z| z * s);
    }
    Ok(FiberSymbol::new(&a.manifold, grid, b))
}

/// `a(x, p_k) = sum_j b(x, v_j) e^{-2 pi i p_k v_j} c(x) dv`.
pub fn fiber_fourier_inv(b: &FiberSymbol) -> Result<PhaseSymbol> {
    let grid = &b.grid;
    check_reciprocity(grid)?;
    let conj = grid.phases().t().mapv(|z| z.conj());
    let mut a = b.values.dot(&conj);
    for (i, mut row) in a.rows_mut().into_iter().enumerate() {
        let s = b.fiber_weight(i);
        row.mapv_inplace(|z| z * s);
    }
    Ok(PhaseSymbol::new(&b.manifold, grid, a))
}

/// Pair-groupoid convolution `int K1(x, z) K2(z, y) dV_g(z)`.
pub fn pair_convolve(k1: &L2Operator, k2: &L2Operator) -> L2Operator {
    k1.compose(k2)
}

/// Kernel involution `K*(x, y) = conj(K(y, x))`.
pub fn pair_involution(k: &L2Operator) -> L2Operator {
    k.adjoint()
}

/// Fiberwise linear convolution `int b1(u) b2(v - u) dlambda_x(u)`.
pub fn tb_convolve(b1: &FiberSymbol, b2: &FiberSymbol) -> Result<FiberSymbol> {
    same_grids(&b1.manifold, &b1.grid, &b2.manifold, &b2.grid);
    let mm = b1.grid.num_velocities();
    let half = (mm / 2) as isize;
    let mut out = Array2::zeros(b1.values.dim());
    for i in 0..b1.manifold.num_points() {
        let w = b1.fiber_weight(i);
        let r1 = b1.values.row(i);
        let r2 = b2.values.row(i);
        for j in 0..mm as isize {
            let mut acc = Complex64::new(0.0, 0.0);
            // v_j - v_l sits at index j - l + M/2
            let lo = (j + half - mm as isize + 1).max(0);
            let hi = (j + half).min(mm as isize - 1);
            for l in lo..=hi {
                acc += r1[l as usize] * r2[(j - l + half) as usize];
            }
            out[(i, j as usize)] = acc * w;
        }
    }
    let result = FiberSymbol::new(&b1.manifold, &b1.grid, out);
    result.check_support()?;
    Ok(result)
}

/// A point of the tangent groupoid: a tangent vector at `h = 0`, or a pair of
/// points at `h > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TangentGroupoidPoint {
    Tangent(TangentPoint),
    Pair { h: f64, x: f64, y: f64 },
}

impl TangentGroupoidPoint {
    pub fn h(&self) -> f64 {
        match *self {
            TangentGroupoidPoint::Tangent(_) => 0.0,
            TangentGroupoidPoint::Pair { h, .. } => h,
        }
    }

    /// Range point `x` (the base point at `h = 0`).
    pub fn range(&self) -> f64 {
        match *self {
            TangentGroupoidPoint::Tangent(t) => t.x,
            TangentGroupoidPoint::Pair { x, .. } => x,
        }
    }
}

/// `beta(h, v_x) = (h, x, exp_x(-h v))`, and `beta(0, v) = (0, v)`.
pub fn beta_chart(m: &Manifold, h: f64, tp: TangentPoint) -> TangentGroupoidPoint {
    if h == 0.0 {
        TangentGroupoidPoint::Tangent(tp)
    } else {
        TangentGroupoidPoint::Pair {
            h,
            x: tp.x,
            y: m.riem_exp(tp.x, -h * tp.v),
        }
    }
}

/// Inverse chart: `v = -log_x(y) / h` for pairs, the identity on tangent vectors.
pub fn beta_inverse(m: &Manifold, pt: &TangentGroupoidPoint) -> Result<TangentPoint> {
    match *pt {
        TangentGroupoidPoint::Tangent(t) => Ok(t),
        TangentGroupoidPoint::Pair { h, x, y } => {
            let v = -m.riem_log(x, y)? / h;
            Ok(TangentPoint::new(m, x, v))
        }
    }
}

/// Error unless kernels built through `beta` from a symbol on `[-V, V]` stay
/// inside the chart for every `h <= h_max`.
pub fn check_support_radius(m: &Manifold, grid: &FiberGrid, h_max: f64) -> Result<()> {
    let reach = h_max * grid.v_max() * m.conformal_bounds().1;
    let allowed = CHART_MARGIN * m.injectivity_radius();
    if reach >= allowed {
        return Err(Error::SupportOverflow(format!(
            "h_max * V * sup c = {reach} exceeds {CHART_MARGIN} of the injectivity radius ({allowed})"
        )));
    }
    Ok(())
}

/// Haar system of the tangent groupoid at `(h, x)`, integrated in the `beta`
/// chart: `sum_j F(beta(h, v_j)) c(x) dv`. At `h > 0` this is `h^-1 int F dV_g`
/// after the substitution `y = exp_x(-h v)`; `F` must vanish outside the chart
/// image of `[-V, V]`.
pub fn haar_integral(
    m: &Manifold,
    grid: &FiberGrid,
    f: impl Fn(&TangentGroupoidPoint) -> Complex64,
    h: f64,
    x: f64,
) -> Complex64 {
    let lambda = m.conformal(x) * grid.dv();
    grid.velocities()
        .iter()
        .map(|&v| f(&beta_chart(m, h, TangentPoint::new(m, x, v))))
        .sum::<Complex64>()
        * lambda
}

/// Haar system on the grid: `h^-1 sum_i F(h, x, x_i) w_i` for `h > 0`, and the
/// fiber quadrature at `h = 0`.
pub fn haar_integral_grid(
    m: &Manifold,
    grid: &FiberGrid,
    f: impl Fn(&TangentGroupoidPoint) -> Complex64,
    h: f64,
    x: f64,
) -> Complex64 {
    if h == 0.0 {
        return haar_integral(m, grid, f, 0.0, x);
    }
    m.nodes()
        .iter()
        .zip(m.weights())
        .map(|(&y, &w)| f(&TangentGroupoidPoint::Pair { h, x, y }) * w)
        .sum::<Complex64>()
        / h
}

/// Smooth families `F: [0, 1] x M -> M` that the extension map accepts.
#[derive(Clone, Debug)]
pub enum DiffeoFamily {
    /// `F(h, x) = phi(x)` for every `h`.
    Constant(Diffeo),
    /// `F(h, x) = Fl^{-X}_h(x)`.
    ReverseFlow(VectorField),
}

impl DiffeoFamily {
    /// `F(h, x)`, unwrapped.
    pub fn at(&self, h: f64, x: f64) -> f64 {
        match self {
            DiffeoFamily::Constant(phi) => phi.apply(x),
            DiffeoFamily::ReverseFlow(field) => flow_points(field, -h, &[x])[0],
        }
    }

    /// `T_{(0,x)} F (1, v)`: base point and tangent component.
    pub fn boundary(&self, x: f64, v: f64) -> (f64, f64) {
        match self {
            DiffeoFamily::Constant(phi) => (phi.apply(x), phi.jacobian(x) * v),
            DiffeoFamily::ReverseFlow(field) => (x, v - field.at(x)),
        }
    }
}

/// Extension of a family to the tangent groupoid:
/// `(0, v_x) -> (0, T F(1, v_x))` and `(h, x, y) -> (h, F(h, x), F(0, y))`.
pub fn extend_diffeo_eval(m: &Manifold, family: &DiffeoFamily, pt: &TangentGroupoidPoint) -> TangentGroupoidPoint {
    match *pt {
        TangentGroupoidPoint::Tangent(t) => {
            let (x, v) = family.boundary(t.x, t.v);
            TangentGroupoidPoint::Tangent(TangentPoint::new(m, x, v))
        }
        TangentGroupoidPoint::Pair { h, x, y } => TangentGroupoidPoint::Pair {
            h,
            x: m.reduce(family.at(h, x)),
            y: m.reduce(family.at(0.0, y)),
        },
    }
}

/// Extension of `g: [0, 1] x M -> C` to the tangent groupoid:
/// `g~(0, v_x) = g(0, x)`, `g~(h, x, y) = g(h, x)`.
pub fn extend_scalar(g: impl Fn(f64, f64) -> Complex64, pt: &TangentGroupoidPoint) -> Complex64 {
    match *pt {
        TangentGroupoidPoint::Tangent(t) => g(0.0, t.x),
        TangentGroupoidPoint::Pair { h, x, .. } => g(h, x),
    }
}

/// Velocity profile of a separable symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `exp(-pi ((v - center) / width)^2)`, cut to zero below the support tolerance.
    Gaussian { center: f64, width: f64 },
    /// `exp(1 - 1 / (1 - s^2))` with `s = (v - center) / radius`, zero for `|s| >= 1`.
    Bump { center: f64, radius: f64 },
}

impl Profile {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            Profile::Gaussian { center, width } => {
                let g = (-PI * ((v - center) / width).powi(2)).exp();
                if g < SUPPORT_TOL {
                    0.0
                } else {
                    g
                }
            }
            Profile::Bump { center, radius } => {
                let s = (v - center) / radius;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
        }
    }

    /// Largest `|v|` where the profile is nonzero.
    pub fn reach(&self) -> f64 {
        match *self {
            Profile::Gaussian { center, width } => center.abs() + width * ((1.0 / SUPPORT_TOL).ln() / PI).sqrt(),
            Profile::Bump { center, radius } => center.abs() + radius,
        }
    }
}

/// `b(x, v) = sum_r u_r(x) profile_r(v)`.
#[derive(Clone, Debug)]
pub struct SeparableSymbol {
    terms: Vec<(ComplexField, Profile)>,
}

impl SeparableSymbol {
    pub fn new(terms: Vec<(ComplexField, Profile)>) -> Self {
        assert!(!terms.is_empty(), "separable symbol needs at least one term");
        Self { terms }
    }

    pub fn terms(&self) -> &[(ComplexField, Profile)] {
        &self.terms
    }

    pub fn reach(&self) -> f64 {
        self.terms.iter().map(|(_, p)| p.reach()).fold(0.0, f64::max)
    }
}

impl FiberFunction for SeparableSymbol {
    fn eval(&self, x: f64, v: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(u, p)| {
                let w = p.eval(v);
                if w == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    u.at(x) * w
                }
            })
            .sum()
    }
}

/// `e^{-2 pi i f(x)} b(x, v - X(x))`: the fiber-side image of multiplying the
/// symbol by `e^{-2 pi i H_(X, f)}`.
#[derive(Clone, Debug)]
pub struct PhaseShifted<B> {
    pub inner: B,
    pub shift: VectorField,
    pub phase: crate::manifold::ScalarField,
}

impl<B: FiberFunction> FiberFunction for PhaseShifted<B> {
    fn eval(&self, x: f64, v: f64) -> Complex64 {
        let t = -2.0 * PI * self.phase.at(x);
        self.inner.eval(x, v - self.shift.at(x)) * Complex64::new(t.cos(), t.sin())
    }
}
