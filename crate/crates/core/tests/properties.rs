//! Randomized invariants over seeds, grid sizes and parameters.

use orbitlab::coadjoint::{alpha0, coadjoint_action, derived_action, moment_pairing, symplectic_form};
use orbitlab::groupoid::{fiber_fourier, fiber_fourier_inv, pair_convolve, FiberFunction, FiberGrid};
use orbitlab::harness::ExperimentConfig;
use orbitlab::induction::{descend, InducedVector};
use orbitlab::quantization::{l2_norm, rho, L2Operator};
use orbitlab::sampling::{
    random_algebra_element, random_complex_field, random_covector, random_group_element, random_symbol, rng,
};
use orbitlab::{bracket, fit_slope, inverse, multiply, richardson, Complex64, GridManifold, GroupElement, Manifold};
use proptest::prelude::*;

fn manifold(n: usize, amplitude: f64) -> Manifold {
    GridManifold::cosine(n, amplitude).unwrap()
}

fn grid_size() -> impl Strategy<Value = usize> {
    prop_oneof![Just(32usize), Just(64), Just(128)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn products_are_associative_with_inverses(seed in any::<u64>(), amp in 0.0..0.5f64) {
        let m = manifold(256, amp);
        let mut r = rng(seed);
        let a = random_group_element(&m, &mut r);
        let b = random_group_element(&m, &mut r);
        let c = random_group_element(&m, &mut r);
        let left = multiply(&multiply(&a, &b).unwrap(), &c).unwrap();
        let right = multiply(&a, &multiply(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_distance(&right) < 1e-8);
        let id = GroupElement::identity(&m);
        prop_assert!(multiply(&a, &inverse(&a).unwrap()).unwrap().max_distance(&id) < 1e-8);
        prop_assert!(multiply(&inverse(&a).unwrap(), &a).unwrap().max_distance(&id) < 1e-8);
    }

    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>(), n in grid_size()) {
        let m = manifold(n, 0.3);
        let mut r = rng(seed);
        let z1 = random_algebra_element(&m, &mut r);
        let z2 = random_algebra_element(&m, &mut r);
        let sum = bracket(&z1, &z2).max_distance(&bracket(&z2, &z1).scale(-1.0));
        prop_assert!(sum < 1e-10);
    }

    #[test]
    fn coadjoint_action_is_alpha0(seed in any::<u64>(), amp in 0.0..0.5f64) {
        let m = manifold(256, amp);
        let mut r = rng(seed);
        let a = random_group_element(&m, &mut r);
        let eta = random_covector(&m, &mut r);
        let via_adjoint = coadjoint_action(&a, &eta).unwrap();
        let direct = alpha0(&a, &eta);
        prop_assert!(m.wrap_difference(via_adjoint.x - direct.x).abs() < 1e-9);
        prop_assert!((via_adjoint.p - direct.p).abs() < 1e-9 * (1.0 + direct.p.abs()));
    }

    #[test]
    fn symplectic_form_of_generators_is_the_bracket_moment(seed in any::<u64>()) {
        let m = manifold(64, 0.3);
        let mut r = rng(seed);
        let z1 = random_algebra_element(&m, &mut r);
        let z2 = random_algebra_element(&m, &mut r);
        let eta = random_covector(&m, &mut r);
        let lhs = symplectic_form(&eta, &derived_action(&z1, &eta), &derived_action(&z2, &eta));
        prop_assert!((lhs - moment_pairing(&eta, &bracket(&z1, &z2))).abs() < 1e-8);
    }

    #[test]
    fn rho_preserves_norms(seed in any::<u64>(), k in 0i32..4, amp in 0.0..0.5f64) {
        let m = manifold(256, amp);
        let mut r = rng(seed);
        let a = random_group_element(&m, &mut r);
        let psi = random_complex_field(&m, &mut r);
        let out = rho(0.5f64.powi(k), &a).unwrap().apply(&psi);
        prop_assert!((l2_norm(&out) - l2_norm(&psi)).abs() < 1e-8 * l2_norm(&psi));
    }

    #[test]
    fn fiber_fourier_round_trips(seed in any::<u64>()) {
        let m = manifold(32, 0.3);
        let grid = FiberGrid::default_grid();
        let mut r = rng(seed);
        let b = random_symbol(&m, &mut r).sample(&m, &grid);
        let back = fiber_fourier(&fiber_fourier_inv(&b).unwrap()).unwrap();
        prop_assert!(back.max_distance(&b) < 1e-9 * b.max_abs().max(1.0));
    }

    #[test]
    fn pair_convolution_is_associative(seed in any::<u64>()) {
        let m = manifold(32, 0.3);
        let mut r = rng(seed);
        let fields: Vec<_> = (0..6).map(|_| random_complex_field(&m, &mut r)).collect();
        let kernel = |u: usize| {
            let (f, g) = (&fields[2 * u], &fields[2 * u + 1]);
            L2Operator::from_kernel_fn(&m, |x, y| f.at(x) * g.at(y) + Complex64::new((x - y).cos(), 0.0))
        };
        let (k1, k2, k3) = (kernel(0), kernel(1), kernel(2));
        let left = pair_convolve(&pair_convolve(&k1, &k2), &k3);
        let right = pair_convolve(&k1, &pair_convolve(&k2, &k3));
        let scale = left.kernel().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diff = left.kernel().iter().zip(right.kernel()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-10 * scale);
    }

    #[test]
    fn induction_round_trip(seed in any::<u64>(), node in 0usize..64, k in 0i32..5) {
        let m = manifold(64, 0.3);
        let mut r = rng(seed);
        let psi = random_complex_field(&m, &mut r);
        let v = InducedVector::new(psi, m.nodes()[node], 0.5f64.powi(k)).unwrap();
        prop_assert!(descend(&v).max_distance(&v.psi) < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_power_laws(c in 0.1..10.0f64, s in 0.5..4.0f64, k0 in 1u32..4, len in 4u32..10) {
        let h: Vec<f64> = (k0..k0 + len).map(|k| 0.5f64.powi(k as i32)).collect();
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(s)).collect();
        prop_assert!((fit_slope(&h, &e) - s).abs() < 1e-9);
        let target = Complex64::new(c, -s);
        let values: Vec<Complex64> = h.iter().map(|h| target + Complex64::new(*h, 2.0 * h)).collect();
        prop_assert!((richardson(&h, &values) - target).norm() < 1e-9);
    }

    #[test]
    fn valid_configs_parse_back(
        log_n in 3u32..10,
        amplitude in 0.0..0.9f64,
        k_min in 1u32..10,
        span in 1u32..10,
        seed in any::<u64>(),
    ) {
        let text = format!(
            "[manifold]\nn = {}\namplitude = {amplitude:?}\n[semiclassics]\nk_min = {k_min}\nk_max = {}\n[run]\nseed = \"{seed}\"\n",
            1usize << log_n,
            k_min + span,
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.n, 1usize << log_n);
        prop_assert_eq!(cfg.amplitude, amplitude);
        prop_assert_eq!(cfg.h_grid().len() as u32, span + 1);
        prop_assert_eq!(cfg.seed, seed);
    }

    #[test]
    fn invalid_grid_sizes_are_rejected(n in 1usize..5000) {
        prop_assume!(!(n >= 8 && n.is_power_of_two()));
        let text = format!("[manifold]\nn = {n}\n");
        prop_assert!(ExperimentConfig::parse(&text).is_err());
    }
}
