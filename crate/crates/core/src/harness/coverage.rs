//! Which check owns which identity. Every identity appears exactly once.

use std::fmt::Write as _;

use super::Suite;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckSpec {
    pub id: &'static str,
    pub suite: Suite,
    pub anchor: &'static str,
}

const fn c(id: &'static str, suite: Suite, anchor: &'static str) -> CheckSpec {
    CheckSpec { id, suite, anchor }
}

use Suite::*;

pub const CHECKS: &[CheckSpec] = &[
    c(
        "group.associativity",
        Group,
        "semidirect product law (phi o theta, g o phi^-1 + f) is associative",
    ),
    c(
        "group.inverse",
        Group,
        "inverse (phi^-1, -f o phi) is a two-sided inverse",
    ),
    c(
        "group.exp_second_slot",
        Group,
        "exponential: second slot is the flow average of f",
    ),
    c(
        "group.one_parameter",
        Group,
        "exponential: t -> exp(tZ) is a one-parameter subgroup",
    ),
    c(
        "group.jacobi",
        Group,
        "bracket (-[X,Y], -Xg + Yf) satisfies the Jacobi identity",
    ),
    c(
        "group.adjoint_homomorphism",
        Group,
        "adjoint action is a homomorphism in the group element",
    ),
    c(
        "group.adjoint_conjugation",
        Group,
        "adjoint action formula is the derivative of conjugation",
    ),
    c(
        "group.bracket_derivative",
        Group,
        "bracket is the derivative of the adjoint action",
    ),
    c(
        "coadjoint.alpha0_agreement",
        Coadjoint,
        "coadjoint action on delta-covectors equals the cotangent action alpha0",
    ),
    c(
        "coadjoint.pairing_equivariance",
        Coadjoint,
        "moment map intertwines alpha0 with the coadjoint action",
    ),
    c(
        "coadjoint.comoment",
        Coadjoint,
        "comoment map: dH_Z equals the symplectic pairing with the generator of Z",
    ),
    c(
        "coadjoint.symplectic_pairing",
        Coadjoint,
        "symplectic form on two generators equals minus the moment of their bracket",
    ),
    c(
        "coadjoint.derived_action",
        Coadjoint,
        "infinitesimal cotangent action (X, -pX' - f')",
    ),
    c(
        "coadjoint.transitivity",
        Coadjoint,
        "the cotangent bundle is a single orbit",
    ),
    c(
        "coadjoint.separation",
        Coadjoint,
        "moment map is injective on covectors",
    ),
    c(
        "quantization.unitarity",
        Quantization,
        "rho^h is unitary on L^2(M, V_g)",
    ),
    c("quantization.homomorphism", Quantization, "rho^h is a representation"),
    c(
        "quantization.derived_representation",
        Quantization,
        "derived representation is -(2 pi i / h) times the affine quantization",
    ),
    c(
        "quantization.self_adjointness",
        Quantization,
        "affine quantization of a real element is symmetric",
    ),
    c(
        "quantization.commutator",
        Quantization,
        "derived representation preserves brackets",
    ),
    c(
        "quantization.radon_nikodym",
        Quantization,
        "Radon-Nikodym factor of the pushed-forward Riemannian measure in coordinates",
    ),
    c(
        "quantization.pointwise_form",
        Quantization,
        "lazy and dense forms of rho^h agree",
    ),
    c(
        "manifold.exp_log",
        Groupoid,
        "Riemannian exponential and logarithm are inverse inside the injectivity radius",
    ),
    c(
        "manifold.quadrature",
        Groupoid,
        "Riemannian quadrature is exact on band-limited integrands",
    ),
    c(
        "manifold.derivative_rate",
        Groupoid,
        "spectral derivative against fourth-order differences",
    ),
    c(
        "groupoid.pair_convolution",
        Groupoid,
        "pair-groupoid convolution is operator composition",
    ),
    c(
        "groupoid.haar_left_invariance",
        Groupoid,
        "Haar system of the pair groupoid is left invariant",
    ),
    c(
        "groupoid.fourier_round_trip",
        Groupoid,
        "fiberwise Fourier transform is invertible",
    ),
    c(
        "groupoid.parseval",
        Groupoid,
        "fiberwise Fourier transform is isometric for the dual fiber measures",
    ),
    c(
        "groupoid.convolution_theorem",
        Groupoid,
        "fiberwise convolution becomes pointwise multiplication of symbols",
    ),
    c(
        "groupoid.scalar_extension",
        Groupoid,
        "scalar functions on [0,1] x M extend smoothly to the tangent groupoid",
    ),
    c(
        "groupoid.diffeo_extension",
        Groupoid,
        "families of diffeomorphisms extend smoothly to the tangent groupoid",
    ),
    c(
        "groupoid.haar_continuity",
        Groupoid,
        "Haar system of the tangent groupoid is continuous in h",
    ),
    c(
        "semiclassics.trace_canonical",
        Semiclassics,
        "trace formula, exact on canonical families",
    ),
    c(
        "semiclassics.trace_perturbed",
        Semiclassics,
        "trace formula, first-order convergence on perturbed families",
    ),
    c(
        "semiclassics.character",
        Semiclassics,
        "character formula: traces against rho^h(exp(hZ)) tend to the phase-space integral of a e^{-2 pi i H_Z}",
    ),
    c(
        "semiclassics.double_centralizer",
        Semiclassics,
        "left and right multiplication by e^{-2 pi i H_Z} form a double centralizer",
    ),
    c(
        "semiclassics.centralizer_smoothness",
        Semiclassics,
        "centralizers preserve smooth families",
    ),
    c(
        "semiclassics.covariance",
        Semiclassics,
        "conjugation by rho^h deforms transport of symbols by alpha0",
    ),
    c(
        "semiclassics.transport_coherence",
        Semiclassics,
        "transport of symbols is a group action",
    ),
    c(
        "semiclassics.conjugation_homomorphism",
        Semiclassics,
        "conjugation of kernels is a group action",
    ),
    c(
        "induction.bijection",
        Induction,
        "functions equivariant under the stabilizer correspond to functions on M",
    ),
    c(
        "induction.rho_identification",
        Induction,
        "induced representation is rho^h",
    ),
    c(
        "induction.homomorphism",
        Induction,
        "left translation through the correspondence is an action",
    ),
    c(
        "induction.stabilizer",
        Induction,
        "stabilizer of a point acts by the character e^{2 pi i g(x0) / h}",
    ),
];

/// Specification of a registered check.
pub fn spec(id: &str) -> &'static CheckSpec {
    CHECKS
        .iter()
        .find(|c| c.id == id)
        .unwrap_or_else(|| panic!("check '{id}' is not registered"))
}

/// `anchor -> suite::check` lines, in registry order.
pub fn coverage_ledger() -> String {
    let mut out = String::new();
    for c in CHECKS {
        let _ = writeln!(out, "{} -> {}::{}", c.anchor, c.suite.name(), c.id);
    }
    out
}
