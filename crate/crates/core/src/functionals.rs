//! The scalar functionals every statement about the dynamics is made in.
//!
//! With `Q` the weighted quadratic form and `N` the coupling integral,
//!
//! ```text
//! Q = integral( alpha(|grad u|^2 + m1^2 u^2 + K1 u^2)
//!             +       |grad v|^2 + m2^2 v^2 + K2 v^2 ) dx
//! N = integral |u|^{p+1} |v|^{q+1} dx
//! ```
//!
//! the action is `J = Q/2 - a2' N`, the Nehari functional is
//! `I = Q - (p+q+2) a2' N`, and the conserved energy of a state is
//! `E = kinetic/2 + Q/2 - a2' N`. `Q` and `N` are computed once per
//! report and everything else is assembled from them; tests recompute
//! them through an independent quadrature route.

use serde::Serialize;

use crate::grid::{compensated_sum, ScalarField};
use crate::model::{Exponent, ModelParams, PotentialPair, StateVector};

/// Every functional of one state, as one record.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FunctionalReport {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "J")]
    pub action: f64,
    #[serde(rename = "I")]
    pub nehari: f64,
    #[serde(rename = "Q")]
    pub quadratic: f64,
    #[serde(rename = "N")]
    pub coupling: f64,
    pub kinetic: f64,
    pub l2_weighted: f64,
    pub h1k_u: f64,
    pub h1k_v: f64,
    pub overflowed: bool,
}

impl FunctionalReport {
    fn sentinel() -> FunctionalReport {
        FunctionalReport {
            energy: f64::INFINITY,
            action: f64::INFINITY,
            nehari: f64::INFINITY,
            quadratic: f64::INFINITY,
            coupling: f64::INFINITY,
            kinetic: f64::INFINITY,
            l2_weighted: f64::INFINITY,
            h1k_u: f64::INFINITY,
            h1k_v: f64::INFINITY,
            overflowed: true,
        }
    }
}

/// Squared energy-space norm `|grad f|^2 + m^2 |f|^2 + integral K |f|^2`.
pub fn h1k_norm_sq(f: &ScalarField, mass: f64, k: &ScalarField) -> f64 {
    f.gradient_norm_sq() + mass * mass * f.l2_norm_sq() + f.weighted_l2_sq(k)
}

/// The quadratic form `Q` of a pair of fields.
pub fn quadratic_form(
    phi: &ScalarField,
    psi: &ScalarField,
    params: &ModelParams,
    pot: &PotentialPair,
) -> f64 {
    params.alpha() * h1k_norm_sq(phi, params.m1(), pot.k1())
        + h1k_norm_sq(psi, params.m2(), pot.k2())
}

/// The coupling integral `N`. Returns `+inf` if the pointwise powers
/// overflow or an input is flagged.
pub fn coupling_integral(phi: &ScalarField, psi: &ScalarField, params: &ModelParams) -> f64 {
    if phi.is_overflowed() || psi.is_overflowed() {
        return f64::INFINITY;
    }
    let pw_p1 = Exponent::new(params.p() + 1.0);
    let pw_q1 = Exponent::new(params.q() + 1.0);
    let mut terms = Vec::with_capacity(phi.values().len());
    let mut finite = true;
    for (&a, &b) in phi.values().iter().zip(psi.values()) {
        let t = pw_p1.abs_pow(a) * pw_q1.abs_pow(b);
        finite &= t.is_finite();
        terms.push(t);
    }
    if !finite {
        return f64::INFINITY;
    }
    phi.grid().cell_volume() * compensated_sum(terms.into_iter())
}

/// `Q` and `N` in one call; the pair every ray-scaling quantity needs.
pub fn q_and_n(
    phi: &ScalarField,
    psi: &ScalarField,
    params: &ModelParams,
    pot: &PotentialPair,
) -> (f64, f64) {
    (
        quadratic_form(phi, psi, params, pot),
        coupling_integral(phi, psi, params),
    )
}

/// `integral (alpha |u_t|^2 + |v_t|^2) dx` (not halved).
pub fn kinetic_integral(state: &StateVector, params: &ModelParams) -> f64 {
    params.alpha() * state.ut.l2_norm_sq() + state.vt.l2_norm_sq()
}

/// `alpha |u|_2^2 + |v|_2^2`, the weighted norm blow-up is stated in.
pub fn weighted_l2(u: &ScalarField, v: &ScalarField, params: &ModelParams) -> f64 {
    params.alpha() * u.l2_norm_sq() + v.l2_norm_sq()
}

/// `integral (alpha u u_t + v v_t) dx`, the mixed term of `G'`.
pub fn cross_integral(state: &StateVector, params: &ModelParams) -> f64 {
    params.alpha() * state.u.dot_integral(&state.ut) + state.v.dot_integral(&state.vt)
}

/// Action `J(phi, psi) = Q/2 - a2' N` of a static pair.
pub fn action(
    phi: &ScalarField,
    psi: &ScalarField,
    params: &ModelParams,
    pot: &PotentialPair,
) -> f64 {
    let (q, n) = q_and_n(phi, psi, params, pot);
    0.5 * q - params.a2prime() * n
}

/// Nehari functional `I(phi, psi) = Q - (p+q+2) a2' N`.
pub fn nehari(
    phi: &ScalarField,
    psi: &ScalarField,
    params: &ModelParams,
    pot: &PotentialPair,
) -> f64 {
    let (q, n) = q_and_n(phi, psi, params, pot);
    q - (params.p() + params.q() + 2.0) * params.a2prime() * n
}

/// Total energy of a state. Shares the assembly path of
/// [`functional_report`], so the two agree bit for bit.
pub fn energy(state: &StateVector, params: &ModelParams, pot: &PotentialPair) -> f64 {
    functional_report(state, params, pot).energy
}

/// Evaluate every functional of `state` once.
pub fn functional_report(
    state: &StateVector,
    params: &ModelParams,
    pot: &PotentialPair,
) -> FunctionalReport {
    if state.is_overflowed() {
        return FunctionalReport::sentinel();
    }
    let h1k_u = h1k_norm_sq(&state.u, params.m1(), pot.k1());
    let h1k_v = h1k_norm_sq(&state.v, params.m2(), pot.k2());
    let quadratic = params.alpha() * h1k_u + h1k_v;
    let coupling = coupling_integral(&state.u, &state.v, params);
    let kinetic = kinetic_integral(state, params);
    let l2_weighted = weighted_l2(&state.u, &state.v, params);
    if !(quadratic.is_finite() && coupling.is_finite() && kinetic.is_finite()) {
        return FunctionalReport::sentinel();
    }
    let a2n = params.a2prime() * coupling;
    FunctionalReport {
        energy: 0.5 * kinetic + 0.5 * quadratic - a2n,
        action: 0.5 * quadratic - a2n,
        nehari: quadratic - (params.p() + params.q() + 2.0) * a2n,
        quadratic,
        coupling,
        kinetic,
        l2_weighted,
        h1k_u,
        h1k_v,
        overflowed: false,
    }
}
