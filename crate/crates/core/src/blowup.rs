//! Sufficient-condition checks for finite-time blow-up and global
//! existence, the auxiliary convexity function `G`, and evidence-based
//! certification of blow-up from a simulated trajectory.
//!
//! With `l2w = alpha |u|_2^2 + |v|_2^2`, `cross = integral(alpha u u_t + v v_t)`
//! and optional parameters `b, T1 > 0`,
//!
//! ```text
//! G   = l2w + b (t + T1)^2
//! G'  = 2 cross + 2 b (t + T1)
//! G'' = 2 kinetic - 2 I + 2 b
//! ```
//!
//! all evaluated analytically from the state; no numerical
//! differentiation is involved. Certification never claims a proof: a
//! positive report reads "consistent with finite-time blow-up".

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{Terminal, Trajectory};
use crate::functionals::{cross_integral, functional_report, FunctionalReport};
use crate::grid::ScalarField;
use crate::model::{ModelParams, PotentialPair, StateVector};

/// Tolerance scale for the concavity check on `H = G^{-(p+q)/4}`:
/// second differences may exceed zero by at most this fraction of `|H|`.
pub const H_CONCAVITY_TOL: f64 = 1e-8;

/// Margin used when picking `T1` so that `G'(0)` is strictly positive.
const GPRIME_MARGIN: f64 = 1e-6;

/// The weights `b`, `T1` of the quadratic term of `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxiliaryParams {
    pub b: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GDiagnostics {
    pub g: f64,
    pub gprime: f64,
    pub gsecond: f64,
}

/// Assemble the `G` diagnostics from an existing functional report; the
/// single assembly path shared by [`g_diagnostics`] and the integrator's
/// sampling loop.
pub fn g_diagnostics_from_report(
    report: &FunctionalReport,
    cross: f64,
    t: f64,
    aux: Option<&AuxiliaryParams>,
) -> GDiagnostics {
    let (b, shift) = match aux {
        Some(a) => (a.b, t + a.t1),
        None => (0.0, 0.0),
    };
    GDiagnostics {
        g: report.l2_weighted + b * shift * shift,
        gprime: 2.0 * cross + 2.0 * b * shift,
        gsecond: 2.0 * report.kinetic - 2.0 * report.nehari + 2.0 * b,
    }
}

/// `G`, `G'`, `G''` of a state at time `t`, including the `b (t+T1)^2`
/// terms when `aux` is present.
pub fn g_diagnostics(
    state: &StateVector,
    t: f64,
    aux: Option<&AuxiliaryParams>,
    params: &ModelParams,
    pot: &PotentialPair,
) -> GDiagnostics {
    let report = functional_report(state, params, pot);
    let cross = cross_integral(state, params);
    g_diagnostics_from_report(&report, cross, t, aux)
}

/// Scaled ground-state data `(gamma Phi, 0, gamma Psi, 0)`; the classical
/// instability construction requires `gamma > 1`.
pub fn gamma_perturbed_data(
    phi: &ScalarField,
    psi: &ScalarField,
    gamma: f64,
) -> Result<StateVector> {
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    StateVector::at_rest(phi.scaled(gamma), psi.scaled(gamma))
}

/// Choose `(b, T1)` for the targeted regime.
///
/// For `E(0) < 0` the sharpest admissible weight is `b = -2 E(0)`, with
/// `T1` minimal such that `G'(0) > 0`. Otherwise a two-pass fixed point
/// picks `b` as half the coercivity slack
/// `(p+q) min(m1^2, m2^2) G(0) - 2(p+q+2) E(0)` over `(p+q+2)`, with the
/// second pass re-evaluating `G(0)` at the chosen weights and verifying
/// both inequalities strictly.
pub fn choose_aux_params(
    state0: &StateVector,
    e0: f64,
    params: &ModelParams,
) -> Result<AuxiliaryParams> {
    let cross0 = cross_integral(state0, params);
    let l2w0 = crate::functionals::weighted_l2(&state0.u, &state0.v, params);
    if !(l2w0.is_finite() && cross0.is_finite() && e0.is_finite()) {
        return Err(Error::AuxInapplicable("non-finite initial data".into()));
    }
    let s = params.p() + params.q();

    if e0 < 0.0 {
        let b = -2.0 * e0;
        let t1 = 1.0f64.max((GPRIME_MARGIN - cross0) / b);
        return Ok(AuxiliaryParams { b, t1 });
    }

    let msq = params.min_mass_sq();
    let slack0 = s * msq * l2w0 - 2.0 * (s + 2.0) * e0;
    if slack0 <= 0.0 {
        return Err(Error::AuxInapplicable(format!(
            "coercivity slack {slack0:.3e} is not positive; no admissible b exists"
        )));
    }
    let b0 = 0.5 * slack0 / (s + 2.0);
    let t1 = 1.0f64.max((GPRIME_MARGIN - cross0) / b0);
    // Second pass: G(0) grows once the quadratic term is included, which
    // only widens the slack.
    let g0 = l2w0 + b0 * t1 * t1;
    let slack1 = s * msq * g0 - 2.0 * (s + 2.0) * e0;
    let b = 0.5 * slack1 / (s + 2.0);
    let aux = AuxiliaryParams { b, t1 };
    let g0_final = l2w0 + b * t1 * t1;
    let coercive = s * msq * g0_final - 2.0 * (s + 2.0) * e0 - (s + 2.0) * b;
    let gprime0 = 2.0 * cross0 + 2.0 * b * t1;
    if !(coercive > 0.0 && gprime0 > 0.0) {
        return Err(Error::AuxInapplicable(format!(
            "verification pass failed: coercivity margin {coercive:.3e}, G'(0) = {gprime0:.3e}"
        )));
    }
    Ok(aux)
}

/// Upper bound `4 G(0) / ((p+q) G'(0))` on the blow-up time.
pub fn tmax_bound(g0: f64, gprime0: f64, params: &ModelParams) -> Result<f64> {
    if !(g0 > 0.0) {
        return Err(Error::BoundInapplicable(format!("G(0) = {g0} must be positive")));
    }
    if !(gprime0 > 0.0) {
        return Err(Error::BoundInapplicable(format!(
            "G'(0) = {gprime0} must be positive for the concavity argument"
        )));
    }
    Ok(4.0 * g0 / ((params.p() + params.q()) * gprime0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Unknown,
}

impl Verdict {
    fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}

/// Hypothesis checks of every sufficient condition for one set of initial
/// data. All inequalities are strict, exactly as stated; the conditions
/// are sufficient only, so failures are reported, never extrapolated.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "I0")]
    pub i0: f64,
    pub cross0: f64,
    pub l2w0: f64,
    /// Norm threshold `2(p+q+2) E(0) / (min(m1^2, m2^2) (p+q))` of the
    /// positive-energy criterion.
    pub threshold6: f64,
    /// Low-energy blow-up: `E(0) < d` and `I(u0, v0) < 0`.
    pub verdict_thm41: Verdict,
    /// Non-positive energy blow-up: `E(0) < 0`, or `E(0) = 0` (within
    /// tolerance) with `cross0 >= 0` and nonzero data.
    pub verdict_thm51: Verdict,
    /// Arbitrary positive-energy blow-up: all four conditions.
    pub verdict_thm61: Verdict,
    /// Global existence region: `E(0) < d` and `I(u0, v0) > 0`.
    pub verdict_gamma2: Verdict,
    pub tmax_bound: Option<f64>,
    pub d_used: Option<f64>,
    /// Whether replacing `min(m1^2, m2^2)` by `min(|m1|, |m2|)` in the
    /// coercivity inequalities changes any applicability answer.
    pub mass_rule_sensitive: bool,
}

/// Evaluate every theorem hypothesis on the initial data. `d` enables the
/// level-based verdicts; without it those are reported `Unknown`.
pub fn classify_initial_data(
    state0: &StateVector,
    params: &ModelParams,
    pot: &PotentialPair,
    d: Option<f64>,
) -> ClassificationReport {
    let rep = functional_report(state0, params, pot);
    let cross0 = cross_integral(state0, params);
    let e0 = rep.energy;
    let i0 = rep.nehari;
    let l2w0 = rep.l2_weighted;
    let s = params.p() + params.q();
    let msq = params.min_mass_sq();
    let threshold6 = 2.0 * (s + 2.0) * e0 / (msq * s);

    if rep.overflowed {
        return ClassificationReport {
            e0,
            i0,
            cross0,
            l2w0,
            threshold6,
            verdict_thm41: Verdict::Unknown,
            verdict_thm51: Verdict::Unknown,
            verdict_thm61: Verdict::Unknown,
            verdict_gamma2: Verdict::Unknown,
            tmax_bound: None,
            d_used: d,
            mass_rule_sensitive: false,
        };
    }

    let nonzero = l2w0 > 0.0;
    // Exact-zero energy is measure-zero in floats; the zero-energy branch
    // triggers within a tolerance tied to the size of the energy terms.
    let zero_tol = 1e-12
        * (0.5 * rep.kinetic + 0.5 * rep.quadratic + params.a2prime() * rep.coupling)
            .max(f64::MIN_POSITIVE);

    let verdict_thm41 = match d {
        Some(d) => Verdict::from_bool(e0 < d && i0 < 0.0),
        None => Verdict::Unknown,
    };
    let verdict_thm51 = Verdict::from_bool(
        e0 < 0.0 || (e0.abs() <= zero_tol && cross0 >= 0.0 && nonzero),
    );
    let thm61_conditions =
        |mass: f64| e0 > 0.0 && i0 < 0.0 && cross0 >= 0.0 && l2w0 > 2.0 * (s + 2.0) * e0 / (mass * s);
    let verdict_thm61 = Verdict::from_bool(thm61_conditions(msq));
    let verdict_gamma2 = match d {
        Some(d) => Verdict::from_bool(e0 < d && i0 > 0.0),
        None => Verdict::Unknown,
    };

    // Flag parameter sets where the two mass conventions disagree, either
    // on the positive-energy threshold or on aux-parameter applicability.
    let m_abs = params.m1().abs().min(params.m2().abs());
    let mut mass_rule_sensitive =
        e0 > 0.0 && thm61_conditions(msq) != thm61_conditions(m_abs);
    if e0 >= 0.0 {
        let slack_sq = s * msq * l2w0 - 2.0 * (s + 2.0) * e0;
        let slack_abs = s * m_abs * l2w0 - 2.0 * (s + 2.0) * e0;
        mass_rule_sensitive |= (slack_sq > 0.0) != (slack_abs > 0.0);
    }

    let any_blowup =
        verdict_thm41.holds() || verdict_thm51.holds() || verdict_thm61.holds();
    let bound = if any_blowup {
        match choose_aux_params(state0, e0, params) {
            Ok(aux) => {
                let g0 = l2w0 + aux.b * aux.t1 * aux.t1;
                let gp0 = 2.0 * cross0 + 2.0 * aux.b * aux.t1;
                tmax_bound(g0, gp0, params).ok()
            }
            Err(_) if cross0 > 0.0 && l2w0 > 0.0 => {
                tmax_bound(l2w0, 2.0 * cross0, params).ok()
            }
            Err(_) => None,
        }
    } else {
        None
    };

    ClassificationReport {
        e0,
        i0,
        cross0,
        l2w0,
        threshold6,
        verdict_thm41,
        verdict_thm51,
        verdict_thm61,
        verdict_gamma2,
        tmax_bound: bound,
        d_used: d,
        mass_rule_sensitive,
    }
}

/// Evidence gathered from a trajectory about finite-time blow-up.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub terminal: Terminal,
    /// Sampled `G` strictly increasing over the tail window.
    pub monotone_g_tail: bool,
    /// Sampled `G''` positive over the tail window.
    pub gsecond_positive_tail: bool,
    /// `H = G^{-(p+q)/4}` decreasing with nonpositive (within tolerance)
    /// second differences over the tail.
    pub h_concave_decreasing: bool,
    /// Secant extrapolation of the root of `H` from the tail endpoints.
    pub blowup_time_estimate: Option<f64>,
    pub terminated_by_threshold: bool,
    /// All of the above together; evidence, not a proof.
    pub consistent_with_blowup: bool,
    pub tail_samples: usize,
}

/// Inspect the tail of a trajectory for the blow-up signature: growing
/// convex `G`, concave decreasing `H = G^{-(p+q)/4}`, and termination by
/// threshold crossing. Unstable runs are numerical artifacts and are
/// rejected rather than certified.
pub fn detect_blowup(traj: &Trajectory, params: &ModelParams) -> Result<DetectionReport> {
    if traj.samples.len() < 10 {
        return Err(Error::TooFewSamples(traj.samples.len()));
    }
    if traj.terminal == Terminal::Unstable {
        return Err(Error::UnstableTrajectory);
    }
    let n = traj.samples.len();
    let tail_len = 5usize.max(n.div_ceil(10)).min(n);
    let tail = &traj.samples[n - tail_len..];

    let exponent = -(params.p() + params.q()) / 4.0;
    let h: Vec<f64> = tail.iter().map(|s| s.g.g.powf(exponent)).collect();
    let t: Vec<f64> = tail.iter().map(|s| s.t).collect();

    let monotone_g_tail = tail.windows(2).all(|w| w[1].g.g > w[0].g.g);
    let gsecond_positive_tail = tail.iter().all(|s| s.g.gsecond > 0.0);

    let mut h_decreasing = true;
    for w in h.windows(2) {
        h_decreasing &= w[1] < w[0] && w[1].is_finite();
    }
    // Normalized second difference: equals the plain second difference for
    // uniform sampling, and scales like H'' * (mean spacing)^2 otherwise.
    let mut h_concave = true;
    for i in 1..h.len() - 1 {
        let dt_l = t[i] - t[i - 1];
        let dt_r = t[i + 1] - t[i];
        if dt_l <= 0.0 || dt_r <= 0.0 {
            h_concave = false;
            break;
        }
        let half_span = 0.5 * (t[i + 1] - t[i - 1]);
        let second = 2.0 * ((h[i + 1] - h[i]) / dt_r - (h[i] - h[i - 1]) / dt_l) / (dt_l + dt_r)
            * half_span
            * half_span;
        if !(second <= H_CONCAVITY_TOL * h[i].abs()) {
            h_concave = false;
            break;
        }
    }
    let h_concave_decreasing = h_decreasing && h_concave;

    let (h_first, h_last) = (h[0], h[h.len() - 1]);
    let blowup_time_estimate = if h_first > h_last && h_last > 0.0 && h_first.is_finite() {
        let slope = (h_last - h_first) / (t[t.len() - 1] - t[0]);
        Some(t[t.len() - 1] - h_last / slope)
    } else {
        None
    };

    let terminated_by_threshold =
        matches!(traj.terminal, Terminal::BlowupDetected | Terminal::Overflow);
    let consistent_with_blowup = monotone_g_tail
        && gsecond_positive_tail
        && h_concave_decreasing
        && terminated_by_threshold
        && blowup_time_estimate.is_some();

    Ok(DetectionReport {
        terminal: traj.terminal,
        monotone_g_tail,
        gsecond_positive_tail,
        h_concave_decreasing,
        blowup_time_estimate,
        terminated_by_threshold,
        consistent_with_blowup,
        tail_samples: tail_len,
    })
}
