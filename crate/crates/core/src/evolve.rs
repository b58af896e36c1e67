//! Time integration: Stoermer-Verlet stepping with stability control,
//! energy-drift monitoring and overflow-safe approach to blow-up.

use serde::Serialize;

use crate::blowup::{g_diagnostics_from_report, AuxiliaryParams, GDiagnostics};
use crate::error::{Error, Result};
use crate::functionals::{cross_integral, functional_report, FunctionalReport};
use crate::grid::Grid;
use crate::model::{acceleration, ModelParams, PotentialPair, StateVector};

/// Time step: explicit, or derived from the linear stability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSpec {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub dt: DtSpec,
    pub t_end: f64,
    /// Fraction of the linear stability limit the step may use.
    pub cfl_safety: f64,
    /// Sup-norm level that terminates the run as detected blow-up.
    pub blowup_threshold: f64,
    /// Diagnostics cadence in steps.
    pub sample_every: usize,
    /// Relative energy-drift gate for runs without a blow-up signature.
    pub energy_drift_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: DtSpec::Auto,
            t_end: 10.0,
            cfl_safety: 0.5,
            blowup_threshold: 1e8,
            sample_every: 10,
            energy_drift_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Completed,
    BlowupDetected,
    Overflow,
    Unstable,
}

#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub report: FunctionalReport,
    pub g: GDiagnostics,
    pub sup_u: f64,
    pub sup_v: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub terminal: Terminal,
    /// The resolved time step actually used.
    pub dt: f64,
}

impl Trajectory {
    /// Time of the last consistent sample.
    pub fn t_final(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Largest relative energy deviation from the initial sample, measured
    /// against the magnitude scale of the initial energy terms.
    pub fn max_energy_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        let scale = energy_scale(&first.report);
        self.samples
            .iter()
            .fold(0.0f64, |m, s| m.max((s.report.energy - first.report.energy).abs()))
            / scale
    }
}

/// Denominator for relative drift: `|E0|` unless cancellation makes the
/// energy tiny compared to its constituent terms.
fn energy_scale(rep: &FunctionalReport) -> f64 {
    rep.energy
        .abs()
        .max(0.5 * rep.kinetic + 0.5 * rep.quadratic + rep.coupling)
        .max(f64::MIN_POSITIVE)
}

/// Largest stable step of the leapfrog scheme, `2 / omega_max` with
/// `omega_max^2 = sum_j (pi/h_j)^2 + max(m1^2, m2^2) + sup K`.
pub fn stability_limit(grid: &Grid, params: &ModelParams, pot: &PotentialPair) -> f64 {
    let k2: f64 = grid
        .spacing()
        .iter()
        .map(|&h| {
            let k = std::f64::consts::PI / h;
            k * k
        })
        .sum();
    let omega_max =
        (k2 + (params.m1() * params.m1()).max(params.m2() * params.m2()) + pot.sup()).sqrt();
    2.0 / omega_max
}

/// Resolve the configured step against the stability bound.
pub fn resolve_dt(
    config: &IntegratorConfig,
    grid: &Grid,
    params: &ModelParams,
    pot: &PotentialPair,
) -> Result<f64> {
    if !(config.cfl_safety > 0.0 && config.cfl_safety <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "cfl_safety must lie in (0, 1], got {}",
            config.cfl_safety
        )));
    }
    let cap = config.cfl_safety * stability_limit(grid, params, pot);
    match config.dt {
        DtSpec::Auto => Ok(cap),
        DtSpec::Fixed(dt) => {
            if !(dt.is_finite() && dt > 0.0) {
                Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")))
            } else if dt > cap * (1.0 + 1e-12) {
                Err(Error::InvalidConfig(format!(
                    "dt = {dt} exceeds the stability cap {cap:.6e}"
                )))
            } else {
                Ok(dt)
            }
        }
    }
}

type ScalarFieldPair = (crate::grid::ScalarField, crate::grid::ScalarField);

/// One Stoermer-Verlet step given the acceleration at the current state;
/// returns the new state and the acceleration at the new positions so a
/// caller stepping repeatedly evaluates the right-hand side once per step.
/// A `None` acceleration means the step overflowed and the returned state
/// carries the overflow flag.
fn leapfrog_inner(
    state: &StateVector,
    dt: f64,
    params: &ModelParams,
    pot: &PotentialPair,
    acc: &ScalarFieldPair,
) -> Result<(StateVector, Option<ScalarFieldPair>)> {
    let ut_half = state.ut.add_scaled(0.5 * dt, &acc.0);
    let vt_half = state.vt.add_scaled(0.5 * dt, &acc.1);
    let u_new = state.u.add_scaled(dt, &ut_half);
    let v_new = state.v.add_scaled(dt, &vt_half);
    let mut mid = StateVector {
        u: u_new,
        ut: ut_half,
        v: v_new,
        vt: vt_half,
        t: state.t + dt,
    };
    if mid.is_overflowed() {
        return Ok((mid, None));
    }
    let acc_new = acceleration(&mid, params, pot)?;
    if acc_new.0.is_overflowed() || acc_new.1.is_overflowed() {
        mid.u = mid.u.with_overflow_flag();
        return Ok((mid, None));
    }
    mid.ut = mid.ut.add_scaled(0.5 * dt, &acc_new.0);
    mid.vt = mid.vt.add_scaled(0.5 * dt, &acc_new.1);
    Ok((mid, Some(acc_new)))
}

/// One time step: half-kick, drift, recompute acceleration, half-kick.
/// Second-order accurate and time-reversible. Overflow during the step
/// yields a state flagged overflowed rather than an error.
pub fn step_leapfrog(
    state: &StateVector,
    dt: f64,
    params: &ModelParams,
    pot: &PotentialPair,
) -> Result<StateVector> {
    let acc = acceleration(state, params, pot)?;
    if acc.0.is_overflowed() || acc.1.is_overflowed() {
        let mut flagged = state.clone();
        flagged.u = flagged.u.with_overflow_flag();
        flagged.t += dt;
        return Ok(flagged);
    }
    Ok(leapfrog_inner(state, dt, params, pot, &acc)?.0)
}

/// Advance `state0` until `t_end` or a terminal condition, recording the
/// functional report, the concavity diagnostics and the sup norms every
/// `sample_every` steps. See [`simulate_with_observer`] for checkpoints.
pub fn simulate(
    state0: &StateVector,
    config: &IntegratorConfig,
    params: &ModelParams,
    pot: &PotentialPair,
    aux: Option<AuxiliaryParams>,
) -> Result<Trajectory> {
    simulate_with_observer(state0, config, params, pot, aux, |_, _, _| {})
}

/// [`simulate`] with a per-step observer `(step_index, state, sample)`,
/// called after every completed step (step 0 is the initial state). The
/// sample argument is present exactly at sampling steps, so callers can
/// stream diagnostics as the run progresses.
pub fn simulate_with_observer(
    state0: &StateVector,
    config: &IntegratorConfig,
    params: &ModelParams,
    pot: &PotentialPair,
    aux: Option<AuxiliaryParams>,
    mut observer: impl FnMut(usize, &StateVector, Option<&TrajectorySample>),
) -> Result<Trajectory> {
    if state0.is_overflowed() {
        return Err(Error::NonFinite("initial state".into()));
    }
    if !(config.t_end.is_finite() && config.t_end > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "t_end must be positive, got {}",
            config.t_end
        )));
    }
    if config.sample_every == 0 {
        return Err(Error::InvalidConfig("sample_every must be >= 1".into()));
    }
    if !(config.blowup_threshold > 0.0) {
        return Err(Error::InvalidConfig(
            "blowup_threshold must be positive".into(),
        ));
    }
    let dt = resolve_dt(config, state0.grid(), params, pot)?;
    let n_steps = ((config.t_end / dt) - 1e-9).ceil().max(1.0) as usize;

    let t0 = state0.t;
    let mut state = state0.clone();
    let mut samples = Vec::new();

    let sample_state = |samples: &mut Vec<TrajectorySample>, state: &StateVector| {
        let report = functional_report(state, params, pot);
        let cross = cross_integral(state, params);
        let g = g_diagnostics_from_report(&report, cross, state.t, aux.as_ref());
        samples.push(TrajectorySample {
            t: state.t,
            report,
            g,
            sup_u: state.u.sup_norm(),
            sup_v: state.v.sup_norm(),
        });
    };

    sample_state(&mut samples, &state);
    observer(0, &state, samples.last());
    let scale0 = energy_scale(&samples[0].report);
    let e0 = samples[0].report.energy;
    let mut gsec_prev = samples[0].g.gsecond;

    let mut acc = acceleration(&state, params, pot)?;
    if acc.0.is_overflowed() || acc.1.is_overflowed() {
        return Err(Error::NonFinite("initial acceleration".into()));
    }

    let mut terminal = Terminal::Completed;
    for step in 1..=n_steps {
        let (new_state, new_acc) = leapfrog_inner(&state, dt, params, pot, &acc)?;
        state = new_state;
        state.t = t0 + step as f64 * dt;
        let sup_u = state.u.sup_norm();
        let sup_v = state.v.sup_norm();

        if new_acc.is_none() || state.is_overflowed() || !sup_u.is_finite() || !sup_v.is_finite() {
            // Keep the previous consistent sample. If the run never even
            // crossed the threshold, the jump to non-finite values is a
            // numerical artifact, not a resolved blow-up.
            let past_threshold = samples.last().map_or(false, |s| {
                s.sup_u > config.blowup_threshold || s.sup_v > config.blowup_threshold
            });
            terminal = if past_threshold {
                Terminal::Overflow
            } else {
                Terminal::Unstable
            };
            break;
        }

        let crossing = sup_u > config.blowup_threshold || sup_v > config.blowup_threshold;
        if crossing || step % config.sample_every == 0 || step == n_steps {
            sample_state(&mut samples, &state);
            observer(step, &state, samples.last());
            let last = samples.last().expect("just pushed");
            let drift = (last.report.energy - e0).abs() / scale0;
            let blowup_signature = last.g.gsecond > 0.0 && last.g.gsecond >= gsec_prev;
            gsec_prev = last.g.gsecond;
            if crossing {
                terminal = Terminal::BlowupDetected;
                break;
            }
            if drift > config.energy_drift_tol && !blowup_signature {
                terminal = Terminal::Unstable;
                break;
            }
        } else {
            observer(step, &state, None);
        }
        acc = new_acc.expect("overflow handled above");
    }
    Ok(Trajectory {
        samples,
        terminal,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, ScalarField};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn setup_1d() -> (Arc<Grid>, ModelParams, PotentialPair) {
        let g = Grid::new(&[64], &[2.0 * std::f64::consts::PI]).unwrap();
        let prm = ModelParams::new(1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1).unwrap();
        let pot = PotentialPair::zero(&g);
        (g, prm, pot)
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let (g, prm, pot) = setup_1d();
        let s = step_leapfrog(&StateVector::zero(&g), 0.05, &prm, &pot).unwrap();
        assert_eq!(s.u.sup_norm(), 0.0);
        assert_eq!(s.ut.sup_norm(), 0.0);
        assert_relative_eq!(s.t, 0.05);
    }

    #[test]
    fn step_is_time_reversible() {
        let (g, prm, pot) = setup_1d();
        let u = ScalarField::from_fn(&g, |x| 0.3 * x[0].sin()).unwrap();
        let v = ScalarField::from_fn(&g, |x| 0.2 * (2.0 * x[0]).cos()).unwrap();
        let ut = ScalarField::from_fn(&g, |x| 0.1 * x[0].cos()).unwrap();
        let state = StateVector::new(u, ut, v.clone(), v.scaled(0.5), 0.0).unwrap();
        let fwd = step_leapfrog(&state, 0.05, &prm, &pot).unwrap();
        let back = step_leapfrog(&fwd, -0.05, &prm, &pot).unwrap();
        for (a, b) in [(&back.u, &state.u), (&back.ut, &state.ut), (&back.v, &state.v)] {
            assert!(a.add_scaled(-1.0, b).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn simulate_matches_repeated_single_steps_bitwise() {
        let (g, prm, pot) = setup_1d();
        let u = ScalarField::from_fn(&g, |x| 0.2 * x[0].sin()).unwrap();
        let state = StateVector::at_rest(u.clone(), u.scaled(0.7)).unwrap();
        let dt = 0.01;
        let mut manual = state.clone();
        for _ in 0..5 {
            manual = step_leapfrog(&manual, dt, &prm, &pot).unwrap();
        }
        let config = IntegratorConfig {
            dt: DtSpec::Fixed(dt),
            t_end: 5.0 * dt,
            sample_every: 1,
            ..Default::default()
        };
        let mut last = None;
        simulate_with_observer(&state, &config, &prm, &pot, None, |step, s, _| {
            if step == 5 {
                last = Some(s.clone());
            }
        })
        .unwrap();
        let last = last.expect("step 5 observed");
        for (a, b) in [(&last.u, &manual.u), (&last.ut, &manual.ut)] {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn small_data_run_conserves_energy() {
        let (g, prm, pot) = setup_1d();
        let u = ScalarField::from_fn(&g, |x| 1e-2 * x[0].sin()).unwrap();
        let state = StateVector::at_rest(u.clone(), u.clone()).unwrap();
        let config = IntegratorConfig {
            dt: DtSpec::Fixed(1e-3),
            t_end: 2.0,
            sample_every: 50,
            ..Default::default()
        };
        let traj = simulate(&state, &config, &prm, &pot, None).unwrap();
        assert_eq!(traj.terminal, Terminal::Completed);
        assert!(traj.max_energy_drift() < 1e-6, "{}", traj.max_energy_drift());
        assert!(traj
            .samples
            .windows(2)
            .all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn oversized_dt_is_rejected() {
        let (g, prm, pot) = setup_1d();
        let cap = 0.5 * stability_limit(&g, &prm, &pot);
        let config = IntegratorConfig {
            dt: DtSpec::Fixed(cap * 1.5),
            ..Default::default()
        };
        let state = StateVector::zero(&g);
        assert!(matches!(
            simulate(&state, &config, &prm, &pot, None),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn drift_gate_marks_unstable() {
        let (g, prm, pot) = setup_1d();
        let u = ScalarField::from_fn(&g, |x| 0.5 * x[0].sin()).unwrap();
        let state = StateVector::at_rest(u.clone(), u).unwrap();
        let config = IntegratorConfig {
            dt: DtSpec::Auto,
            cfl_safety: 1.0,
            t_end: 5.0,
            sample_every: 5,
            energy_drift_tol: 1e-12,
            ..Default::default()
        };
        let traj = simulate(&state, &config, &prm, &pot, None).unwrap();
        assert_eq!(traj.terminal, Terminal::Unstable);
    }

    #[test]
    fn large_data_crosses_blowup_threshold() {
        let (g, prm, pot) = setup_1d();
        let u = ScalarField::from_fn(&g, |x| 5.0 * (-((x[0] - 3.0) * 2.0).powi(2)).exp())
            .unwrap();
        let state = StateVector::at_rest(u.clone(), u).unwrap();
        let config = IntegratorConfig {
            dt: DtSpec::Fixed(0.01),
            t_end: 50.0,
            sample_every: 5,
            blowup_threshold: 1e4,
            ..Default::default()
        };
        let traj = simulate(&state, &config, &prm, &pot, None).unwrap();
        assert_eq!(traj.terminal, Terminal::BlowupDetected);
        let last = traj.samples.last().unwrap();
        assert!(last.sup_u > 1e4 || last.sup_v > 1e4);
        assert!(last.t < 50.0);
    }

    #[test]
    fn trajectories_are_odd_under_sign_flip() {
        let (g, prm, pot) = setup_1d();
        let u = ScalarField::from_fn(&g, |x| 0.4 * x[0].sin()).unwrap();
        let v = ScalarField::from_fn(&g, |x| 0.3 * (2.0 * x[0]).cos()).unwrap();
        let state = StateVector::at_rest(u, v).unwrap();
        let config = IntegratorConfig {
            dt: DtSpec::Fixed(0.02),
            t_end: 1.0,
            sample_every: 10,
            // Oddness is what is under test, not accuracy.
            energy_drift_tol: 1.0,
            ..Default::default()
        };
        let mut final_pos = None;
        let mut final_neg = None;
        simulate_with_observer(&state, &config, &prm, &pot, None, |step, s, _| {
            if step == 50 {
                final_pos = Some(s.clone());
            }
        })
        .unwrap();
        simulate_with_observer(&state.negated(), &config, &prm, &pot, None, |step, s, _| {
            if step == 50 {
                final_neg = Some(s.clone());
            }
        })
        .unwrap();
        let (a, b) = (final_pos.unwrap(), final_neg.unwrap());
        for (x, y) in a.u.values().iter().zip(b.u.values()) {
            assert_eq!(*x, -*y, "sign flip must be exact");
        }
    }
}
