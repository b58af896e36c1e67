//! Initial-data constructors, including the searches that realize each
//! sufficient blow-up condition on concrete grids.

use std::sync::Arc;

use anyhow::{bail, Context, Result};

use kgelab_core::{
    classify_initial_data, energy, gamma_perturbed_data, Grid, ModelParams, PotentialPair,
    ScalarField, StateVector,
};

use crate::config::{InitialBlock, InitialKind, Scenario};

/// Gaussian bump centered in the box.
pub fn centered_bump(grid: &Arc<Grid>, amplitude: f64, width: f64) -> Result<ScalarField> {
    if !(width.is_finite() && width > 0.0) {
        bail!("initial.width must be positive, got {width}");
    }
    Ok(ScalarField::from_fn(grid, |x| {
        let r2: f64 = x
            .iter()
            .zip(grid.lengths())
            .map(|(&xi, &l)| (xi - 0.5 * l) * (xi - 0.5 * l))
            .sum();
        amplitude * (-r2 / (width * width)).exp()
    })?)
}

fn rest_pair(u0: ScalarField, v0: ScalarField, vel_scale: f64) -> Result<StateVector> {
    let ut = u0.scaled(vel_scale);
    let vt = v0.scaled(vel_scale);
    Ok(StateVector::new(u0, ut, v0, vt, 0.0)?)
}

/// Build the configured initial data on the scenario grid.
pub fn build_initial_state(scn: &Scenario) -> Result<StateVector> {
    let init = &scn.config.initial;
    let grid = &scn.grid;
    match init.kind {
        InitialKind::GaussianBumps => {
            let u0 = centered_bump(grid, init.amplitude_u, init.width)?;
            let v0 = centered_bump(grid, init.amplitude_v, init.width)?;
            rest_pair(u0, v0, init.velocity_scale)
        }
        InitialKind::GammaPerturbed => {
            let gamma = init
                .gamma
                .context("initial.gamma is required for kind = \"gamma_perturbed\"")?;
            let phi_path = init
                .phi_file
                .as_ref()
                .context("initial.phi_file is required for kind = \"gamma_perturbed\"")?;
            let psi_path = init
                .psi_file
                .as_ref()
                .context("initial.psi_file is required for kind = \"gamma_perturbed\"")?;
            let phi = crate::config::load_field_on(grid, phi_path)?;
            let psi = crate::config::load_field_on(grid, psi_path)?;
            Ok(gamma_perturbed_data(&phi, &psi, gamma)?)
        }
        InitialKind::File => {
            let u_path = init
                .u_file
                .as_ref()
                .context("initial.u_file is required for kind = \"file\"")?;
            let v_path = init
                .v_file
                .as_ref()
                .context("initial.v_file is required for kind = \"file\"")?;
            let u0 = crate::config::load_field_on(grid, u_path)?;
            let v0 = crate::config::load_field_on(grid, v_path)?;
            let ut = match &init.ut_file {
                Some(p) => crate::config::load_field_on(grid, p)?,
                None => ScalarField::zeros(grid),
            };
            let vt = match &init.vt_file {
                Some(p) => crate::config::load_field_on(grid, p)?,
                None => ScalarField::zeros(grid),
            };
            Ok(StateVector::new(u0, ut, v0, vt, 0.0)?)
        }
        InitialKind::NegativeEnergyConstruct => {
            negative_energy_data(grid, &scn.params, &scn.pot, init)
        }
        InitialKind::ZeroEnergyConstruct => zero_energy_data(grid, &scn.params, &scn.pot, init),
        InitialKind::Thm61Construct => thm61_data(grid, &scn.params, &scn.pot, init),
    }
}

/// Scale the bump amplitude upward until `E(0) < 0`; the coupling integral
/// grows faster than the quadratic form, so this always terminates.
pub fn negative_energy_data(
    grid: &Arc<Grid>,
    params: &ModelParams,
    pot: &PotentialPair,
    init: &InitialBlock,
) -> Result<StateVector> {
    let mut amp = init.amplitude_u.abs().max(1e-3);
    for _ in 0..200 {
        let bump = centered_bump(grid, amp, init.width)?;
        let state = StateVector::at_rest(bump.clone(), bump)?;
        if energy(&state, params, pot) < 0.0 {
            return Ok(state);
        }
        amp *= 2.0;
    }
    bail!("negative-energy construction failed to cross E(0) < 0");
}

/// Bisect the amplitude between the last positive-energy and the first
/// negative-energy bump until `|E(0)|` is at the roundoff scale of the
/// energy terms; rest data, so the mixed term vanishes exactly.
pub fn zero_energy_data(
    grid: &Arc<Grid>,
    params: &ModelParams,
    pot: &PotentialPair,
    init: &InitialBlock,
) -> Result<StateVector> {
    let mut lo = init.amplitude_u.abs().max(1e-3);
    let mut hi = lo;
    for _ in 0..200 {
        let bump = centered_bump(grid, hi, init.width)?;
        let state = StateVector::at_rest(bump.clone(), bump)?;
        if energy(&state, params, pot) < 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let scale_at = |amp: f64| -> Result<(f64, f64)> {
        let bump = centered_bump(grid, amp, init.width)?;
        let state = StateVector::at_rest(bump.clone(), bump)?;
        let rep = kgelab_core::functional_report(&state, params, pot);
        let scale = 0.5 * rep.quadratic + params.a2prime() * rep.coupling;
        Ok((rep.energy, scale))
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (e, scale) = scale_at(mid)?;
        if e.abs() <= 1e-12 * scale {
            let bump = centered_bump(grid, mid, init.width)?;
            return Ok(StateVector::at_rest(bump.clone(), bump)?);
        }
        if e < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi == lo || 0.5 * (lo + hi) == lo || 0.5 * (lo + hi) == hi {
            break;
        }
    }
    // Bisection exhausted f64 resolution; take the midpoint, which is as
    // close to the zero-energy surface as the grid allows.
    let mid = 0.5 * (lo + hi);
    let (e, scale) = scale_at(mid)?;
    if e.abs() <= 1e-9 * scale {
        let bump = centered_bump(grid, mid, init.width)?;
        return Ok(StateVector::at_rest(bump.clone(), bump)?);
    }
    bail!("zero-energy bisection stalled at E(0) = {e:.3e} (scale {scale:.3e})");
}

/// Data with arbitrarily positive energy satisfying all four blow-up
/// conditions: pick the amplitude from the coupling/quadratic ratio so
/// `I < 0 < E`, give it a small outward velocity so the mixed term is
/// strictly positive, and verify the norm threshold; wider bumps are
/// tried if the window is empty.
pub fn thm61_data(
    grid: &Arc<Grid>,
    params: &ModelParams,
    pot: &PotentialPair,
    init: &InitialBlock,
) -> Result<StateVector> {
    let s = params.p() + params.q();
    let vel = if init.velocity_scale > 0.0 {
        init.velocity_scale
    } else {
        1e-3
    };
    let mut width = init.width;
    for _ in 0..6 {
        let bump = centered_bump(grid, 1.0, width)?;
        let (q1, n1) = kgelab_core::q_and_n(&bump, &bump, params, pot);
        if n1 > 0.0 {
            // The coupling fraction r = a2' N / Q must exceed 1/(p+q+2)
            // for I < 0 and stay below 1/2 for E > 0.
            for ratio in [0.30f64, 0.35, 0.40, 0.45, 0.48] {
                if ratio <= 1.0 / (s + 2.0) {
                    continue;
                }
                let amp = (ratio * q1 / (params.a2prime() * n1)).powf(1.0 / s);
                let u0 = bump.scaled(amp);
                let state = rest_pair(u0.clone(), u0, vel)?;
                let rep = classify_initial_data(&state, params, pot, None);
                if rep.verdict_thm61.holds() {
                    return Ok(state);
                }
            }
        }
        width *= 1.5;
    }
    bail!("positive-energy construction found no amplitude/width window; \
           try different masses or a larger box");
}
