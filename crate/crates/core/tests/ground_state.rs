//! The closed-form oracle for the symmetric one-dimensional reduction and
//! the variational properties of the computed minimizer.
//!
//! With p = q = 1, m1 = m2 = m, a1 = a2 = a and no potential, equal
//! components reduce the static system to `-phi'' + m^2 phi = a phi^3`,
//! solved by `A sech(m x)` with `A^2 = 2 m^2 / a`. This closed form is
//! verified by substitution before the minimizer is trusted against it.

mod common;

use kgelab_core::{
    acceleration, action, el_residual, gaussian_seed, minimize_ground_state, nehari,
    nehari_scale, Grid, GroundStateOpts, ModelParams, PotentialPair, ScalarField, StateVector,
};

fn sech_pair(grid: &std::sync::Arc<Grid>, m: f64, a: f64) -> ScalarField {
    let amp = (2.0 * m * m / a).sqrt();
    let center = grid.lengths()[0] / 2.0;
    ScalarField::from_fn(grid, |x| amp / (m * (x[0] - center)).cosh()).unwrap()
}

#[test]
fn closed_form_solves_static_system_by_substitution() {
    // The box must be large enough that the sech tail (~exp(-m L/2)) is
    // below the target residual at the periodic seam.
    for &(m, a) in &[(1.0f64, 2.0f64), (1.5, 2.0), (1.0, 0.5)] {
        let grid = Grid::new(&[4096], &[60.0]).unwrap();
        let prm = ModelParams::relaxed_exponents(m, m, a, a, 1.0, 1.0, 1).unwrap();
        let pot = PotentialPair::zero(&grid);
        let phi = sech_pair(&grid, m, a);
        let res = el_residual(&phi, &phi, &prm, &pot).unwrap();
        assert!(
            res < 1e-8,
            "sech substitution residual {res:.3e} for m={m}, a={a}"
        );
    }
}

#[test]
fn minimizer_recovers_sech_profile() {
    let grid = Grid::new(&[512], &[40.0]).unwrap();
    let prm = ModelParams::relaxed_exponents(1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 1).unwrap();
    let pot = PotentialPair::zero(&grid);
    let opts = GroundStateOpts {
        outside_theorem_range: true,
        ..Default::default()
    };
    let result = minimize_ground_state(gaussian_seed(&grid), &prm, &pot, &opts).unwrap();
    assert!(result.converged, "residual stalled at {}", result.residual);
    assert!(result.residual < 1e-6);
    assert!(result.d > 0.0);

    let exact = sech_pair(&grid, 1.0, 2.0);
    let err_phi = result.phi.add_scaled(-1.0, &exact).sup_norm();
    let err_psi = result.psi.add_scaled(-1.0, &exact).sup_norm();
    assert!(err_phi < 1e-3, "|Phi - sech| = {err_phi:.3e}");
    assert!(err_psi < 1e-3, "|Psi - sech| = {err_psi:.3e}");

    // Level consistency and manifold membership.
    let d_direct = action(&result.phi, &result.psi, &prm, &pot);
    assert!((result.d - d_direct).abs() <= 1e-12 * d_direct.abs().max(1.0));
    let (q, _) = kgelab_core::q_and_n(&result.phi, &result.psi, &prm, &pot);
    assert!(nehari(&result.phi, &result.psi, &prm, &pot).abs() < 1e-10 * q);

    // The static pair is an equilibrium of the dynamics.
    let state = StateVector::at_rest(result.phi.clone(), result.psi.clone()).unwrap();
    let (au, av) = acceleration(&state, &prm, &pot).unwrap();
    let scale = 1.0 + result.phi.sup_norm() + result.psi.sup_norm();
    assert!(au.sup_norm() / scale < 1e-6);
    assert!(av.sup_norm() / scale < 1e-6);

    // Sign pattern along the ray through the minimizer.
    for (lam, expect_positive) in [(0.5, true), (2.0, false)] {
        let i = nehari(
            &result.phi.scaled(lam),
            &result.psi.scaled(lam),
            &prm,
            &pot,
        );
        assert_eq!(
            i > 0.0,
            expect_positive,
            "I(lambda Phi) at lambda={lam} has wrong sign: {i:.3e}"
        );
    }
    assert!(
        (nehari_scale(&result.phi, &result.psi, &prm, &pot).unwrap() - 1.0).abs() < 1e-10
    );

    // Ray maximality of the action at the projection.
    for lam in [0.25, 0.5, 2.0, 4.0] {
        let j = action(&result.phi.scaled(lam), &result.psi.scaled(lam), &prm, &pot);
        assert!(
            j <= result.d + 1e-12 * result.d,
            "J along the ray exceeds the level at lambda={lam}: {j} vs {}",
            result.d
        );
    }
}

#[test]
fn residual_of_perturbed_solution_decreases_under_one_step() {
    let grid = Grid::new(&[256], &[40.0]).unwrap();
    let prm = ModelParams::relaxed_exponents(1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 1).unwrap();
    let pot = PotentialPair::zero(&grid);
    let wobble = ScalarField::from_fn(&grid, |x| {
        1e-2 * (2.0 * std::f64::consts::PI * 3.0 * x[0] / 40.0).cos()
    })
    .unwrap();
    let phi = sech_pair(&grid, 1.0, 2.0).add_scaled(1.0, &wobble);
    let before = el_residual(&phi, &phi, &prm, &pot).unwrap();
    assert!(before > 0.0);
    let opts = GroundStateOpts {
        max_iters: 1,
        outside_theorem_range: true,
        tol_residual: 1e-15,
        ..Default::default()
    };
    let stepped = minimize_ground_state((phi.clone(), phi), &prm, &pot, &opts).unwrap();
    let after = el_residual(&stepped.phi, &stepped.psi, &prm, &pot).unwrap();
    assert!(
        after < before,
        "one descent step should reduce the residual: {before:.3e} -> {after:.3e}"
    );
}
