//! Cross-module identities: the functional assembly against an
//! independent quadrature route, the ray-derivative identity, and
//! property-based checks of the spectral calculus.

mod common;

use common::smooth_noise;
use kgelab_core::{
    action, functional_report, nehari, nehari_scale, q_and_n, Grid, ModelParams, PotentialPair,
    ScalarField, StateVector,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Quadratic form recomputed through derivative fields and pointwise
/// quadrature instead of the Parseval route used by the library.
fn quadratic_form_direct(
    phi: &ScalarField,
    psi: &ScalarField,
    prm: &ModelParams,
    pot: &PotentialPair,
) -> f64 {
    let grad_sq = |f: &ScalarField| -> f64 {
        (0..f.grid().dim())
            .map(|a| f.derivative(a).unwrap().l2_norm_sq())
            .sum()
    };
    let part = |f: &ScalarField, m: f64, k: &ScalarField| {
        grad_sq(f) + m * m * f.l2_norm_sq() + f.weighted_l2_sq(k)
    };
    prm.alpha() * part(phi, prm.m1(), pot.k1()) + part(psi, prm.m2(), pot.k2())
}

fn coupling_direct(phi: &ScalarField, psi: &ScalarField, prm: &ModelParams) -> f64 {
    let integrand = phi.zip_map(psi, |a, b| {
        a.abs().powf(prm.p() + 1.0) * b.abs().powf(prm.q() + 1.0)
    });
    integrand.integrate()
}

#[test]
fn report_identities_against_direct_quadrature() {
    let grid = Grid::new(&[48, 32], &[9.0, 6.0]).unwrap();
    let prm = ModelParams::new(1.2, 0.7, 0.9, 1.6, 2.0, 3.0, 2).unwrap();
    let pot = PotentialPair::harmonic(&grid);
    for seed in 0..6u64 {
        let u = smooth_noise(&grid, 3, 100 + seed).scaled(0.3);
        let v = smooth_noise(&grid, 3, 200 + seed).scaled(0.3);
        let ut = smooth_noise(&grid, 2, 300 + seed).scaled(0.2);
        let vt = smooth_noise(&grid, 2, 400 + seed).scaled(0.2);
        let state = StateVector::new(u.clone(), ut, v.clone(), vt, 0.0).unwrap();
        let rep = functional_report(&state, &prm, &pot);

        let q = quadratic_form_direct(&u, &v, &prm, &pot);
        let n = coupling_direct(&u, &v, &prm);
        let s = prm.p() + prm.q();
        let scale = q.abs().max(n.abs()).max(1e-300);
        assert!((rep.quadratic - q).abs() <= 1e-10 * scale);
        assert!((rep.coupling - n).abs() <= 1e-10 * scale);
        assert!((rep.action - (0.5 * q - prm.a2prime() * n)).abs() <= 1e-10 * scale);
        assert!(
            (rep.nehari - (q - (s + 2.0) * prm.a2prime() * n)).abs() <= 1e-10 * scale
        );
        assert!(
            (rep.energy - (0.5 * rep.kinetic + 0.5 * q - prm.a2prime() * n)).abs()
                <= 1e-10 * scale.max(rep.kinetic)
        );
        assert!(rep.quadratic >= 0.0 && rep.coupling >= 0.0);
    }
}

#[test]
fn ray_derivative_of_action_equals_nehari() {
    // Centered finite difference of J along the ray at lambda_0, times
    // lambda_0, against I at the scaled pair; 20 random pairs.
    let grid = Grid::new(&[64], &[11.0]).unwrap();
    let prm = ModelParams::new(1.0, 1.4, 1.1, 0.8, 2.0, 2.5, 1).unwrap();
    let pot = PotentialPair::zero(&grid);
    let step = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..20u64 {
        let phi = smooth_noise(&grid, 4, 500 + seed).scaled(0.4);
        let psi = smooth_noise(&grid, 4, 600 + seed).scaled(0.4);
        let lambda0: f64 = rng.gen_range(0.6..1.4);
        let j_plus = action(
            &phi.scaled(lambda0 + step),
            &psi.scaled(lambda0 + step),
            &prm,
            &pot,
        );
        let j_minus = action(
            &phi.scaled(lambda0 - step),
            &psi.scaled(lambda0 - step),
            &prm,
            &pot,
        );
        let fd = lambda0 * (j_plus - j_minus) / (2.0 * step);
        let i = nehari(&phi.scaled(lambda0), &psi.scaled(lambda0), &prm, &pot);
        let rel = (fd - i).abs() / i.abs().max(1e-12);
        assert!(rel < 1e-6, "seed {seed}: lambda0={lambda0} rel err {rel:.3e}");
    }
}

#[test]
fn on_manifold_action_is_fixed_fraction_of_quadratic_form() {
    let grid = Grid::new(&[64], &[14.0]).unwrap();
    let prm = ModelParams::new(0.9, 1.1, 1.3, 0.5, 3.0, 2.0, 1).unwrap();
    let pot = PotentialPair::zero(&grid);
    let s = prm.p() + prm.q();
    for seed in 0..8u64 {
        let phi = smooth_noise(&grid, 3, 700 + seed).scaled(0.5);
        let psi = smooth_noise(&grid, 3, 800 + seed).scaled(0.5);
        let lambda = nehari_scale(&phi, &psi, &prm, &pot).unwrap();
        let (p1, p2) = (phi.scaled(lambda), psi.scaled(lambda));
        let (q, _) = q_and_n(&p1, &p2, &prm, &pot);
        let j = action(&p1, &p2, &prm, &pot);
        let expected = s / (2.0 * (s + 2.0)) * q;
        assert!(
            (j - expected).abs() <= 1e-10 * q.max(1.0),
            "J = {j}, expected {expected}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn laplacian_linearity_property(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        s1 in 0u64..1000,
        s2 in 1000u64..2000,
    ) {
        let grid = Grid::new(&[32], &[5.0]).unwrap();
        let f = smooth_noise(&grid, 3, s1);
        let g = smooth_noise(&grid, 3, s2);
        let combo = f.scaled(a).add_scaled(b, &g);
        let lhs = combo.laplacian().unwrap();
        let rhs = f.laplacian().unwrap().scaled(a).add_scaled(b, &g.laplacian().unwrap());
        let scale = lhs.sup_norm().max(1.0);
        prop_assert!(lhs.add_scaled(-1.0, &rhs).sup_norm() <= 1e-10 * scale);
    }

    #[test]
    fn torus_calculus_properties(s in 0u64..500) {
        let grid = Grid::new(&[24, 16], &[4.0, 3.0]).unwrap();
        let f = smooth_noise(&grid, 2, s);
        let lap = f.laplacian().unwrap();
        // Divergence theorem and integration by parts on the torus.
        let scale = lap.l2_norm_sq().sqrt().max(1.0);
        prop_assert!(lap.integrate().abs() <= 1e-10 * scale);
        let lhs = f.gradient_norm_sq();
        let rhs = -f.dot_integral(&lap);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1.0));
    }

    #[test]
    fn nehari_scaling_property(s in 0u64..500, lam in 0.3f64..2.5) {
        let grid = Grid::new(&[32], &[7.0]).unwrap();
        let prm = ModelParams::new(1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1).unwrap();
        let pot = PotentialPair::zero(&grid);
        let phi = smooth_noise(&grid, 3, s).scaled(0.4);
        let psi = smooth_noise(&grid, 3, s + 5000).scaled(0.4);
        let (q1, n1) = q_and_n(&phi, &psi, &prm, &pot);
        let (ql, nl) = q_and_n(&phi.scaled(lam), &psi.scaled(lam), &prm, &pot);
        let sexp = prm.p() + prm.q() + 2.0;
        prop_assert!((ql - lam * lam * q1).abs() <= 1e-11 * ql.max(1.0));
        prop_assert!((nl - lam.powf(sexp) * n1).abs() <= 1e-11 * (nl.max(1.0)));
    }
}
