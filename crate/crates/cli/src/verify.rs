//! The `verify` subcommand: run the cross-module identity and property
//! checks at desk scale and print one line per check.

use std::f64::consts::PI;
use std::sync::Arc;

use kgelab_core::{
    acceleration, action, el_residual, gaussian_seed, minimize_ground_state, nehari,
    nehari_scale, q_and_n, simulate, step_leapfrog, tmax_bound, DtSpec, Grid, GroundStateOpts,
    IntegratorConfig, ModelParams, PotentialPair, ScalarField, StateVector,
};

pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub observed: f64,
    pub pass: bool,
}

fn check(name: &'static str, tolerance: f64, observed: f64) -> Check {
    Check {
        name,
        tolerance,
        observed,
        pass: observed <= tolerance,
    }
}

fn wave_field(grid: &Arc<Grid>, k: f64, amp: f64, phase: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| amp * (k * x[0] + phase).sin()).expect("finite")
}

/// Run the full invariant suite; returns the table of results.
pub fn run_checks() -> Vec<Check> {
    let mut out = Vec::new();

    let grid = Grid::new(&[128], &[16.0]).unwrap();
    let prm = ModelParams::new(1.0, 1.3, 0.8, 1.4, 2.0, 3.0, 1).unwrap();
    let pot = PotentialPair::zero(&grid);
    let f = wave_field(&grid, 2.0 * PI * 3.0 / 16.0, 0.8, 0.3);
    let g = wave_field(&grid, 2.0 * PI * 5.0 / 16.0, 0.5, 1.1);

    // Spectral calculus.
    {
        let combo = f.scaled(1.7).add_scaled(-0.6, &g);
        let lhs = combo.laplacian().unwrap();
        let rhs = f
            .laplacian()
            .unwrap()
            .scaled(1.7)
            .add_scaled(-0.6, &g.laplacian().unwrap());
        let err = lhs.add_scaled(-1.0, &rhs).sup_norm() / lhs.sup_norm().max(1.0);
        out.push(check("laplacian linearity", 1e-10, err));

        let lap = f.laplacian().unwrap();
        out.push(check(
            "divergence theorem on torus",
            1e-10,
            lap.integrate().abs() / lap.l2_norm_sq().sqrt().max(1.0),
        ));

        let ibp = (f.gradient_norm_sq() + f.dot_integral(&lap)).abs()
            / f.gradient_norm_sq().max(1.0);
        out.push(check("integration by parts", 1e-10, ibp));
    }

    // Model right-hand side.
    {
        let state = StateVector::at_rest(f.clone(), g.clone()).unwrap();
        let (au, av) = acceleration(&state, &prm, &pot).unwrap();
        let (nau, nav) = acceleration(&state.negated(), &prm, &pot).unwrap();
        let odd = nau
            .add_scaled(1.0, &au)
            .sup_norm()
            .max(nav.add_scaled(1.0, &av).sup_norm());
        out.push(check("acceleration oddness", 0.0, odd));

        let c1 = (prm.a2prime() * (prm.p() + 1.0) - prm.alpha() * prm.a1()).abs()
            / (prm.alpha() * prm.a1());
        let c2 = (prm.a2prime() * (prm.q() + 1.0) - prm.a2()).abs() / prm.a2();
        out.push(check("coupling coefficient identities", 1e-14, c1.max(c2)));

        let lin = prm.clone().with_linear_test_mode(true);
        let (au1, _) = acceleration(&state, &lin, &pot).unwrap();
        let scaled = StateVector::at_rest(f.scaled(3.0), g.scaled(3.0)).unwrap();
        let (au3, _) = acceleration(&scaled, &lin, &pot).unwrap();
        let linearity =
            au3.add_scaled(-3.0, &au1).sup_norm() / au3.sup_norm().max(1.0);
        out.push(check("linear-mode linearity", 1e-12, linearity));
    }

    // Ray structure of the functionals.
    {
        let phi = f.scaled(0.5).map(|v| v + 0.3);
        let psi = g.map(|v| v + 0.2);
        let (q1, n1) = q_and_n(&phi, &psi, &prm, &pot);
        let s = prm.p() + prm.q() + 2.0;
        let mut worst: f64 = 0.0;
        for lam in [0.5f64, 1.0, 2.0] {
            let i_direct = nehari(&phi.scaled(lam), &psi.scaled(lam), &prm, &pot);
            let i_formula = lam * lam * q1 - s * prm.a2prime() * lam.powf(s) * n1;
            worst = worst.max((i_direct - i_formula).abs() / i_formula.abs().max(1e-12));
        }
        out.push(check("ray scaling of Nehari functional", 1e-10, worst));

        let step = 1e-4;
        let jp = action(&phi.scaled(1.0 + step), &psi.scaled(1.0 + step), &prm, &pot);
        let jm = action(&phi.scaled(1.0 - step), &psi.scaled(1.0 - step), &prm, &pot);
        let fd = (jp - jm) / (2.0 * step);
        let i = nehari(&phi, &psi, &prm, &pot);
        out.push(check(
            "ray derivative of action vs Nehari",
            1e-6,
            (fd - i).abs() / i.abs().max(1e-12),
        ));

        let lambda = nehari_scale(&phi, &psi, &prm, &pot).unwrap();
        let (p1, p2) = (phi.scaled(lambda), psi.scaled(lambda));
        let (qp, _) = q_and_n(&p1, &p2, &prm, &pot);
        out.push(check(
            "Nehari projection lands on manifold",
            1e-10,
            nehari(&p1, &p2, &prm, &pot).abs() / qp,
        ));
        out.push(check(
            "Nehari projection idempotent",
            1e-10,
            (nehari_scale(&p1, &p2, &prm, &pot).unwrap() - 1.0).abs(),
        ));
        let spq = prm.p() + prm.q();
        let frac = spq / (2.0 * (spq + 2.0));
        out.push(check(
            "on-manifold action fraction of Q",
            1e-10,
            (action(&p1, &p2, &prm, &pot) - frac * qp).abs() / qp,
        ));
    }

    // Closed-form ground-state oracle.
    {
        let grid = Grid::new(&[512], &[40.0]).unwrap();
        let prm1 = ModelParams::relaxed_exponents(1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 1).unwrap();
        let pot1 = PotentialPair::zero(&grid);
        let opts = GroundStateOpts {
            outside_theorem_range: true,
            ..Default::default()
        };
        match minimize_ground_state(gaussian_seed(&grid), &prm1, &pot1, &opts) {
            Ok(res) => {
                let exact =
                    ScalarField::from_fn(&grid, |x| 1.0 / (x[0] - 20.0).cosh()).unwrap();
                let err = res.phi.add_scaled(-1.0, &exact).sup_norm();
                out.push(check("sech oracle sup error", 1e-3, err));
                out.push(check("sech oracle residual", 1e-6, res.residual));
                let r = el_residual(&res.phi, &res.psi, &prm1, &pot1).unwrap();
                out.push(check("sech oracle EL residual recheck", 1e-6, r));
            }
            Err(_) => {
                out.push(check("sech oracle sup error", 1e-3, f64::INFINITY));
            }
        }
    }

    // Integrator.
    {
        let grid = Grid::new(&[64], &[2.0 * PI]).unwrap();
        let prm1 = ModelParams::new(1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1).unwrap();
        let pot1 = PotentialPair::zero(&grid);
        let u = wave_field(&grid, 1.0, 0.3, 0.0);
        let state = StateVector::at_rest(u.clone(), u.scaled(0.5)).unwrap();
        let fwd = step_leapfrog(&state, 0.05, &prm1, &pot1).unwrap();
        let back = step_leapfrog(&fwd, -0.05, &prm1, &pot1).unwrap();
        let rev = back
            .u
            .add_scaled(-1.0, &state.u)
            .sup_norm()
            .max(back.ut.add_scaled(-1.0, &state.ut).sup_norm());
        out.push(check("leapfrog reversibility", 1e-12, rev));

        // G'' against the centered second difference of sampled G.
        let bump = ScalarField::from_fn(&grid, |x| 0.3 * (-(x[0] - PI).powi(2)).exp()).unwrap();
        let st = StateVector::at_rest(bump.clone(), bump).unwrap();
        let mut errs = Vec::new();
        for every in [8usize, 4] {
            let cfg = IntegratorConfig {
                dt: DtSpec::Fixed(2.5e-3),
                t_end: 1.0,
                sample_every: every,
                ..Default::default()
            };
            let traj = simulate(&st, &cfg, &prm1, &pot1, None).unwrap();
            let s = &traj.samples;
            let mut worst: f64 = 0.0;
            for i in 1..s.len() - 1 {
                let dt_s = s[i + 1].t - s[i].t;
                if ((s[i].t - s[i - 1].t) - dt_s).abs() > 1e-12 {
                    continue;
                }
                let second =
                    (s[i + 1].g.g - 2.0 * s[i].g.g + s[i - 1].g.g) / (dt_s * dt_s);
                worst = worst.max((second - s[i].g.gsecond).abs());
            }
            errs.push(worst);
        }
        let ratio = errs[0] / errs[1];
        out.push(Check {
            name: "G'' matches second difference at O(dt^2)",
            tolerance: 6.0,
            observed: ratio,
            pass: (2.5..6.0).contains(&ratio) && errs[1] < 1e-2,
        });
    }

    // Blow-up bound homogeneity.
    {
        let prm1 = ModelParams::relaxed_exponents(1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 1).unwrap();
        let b1 = tmax_bound(4.0, 2.0, &prm1).unwrap();
        let b2 = tmax_bound(8.0, 4.0, &prm1).unwrap();
        out.push(check(
            "blow-up bound degree-zero homogeneity",
            0.0,
            (b1 - b2).abs().max((b1 - 4.0).abs()),
        ));
    }

    out
}

/// Print the table; returns true when every check passed.
pub fn print_report(checks: &[Check]) -> bool {
    println!(
        "{:<44} {:>12} {:>14} {:>8}",
        "check", "tolerance", "observed", "status"
    );
    let mut all = true;
    for c in checks {
        all &= c.pass;
        println!(
            "{:<44} {:>12.2e} {:>14.4e} {:>8}",
            c.name,
            c.tolerance,
            c.observed,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    all
}
