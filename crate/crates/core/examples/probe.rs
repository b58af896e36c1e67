// final acceptance-parameter validation (not committed)
use kgelab_core::*;

fn bump2d(grid: &std::sync::Arc<Grid>, amp: f64, w: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let r2: f64 = x.iter().zip(grid.lengths()).map(|(&xi, &l)| (xi - 0.5 * l) * (xi - 0.5 * l)).sum();
        amp * (-r2 / (w * w)).exp()
    }).unwrap()
}

fn main() {
    let prm = ModelParams::new(1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2).unwrap();

    // thm61 construct: closed-form amplitude from the coupling/quadratic ratio
    let grid = Grid::new(&[64, 64], &[20.0, 20.0]).unwrap();
    let pot = PotentialPair::zero(&grid);
    let b = bump2d(&grid, 1.0, 2.0);
    let (q1, n1) = q_and_n(&b, &b, &prm, &pot);
    let s = prm.p() + prm.q();
    for rstar in [0.3f64, 0.35, 0.4] {
        let amp = (rstar * q1 / (prm.a2prime() * n1)).powf(1.0 / s);
        let u0 = b.scaled(amp);
        let vel = u0.scaled(1e-3);
        let st = StateVector::new(u0.clone(), vel.clone(), u0.clone(), vel, 0.0).unwrap();
        let rep = classify_initial_data(&st, &prm, &pot, None);
        println!("t61 r*={rstar}: amp={amp:.4} E0={:+.4e} I0={:+.4e} cross0={:+.3e} l2w0={:.4} thr6={:.4} verdict={:?}",
            rep.e0, rep.i0, rep.cross0, rep.l2w0, rep.threshold6, rep.verdict_thm61);
        if rep.verdict_thm61.holds() {
            let cfg = IntegratorConfig { dt: DtSpec::Fixed(1e-3), t_end: 30.0, sample_every: 10, ..Default::default() };
            let traj = simulate(&st, &cfg, &prm, &pot, None).unwrap();
            println!("   run: terminal={:?} t_final={:.3} samples={}", traj.terminal, traj.t_final(), traj.samples.len());
        }
    }

    // criterion 7 at 128^2 with doubling-construct amplitude
    let grid = Grid::new(&[128, 128], &[20.0, 20.0]).unwrap();
    let pot = PotentialPair::zero(&grid);
    let mut amp = 0.5;
    loop {
        let st = StateVector::at_rest(bump2d(&grid, amp, 2.0), bump2d(&grid, amp, 2.0)).unwrap();
        if energy(&st, &prm, &pot) < 0.0 { break; }
        amp *= 2.0;
    }
    let u0 = bump2d(&grid, amp, 2.0);
    let st = StateVector::at_rest(u0.clone(), u0).unwrap();
    let e0 = energy(&st, &prm, &pot);
    let aux = choose_aux_params(&st, e0, &prm).unwrap();
    let cfg = IntegratorConfig { dt: DtSpec::Fixed(1e-3), t_end: 20.0, sample_every: 10, ..Default::default() };
    let t0 = std::time::Instant::now();
    let traj = simulate(&st, &cfg, &prm, &pot, Some(aux)).unwrap();
    let h: Vec<f64> = traj.samples.iter().map(|x| x.g.g.powf(-s / 4.0)).collect();
    let mut conc = true;
    for i in 1..h.len() - 1 {
        if h[i + 1] - 2.0 * h[i] + h[i - 1] > 1e-8 * h[i] { conc = false; println!("   convex at {i}"); }
    }
    let gmono = traj.samples.windows(2).all(|w| w[1].g.g > w[0].g.g);
    let hdec = h.windows(2).all(|w| w[1] < w[0]);
    let det = detect_blowup(&traj, &prm).unwrap();
    let bound = tmax_bound(traj.samples[0].g.g, traj.samples[0].g.gprime, &prm).unwrap();
    println!("c7@128: amp={amp} E0={e0:.3} terminal={:?} n={} Gmono={gmono} Hdec={hdec} Hconc={conc} est={:?} bound={bound:.3} consistent={} elapsed={:?}",
        traj.terminal, traj.samples.len(), det.blowup_time_estimate, det.consistent_with_blowup, t0.elapsed());

    // criterion 1 final dt pair
    let grid = Grid::new(&[128, 128], &[30.0, 30.0]).unwrap();
    let pot = PotentialPair::zero(&grid);
    let u = bump2d(&grid, 1e-2, 4.0);
    let state = StateVector::at_rest(u.clone(), u.clone()).unwrap();
    let mut drifts = Vec::new();
    for dt in [1.25e-3, 6.25e-4] {
        let cfg = IntegratorConfig { dt: DtSpec::Fixed(dt), t_end: 10.0, sample_every: 100, ..Default::default() };
        let t0 = std::time::Instant::now();
        let traj = simulate(&state, &cfg, &prm, &pot, None).unwrap();
        drifts.push(traj.max_energy_drift());
        println!("c1: dt={dt:.3e} terminal={:?} drift={:.3e} elapsed={:?}", traj.terminal, traj.max_energy_drift(), t0.elapsed());
    }
    println!("c1 ratio: {:.3}", drifts[0] / drifts[1]);
}
