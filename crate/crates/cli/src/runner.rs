//! Orchestration: drive the solvers from a scenario and persist
//! diagnostics (CSV), reports (JSON) and field snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use kgelab_core::{
    classify_initial_data, detect_blowup, gaussian_seed, minimize_ground_state, snapshot,
    ClassificationReport, DetectionReport, GroundStateOpts, GroundStateResult, ScalarField,
    StateVector, Terminal, Trajectory, TrajectorySample,
};

use crate::config::Scenario;
use crate::initial::build_initial_state;

pub const CSV_HEADER: &str = "t,E,J,I,Q,N,kinetic,G,Gprime,Gsecond,l2w,sup_u,sup_v";

/// Exit codes are a stable contract: 0 completed, 1 usage/config errors,
/// 2 blow-up detected (including overflow past the threshold), 3 unstable.
pub fn exit_code_for(terminal: Terminal) -> u8 {
    match terminal {
        Terminal::Completed => 0,
        Terminal::BlowupDetected | Terminal::Overflow => 2,
        Terminal::Unstable => 3,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing report")?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn csv_row(sample: &TrajectorySample) -> String {
    let r = &sample.report;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        sample.t,
        r.energy,
        r.action,
        r.nehari,
        r.quadratic,
        r.coupling,
        r.kinetic,
        sample.g.g,
        sample.g.gprime,
        sample.g.gsecond,
        r.l2_weighted,
        sample.sup_u,
        sample.sup_v
    )
}

#[derive(Debug, Serialize)]
pub struct GroundStateRecord {
    pub d: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub starts: usize,
    pub best_start: usize,
}

/// Read the level `d` from a ground-state JSON record.
pub fn read_d_file(path: &Path) -> Result<f64> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading d file {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    value
        .get("d")
        .and_then(|v| v.as_f64())
        .with_context(|| format!("{} has no numeric field `d`", path.display()))
}

/// Multiplicatively perturbed Gaussian seed for multi-start runs.
fn perturbed_seed(
    grid: &std::sync::Arc<kgelab_core::Grid>,
    seed: u64,
) -> (ScalarField, ScalarField) {
    let (base_phi, base_psi) = gaussian_seed(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let mut modes = Vec::new();
    for _ in 0..4 {
        let k: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
        let amp: f64 = rng.gen_range(-0.3..0.3);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        modes.push((k, amp, phase));
    }
    let lengths = grid.lengths().to_vec();
    let factor = ScalarField::from_fn(grid, |x| {
        1.0 + modes
            .iter()
            .map(|(k, amp, phase)| {
                let arg: f64 = k
                    .iter()
                    .zip(x)
                    .zip(&lengths)
                    .map(|((ki, &xi), &li)| std::f64::consts::TAU * ki * xi / li)
                    .sum();
                amp * (arg + phase).cos()
            })
            .sum::<f64>()
    })
    .expect("modulation is finite");
    (
        base_phi.zip_map(&factor, |a, b| a * b),
        base_psi.zip_map(&factor, |a, b| a * b),
    )
}

/// Minimize from `starts` seeded initial directions and keep the best
/// converged level; persists snapshots of the winning pair and a JSON
/// record of the run.
pub fn run_ground_state(
    scn: &Scenario,
    out_dir: &Path,
    starts: usize,
    seed: u64,
) -> Result<(GroundStateResult, GroundStateRecord)> {
    ensure_dir(out_dir)?;
    let opts = GroundStateOpts {
        tol_residual: scn.config.ground_state.tol_residual,
        max_iters: scn.config.ground_state.max_iters,
        outside_theorem_range: scn.config.ground_state.outside_theorem_range,
    };
    let starts = starts.max(1);
    let mut best: Option<(usize, GroundStateResult)> = None;
    let mut failures = Vec::new();
    for k in 0..starts {
        let init = if k == 0 {
            gaussian_seed(&scn.grid)
        } else {
            perturbed_seed(&scn.grid, seed.wrapping_add(k as u64))
        };
        match minimize_ground_state(init, &scn.params, &scn.pot, &opts) {
            Ok(res) if res.converged => {
                let better = best
                    .as_ref()
                    .map(|(_, b)| res.d < b.d)
                    .unwrap_or(true);
                if better {
                    best = Some((k, res));
                }
            }
            Ok(res) => failures.push(format!(
                "start {k}: no convergence in {} iterations (residual {:.3e})",
                res.iterations, res.residual
            )),
            Err(e) => failures.push(format!("start {k}: {e}")),
        }
    }
    let Some((best_start, result)) = best else {
        bail!(
            "all {starts} ground-state starts failed:\n  {}",
            failures.join("\n  ")
        );
    };
    snapshot::write_field(out_dir.join("phi.field"), &result.phi)?;
    snapshot::write_field(out_dir.join("psi.field"), &result.psi)?;
    let record = GroundStateRecord {
        d: result.d,
        residual: result.residual,
        iterations: result.iterations,
        converged: result.converged,
        starts,
        best_start,
    };
    write_json(&out_dir.join("ground_state.json"), &record)?;
    Ok((result, record))
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub terminal: Terminal,
    pub t_final: f64,
    pub dt: f64,
    pub e_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmax_bound: Option<f64>,
}

/// Simulate the scenario, streaming the diagnostics CSV row by row and
/// writing snapshots at the configured cadence plus a summary record.
pub fn run_simulate(
    scn: &Scenario,
    out_dir: &Path,
    d: Option<f64>,
) -> Result<(Trajectory, SimulationSummary)> {
    ensure_dir(out_dir)?;
    let state0 = build_initial_state(scn)?;

    // The bound and the auxiliary weights come from the initial data.
    let classification = classify_initial_data(&state0, &scn.params, &scn.pot, d);
    let aux = kgelab_core::choose_aux_params(&state0, classification.e0, &scn.params).ok();

    let csv_path = out_dir.join(&scn.config.output.csv);
    let mut csv = BufWriter::new(
        File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?,
    );
    writeln!(csv, "{CSV_HEADER}")?;

    let snapshot_every = scn.config.output.snapshot_every;
    let snap_dir = out_dir.to_path_buf();
    let mut io_error: Option<std::io::Error> = None;
    let traj = kgelab_core::simulate_with_observer(
        &state0,
        &scn.integrator,
        &scn.params,
        &scn.pot,
        aux,
        |step, state, sample| {
            if io_error.is_some() {
                return;
            }
            if let Some(sample) = sample {
                if let Err(e) = writeln!(csv, "{}", csv_row(sample)) {
                    io_error = Some(e);
                }
            }
            if snapshot_every > 0 && step % snapshot_every == 0 {
                if let Err(e) = write_state_snapshots(&snap_dir, step, state) {
                    io_error = Some(std::io::Error::other(e.to_string()));
                }
            }
        },
    )?;
    if let Some(e) = io_error {
        return Err(e).context("writing diagnostics");
    }
    csv.flush()?;

    let blowup_estimate = if matches!(traj.terminal, Terminal::BlowupDetected | Terminal::Overflow)
    {
        detect_blowup(&traj, &scn.params)
            .ok()
            .and_then(|r| r.blowup_time_estimate)
    } else {
        None
    };
    let summary = SimulationSummary {
        terminal: traj.terminal,
        t_final: traj.t_final(),
        dt: traj.dt,
        e_drift: traj.max_energy_drift(),
        blowup_estimate,
        tmax_bound: classification.tmax_bound,
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok((traj, summary))
}

fn write_state_snapshots(dir: &Path, step: usize, state: &StateVector) -> Result<()> {
    for (name, field) in [
        ("u", &state.u),
        ("ut", &state.ut),
        ("v", &state.v),
        ("vt", &state.vt),
    ] {
        snapshot::write_field(dir.join(format!("{name}_{step:08}.field")), field)?;
    }
    Ok(())
}

/// Evaluate every theorem hypothesis on the configured initial data.
pub fn run_classify(
    scn: &Scenario,
    out_dir: &Path,
    d: Option<f64>,
) -> Result<ClassificationReport> {
    ensure_dir(out_dir)?;
    let state0 = build_initial_state(scn)?;
    let report = classify_initial_data(&state0, &scn.params, &scn.pot, d);
    write_json(&out_dir.join("classification.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct CertificationRecord {
    pub detection: DetectionReport,
    pub classification: ClassificationReport,
    pub summary: SimulationSummary,
    /// Evidence language, never a proof.
    pub statement: String,
}

/// Simulate, then inspect the trajectory tail for the blow-up signature.
pub fn run_certify(
    scn: &Scenario,
    out_dir: &Path,
    d: Option<f64>,
) -> Result<(Terminal, CertificationRecord)> {
    ensure_dir(out_dir)?;
    let state0 = build_initial_state(scn)?;
    let classification = classify_initial_data(&state0, &scn.params, &scn.pot, d);
    let (traj, summary) = run_simulate(scn, out_dir, d)?;
    let detection = detect_blowup(&traj, &scn.params)?;
    let statement = if detection.consistent_with_blowup {
        format!(
            "trajectory is consistent with finite-time blow-up (estimated time {:.6})",
            detection.blowup_time_estimate.unwrap_or(f64::NAN)
        )
    } else {
        "trajectory shows no finite-time blow-up signature".to_string()
    };
    let record = CertificationRecord {
        detection,
        classification,
        summary,
        statement,
    };
    write_json(&out_dir.join("certification.json"), &record)?;
    Ok((traj.terminal, record))
}

/// Persist the outputs of a converged ground-state run next to a scenario
/// needing them (helper for chained workflows in scripts and tests).
pub fn ground_state_paths(out_dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        out_dir.join("phi.field"),
        out_dir.join("psi.field"),
        out_dir.join("ground_state.json"),
    )
}
