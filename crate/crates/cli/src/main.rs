use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use kgelab_cli::config::ScenarioConfig;
use kgelab_cli::runner::{
    exit_code_for, read_d_file, run_certify, run_classify, run_ground_state, run_simulate,
};
use kgelab_cli::verify;

#[derive(Parser)]
#[command(
    name = "kgelab",
    about = "Coupled nonlinear Klein-Gordon laboratory: ground states, \
             simulation, and blow-up diagnostics on a periodic box"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized constructions; overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the variational ground state and its level d.
    GroundState {
        #[command(flatten)]
        common: Common,
        /// Number of minimization starts (first is deterministic).
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Integrate the system and emit diagnostics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Ground-state JSON record supplying the level d.
        #[arg(long)]
        d_file: Option<PathBuf>,
    },
    /// Evaluate every sufficient-condition checklist on the initial data.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d_file: Option<PathBuf>,
    },
    /// Simulate and inspect the trajectory for the blow-up signature.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d_file: Option<PathBuf>,
    },
    /// Run the cross-module invariant checks at desk scale.
    Verify,
}

fn load(common: &Common) -> Result<(kgelab_cli::Scenario, PathBuf, u64)> {
    let mut cfg = ScenarioConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let seed = cfg.seed;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| cfg.output.directory.clone());
    let scenario = cfg.build()?;
    Ok((scenario, out, seed))
}

fn dispatch(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::GroundState { common, starts } => {
            let (scn, out, seed) = load(&common)?;
            let starts = starts.unwrap_or(scn.config.ground_state.starts);
            let (_, record) = run_ground_state(&scn, &out, starts, seed)?;
            println!(
                "d = {:.12e}  residual = {:.3e}  iterations = {}  (best of {} starts)",
                record.d, record.residual, record.iterations, record.starts
            );
            Ok(0)
        }
        Cmd::Simulate { common, d_file } => {
            let (scn, out, _) = load(&common)?;
            let d = d_file.map(|p| read_d_file(&p)).transpose()?;
            let (traj, summary) = run_simulate(&scn, &out, d)?;
            println!(
                "terminal = {:?}  t_final = {:.6}  dt = {:.3e}  energy drift = {:.3e}",
                summary.terminal, summary.t_final, summary.dt, summary.e_drift
            );
            if let Some(est) = summary.blowup_estimate {
                println!("blow-up time estimate = {est:.6}");
            }
            if let Some(bound) = summary.tmax_bound {
                println!("blow-up time bound = {bound:.6}");
            }
            Ok(exit_code_for(traj.terminal))
        }
        Cmd::Classify { common, d_file } => {
            let (scn, out, _) = load(&common)?;
            let d = d_file.map(|p| read_d_file(&p)).transpose()?;
            let report = run_classify(&scn, &out, d)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Cmd::Certify { common, d_file } => {
            let (scn, out, _) = load(&common)?;
            let d = d_file.map(|p| read_d_file(&p)).transpose()?;
            let (terminal, record) = run_certify(&scn, &out, d)?;
            println!("{}", record.statement);
            Ok(exit_code_for(terminal))
        }
        Cmd::Verify => {
            let checks = verify::run_checks();
            let ok = verify::print_report(&checks);
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
