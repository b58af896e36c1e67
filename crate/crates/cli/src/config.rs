//! Scenario configuration: a TOML file with `model`, `grid`, `potential`,
//! `integrator`, `initial`, `output` and optional `ground_state` blocks.
//! Every block is validated by its module before any computation starts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use kgelab_core::{
    DtSpec, Grid, IntegratorConfig, ModelParams, PotentialPair, ScalarField,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub potential: PotentialBlock,
    #[serde(default)]
    pub integrator: IntegratorBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub ground_state: GroundStateBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub m1: f64,
    pub m2: f64,
    pub a1: f64,
    pub a2: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    pub points: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    #[serde(default)]
    pub kind: PotentialKindKey,
    /// Snapshot sampled for both components when `kind = "file"`.
    pub file: Option<PathBuf>,
    /// Gaussian-well parameters.
    pub depth: Option<f64>,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKindKey {
    #[default]
    Zero,
    Harmonic,
    GaussianWell,
    File,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    #[serde(default)]
    pub dt: DtValue,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default = "default_drift_tol")]
    pub energy_drift_tol: f64,
}

fn default_t_end() -> f64 {
    10.0
}
fn default_cfl() -> f64 {
    0.5
}
fn default_threshold() -> f64 {
    1e8
}
fn default_sample_every() -> usize {
    10
}
fn default_drift_tol() -> f64 {
    1e-5
}

impl Default for IntegratorBlock {
    fn default() -> Self {
        IntegratorBlock {
            dt: DtValue::default(),
            t_end: default_t_end(),
            cfl_safety: default_cfl(),
            blowup_threshold: default_threshold(),
            sample_every: default_sample_every(),
            energy_drift_tol: default_drift_tol(),
        }
    }
}

/// `dt = "auto"` or an explicit positive step.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DtValue {
    Fixed(f64),
    Keyword(String),
}

impl Default for DtValue {
    fn default() -> Self {
        DtValue::Keyword("auto".into())
    }
}

impl DtValue {
    fn to_spec(&self) -> Result<DtSpec> {
        match self {
            DtValue::Fixed(v) => Ok(DtSpec::Fixed(*v)),
            DtValue::Keyword(s) if s == "auto" => Ok(DtSpec::Auto),
            DtValue::Keyword(s) => bail!("integrator.dt must be a number or \"auto\", got {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    #[serde(default)]
    pub kind: InitialKind,
    #[serde(default = "default_amp")]
    pub amplitude_u: f64,
    #[serde(default = "default_amp")]
    pub amplitude_v: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub velocity_scale: f64,
    pub gamma: Option<f64>,
    pub phi_file: Option<PathBuf>,
    pub psi_file: Option<PathBuf>,
    pub u_file: Option<PathBuf>,
    pub v_file: Option<PathBuf>,
    pub ut_file: Option<PathBuf>,
    pub vt_file: Option<PathBuf>,
}

fn default_amp() -> f64 {
    0.5
}
fn default_width() -> f64 {
    2.0
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock {
            kind: InitialKind::default(),
            amplitude_u: default_amp(),
            amplitude_v: default_amp(),
            width: default_width(),
            velocity_scale: 0.0,
            gamma: None,
            phi_file: None,
            psi_file: None,
            u_file: None,
            v_file: None,
            ut_file: None,
            vt_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    #[default]
    GaussianBumps,
    GammaPerturbed,
    File,
    ZeroEnergyConstruct,
    NegativeEnergyConstruct,
    Thm61Construct,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_out_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_csv() -> String {
    "diagnostics.csv".into()
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: default_out_dir(),
            csv: default_csv(),
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateBlock {
    #[serde(default = "default_tol_residual")]
    pub tol_residual: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub outside_theorem_range: bool,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_tol_residual() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    5000
}
fn default_starts() -> usize {
    3
}

impl Default for GroundStateBlock {
    fn default() -> Self {
        GroundStateBlock {
            tol_residual: default_tol_residual(),
            max_iters: default_max_iters(),
            outside_theorem_range: false,
            starts: default_starts(),
        }
    }
}

/// Everything a run needs, constructed and validated.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: Arc<Grid>,
    pub params: ModelParams,
    pub pot: PotentialPair,
    pub integrator: IntegratorConfig,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ScenarioConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn build(self) -> Result<Scenario> {
        if self.grid.points.len() != self.grid.dim || self.grid.lengths.len() != self.grid.dim {
            bail!(
                "grid.dim = {} but grid.points has {} entries and grid.lengths has {}",
                self.grid.dim,
                self.grid.points.len(),
                self.grid.lengths.len()
            );
        }
        let grid = Grid::new(&self.grid.points, &self.grid.lengths)?;
        let m = &self.model;
        let params = if self.ground_state.outside_theorem_range {
            ModelParams::relaxed_exponents(m.m1, m.m2, m.a1, m.a2, m.p, m.q, self.grid.dim)?
        } else {
            ModelParams::new(m.m1, m.m2, m.a1, m.a2, m.p, m.q, self.grid.dim)?
        };
        let pot = build_potential(&self.potential, &grid)?;
        let integrator = IntegratorConfig {
            dt: self.integrator.dt.to_spec()?,
            t_end: self.integrator.t_end,
            cfl_safety: self.integrator.cfl_safety,
            blowup_threshold: self.integrator.blowup_threshold,
            sample_every: self.integrator.sample_every,
            energy_drift_tol: self.integrator.energy_drift_tol,
        };
        Ok(Scenario {
            grid,
            params,
            pot,
            integrator,
            config: self,
        })
    }
}

fn build_potential(block: &PotentialBlock, grid: &Arc<Grid>) -> Result<PotentialPair> {
    match block.kind {
        PotentialKindKey::Zero => Ok(PotentialPair::zero(grid)),
        PotentialKindKey::Harmonic => Ok(PotentialPair::harmonic(grid)),
        PotentialKindKey::GaussianWell => {
            let depth = block
                .depth
                .context("potential.depth is required for kind = \"gaussian_well\"")?;
            let width = block
                .width
                .context("potential.width is required for kind = \"gaussian_well\"")?;
            Ok(PotentialPair::gaussian_well(grid, depth, width)?)
        }
        PotentialKindKey::File => {
            let path = block
                .file
                .as_ref()
                .context("potential.file is required for kind = \"file\"")?;
            let field = load_field_on(grid, path)?;
            Ok(PotentialPair::from_field(field)?)
        }
    }
}

/// Read a snapshot and require it to live on the scenario grid.
pub fn load_field_on(grid: &Arc<Grid>, path: &Path) -> Result<ScalarField> {
    let field = kgelab_core::snapshot::read_field(path)
        .with_context(|| format!("loading field snapshot {}", path.display()))?;
    if field.grid().as_ref() != grid.as_ref() {
        bail!(
            "snapshot {} has grid {:?}/{:?}, scenario expects {:?}/{:?}",
            path.display(),
            field.grid().points(),
            field.grid().lengths(),
            grid.points(),
            grid.lengths()
        );
    }
    Ok(field)
}
