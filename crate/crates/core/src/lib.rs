//! Numerical laboratory for coupled nonlinear Klein-Gordon systems with
//! nonnegative potentials on a periodic box: pseudospectral dynamics,
//! variational ground states with their minimal action level, theorem-style
//! classification of initial data, and concavity-based blow-up diagnostics.

pub mod blowup;
pub mod error;
pub mod evolve;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod model;
pub mod snapshot;

pub use blowup::{
    choose_aux_params, classify_initial_data, detect_blowup, g_diagnostics, gamma_perturbed_data,
    tmax_bound, AuxiliaryParams, ClassificationReport, DetectionReport, GDiagnostics, Verdict,
};
pub use error::{Error, Result};
pub use evolve::{
    simulate, simulate_with_observer, stability_limit, step_leapfrog, DtSpec, IntegratorConfig,
    Terminal, Trajectory, TrajectorySample,
};
pub use functionals::{
    action, cross_integral, energy, functional_report, kinetic_integral, nehari, q_and_n,
    quadratic_form, weighted_l2, FunctionalReport,
};
pub use grid::{Grid, ScalarField};
pub use groundstate::{
    el_residual, gaussian_seed, minimize_ground_state, nehari_scale, reduced_objective,
    GroundStateOpts, GroundStateResult,
};
pub use model::{
    acceleration, validate_exponents, ExponentVerdict, ModelParams, PotentialKind, PotentialPair,
    StateVector,
};
