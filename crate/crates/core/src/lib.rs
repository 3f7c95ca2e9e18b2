//! Numerical laboratory for discretised mean-field interacting particle systems.
//!
//! The crate simulates systems of `N` coupled Euler dynamics whose coefficients
//! depend on the empirical measure of all particles, together with the machinery
//! needed to study their limits at desk scale:
//!
//! - [`model`] — time grids, sample paths, empirical path ensembles, coefficient
//!   fields (including binary interaction kernels with derivatives) and
//!   reproducible counter-based noise generation.
//! - [`solver`] — the measure-frozen Euler map, the self-consistent particle
//!   system, controlled dynamics with per-particle drift controls, and marginal
//!   projection.
//! - [`metrics`] — sup-norm path distance, exact and entropic Wasserstein
//!   distances between ensembles, marginal-curve distance and rate fitting.
//! - [`fluctuations`] — synchronous-coupling differences, the linearized flow of
//!   the solution map, asymptotic variance of empirical averages, and
//!   fluctuation-gap statistics in the step size and the noise truncation level.
//! - [`ldp`] — exponential functionals of the empirical measure, quadratic-cost
//!   control values, derivative-free control optimization and analytic entropy
//!   oracles.
//!
//! All randomness flows through a splittable counter-based generator, so every
//! quantity is a pure function of `(seed, stream, counter)` and results are
//! bit-reproducible regardless of thread count.

pub mod error;
pub mod fluctuations;
pub mod ldp;
pub mod metrics;
pub mod model;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use model::coeffs::{eval_diffusion, eval_drift, BinaryKernel, CoeffMeta, Coefficients};
pub use model::ensemble::{EnsemblePrefix, PathEnsemble};
pub use model::grid::TimeGrid;
pub use model::noise::{CounterRng, InitLaw, NoiseKind, NoiseSource};
pub use model::path::{Path, PrefixView};
pub use model::registry::{build_model, describe_model, model_names, ModelParams};
pub use solver::{
    simulate_particles, solve_frozen, solve_mckean_ensemble, ControlProcess, DrivingInputs,
    FrozenInput, ParticleSystemRun,
};
