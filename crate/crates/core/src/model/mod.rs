//! Domain types: grids, paths, ensembles, coefficient fields and noise.

pub mod coeffs;
pub mod ensemble;
pub mod grid;
pub mod noise;
pub mod path;
pub mod registry;

pub use coeffs::{eval_diffusion, eval_drift, BinaryKernel, CoeffMeta, Coefficients};
pub use ensemble::{EnsemblePrefix, PathEnsemble};
pub use grid::TimeGrid;
pub use noise::{CounterRng, InitLaw, NoiseKind, NoiseSource};
pub use path::{Path, PrefixView};
pub use registry::{build_model, describe_model, model_names, ModelParams};
