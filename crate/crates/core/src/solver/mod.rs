//! The Euler dynamics: the measure-frozen solution map, the self-consistent
//! particle system, the controlled system, and marginal projection.
//!
//! A single stepping engine drives all of them. Each coarse step first seals
//! the interaction statistics of the visible ensemble prefix, then evaluates
//! every particle's coefficients against that prefix, then writes the next
//! block of storage points. Re-solving any particle against the frozen output
//! ensemble therefore replays the exact same arithmetic and reproduces the
//! run bit for bit.
//!
//! Runs may be *refined*: dynamics frozen over blocks of `coarsen` storage
//! cells while paths are materialized on the fine storage grid. A coarse run
//! and a fine run driven by the same noise paths then live on one grid and can
//! be compared pathwise.

pub mod io;

use crate::error::{Error, Result};
use crate::model::coeffs::Coefficients;
use crate::model::ensemble::{EnsemblePrefix, PathEnsemble};
use crate::model::grid::TimeGrid;
use crate::model::noise::{stream_id, CounterRng, InitLaw, NoiseKind, NoiseSource};
use crate::model::path::{Path, PrefixView};

/// Inputs of one measure-frozen solve: a start point, a driving noise path and
/// the frozen interaction measure, all over one storage grid.
pub struct FrozenInput<'a> {
    pub x0: &'a [f64],
    pub noise: &'a Path,
    pub measure: &'a PathEnsemble,
}

/// Per-particle, grid-indexed control values with the quadratic energy
/// functional `sum_k |u_k|^2 h / 2`.
#[derive(Clone, Debug)]
pub struct ControlProcess {
    grid: TimeGrid,
    dim: usize,
    particles: usize,
    values: Vec<f64>,
}

impl ControlProcess {
    pub fn zeros(grid: TimeGrid, dim: usize, particles: usize) -> Self {
        Self { grid, dim, particles, values: vec![0.0; particles * grid.n_steps() * dim] }
    }

    /// Same constant value for every particle and step.
    pub fn constant(grid: TimeGrid, particles: usize, value: &[f64]) -> Self {
        let mut c = Self::zeros(grid, value.len(), particles);
        for i in 0..particles {
            for k in 0..grid.n_steps() {
                c.value_mut(i, k).copy_from_slice(value);
            }
        }
        c
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn value(&self, particle: usize, step: usize) -> &[f64] {
        let at = (particle * self.grid.n_steps() + step) * self.dim;
        &self.values[at..at + self.dim]
    }

    pub fn value_mut(&mut self, particle: usize, step: usize) -> &mut [f64] {
        let at = (particle * self.grid.n_steps() + step) * self.dim;
        &mut self.values[at..at + self.dim]
    }

    /// Energy of one particle's control.
    pub fn energy_of(&self, particle: usize) -> f64 {
        let h = self.grid.step();
        (0..self.grid.n_steps())
            .map(|k| {
                let u = self.value(particle, k);
                0.5 * u.iter().map(|v| v * v).sum::<f64>() * h
            })
            .sum()
    }

    /// Average energy over particles; additive across them by construction.
    pub fn mean_energy(&self) -> f64 {
        (0..self.particles).map(|i| self.energy_of(i)).sum::<f64>() / self.particles as f64
    }
}

/// Adapted feedback law: values at step `k` are computed from prefixes of
/// length `k + 1` only.
pub trait ControlPolicy: Send + Sync {
    fn control(&self, step: usize, own: &PrefixView, measure: &EnsemblePrefix, out: &mut [f64]);
}

/// Driving data of a particle run: start points and noise paths, with
/// optional input weights.
#[derive(Clone, Debug)]
pub struct DrivingInputs {
    pub initials: Vec<Vec<f64>>,
    pub noises: Vec<Path>,
    pub weights: Option<Vec<f64>>,
}

impl DrivingInputs {
    /// Samples `n` i.i.d. inputs; member `i` draws from the stream
    /// `(seed, stream_id(block, i))`.
    pub fn sample(
        grid: TimeGrid,
        init: &InitLaw,
        kind: NoiseKind,
        dim_noise: usize,
        n: usize,
        seed: u64,
        block: u64,
    ) -> Result<Self> {
        init.validate()?;
        if n == 0 {
            return Err(Error::InvalidInput("need at least one particle".into()));
        }
        let mut initials = Vec::with_capacity(n);
        let mut noises = Vec::with_capacity(n);
        for i in 0..n {
            let stream = stream_id(block, i as u64);
            initials.push(init.sample(&CounterRng::new(seed, stream)));
            noises.push(NoiseSource::new(kind, dim_noise, seed, stream).sample(&grid));
        }
        Ok(Self { initials, noises, weights: None })
    }

    pub fn len(&self) -> usize {
        self.noises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noises.is_empty()
    }

    pub fn grid(&self) -> TimeGrid {
        self.noises[0].grid()
    }

    /// Reorders members; used by exchangeability checks.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            initials: perm.iter().map(|&i| self.initials[i].clone()).collect(),
            noises: perm.iter().map(|&i| self.noises[i].clone()).collect(),
            weights: self
                .weights
                .as_ref()
                .map(|w| perm.iter().map(|&i| w[i]).collect()),
        }
    }
}

/// A completed run: the inputs that drove it and the output ensemble.
/// `coarsen` records how many storage cells one dynamics step spanned.
#[derive(Clone, Debug)]
pub struct ParticleSystemRun {
    pub inputs: DrivingInputs,
    pub output: PathEnsemble,
    pub coarsen: usize,
}

impl ParticleSystemRun {
    pub fn n_particles(&self) -> usize {
        self.output.len()
    }

    pub fn grid(&self) -> TimeGrid {
        self.output.grid()
    }
}

enum ControlSource<'a> {
    None,
    Open(&'a ControlProcess),
    Policy(&'a dyn ControlPolicy, &'a mut ControlProcess),
}

/// The shared stepping engine; see the module docs for its contract.
fn advance(
    model: &dyn Coefficients,
    initials: &[Vec<f64>],
    noises: &[Path],
    weights: Option<&[f64]>,
    coarsen: usize,
    frozen: Option<&PathEnsemble>,
    mut control: ControlSource,
) -> Result<PathEnsemble> {
    let meta = model.meta();
    let (d, dp) = (meta.dim_state, meta.dim_noise);
    let n = noises.len();
    if n == 0 || initials.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} initial points vs {} noises",
            initials.len(),
            n
        )));
    }
    let grid = noises[0].grid();
    if noises.iter().any(|w| w.grid() != grid || w.dim() != dp) {
        return Err(Error::GridMismatch("noises must share the grid and have dimension d'".into()));
    }
    if initials.iter().any(|x| x.len() != d) {
        return Err(Error::DimensionMismatch("initial points must have dimension d".into()));
    }
    if coarsen == 0 || grid.n_steps() % coarsen != 0 {
        return Err(Error::InvalidGrid(format!(
            "coarsening factor {coarsen} must divide {} steps",
            grid.n_steps()
        )));
    }
    let n_coarse = grid.n_steps() / coarsen;
    if let Some(f) = frozen {
        if f.grid() != grid || f.dim() != d {
            return Err(Error::GridMismatch("frozen measure must live on the storage grid".into()));
        }
    }
    match &control {
        ControlSource::Open(c) => {
            if c.particles() != n || c.dim() != dp || c.grid().n_steps() != n_coarse {
                return Err(Error::DimensionMismatch(
                    "control values must match particles, noise dimension and coarse grid".into(),
                ));
            }
        }
        ControlSource::Policy(_, rec) => {
            if rec.particles() != n || rec.dim() != dp || rec.grid().n_steps() != n_coarse {
                return Err(Error::DimensionMismatch(
                    "control recorder must match particles, noise dimension and coarse grid".into(),
                ));
            }
        }
        ControlSource::None => {}
    }

    let mut paths = Vec::with_capacity(n);
    for x0 in initials {
        let mut p = Path::zeros(grid, d);
        p.point_mut(0).copy_from_slice(x0);
        paths.push(p);
    }
    let mut ens = match weights {
        Some(w) => PathEnsemble::weighted(paths, w.to_vec())?,
        None => PathEnsemble::uniform(paths)?,
    };

    let mut stats = Vec::new();
    let mut drifts = vec![0.0; n * d];
    let mut sigmas = vec![0.0; n * d * dp];
    let mut x_base = vec![0.0; n * d];

    for k in 0..n_coarse {
        let base = k * coarsen;
        {
            let interaction = match frozen {
                Some(f) => f.prefix(base + 1),
                None => ens.prefix(base + 1),
            };
            model.interaction_stats(base, &interaction, &mut stats);
            for i in 0..n {
                let own = match frozen {
                    Some(_) => ens.path(i).prefix(base + 1),
                    None => interaction.member(i),
                };
                model.drift(base, &own, &interaction, &stats, &mut drifts[i * d..(i + 1) * d]);
                model.diffusion(
                    base,
                    &own,
                    &interaction,
                    &stats,
                    &mut sigmas[i * d * dp..(i + 1) * d * dp],
                );
                if let ControlSource::Policy(policy, rec) = &mut control {
                    let mut u = vec![0.0; dp];
                    policy.control(k, &own, &interaction, &mut u);
                    rec.value_mut(i, k).copy_from_slice(&u);
                }
                x_base[i * d..(i + 1) * d].copy_from_slice(ens.path(i).point(base));
            }
        }
        for i in 0..n {
            let b = &drifts[i * d..(i + 1) * d];
            let s = &sigmas[i * d * dp..(i + 1) * d * dp];
            let u: Option<&[f64]> = match &control {
                ControlSource::None => None,
                ControlSource::Open(c) => Some(c.value(i, k)),
                ControlSource::Policy(_, rec) => Some(rec.value(i, k)),
            };
            let noise = &noises[i];
            let start = &x_base[i * d..(i + 1) * d];
            for m in 1..=coarsen {
                let dt = m as f64 * grid.step();
                let w_now = noise.point(base + m);
                let w_base = noise.point(base);
                let target = ens.path_mut(i).point_mut(base + m);
                for c in 0..d {
                    let mut acc = start[c] + dt * b[c];
                    for e in 0..dp {
                        acc += s[c * dp + e] * (w_now[e] - w_base[e]);
                    }
                    if let Some(u) = u {
                        let mut su = 0.0;
                        for e in 0..dp {
                            su += s[c * dp + e] * u[e];
                        }
                        acc += dt * su;
                    }
                    target[c] = acc;
                }
            }
        }
    }
    Ok(ens)
}

/// Unique solution of the explicit recursion with the interaction measure
/// frozen: `X_{k+1} = X_k + h b_k(X, P) + sigma_k(X, P) (W_{k+1} - W_k)`.
pub fn solve_frozen(input: &FrozenInput, model: &dyn Coefficients) -> Result<Path> {
    solve_frozen_refined(input, model, 1)
}

/// Measure-frozen solve with dynamics frozen over `coarsen` storage cells.
pub fn solve_frozen_refined(
    input: &FrozenInput,
    model: &dyn Coefficients,
    coarsen: usize,
) -> Result<Path> {
    let initials = [input.x0.to_vec()];
    let ens = advance(
        model,
        &initials,
        std::slice::from_ref(input.noise),
        None,
        coarsen,
        Some(input.measure),
        ControlSource::None,
    )?;
    Ok(ens.into_paths().into_iter().next().unwrap())
}

/// Advances all particles jointly one grid step at a time, each step seeing
/// the ensemble prefix of all particles.
pub fn simulate_particles(
    model: &dyn Coefficients,
    inputs: DrivingInputs,
) -> Result<ParticleSystemRun> {
    simulate_particles_refined(model, inputs, 1)
}

/// Joint simulation with dynamics frozen over `coarsen` storage cells.
pub fn simulate_particles_refined(
    model: &dyn Coefficients,
    inputs: DrivingInputs,
    coarsen: usize,
) -> Result<ParticleSystemRun> {
    let output = advance(
        model,
        &inputs.initials,
        &inputs.noises,
        inputs.weights.as_deref(),
        coarsen,
        None,
        ControlSource::None,
    )?;
    Ok(ParticleSystemRun { inputs, output, coarsen })
}

/// Same recursion as [`simulate_particles`] with the drift augmented by
/// `sigma_k(X, P) u_k` at each step.
pub fn simulate_controlled(
    model: &dyn Coefficients,
    inputs: DrivingInputs,
    control: &ControlProcess,
) -> Result<ParticleSystemRun> {
    let output = advance(
        model,
        &inputs.initials,
        &inputs.noises,
        inputs.weights.as_deref(),
        1,
        None,
        ControlSource::Open(control),
    )?;
    Ok(ParticleSystemRun { inputs, output, coarsen: 1 })
}

/// Runs a feedback policy, materializing the control values it produced.
pub fn simulate_with_policy(
    model: &dyn Coefficients,
    inputs: DrivingInputs,
    policy: &dyn ControlPolicy,
) -> Result<(ParticleSystemRun, ControlProcess)> {
    let dp = model.meta().dim_noise;
    let mut recorder = ControlProcess::zeros(inputs.grid(), dp, inputs.len());
    let output = advance(
        model,
        &inputs.initials,
        &inputs.noises,
        inputs.weights.as_deref(),
        1,
        None,
        ControlSource::Policy(policy, &mut recorder),
    )?;
    Ok((ParticleSystemRun { inputs, output, coarsen: 1 }, recorder))
}

/// Monte Carlo surrogate for the law of the self-consistent dynamics: the
/// particle system over `m_samples` i.i.d. inputs.
pub fn solve_mckean_ensemble(
    model: &dyn Coefficients,
    grid: TimeGrid,
    init: &InitLaw,
    kind: NoiseKind,
    m_samples: usize,
    seed: u64,
    block: u64,
) -> Result<ParticleSystemRun> {
    if m_samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let inputs = DrivingInputs::sample(
        grid,
        init,
        kind,
        model.meta().dim_noise,
        m_samples,
        seed,
        block,
    )?;
    simulate_particles(model, inputs)
}

/// Re-solves every particle frozen against the run's own output ensemble and
/// reports whether that reproduces the run bit-exactly.
pub fn verify_fixed_point(model: &dyn Coefficients, run: &ParticleSystemRun) -> Result<bool> {
    for i in 0..run.n_particles() {
        let input = FrozenInput {
            x0: &run.inputs.initials[i],
            noise: &run.inputs.noises[i],
            measure: &run.output,
        };
        let resolved = solve_frozen_refined(&input, model, run.coarsen)?;
        let same = resolved
            .values()
            .iter()
            .zip(run.output.path(i).values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sequence of weighted point clouds: the time marginals of an ensemble.
#[derive(Clone, Debug)]
pub struct MarginalCurve {
    grid: TimeGrid,
    dim: usize,
    clouds: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl MarginalCurve {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.clouds.len()
    }

    /// Cloud at grid index `k`, row-major `N x d`.
    pub fn cloud(&self, k: usize) -> &[f64] {
        &self.clouds[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted mean of the cloud at index `k`.
    pub fn mean(&self, k: usize) -> Vec<f64> {
        let n = self.weights.len();
        let mut m = vec![0.0; self.dim];
        for i in 0..n {
            for c in 0..self.dim {
                m[c] += self.weights[i] * self.clouds[k][i * self.dim + c];
            }
        }
        m
    }
}

/// Extracts the marginal clouds `{path_i(k)}` with the ensemble weights.
pub fn project_marginals(ens: &PathEnsemble) -> MarginalCurve {
    let dim = ens.dim();
    let clouds = (0..ens.grid().n_points())
        .map(|k| {
            let mut cloud = Vec::with_capacity(ens.len() * dim);
            for i in 0..ens.len() {
                cloud.extend_from_slice(ens.path(i).point(k));
            }
            cloud
        })
        .collect();
    MarginalCurve { grid: ens.grid(), dim, clouds, weights: ens.weights().to_vec() }
}

#[cfg(test)]
mod tests;
