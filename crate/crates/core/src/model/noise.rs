use crate::error::{Error, Result};
use crate::model::grid::TimeGrid;
use crate::model::path::{euclid_norm, Path};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Counter offset reserved for initial-condition sampling, so a stream can
/// carry both a noise path and its initial condition without collisions.
const INIT_COUNTER_BASE: u64 = 1 << 62;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Splittable counter-based generator: every output is a pure function of
/// `(seed, stream, counter)`, so generation order and thread layout never
/// change the values.
#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let state = mix64(seed ^ GOLDEN) ^ mix64(stream.wrapping_mul(0xa24b_aed4_963e_e407));
        Self { state }
    }

    pub fn raw(&self, counter: u64) -> u64 {
        mix64(self.state.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform draw in `(0, 1]`.
    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.raw(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard Gaussian by a fixed Box-Muller transform of counters
    /// `2c` and `2c + 1`.
    pub fn gaussian(&self, counter: u64) -> f64 {
        let u1 = self.uniform(2 * counter);
        let u2 = self.uniform(2 * counter + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Supported driving-noise families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    /// Brownian path: independent centred Gaussian increments of variance
    /// `step` per coordinate.
    Brownian,
    /// Brownian path frozen from the first grid index whose value has norm at
    /// least `radius`.
    StoppedBrownian { radius: f64 },
    /// Brownian path squashed through `radius * tanh(x / radius)`, giving a
    /// smooth everywhere-bounded noise.
    BoundedTanh { radius: f64 },
}

/// Deterministic noise path generator keyed by `(seed, stream)`.
#[derive(Clone, Copy, Debug)]
pub struct NoiseSource {
    pub kind: NoiseKind,
    pub dim: usize,
    pub seed: u64,
    pub stream: u64,
}

impl NoiseSource {
    pub fn new(kind: NoiseKind, dim: usize, seed: u64, stream: u64) -> Self {
        Self { kind, dim, seed, stream }
    }

    /// Samples the path on `grid`. Identical `(seed, stream, kind, grid)`
    /// always produce bit-identical output.
    pub fn sample(&self, grid: &TimeGrid) -> Path {
        let rng = CounterRng::new(self.seed, self.stream);
        let mut path = Path::zeros(*grid, self.dim);
        let sqrt_h = grid.step().sqrt();
        for k in 0..grid.n_steps() {
            for c in 0..self.dim {
                let inc = sqrt_h * rng.gaussian((k * self.dim + c) as u64);
                let prev = path.point(k)[c];
                path.point_mut(k + 1)[c] = prev + inc;
            }
        }
        match self.kind {
            NoiseKind::Brownian => path,
            NoiseKind::StoppedBrownian { radius } => stop_at_radius(path, radius),
            NoiseKind::BoundedTanh { radius } => squash(path, radius),
        }
    }
}

fn stop_at_radius(mut path: Path, radius: f64) -> Path {
    let n = path.grid().n_points();
    let mut frozen_at = None;
    for k in 0..n {
        if euclid_norm(path.point(k)) >= radius {
            frozen_at = Some(k);
            break;
        }
    }
    if let Some(k0) = frozen_at {
        let frozen: Vec<f64> = path.point(k0).to_vec();
        for k in k0 + 1..n {
            path.point_mut(k).copy_from_slice(&frozen);
        }
    }
    path
}

fn squash(mut path: Path, radius: f64) -> Path {
    assert!(radius > 0.0, "bounded noise needs a positive radius");
    let n = path.grid().n_points();
    for k in 0..n {
        for v in path.point_mut(k) {
            *v = radius * (*v / radius).tanh();
        }
    }
    path
}

/// Initial-condition samplers with recorded exponential-moment admissibility.
#[derive(Clone, Debug, PartialEq)]
pub enum InitLaw {
    Point(Vec<f64>),
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    BoundedUniform { low: Vec<f64>, high: Vec<f64> },
}

impl InitLaw {
    pub fn point(x: &[f64]) -> Self {
        InitLaw::Point(x.to_vec())
    }

    pub fn dim(&self) -> usize {
        match self {
            InitLaw::Point(x) => x.len(),
            InitLaw::Gaussian { mean, .. } => mean.len(),
            InitLaw::BoundedUniform { low, .. } => low.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitLaw::Point(_) => Ok(()),
            InitLaw::Gaussian { mean, std } => {
                if mean.len() != std.len() {
                    return Err(Error::DimensionMismatch("gaussian mean/std length".into()));
                }
                if std.iter().any(|s| *s < 0.0) {
                    return Err(Error::InvalidInput("gaussian std must be nonnegative".into()));
                }
                Ok(())
            }
            InitLaw::BoundedUniform { low, high } => {
                if low.len() != high.len() {
                    return Err(Error::DimensionMismatch("uniform low/high length".into()));
                }
                if low.iter().zip(high).any(|(l, h)| l > h) {
                    return Err(Error::InvalidInput("uniform bounds must be ordered".into()));
                }
                Ok(())
            }
        }
    }

    /// Whether `E[exp(a |X|^p)]` is finite for every `a > 0`.
    /// Gaussian tails admit this only for `p < 2`.
    pub fn has_exp_moments(&self, p: f64) -> bool {
        match self {
            InitLaw::Point(_) | InitLaw::BoundedUniform { .. } => true,
            InitLaw::Gaussian { .. } => p < 2.0,
        }
    }

    /// Draws one point using the init counter block of `rng`.
    pub fn sample(&self, rng: &CounterRng) -> Vec<f64> {
        match self {
            InitLaw::Point(x) => x.clone(),
            InitLaw::Gaussian { mean, std } => mean
                .iter()
                .zip(std)
                .enumerate()
                .map(|(c, (m, s))| m + s * rng.gaussian(INIT_COUNTER_BASE + c as u64))
                .collect(),
            InitLaw::BoundedUniform { low, high } => low
                .iter()
                .zip(high)
                .enumerate()
                .map(|(c, (l, h))| l + (h - l) * rng.uniform(2 * (INIT_COUNTER_BASE + c as u64)))
                .collect(),
        }
    }
}

/// Stream id for member `member` of block `block`; blocks are disjoint as
/// long as member indices stay below 2^32.
pub fn stream_id(block: u64, member: u64) -> u64 {
    debug_assert!(member < (1 << 32));
    (block << 32) | member
}
