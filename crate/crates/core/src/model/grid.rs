use crate::error::{Error, Result};

/// Uniform discretisation of `[0, T]` with `n_steps` cells of width `step`.
///
/// The grid owns the floor map `t -> step * floor(t / step)` used to freeze
/// coefficients between grid points. Two grids compare equal iff they were
/// built from the same `(t_end, n_steps)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    step: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Builds the grid with `step = t_end / n_steps`.
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !t_end.is_finite() || t_end <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {t_end}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        let step = t_end / n_steps as f64;
        // step is derived by a single division, so the product stays within a
        // couple of ulps of the horizon; anything larger means corrupt input.
        let defect = (step * n_steps as f64 - t_end).abs();
        if defect > 4.0 * f64::EPSILON * t_end {
            return Err(Error::InvalidGrid(format!(
                "step * n_steps differs from horizon by {defect:e}"
            )));
        }
        Ok(Self { t_end, step, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of stored points, `n_steps + 1`.
    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    /// Time of grid index `k`; the last index maps to `t_end` exactly.
    pub fn time(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n_steps);
        if k == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.step
        }
    }

    /// Index of the last grid point at or before `t`, clamped to the grid.
    ///
    /// Ratios within one part in 1e9 of the next integer are rounded up so
    /// that grid points computed as `k * step` land on their own index.
    pub fn floor_index(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let ratio = t / self.step;
        let base = ratio.floor();
        let k = if ratio - base >= 1.0 - 1e-9 { base + 1.0 } else { base };
        (k as usize).min(self.n_steps)
    }

    /// The floored time `step * floor_index(t)`.
    pub fn floor_time(&self, t: f64) -> f64 {
        self.time(self.floor_index(t))
    }

    /// Grid with `factor` times fewer steps covering the same horizon.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen {} steps by factor {factor}",
                self.n_steps
            )));
        }
        Self::new(self.t_end, self.n_steps / factor)
    }

    /// Grid with `factor` times more steps covering the same horizon.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidGrid("refinement factor must be positive".into()));
        }
        Self::new(self.t_end, self.n_steps * factor)
    }
}
