use crate::error::{Error, Result};
use crate::model::grid::TimeGrid;

/// A `dim`-dimensional sample path stored at the `n_steps + 1` grid points.
///
/// Values are stored row-major: point `k` occupies `values[k*dim .. (k+1)*dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl Path {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self { grid, dim, values: vec![0.0; grid.n_points() * dim] }
    }

    /// Constant path sitting at `point`.
    pub fn constant(grid: TimeGrid, point: &[f64]) -> Self {
        let mut values = Vec::with_capacity(grid.n_points() * point.len());
        for _ in 0..grid.n_points() {
            values.extend_from_slice(point);
        }
        Self { grid, dim: point.len(), values }
    }

    pub fn from_values(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("path dimension must be positive".into()));
        }
        if values.len() != grid.n_points() * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values, got {}",
                grid.n_points() * dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("path values must be finite".into()));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Value at grid index `k`.
    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub(crate) fn point_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// View of the first `len` points; nothing later is reachable through it.
    pub fn prefix(&self, len: usize) -> PrefixView<'_> {
        assert!(len >= 1 && len <= self.grid.n_points(), "prefix length {len} out of range");
        PrefixView { path: self, len }
    }

    pub fn full(&self) -> PrefixView<'_> {
        PrefixView { path: self, len: self.grid.n_points() }
    }

    /// Largest Euclidean point norm along the path.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.n_points())
            .map(|k| euclid_norm(self.point(k)))
            .fold(0.0, f64::max)
    }

    /// Whether the path stays in the closed ball of radius `m`.
    pub fn bounded_by(&self, m: f64) -> bool {
        self.sup_norm() <= m
    }

    /// Pointwise difference, for coupling statistics.
    pub fn sub(&self, other: &Path) -> Result<Path> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::GridMismatch("paths differ in grid or dimension".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Path { grid: self.grid, dim: self.dim, values })
    }
}

pub(crate) fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Non-anticipative window into a path: exactly the first `len` grid points.
#[derive(Clone, Copy)]
pub struct PrefixView<'a> {
    path: &'a Path,
    len: usize,
}

impl<'a> PrefixView<'a> {
    /// Number of visible points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the last visible point.
    pub fn last_index(&self) -> usize {
        self.len - 1
    }

    pub fn grid(&self) -> TimeGrid {
        self.path.grid()
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    pub fn point(&self, k: usize) -> &'a [f64] {
        assert!(k < self.len, "index {k} beyond prefix of length {}", self.len);
        self.path.point(k)
    }

    /// Value at the last visible grid point.
    pub fn last(&self) -> &'a [f64] {
        self.path.point(self.len - 1)
    }

    /// Shorter view of the same path.
    pub fn truncate(&self, len: usize) -> PrefixView<'a> {
        assert!(len >= 1 && len <= self.len);
        PrefixView { path: self.path, len }
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len)
            .map(|k| euclid_norm(self.path.point(k)))
            .fold(0.0, f64::max)
    }
}
