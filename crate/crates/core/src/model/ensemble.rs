use crate::error::{Error, Result};
use crate::model::grid::TimeGrid;
use crate::model::path::{Path, PrefixView};

const WEIGHT_TOL: f64 = 1e-12;

/// `N` weighted paths over a shared grid, representing an empirical measure on
/// path space. Weights default to `1/N` and must sum to one.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    grid: TimeGrid,
    dim: usize,
    paths: Vec<Path>,
    weights: Vec<f64>,
}

impl PathEnsemble {
    pub fn uniform(paths: Vec<Path>) -> Result<Self> {
        let n = paths.len();
        if n == 0 {
            return Err(Error::InvalidInput("ensemble needs at least one path".into()));
        }
        let w = 1.0 / n as f64;
        Self::weighted(paths, vec![w; n])
    }

    pub fn weighted(paths: Vec<Path>, weights: Vec<f64>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidInput("ensemble needs at least one path".into()));
        }
        if paths.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} paths vs {} weights",
                paths.len(),
                weights.len()
            )));
        }
        let grid = paths[0].grid();
        let dim = paths[0].dim();
        if paths.iter().any(|p| p.grid() != grid || p.dim() != dim) {
            return Err(Error::GridMismatch("ensemble members must share grid and dimension".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be nonnegative and finite".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1 within {WEIGHT_TOL:e}"
            )));
        }
        Ok(Self { grid, dim, paths, weights })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn path(&self, i: usize) -> &Path {
        &self.paths[i]
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_paths(self) -> Vec<Path> {
        self.paths
    }

    pub(crate) fn path_mut(&mut self, i: usize) -> &mut Path {
        &mut self.paths[i]
    }

    /// Ensemble of prefixes of the first `len` points.
    pub fn prefix(&self, len: usize) -> EnsemblePrefix<'_> {
        assert!(len >= 1 && len <= self.grid.n_points());
        EnsemblePrefix { ens: self, len }
    }

    pub fn full(&self) -> EnsemblePrefix<'_> {
        EnsemblePrefix { ens: self, len: self.grid.n_points() }
    }

    /// Weighted mean of member values at grid index `k`, summed in ascending
    /// member order.
    pub fn weighted_mean_at(&self, k: usize) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for (path, &w) in self.paths.iter().zip(&self.weights) {
            for (m, v) in mean.iter_mut().zip(path.point(k)) {
                *m += w * v;
            }
        }
        mean
    }
}

/// Prefix views of every ensemble member, sharing one visible length.
#[derive(Clone, Copy)]
pub struct EnsemblePrefix<'a> {
    ens: &'a PathEnsemble,
    len: usize,
}

impl<'a> EnsemblePrefix<'a> {
    /// Number of members.
    pub fn members(&self) -> usize {
        self.ens.len()
    }

    /// Number of visible points per member.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.ens.dim()
    }

    pub fn grid(&self) -> TimeGrid {
        self.ens.grid()
    }

    pub fn member(&self, i: usize) -> PrefixView<'a> {
        self.ens.path(i).prefix(self.len)
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.ens.weight(i)
    }

    /// Weighted mean of member values at the last visible point, ascending order.
    pub fn mean_last(&self) -> Vec<f64> {
        self.ens.weighted_mean_at(self.len - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 2).unwrap()
    }

    #[test]
    fn uniform_weights() {
        let e = PathEnsemble::uniform(vec![
            Path::constant(grid(), &[1.0]),
            Path::constant(grid(), &[3.0]),
        ])
        .unwrap();
        assert_eq!(e.weight(0), 0.5);
        assert_eq!(e.weighted_mean_at(1), vec![2.0]);
    }

    #[test]
    fn rejects_bad_weights() {
        let paths = vec![Path::constant(grid(), &[0.0]), Path::constant(grid(), &[1.0])];
        assert!(PathEnsemble::weighted(paths.clone(), vec![0.6, 0.6]).is_err());
        assert!(PathEnsemble::weighted(paths.clone(), vec![-0.1, 1.1]).is_err());
        assert!(PathEnsemble::weighted(paths, vec![0.5 + 1e-13, 0.5]).is_ok());
    }

    #[test]
    fn rejects_mixed_grids() {
        let other = TimeGrid::new(1.0, 4).unwrap();
        let paths = vec![Path::constant(grid(), &[0.0]), Path::constant(other, &[0.0])];
        assert!(PathEnsemble::uniform(paths).is_err());
    }

    #[test]
    fn prefix_views() {
        let e = PathEnsemble::uniform(vec![
            Path::from_values(grid(), 1, vec![0.0, 1.0, 5.0]).unwrap(),
            Path::from_values(grid(), 1, vec![2.0, 3.0, 9.0]).unwrap(),
        ])
        .unwrap();
        let pre = e.prefix(2);
        assert_eq!(pre.member(0).last(), &[1.0]);
        assert_eq!(pre.mean_last(), vec![2.0]);
    }
}
