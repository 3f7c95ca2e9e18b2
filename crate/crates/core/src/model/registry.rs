//! Built-in coefficient models, keyed by name.
//!
//! | name               | drift                                   | diffusion                          |
//! |--------------------|-----------------------------------------|------------------------------------|
//! | `zero`             | 0                                       | `sigma * Id`                       |
//! | `ou_meanfield`     | kernel `a (y_t - x_t)`                  | `sigma * Id`                       |
//! | `kinetic_langevin` | kernel `(p, -kappa (q - q') - gamma p)` | noise on the velocity only         |
//! | `common_vol`       | `a (mean_t - x_t)`                      | `s0 + s1 tanh(mean_t)`, x-free     |
//! | `bounded_tanh`     | kernel `g tanh(y_t - x_t)`              | `sigma * Id`                       |

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::coeffs::{
    kernel_average_diffusion, kernel_average_drift, BinaryKernel, CoeffMeta, Coefficients,
};
use crate::model::ensemble::EnsemblePrefix;
use crate::model::path::PrefixView;

/// Scalar parameters for a registry model.
#[derive(Clone, Debug, Default)]
pub struct ModelParams(BTreeMap<String, f64>);

impl ModelParams {
    pub fn new() -> Self {
        Self(BTreeMap::new())
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.0.insert(key.to_string(), value);
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.0.get(key).copied().unwrap_or(default)
    }
}

impl FromIterator<(String, f64)> for ModelParams {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

pub const MODEL_NAMES: [&str; 5] =
    ["zero", "ou_meanfield", "kinetic_langevin", "common_vol", "bounded_tanh"];

pub fn model_names() -> &'static [&'static str] {
    &MODEL_NAMES
}

/// Builds a registry model from its name and parameters.
pub fn build_model(name: &str, params: &ModelParams) -> Result<Arc<dyn Coefficients>> {
    match name {
        "zero" => Ok(Arc::new(ZeroDrift::new(
            params.get_or("dim", 1.0) as usize,
            params.get_or("sigma", 1.0),
        )?)),
        "ou_meanfield" => Ok(Arc::new(OuMeanField::new(
            params.get_or("dim", 1.0) as usize,
            params.get_or("a", 1.0),
            params.get_or("sigma", 0.5),
        )?)),
        "kinetic_langevin" => Ok(Arc::new(KineticLangevin::new(
            params.get_or("kappa", 1.0),
            params.get_or("gamma", 0.5),
            params.get_or("sigma", 0.7),
        )?)),
        "common_vol" => Ok(Arc::new(CommonVol::new(
            params.get_or("a", 1.0),
            params.get_or("sigma0", 0.4),
            params.get_or("sigma1", 0.3),
        )?)),
        "bounded_tanh" => Ok(Arc::new(BoundedTanh::new(
            params.get_or("dim", 1.0) as usize,
            params.get_or("gain", 1.0),
            params.get_or("sigma", 0.5),
        )?)),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// One-line description with the hypothesis flags experiments match against.
pub fn describe_model(name: &str) -> Result<String> {
    let model = build_model(name, &ModelParams::new())?;
    let m = model.meta();
    Ok(format!(
        "{name}: d={} d'={} sigma_depends_on_x={} sigma_depends_on_measure={} \
         binary_kernel={} lip_drift={} lip_diffusion={} bound_diffusion={}",
        m.dim_state,
        m.dim_noise,
        m.sigma_depends_on_x,
        m.sigma_depends_on_measure,
        m.is_binary_kernel,
        m.lip_drift,
        m.lip_diffusion,
        m.bound_diffusion
    ))
}

fn write_scaled_identity(scale: f64, d: usize, dp: usize, out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..d.min(dp) {
        out[i * dp + i] = scale;
    }
}

// ---------------------------------------------------------------------------
// zero: driftless with constant diagonal diffusion.
// ---------------------------------------------------------------------------

pub struct ZeroDrift {
    meta: CoeffMeta,
    sigma: f64,
}

impl ZeroDrift {
    pub fn new(dim: usize, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dim must be positive".into()));
        }
        Ok(Self {
            meta: CoeffMeta {
                dim_state: dim,
                dim_noise: dim,
                lip_drift: 0.0,
                lip_diffusion: 0.0,
                bound_diffusion: sigma.abs() * (dim as f64).sqrt(),
                sigma_depends_on_x: false,
                sigma_depends_on_measure: false,
                is_binary_kernel: true,
            },
            sigma,
        })
    }
}

impl Coefficients for ZeroDrift {
    fn meta(&self) -> &CoeffMeta {
        &self.meta
    }

    fn drift(&self, _: usize, _: &PrefixView, _: &EnsemblePrefix, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn diffusion(&self, _: usize, _: &PrefixView, _: &EnsemblePrefix, _: &[f64], out: &mut [f64]) {
        write_scaled_identity(self.sigma, self.meta.dim_state, self.meta.dim_noise, out);
    }

    fn binary(&self) -> Option<&dyn BinaryKernel> {
        Some(self)
    }
}

impl BinaryKernel for ZeroDrift {
    fn kernel_drift(&self, _: usize, _: &PrefixView, _: &PrefixView, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn kernel_diffusion(&self, _: usize, _: &PrefixView, _: &PrefixView, out: &mut [f64]) {
        write_scaled_identity(self.sigma, self.meta.dim_state, self.meta.dim_noise, out);
    }

    fn kernel_drift_dx(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_drift_dy(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_dx(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_dy(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_is_constant(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// ou_meanfield: linear attraction to the ensemble mean, constant diffusion.
// The interaction statistic is the weighted mean of current values.
// ---------------------------------------------------------------------------

pub struct OuMeanField {
    meta: CoeffMeta,
    a: f64,
    sigma: f64,
}

impl OuMeanField {
    pub fn new(dim: usize, a: f64, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dim must be positive".into()));
        }
        Ok(Self {
            meta: CoeffMeta {
                dim_state: dim,
                dim_noise: dim,
                lip_drift: 2.0 * a.abs(),
                lip_diffusion: 0.0,
                bound_diffusion: sigma.abs() * (dim as f64).sqrt(),
                sigma_depends_on_x: false,
                sigma_depends_on_measure: false,
                is_binary_kernel: true,
            },
            a,
            sigma,
        })
    }
}

impl Coefficients for OuMeanField {
    fn meta(&self) -> &CoeffMeta {
        &self.meta
    }

    fn interaction_stats(&self, _: usize, measure: &EnsemblePrefix, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&measure.mean_last());
    }

    fn drift(&self, _: usize, own: &PrefixView, _: &EnsemblePrefix, stats: &[f64], out: &mut [f64]) {
        let x = own.last();
        for i in 0..out.len() {
            out[i] = self.a * (stats[i] - x[i]);
        }
    }

    fn diffusion(&self, _: usize, _: &PrefixView, _: &EnsemblePrefix, _: &[f64], out: &mut [f64]) {
        write_scaled_identity(self.sigma, self.meta.dim_state, self.meta.dim_noise, out);
    }

    fn binary(&self) -> Option<&dyn BinaryKernel> {
        Some(self)
    }
}

impl BinaryKernel for OuMeanField {
    fn kernel_drift(&self, _: usize, x: &PrefixView, y: &PrefixView, out: &mut [f64]) {
        let xv = x.last();
        let yv = y.last();
        for i in 0..out.len() {
            out[i] = self.a * (yv[i] - xv[i]);
        }
    }

    fn kernel_diffusion(&self, _: usize, _: &PrefixView, _: &PrefixView, out: &mut [f64]) {
        write_scaled_identity(self.sigma, self.meta.dim_state, self.meta.dim_noise, out);
    }

    fn kernel_drift_dx(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    ) {
        let v = dir.last();
        for i in 0..out.len() {
            out[i] = -self.a * v[i];
        }
    }

    fn kernel_drift_dy(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    ) {
        let v = dir.last();
        for i in 0..out.len() {
            out[i] = self.a * v[i];
        }
    }

    fn kernel_diffusion_dx(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_dy(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_is_constant(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// kinetic_langevin: position-velocity pair with attraction of the position to
// other positions and friction on the velocity; noise enters the velocity
// only, so the diffusion matrix is degenerate.
// ---------------------------------------------------------------------------

pub struct KineticLangevin {
    meta: CoeffMeta,
    kappa: f64,
    gamma: f64,
    sigma: f64,
}

impl KineticLangevin {
    pub fn new(kappa: f64, gamma: f64, sigma: f64) -> Result<Self> {
        Ok(Self {
            meta: CoeffMeta {
                dim_state: 2,
                dim_noise: 1,
                lip_drift: 1.0 + 2.0 * kappa.abs() + gamma.abs(),
                lip_diffusion: 0.0,
                bound_diffusion: sigma.abs(),
                sigma_depends_on_x: false,
                sigma_depends_on_measure: false,
                is_binary_kernel: true,
            },
            kappa,
            gamma,
            sigma,
        })
    }
}

impl Coefficients for KineticLangevin {
    fn meta(&self) -> &CoeffMeta {
        &self.meta
    }

    fn interaction_stats(&self, _: usize, measure: &EnsemblePrefix, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&measure.mean_last());
    }

    fn drift(&self, _: usize, own: &PrefixView, _: &EnsemblePrefix, stats: &[f64], out: &mut [f64]) {
        let x = own.last();
        out[0] = x[1];
        out[1] = -self.kappa * (x[0] - stats[0]) - self.gamma * x[1];
    }

    fn diffusion(&self, _: usize, _: &PrefixView, _: &EnsemblePrefix, _: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = self.sigma;
    }

    fn binary(&self) -> Option<&dyn BinaryKernel> {
        Some(self)
    }
}

impl BinaryKernel for KineticLangevin {
    fn kernel_drift(&self, _: usize, x: &PrefixView, y: &PrefixView, out: &mut [f64]) {
        let xv = x.last();
        let yv = y.last();
        out[0] = xv[1];
        out[1] = -self.kappa * (xv[0] - yv[0]) - self.gamma * xv[1];
    }

    fn kernel_diffusion(&self, _: usize, _: &PrefixView, _: &PrefixView, out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = self.sigma;
    }

    fn kernel_drift_dx(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    ) {
        let v = dir.last();
        out[0] = v[1];
        out[1] = -self.kappa * v[0] - self.gamma * v[1];
    }

    fn kernel_drift_dy(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    ) {
        let v = dir.last();
        out[0] = 0.0;
        out[1] = self.kappa * v[0];
    }

    fn kernel_diffusion_dx(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_dy(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_is_constant(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// common_vol: mean-reverting drift with a volatility driven by the ensemble
// mean and independent of the particle's own state.
// ---------------------------------------------------------------------------

pub struct CommonVol {
    meta: CoeffMeta,
    a: f64,
    sigma0: f64,
    sigma1: f64,
}

impl CommonVol {
    pub fn new(a: f64, sigma0: f64, sigma1: f64) -> Result<Self> {
        if sigma0 < 0.0 || sigma1 < 0.0 {
            return Err(Error::InvalidInput("volatility parameters must be nonnegative".into()));
        }
        Ok(Self {
            meta: CoeffMeta {
                dim_state: 1,
                dim_noise: 1,
                lip_drift: 2.0 * a.abs(),
                lip_diffusion: sigma1,
                bound_diffusion: sigma0 + sigma1,
                sigma_depends_on_x: false,
                sigma_depends_on_measure: true,
                is_binary_kernel: false,
            },
            a,
            sigma0,
            sigma1,
        })
    }
}

impl Coefficients for CommonVol {
    fn meta(&self) -> &CoeffMeta {
        &self.meta
    }

    fn interaction_stats(&self, _: usize, measure: &EnsemblePrefix, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&measure.mean_last());
    }

    fn drift(&self, _: usize, own: &PrefixView, _: &EnsemblePrefix, stats: &[f64], out: &mut [f64]) {
        out[0] = self.a * (stats[0] - own.last()[0]);
    }

    fn diffusion(&self, _: usize, _: &PrefixView, _: &EnsemblePrefix, stats: &[f64], out: &mut [f64]) {
        out[0] = self.sigma0 + self.sigma1 * stats[0].tanh();
    }
}

// ---------------------------------------------------------------------------
// bounded_tanh: bounded smooth binary kernel, the workhorse for fluctuation
// experiments. Componentwise `g tanh(y_t - x_t)` with constant diffusion.
// ---------------------------------------------------------------------------

pub struct BoundedTanh {
    meta: CoeffMeta,
    gain: f64,
    sigma: f64,
}

impl BoundedTanh {
    pub fn new(dim: usize, gain: f64, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dim must be positive".into()));
        }
        Ok(Self {
            meta: CoeffMeta {
                dim_state: dim,
                dim_noise: dim,
                lip_drift: 2.0 * gain.abs(),
                lip_diffusion: 0.0,
                bound_diffusion: sigma.abs() * (dim as f64).sqrt(),
                sigma_depends_on_x: true,
                sigma_depends_on_measure: false,
                is_binary_kernel: true,
            },
            gain,
            sigma,
        })
    }
}

impl Coefficients for BoundedTanh {
    fn meta(&self) -> &CoeffMeta {
        &self.meta
    }

    fn drift(
        &self,
        step: usize,
        own: &PrefixView,
        measure: &EnsemblePrefix,
        _: &[f64],
        out: &mut [f64],
    ) {
        kernel_average_drift(self, step, own, measure, out);
    }

    fn diffusion(&self, _: usize, _: &PrefixView, _: &EnsemblePrefix, _: &[f64], out: &mut [f64]) {
        write_scaled_identity(self.sigma, self.meta.dim_state, self.meta.dim_noise, out);
    }

    fn binary(&self) -> Option<&dyn BinaryKernel> {
        Some(self)
    }
}

fn sech_sq(z: f64) -> f64 {
    let c = z.cosh();
    1.0 / (c * c)
}

impl BinaryKernel for BoundedTanh {
    fn kernel_drift(&self, _: usize, x: &PrefixView, y: &PrefixView, out: &mut [f64]) {
        let xv = x.last();
        let yv = y.last();
        for i in 0..out.len() {
            out[i] = self.gain * (yv[i] - xv[i]).tanh();
        }
    }

    fn kernel_diffusion(&self, _: usize, _: &PrefixView, _: &PrefixView, out: &mut [f64]) {
        write_scaled_identity(self.sigma, self.meta.dim_state, self.meta.dim_noise, out);
    }

    fn kernel_drift_dx(
        &self,
        _: usize,
        x: &PrefixView,
        y: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    ) {
        let xv = x.last();
        let yv = y.last();
        let v = dir.last();
        for i in 0..out.len() {
            out[i] = -self.gain * sech_sq(yv[i] - xv[i]) * v[i];
        }
    }

    fn kernel_drift_dy(
        &self,
        _: usize,
        x: &PrefixView,
        y: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    ) {
        let xv = x.last();
        let yv = y.last();
        let v = dir.last();
        for i in 0..out.len() {
            out[i] = self.gain * sech_sq(yv[i] - xv[i]) * v[i];
        }
    }

    fn kernel_diffusion_dx(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_dy(
        &self,
        _: usize,
        _: &PrefixView,
        _: &PrefixView,
        _: &PrefixView,
        out: &mut [f64],
    ) {
        out.fill(0.0);
    }

    fn kernel_diffusion_is_constant(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::coeffs::{eval_diffusion, eval_drift};
    use crate::model::ensemble::PathEnsemble;
    use crate::model::grid::TimeGrid;
    use crate::model::noise::{NoiseKind, NoiseSource};
    use crate::model::path::Path;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 4).unwrap()
    }

    fn random_ensemble(n: usize, dim: usize, seed: u64) -> PathEnsemble {
        let paths = (0..n)
            .map(|i| NoiseSource::new(NoiseKind::Brownian, dim, seed, i as u64).sample(&grid()))
            .collect();
        PathEnsemble::uniform(paths).unwrap()
    }

    #[test]
    fn registry_lists_and_describes() {
        assert!(model_names().contains(&"ou_meanfield"));
        let desc = describe_model("common_vol").unwrap();
        assert!(desc.contains("sigma_depends_on_x=false"));
        assert!(build_model("nope", &ModelParams::new()).is_err());
    }

    #[test]
    fn zero_drift_is_zero() {
        let model = build_model("zero", &ModelParams::new()).unwrap();
        let ens = random_ensemble(3, 1, 1);
        let own = ens.path(0).prefix(3);
        let b = eval_drift(model.as_ref(), 2, &own, &ens.prefix(3)).unwrap();
        assert_eq!(b, vec![0.0]);
    }

    #[test]
    fn kernel_average_matches_hand_case() {
        // kernel a (y_t - x_t) against a single constant path at 2 from 0.
        let model = OuMeanField::new(1, 1.0, 0.0).unwrap();
        let ens = PathEnsemble::uniform(vec![Path::constant(grid(), &[2.0])]).unwrap();
        let own = Path::constant(grid(), &[0.0]);
        for k in 0..=2 {
            let b = eval_drift(&model, k, &own.prefix(k + 1), &ens.prefix(k + 1)).unwrap();
            assert_eq!(b, vec![2.0]);
        }
    }

    #[test]
    fn binary_drift_matches_direct_loop() {
        // Oracle: plain loop over members, re-implemented here.
        let model = BoundedTanh::new(2, 0.7, 0.3).unwrap();
        let ens = random_ensemble(7, 2, 3);
        let own = NoiseSource::new(NoiseKind::Brownian, 2, 9, 0).sample(&grid());
        for k in 0..grid().n_points() {
            let got = eval_drift(&model, k, &own.prefix(k + 1), &ens.prefix(k + 1)).unwrap();
            let mut want = vec![0.0; 2];
            for j in 0..ens.len() {
                let x = own.point(k);
                let y = ens.path(j).point(k);
                for c in 0..2 {
                    want[c] += ens.weight(j) * 0.7 * (y[c] - x[c]).tanh();
                }
            }
            for c in 0..2 {
                assert!((got[c] - want[c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn prefix_length_contract() {
        let model = build_model("ou_meanfield", &ModelParams::new()).unwrap();
        let ens = random_ensemble(3, 1, 5);
        let own = ens.path(0).prefix(2);
        assert!(eval_drift(model.as_ref(), 2, &own, &ens.prefix(3)).is_err());
    }

    #[test]
    fn non_anticipativity_for_all_models() {
        // Two ensembles agreeing up to index k but differing later must give
        // identical coefficients at k.
        for name in model_names() {
            let model = build_model(name, &ModelParams::new()).unwrap();
            let d = model.meta().dim_state;
            let ens = random_ensemble(4, d, 11);
            let mut later = ens.clone();
            for i in 0..later.len() {
                let last = later.grid().n_points() - 1;
                for v in later.path_mut(i).point_mut(last) {
                    *v += 7.0;
                }
            }
            let k = 2;
            let own_a = ens.path(0).prefix(k + 1);
            let own_b = later.path(0).prefix(k + 1);
            let b_a = eval_drift(model.as_ref(), k, &own_a, &ens.prefix(k + 1)).unwrap();
            let b_b = eval_drift(model.as_ref(), k, &own_b, &later.prefix(k + 1)).unwrap();
            assert_eq!(b_a, b_b, "drift of {name} looked ahead");
            let s_a = eval_diffusion(model.as_ref(), k, &own_a, &ens.prefix(k + 1)).unwrap();
            let s_b = eval_diffusion(model.as_ref(), k, &own_b, &later.prefix(k + 1)).unwrap();
            assert_eq!(s_a, s_b, "diffusion of {name} looked ahead");
        }
    }

    #[test]
    fn kernel_derivatives_match_finite_differences() {
        // Slope test: |(k(x + eps v) - k(x)) / eps - Dk v| = O(eps).
        let models: Vec<(&str, Box<dyn BinaryKernel>)> = vec![
            ("ou_meanfield", Box::new(OuMeanField::new(1, 1.3, 0.5).unwrap())),
            ("bounded_tanh", Box::new(BoundedTanh::new(1, 0.9, 0.5).unwrap())),
            ("kinetic_langevin", Box::new(KineticLangevin::new(1.1, 0.4, 0.7).unwrap())),
        ];
        for (name, model) in &models {
            let d = model.meta().dim_state;
            let g = grid();
            let x = NoiseSource::new(NoiseKind::Brownian, d, 21, 0).sample(&g);
            let y = NoiseSource::new(NoiseKind::Brownian, d, 21, 1).sample(&g);
            let v = NoiseSource::new(NoiseKind::BoundedTanh { radius: 1.0 }, d, 21, 2).sample(&g);
            let k = 3;
            for &eps in &[1e-3, 1e-4] {
                let mut x_pert = x.clone();
                let mut y_pert = y.clone();
                for idx in 0..=k {
                    for c in 0..d {
                        x_pert.point_mut(idx)[c] += eps * v.point(idx)[c];
                        y_pert.point_mut(idx)[c] += eps * v.point(idx)[c];
                    }
                }
                let mut base = vec![0.0; d];
                let mut bumped = vec![0.0; d];
                let mut deriv = vec![0.0; d];
                model.kernel_drift(k, &x.prefix(k + 1), &y.prefix(k + 1), &mut base);

                model.kernel_drift(k, &x_pert.prefix(k + 1), &y.prefix(k + 1), &mut bumped);
                model.kernel_drift_dx(k, &x.prefix(k + 1), &y.prefix(k + 1), &v.prefix(k + 1), &mut deriv);
                for c in 0..d {
                    let fd = (bumped[c] - base[c]) / eps;
                    assert!(
                        (fd - deriv[c]).abs() <= 20.0 * eps,
                        "{name} D_x mismatch {fd} vs {} at eps {eps}",
                        deriv[c]
                    );
                }

                model.kernel_drift(k, &x.prefix(k + 1), &y_pert.prefix(k + 1), &mut bumped);
                model.kernel_drift_dy(k, &x.prefix(k + 1), &y.prefix(k + 1), &v.prefix(k + 1), &mut deriv);
                for c in 0..d {
                    let fd = (bumped[c] - base[c]) / eps;
                    assert!(
                        (fd - deriv[c]).abs() <= 20.0 * eps,
                        "{name} D_y mismatch {fd} vs {} at eps {eps}",
                        deriv[c]
                    );
                }
            }
        }
    }

    #[test]
    fn diffusion_bound_holds_on_samples() {
        for name in model_names() {
            let model = build_model(name, &ModelParams::new()).unwrap();
            let d = model.meta().dim_state;
            let ens = random_ensemble(5, d, 31);
            for k in 0..grid().n_points() {
                crate::model::coeffs::validate_diffusion_bound(
                    model.as_ref(),
                    k,
                    &ens.path(0).prefix(k + 1),
                    &ens.prefix(k + 1),
                )
                .unwrap();
            }
        }
    }
}
