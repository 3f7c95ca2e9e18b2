use crate::error::{Error, Result};
use crate::model::ensemble::EnsemblePrefix;
use crate::model::path::{euclid_norm, PrefixView};

/// Declared structure of a coefficient field.
#[derive(Clone, Debug)]
pub struct CoeffMeta {
    /// State dimension `d`.
    pub dim_state: usize,
    /// Noise dimension `d'`.
    pub dim_noise: usize,
    /// Lipschitz constant of the drift in `(path, measure)`.
    pub lip_drift: f64,
    /// Lipschitz constant of the diffusion in `(path, measure)`.
    pub lip_diffusion: f64,
    /// Global Frobenius bound on the diffusion.
    pub bound_diffusion: f64,
    pub sigma_depends_on_x: bool,
    pub sigma_depends_on_measure: bool,
    pub is_binary_kernel: bool,
}

/// Evaluators for the drift `b` and diffusion `sigma` of an interacting
/// system. Both consume only prefix views up to the current grid index, so
/// non-anticipativity is structural.
///
/// `interaction_stats` is called once per time step with the ensemble prefix;
/// whatever it stores is handed back to every `drift`/`diffusion` call of that
/// step. Models with mean-type interactions put their sufficient statistics
/// there so a step costs `O(N)` instead of `O(N^2)`. Statistics must be a pure
/// function of the visible values in ascending member order, which keeps
/// re-evaluation against a frozen copy of the same ensemble bit-identical.
pub trait Coefficients: Send + Sync {
    fn meta(&self) -> &CoeffMeta;

    fn interaction_stats(&self, step: usize, measure: &EnsemblePrefix, out: &mut Vec<f64>) {
        let _ = (step, measure);
        out.clear();
    }

    /// Drift at grid index `step`, written into `out` (`d` entries).
    fn drift(
        &self,
        step: usize,
        own: &PrefixView,
        measure: &EnsemblePrefix,
        stats: &[f64],
        out: &mut [f64],
    );

    /// Diffusion at grid index `step`, written into `out` row-major
    /// (`d * d'` entries).
    fn diffusion(
        &self,
        step: usize,
        own: &PrefixView,
        measure: &EnsemblePrefix,
        stats: &[f64],
        out: &mut [f64],
    );

    /// Access to the binary-kernel refinement when the model has one.
    fn binary(&self) -> Option<&dyn BinaryKernel> {
        None
    }
}

/// Refinement for coefficients of the form `b(x, P) = integral of a kernel
/// against P`, together with the kernel derivatives needed by the linearized
/// flow. Derivative evaluators take a perturbation direction as a path prefix
/// and return the directional derivative.
pub trait BinaryKernel: Coefficients {
    fn kernel_drift(&self, step: usize, x: &PrefixView, y: &PrefixView, out: &mut [f64]);

    fn kernel_diffusion(&self, step: usize, x: &PrefixView, y: &PrefixView, out: &mut [f64]);

    fn kernel_drift_dx(
        &self,
        step: usize,
        x: &PrefixView,
        y: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    );

    fn kernel_drift_dy(
        &self,
        step: usize,
        x: &PrefixView,
        y: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    );

    fn kernel_diffusion_dx(
        &self,
        step: usize,
        x: &PrefixView,
        y: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    );

    fn kernel_diffusion_dy(
        &self,
        step: usize,
        x: &PrefixView,
        y: &PrefixView,
        dir: &PrefixView,
        out: &mut [f64],
    );

    /// Whether the kernel diffusion is constant, letting consumers skip its
    /// derivative sums.
    fn kernel_diffusion_is_constant(&self) -> bool {
        false
    }
}

/// Weighted kernel average over the ensemble in ascending member order; the
/// reference summation for binary drifts.
pub fn kernel_average_drift(
    model: &dyn BinaryKernel,
    step: usize,
    own: &PrefixView,
    measure: &EnsemblePrefix,
    out: &mut [f64],
) {
    out.fill(0.0);
    let mut term = vec![0.0; out.len()];
    for j in 0..measure.members() {
        model.kernel_drift(step, own, &measure.member(j), &mut term);
        let w = measure.weight(j);
        for (o, t) in out.iter_mut().zip(&term) {
            *o += w * t;
        }
    }
}

/// Weighted kernel average for the diffusion, ascending member order.
pub fn kernel_average_diffusion(
    model: &dyn BinaryKernel,
    step: usize,
    own: &PrefixView,
    measure: &EnsemblePrefix,
    out: &mut [f64],
) {
    out.fill(0.0);
    let mut term = vec![0.0; out.len()];
    for j in 0..measure.members() {
        model.kernel_diffusion(step, own, &measure.member(j), &mut term);
        let w = measure.weight(j);
        for (o, t) in out.iter_mut().zip(&term) {
            *o += w * t;
        }
    }
}

fn check_prefixes(
    model: &dyn Coefficients,
    step: usize,
    own: &PrefixView,
    measure: &EnsemblePrefix,
) -> Result<()> {
    if own.len() != step + 1 || measure.len() != step + 1 {
        return Err(Error::Contract(format!(
            "prefix lengths ({}, {}) do not match step index {step}",
            own.len(),
            measure.len()
        )));
    }
    if own.dim() != model.meta().dim_state || measure.dim() != model.meta().dim_state {
        return Err(Error::DimensionMismatch(format!(
            "model state dimension {} vs prefix dimension {}",
            model.meta().dim_state,
            own.dim()
        )));
    }
    Ok(())
}

/// Drift of `model` at grid index `step`, using only data up to that index.
pub fn eval_drift(
    model: &dyn Coefficients,
    step: usize,
    own: &PrefixView,
    measure: &EnsemblePrefix,
) -> Result<Vec<f64>> {
    check_prefixes(model, step, own, measure)?;
    let mut stats = Vec::new();
    model.interaction_stats(step, measure, &mut stats);
    let mut out = vec![0.0; model.meta().dim_state];
    model.drift(step, own, measure, &stats, &mut out);
    Ok(out)
}

/// Diffusion of `model` at grid index `step`, row-major `d x d'`.
pub fn eval_diffusion(
    model: &dyn Coefficients,
    step: usize,
    own: &PrefixView,
    measure: &EnsemblePrefix,
) -> Result<Vec<f64>> {
    check_prefixes(model, step, own, measure)?;
    let mut stats = Vec::new();
    model.interaction_stats(step, measure, &mut stats);
    let meta = model.meta();
    let mut out = vec![0.0; meta.dim_state * meta.dim_noise];
    model.diffusion(step, own, measure, &stats, &mut out);
    debug_assert!(
        euclid_norm(&out) <= meta.bound_diffusion * (1.0 + 1e-12),
        "diffusion bound violated: |sigma| = {} > {}",
        euclid_norm(&out),
        meta.bound_diffusion
    );
    Ok(out)
}

/// Checks the declared diffusion bound on sampled prefixes; used by tests and
/// by the registry validation mode.
pub fn validate_diffusion_bound(
    model: &dyn Coefficients,
    step: usize,
    own: &PrefixView,
    measure: &EnsemblePrefix,
) -> Result<()> {
    let sigma = eval_diffusion(model, step, own, measure)?;
    let norm = euclid_norm(&sigma);
    if norm > model.meta().bound_diffusion * (1.0 + 1e-12) {
        return Err(Error::Contract(format!(
            "diffusion norm {norm} exceeds declared bound {}",
            model.meta().bound_diffusion
        )));
    }
    Ok(())
}
