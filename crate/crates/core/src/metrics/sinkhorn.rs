//! Log-domain Sinkhorn iterations with an epsilon ladder and a linear
//! extrapolation of the final two levels to remove the entropic bias.

use crate::error::{Error, Result};

pub struct SinkhornOutcome {
    /// `(epsilon, <plan, cost>)` for each ladder level, coarsest first.
    pub raw_values: Vec<(f64, f64)>,
    /// Extrapolation of the last two raw values towards epsilon -> 0.
    pub debiased: f64,
    /// Final scaled potentials `(f, g)`.
    pub potentials: (Vec<f64>, Vec<f64>),
    pub iterations: usize,
}

/// Runs the epsilon ladder `eps_start -> eps_target` (geometric, factor
/// sqrt(10)) on the dense cost matrix with marginals `a`, `b`.
pub fn sinkhorn_ladder(
    cost: &[f64],
    a: &[f64],
    b: &[f64],
    eps_start_rel: f64,
    eps_target_rel: f64,
    max_iters: usize,
) -> Result<SinkhornOutcome> {
    let (n, m) = (a.len(), b.len());
    assert_eq!(cost.len(), n * m);
    let scale = cost.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let log_a: Vec<f64> = a.iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|w| w.ln()).collect();

    let mut levels = Vec::new();
    let mut eps = eps_start_rel;
    while eps > eps_target_rel * 1.0001 {
        levels.push(eps * scale);
        eps /= 10f64.sqrt();
    }
    levels.push(eps_target_rel * scale);

    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut raw_values = Vec::new();
    let mut total_iters = 0usize;
    let tol = 1e-11;
    let mut residual = f64::INFINITY;

    for &eps in &levels {
        let mut converged = false;
        for _ in 0..max_iters {
            total_iters += 1;
            // f-update: rows exact afterwards.
            for i in 0..n {
                let mut max_arg = f64::NEG_INFINITY;
                for j in 0..m {
                    let arg = (g[j] - cost[i * m + j]) / eps + log_b[j];
                    max_arg = max_arg.max(arg);
                }
                let mut sum = 0.0;
                for j in 0..m {
                    sum += ((g[j] - cost[i * m + j]) / eps + log_b[j] - max_arg).exp();
                }
                f[i] = -eps * (max_arg + sum.ln());
            }
            // g-update: columns exact afterwards.
            for j in 0..m {
                let mut max_arg = f64::NEG_INFINITY;
                for i in 0..n {
                    let arg = (f[i] - cost[i * m + j]) / eps + log_a[i];
                    max_arg = max_arg.max(arg);
                }
                let mut sum = 0.0;
                for i in 0..n {
                    sum += ((f[i] - cost[i * m + j]) / eps + log_a[i] - max_arg).exp();
                }
                g[j] = -eps * (max_arg + sum.ln());
            }
            residual = row_residual(cost, a, &log_a, &log_b, &f, &g, eps);
            if residual < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                message: format!("sinkhorn stalled at epsilon {eps:.3e}"),
                residual,
            });
        }
        raw_values.push((eps, plan_cost(cost, &log_a, &log_b, &f, &g, eps)));
    }

    let debiased = match raw_values.len() {
        0 => unreachable!(),
        1 => raw_values[0].1,
        k => {
            let (e1, v1) = raw_values[k - 2];
            let (e2, v2) = raw_values[k - 1];
            (v2 + (v2 - v1) * e2 / (e1 - e2)).max(0.0)
        }
    };
    Ok(SinkhornOutcome { raw_values, debiased, potentials: (f, g), iterations: total_iters })
}

/// Plan entry `pi_ij = a_i b_j exp((f_i + g_j - C_ij) / eps)`.
pub fn plan_entry(
    cost: &[f64],
    log_a: &[f64],
    log_b: &[f64],
    f: &[f64],
    g: &[f64],
    eps: f64,
    i: usize,
    j: usize,
) -> f64 {
    let m = log_b.len();
    ((f[i] + g[j] - cost[i * m + j]) / eps + log_a[i] + log_b[j]).exp()
}

fn plan_cost(cost: &[f64], log_a: &[f64], log_b: &[f64], f: &[f64], g: &[f64], eps: f64) -> f64 {
    let (n, m) = (log_a.len(), log_b.len());
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            total += plan_entry(cost, log_a, log_b, f, g, eps, i, j) * cost[i * m + j];
        }
    }
    total
}

fn row_residual(
    cost: &[f64],
    a: &[f64],
    log_a: &[f64],
    log_b: &[f64],
    f: &[f64],
    g: &[f64],
    eps: f64,
) -> f64 {
    let (n, m) = (a.len(), log_b.len());
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..m {
            sum += plan_entry(cost, log_a, log_b, f, g, eps, i, j);
        }
        worst = worst.max((sum - a[i]).abs());
    }
    worst
}
