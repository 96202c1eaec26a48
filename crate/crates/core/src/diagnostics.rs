//! Analytical quantities monitored during and after training: primal and
//! dual objectives, the exact per-step dual progress, the relative
//! approximation error of a budgeted model, the smallest eigenvalue of Q,
//! the predicted long-run step fractions, and the per-epoch CSV records.
//!
//! For the primal solvers (which carry no dual coefficients) the dual
//! objective column is estimated from the model expansion as
//! `scale * sum_j |beta_j| - ||w||^2 / 2`; for an exact SGD run with
//! coalescing this equals the true dual value.

use crate::data::SparseDataset;
use crate::kernel::{kernel_eval, KernelSpec};
use crate::model::{AlphaState, BudgetModel};
use crate::solver::{truncated_newton_delta, StepCounters};
use crate::{Error, Result};

/// One CSV row of per-epoch diagnostics.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub wall_time_s: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub test_accuracy: f64,
    pub sv_count: usize,
    pub merge_fraction: f64,
    pub violation_fraction: f64,
    pub nonzero_step_fraction: f64,
}

impl EpochRecord {
    pub const CSV_HEADER: &'static str = "epoch,wall_time_s,primal_obj,dual_obj,test_accuracy,sv_count,merge_fraction,violation_fraction,nonzero_step_fraction";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
            self.epoch,
            self.wall_time_s,
            self.primal_obj,
            self.dual_obj,
            self.test_accuracy,
            self.sv_count,
            self.merge_fraction,
            self.violation_fraction,
            self.nonzero_step_fraction
        )
    }
}

/// `P(w) = lambda/2 ||w||^2 + mean hinge loss`, with `lambda = 1/(nC)`.
pub fn primal_objective(model: &BudgetModel, ds: &SparseDataset, c: f64) -> f64 {
    let n = ds.n() as f64;
    let lambda = 1.0 / (n * c);
    let mut loss = 0.0;
    for i in 0..ds.n() {
        let margin = model.predict_margin(ds.example(i));
        loss += (1.0 - ds.label(i) * margin).max(0.0);
    }
    0.5 * lambda * model.model_norm_sq() + loss / n
}

/// `D(alpha) = 1^T alpha - 1/2 alpha^T Q alpha`, summed over the nonzero
/// coordinates only.
pub fn dual_objective(alpha: &[f64], ds: &SparseDataset, spec: KernelSpec) -> f64 {
    let nz: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] != 0.0).collect();
    let mut linear = 0.0;
    let mut quad = 0.0;
    for (a, &i) in nz.iter().enumerate() {
        linear += alpha[i];
        let (xi, yi) = (ds.example(i), ds.label(i));
        quad += alpha[i] * alpha[i] * kernel_eval(spec, xi, xi);
        for &j in &nz[a + 1..] {
            quad += 2.0 * alpha[i] * alpha[j] * yi * ds.label(j) * kernel_eval(spec, xi, ds.example(j));
        }
    }
    linear - 0.5 * quad
}

/// `Q_i alpha` for one coordinate, over the nonzero coordinates.
pub fn q_row_dot_alpha(alpha: &[f64], ds: &SparseDataset, spec: KernelSpec, i: usize) -> f64 {
    let (xi, yi) = (ds.example(i), ds.label(i));
    let mut sum = 0.0;
    for (j, &aj) in alpha.iter().enumerate() {
        if aj != 0.0 {
            sum += aj * yi * ds.label(j) * kernel_eval(spec, xi, ds.example(j));
        }
    }
    sum
}

/// The exact change of the dual objective produced by adding `delta` to
/// coordinate `i`: `J = Q_ii/2 * ((g/Q_ii)^2 - (delta - g/Q_ii)^2)` with
/// `g = 1 - Q_i alpha`.
pub fn progress_j(alpha: &[f64], ds: &SparseDataset, spec: KernelSpec, i: usize, delta: f64) -> f64 {
    let q_ii = kernel_eval(spec, ds.example(i), ds.example(i));
    let g = 1.0 - q_row_dot_alpha(alpha, ds, spec, i);
    progress_j_from_gradient(g, q_ii, delta)
}

/// Same as [`progress_j`] with the coordinate gradient already known.
pub fn progress_j_from_gradient(gradient: f64, q_ii: f64, delta: f64) -> f64 {
    let opt = gradient / q_ii;
    0.5 * q_ii * (opt * opt - (delta - opt) * (delta - opt))
}

/// Relative approximation error `E(w, w~)`: one minus the worst-case ratio
/// between the dual progress of the clipped step computed from the budgeted
/// margins and the progress of the step computed from the exact margins.
/// Coordinates whose exact step yields zero progress are skipped; if every
/// denominator vanishes (alpha is optimal) the error is zero.
pub fn relative_approx_error(
    alpha: &[f64],
    exact_margins: &[f64],
    budget_margins: &[f64],
    ds: &SparseDataset,
    spec: KernelSpec,
    c: f64,
) -> f64 {
    let mut max_ratio: Option<f64> = None;
    for i in 0..ds.n() {
        let y = ds.label(i);
        let q_ii = kernel_eval(spec, ds.example(i), ds.example(i));
        let g = 1.0 - y * exact_margins[i];
        let g_budget = 1.0 - y * budget_margins[i];
        let delta_exact = truncated_newton_delta(alpha[i], g, q_ii, c);
        let j_exact = progress_j_from_gradient(g, q_ii, delta_exact);
        if j_exact <= 0.0 {
            continue;
        }
        let delta_budget = truncated_newton_delta(alpha[i], g_budget, q_ii, c);
        let j_budget = progress_j_from_gradient(g, q_ii, delta_budget);
        let ratio = j_budget / j_exact;
        max_ratio = Some(max_ratio.map_or(ratio, |m| m.max(ratio)));
    }
    match max_ratio {
        Some(m) => 1.0 - m,
        None => 0.0,
    }
}

pub struct EigenResult {
    pub kappa: f64,
    /// Set when kappa <= 1e-10: the strict positive definiteness assumption
    /// is violated (typically duplicated points).
    pub near_singular: bool,
}

/// Smallest eigenvalue of `Q_ij = y_i y_j k(x_i, x_j)` via cyclic Jacobi
/// sweeps. Small instances only (diagnostic).
pub fn smallest_eigenvalue_q(ds: &SparseDataset, spec: KernelSpec) -> Result<EigenResult> {
    let n = ds.n();
    if n > 500 {
        return Err(Error::Config(format!("eigenvalue diagnostic limited to n <= 500, got {n}")));
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = ds.label(i) * ds.label(j) * kernel_eval(spec, ds.example(i), ds.example(j));
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    let eigenvalues = jacobi_eigenvalues(&mut a, n);
    let kappa = eigenvalues.into_iter().fold(f64::INFINITY, f64::min);
    Ok(EigenResult { kappa, near_singular: kappa <= 1e-10 })
}

/// Cyclic Jacobi rotations on a symmetric matrix; returns the diagonal once
/// the off-diagonal mass is negligible.
pub fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a[0]];
    }
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if (2.0 * off).sqrt() < 1e-11 * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cos * akp - sin * akq;
                    a[k * n + q] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cos * apk - sin * aqk;
                    a[q * n + k] = sin * apk + cos * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Lemma-style long-run predictions from a converged exact solution:
/// the expected margin-violation fraction of SGD and the expected nonzero
/// step fraction of SCA.
pub fn lemma2_predictions(alpha_star: &[f64], c: f64) -> (f64, f64) {
    let n = alpha_star.len() as f64;
    let eps = 1e-6 * c;
    let p_sgd = alpha_star.iter().sum::<f64>() / (n * c);
    let free = alpha_star.iter().filter(|&&a| a > eps && a < c - eps).count();
    (p_sgd, free as f64 / n)
}

/// Cumulative right-hand side of the suboptimality bound:
/// `(D* + nC^2/2) * prod_tau (1 - 2 kappa (1 - E_tau) / ((1 + kappa) n))`.
/// E values are clamped to [0, 1].
pub fn theorem1_bound(d_star: f64, n: usize, c: f64, kappa: f64, e_trace: &[f64]) -> Vec<f64> {
    assert!(kappa > 0.0);
    let mut bound = d_star + n as f64 * c * c / 2.0;
    let mut out = Vec::with_capacity(e_trace.len());
    for &e in e_trace {
        let e = e.clamp(0.0, 1.0);
        bound *= 1.0 - 2.0 * kappa * (1.0 - e) / ((1.0 + kappa) * n as f64);
        out.push(bound);
    }
    out
}

/// Fraction of test points the model classifies correctly.
pub fn test_accuracy(model: &BudgetModel, test: &SparseDataset) -> f64 {
    let correct = (0..test.n())
        .filter(|&i| model.classify(test.example(i)) == test.label(i))
        .count();
    correct as f64 / test.n() as f64
}

/// Exact margins `f(x_i)` for all training points from the dual coefficients.
pub fn exact_margins(alpha: &[f64], ds: &SparseDataset, spec: KernelSpec) -> Vec<f64> {
    (0..ds.n())
        .map(|i| ds.label(i) * q_row_dot_alpha(alpha, ds, spec, i))
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_epoch(
    epoch: usize,
    wall_time_s: f64,
    model: &BudgetModel,
    alpha: Option<&AlphaState>,
    train: &SparseDataset,
    test: &SparseDataset,
    c: f64,
    counters: &StepCounters,
) -> EpochRecord {
    let dual_obj = match alpha {
        Some(a) => dual_objective(a.values(), train, model.spec()),
        None => {
            let coeff_sum: f64 = model.entries().iter().map(|e| e.beta.abs()).sum();
            model.scale() * coeff_sum - 0.5 * model.model_norm_sq()
        }
    };
    let steps = counters.steps.max(1) as f64;
    EpochRecord {
        epoch,
        wall_time_s,
        primal_obj: primal_objective(model, train, c),
        dual_obj,
        test_accuracy: test_accuracy(model, test),
        sv_count: model.len(),
        merge_fraction: counters.merges as f64 / steps,
        violation_fraction: counters.violations as f64 / steps,
        nonzero_step_fraction: counters.nonzero_steps as f64 / steps,
    }
}
