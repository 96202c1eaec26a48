//! Brute-force reference solver for the dual problem: accelerated projected
//! gradient ascent on `D(alpha) = 1^T alpha - 1/2 alpha^T Q alpha` over the
//! box `[0, C]^n`, run on an explicitly formed dense Q. Deliberately shares
//! no code with the coordinate solvers it is used to check.

use crate::data::SparseDataset;
use crate::kernel::{kernel_eval, KernelSpec};

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Infinity norm of the projected gradient residual at termination.
    pub residual: f64,
}

/// Dense `Q_ij = y_i y_j k(x_i, x_j)`, row-major.
pub fn build_q(ds: &SparseDataset, spec: KernelSpec) -> Vec<f64> {
    let n = ds.n();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = ds.label(i) * ds.label(j) * kernel_eval(spec, ds.example(i), ds.example(j));
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    q
}

fn mat_vec(q: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let row = &q[i * n..(i + 1) * n];
        out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

fn dual_value(q: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut qa = vec![0.0; n];
    mat_vec(q, alpha, &mut qa);
    let linear: f64 = alpha.iter().sum();
    let quad: f64 = alpha.iter().zip(&qa).map(|(a, b)| a * b).sum();
    linear - 0.5 * quad
}

/// Largest eigenvalue estimate by power iteration, padded for safety.
fn lipschitz_constant(q: &[f64], n: usize) -> f64 {
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut qv = vec![0.0; n];
    let mut lambda: f64 = 1.0;
    for _ in 0..200 {
        mat_vec(q, &v, &mut qv);
        lambda = qv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if lambda < 1e-300 {
            return 1.0;
        }
        for i in 0..n {
            v[i] = qv[i] / lambda;
        }
    }
    lambda * 1.05
}

/// Solves the box QP to the requested projected-gradient stationarity.
pub fn solve_box_qp(q: &[f64], n: usize, c: f64, tol: f64, max_iter: usize) -> QpSolution {
    let lip = lipschitz_constant(q, n);
    let step = 1.0 / lip;
    let project = |v: f64| v.clamp(0.0, c);

    let mut x = vec![0.0; n];
    let mut y = x.clone();
    let mut grad = vec![0.0; n]; // gradient of the negated (minimized) objective
    let mut theta: f64 = 1.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    for it in 0..max_iter {
        iterations = it + 1;
        mat_vec(q, &y, &mut grad);
        for g in grad.iter_mut() {
            *g -= 1.0;
        }
        let mut x_new = vec![0.0; n];
        for i in 0..n {
            x_new[i] = project(y[i] - step * grad[i]);
        }
        // gradient-mapping restart: momentum is dropped when it points
        // against the direction of progress
        let mut restart = 0.0;
        for i in 0..n {
            restart += (y[i] - x_new[i]) * (x_new[i] - x[i]);
        }
        if restart > 0.0 {
            theta = 1.0;
            y.copy_from_slice(&x);
            continue;
        }
        let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_new;
        for i in 0..n {
            y[i] = x_new[i] + momentum * (x_new[i] - x[i]);
        }
        theta = theta_new;
        x = x_new;

        if it % 10 == 0 || it + 1 == max_iter {
            mat_vec(q, &x, &mut grad);
            residual = (0..n)
                .map(|i| (project(x[i] - (grad[i] - 1.0)) - x[i]).abs())
                .fold(0.0, f64::max);
            if residual < tol {
                break;
            }
        }
    }
    let objective = dual_value(q, &x);
    QpSolution { alpha: x, objective, iterations, residual }
}

/// Convenience wrapper building Q from a dataset.
pub fn solve_dual(ds: &SparseDataset, spec: KernelSpec, c: f64, tol: f64, max_iter: usize) -> QpSolution {
    let q = build_q(ds, spec);
    solve_box_qp(&q, ds.n(), c, tol, max_iter)
}
