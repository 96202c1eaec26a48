//! Kernel functions: the Gaussian kernel used by all solvers, and a linear
//! kernel kept around as a cross-check for code paths that must not assume a
//! unit diagonal.

use crate::data::{sparse_dot, squared_distance, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `k(x, x') = exp(-gamma * ||x - x'||^2)` with `gamma > 0`.
    Gaussian { gamma: f64 },
    Linear,
}

impl KernelSpec {
    pub fn gaussian(gamma: f64) -> Self {
        assert!(gamma > 0.0, "gamma must be positive");
        KernelSpec::Gaussian { gamma }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, KernelSpec::Gaussian { .. })
    }
}

pub fn kernel_eval(spec: KernelSpec, a: &SparseVector, b: &SparseVector) -> f64 {
    match spec {
        KernelSpec::Gaussian { gamma } => (-gamma * squared_distance(a, b)).exp(),
        KernelSpec::Linear => sparse_dot(a, b),
    }
}

/// `k(x, points[j])` for every j; bit-identical to the scalar loop.
pub fn kernel_row(spec: KernelSpec, x: &SparseVector, points: &[SparseVector]) -> Vec<f64> {
    points.iter().map(|p| kernel_eval(spec, x, p)).collect()
}
