//! The four training loops: budgeted dual coordinate ascent (the main
//! algorithm), budgeted Pegasos-style SGD, and the exact non-budgeted
//! variants of both.
//!
//! One epoch is exactly `n` index draws with replacement, i.i.d. uniform.
//! All randomness comes from a seeded ChaCha8 stream, so a run is fully
//! determined by (config, datasets): identical seeds produce bit-identical
//! models.

use crate::budget::{select_and_merge, MaintenanceKind, MaintenanceReport};
use crate::data::SparseDataset;
use crate::diagnostics::{evaluate_epoch, EpochRecord};
use crate::kernel::{kernel_eval, KernelSpec};
use crate::model::{AlphaState, BudgetModel};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Budgeted stochastic coordinate ascent on the dual.
    Bsca,
    /// Budgeted kernelized Pegasos.
    Bsgd,
    /// Exact stochastic coordinate ascent (no budget).
    Sca,
    /// Exact kernelized Pegasos (no budget).
    Sgd,
}

impl Algorithm {
    pub fn is_dual(self) -> bool {
        matches!(self, Algorithm::Bsca | Algorithm::Sca)
    }

    pub fn is_budgeted(self) -> bool {
        matches!(self, Algorithm::Bsca | Algorithm::Bsgd)
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub algo: Algorithm,
    pub c: f64,
    pub kernel: KernelSpec,
    /// Budget B; ignored by the exact solvers.
    pub budget: usize,
    pub epochs: usize,
    pub seed: u64,
    pub coalesce: bool,
    /// Epochs between diagnostic rows.
    pub log_every: usize,
    /// Measure wall time into the records. Off by default so repeated runs
    /// produce byte-identical logs.
    pub timing: bool,
}

impl TrainConfig {
    pub fn new(algo: Algorithm, c: f64, kernel: KernelSpec, budget: usize, epochs: usize) -> Self {
        Self { algo, c, kernel, budget, epochs, seed: 1, coalesce: true, log_every: 1, timing: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c <= 0.0 {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if self.budget < 2 {
            return Err(Error::Config("budget must be at least 2 (merging needs two entries)".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.log_every < 1 {
            return Err(Error::Config("log-every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch step counters; reset at epoch boundaries.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepCounters {
    pub steps: u64,
    pub violations: u64,
    pub nonzero_steps: u64,
    pub merges: u64,
    pub removals: u64,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub index: usize,
    pub delta: f64,
    pub margin: f64,
    pub violation: bool,
    pub maintenance: Option<MaintenanceReport>,
}

/// The truncated Newton coordinate step: the clipped exact 1-D maximizer of
/// the dual along coordinate `i`, expressed as a delta. `gradient` is
/// `1 - Q_i alpha`.
pub fn truncated_newton_delta(alpha_i: f64, gradient: f64, q_ii: f64, c: f64) -> f64 {
    (alpha_i + gradient / q_ii).clamp(0.0, c) - alpha_i
}

/// Clipped Newton step for unit `Q_ii`, returning the updated coordinate and
/// the exactly-maintained residual gradient. The rounding error of
/// `alpha_i + gradient` is recovered by compensated summation, which makes
/// the step exactly idempotent: re-applying it to the returned pair always
/// produces a delta of zero, bit for bit.
pub fn apply_newton_step_exact(alpha_i: f64, gradient: f64, c: f64) -> (f64, f64) {
    let s = alpha_i + gradient;
    let t = s.clamp(0.0, c);
    // Knuth 2Sum error term of s = fl(alpha_i + gradient)
    let bv = s - alpha_i;
    let av = s - bv;
    let err = (alpha_i - av) + (gradient - bv);
    (t, (s - t) + err)
}

pub struct SolverState {
    pub algo: Algorithm,
    pub model: BudgetModel,
    /// Dual coefficients; `None` for the primal solvers.
    pub alpha: Option<AlphaState>,
    /// Step counter; equals total steps taken + 1.
    pub t: u64,
    pub rng: ChaCha8Rng,
    pub counters: StepCounters,
    coalesce: bool,
    n: usize,
    c: f64,
}

impl SolverState {
    pub fn new(config: &TrainConfig, n: usize) -> Self {
        let model = if config.algo.is_budgeted() {
            BudgetModel::new(config.kernel, config.budget)
        } else {
            BudgetModel::unbounded(config.kernel)
        };
        let alpha = config.algo.is_dual().then(|| AlphaState::new(n, config.c));
        Self {
            algo: config.algo,
            model,
            alpha,
            t: 1,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            counters: StepCounters::default(),
            coalesce: config.coalesce,
            n,
            c: config.c,
        }
    }

    pub fn reset_epoch_counters(&mut self) {
        self.counters = StepCounters::default();
    }

    /// Draws a uniform index and performs one optimization step.
    pub fn step(&mut self, ds: &SparseDataset) -> StepReport {
        let i = self.rng.random_range(0..self.n);
        self.step_at(ds, i)
    }

    pub fn step_at(&mut self, ds: &SparseDataset, i: usize) -> StepReport {
        let report = if self.algo.is_dual() {
            self.dual_step(ds, i)
        } else {
            self.primal_step(ds, i)
        };
        self.t += 1;
        self.counters.steps += 1;
        if report.violation {
            self.counters.violations += 1;
        }
        if report.delta != 0.0 {
            self.counters.nonzero_steps += 1;
        }
        match report.maintenance.as_ref().map(|m| m.kind) {
            Some(MaintenanceKind::Merge) => self.counters.merges += 1,
            Some(MaintenanceKind::Remove) => self.counters.removals += 1,
            None => {}
        }
        report
    }

    fn dual_step(&mut self, ds: &SparseDataset, i: usize) -> StepReport {
        let x = ds.example(i);
        let y = ds.label(i);
        let margin = self.model.predict_margin(x);
        let q_ii = kernel_eval(self.model.spec(), x, x);
        debug_assert!(!self.model.spec().is_gaussian() || q_ii == 1.0);
        let alpha = self.alpha.as_mut().expect("dual solver carries alpha");
        let delta = truncated_newton_delta(alpha.get(i), 1.0 - y * margin, q_ii, self.c);
        let mut maintenance = None;
        if delta != 0.0 {
            alpha.add(i, delta);
            self.model.add_entry(y * delta, x, self.coalesce);
            if self.algo.is_budgeted() && self.model.over_budget() {
                maintenance = Some(select_and_merge(&mut self.model));
            }
        }
        StepReport { index: i, delta, margin, violation: y * margin < 1.0, maintenance }
    }

    fn primal_step(&mut self, ds: &SparseDataset, i: usize) -> StepReport {
        let x = ds.example(i);
        let y = ds.label(i);
        let margin = self.model.predict_margin(x);
        let violation = y * margin < 1.0;
        let t = self.t as f64;
        // learning rate 1/(lambda t) = nC/t; the shrinkage is applied lazily
        // through the scale (t = 1 annihilates the model)
        self.model.rescale(1.0 - 1.0 / t);
        let mut delta = 0.0;
        let mut maintenance = None;
        if violation {
            delta = self.n as f64 * self.c / t;
            self.model.add_entry(y * delta, x, self.coalesce);
            if self.algo.is_budgeted() && self.model.over_budget() {
                maintenance = Some(select_and_merge(&mut self.model));
            }
        }
        StepReport { index: i, delta, margin, violation, maintenance }
    }
}

/// Runs `epochs * n` steps and collects a diagnostics record every
/// `log_every` epochs.
pub fn train(
    config: &TrainConfig,
    train_ds: &SparseDataset,
    test_ds: &SparseDataset,
) -> Result<(BudgetModel, Vec<EpochRecord>)> {
    config.validate()?;
    let n = train_ds.n();
    let mut state = SolverState::new(config, n);
    let mut records = Vec::new();
    let started = Instant::now();
    for epoch in 1..=config.epochs {
        state.reset_epoch_counters();
        for _ in 0..n {
            state.step(train_ds);
        }
        if epoch % config.log_every == 0 {
            let wall = if config.timing { started.elapsed().as_secs_f64() } else { 0.0 };
            records.push(evaluate_epoch(
                epoch,
                wall,
                &state.model,
                state.alpha.as_ref(),
                train_ds,
                test_ds,
                config.c,
                &state.counters,
            ));
        }
    }
    Ok((state.model, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SparseVector;
    use crate::synth::two_gaussians;

    fn tiny_dataset() -> SparseDataset {
        two_gaussians(20, 3, 99)
    }

    fn config(algo: Algorithm) -> TrainConfig {
        TrainConfig::new(algo, 1.0, KernelSpec::gaussian(1.0), 10, 2)
    }

    #[test]
    fn first_dual_step_on_empty_model() {
        let ds = tiny_dataset();
        let mut state = SolverState::new(&config(Algorithm::Sca), ds.n());
        let report = state.step_at(&ds, 3);
        // margin 0, so delta = clip(0 + 1/1, 0, 1) = 1
        assert_eq!(report.delta, 1.0);
        assert_eq!(state.model.len(), 1);
        assert_eq!(state.model.effective_coeff(0), ds.label(3));
    }

    #[test]
    fn dual_step_is_noop_at_upper_bound_with_violated_margin() {
        // two identical points with opposite labels: unsatisfiable margins
        let x = SparseVector::from_dense(&[1.0, 2.0]);
        let ds = SparseDataset::new(vec![x.clone(), x], vec![1.0, -1.0]).unwrap();
        let mut state = SolverState::new(&config(Algorithm::Sca), 2);
        state.step_at(&ds, 0); // alpha_0 -> C = 1
        state.step_at(&ds, 1); // alpha_1 -> C = 1, model cancels to zero
        assert_eq!(state.model.len(), 0);
        let report = state.step_at(&ds, 0);
        // margin 0 violates the target, but alpha_0 is already at the bound
        assert!(report.violation);
        assert_eq!(report.delta, 0.0);
        assert_eq!(state.model.len(), 0);
    }

    #[test]
    fn single_point_converges_in_one_step() {
        let ds = SparseDataset::new(vec![SparseVector::from_dense(&[1.0])], vec![1.0]).unwrap();
        let mut cfg = config(Algorithm::Sca);
        cfg.c = 100.0;
        let mut state = SolverState::new(&cfg, 1);
        state.step_at(&ds, 0);
        let alpha = state.alpha.as_ref().unwrap();
        assert_eq!(alpha.get(0), 1.0);
        let d = crate::diagnostics::dual_objective(alpha.values(), &ds, cfg.kernel);
        assert!((d - 0.5).abs() < 1e-15);
        // re-applying the step is a fixed point
        let report = state.step_at(&ds, 0);
        assert_eq!(report.delta, 0.0);
    }

    #[test]
    fn sgd_first_step_annihilates_and_seeds_model() {
        let ds = tiny_dataset();
        let mut state = SolverState::new(&config(Algorithm::Sgd), ds.n());
        let report = state.step_at(&ds, 5);
        assert!(report.violation);
        assert_eq!(state.model.len(), 1);
        let expected = ds.label(5) * ds.n() as f64 * 1.0; // y * nC / 1
        assert_eq!(state.model.effective_coeff(0), expected);
    }

    #[test]
    fn sgd_non_violating_step_only_rescales() {
        let ds = tiny_dataset();
        let mut cfg = config(Algorithm::Sgd);
        cfg.c = 5.0;
        let mut state = SolverState::new(&cfg, ds.n());
        state.step_at(&ds, 0);
        // after the huge first step the same point has margin far above 1
        let len = state.model.len();
        let coeff = state.model.effective_coeff(0);
        let report = state.step_at(&ds, 0);
        assert!(!report.violation);
        assert_eq!(state.model.len(), len);
        assert!((state.model.effective_coeff(0) - coeff * 0.5).abs() < 1e-12 * coeff.abs());
    }

    #[test]
    fn lazy_scale_matches_naive_rescaling() {
        let ds = two_gaussians(30, 3, 7);
        let cfg = TrainConfig::new(Algorithm::Sgd, 0.5, KernelSpec::gaussian(1.0), 10, 1);
        let mut state = SolverState::new(&cfg, ds.n());
        // naive reference: explicit (coefficient, point) list, rescaled entry
        // by entry every step
        let mut naive: Vec<(f64, usize)> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for t in 1..=10_000u64 {
            let i = rng.random_range(0..ds.n());
            let x = ds.example(i);
            let y = ds.label(i);
            let naive_margin: f64 = naive
                .iter()
                .map(|&(b, j)| b * kernel_eval(cfg.kernel, x, ds.example(j)))
                .sum();
            for e in naive.iter_mut() {
                e.0 *= 1.0 - 1.0 / t as f64;
            }
            if t == 1 {
                naive.clear();
            }
            if y * naive_margin < 1.0 {
                let coeff = y * ds.n() as f64 * cfg.c / t as f64;
                if let Some(e) = naive.iter_mut().find(|e| e.1 == i) {
                    e.0 += coeff;
                } else {
                    naive.push((coeff, i));
                }
            }
            let report = state.step_at(&ds, i);
            assert_eq!(report.violation, y * naive_margin < 1.0);
        }
        // compare margins over the training set
        for i in 0..ds.n() {
            let x = ds.example(i);
            let lazy = state.model.predict_margin(x);
            let ref_margin: f64 = naive
                .iter()
                .map(|&(b, j)| b * kernel_eval(cfg.kernel, x, ds.example(j)))
                .sum();
            assert!(
                (lazy - ref_margin).abs() < 1e-12 * ref_margin.abs().max(1.0),
                "i={i}: {lazy} vs {ref_margin}"
            );
        }
    }

    #[test]
    fn exact_newton_step_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10_000 {
            let c = rng.random_range(0.5..4.0);
            let a = rng.random_range(0.0..c);
            let g = rng.random_range(-2.0..2.0);
            let (a2, g2) = apply_newton_step_exact(a, g, c);
            assert!((0.0..=c).contains(&a2));
            let (a3, _) = apply_newton_step_exact(a2, g2, c);
            assert_eq!(a3.to_bits(), a2.to_bits(), "a {a} g {g} c {c}");
            assert_eq!(truncated_newton_delta(a2, g2, 1.0, c), 0.0);
        }
        // clip cases hit the bounds exactly
        let (lo, _) = apply_newton_step_exact(0.3, -1.0, 1.0);
        assert_eq!(lo, 0.0);
        let (hi, _) = apply_newton_step_exact(0.3, 1.0, 1.0);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn alpha_stays_in_box_for_dual_solvers() {
        let ds = tiny_dataset();
        let mut cfg = config(Algorithm::Bsca);
        cfg.budget = 5;
        cfg.c = 2.0;
        let mut state = SolverState::new(&cfg, ds.n());
        for _ in 0..500 {
            state.step(&ds);
            let alpha = state.alpha.as_ref().unwrap();
            assert!(alpha.values().iter().all(|&a| (0.0..=cfg.c).contains(&a)));
        }
    }

    #[test]
    fn maintenance_count_bounded_by_nonzero_steps() {
        let ds = two_gaussians(60, 2, 17);
        let mut cfg = config(Algorithm::Bsca);
        cfg.budget = 5;
        cfg.c = 4.0;
        let mut state = SolverState::new(&cfg, ds.n());
        for _ in 0..10 {
            state.reset_epoch_counters();
            for _ in 0..ds.n() {
                state.step(&ds);
            }
            assert!(state.counters.merges + state.counters.removals <= state.counters.nonzero_steps);
            assert!(state.model.len() <= cfg.budget);
        }
    }

    #[test]
    fn train_runs_expected_step_count_and_rows() {
        let ds = tiny_dataset();
        let mut cfg = config(Algorithm::Bsca);
        cfg.epochs = 4;
        cfg.log_every = 2;
        let (_, records) = train(&cfg, &ds, &ds).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].epoch, 2);
        assert_eq!(records[1].epoch, 4);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = config(Algorithm::Bsca);
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = config(Algorithm::Bsca);
        cfg.budget = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = config(Algorithm::Bsca);
        cfg.c = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn identical_seeds_give_bit_identical_models() {
        let ds = two_gaussians(40, 3, 5);
        let mut cfg = config(Algorithm::Bsca);
        cfg.budget = 8;
        cfg.epochs = 5;
        let (m1, r1) = train(&cfg, &ds, &ds).unwrap();
        let (m2, r2) = train(&cfg, &ds, &ds).unwrap();
        assert_eq!(m1.len(), m2.len());
        for (a, b) in m1.entries().iter().zip(m2.entries()) {
            assert_eq!(a.beta.to_bits(), b.beta.to_bits());
            assert_eq!(a.point, b.point);
        }
        for (a, b) in r1.iter().zip(r2.iter()) {
            assert_eq!(a.to_csv_row(), b.to_csv_row());
        }
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let n = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 1_000_000;
        let mut counts = vec![0u64; n];
        for _ in 0..draws {
            counts[rng.random_range(0..n)] += 1;
        }
        let p = 1.0 / n as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            let dev = (c as f64 - draws as f64 * p).abs();
            assert!(dev < 5.0 * sigma, "count {c} deviates {dev} > 5 sigma");
        }
    }
}
