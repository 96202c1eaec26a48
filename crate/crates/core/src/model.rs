//! The budgeted model: a bounded list of (coefficient, basis point) pairs
//! with a global scale factor, plus the dual coefficient vector tracked by
//! the dual solvers.

use crate::data::SparseVector;
use crate::kernel::{kernel_eval, KernelSpec};
use crate::{Error, Result};
use std::fmt::Write as _;

/// Entries whose effective coefficient falls below this are dropped.
const COEFF_DROP_EPS: f64 = 1e-12;
/// The scale factor is folded into the coefficients below this threshold.
const SCALE_FOLD_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ModelEntry {
    pub beta: f64,
    pub point: SparseVector,
    /// True while the entry is an untouched copy of a single training point;
    /// merging clears it, which also disables coalescing into the entry.
    pub pristine: bool,
}

/// The approximate weight vector: `w = scale * sum_j beta_j * phi(x_j)`,
/// with at most `capacity` entries outside the budget-maintenance window.
#[derive(Debug, Clone)]
pub struct BudgetModel {
    entries: Vec<ModelEntry>,
    scale: f64,
    spec: KernelSpec,
    capacity: usize,
}

impl BudgetModel {
    pub fn new(spec: KernelSpec, capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self { entries: Vec::new(), scale: 1.0, spec, capacity }
    }

    /// A model without a budget, for the exact solvers.
    pub fn unbounded(spec: KernelSpec) -> Self {
        Self::new(spec, usize::MAX)
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn over_budget(&self) -> bool {
        self.entries.len() > self.capacity
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn effective_coeff(&self, slot: usize) -> f64 {
        self.scale * self.entries[slot].beta
    }

    /// `scale * sum_j beta_j k(x, x_j)`.
    pub fn predict_margin(&self, x: &SparseVector) -> f64 {
        let mut sum = 0.0;
        for e in &self.entries {
            sum += e.beta * kernel_eval(self.spec, x, &e.point);
        }
        self.scale * sum
    }

    /// `||w||^2` via the full Gram expansion; clamped at zero.
    pub fn model_norm_sq(&self) -> f64 {
        let mut sum = 0.0;
        for (a, ea) in self.entries.iter().enumerate() {
            sum += ea.beta * ea.beta * kernel_eval(self.spec, &ea.point, &ea.point);
            for eb in &self.entries[a + 1..] {
                sum += 2.0 * ea.beta * eb.beta * kernel_eval(self.spec, &ea.point, &eb.point);
            }
        }
        let v = self.scale * self.scale * sum;
        debug_assert!(v >= -1e-9, "norm_sq = {v}");
        v.max(0.0)
    }

    /// Adds `effective_beta * phi(point)` to the model. With `coalesce` the
    /// increment is folded into an existing pristine copy of `point` if one
    /// is present. Returns the entry count after insertion; the caller must
    /// trigger budget maintenance when it exceeds the capacity.
    pub fn add_entry(&mut self, effective_beta: f64, point: &SparseVector, coalesce: bool) -> usize {
        assert!(effective_beta != 0.0);
        let beta = effective_beta / self.scale;
        if coalesce {
            if let Some(slot) = self
                .entries
                .iter()
                .position(|e| e.pristine && e.point == *point)
            {
                self.entries[slot].beta += beta;
                if (self.scale * self.entries[slot].beta).abs() < COEFF_DROP_EPS {
                    self.entries.remove(slot);
                }
                return self.entries.len();
            }
        }
        self.entries.push(ModelEntry { beta, point: point.clone(), pristine: true });
        self.entries.len()
    }

    /// Sign of the margin; an exact zero classifies as +1.
    pub fn classify(&self, x: &SparseVector) -> f64 {
        if self.predict_margin(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Multiplies the model by `factor` in O(1) via the scale. A factor of
    /// zero resets the model; a tiny accumulated scale is folded into the
    /// coefficients to avoid underflow.
    pub fn rescale(&mut self, factor: f64) {
        if factor == 0.0 {
            self.entries.clear();
            self.scale = 1.0;
            return;
        }
        self.scale *= factor;
        if self.scale.abs() < SCALE_FOLD_EPS {
            self.fold_scale();
        }
    }

    /// Folds the scale into the coefficients and resets it to 1.
    pub fn fold_scale(&mut self) {
        if self.scale != 1.0 {
            for e in &mut self.entries {
                e.beta *= self.scale;
            }
            self.scale = 1.0;
            self.entries.retain(|e| e.beta.abs() >= COEFF_DROP_EPS);
        }
    }

    /// Replaces slots `i` and `j` by a single merged entry (never pristine).
    /// Slot order of the untouched entries may change.
    pub(crate) fn apply_merge(
        &mut self,
        i: usize,
        j: usize,
        merged_effective_beta: f64,
        merged_point: SparseVector,
    ) {
        assert!(i != j);
        self.entries[i] = ModelEntry {
            beta: merged_effective_beta / self.scale,
            point: merged_point,
            pristine: false,
        };
        self.entries.swap_remove(j);
    }

    pub(crate) fn remove_entry(&mut self, slot: usize) {
        self.entries.swap_remove(slot);
    }

    /// Text serialization: a header with the kernel spec, scale and capacity,
    /// then one `beta idx:val ...` line per entry at 17 significant digits.
    pub fn save(&self) -> String {
        let mut out = String::new();
        match self.spec {
            KernelSpec::Gaussian { gamma } => {
                writeln!(out, "kernel gaussian {:.16e} scale {:.16e} budget {}", gamma, self.scale, self.capacity).unwrap()
            }
            KernelSpec::Linear => {
                writeln!(out, "kernel linear scale {:.16e} budget {}", self.scale, self.capacity).unwrap()
            }
        }
        for e in &self.entries {
            write!(out, "{:.16e}", e.beta).unwrap();
            for &(idx, v) in e.point.entries() {
                write!(out, " {}:{:.16e}", idx + 1, v).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn load(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty model file".into()))?;
        let tok: Vec<&str> = header.split_ascii_whitespace().collect();
        let bad = || Error::Format(format!("bad model header `{header}`"));
        let (spec, rest) = match tok.as_slice() {
            ["kernel", "gaussian", g, rest @ ..] => {
                (KernelSpec::gaussian(g.parse().map_err(|_| bad())?), rest)
            }
            ["kernel", "linear", rest @ ..] => (KernelSpec::Linear, rest),
            _ => return Err(bad()),
        };
        let (scale, capacity) = match rest {
            ["scale", s, "budget", b] => (
                s.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
            ),
            _ => return Err(bad()),
        };
        let mut model = BudgetModel { entries: Vec::new(), scale, spec, capacity };
        for (k, line) in lines.enumerate() {
            let mut toks = line.split_ascii_whitespace();
            let beta: f64 = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or(Error::Parse { line: k + 2, msg: "bad coefficient".into() })?;
            let mut pairs = Vec::new();
            for t in toks {
                let (i, v) = t.split_once(':').ok_or(Error::Parse {
                    line: k + 2,
                    msg: format!("expected idx:val, got `{t}`"),
                })?;
                let idx: u32 = i.parse().map_err(|_| Error::Parse {
                    line: k + 2,
                    msg: format!("bad index `{i}`"),
                })?;
                let val: f64 = v.parse().map_err(|_| Error::Parse {
                    line: k + 2,
                    msg: format!("bad value `{v}`"),
                })?;
                pairs.push((idx - 1, val));
            }
            let point = SparseVector::from_pairs(pairs)
                .map_err(|e| Error::Parse { line: k + 2, msg: e.to_string() })?;
            model.entries.push(ModelEntry { beta, point, pristine: false });
        }
        Ok(model)
    }
}

/// The dual coefficient vector with its box constraint `[0, C]^n`.
#[derive(Debug, Clone)]
pub struct AlphaState {
    alpha: Vec<f64>,
    c: f64,
}

impl AlphaState {
    pub fn new(n: usize, c: f64) -> Self {
        assert!(c > 0.0);
        Self { alpha: vec![0.0; n], c }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn get(&self, i: usize) -> f64 {
        self.alpha[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.alpha
    }

    pub fn add(&mut self, i: usize, delta: f64) {
        self.alpha[i] += delta;
        debug_assert!(
            self.alpha[i] >= 0.0 && self.alpha[i] <= self.c,
            "alpha[{i}] = {} outside [0, {}]",
            self.alpha[i],
            self.c
        );
    }
}
