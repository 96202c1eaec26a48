//! Budget maintenance: reduce a model of size B+1 back to B by merging two
//! support vectors of the same coefficient sign into a single point on the
//! segment between them, or by removing the weakest entry when no same-sign
//! partner exists.

use crate::data::{linear_combination, squared_distance, SparseVector};
use crate::kernel::{kernel_eval, KernelSpec};
use crate::model::BudgetModel;

/// Width of the golden-section bracket at termination. The degradation is
/// locally quadratic in `h`, so the induced suboptimality is around 1e-6.
const GOLDEN_TOL: f64 = 1e-3;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaintenanceKind {
    Merge,
    Remove,
}

#[derive(Debug, Clone)]
pub struct MaintenanceReport {
    pub kind: MaintenanceKind,
    /// Squared feature-space norm of the change made to the model.
    pub wd: f64,
    pub h: f64,
}

/// A fully evaluated merge of entry slots `i` and `j`.
#[derive(Debug, Clone)]
pub struct MergeCandidate {
    pub i: usize,
    pub j: usize,
    pub h: f64,
    pub merged_point: SparseVector,
    pub merged_beta: f64,
    pub weight_degradation: f64,
}

/// The least-squares coefficient for the merged point:
/// `beta' = (beta_i k_i + beta_j k_j) / k_self` with `k_i = k(x_i, x')`,
/// `k_j = k(x_j, x')` and `k_self = k(x', x')`.
pub fn merged_beta_closed_form(beta_i: f64, beta_j: f64, k_i: f64, k_j: f64, k_self: f64) -> f64 {
    assert!(k_self > 0.0);
    (beta_i * k_i + beta_j * k_j) / k_self
}

/// `||beta_i phi(x_i) + beta_j phi(x_j) - beta' phi(x')||^2` with the optimal
/// `beta'`, clamped at zero.
pub fn weight_degradation(
    beta_i: f64,
    beta_j: f64,
    x_i: &SparseVector,
    x_j: &SparseVector,
    x_prime: &SparseVector,
    spec: KernelSpec,
) -> f64 {
    let k_i = kernel_eval(spec, x_i, x_prime);
    let k_j = kernel_eval(spec, x_j, x_prime);
    let k_self = kernel_eval(spec, x_prime, x_prime);
    let beta_prime = merged_beta_closed_form(beta_i, beta_j, k_i, k_j, k_self);
    let pair = beta_i * beta_i * kernel_eval(spec, x_i, x_i)
        + beta_j * beta_j * kernel_eval(spec, x_j, x_j)
        + 2.0 * beta_i * beta_j * kernel_eval(spec, x_i, x_j);
    (pair - beta_prime * beta_prime * k_self).max(0.0)
}

/// Signed optimal coefficient of the merge at mixing weight `h`, for the
/// Gaussian kernel with `s = gamma * ||x_i - x_j||^2`.
fn beta_prime_at(beta_i: f64, beta_j: f64, s: f64, h: f64) -> f64 {
    beta_i * (-s * h * h).exp() + beta_j * (-s * (1.0 - h) * (1.0 - h)).exp()
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Finds `h` in [0, 1] maximizing `|beta'(h)|` (equivalently minimizing the
/// weight degradation) for a same-sign pair under the Gaussian kernel.
/// Returns `(h, beta', wd)`.
///
/// `|beta'(h)|` can be bimodal when `gamma * ||x_i - x_j||^2 > 2`, so the
/// interval is first split at the inflection points of the stationarity
/// condition, each unimodal piece is searched by golden section, and the
/// result is never worse than either endpoint `h = 0`, `h = 1`.
pub fn golden_section_h(
    beta_i: f64,
    beta_j: f64,
    x_i: &SparseVector,
    x_j: &SparseVector,
    spec: KernelSpec,
) -> (f64, f64, f64) {
    let gamma = match spec {
        KernelSpec::Gaussian { gamma } => gamma,
        KernelSpec::Linear => panic!("merging requires the Gaussian kernel"),
    };
    assert!(
        beta_i * beta_j >= 0.0,
        "merging requires coefficients of the same sign"
    );
    let d2 = squared_distance(x_i, x_j);
    let s = gamma * d2;
    let k_ij = (-s).exp();
    let pair_norm = beta_i * beta_i + beta_j * beta_j + 2.0 * beta_i * beta_j * k_ij;
    let sign = if beta_i + beta_j < 0.0 { -1.0 } else { 1.0 };
    let objective = |h: f64| sign * beta_prime_at(beta_i, beta_j, s, h);

    let mut candidates = vec![0.0, 1.0];
    if s <= 2.0 {
        candidates.push(golden_max(objective, 0.0, 1.0));
    } else {
        // h(1-h) = 1/(2s) splits [0,1] into pieces on which the objective
        // is unimodal
        let r = (1.0 - 2.0 / s).sqrt();
        let (lo, hi) = (0.5 * (1.0 - r), 0.5 * (1.0 + r));
        candidates.push(golden_max(objective, 0.0, lo));
        candidates.push(golden_max(objective, lo, hi));
        candidates.push(golden_max(objective, hi, 1.0));
    }
    let mut best_h = 0.0;
    let mut best_f = f64::NEG_INFINITY;
    for h in candidates {
        let f = objective(h);
        if f > best_f {
            best_f = f;
            best_h = h;
        }
    }
    let beta_prime = beta_prime_at(beta_i, beta_j, s, best_h);
    let wd = (pair_norm - beta_prime * beta_prime).max(0.0);
    (best_h, beta_prime, wd)
}

/// Picks the best merge for an over-budget model: the entry with the
/// smallest absolute coefficient is merged with the same-sign partner
/// minimizing the weight degradation. Returns `None` when no same-sign
/// partner exists.
pub fn best_merge_candidate(model: &BudgetModel) -> Option<MergeCandidate> {
    let spec = model.spec();
    let n = model.len();
    let mut i_star = 0;
    for slot in 1..n {
        if model.effective_coeff(slot).abs() < model.effective_coeff(i_star).abs() {
            i_star = slot;
        }
    }
    let beta_i = model.effective_coeff(i_star);
    let x_i = &model.entries()[i_star].point;

    let mut best: Option<(f64, usize, f64, f64)> = None; // (wd, j, h, beta')
    for j in 0..n {
        if j == i_star || model.effective_coeff(j) * beta_i < 0.0 {
            continue;
        }
        let (h, beta_prime, wd) =
            golden_section_h(beta_i, model.effective_coeff(j), x_i, &model.entries()[j].point, spec);
        if best.as_ref().is_none_or(|&(w, ..)| wd < w) {
            best = Some((wd, j, h, beta_prime));
        }
    }
    best.map(|(wd, j, h, beta_prime)| {
        let x_j = &model.entries()[j].point;
        MergeCandidate {
            i: i_star,
            j,
            h,
            merged_point: linear_combination(x_i, 1.0 - h, x_j, h),
            merged_beta: beta_prime,
            weight_degradation: wd,
        }
    })
}

/// Reduces an over-budget model (B+1 entries) back to B entries, merging
/// when possible and removing the weakest entry otherwise.
pub fn select_and_merge(model: &mut BudgetModel) -> MaintenanceReport {
    assert!(
        model.over_budget(),
        "budget maintenance called on a model within budget"
    );
    match best_merge_candidate(model) {
        Some(c) => {
            model.apply_merge(c.i, c.j, c.merged_beta, c.merged_point);
            MaintenanceReport { kind: MaintenanceKind::Merge, wd: c.weight_degradation, h: c.h }
        }
        None => {
            let mut i_star = 0;
            for slot in 1..model.len() {
                if model.effective_coeff(slot).abs() < model.effective_coeff(i_star).abs() {
                    i_star = slot;
                }
            }
            let beta = model.effective_coeff(i_star);
            let x = &model.entries()[i_star].point;
            let wd = beta * beta * kernel_eval(model.spec(), x, x);
            model.remove_entry(i_star);
            MaintenanceReport { kind: MaintenanceKind::Remove, wd, h: 0.0 }
        }
    }
}
