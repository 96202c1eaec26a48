//! Sparse datasets in the standard `<label> <idx>:<val> ...` text format.
//!
//! Feature indices are 1-based in files and 0-based in memory. Values are
//! `f64`; entries with value exactly zero are dropped on input and never
//! stored. Labels are normalized to {-1, +1}: of the two distinct raw label
//! values, the larger maps to +1.

use crate::{Error, Result};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

/// A sparse feature vector with strictly increasing 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds a vector from (0-based index, value) pairs. Pairs are sorted,
    /// zero values are dropped; duplicate indices are an error.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Result<Self> {
        pairs.retain(|&(_, v)| v != 0.0);
        pairs.sort_by_key(|&(i, _)| i);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Format(format!("duplicate feature index {}", w[0].0 + 1)));
            }
        }
        Ok(Self { entries: pairs })
    }

    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        Self { entries }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Largest 0-based index plus one, or 0 for the empty vector.
    pub fn dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i as usize + 1)
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }
}

/// Dot product over shared indices via a two-cursor merge.
pub fn sparse_dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (xs, ys) = (&a.entries, &b.entries);
    let mut sum = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        let (ia, va) = xs[i];
        let (ib, vb) = ys[j];
        if ia == ib {
            sum += va * vb;
            i += 1;
            j += 1;
        } else if ia < ib {
            i += 1;
        } else {
            j += 1;
        }
    }
    sum
}

/// Squared Euclidean distance, clamped below at zero against rounding.
pub fn squared_distance(a: &SparseVector, b: &SparseVector) -> f64 {
    if a == b {
        return 0.0;
    }
    let d = a.norm_sq() + b.norm_sq() - 2.0 * sparse_dot(a, b);
    d.max(0.0)
}

/// Elementwise `ca * a + cb * b`, with exact zeros dropped.
pub fn linear_combination(a: &SparseVector, ca: f64, b: &SparseVector, cb: f64) -> SparseVector {
    let (xs, ys) = (&a.entries, &b.entries);
    let mut out = Vec::with_capacity(xs.len() + ys.len());
    let (mut i, mut j) = (0, 0);
    while i < xs.len() || j < ys.len() {
        let ia = xs.get(i).map_or(u32::MAX, |e| e.0);
        let ib = ys.get(j).map_or(u32::MAX, |e| e.0);
        let (idx, v) = if ia == ib {
            let v = ca * xs[i].1 + cb * ys[j].1;
            i += 1;
            j += 1;
            (ia, v)
        } else if ia < ib {
            let v = ca * xs[i].1;
            i += 1;
            (ia, v)
        } else {
            let v = cb * ys[j].1;
            j += 1;
            (ib, v)
        };
        if v != 0.0 {
            out.push((idx, v));
        }
    }
    SparseVector { entries: out }
}

/// A labeled dataset; immutable after parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    examples: Vec<SparseVector>,
    labels: Vec<f64>,
    d: usize,
}

impl SparseDataset {
    /// Builds a dataset from already-normalized parts. Labels must be -1 or +1.
    pub fn new(examples: Vec<SparseVector>, labels: Vec<f64>) -> Result<Self> {
        if examples.is_empty() || examples.len() != labels.len() {
            return Err(Error::Format(format!(
                "need equal, nonzero example/label counts (got {}/{})",
                examples.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != -1.0 && y != 1.0) {
            return Err(Error::Format("labels must be -1 or +1".into()));
        }
        let d = examples.iter().map(|x| x.dim()).max().unwrap_or(0);
        Ok(Self { examples, labels, d })
    }

    pub fn n(&self) -> usize {
        self.examples.len()
    }

    /// Largest 1-based feature index seen.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn example(&self, i: usize) -> &SparseVector {
        &self.examples[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn examples(&self) -> &[SparseVector] {
        &self.examples
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
}

/// Parses the sparse text format. Lines starting with `#` and blank lines are
/// skipped; `\r\n` endings are accepted. The two distinct raw label values are
/// mapped to {-1, +1} with the larger raw value becoming +1.
pub fn parse_dataset<R: BufRead>(source: R) -> Result<SparseDataset> {
    let mut examples = Vec::new();
    let mut raw_labels = Vec::new();
    let mut distinct: Vec<f64> = Vec::new();

    for (lineno, line) in source.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let label_tok = tokens.next().unwrap();
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad label `{label_tok}`"),
        })?;
        let mut pairs = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected idx:val, got `{tok}`"),
            })?;
            let idx: i64 = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad feature index `{idx_s}`"),
            })?;
            if idx <= 0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("feature index must be >= 1, got {idx}"),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad feature value `{val_s}`"),
            })?;
            pairs.push(((idx - 1) as u32, val));
        }
        let x = SparseVector::from_pairs(pairs).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        if !distinct.contains(&label) {
            distinct.push(label);
            if distinct.len() > 2 {
                return Err(Error::Format(format!(
                    "more than two distinct labels (first three: {:?})",
                    distinct
                )));
            }
        }
        examples.push(x);
        raw_labels.push(label);
    }

    if examples.is_empty() {
        return Err(Error::Format("empty input".into()));
    }
    let labels = normalize_labels(&raw_labels, &distinct)?;
    SparseDataset::new(examples, labels)
}

fn normalize_labels(raw: &[f64], distinct: &[f64]) -> Result<Vec<f64>> {
    let positive = match distinct {
        // a single +1/-1 label value is kept as-is
        [a] if *a == 1.0 || *a == -1.0 => 1.0,
        [a] => {
            return Err(Error::Format(format!(
                "single label value {a} cannot be normalized to -1/+1"
            )))
        }
        [a, b] => a.max(*b),
        _ => unreachable!(),
    };
    Ok(raw
        .iter()
        .map(|&y| if y == positive { 1.0 } else { -1.0 })
        .collect())
}

pub fn parse_dataset_str(s: &str) -> Result<SparseDataset> {
    parse_dataset(s.as_bytes())
}

pub fn load_dataset<P: AsRef<Path>>(path: P) -> Result<SparseDataset> {
    parse_dataset(BufReader::new(File::open(path)?))
}

/// Emits the same line format with labels written as `+1`/`-1`.
/// `parse_dataset(serialize_dataset(ds))` reproduces `ds` exactly.
pub fn serialize_dataset(ds: &SparseDataset) -> String {
    let mut out = String::new();
    for i in 0..ds.n() {
        out.push_str(if ds.label(i) > 0.0 { "+1" } else { "-1" });
        for &(idx, v) in ds.example(i).entries() {
            // `{}` prints the shortest representation that parses back exactly
            write!(out, " {}:{}", idx + 1, v).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.to_vec()).unwrap()
    }

    #[test]
    fn parses_minimal_file() {
        let ds = parse_dataset_str("+1 1:0.5 3:2.0\n-1 2:1.0").unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.d(), 3);
        assert_eq!(ds.labels(), &[1.0, -1.0]);
        assert_eq!(ds.example(0).entries(), &[(0, 0.5), (2, 2.0)]);
    }

    #[test]
    fn normalizes_zero_one_labels() {
        let ds = parse_dataset_str("0 1:1\n1 1:2").unwrap();
        assert_eq!(ds.labels(), &[-1.0, 1.0]);
    }

    #[test]
    fn reorders_indices_and_drops_zeros() {
        let ds = parse_dataset_str("+1 3:1.0 1:2.0 2:0.0\n-1 1:1").unwrap();
        assert_eq!(ds.example(0).entries(), &[(0, 2.0), (2, 1.0)]);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(
            parse_dataset_str("+1 0:1.0\n-1 1:1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_dataset_str("+1 1:1\n-1 x:1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_dataset_str("+1 1:1 1:2\n-1 1:1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_dataset_str("").is_err());
        assert!(parse_dataset_str("1 1:1\n2 1:1\n3 1:1").is_err());
    }

    #[test]
    fn skips_comments_and_crlf() {
        let ds = parse_dataset_str("# header\r\n+1 1:1\r\n\r\n-1 2:1\r\n").unwrap();
        assert_eq!(ds.n(), 2);
    }

    #[test]
    fn serialize_roundtrip() {
        let ds = parse_dataset_str("+1 1:0.5 3:-2.25e-3\n-1 2:1.0").unwrap();
        let text = serialize_dataset(&ds);
        let again = parse_dataset_str(&text).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn serialize_single_entry() {
        let ds = SparseDataset::new(vec![sv(&[(0, 0.5)])], vec![1.0]).unwrap();
        assert_eq!(serialize_dataset(&ds), "+1 1:0.5\n");
    }

    #[test]
    fn dot_product_basics() {
        let a = sv(&[(0, 1.0), (1, 2.0)]);
        let b = sv(&[(1, 3.0)]);
        assert_eq!(sparse_dot(&a, &b), 6.0);
        assert_eq!(sparse_dot(&a, &SparseVector::empty()), 0.0);
    }

    #[test]
    fn squared_distance_basics() {
        let a = sv(&[(0, 3.0)]);
        assert_eq!(squared_distance(&a, &a), 0.0);
        assert_eq!(squared_distance(&a, &SparseVector::empty()), 9.0);
    }

    #[test]
    fn dot_and_distance_match_dense_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let dense_a: Vec<f64> = (0..50)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        rng.random_range(-2.0..2.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let dense_b: Vec<f64> = (0..50)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        rng.random_range(-2.0..2.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let a = SparseVector::from_dense(&dense_a);
            let b = SparseVector::from_dense(&dense_b);
            let dot_oracle: f64 = dense_a.iter().zip(&dense_b).map(|(x, y)| x * y).sum();
            assert!((sparse_dot(&a, &b) - dot_oracle).abs() < 1e-12);
            let dist_oracle: f64 = dense_a
                .iter()
                .zip(&dense_b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            let got = squared_distance(&a, &b);
            assert!((got - dist_oracle).abs() <= 1e-10 * dist_oracle.max(1.0));
        }
    }

    #[test]
    fn linear_combination_matches_dense() {
        let a = sv(&[(0, 1.0), (2, 2.0)]);
        let b = sv(&[(1, 3.0), (2, -4.0)]);
        let c = linear_combination(&a, 1.0, &b, 2.0);
        assert_eq!(c.entries(), &[(0, 1.0), (1, 6.0), (2, -6.0)]);
        // 0.5*2 + 0.25*(-4) = 0 exactly: the shared index must be dropped
        let c = linear_combination(&a, 0.5, &b, 0.25);
        assert_eq!(c.entries(), &[(0, 0.5), (1, 0.75)]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_dense() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(
                prop_oneof![3 => Just(0.0), 2 => -10.0..10.0f64],
                1..20,
            )
        }

        proptest! {
            #[test]
            fn serialize_parse_roundtrip(
                rows in proptest::collection::vec((any::<bool>(), arb_dense()), 1..10)
            ) {
                let examples: Vec<SparseVector> =
                    rows.iter().map(|(_, d)| SparseVector::from_dense(d)).collect();
                let labels: Vec<f64> =
                    rows.iter().map(|(y, _)| if *y { 1.0 } else { -1.0 }).collect();
                let ds = SparseDataset::new(examples, labels).unwrap();
                let again = parse_dataset_str(&serialize_dataset(&ds)).unwrap();
                prop_assert_eq!(ds, again);
            }

            #[test]
            fn combination_matches_dense(
                a in arb_dense(), b in arb_dense(),
                ca in -3.0..3.0f64, cb in -3.0..3.0f64,
            ) {
                let n = a.len().max(b.len());
                let (mut da, mut db) = (a.clone(), b.clone());
                da.resize(n, 0.0);
                db.resize(n, 0.0);
                let got = linear_combination(
                    &SparseVector::from_dense(&a),
                    ca,
                    &SparseVector::from_dense(&b),
                    cb,
                )
                .to_dense(n);
                for i in 0..n {
                    prop_assert!((got[i] - (ca * da[i] + cb * db[i])).abs() < 1e-12);
                }
            }

            #[test]
            fn dot_is_symmetric_and_distance_nonnegative(a in arb_dense(), b in arb_dense()) {
                let x = SparseVector::from_dense(&a);
                let y = SparseVector::from_dense(&b);
                prop_assert_eq!(sparse_dot(&x, &y), sparse_dot(&y, &x));
                prop_assert!(squared_distance(&x, &y) >= 0.0);
            }
        }
    }
}
