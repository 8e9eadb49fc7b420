//! Pearson and Kendall τ-b correlation, and correlation matrices with
//! pairwise-complete deletion.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{pairwise_complete, MeasureMatrix};
use super::Undefined;
use crate::scalar::Scalar;

const MIN_OBSERVATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Kendall,
}

impl CorrelationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationMethod::Pearson => "pearson",
            CorrelationMethod::Kendall => "kendall",
        }
    }
}

fn precheck<T: Scalar>(x: &[T], y: &[T]) -> Result<(), Undefined> {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    if x.len() < MIN_OBSERVATIONS {
        return Err(Undefined::TooFewObservations {
            n: x.len(),
            required: MIN_OBSERVATIONS,
        });
    }
    let constant = |v: &[T]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(Undefined::Constant);
    }
    Ok(())
}

/// Sample Pearson correlation of two complete series.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T, Undefined> {
    precheck(x, y)?;
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// Pair counts behind Kendall's τ-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KendallCounts {
    /// Number of pairs, n(n−1)/2.
    pub n0: u64,
    /// Pairs tied in x (including pairs tied in both).
    pub ties_x: u64,
    /// Pairs tied in y (including pairs tied in both).
    pub ties_y: u64,
    /// Concordant minus discordant pairs.
    pub concordant_minus_discordant: i64,
}

impl KendallCounts {
    pub fn tau_b<T: Scalar>(&self) -> Result<T, Undefined> {
        if self.n0 == self.ties_x || self.n0 == self.ties_y {
            return Err(Undefined::Constant);
        }
        let num = T::from_i64(self.concordant_minus_discordant).expect("count fits scalar");
        let dx = T::from_u64(self.n0 - self.ties_x).expect("count fits scalar");
        let dy = T::from_u64(self.n0 - self.ties_y).expect("count fits scalar");
        Ok(num / (dx * dy).sqrt())
    }
}

fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b)
        .expect("correlation inputs must not be NaN")
}

fn tied_pairs<T: Scalar>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for v in sorted {
        if prev == Some(v) {
            run += 1;
        } else {
            total += run * (run.saturating_sub(1)) / 2;
            run = 1;
        }
        prev = Some(v);
    }
    total + run * run.saturating_sub(1) / 2
}

// Merge sort that returns the number of strict inversions.
fn sort_counting_swaps<T: Scalar>(v: &mut [T], buf: &mut Vec<T>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps =
        sort_counting_swaps(&mut v[..mid], buf) + sort_counting_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if cmp(&v[j], &v[i]) == Ordering::Less {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall pair counts in O(n log n) (Knight's algorithm).
pub fn kendall_counts<T: Scalar>(x: &[T], y: &[T]) -> KendallCounts {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    let n = x.len() as u64;
    let mut pairs: Vec<(T, T)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| cmp(&a.0, &b.0).then_with(|| cmp(&a.1, &b.1)));

    let ties_x = tied_pairs(pairs.iter().map(|p| p.0));
    let mut ties_xy = 0u64;
    let mut run = 0u64;
    for i in 0..pairs.len() {
        if i > 0 && pairs[i] == pairs[i - 1] {
            run += 1;
        } else {
            ties_xy += run * run.saturating_sub(1) / 2;
            run = 1;
        }
    }
    ties_xy += run * run.saturating_sub(1) / 2;

    let mut ys: Vec<T> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let discordant = sort_counting_swaps(&mut ys, &mut buf);
    let ties_y = tied_pairs(ys.iter().copied());

    let n0 = n * n.saturating_sub(1) / 2;
    let c_minus_d =
        n0 as i64 - ties_x as i64 - ties_y as i64 + ties_xy as i64 - 2 * discordant as i64;
    KendallCounts {
        n0,
        ties_x,
        ties_y,
        concordant_minus_discordant: c_minus_d,
    }
}

/// Kendall's τ-b with tie correction, `(C−D) / √((n0−Tx)(n0−Ty))`.
pub fn kendall_tau_b<T: Scalar>(x: &[T], y: &[T]) -> Result<T, Undefined> {
    precheck(x, y)?;
    kendall_counts(x, y).tau_b()
}

pub fn correlate<T: Scalar>(method: CorrelationMethod, x: &[T], y: &[T]) -> Result<T, Undefined> {
    match method {
        CorrelationMethod::Pearson => pearson(x, y),
        CorrelationMethod::Kendall => kendall_tau_b(x, y),
    }
}

/// Symmetric correlation matrix; undefined entries are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix<T> {
    pub method: CorrelationMethod,
    pub names: Vec<String>,
    values: Vec<Option<T>>,
    pair_counts: Vec<usize>,
}

impl<T: Scalar> CorrelationMatrix<T> {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        self.values[i * self.len() + j]
    }

    pub fn pair_count(&self, i: usize, j: usize) -> usize {
        self.pair_counts[i * self.len() + j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get_by_name(&self, a: &str, b: &str) -> Option<T> {
        self.get(self.index_of(a)?, self.index_of(b)?)
    }

    /// Builds a matrix from explicit entries (upper triangle mirrored).
    pub fn from_entries(
        method: CorrelationMethod,
        names: Vec<String>,
        values: Vec<Option<T>>,
        pair_counts: Vec<usize>,
    ) -> Self {
        let n = names.len();
        assert_eq!(values.len(), n * n);
        assert_eq!(pair_counts.len(), n * n);
        CorrelationMatrix {
            method,
            names,
            values,
            pair_counts,
        }
    }
}

pub fn correlation_matrix<T: Scalar>(
    m: &MeasureMatrix<T>,
    method: CorrelationMethod,
) -> CorrelationMatrix<T> {
    let n = m.n_cols();
    let columns: Vec<Vec<Option<T>>> = (0..n).map(|j| m.column(j)).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let entries: Vec<(Option<T>, usize)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = pairwise_complete(&columns[i], &columns[j]);
            let r = correlate(method, &x, &y).ok();
            // a defined variable correlates perfectly with itself
            let r = if i == j { r.map(|_| T::one()) } else { r };
            (r, x.len())
        })
        .collect();

    let mut values = vec![None; n * n];
    let mut counts = vec![0; n * n];
    for (&(i, j), &(r, c)) in pairs.iter().zip(&entries) {
        values[i * n + j] = r;
        values[j * n + i] = r;
        counts[i * n + j] = c;
        counts[j * n + i] = c;
    }
    CorrelationMatrix {
        method,
        names: m.column_names().to_vec(),
        values,
        pair_counts: counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.5, 3.0, 7.0];
        assert_eq!(pearson(&x, &x), Ok(1.0));
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 5.0]).unwrap() + 0.5f64).abs() < 1e-15);
    }

    #[test]
    fn pearson_undefined() {
        assert_eq!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Undefined::TooFewObservations { n: 2, required: 3 })
        );
        assert_eq!(
            pearson(&[0.1, 0.1, 0.1], &[1.0, 2.0, 3.0]),
            Err(Undefined::Constant)
        );
    }

    #[test]
    fn kendall_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau_b(&x, &x), Ok(1.0));
        assert_eq!(kendall_tau_b(&x, &[4.0, 3.0, 2.0, 1.0]), Ok(-1.0));
        let c = kendall_counts(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            c,
            KendallCounts {
                n0: 6,
                ties_x: 1,
                ties_y: 0,
                concordant_minus_discordant: 5
            }
        );
        let t: f64 = c.tau_b().unwrap();
        assert!((t - 5.0 / 30f64.sqrt()).abs() < 1e-15);
        assert!((t - 0.9129).abs() < 1e-4);
    }

    #[test]
    fn kendall_fully_tied_is_undefined() {
        assert_eq!(
            kendall_tau_b(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Undefined::Constant)
        );
    }

    #[test]
    fn matrix_masks_and_duplicates() {
        let a = vec![Some(1.0), Some(2.0), Some(4.0), Some(3.0), None];
        let b = a.clone();
        let c = [None, None, Some(1.0), Some(2.0), Some(5.0)];
        let mut m = MeasureMatrix::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        for i in 0..5 {
            m.push_row(
                super::super::RowKey {
                    simulator_id: "s".into(),
                    session_id: i.to_string(),
                    rank: 1,
                },
                vec![a[i], b[i], c[i]],
            )
            .unwrap();
        }
        for method in [CorrelationMethod::Pearson, CorrelationMethod::Kendall] {
            let r = correlation_matrix(&m, method);
            assert_eq!(r.get_by_name("a", "b"), Some(1.0));
            assert_eq!(r.get_by_name("a", "c"), None);
            assert_eq!(r.pair_count(0, 2), 2);
            assert_eq!(r.get(2, 2), Some(1.0));
            assert_eq!(r.get(0, 1), r.get(1, 0));
        }
    }
}
