//! Normalized mutual information with equal-frequency binning, and flagging
//! of measure pairs that share information without correlating.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::CorrelationMatrix;
use super::matrix::{pairwise_complete, MeasureMatrix};
use super::Undefined;
use crate::scalar::Scalar;

/// Default bin count for `n` observations: ⌈√n⌉.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// Equal-frequency bin index per observation.
///
/// Values are ranked; every value is placed by the position of its first
/// occurrence in sorted order, so ties share the lowest bin they reach.
pub fn equal_frequency_bins<T: Scalar>(x: &[T], bins: usize) -> Vec<usize> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    let mut out = vec![0; n];
    let mut first = 0;
    for pos in 0..n {
        if pos > 0 && x[order[pos]] != x[order[pos - 1]] {
            first = pos;
        }
        out[order[pos]] = first * bins / n;
    }
    out
}

// Σ (c/n)·ln(n/c) over the non-empty counts, in key order.
fn entropy<T: Scalar>(counts: impl Iterator<Item = usize>, n: usize) -> T {
    let nt = T::of_usize(n);
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let ct = T::of_usize(c);
            ct / nt * (nt / ct).ln()
        })
        .sum()
}

/// NMI = MI / ((H(X) + H(Y)) / 2), natural logarithms, 0 when either entropy is 0.
pub fn nmi<T: Scalar>(x: &[T], y: &[T], bins: usize) -> Result<T, Undefined> {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    assert!(bins >= 1, "need at least one bin");
    let n = x.len();
    if n < bins.max(2) {
        return Err(Undefined::TooFewObservations {
            n,
            required: bins.max(2),
        });
    }
    let constant = |v: &[T]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(Undefined::Constant);
    }
    let bx = equal_frequency_bins(x, bins);
    let by = equal_frequency_bins(y, bins);

    let mut cx = vec![0usize; bins];
    let mut cy = vec![0usize; bins];
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&i, &j) in bx.iter().zip(&by) {
        cx[i] += 1;
        cy[j] += 1;
        *joint.entry((i, j)).or_default() += 1;
    }
    let hx: T = entropy(cx.iter().copied(), n);
    let hy: T = entropy(cy.iter().copied(), n);
    if hx == T::zero() || hy == T::zero() {
        return Ok(T::zero());
    }
    let nt = T::of_usize(n);
    // Integer numerator/denominator keep independent cells at ln(1) = 0 exactly.
    let mi: T = joint
        .iter()
        .map(|(&(i, j), &c)| {
            let num = T::of_usize(c * n);
            let den = T::of_usize(cx[i] * cy[j]);
            T::of_usize(c) / nt * (num / den).ln()
        })
        .sum();
    let v = mi / ((hx + hy) / T::of(2.0));
    Ok(v.max(T::zero()).min(T::one()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmiMatrix<T> {
    pub names: Vec<String>,
    values: Vec<Option<T>>,
    /// Bin count used per entry (it depends on the pairwise-complete size by default).
    bins: Vec<usize>,
}

impl<T: Scalar> NmiMatrix<T> {
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        self.values[i * self.names.len() + j]
    }

    pub fn bins(&self, i: usize, j: usize) -> usize {
        self.bins[i * self.names.len() + j]
    }
}

pub fn nmi_matrix<T: Scalar>(m: &MeasureMatrix<T>, bins: Option<usize>) -> NmiMatrix<T> {
    let n = m.n_cols();
    let columns: Vec<Vec<Option<T>>> = (0..n).map(|j| m.column(j)).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let entries: Vec<(Option<T>, usize)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = pairwise_complete(&columns[i], &columns[j]);
            let b = bins.unwrap_or_else(|| default_bins(x.len()));
            (nmi(&x, &y, b).ok(), b)
        })
        .collect();
    let mut values = vec![None; n * n];
    let mut used = vec![0; n * n];
    for (&(i, j), &(v, b)) in pairs.iter().zip(&entries) {
        values[i * n + j] = v;
        values[j * n + i] = v;
        used[i * n + j] = b;
        used[j * n + i] = b;
    }
    NmiMatrix {
        names: m.column_names().to_vec(),
        values,
        bins: used,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlagThresholds {
    /// Minimum NMI for a pair to count as sharing information.
    pub nmi: f64,
    /// Both |Pearson| and |Kendall| must stay below this.
    pub linear: f64,
}

impl Default for FlagThresholds {
    fn default() -> Self {
        FlagThresholds {
            nmi: 0.5,
            linear: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlaggedPair<T> {
    pub a: String,
    pub b: String,
    pub nmi: T,
    pub pearson: T,
    pub kendall: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmiReport<T> {
    pub nmi: NmiMatrix<T>,
    pub thresholds: FlagThresholds,
    pub flagged_pairs: Vec<FlaggedPair<T>>,
}

/// Pairs with high NMI but weak linear and monotonic correlation, by NMI descending.
pub fn flag_nonlinear<T: Scalar>(
    pearson: &CorrelationMatrix<T>,
    kendall: &CorrelationMatrix<T>,
    nmi: &NmiMatrix<T>,
    thresholds: FlagThresholds,
) -> Vec<FlaggedPair<T>> {
    assert!(
        pearson.names == nmi.names && kendall.names == nmi.names,
        "matrices must share column names"
    );
    let (t_nmi, t_lin) = (T::of(thresholds.nmi), T::of(thresholds.linear));
    let n = nmi.names.len();
    let mut flagged = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (Some(v), Some(p), Some(k)) = (nmi.get(i, j), pearson.get(i, j), kendall.get(i, j))
            else {
                continue;
            };
            if v >= t_nmi && p.abs() < t_lin && k.abs() < t_lin {
                flagged.push(FlaggedPair {
                    a: nmi.names[i].clone(),
                    b: nmi.names[j].clone(),
                    nmi: v,
                    pearson: p,
                    kendall: k,
                });
            }
        }
    }
    flagged.sort_by(|x, y| {
        y.nmi
            .partial_cmp(&x.nmi)
            .unwrap_or(Ordering::Equal)
            .then_with(|| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
    });
    flagged
}

pub fn nmi_report<T: Scalar>(
    pearson: &CorrelationMatrix<T>,
    kendall: &CorrelationMatrix<T>,
    m: &MeasureMatrix<T>,
    bins: Option<usize>,
    thresholds: FlagThresholds,
) -> NmiReport<T> {
    let nmi = nmi_matrix(m, bins);
    let flagged_pairs = flag_nonlinear(pearson, kendall, &nmi, thresholds);
    NmiReport {
        nmi,
        thresholds,
        flagged_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_sends_ties_low() {
        assert_eq!(equal_frequency_bins(&[0.0, 0.0, 1.0, 1.0], 2), [0, 0, 1, 1]);
        assert_eq!(
            equal_frequency_bins(&[5.0, 1.0, 1.0, 1.0, 2.0, 3.0], 3),
            [2, 0, 0, 0, 1, 2]
        );
        assert_eq!(equal_frequency_bins(&[3.0, 1.0, 2.0, 4.0], 4), [2, 0, 1, 3]);
    }

    #[test]
    fn identity_and_independence() {
        let x = [1.0, 7.0, 3.0, 2.0, 9.0, 4.0];
        assert_eq!(nmi(&x, &x, 3), Ok(1.0));
        assert_eq!(
            nmi(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0, 0.0, 1.0], 2),
            Ok(0.0)
        );
    }

    #[test]
    fn undefined_cases() {
        assert_eq!(
            nmi(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], 2),
            Err(Undefined::Constant)
        );
        assert!(matches!(
            nmi(&[1.0, 2.0], &[1.0, 2.0], 3),
            Err(Undefined::TooFewObservations { .. })
        ));
    }

    #[test]
    fn degenerate_binning_gives_zero() {
        // the lone low value shares bin 0 with everything else
        let x = [0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        assert_eq!(nmi(&x, &y, 2), Ok(0.0));
    }

    #[test]
    fn default_bin_count() {
        assert_eq!(default_bins(1000), 32);
        assert_eq!(default_bins(9), 3);
        assert_eq!(default_bins(0), 1);
    }
}
