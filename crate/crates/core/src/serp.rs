//! Overlap between the result pages of a real and a simulated query.

use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::similarity::set_jaccard;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RboVariant {
    Base,
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("RBO persistence must lie in (0, 1), got {0}")]
pub struct InvalidPersistence(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RboParams {
    pub p: f64,
    pub depth: usize,
    pub variant: RboVariant,
}

impl Default for RboParams {
    fn default() -> Self {
        RboParams {
            p: 0.9,
            depth: 10,
            variant: RboVariant::Extrapolated,
        }
    }
}

impl RboParams {
    pub fn new(p: f64, depth: usize, variant: RboVariant) -> Result<Self, InvalidPersistence> {
        if !(p > 0.0 && p < 1.0) {
            return Err(InvalidPersistence(p));
        }
        Ok(RboParams { p, depth, variant })
    }
}

/// Jaccard index of the two result sets, each truncated to `k` when given.
/// `None` when both truncated lists are empty.
pub fn serp_jaccard<T: Scalar, D: Eq + Hash>(a: &[D], b: &[D], k: Option<usize>) -> Option<T> {
    let cut = |l: &[D]| k.map_or(l.len(), |k| k.min(l.len()));
    let sa: HashSet<&D> = a[..cut(a)].iter().collect();
    let sb: HashSet<&D> = b[..cut(b)].iter().collect();
    match (sa.is_empty(), sb.is_empty()) {
        (true, true) => None,
        (true, false) | (false, true) => Some(T::zero()),
        (false, false) => set_jaccard(sa, sb),
    }
}

/// Rank-biased overlap of two duplicate-free rankings.
///
/// Both lists are cut to `k = min(depth, |a|, |b|)`. With `X_d` the overlap of
/// the depth-`d` prefixes:
///
/// * base: `(1−p) · Σ_{d≤k} p^(d−1) · X_d/d`
/// * extrapolated: `X_k/k · p^k + (1−p)/p · Σ_{d≤k} X_d/d · p^d`
///
/// `None` when both lists are empty; `0` when exactly one is.
pub fn rbo<T: Scalar, D: Eq + Hash>(a: &[D], b: &[D], params: &RboParams) -> Option<T> {
    if a.is_empty() && b.is_empty() {
        return None;
    }
    let k = params.depth.min(a.len()).min(b.len());
    if k == 0 {
        return Some(T::zero());
    }
    let p = T::of(params.p);
    let one = T::one();

    let mut seen_a: HashSet<&D> = HashSet::with_capacity(k);
    let mut seen_b: HashSet<&D> = HashSet::with_capacity(k);
    let mut overlap = 0usize;
    let mut agreement = Vec::with_capacity(k);
    for d in 0..k {
        let (x, y) = (&a[d], &b[d]);
        if x == y {
            overlap += 1;
        } else {
            overlap += usize::from(seen_b.contains(x)) + usize::from(seen_a.contains(y));
        }
        seen_a.insert(x);
        seen_b.insert(y);
        agreement.push(T::of_usize(overlap) / T::of_usize(d + 1));
    }
    let agreement_k = agreement[k - 1];
    let scale = (one - p) / p;
    let mut p_pow = one;
    let score = match params.variant {
        RboVariant::Base => {
            let mut sum = T::zero();
            for &a_d in &agreement {
                p_pow = p_pow * p;
                sum = sum + a_d * p_pow;
            }
            scale * sum
        }
        // Since (1−p)/p · Σ_{d≤k} p^d = 1 − p^k, the extrapolated score equals
        // A_k + (1−p)/p · Σ (A_d − A_k) p^d, which is exact for constant agreement.
        RboVariant::Extrapolated => {
            let mut sum = T::zero();
            for &a_d in &agreement {
                p_pow = p_pow * p;
                sum = sum + (a_d - agreement_k) * p_pow;
            }
            agreement_k + scale * sum
        }
    };
    Some(score)
}
