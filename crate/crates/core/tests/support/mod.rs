//! Independent reference implementations and data generators shared by the
//! integration tests. Nothing here calls into the code under test except to
//! hand a counted result to the same final formula.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- metrics

/// One randomized retrieval instance: a ranking and graded judgments.
#[derive(Debug, Clone)]
pub struct MetricCase {
    pub ranking: Vec<String>,
    pub grades: HashMap<String, u32>,
    pub k: usize,
}

/// Rankings of up to `max_len` docs drawn from a pool that also holds
/// unretrieved judged documents; grades in 0..=`max_grade`.
pub fn metric_case(rng: &mut ChaCha8Rng, max_len: usize, max_grade: u32) -> MetricCase {
    let pool_size = rng.random_range(1..=max_len + 20);
    let mut pool: Vec<String> = (0..pool_size).map(|i| format!("d{i}")).collect();
    pool.shuffle(rng);
    let len = rng.random_range(0..=max_len.min(pool_size));
    let ranking = pool[..len].to_vec();
    let mut grades = HashMap::new();
    for d in &pool {
        if rng.random_bool(0.6) {
            grades.insert(d.clone(), rng.random_range(0..=max_grade));
        }
    }
    let k = rng.random_range(1..=max_len + 5);
    MetricCase { ranking, grades, k }
}

fn rel(grades: &HashMap<String, u32>, d: &str) -> f64 {
    if grades.get(d).copied().unwrap_or(0) > 0 {
        1.0
    } else {
        0.0
    }
}

fn n_relevant(grades: &HashMap<String, u32>) -> usize {
    grades.values().filter(|&&g| g > 0).count()
}

pub fn oracle_precision(c: &MetricCase) -> f64 {
    let mut hits = 0.0;
    for i in 0..c.k {
        if let Some(d) = c.ranking.get(i) {
            hits += rel(&c.grades, d);
        }
    }
    hits / c.k as f64
}

pub fn oracle_recall(c: &MetricCase) -> Option<f64> {
    let r = n_relevant(&c.grades);
    if r == 0 {
        return None;
    }
    let hits: f64 = c.ranking.iter().take(c.k).map(|d| rel(&c.grades, d)).sum();
    Some(hits / r as f64)
}

pub fn oracle_rr(c: &MetricCase) -> f64 {
    for (i, d) in c.ranking.iter().enumerate() {
        if rel(&c.grades, d) > 0.0 {
            return 1.0 / (i + 1) as f64;
        }
    }
    0.0
}

/// AP as the mean over all relevant documents of precision at their rank
/// (0 for relevant documents never retrieved).
pub fn oracle_ap(c: &MetricCase) -> Option<f64> {
    let r = n_relevant(&c.grades);
    if r == 0 {
        return None;
    }
    let mut total = 0.0;
    for (i, d) in c.ranking.iter().enumerate() {
        if rel(&c.grades, d) > 0.0 {
            let prefix = &c.ranking[..=i];
            let hits = prefix.iter().filter(|x| rel(&c.grades, x) > 0.0).count();
            total += hits as f64 / (i + 1) as f64;
        }
    }
    Some(total / r as f64)
}

pub fn oracle_ndcg(c: &MetricCase) -> Option<f64> {
    let dcg = |gains: &[u32]| -> f64 {
        gains
            .iter()
            .take(c.k)
            .enumerate()
            .map(|(i, &g)| g as f64 / ((i + 2) as f64).log2())
            .sum()
    };
    let got: Vec<u32> = c
        .ranking
        .iter()
        .map(|d| c.grades.get(d).copied().unwrap_or(0))
        .collect();
    let mut ideal: Vec<u32> = c.grades.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal);
    (idcg > 0.0).then(|| dcg(&got) / idcg)
}

// ---------------------------------------------------------------- RBO

/// Two rankings over a shared vocabulary, each duplicate-free.
pub fn ranking_pair(rng: &mut ChaCha8Rng, max_len: usize) -> (Vec<u32>, Vec<u32>) {
    let vocab = rng.random_range(1..=2 * max_len);
    let mut ids: Vec<u32> = (0..vocab as u32).collect();
    ids.shuffle(rng);
    let la = rng.random_range(1..=max_len.min(vocab));
    let a = ids[..la].to_vec();
    ids.shuffle(rng);
    let lb = rng.random_range(1..=max_len.min(vocab));
    let b = ids[..lb].to_vec();
    (a, b)
}

/// Extrapolated RBO as the infinite series `(1−p) Σ_{d≥1} p^(d−1) A_d`, where
/// agreement beyond the evaluation depth `k` stays at `A_k`. Summed term by
/// term until the remaining tail is below 1e−17.
pub fn oracle_rbo_ext(a: &[u32], b: &[u32], p: f64, depth: usize) -> f64 {
    let k = depth.min(a.len()).min(b.len());
    let agreement = |d: usize| -> f64 {
        let sa: HashSet<&u32> = a[..d].iter().collect();
        let sb: HashSet<&u32> = b[..d].iter().collect();
        sa.intersection(&sb).count() as f64 / d as f64
    };
    let a_k = agreement(k);
    let mut sum = 0.0;
    let mut weight = 1.0 - p;
    let mut d = 1;
    loop {
        let a_d = if d <= k { agreement(d) } else { a_k };
        sum += weight * a_d;
        weight *= p;
        // remaining tail ≤ Σ weight p^j = weight / (1−p)
        if d > k && weight / (1.0 - p) < 1e-17 {
            break;
        }
        d += 1;
    }
    sum
}

// ---------------------------------------------------------------- Kendall

/// Series with heavy ties: values drawn from a small alphabet.
pub fn tied_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let levels = rng.random_range(1..=8);
    (0..n).map(|_| rng.random_range(0..levels) as f64).collect()
}

/// Explicit pair enumeration: (n0, tied in x, tied in y, concordant − discordant).
pub fn kendall_pairs(x: &[f64], y: &[f64]) -> (u64, u64, u64, i64) {
    let n = x.len();
    let (mut tx, mut ty, mut s) = (0u64, 0u64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tx += 1;
            }
            if dy == 0.0 {
                ty += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                if (dx > 0.0) == (dy > 0.0) {
                    s += 1;
                } else {
                    s -= 1;
                }
            }
        }
    }
    ((n * n.saturating_sub(1) / 2) as u64, tx, ty, s)
}

// ---------------------------------------------------------------- factor models

/// Columns drawn from `x_j = Σ_f λ_jf · F_f + sqrt(1 − Σ_f λ_jf²) · ε_j` with
/// independent standard normal factors and noise.
pub fn factor_model_data(loadings: &[Vec<f64>], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    let p = loadings.len();
    let k = loadings[0].len();
    let mut cols = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        let f: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        for (j, l) in loadings.iter().enumerate() {
            let common: f64 = l.iter().zip(&f).map(|(a, b)| a * b).sum();
            let h2: f64 = l.iter().map(|a| a * a).sum();
            let e: f64 = StandardNormal.sample(&mut rng);
            cols[j].push(common + (1.0 - h2).sqrt() * e);
        }
    }
    cols
}

/// Tucker's congruence coefficient between two loading vectors.
pub fn congruence(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab / (aa * bb).sqrt()
}

/// Best per-factor |congruence| over all column permutations of `got`
/// (sign-free); returns the minimum over factors of the best assignment.
pub fn matched_congruence(truth: &[Vec<f64>], got: &[Vec<f64>]) -> f64 {
    let k = truth.len();
    assert_eq!(k, got.len());
    let mut best = f64::NEG_INFINITY;
    let mut perm: Vec<usize> = (0..k).collect();
    permutations(&mut perm, 0, &mut |p| {
        let worst = (0..k)
            .map(|f| congruence(&truth[f], &got[p[f]]).abs())
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    });
    best
}

fn permutations(v: &mut Vec<usize>, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start == v.len() {
        visit(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permutations(v, start + 1, visit);
        v.swap(start, i);
    }
}

/// Plain two-pass sample correlation, for residual checks.
pub fn sample_correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// The two-cluster loading pattern: four measures on each of two factors.
pub fn two_factor_loadings() -> Vec<Vec<f64>> {
    (0..8)
        .map(|j| {
            if j < 4 {
                vec![0.8, 0.0]
            } else {
                vec![0.0, 0.8]
            }
        })
        .collect()
}
