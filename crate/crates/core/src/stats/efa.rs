//! Exploratory factor analysis: principal-axis factoring with Kaiser
//! retention, followed by varimax rotation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::correlation::pearson;
use super::linalg::{invert, symmetric_eigen, DenseMatrix};
use super::matrix::MeasureMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EfaError {
    #[error("factor analysis needs at least 2 usable columns, found {0}")]
    TooFewColumns(usize),
    #[error("factor analysis needs at least 3 complete rows, found {0}")]
    TooFewRows(usize),
    #[error("correlation matrix is singular; near-duplicate columns: {}", format_pairs(.near_duplicates))]
    Singular {
        near_duplicates: Vec<(String, String)>,
        column: String,
    },
    #[error("no eigenvalue of the correlation matrix exceeds 1")]
    NoFactor,
    #[error("requested {requested} factors from {columns} columns")]
    TooManyFactors { requested: usize, columns: usize },
}

fn format_pairs(pairs: &[(String, String)]) -> String {
    if pairs.is_empty() {
        return "none found (linear dependency across several columns)".into();
    }
    pairs
        .iter()
        .map(|(a, b)| format!("{a}~{b}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfaOptions {
    /// Factors to retain; Kaiser criterion (eigenvalues of R above 1) when unset.
    pub n_factors: Option<usize>,
    pub max_iter: usize,
    /// Convergence threshold on the largest communality change.
    pub tol: f64,
    /// Columns with a larger share of missing cells are dropped.
    pub max_missing: f64,
    pub rotate: bool,
}

impl Default for EfaOptions {
    fn default() -> Self {
        EfaOptions {
            n_factors: None,
            max_iter: 500,
            tol: 1e-6,
            max_missing: 0.2,
            rotate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorSolution<T> {
    /// Measures that entered the analysis, in loading-row order.
    pub names: Vec<String>,
    /// measures × factors, rotated when rotation was requested.
    pub loadings: DenseMatrix<T>,
    pub communalities: Vec<T>,
    /// `1 − communality`, clamped to [0, 1].
    pub uniquenesses: Vec<T>,
    pub n_factors: usize,
    /// Sum of squared loadings per factor.
    pub explained_variance: Vec<T>,
    /// Full eigenvalue spectrum of the correlation matrix, descending.
    pub eigenvalues: Vec<T>,
    /// Number of eigenvalues above 1.
    pub kaiser_count: usize,
    pub converged: bool,
    pub iterations: usize,
    /// A communality reached or exceeded 1 during extraction.
    pub heywood: bool,
    pub rows_used: usize,
    pub dropped_columns: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn efa<T: Scalar>(
    m: &MeasureMatrix<T>,
    opts: &EfaOptions,
) -> Result<FactorSolution<T>, EfaError> {
    let mut warnings = Vec::new();
    let mut dropped = Vec::new();
    let n_rows = m.n_rows();

    let mut keep = Vec::new();
    for j in 0..m.n_cols() {
        let missing = m.column(j).iter().filter(|c| c.is_none()).count();
        let share = if n_rows == 0 {
            1.0
        } else {
            missing as f64 / n_rows as f64
        };
        if share > opts.max_missing {
            warnings.push(format!(
                "dropped `{}`: {:.0}% missing",
                m.column_names()[j],
                share * 100.0
            ));
            dropped.push(m.column_names()[j].clone());
        } else {
            keep.push(j);
        }
    }

    let rows: Vec<usize> = (0..n_rows)
        .filter(|&r| keep.iter().all(|&j| m.get(r, j).is_some()))
        .collect();
    let mut columns: Vec<(String, Vec<T>)> = keep
        .iter()
        .map(|&j| {
            (
                m.column_names()[j].clone(),
                rows.iter()
                    .map(|&r| m.get(r, j).expect("complete row"))
                    .collect(),
            )
        })
        .collect();
    columns.retain(|(name, v)| {
        let constant = v.iter().all(|&x| x == v[0]);
        if constant && !v.is_empty() {
            warnings.push(format!("dropped `{name}`: constant over complete rows"));
            dropped.push(name.clone());
        }
        !constant || v.is_empty()
    });

    let p = columns.len();
    if p < 2 {
        return Err(EfaError::TooFewColumns(p));
    }
    if rows.len() < 3 {
        return Err(EfaError::TooFewRows(rows.len()));
    }
    if rows.len() < 5 * p {
        warnings.push(format!(
            "only {} complete rows for {p} measures (at least {} recommended)",
            rows.len(),
            5 * p
        ));
    }

    let names: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
    let mut r = DenseMatrix::identity(p);
    for i in 0..p {
        for j in i + 1..p {
            let v = pearson(&columns[i].1, &columns[j].1).expect("non-constant complete columns");
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    let mut sol = principal_axis(&r, &names, opts)?;
    sol.rows_used = rows.len();
    sol.dropped_columns = dropped;
    warnings.append(&mut sol.warnings);
    sol.warnings = warnings;
    Ok(sol)
}

/// Principal-axis factoring of a correlation matrix.
pub fn principal_axis<T: Scalar>(
    r: &DenseMatrix<T>,
    names: &[String],
    opts: &EfaOptions,
) -> Result<FactorSolution<T>, EfaError> {
    let p = r.nrows();
    let spectrum = symmetric_eigen(r);
    let kaiser_count = spectrum.values.iter().filter(|&&v| v > T::one()).count();
    let n_factors = match opts.n_factors {
        Some(k) if k == 0 || k > p => {
            return Err(EfaError::TooManyFactors {
                requested: k,
                columns: p,
            })
        }
        Some(k) => k,
        None if kaiser_count == 0 => return Err(EfaError::NoFactor),
        None => kaiser_count,
    };

    // squared multiple correlations as starting communalities
    let inv = invert(r).map_err(|col| EfaError::Singular {
        near_duplicates: near_duplicates(r, names),
        column: names[col].clone(),
    })?;
    let mut h: Vec<T> = (0..p)
        .map(|i| (T::one() - T::one() / inv[(i, i)]).max(T::zero()))
        .collect();

    let tol = T::of(opts.tol);
    let mut converged = false;
    let mut heywood = false;
    let mut iterations = 0;
    let mut loadings = DenseMatrix::zeros(p, n_factors);
    for it in 0..opts.max_iter.max(1) {
        iterations = it + 1;
        let mut reduced = r.clone();
        for i in 0..p {
            reduced[(i, i)] = h[i];
        }
        let eig = symmetric_eigen(&reduced);
        for f in 0..n_factors {
            let scale = eig.values[f].max(T::zero()).sqrt();
            for i in 0..p {
                loadings[(i, f)] = eig.vectors[(i, f)] * scale;
            }
        }
        let new_h: Vec<T> = (0..p)
            .map(|i| loadings.row(i).iter().map(|&l| l * l).sum())
            .collect();
        let change = h
            .iter()
            .zip(&new_h)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        h = new_h;
        if h.iter().any(|&c| c >= T::one()) {
            heywood = true;
        }
        if change < tol {
            converged = true;
            break;
        }
    }

    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!(
            "communalities did not converge within {} iterations",
            opts.max_iter
        ));
    }
    if heywood {
        warnings.push("Heywood case: a communality reached 1".into());
    }

    let loadings = if opts.rotate {
        varimax(&loadings)
    } else {
        sign_convention(loadings)
    };
    let loadings = order_by_variance(loadings);
    let communalities: Vec<T> = (0..p)
        .map(|i| loadings.row(i).iter().map(|&l| l * l).sum())
        .collect();
    let uniquenesses = communalities
        .iter()
        .map(|&c| (T::one() - c).max(T::zero()).min(T::one()))
        .collect();
    let explained_variance = column_sum_squares(&loadings);

    Ok(FactorSolution {
        names: names.to_vec(),
        loadings,
        communalities,
        uniquenesses,
        n_factors,
        explained_variance,
        eigenvalues: spectrum.values,
        kaiser_count,
        converged,
        iterations,
        heywood,
        rows_used: 0,
        dropped_columns: Vec::new(),
        warnings,
    })
}

fn near_duplicates<T: Scalar>(r: &DenseMatrix<T>, names: &[String]) -> Vec<(String, String)> {
    let limit = T::one() - T::of(1e-6);
    let mut out = Vec::new();
    for i in 0..r.nrows() {
        for j in i + 1..r.nrows() {
            if r[(i, j)].abs() >= limit {
                out.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    out
}

fn column_sum_squares<T: Scalar>(l: &DenseMatrix<T>) -> Vec<T> {
    (0..l.ncols())
        .map(|f| l.column(f).iter().map(|&x| x * x).sum())
        .collect()
}

fn order_by_variance<T: Scalar>(l: DenseMatrix<T>) -> DenseMatrix<T> {
    let var = column_sum_squares(&l);
    let mut order: Vec<usize> = (0..l.ncols()).collect();
    order.sort_by(|&a, &b| {
        var[b]
            .partial_cmp(&var[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    l.select_columns(&order)
}

/// Flips factor signs so that the largest-magnitude loading of each factor is positive.
pub fn sign_convention<T: Scalar>(mut l: DenseMatrix<T>) -> DenseMatrix<T> {
    for f in 0..l.ncols() {
        let col = l.column(f);
        let dominant =
            col.iter().copied().fold(
                T::zero(),
                |best, x| if x.abs() > best.abs() { x } else { best },
            );
        if dominant < T::zero() {
            for i in 0..l.nrows() {
                l[(i, f)] = -l[(i, f)];
            }
        }
    }
    l
}

/// Raw varimax criterion: Σ_f [ p·Σ_i l⁴ − (Σ_i l²)² ] / p².
pub fn varimax_criterion<T: Scalar>(l: &DenseMatrix<T>) -> T {
    let p = T::of_usize(l.nrows());
    (0..l.ncols())
        .map(|f| {
            let col = l.column(f);
            let s2: T = col.iter().map(|&x| x * x).sum();
            let s4: T = col.iter().map(|&x| x * x * x * x).sum();
            (p * s4 - s2 * s2) / (p * p)
        })
        .sum()
}

/// Row-normalizes by √communality; rows with zero communality are left as-is.
pub fn kaiser_normalize<T: Scalar>(l: &DenseMatrix<T>) -> (DenseMatrix<T>, Vec<T>) {
    let mut out = l.clone();
    let norms: Vec<T> = (0..l.nrows())
        .map(|i| l.row(i).iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    for i in 0..l.nrows() {
        if norms[i] > T::zero() {
            for f in 0..l.ncols() {
                out[(i, f)] = out[(i, f)] / norms[i];
            }
        }
    }
    (out, norms)
}

const VARIMAX_GAIN_TOL: f64 = 1e-6;
const VARIMAX_MAX_SWEEPS: usize = 100;

/// Kaiser-normalized varimax by successive pairwise planar rotations.
///
/// Stops when a full sweep improves the criterion by less than 1e-6 or after
/// 100 sweeps. A single factor is returned unchanged apart from the sign convention.
pub fn varimax<T: Scalar>(loadings: &DenseMatrix<T>) -> DenseMatrix<T> {
    let (p, k) = (loadings.nrows(), loadings.ncols());
    if k < 2 || p == 0 {
        return sign_convention(loadings.clone());
    }
    let (mut x, norms) = kaiser_normalize(loadings);
    let n = T::of_usize(p);
    let two = T::of(2.0);
    let mut criterion = varimax_criterion(&x);

    for _ in 0..VARIMAX_MAX_SWEEPS {
        for a in 0..k {
            for b in a + 1..k {
                let (mut sa, mut sb, mut sc, mut sd) = (T::zero(), T::zero(), T::zero(), T::zero());
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    let u = xa * xa - xb * xb;
                    let v = two * xa * xb;
                    sa = sa + u;
                    sb = sb + v;
                    sc = sc + (u * u - v * v);
                    sd = sd + u * v;
                }
                let num = two * sd - two * sa * sb / n;
                let den = sc - (sa * sa - sb * sb) / n;
                let phi = num.atan2(den) / T::of(4.0);
                if phi == T::zero() {
                    continue;
                }
                let (s, c) = phi.sin_cos();
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    x[(i, a)] = c * xa + s * xb;
                    x[(i, b)] = -s * xa + c * xb;
                }
            }
        }
        let next = varimax_criterion(&x);
        let gain = next - criterion;
        criterion = next;
        if gain < T::of(VARIMAX_GAIN_TOL) {
            break;
        }
    }

    for i in 0..p {
        if norms[i] > T::zero() {
            for f in 0..k {
                x[(i, f)] = x[(i, f)] * norms[i];
            }
        }
    }
    sign_convention(x)
}
