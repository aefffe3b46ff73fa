//! Independent reference implementations used to check the library.
//!
//! Nothing here calls into the code under test except for data types and the
//! seeded RNG. Sums are compensated so the oracles are at least as accurate
//! as what they check.

use morcela::data::{RatingTable, SentenceRecord};
use morcela::rng::{self, Rng};
use rand_distr::{Distribution, Normal};

#[cfg(test)]
mod agreement;

/// Neumaier-compensated sum.
pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(xs: &[f64]) -> f64 {
    sum(xs.iter().copied()) / xs.len() as f64
}

/// Least squares via `XᵀX w = Xᵀy` and Gaussian elimination with partial
/// pivoting. Intercept last, as in the library.
#[allow(clippy::needless_range_loop)]
pub fn ols_normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let m = rows[0].len();
    let p = m + 1;
    let col = |r: &Vec<f64>, j: usize| if j < m { r[j] } else { 1.0 };
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = sum(rows.iter().map(|r| col(r, i) * col(r, j)));
        }
        a[i][p] = sum(rows.iter().zip(y).map(|(r, &yi)| col(r, i) * yi));
    }
    for k in 0..p {
        let piv = (k..p)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, piv);
        for i in k + 1..p {
            let f = a[i][k] / a[k][k];
            for j in k..=p {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut w = vec![0.0; p];
    for i in (0..p).rev() {
        let s = sum((i + 1..p).map(|j| a[i][j] * w[j]));
        w[i] = (a[i][p] - s) / a[i][i];
    }
    w
}

pub fn predict(w: &[f64], row: &[f64]) -> f64 {
    sum(row.iter().zip(w).map(|(x, c)| x * c)) + w[w.len() - 1]
}

pub fn sse(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> f64 {
    sum(rows.iter().zip(y).map(|(r, &yi)| (yi - predict(w, r)).powi(2)))
}

/// Pearson r from the closed form `Σdxdy / √(Σdx² Σdy²)`.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = sum(x.iter().map(|a| (a - mx).powi(2)));
    let syy = sum(y.iter().map(|b| (b - my).powi(2)));
    sxy / (sxx * syy).sqrt()
}

/// Simple-regression slope `cov(x, y) / var(x)`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = sum(x.iter().map(|a| (a - mx).powi(2)));
    sxy / sxx
}

/// `n` folds from a seeded permutation: the first `n % k` folds get one
/// extra item.
pub fn folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let perm = rng::permutation(seed, n);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = n / k + usize::from(f < n % k);
        out.push(perm[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Mean held-out Pearson r over k folds, fitting with the normal equations.
pub fn cv_mean_r(rows: &[Vec<f64>], y: &[f64], k: usize, seed: u64) -> f64 {
    let fs = folds(rows.len(), k, seed);
    let rs: Vec<f64> = fs
        .iter()
        .map(|test| {
            let mut held = vec![false; rows.len()];
            for &i in test {
                held[i] = true;
            }
            let (tr_x, tr_y): (Vec<Vec<f64>>, Vec<f64>) = (0..rows.len())
                .filter(|&i| !held[i])
                .map(|i| (rows[i].clone(), y[i]))
                .unzip();
            let w = ols_normal_equations(&tr_x, &tr_y);
            let pred: Vec<f64> = test.iter().map(|&i| predict(&w, &rows[i])).collect();
            let gold: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            pearson(&pred, &gold)
        })
        .collect();
    mean(&rs)
}

/// Per-participant mean and population sd of raw ratings.
pub fn participant_moments(table: &RatingTable) -> Vec<(String, f64, f64)> {
    table
        .by_participant()
        .into_iter()
        .map(|(p, rows)| {
            let xs: Vec<f64> = rows.iter().map(|&(_, r)| f64::from(r)).collect();
            let m = mean(&xs);
            let var = sum(xs.iter().map(|x| (x - m).powi(2))) / xs.len() as f64;
            (p.to_owned(), m, var.sqrt())
        })
        .collect()
}

/// Random record with per-token values drawn independently of any model.
pub fn random_record(g: &mut Rng, id: usize, max_len: u64) -> SentenceRecord {
    let len = 1 + rng::below(g, max_len) as usize;
    let ids: Vec<u32> = (0..len).map(|_| rng::below(g, 50_000) as u32).collect();
    let lm: Vec<f64> = (0..len).map(|_| -20.0 * rng::unit(g)).collect();
    let uni: Vec<f64> = (0..len).map(|_| -(1.0 + 19.0 * rng::unit(g))).collect();
    SentenceRecord::new(format!("r{id}"), None, ids, lm, Some(uni)).expect("valid by construction")
}

/// `n × m` matrix of independent normals with per-column scales.
pub fn random_rows(g: &mut Rng, n: usize, scales: &[f64]) -> Vec<Vec<f64>> {
    let std = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| scales.iter().map(|s| s * std.sample(g)).collect())
        .collect()
}

pub fn normal(g: &mut Rng, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).unwrap().sample(g)
}

/// One row of the published AIC/BIC tables.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionRow {
    pub family: String,
    pub size: String,
    pub linking_function: String,
    pub aic: f64,
    pub bic: f64,
    pub sse: f64,
    pub k: usize,
}

pub const TABLE_N: usize = 1450;

/// The bundled table fixture.
pub fn criterion_rows() -> Vec<CriterionRow> {
    include_str!("../fixtures/aic_bic_tables.csv")
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            CriterionRow {
                family: f[0].into(),
                size: f[1].into(),
                linking_function: f[2].into(),
                aic: f[3].parse().unwrap(),
                bic: f[4].parse().unwrap(),
                sse: f[5].parse().unwrap(),
                k: f[6].parse().unwrap(),
            }
        })
        .collect()
}

/// `n·ln(SSE/n) + 2k` and `n·ln(SSE/n) + k·ln n`.
pub fn aic_bic(n: usize, k: usize, sse: f64) -> (f64, f64) {
    let n = n as f64;
    let base = n * (sse / n).ln();
    (base + 2.0 * k as f64, base + k as f64 * n.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        assert_eq!(sum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn normal_equations_exact_line() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 3.0 * i as f64 - 2.0).collect();
        let w = ols_normal_equations(&rows, &y);
        assert!((w[0] - 3.0).abs() < 1e-12 && (w[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn fold_sizes() {
        let f = folds(12, 5, 0);
        let sizes: Vec<usize> = f.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2, 2]);
    }

    #[test]
    fn fixture_has_all_rows() {
        let rows = criterion_rows();
        assert_eq!(rows.len(), 64);
        assert_eq!(rows.iter().filter(|r| r.family == "pythia").count(), 36);
    }
}
