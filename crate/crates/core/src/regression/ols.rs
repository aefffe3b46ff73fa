use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Columns whose QR pivot falls below this fraction of the column norm are
/// treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Least-squares fit with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// One weight per design column, then the intercept.
    pub coefficients: Vec<f64>,
    /// Minimized sum of squared residuals.
    pub sse: f64,
}

impl OlsFit {
    pub fn intercept(&self) -> f64 {
        *self.coefficients.last().expect("fit always has an intercept")
    }

    pub fn slopes(&self) -> &[f64] {
        &self.coefficients[..self.coefficients.len() - 1]
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        debug_assert_eq!(row.len(), self.slopes().len());
        row.iter()
            .zip(self.slopes())
            .map(|(x, w)| x * w)
            .sum::<f64>()
            + self.intercept()
    }
}

/// Minimizes `Σ (y - X·w - d)²` by Householder QR of `[X | 1]`.
///
/// `rows` is row-major n×m; an intercept column is appended internally.
pub fn ols_fit(rows: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = rows.len();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let m = rows.first().map_or(0, Vec::len);
    let p = m + 1;
    if n <= p {
        return Err(Error::TooFewObservations { n, required: p + 1 });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != m) {
        return Err(Error::LengthMismatch {
            left: m,
            right: bad.len(),
        });
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in regression input".into()));
    }

    let x = DMatrix::from_fn(n, p, |i, j| if j < m { rows[i][j] } else { 1.0 });
    let col_norms: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    let qr = x.qr();
    let r = qr.r();

    let mut pivots = Vec::with_capacity(p);
    for j in 0..p {
        let rjj = r[(j, j)].abs();
        if col_norms[j] == 0.0 || rjj <= RANK_TOL * col_norms[j] {
            return Err(Error::RankDeficient {
                condition: condition_estimate(&r, &col_norms),
            });
        }
        pivots.push(rjj / col_norms[j]);
    }

    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);

    // Back-substitution on the leading p×p block of R.
    let mut w = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for j in i + 1..p {
            acc -= r[(i, j)] * w[j];
        }
        w[i] = acc / r[(i, i)];
    }

    let fit = OlsFit {
        coefficients: w,
        sse: 0.0,
    };
    let sse = rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let e = yi - fit.predict(row);
            e * e
        })
        .sum();
    Ok(OlsFit { sse, ..fit })
}

/// Ratio of the largest to smallest column-scaled QR pivot.
fn condition_estimate(r: &DMatrix<f64>, col_norms: &[f64]) -> f64 {
    let scaled: Vec<f64> = col_norms
        .iter()
        .enumerate()
        .map(|(j, &c)| if c == 0.0 { 0.0 } else { r[(j, j)].abs() / c })
        .collect();
    let max = scaled.iter().copied().fold(0.0, f64::max);
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Pearson product-moment correlation, computed from centered sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewObservations { n, required: 2 });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ConstantInput("x"));
    }
    if syy == 0.0 {
        return Err(Error::ConstantInput("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn col(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let fit = ols_fit(&col(&xs), &y).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 1.0, epsilon = 1e-12);
        assert!(fit.sse < 1e-20);
    }

    #[test]
    fn constant_target() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64).sqrt()])
            .collect();
        let y = vec![3.25; 20];
        let fit = ols_fit(&rows, &y).unwrap();
        assert_abs_diff_eq!(fit.slopes()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.slopes()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept(), 3.25, epsilon = 1e-12);
        assert!(fit.sse < 1e-20);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        // Second column is twice the first.
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        assert!(matches!(ols_fit(&rows, &y), Err(Error::RankDeficient { .. })));
        // A constant column duplicates the intercept.
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 4.0]).collect();
        assert!(matches!(ols_fit(&rows, &y), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn too_few_observations() {
        let rows = col(&[1.0, 2.0]);
        assert!(matches!(
            ols_fit(&rows, &[1.0, 2.0]),
            Err(Error::TooFewObservations { n: 2, required: 3 })
        ));
        assert!(ols_fit(&col(&[1.0, 2.0, 3.0]), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_extremes() {
        let x = [1.0, 2.5, -3.0, 4.0];
        assert_abs_diff_eq!(pearson(&x, &x).unwrap(), 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson(&x, &neg).unwrap(), -1.0, epsilon = 1e-15);
        assert_eq!(pearson(&x, &[2.0; 4]).unwrap_err().code(), "constant_input");
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }
}
