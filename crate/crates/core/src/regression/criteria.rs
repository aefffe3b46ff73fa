use crate::error::{Error, Result};

/// Shared `n · ln(SSE / n)` term; `-inf` (with a warning) when SSE is zero.
fn fit_term(n: usize, k: usize, sse: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if sse.is_nan() || sse < 0.0 || !sse.is_finite() {
        return Err(Error::InvalidArgument(format!("SSE must be finite and >= 0, got {sse}")));
    }
    if sse == 0.0 {
        log::warn!("SSE is zero (perfect fit); information criteria diverge to -inf");
        return Ok(f64::NEG_INFINITY);
    }
    let n = n as f64;
    Ok(n * (sse / n).ln())
}

/// `AIC = n·ln(SSE/n) + 2k`, with k counting the intercept.
pub fn aic(n: usize, k: usize, sse: f64) -> Result<f64> {
    Ok(fit_term(n, k, sse)? + 2.0 * k as f64)
}

/// `BIC = n·ln(SSE/n) + k·ln(n)`, with k counting the intercept.
pub fn bic(n: usize, k: usize, sse: f64) -> Result<f64> {
    Ok(fit_term(n, k, sse)? + k as f64 * (n as f64).ln())
}
