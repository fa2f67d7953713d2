//! Normalizing constants and the limit law for the scan maximum.
//!
//! With LL = log log n, the centered/scaled maximum
//! (max_k W_n(k) - b_n(m)) / a_n(m) converges to the double-exponential law
//! F(x) = exp(-2 e^{-x/2}), where
//!
//!   B      = 2 LL + (m/2) log LL - log Gamma(m/2)
//!   b_n(m) = B^2 / (2 LL)
//!   a_n(m) = B / (2 LL) = sqrt(b_n(m) / (2 LL))
//!
//! One-direction maxima (a single forward or backward family of partial
//! sums) obey the square-rooted law F(x) = exp(-e^{-x/2}) under the same
//! constants; `one_direction_limit_cdf` covers that case.

use crate::error::{CpError, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

pub const MIN_N_FOR_NORM: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormConstants {
    pub n: usize,
    pub m: usize,
    pub a_n: f64,
    pub b_n: f64,
    /// Minimum sub-sample length the scan keeps on each side.
    pub trim: usize,
}

/// Normalizing constants for sample size n and parameter dimension m, with
/// the default trim attached.
pub fn norm_constants(n: usize, m: usize) -> Result<NormConstants> {
    if n < MIN_N_FOR_NORM {
        return Err(CpError::domain(format!(
            "norm_constants requires n >= {MIN_N_FOR_NORM}, got {n}"
        )));
    }
    if m == 0 {
        return Err(CpError::domain("norm_constants requires m >= 1"));
    }
    let ll = (n as f64).ln().ln();
    let lll = ll.ln();
    let bracket = 2.0 * ll + 0.5 * m as f64 * lll - ln_gamma(0.5 * m as f64);
    if !(bracket > 0.0) {
        return Err(CpError::domain(format!(
            "normalization bracket non-positive at n={n}, m={m}"
        )));
    }
    let b = bracket * bracket / (2.0 * ll);
    let a = bracket / (2.0 * ll);
    Ok(NormConstants {
        n,
        m,
        a_n: a,
        b_n: b,
        trim: default_trim(n, m),
    })
}

/// P(limit > w) under F(x) = exp(-2 e^{-x/2}).
pub fn p_value(w: f64) -> f64 {
    if w.is_nan() {
        return f64::NAN;
    }
    -(-2.0 * (-0.5 * w).exp()).exp_m1()
}

/// Upper-alpha quantile of F(x) = exp(-2 e^{-x/2}).
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CpError::domain(format!(
            "critical_value needs alpha in (0, 1), got {alpha}"
        )));
    }
    // 1 - alpha = exp(-2 e^{-x/2})  =>  x = -2 ln(-ln(1 - alpha) / 2)
    Ok(-2.0 * (-(-alpha).ln_1p() / 2.0).ln())
}

/// CDF of the one-direction limit, exp(-e^{-x/2}).
pub fn one_direction_limit_cdf(x: f64) -> f64 {
    (-(-0.5 * x).exp()).exp()
}

/// Default trim for a scan: max(m + 1, ceil(log n)).
pub fn default_trim(n: usize, m: usize) -> usize {
    let logn = (n as f64).ln().ceil() as usize;
    logn.max(m + 1)
}
