//! Fractional-difference filter weights and their d-derivatives.
//!
//! (1-B)^d has weights c_0 = 1, c_k = c_{k-1}(k-1-d)/k; the inverse filter
//! (1-B)^{-d} has m_0 = 1, m_k = m_{k-1}(k-1+d)/k. The j-th derivative of
//! (1-B)^d in d is log^j(1-B)(1-B)^d, whose weights satisfy
//! a_{j,k} = [(k-1-d) a_{j,k-1} - j a_{j-1,k-1}]/k with a_{j,0} = 0 for
//! j >= 1 (one multiplication per lag instead of a j-fold convolution with
//! the harmonic filter -1/i).

use super::check_d;
use crate::error::{CpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FilterKind {
    FracDiff,
    InverseFracDiff,
    LogDeriv { j: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoeffs {
    pub kind: FilterKind,
    pub d: f64,
    pub weights: Vec<f64>,
}

impl FilterCoeffs {
    pub fn order(&self) -> usize {
        self.weights.len() - 1
    }
}

/// Weights of (1-B)^d up to lag K.
pub fn frac_diff_coeffs(d: f64, k_max: usize) -> Result<FilterCoeffs> {
    check_d(d)?;
    Ok(FilterCoeffs {
        kind: FilterKind::FracDiff,
        d,
        weights: frac_diff_weights(d, k_max),
    })
}

pub(crate) fn frac_diff_weights(d: f64, k_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(k_max + 1);
    w.push(1.0);
    for k in 1..=k_max {
        let prev = w[k - 1];
        w.push(prev * ((k - 1) as f64 - d) / k as f64);
    }
    w
}

/// Weights of (1-B)^{-d} up to lag K.
pub fn inverse_frac_coeffs(d: f64, k_max: usize) -> Result<FilterCoeffs> {
    check_d(d)?;
    let mut w = Vec::with_capacity(k_max + 1);
    w.push(1.0);
    for k in 1..=k_max {
        let prev = w[k - 1];
        w.push(prev * ((k - 1) as f64 + d) / k as f64);
    }
    Ok(FilterCoeffs {
        kind: FilterKind::InverseFracDiff,
        d,
        weights: w,
    })
}

/// Weights of log^j(1-B) (1-B)^d up to lag K, j in {1, 2, 3}.
pub fn log_deriv_coeffs(d: f64, j: u8, k_max: usize) -> Result<FilterCoeffs> {
    check_d(d)?;
    if !(1..=3).contains(&j) {
        return Err(CpError::domain(format!(
            "derivative order j must be 1, 2 or 3, got {j}"
        )));
    }
    let levels = log_deriv_ladder(d, j as usize, k_max);
    Ok(FilterCoeffs {
        kind: FilterKind::LogDeriv { j },
        d,
        weights: levels.into_iter().last().expect("j >= 1"),
    })
}

/// All derivative levels 1..=j_max in one pass; level j depends on level j-1.
pub(crate) fn log_deriv_ladder(d: f64, j_max: usize, k_max: usize) -> Vec<Vec<f64>> {
    let base = frac_diff_weights(d, k_max);
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(j_max);
    let mut below = base;
    for j in 1..=j_max {
        let mut cur = vec![0.0; k_max + 1];
        for k in 1..=k_max {
            cur[k] = (((k - 1) as f64 - d) * cur[k - 1] - j as f64 * below[k - 1]) / k as f64;
        }
        levels.push(cur.clone());
        below = cur;
    }
    levels
}
