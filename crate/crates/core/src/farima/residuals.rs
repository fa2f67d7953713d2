//! Truncated residual and derivative recursions for FARIMA windows.
//!
//! A window w_1..w_L is always treated as starting fresh: every presample
//! value of the observed series and of the residual sequence is zero. The
//! residual filter is eps(lambda) = psi^{-1}(B) phi(B) (1-B)^d w. Derivative
//! sequences in d come from the log-derivative filters; derivatives in the
//! ARMA coefficients solve the same MA-side recursion with lagged forcing
//! terms (validated against finite differences; the ARMA-side scheme is this
//! crate's construction).

use super::coeffs::{frac_diff_weights, log_deriv_ladder};
use super::{check_d, FarimaParams, SeriesBuffer};
use crate::convolve::{filter, filter3};
use crate::error::{CpError, Result};
use crate::kahan::Kahan;

/// Aggregated window evaluation: objective, score sum, Hessian-term sum and
/// score outer-product sum. Matrices are m x m row-major.
#[derive(Debug, Clone)]
pub struct Eval {
    pub obj: f64,
    pub grad: Vec<f64>,
    pub psum: Vec<f64>,
    pub omega: Vec<f64>,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Objective,
    Full,
}

/// Per-t residuals, gradients and Hessian terms on a window; the inspection
/// type behind the aggregated Eval.
#[derive(Debug, Clone)]
pub struct ScorePanel {
    /// Window as [start, end) in 0-based series coordinates.
    pub range: (usize, usize),
    pub m: usize,
    pub eps: Vec<f64>,
    /// t-major, m entries per t.
    pub grad: Vec<f64>,
    /// t-major, m*m entries per t (symmetric).
    pub hess: Vec<f64>,
}

impl ScorePanel {
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// Score D_t = -(d eps_t) * eps_t.
    pub fn d_t(&self, t: usize) -> Vec<f64> {
        let m = self.m;
        let e = self.eps[t];
        self.grad[t * m..(t + 1) * m]
            .iter()
            .map(|&g| -g * e)
            .collect()
    }

    /// Hessian term P_t = (d eps_t)(d eps_t)' + (d2 eps_t) eps_t.
    pub fn p_t(&self, t: usize) -> Vec<f64> {
        let m = self.m;
        let e = self.eps[t];
        let g = &self.grad[t * m..(t + 1) * m];
        let h = &self.hess[t * m * m..(t + 1) * m * m];
        let mut out = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                out[a * m + b] = g[a] * g[b] + h[a * m + b] * e;
            }
        }
        out
    }

    pub fn sigma_sum(&self) -> Vec<f64> {
        let m = self.m;
        let mut acc = vec![Kahan::new(); m * m];
        for t in 0..self.len() {
            let p = self.p_t(t);
            for (a, v) in acc.iter_mut().zip(p.iter()) {
                a.add(*v);
            }
        }
        acc.iter().map(|k| k.value()).collect()
    }

    pub fn omega_sum(&self) -> Vec<f64> {
        let m = self.m;
        let mut acc = vec![Kahan::new(); m * m];
        for t in 0..self.len() {
            let d = self.d_t(t);
            for a in 0..m {
                for b in 0..m {
                    acc[a * m + b].add(d[a] * d[b]);
                }
            }
        }
        acc.iter().map(|k| k.value()).collect()
    }
}

/// Residuals of a full series under `params`, zero presample.
pub fn residuals(params: &FarimaParams, series: &SeriesBuffer) -> Result<Vec<f64>> {
    params.validate()?;
    Ok(residual_series(params, &series.values))
}

/// Per-t panel over a 0-based half-open index range of the series, with the
/// presample origin placed at the range start.
pub fn score_panel(
    params: &FarimaParams,
    series: &SeriesBuffer,
    range: (usize, usize),
) -> Result<ScorePanel> {
    params.validate()?;
    let (a, b) = range;
    if a >= b || b > series.n() {
        return Err(CpError::domain(format!(
            "panel range [{a}, {b}) invalid for series of length {}",
            series.n()
        )));
    }
    let w = &series.values[a..b];
    let ds = derivs(params, w, true);
    let m = params.dim();
    let n = w.len();
    let mut grad = vec![0.0; n * m];
    let mut hess = vec![0.0; n * m * m];
    for t in 0..n {
        for c in 0..m {
            grad[t * m + c] = ds.de[c][t];
        }
        for a_i in 0..m {
            for b_i in a_i..m {
                let v = ds.d2e[tri_index(a_i, b_i, m)][t];
                hess[t * m * m + a_i * m + b_i] = v;
                hess[t * m * m + b_i * m + a_i] = v;
            }
        }
    }
    Ok(ScorePanel {
        range,
        m,
        eps: ds.eps,
        grad,
        hess,
    })
}

/// Residuals of a bare window (internal; callers hold validated params).
pub(crate) fn residual_series(params: &FarimaParams, w: &[f64]) -> Vec<f64> {
    let kmax = w.len().saturating_sub(1);
    let a0 = frac_diff_weights(params.d, kmax);
    let z0 = filter(&a0, w);
    if params.phi.is_empty() && params.psi.is_empty() {
        return z0;
    }
    let mut f = ar_apply(&params.phi, &z0);
    ma_invert(&params.psi, &mut f);
    f
}

/// Aggregated evaluation of the quasi-likelihood pieces on a window.
pub(crate) fn eval_window(params: &FarimaParams, w: &[f64], mode: EvalMode) -> Eval {
    debug_assert!(check_d(params.d).is_ok());
    if mode == EvalMode::Objective {
        let eps = residual_series(params, w);
        let mut obj = Kahan::new();
        for &e in &eps {
            obj.add(-0.5 * e * e);
        }
        return Eval {
            obj: obj.value(),
            grad: Vec::new(),
            psum: Vec::new(),
            omega: Vec::new(),
            len: w.len(),
        };
    }
    if params.phi.is_empty() && params.psi.is_empty() {
        return eval_m1(params.d, w);
    }
    eval_general(params, w)
}

/// Fused path for FARIMA(0, d, 0): three filters in one sweep, then a single
/// accumulation loop.
fn eval_m1(d: f64, w: &[f64]) -> Eval {
    let kmax = w.len().saturating_sub(1);
    let base = frac_diff_weights(d, kmax);
    let ladder = log_deriv_ladder(d, 2, kmax);
    let (a1, a2) = (&ladder[0], &ladder[1]);
    let [eps, de, d2e] = filter3(&base, a1, a2, w);
    let mut obj = Kahan::new();
    let mut g = Kahan::new();
    let mut p = Kahan::new();
    let mut om = Kahan::new();
    for t in 0..w.len() {
        let (e, g1, h) = (eps[t], de[t], d2e[t]);
        obj.add(-0.5 * e * e);
        let dt = -g1 * e;
        g.add(dt);
        p.add(g1 * g1 + h * e);
        om.add(dt * dt);
    }
    Eval {
        obj: obj.value(),
        grad: vec![g.value()],
        psum: vec![p.value()],
        omega: vec![om.value()],
        len: w.len(),
    }
}

fn eval_general(params: &FarimaParams, w: &[f64]) -> Eval {
    let m = params.dim();
    let ds = derivs(params, w, true);
    let mut obj = Kahan::new();
    let mut g = vec![Kahan::new(); m];
    let mut p = vec![Kahan::new(); m * m];
    let mut om = vec![Kahan::new(); m * m];
    let mut gt = vec![0.0; m];
    for t in 0..w.len() {
        let e = ds.eps[t];
        obj.add(-0.5 * e * e);
        for c in 0..m {
            gt[c] = ds.de[c][t];
        }
        for a in 0..m {
            g[a].add(-gt[a] * e);
            for b in a..m {
                let h = ds.d2e[tri_index(a, b, m)][t];
                let pv = gt[a] * gt[b] + h * e;
                let ov = (gt[a] * e) * (gt[b] * e);
                p[a * m + b].add(pv);
                om[a * m + b].add(ov);
                if b != a {
                    p[b * m + a].add(pv);
                    om[b * m + a].add(ov);
                }
            }
        }
    }
    Eval {
        obj: obj.value(),
        grad: g.iter().map(|k| k.value()).collect(),
        psum: p.iter().map(|k| k.value()).collect(),
        omega: om.iter().map(|k| k.value()).collect(),
        len: w.len(),
    }
}

struct Derivs {
    eps: Vec<f64>,
    /// m first-derivative series, coordinate order (d, phi.., psi..).
    de: Vec<Vec<f64>>,
    /// m(m+1)/2 second-derivative series, upper-triangular pair order.
    d2e: Vec<Vec<f64>>,
}

fn tri_index(a: usize, b: usize, m: usize) -> usize {
    debug_assert!(a <= b);
    a * m - (a * a - a) / 2 + (b - a)
}

fn derivs(params: &FarimaParams, w: &[f64], second: bool) -> Derivs {
    let n = w.len();
    let kmax = n.saturating_sub(1);
    let (p, q) = (params.phi.len(), params.psi.len());
    let m = params.dim();
    let base = frac_diff_weights(params.d, kmax);
    let ladder = log_deriv_ladder(params.d, 2, kmax);
    if p == 0 && q == 0 {
        let [eps, de, d2e] = filter3(&base, &ladder[0], &ladder[1], w);
        return Derivs {
            eps,
            de: vec![de],
            d2e: vec![d2e],
        };
    }
    let z0 = filter(&base, w);
    let z1 = filter(&ladder[0], w);
    let z2 = filter(&ladder[1], w);
    let psi = &params.psi;
    let solve = |forcing: Vec<f64>| -> Vec<f64> {
        let mut f = forcing;
        ma_invert(psi, &mut f);
        f
    };
    let eps = solve(ar_apply(&params.phi, &z0));
    let mut de: Vec<Vec<f64>> = Vec::with_capacity(m);
    de.push(solve(ar_apply(&params.phi, &z1)));
    for i in 1..=p {
        de.push(solve(shifted_neg(&z0, i)));
    }
    for j in 1..=q {
        de.push(solve(shifted_neg(&eps, j)));
    }
    let mut d2e: Vec<Vec<f64>> = Vec::new();
    if second {
        d2e.reserve(m * (m + 1) / 2);
        // (d, d)
        d2e.push(solve(ar_apply(&params.phi, &z2)));
        // (d, phi_i)
        for i in 1..=p {
            d2e.push(solve(shifted_neg(&z1, i)));
        }
        // (d, psi_j)
        for j in 1..=q {
            d2e.push(solve(shifted_neg(&de[0], j)));
        }
        // (phi_i, phi_l): zero forcing
        for i in 1..=p {
            for _l in i..=p {
                d2e.push(vec![0.0; n]);
            }
            // (phi_i, psi_j)
            for j in 1..=q {
                d2e.push(solve(shifted_neg(&de[i], j)));
            }
        }
        // (psi_j, psi_l)
        for j in 1..=q {
            for l in j..=q {
                let mut f = vec![0.0; n];
                for t in 0..n {
                    let mut v = 0.0;
                    if t >= j {
                        v -= de[p + l][t - j];
                    }
                    if t >= l {
                        v -= de[p + j][t - l];
                    }
                    f[t] = v;
                }
                d2e.push(solve(f));
            }
        }
        debug_assert_eq!(d2e.len(), m * (m + 1) / 2);
    }
    Derivs { eps, de, d2e }
}

/// out_t = z_t - sum_i phi_i z_{t-i}, zero presample.
fn ar_apply(phi: &[f64], z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut out = z.to_vec();
    for (i, &ph) in phi.iter().enumerate() {
        let lag = i + 1;
        for t in lag..n {
            out[t] -= ph * z[t - lag];
        }
    }
    out
}

/// Solve psi(B) out = f in place: out_t = f_t - sum_j psi_j out_{t-j}.
fn ma_invert(psi: &[f64], f: &mut [f64]) {
    if psi.is_empty() {
        return;
    }
    for t in 0..f.len() {
        let mut v = f[t];
        for (j, &ps) in psi.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                v -= ps * f[t - lag];
            }
        }
        f[t] = v;
    }
}

/// out_t = -v_{t-s}, zero presample.
fn shifted_neg(v: &[f64], s: usize) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for t in s..n {
        out[t] = -v[t - s];
    }
    out
}
