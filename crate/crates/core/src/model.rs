//! Model abstraction the change-point scan is generic over: a parameter box
//! plus per-window evaluators for the objective sum, score sum, Hessian-term
//! sum and score outer-product sum.
//!
//! Two instantiations: FARIMA(p, d, q) under the Gaussian-shaped
//! quasi-likelihood l_t = -eps_t^2/2, and AR(p) under least squares with
//! exact (presample-zero) residuals.

use crate::error::{CpError, Result};
use crate::farima::{self, FarimaParams, ParamSpace, ScorePanel, SeriesBuffer};
use crate::kahan::Kahan;

pub use crate::farima::{Eval, EvalMode};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    Farima { p: usize, q: usize },
    Ar { p: usize },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub space: ParamSpace,
}

/// FARIMA(p, d, q) quasi-likelihood model. Coordinate order (d, phi, psi);
/// the box must keep d strictly inside (0, 0.5). Root admissibility of ARMA
/// coordinates is not enforced pointwise during optimization: the objective
/// penalizes explosive configurations on its own, and default boxes stay
/// inside safe ranges.
pub fn farima_model(space: ParamSpace, p: usize, q: usize) -> Result<ModelSpec> {
    if space.dim() != 1 + p + q {
        return Err(CpError::domain(format!(
            "parameter box has dimension {}, model needs {}",
            space.dim(),
            1 + p + q
        )));
    }
    if !(space.lower[0] > 0.0 && space.upper[0] < 0.5) {
        return Err(CpError::domain(
            "d-bounds must lie strictly inside (0, 0.5)",
        ));
    }
    Ok(ModelSpec {
        kind: ModelKind::Farima { p, q },
        space,
    })
}

/// AR(p) least-squares model, objective -[y_t - sum phi_i y_{t-i}]^2 / 2 with
/// zero presample. For p = 1 the box must stay inside |phi| <= 1 - 1e-3.
pub fn ar_model(p: usize, space: ParamSpace) -> Result<ModelSpec> {
    if p == 0 {
        return Err(CpError::domain("AR order must be >= 1"));
    }
    if space.dim() != p {
        return Err(CpError::domain(format!(
            "parameter box has dimension {}, AR({p}) needs {p}",
            space.dim()
        )));
    }
    if p == 1 {
        let lim = 1.0 - 1e-3;
        if space.lower[0] < -lim || space.upper[0] > lim {
            return Err(CpError::domain(
                "AR(1) box must lie inside |phi| <= 1 - 1e-3",
            ));
        }
    }
    Ok(ModelSpec {
        kind: ModelKind::Ar { p },
        space,
    })
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Minimum window length a fit will accept.
    pub fn min_window(&self) -> usize {
        (3 * self.dim()).max(8)
    }

    /// Aggregate evaluation on a window (fresh presample at the window
    /// start). `lambda` must have the model dimension and lie in the box.
    pub fn eval(&self, w: &[f64], lambda: &[f64], mode: EvalMode) -> Eval {
        debug_assert_eq!(lambda.len(), self.dim());
        match self.kind {
            ModelKind::Farima { p, q } => {
                let params = FarimaParams::from_slice(lambda, p, q);
                farima::residuals::eval_window(&params, w, mode)
            }
            ModelKind::Ar { p } => ar_eval(p, w, lambda, mode),
        }
    }

    /// Per-t panel on a series range (inspection / diagnostics path).
    pub fn panel(
        &self,
        series: &SeriesBuffer,
        range: (usize, usize),
        lambda: &[f64],
    ) -> Result<ScorePanel> {
        match self.kind {
            ModelKind::Farima { p, q } => {
                let params = FarimaParams::from_slice(lambda, p, q);
                farima::score_panel(&params, series, range)
            }
            ModelKind::Ar { p } => {
                let (a, b) = range;
                if a >= b || b > series.n() {
                    return Err(CpError::domain("panel range invalid"));
                }
                Ok(ar_panel(p, &series.values[a..b], lambda, range))
            }
        }
    }
}

fn ar_residuals(p: usize, w: &[f64], phi: &[f64]) -> Vec<f64> {
    let n = w.len();
    let mut eps = w.to_vec();
    for i in 0..p {
        let ph = phi[i];
        for t in (i + 1)..n {
            eps[t] -= ph * w[t - i - 1];
        }
    }
    eps
}

fn ar_eval(p: usize, w: &[f64], phi: &[f64], mode: EvalMode) -> Eval {
    let n = w.len();
    let eps = ar_residuals(p, w, phi);
    let mut obj = Kahan::new();
    for &e in &eps {
        obj.add(-0.5 * e * e);
    }
    if mode == EvalMode::Objective {
        return Eval {
            obj: obj.value(),
            grad: Vec::new(),
            psum: Vec::new(),
            omega: Vec::new(),
            len: n,
        };
    }
    // d eps_t / d phi_i = -y_{t-i}; second derivatives vanish
    let mut g = vec![Kahan::new(); p];
    let mut ps = vec![Kahan::new(); p * p];
    let mut om = vec![Kahan::new(); p * p];
    for t in 0..n {
        let e = eps[t];
        for a in 0..p {
            let ya = if t > a { w[t - a - 1] } else { 0.0 };
            g[a].add(ya * e);
            for b in a..p {
                let yb = if t > b { w[t - b - 1] } else { 0.0 };
                let pv = ya * yb;
                let ov = (ya * e) * (yb * e);
                ps[a * p + b].add(pv);
                om[a * p + b].add(ov);
                if b != a {
                    ps[b * p + a].add(pv);
                    om[b * p + a].add(ov);
                }
            }
        }
    }
    Eval {
        obj: obj.value(),
        grad: g.iter().map(|k| k.value()).collect(),
        psum: ps.iter().map(|k| k.value()).collect(),
        omega: om.iter().map(|k| k.value()).collect(),
        len: n,
    }
}

fn ar_panel(p: usize, w: &[f64], phi: &[f64], range: (usize, usize)) -> ScorePanel {
    let n = w.len();
    let eps = ar_residuals(p, w, phi);
    let mut grad = vec![0.0; n * p];
    let hess = vec![0.0; n * p * p];
    for t in 0..n {
        for a in 0..p {
            grad[t * p + a] = if t > a { -w[t - a - 1] } else { 0.0 };
        }
    }
    ScorePanel {
        range,
        m: p,
        eps,
        grad,
        hess,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_space(p: usize) -> ParamSpace {
        ParamSpace::new(vec![-0.95; p], vec![0.95; p]).unwrap()
    }

    fn farima_space(p: usize, q: usize) -> ParamSpace {
        let mut lo = vec![0.001];
        let mut hi = vec![0.499];
        lo.extend(vec![-0.9; p + q]);
        hi.extend(vec![0.9; p + q]);
        ParamSpace::new(lo, hi).unwrap()
    }

    #[test]
    fn construction_guards() {
        assert!(farima_model(farima_space(1, 0), 1, 0).is_ok());
        assert!(farima_model(farima_space(1, 0), 0, 0).is_err());
        assert!(ar_model(0, unit_space(1)).is_err());
        assert!(ar_model(1, unit_space(1)).is_ok());
        assert!(ar_model(1, ParamSpace::new(vec![-1.5], vec![0.5]).unwrap()).is_err());
        assert!(ar_model(2, unit_space(1)).is_err());
    }

    #[test]
    fn objective_zero_residual_is_zero() {
        // AR(1) with phi = 0 on the zero series: l_t = 0
        let m = ar_model(1, unit_space(1)).unwrap();
        let e = m.eval(&[0.0; 20], &[0.0], EvalMode::Full);
        assert_eq!(e.obj, 0.0);
        assert_eq!(e.grad[0], 0.0);
    }

    #[test]
    fn ar_phi_zero_residuals_are_series() {
        let m = ar_model(1, unit_space(1)).unwrap();
        let y = SeriesBuffer::new(vec![1.0, -2.0, 3.0]).unwrap();
        let panel = m.panel(&y, (0, 3), &[0.0]).unwrap();
        assert_eq!(panel.eps, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn ar_score_gradient_consistency() {
        // finite-difference check of sum D_t = gradient of sum l_t
        let m = ar_model(2, unit_space(2)).unwrap();
        let mut rng = crate::rng::stream_rng(4, 0);
        let w: Vec<f64> = (0..60)
            .map(|_| crate::rng::Innovations::Normal.draw(&mut rng))
            .collect();
        let lam = [0.4, -0.2];
        let e = m.eval(&w, &lam, EvalMode::Full);
        let h = 1e-6;
        for c in 0..2 {
            let mut lp = lam;
            let mut lm = lam;
            lp[c] += h;
            lm[c] -= h;
            let fp = m.eval(&w, &lp, EvalMode::Objective).obj;
            let fm = m.eval(&w, &lm, EvalMode::Objective).obj;
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (fd - e.grad[c]).abs() <= 1e-5 * e.grad[c].abs().max(1.0),
                "coord {c}: {fd} vs {}",
                e.grad[c]
            );
        }
    }

    #[test]
    fn ar1_score_mean_zero_and_ptilde_mean() {
        // AR(1), phi = 0.5, unit innovations: E P_t = E y^2 = 4/3
        let phi = 0.5;
        let n = 60_000;
        let mut rng = crate::rng::stream_rng(12, 0);
        let mut y = vec![0.0; n + 200];
        for t in 1..y.len() {
            y[t] = phi * y[t - 1] + crate::rng::Innovations::Normal.draw(&mut rng);
        }
        let w = &y[200..];
        let m = ar_model(1, unit_space(1)).unwrap();
        let e = m.eval(w, &[phi], EvalMode::Full);
        let mean_score = e.grad[0] / n as f64;
        let mean_p = e.psum[0] / n as f64;
        // SE of the score mean: sqrt(E[y^2 eps^2]/n) = sqrt((4/3)/n)
        let se_score = (4.0 / 3.0f64 / n as f64).sqrt();
        assert!(mean_score.abs() <= 3.0 * se_score, "score mean {mean_score}");
        // SE of mean P: sd(y^2)/sqrt(n), sd = sqrt(2)*4/3 for gaussian AR(1)
        let se_p = (2.0f64).sqrt() * (4.0 / 3.0) / (n as f64).sqrt();
        assert!(
            (mean_p - 4.0 / 3.0).abs() <= 3.0 * se_p,
            "mean P {mean_p} vs 4/3"
        );
    }

    #[test]
    fn farima_ptilde_mean_matches_pi2_over_6() {
        // FARIMA(0, d, 0) at the truth: E (d eps / d d)^2 = sum 1/i^2
        let d = 0.25;
        let p = FarimaParams::new(d, vec![], vec![]).unwrap();
        let mut spec = crate::farima::SimSpec::new(p, 40_000, 31);
        spec.stream = 2;
        let y = crate::farima::simulate_farima(&spec).unwrap();
        let m = farima_model(farima_space(0, 0), 0, 0).unwrap();
        let e = m.eval(&y.values, &[d], EvalMode::Full);
        let n = y.n() as f64;
        let mean_p = e.psum[0] / n;
        let target = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        // the truncated filter depresses early terms; tolerance is 3 MC SEs
        // of the P_t average plus a small truncation allowance
        let se = 3.0 * 2.3 / n.sqrt() + 0.02;
        assert!((mean_p - target).abs() <= se, "{mean_p} vs {target}");
    }

    #[test]
    fn farima_eval_dispatches_to_fused_path() {
        let m = farima_model(farima_space(0, 0), 0, 0).unwrap();
        let mut rng = crate::rng::stream_rng(9, 0);
        let w: Vec<f64> = (0..120)
            .map(|_| crate::rng::Innovations::Normal.draw(&mut rng))
            .collect();
        let e = m.eval(&w, &[0.3], EvalMode::Full);
        let o = m.eval(&w, &[0.3], EvalMode::Objective);
        assert!((e.obj - o.obj).abs() < 1e-12);
        assert_eq!(e.grad.len(), 1);
    }
}
