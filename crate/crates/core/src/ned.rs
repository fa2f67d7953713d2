//! Empirical lab for forward/backward partial-sum behavior of dependent
//! mean-zero sequences: almost-sure decay of normalized sums, the
//! one-direction Gaussian-max limit for martingale-difference scores, and a
//! time-reversibility diagnostic.
//!
//! Direction convention: forward sums run from the sequence start,
//! S_k = X_1 + .. + X_k; backward sums run from the end inward,
//! S_k = X_n + .. + X_{n-k+1}. For processes that are not time-reversible
//! the two families differ pointwise and in higher-order joint moments, yet
//! both obey the same decay and max limits; that is what this module checks.

use crate::error::{CpError, Result};
use crate::farima::{score_panel, FarimaParams, SimSpec};
use crate::kahan::Kahan;
use crate::norm::{norm_constants, one_direction_limit_cdf};
use crate::rng::{stream_rng, Innovations};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const WARMUP: usize = 1000;
pub const GRID_RATIO: f64 = 1.25;
pub const GRID_FLOOR: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NedGenerator {
    /// X_t = y_{t-1}^2 - E y^2 for an AR(1) level process y.
    Ar1SquaredCentered { phi: f64 },
    /// X_t = y_t for the AR(1) level process itself.
    Ar1Level { phi: f64 },
    /// X_t = e_t y_{t-1}, the AR(1) least-squares score at the true
    /// parameter (martingale differences).
    Ar1Score { phi: f64 },
    /// X_t = D_t at the true d of a FARIMA(0, d, 0) sample (martingale
    /// differences up to truncation); a warm prefix is dropped so every
    /// used score has deep history.
    FarimaScore { d: f64 },
    /// X_t = sum_j w_j e_{t-j}, a finite linear filter of the innovations.
    Filtered { weights: Vec<f64> },
}

impl NedGenerator {
    pub fn validate(&self) -> Result<()> {
        match self {
            NedGenerator::Ar1SquaredCentered { phi }
            | NedGenerator::Ar1Level { phi }
            | NedGenerator::Ar1Score { phi } => {
                if !(phi.abs() < 1.0) {
                    return Err(CpError::domain("AR(1) coefficient must satisfy |phi| < 1"));
                }
            }
            NedGenerator::FarimaScore { d } => {
                if !(*d > 0.0 && *d < 0.5) {
                    return Err(CpError::domain("FARIMA score generator needs d in (0, 0.5)"));
                }
            }
            NedGenerator::Filtered { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
                    return Err(CpError::domain("filter weights must be nonempty and finite"));
                }
            }
        }
        Ok(())
    }

    /// Martingale-difference score families admissible for the max check.
    pub fn is_mds_score(&self) -> bool {
        matches!(
            self,
            NedGenerator::Ar1Score { .. } | NedGenerator::FarimaScore { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NedSequenceSpec {
    pub generator: NedGenerator,
    pub innovations: Innovations,
}

impl NedSequenceSpec {
    pub fn new(generator: NedGenerator) -> Self {
        NedSequenceSpec {
            generator,
            innovations: Innovations::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// One realization of X_1..X_n.
pub fn generate(spec: &NedSequenceSpec, n: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
    spec.generator.validate()?;
    spec.innovations.validate()?;
    if n == 0 {
        return Err(CpError::domain("sequence length must be >= 1"));
    }
    let mut rng = stream_rng(seed, stream);
    match &spec.generator {
        NedGenerator::Ar1SquaredCentered { phi } => {
            let y = ar1_path(*phi, n + 1, WARMUP, spec.innovations, &mut rng);
            let ey2 = 1.0 / (1.0 - phi * phi);
            Ok((0..n).map(|t| y[t] * y[t] - ey2).collect())
        }
        NedGenerator::Ar1Level { phi } => {
            let y = ar1_path(*phi, n, WARMUP, spec.innovations, &mut rng);
            Ok(y)
        }
        NedGenerator::Ar1Score { phi } => {
            // regenerate e alongside y: X_t = e_t * y_{t-1}
            let total = WARMUP + n;
            let mut e = vec![0.0; total];
            spec.innovations.fill(&mut rng, &mut e);
            let mut y_prev = 0.0;
            let mut x = Vec::with_capacity(n);
            for (t, &et) in e.iter().enumerate() {
                if t >= WARMUP {
                    x.push(et * y_prev);
                }
                y_prev = phi * y_prev + et;
            }
            Ok(x)
        }
        NedGenerator::FarimaScore { d } => {
            let params = FarimaParams::new(*d, vec![], vec![])?;
            let mut sim = SimSpec::new(params.clone(), WARMUP + n, seed);
            sim.stream = stream;
            sim.innovations = spec.innovations;
            let y = crate::farima::simulate_farima(&sim)?;
            let panel = score_panel(&params, &y, (0, WARMUP + n))?;
            Ok((WARMUP..WARMUP + n).map(|t| panel.d_t(t)[0]).collect())
        }
        NedGenerator::Filtered { weights } => {
            let warm = weights.len();
            let mut e = vec![0.0; warm + n];
            spec.innovations.fill(&mut rng, &mut e);
            let x = crate::convolve::filter(weights, &e);
            Ok(x[warm..].to_vec())
        }
    }
}

fn ar1_path(
    phi: f64,
    n: usize,
    burn: usize,
    innovations: Innovations,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Vec<f64> {
    let mut y = Vec::with_capacity(n);
    let mut cur = 0.0;
    for t in 0..burn + n {
        cur = phi * cur + innovations.draw(rng);
        if t >= burn {
            y.push(cur);
        }
    }
    y
}

/// Geometric k-grid: floor max(ceil(log n), GRID_FLOOR), ratio 1.25, capped
/// at n.
pub fn k_grid(n: usize) -> Vec<usize> {
    let g_n = (n as f64).ln().ceil() as usize;
    let floor = g_n.max(GRID_FLOOR).min(n);
    let mut grid = vec![floor];
    loop {
        let last = *grid.last().unwrap();
        let next = ((last as f64) * GRID_RATIO).ceil() as usize;
        if next > n {
            break;
        }
        grid.push(next.max(last + 1));
        if *grid.last().unwrap() >= n {
            break;
        }
    }
    grid.dedup();
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTable {
    pub direction: Direction,
    pub n: usize,
    pub grid: Vec<usize>,
    /// S_k / k at each grid point.
    pub s_over_k: Vec<f64>,
    /// max_{j in (k_{i-1}, k_i]} |S_j / j| (first segment starts at the
    /// grid floor).
    pub seg_max: Vec<f64>,
    pub x_mean: f64,
    pub x_sd: f64,
}

/// Normalized partial-sum paths of one realization in the given direction.
pub fn sum_paths(
    spec: &NedSequenceSpec,
    n: usize,
    direction: Direction,
    seed: u64,
) -> Result<PathTable> {
    if n < 1000 {
        return Err(CpError::domain("sum_paths requires n >= 1000"));
    }
    let x = generate(spec, n, seed, 0)?;
    Ok(paths_from(&x, direction))
}

/// Paths from an already generated sequence.
pub fn paths_from(x: &[f64], direction: Direction) -> PathTable {
    let n = x.len();
    let grid = k_grid(n);
    let mut s = Kahan::new();
    let mut s_over_k = Vec::with_capacity(grid.len());
    let mut seg_max = Vec::with_capacity(grid.len());
    let mut gi = 0usize;
    let mut cur_max = 0.0f64;
    for j in 1..=n {
        let idx = match direction {
            Direction::Forward => j - 1,
            Direction::Backward => n - j,
        };
        s.add(x[idx]);
        if gi >= grid.len() {
            break;
        }
        if j >= segment_start(&grid, gi) {
            cur_max = cur_max.max((s.value() / j as f64).abs());
        }
        if j == grid[gi] {
            s_over_k.push(s.value() / j as f64);
            seg_max.push(cur_max);
            cur_max = 0.0;
            gi += 1;
        }
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    PathTable {
        direction,
        n,
        grid,
        s_over_k,
        seg_max,
        x_mean: mean,
        x_sd: sd,
    }
}

fn segment_start(grid: &[usize], gi: usize) -> usize {
    if gi == 0 {
        grid[0]
    } else {
        grid[gi - 1] + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub delta_hat: f64,
    pub std_error: f64,
    pub points: usize,
}

/// Least-squares slope of log segment-max against log k over grid points
/// >= k_min; the decay exponent estimate is minus the slope. A path whose
/// segment maxima are all zero returns the +infinity sentinel.
pub fn rate_fit(paths: &PathTable, k_min: usize) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = paths
        .grid
        .iter()
        .zip(&paths.seg_max)
        .filter(|(k, m)| **k >= k_min && **m > 0.0)
        .map(|(k, m)| ((*k as f64).ln(), m.ln()))
        .collect();
    if pts.is_empty() {
        let all_zero = paths
            .grid
            .iter()
            .zip(&paths.seg_max)
            .filter(|(k, _)| **k >= k_min)
            .all(|(_, m)| *m == 0.0);
        if all_zero && paths.grid.iter().any(|k| *k >= k_min) {
            return Ok(RateFit {
                delta_hat: f64::INFINITY,
                std_error: 0.0,
                points: 0,
            });
        }
    }
    if pts.len() < 20 {
        return Err(CpError::domain(format!(
            "insufficient grid: {} usable points >= k_min={k_min}, need 20",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let mx = sx / n;
    let my = sy / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    Ok(RateFit {
        delta_hat: -slope,
        std_error: se,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionKs {
    pub direction: Direction,
    pub ks_distance: f64,
    /// Normalized max statistics, sorted.
    pub sample: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMaxReport {
    pub n: usize,
    pub reps: usize,
    pub mu: f64,
    pub forward: DirectionKs,
    pub backward: DirectionKs,
}

/// Distribution check of the normalized maximum of studentized partial sums
/// of a martingale-difference score sequence against the one-direction law
/// exp(-e^{-x/2}), run forward and backward on the same realizations.
///
/// The window max_{ceil(log n) <= k <= mu*n} S_k^2/(k Omega_hat) is
/// normalized by (a_n(1), b_n(1)). The default mu = 0.9 is a calibration
/// artifact: smaller windows push the finite-sample distribution well left
/// of the limit because the iterated-log horizon is short.
pub fn gaussian_max_check(
    spec: &NedSequenceSpec,
    n: usize,
    reps: usize,
    mu: f64,
    seed: u64,
) -> Result<GaussianMaxReport> {
    if !spec.generator.is_mds_score() {
        return Err(CpError::domain(
            "gaussian_max_check requires a martingale-difference score generator",
        ));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(CpError::domain("mu must lie in (0, 1)"));
    }
    if reps == 0 {
        return Err(CpError::domain("reps must be >= 1"));
    }
    let k_lo = (n as f64).ln().ceil() as usize;
    let k_hi = (mu * n as f64).floor() as usize;
    if k_lo >= k_hi {
        return Err(CpError::domain(format!(
            "empty max range: ceil(log n)={k_lo} >= floor(mu n)={k_hi}"
        )));
    }
    let nc = norm_constants(n, 1)?;
    let pairs: Result<Vec<(f64, f64)>> = (0..reps as u64)
        .into_par_iter()
        .map(|stream| {
            let x = generate(spec, n, seed, stream)?;
            let omega = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
            if !(omega > 0.0) {
                return Err(CpError::domain("degenerate second moment"));
            }
            let mf = max_stat(&x, k_lo, k_hi, omega, Direction::Forward);
            let mb = max_stat(&x, k_lo, k_hi, omega, Direction::Backward);
            Ok((
                (mf - nc.b_n) / nc.a_n,
                (mb - nc.b_n) / nc.a_n,
            ))
        })
        .collect();
    let pairs = pairs?;
    let mut fwd: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut bwd: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    fwd.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bwd.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks_f = crate::mc::ks_distance(&fwd, one_direction_limit_cdf);
    let ks_b = crate::mc::ks_distance(&bwd, one_direction_limit_cdf);
    Ok(GaussianMaxReport {
        n,
        reps,
        mu,
        forward: DirectionKs {
            direction: Direction::Forward,
            ks_distance: ks_f,
            sample: fwd,
        },
        backward: DirectionKs {
            direction: Direction::Backward,
            ks_distance: ks_b,
            sample: bwd,
        },
    })
}

fn max_stat(x: &[f64], k_lo: usize, k_hi: usize, omega: f64, direction: Direction) -> f64 {
    let n = x.len();
    let mut s = Kahan::new();
    let mut best = f64::NEG_INFINITY;
    for j in 1..=k_hi {
        let idx = match direction {
            Direction::Forward => j - 1,
            Direction::Backward => n - j,
        };
        s.add(x[idx]);
        if j >= k_lo {
            let v = s.value();
            best = best.max(v * v / (j as f64 * omega));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityReport {
    pub n: usize,
    /// mean of X_t^2 X_{t+1}
    pub m21: f64,
    /// mean of X_t X_{t+1}^2
    pub m12: f64,
    pub diff: f64,
    /// batch-mean standard error of the difference
    pub std_error: f64,
    pub z: f64,
}

/// Third-order asymmetry diagnostic: for a time-reversible process
/// E[X_t^2 X_{t+1}] = E[X_t X_{t+1}^2]; a significant difference certifies
/// irreversibility. Standard error by batch means.
pub fn reversibility_diagnostic(
    spec: &NedSequenceSpec,
    n: usize,
    seed: u64,
) -> Result<ReversibilityReport> {
    if n < 1000 {
        return Err(CpError::domain("reversibility diagnostic requires n >= 1000"));
    }
    let x = generate(spec, n, seed, 0)?;
    let pairs = n - 1;
    let diffs: Vec<f64> = (0..pairs)
        .map(|t| x[t] * x[t] * x[t + 1] - x[t] * x[t + 1] * x[t + 1])
        .collect();
    let m21 = (0..pairs).map(|t| x[t] * x[t] * x[t + 1]).sum::<f64>() / pairs as f64;
    let m12 = (0..pairs).map(|t| x[t] * x[t + 1] * x[t + 1]).sum::<f64>() / pairs as f64;
    let nb = (pairs as f64).sqrt().floor() as usize;
    let bs = pairs / nb;
    let means: Vec<f64> = (0..nb)
        .map(|b| diffs[b * bs..(b + 1) * bs].iter().sum::<f64>() / bs as f64)
        .collect();
    let gm = means.iter().sum::<f64>() / nb as f64;
    let var = means.iter().map(|v| (v - gm) * (v - gm)).sum::<f64>() / (nb as f64 - 1.0);
    let se = (var / nb as f64).sqrt();
    let diff = m21 - m12;
    Ok(ReversibilityReport {
        n,
        m21,
        m12,
        diff,
        std_error: se,
        z: if se > 0.0 { diff / se } else { f64::NAN },
    })
}
