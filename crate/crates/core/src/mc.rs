//! Monte Carlo harness: size and power of the normalized sup-Wald scan for
//! FARIMA(0, d, 0), and the null-distribution sample used by the limit-law
//! check.
//!
//! Replications are independent RNG streams of a single seeded generator, so
//! any worker count produces the same report. A replication whose scan fails
//! structurally (degenerate information across the whole grid) is logged and
//! redrawn from a reserve stream; reserve streams start at index `reps` and
//! are consumed in deterministic order.

use crate::error::{CpError, Result};
use crate::farima::{simulate_with_innovations, FarimaParams, ParamSpace, SeriesBuffer, SimSpec};
use crate::model::ModelSpec;
use crate::norm::critical_value;
use crate::rng::{stream_rng, Innovations};
use crate::scan::{scan_with, RightPiece, ScanOptions};
use crate::{model::farima_model, simulate_farima};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the post-break segment is generated under the alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AltMode {
    /// Post-break process restarts from zero presample at the break; the
    /// innovation stream continues uninterrupted.
    Restart,
    /// The new parameter's filter is applied to the full innovation history
    /// (default). For a pure fractional model this makes the post-break
    /// block an exact stationary draw under the new parameter, which is the
    /// construction the one-break hypothesis describes.
    FilterThrough,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McDesign {
    pub n: usize,
    pub reps: usize,
    pub null_d: f64,
    pub alt_d: Option<f64>,
    pub break_frac: Option<f64>,
    pub levels: Vec<f64>,
    pub seed: u64,
    pub innovations: Innovations,
    pub alt_mode: AltMode,
    /// Fit box for d.
    pub d_lower: f64,
    pub d_upper: f64,
    pub trim: Option<usize>,
    pub stride: usize,
    /// Attach the per-replication normalized statistics to the report.
    pub dump_w: bool,
}

impl McDesign {
    pub fn new(n: usize, reps: usize, null_d: f64, seed: u64) -> Self {
        McDesign {
            n,
            reps,
            null_d,
            alt_d: None,
            break_frac: None,
            levels: vec![0.10, 0.05, 0.01],
            seed,
            innovations: Innovations::Normal,
            alt_mode: AltMode::FilterThrough,
            d_lower: 0.001,
            d_upper: 0.499,
            trim: None,
            stride: 1,
            dump_w: false,
        }
    }

    pub fn with_alternative(mut self, alt_d: f64, break_frac: f64) -> Self {
        self.alt_d = Some(alt_d);
        self.break_frac = Some(break_frac);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(CpError::domain("reps must be >= 1"));
        }
        if !(self.null_d > 0.0 && self.null_d < 0.5) {
            return Err(CpError::domain("null d must lie in (0, 0.5)"));
        }
        if let Some(d1) = self.alt_d {
            if !(d1 > 0.0 && d1 < 0.5) {
                return Err(CpError::domain("alternative d must lie in (0, 0.5)"));
            }
        }
        if self.levels.is_empty() || self.levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(CpError::domain("levels must lie in (0, 1)"));
        }
        if !(self.d_lower > 0.0 && self.d_upper < 0.5 && self.d_lower < self.d_upper) {
            return Err(CpError::domain("fit box must satisfy 0 < lower < upper < 0.5"));
        }
        if let Some(tau) = self.break_frac {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(CpError::domain("break fraction must lie in (0, 1)"));
            }
            let k = (tau * self.n as f64).floor() as usize;
            let trim = self
                .trim
                .unwrap_or_else(|| crate::norm::default_trim(self.n, 1));
            if k <= trim || k + trim >= self.n {
                return Err(CpError::domain(format!(
                    "break index {k} falls outside the trimmed scan range"
                )));
            }
        }
        Ok(())
    }

    fn model(&self) -> Result<ModelSpec> {
        farima_model(
            ParamSpace::new(vec![self.d_lower], vec![self.d_upper])?,
            0,
            0,
        )
    }

    fn scan_opts(&self) -> ScanOptions {
        ScanOptions {
            trim: self.trim,
            stride: self.stride,
            right_piece: RightPiece::Backward,
            ..ScanOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n: usize,
    pub reps: usize,
    pub null_d: f64,
    pub alt_d: Option<f64>,
    pub break_frac: Option<f64>,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub rates: Vec<f64>,
    /// Binomial MC standard error sqrt(r(1-r)/reps) per level.
    pub std_errors: Vec<f64>,
    pub redraws: usize,
    pub w_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub n: usize,
    pub reps: usize,
    pub null_d: f64,
    pub seed: u64,
    pub w_sorted: Vec<f64>,
    /// Kolmogorov-Smirnov distance to the limit CDF exp(-2 e^{-x/2}).
    pub ks_distance: f64,
    pub redraws: usize,
}

/// Rejection rates under the null. Requires alt_d absent.
pub fn run_size(design: &McDesign) -> Result<McReport> {
    if design.alt_d.is_some() || design.break_frac.is_some() {
        return Err(CpError::domain("run_size requires a null design"));
    }
    let (w, redraws) = run_reps(design)?;
    Ok(make_report(design, w, redraws))
}

/// Rejection rates under a single-break alternative. Requires alt_d and
/// break_frac present.
pub fn run_power(design: &McDesign) -> Result<McReport> {
    if design.alt_d.is_none() || design.break_frac.is_none() {
        return Err(CpError::domain(
            "run_power requires alt_d and break_frac to be set",
        ));
    }
    let (w, redraws) = run_reps(design)?;
    Ok(make_report(design, w, redraws))
}

/// Sorted null sample of the normalized statistic plus its KS distance to
/// the limit law. Requires alt_d absent.
pub fn null_distribution(design: &McDesign) -> Result<NullDistribution> {
    if design.alt_d.is_some() {
        return Err(CpError::domain("null_distribution requires a null design"));
    }
    let (mut w, redraws) = run_reps(design)?;
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = ks_to_limit(&w);
    Ok(NullDistribution {
        n: design.n,
        reps: design.reps,
        null_d: design.null_d,
        seed: design.seed,
        w_sorted: w,
        ks_distance: ks,
        redraws,
    })
}

/// KS distance of a sorted sample to F(x) = exp(-2 e^{-x/2}).
pub fn ks_to_limit(w_sorted: &[f64]) -> f64 {
    ks_distance(w_sorted, |x| (-2.0 * (-0.5 * x).exp()).exp())
}

/// KS distance of a sorted sample to an arbitrary CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

fn make_report(design: &McDesign, w: Vec<f64>, redraws: usize) -> McReport {
    let reps = design.reps as f64;
    let mut rates = Vec::with_capacity(design.levels.len());
    let mut ses = Vec::with_capacity(design.levels.len());
    for &alpha in &design.levels {
        let crit = critical_value(alpha).expect("levels validated");
        let r = w.iter().filter(|v| **v > crit).count() as f64 / reps;
        rates.push(r);
        ses.push((r * (1.0 - r) / reps).sqrt());
    }
    McReport {
        n: design.n,
        reps: design.reps,
        null_d: design.null_d,
        alt_d: design.alt_d,
        break_frac: design.break_frac,
        seed: design.seed,
        levels: design.levels.clone(),
        rates,
        std_errors: ses,
        redraws,
        w_values: design.dump_w.then_some(w),
    }
}

/// All replications, in replication order; failed replications are redrawn
/// from reserve streams (logged).
fn run_reps(design: &McDesign) -> Result<(Vec<f64>, usize)> {
    design.validate()?;
    let model = design.model()?;
    let opts = design.scan_opts();
    let first: Vec<Result<f64>> = (0..design.reps as u64)
        .into_par_iter()
        .map(|stream| one_rep(design, &model, &opts, stream))
        .collect();
    let mut w = Vec::with_capacity(design.reps);
    let mut redraws = 0usize;
    for (rep, r) in first.into_iter().enumerate() {
        match r {
            Ok(v) => w.push(v),
            Err(err) => {
                log::warn!("replication {rep} failed ({err}); redrawing");
                let mut drawn = None;
                while drawn.is_none() {
                    if redraws >= 100 {
                        return Err(CpError::domain(format!(
                            "replication {rep}: redraw budget exhausted ({err})"
                        )));
                    }
                    let stream = design.reps as u64 + redraws as u64;
                    redraws += 1;
                    drawn = one_rep(design, &model, &opts, stream).ok();
                }
                w.push(drawn.unwrap());
            }
        }
    }
    Ok((w, redraws))
}

fn one_rep(design: &McDesign, model: &ModelSpec, opts: &ScanOptions, stream: u64) -> Result<f64> {
    let y = simulate_design(design, stream)?;
    let r = scan_with(model, &y, opts)?;
    Ok(r.w_hat)
}

/// Generate one replication's series: pure null, or single-break per the
/// design's alternative mode.
pub fn simulate_design(design: &McDesign, stream: u64) -> Result<SeriesBuffer> {
    let p0 = FarimaParams::new(design.null_d, vec![], vec![])?;
    let (Some(d1), Some(tau)) = (design.alt_d, design.break_frac) else {
        let mut spec = SimSpec::new(p0, design.n, design.seed);
        spec.stream = stream;
        spec.innovations = design.innovations;
        return simulate_farima(&spec);
    };
    design.innovations.validate()?;
    let p1 = FarimaParams::new(d1, vec![], vec![])?;
    let n = design.n;
    let k = (tau * n as f64).floor() as usize;
    let cut = n.max(10_000);
    let burn = cut;
    let total = cut + burn + n;
    let mut rng = stream_rng(design.seed, stream);
    let mut e = vec![0.0; total];
    design.innovations.fill(&mut rng, &mut e);

    // run the pre-break construction over the full stream and truncate: the
    // filters are causal so this equals a shorter run exactly, and reusing
    // the full-length call keeps the prefix bit-identical to the null sim
    // (block convolution rounds differently at different lengths)
    let left = simulate_with_innovations(&p0, &e, cut, cut + burn)?;
    let right = match design.alt_mode {
        // new regime restarted at the break with zero presample, continuing
        // the same innovation stream
        AltMode::Restart => simulate_with_innovations(&p1, &e[cut + burn + k..], cut, 0)?,
        // new regime driven by the full innovation history
        AltMode::FilterThrough => simulate_with_innovations(&p1, &e, cut, cut + burn + k)?,
    };
    let mut v = left.values;
    v.truncate(k);
    v.extend_from_slice(&right.values);
    let buf = SeriesBuffer::new(v)?;
    Ok(buf.with_provenance(format!(
        "sim-break:d0={};d1={};tau={tau};n={n};seed={};stream={stream}",
        design.null_d, d1, design.seed
    )))
}
