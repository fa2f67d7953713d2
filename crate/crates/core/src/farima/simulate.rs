//! FARIMA simulation via the truncated MA(infinity) representation of the
//! fractional integrator followed by the ARMA recursion.

use super::coeffs::inverse_frac_coeffs;
use super::{FarimaParams, SeriesBuffer};
use crate::convolve::filter;
use crate::error::{CpError, Result};
use crate::rng::{stream_rng, Innovations};

/// Simulation request. `cut` is the MA(infinity) truncation length (default
/// max(n, 10^4)); `burn` is an additional warm block for the ARMA recursion
/// (default equal to cut, so 2*cut draws are discarded in total).
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub params: FarimaParams,
    pub n: usize,
    pub innovations: Innovations,
    pub seed: u64,
    pub stream: u64,
    pub cut: Option<usize>,
    pub burn: Option<usize>,
}

impl SimSpec {
    pub fn new(params: FarimaParams, n: usize, seed: u64) -> Self {
        SimSpec {
            params,
            n,
            innovations: Innovations::Normal,
            seed,
            stream: 0,
            cut: None,
            burn: None,
        }
    }
}

/// Draw innovations and run the truncated construction. Deterministic in
/// (seed, stream).
pub fn simulate_farima(spec: &SimSpec) -> Result<SeriesBuffer> {
    spec.params.validate()?;
    spec.innovations.validate()?;
    if spec.n == 0 {
        return Err(CpError::domain("simulation length must be >= 1"));
    }
    let cut = spec.cut.unwrap_or_else(|| spec.n.max(10_000));
    let burn = spec.burn.unwrap_or(cut);
    let total = cut + burn + spec.n;
    let mut rng = stream_rng(spec.seed, spec.stream);
    let mut e = vec![0.0; total];
    spec.innovations.fill(&mut rng, &mut e);
    let buf = build(&spec.params, &e, cut, cut + burn)?;
    Ok(buf.with_provenance(format!(
        "sim:d={};p={};q={};n={};seed={};stream={}",
        spec.params.d,
        spec.params.phi.len(),
        spec.params.psi.len(),
        spec.n,
        spec.seed,
        spec.stream
    )))
}

/// Run the construction on a caller-supplied innovation stream: the
/// fractional filter truncated at `cut` lags, ARMA recursion with zero
/// presample at the stream origin, first `drop` values discarded.
pub fn simulate_with_innovations(
    params: &FarimaParams,
    e: &[f64],
    cut: usize,
    drop: usize,
) -> Result<SeriesBuffer> {
    params.validate()?;
    if e.is_empty() || drop >= e.len() {
        return Err(CpError::domain(
            "innovation stream must be longer than the dropped prefix",
        ));
    }
    build(params, e, cut, drop)
}

fn build(params: &FarimaParams, e: &[f64], cut: usize, drop: usize) -> Result<SeriesBuffer> {
    let m = inverse_frac_coeffs(params.d, cut)?;
    let u = filter(&m.weights, e);
    let y = if params.phi.is_empty() && params.psi.is_empty() {
        u
    } else {
        arma_recursion(&params.phi, &params.psi, &u)
    };
    SeriesBuffer::new(y[drop..].to_vec())
}

/// y_t = sum_i phi_i y_{t-i} + u_t + sum_j psi_j u_{t-j}, zero presample.
fn arma_recursion(phi: &[f64], psi: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut y = vec![0.0; n];
    for t in 0..n {
        let mut v = u[t];
        for (j, &ps) in psi.iter().enumerate() {
            if t > j {
                v += ps * u[t - j - 1];
            }
        }
        for (i, &ph) in phi.iter().enumerate() {
            if t > i {
                v += ph * y[t - i - 1];
            }
        }
        y[t] = v;
    }
    y
}
