//! Long-memory FARIMA(p, d, q) kernel: fractional-difference filters,
//! simulation, truncated residual and derivative recursions.
//!
//! Model convention: phi(B) (1-B)^d y_t = psi(B) eps_t with
//! phi(B) = 1 - phi_1 B - ... - phi_p B^p and
//! psi(B) = 1 + psi_1 B + ... + psi_q B^q,
//! d in (0, 0.5), both polynomials with all roots strictly outside the closed
//! unit disk, no common roots. Observed-data filters set every presample
//! value (y and eps alike) to zero.

mod coeffs;
pub(crate) mod residuals;
mod simulate;

pub use coeffs::{frac_diff_coeffs, inverse_frac_coeffs, log_deriv_coeffs, FilterCoeffs, FilterKind};
pub use residuals::{residuals, score_panel, Eval, EvalMode, ScorePanel};
pub use simulate::{simulate_farima, simulate_with_innovations, SimSpec};

use crate::error::{CpError, Result};
use nalgebra::{Complex, DMatrix};

/// Parameter vector lambda = (d, phi_1..phi_p, psi_1..psi_q).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FarimaParams {
    pub d: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl FarimaParams {
    pub fn new(d: f64, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        let p = FarimaParams { d, phi, psi };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        1 + self.phi.len() + self.psi.len()
    }

    pub fn from_slice(lambda: &[f64], p: usize, q: usize) -> Self {
        assert_eq!(lambda.len(), 1 + p + q);
        FarimaParams {
            d: lambda[0],
            phi: lambda[1..1 + p].to_vec(),
            psi: lambda[1 + p..].to_vec(),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.d);
        v.extend_from_slice(&self.phi);
        v.extend_from_slice(&self.psi);
        v
    }

    /// Admissibility: d strictly inside (0, 0.5); AR and MA polynomials with
    /// all roots outside the closed unit disk (modulus tolerance 1e-8),
    /// nonzero leading coefficients, and no shared root.
    pub fn validate(&self) -> Result<()> {
        check_d(self.d)?;
        if let Some(&last) = self.phi.last() {
            if last == 0.0 {
                return Err(CpError::domain("phi_p must be nonzero when p > 0"));
            }
        }
        if let Some(&last) = self.psi.last() {
            if last == 0.0 {
                return Err(CpError::domain("psi_q must be nonzero when q > 0"));
            }
        }
        let ar_roots = poly_roots_ar(&self.phi)?;
        let ma_roots = poly_roots_ma(&self.psi)?;
        for r in ar_roots.iter().chain(ma_roots.iter()) {
            if r.norm() <= 1.0 + ROOT_TOL {
                return Err(CpError::domain(format!(
                    "polynomial root {:.6}+{:.6}i inside or on the unit disk",
                    r.re, r.im
                )));
            }
        }
        for ra in &ar_roots {
            for rm in &ma_roots {
                if (ra - rm).norm() < COMMON_ROOT_TOL {
                    return Err(CpError::domain(
                        "AR and MA polynomials share a root (cancellation)",
                    ));
                }
            }
        }
        Ok(())
    }
}

const ROOT_TOL: f64 = 1e-8;
const COMMON_ROOT_TOL: f64 = 1e-6;

pub(crate) fn check_d(d: f64) -> Result<()> {
    if !(d > 0.0 && d < 0.5) {
        return Err(CpError::domain(format!(
            "fractional order d must lie strictly in (0, 0.5), got {d}"
        )));
    }
    Ok(())
}

/// Roots of phi(z) = 1 - phi_1 z - ... - phi_p z^p.
fn poly_roots_ar(phi: &[f64]) -> Result<Vec<Complex<f64>>> {
    // reciprocal-polynomial companion: z^p - phi_1 z^{p-1} - ... - phi_p,
    // whose eigenvalues are the reciprocals of the roots of phi
    let coeffs: Vec<f64> = phi.to_vec();
    reciprocal_roots(&coeffs, true)
}

/// Roots of psi(z) = 1 + psi_1 z + ... + psi_q z^q.
fn poly_roots_ma(psi: &[f64]) -> Result<Vec<Complex<f64>>> {
    let coeffs: Vec<f64> = psi.to_vec();
    reciprocal_roots(&coeffs, false)
}

fn reciprocal_roots(coeffs: &[f64], negated: bool) -> Result<Vec<Complex<f64>>> {
    let p = coeffs.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    let mut comp = DMatrix::<f64>::zeros(p, p);
    for (i, &c) in coeffs.iter().enumerate() {
        comp[(0, i)] = if negated { c } else { -c };
    }
    for i in 1..p {
        comp[(i, i - 1)] = 1.0;
    }
    let eigs = comp.complex_eigenvalues();
    let mut roots = Vec::with_capacity(p);
    for e in eigs.iter() {
        if e.norm() < 1e-300 {
            return Err(CpError::domain("degenerate polynomial (zero eigenvalue)"));
        }
        roots.push(Complex::new(1.0, 0.0) / e);
    }
    Ok(roots)
}

/// Compact box Theta for the optimizer, coordinate order matching
/// FarimaParams::to_vec.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ParamSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(CpError::domain("bounds must be nonempty, equal length"));
        }
        for (l, u) in lower.iter().zip(upper.iter()) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(CpError::domain(format!(
                    "invalid bound pair [{l}, {u}]: need finite l < u"
                )));
            }
        }
        Ok(ParamSpace { lower, upper })
    }

    /// Box for a FARIMA model: coordinate 0 is d and must sit strictly inside
    /// (0, 0.5).
    pub fn for_farima(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = Self::new(lower, upper)?;
        if !(s.lower[0] > 0.0 && s.upper[0] < 0.5) {
            return Err(CpError::domain(
                "d-bounds must lie strictly inside (0, 0.5)",
            ));
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(self.upper.iter())) {
            *v = v.max(*l).min(*u);
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Distance to the nearest face, used for boundary flagging.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .map(|(v, (l, u))| (v - l).abs().min((u - v).abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Observed or simulated series with optional provenance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeriesBuffer {
    pub values: Vec<f64>,
    pub provenance: Option<String>,
}

impl SeriesBuffer {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CpError::domain("series must have length >= 1"));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(CpError::domain(format!(
                "non-finite value at position {bad}"
            )));
        }
        Ok(SeriesBuffer {
            values,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, p: String) -> Self {
        self.provenance = Some(p);
        self
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_d_range() {
        assert!(FarimaParams::new(0.3, vec![], vec![]).is_ok());
        assert!(FarimaParams::new(0.0, vec![], vec![]).is_err());
        assert!(FarimaParams::new(0.5, vec![], vec![]).is_err());
        assert!(FarimaParams::new(-0.1, vec![], vec![]).is_err());
    }

    #[test]
    fn rejects_unit_root_ar() {
        // phi(z) = 1 - z has root exactly on the circle
        assert!(FarimaParams::new(0.2, vec![1.0], vec![]).is_err());
        assert!(FarimaParams::new(0.2, vec![0.5], vec![]).is_ok());
        // explosive
        assert!(FarimaParams::new(0.2, vec![1.5], vec![]).is_err());
    }

    #[test]
    fn rejects_common_root() {
        // phi(z) = 1 - 0.5 z and psi(z) = 1 - 0.5 z share root z = 2
        assert!(FarimaParams::new(0.2, vec![0.5], vec![-0.5]).is_err());
        assert!(FarimaParams::new(0.2, vec![0.5], vec![0.4]).is_ok());
    }

    #[test]
    fn rejects_zero_leading_coeff() {
        assert!(FarimaParams::new(0.2, vec![0.3, 0.0], vec![]).is_err());
    }

    #[test]
    fn ar2_stationarity_checked() {
        // phi(z)=1-0.5z-0.3z^2 stationary; 1-0.9z-0.3z^2 is not
        assert!(FarimaParams::new(0.2, vec![0.5, 0.3], vec![]).is_ok());
        assert!(FarimaParams::new(0.2, vec![0.9, 0.3], vec![]).is_err());
    }

    #[test]
    fn series_buffer_guards() {
        assert!(SeriesBuffer::new(vec![]).is_err());
        assert!(SeriesBuffer::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(SeriesBuffer::new(vec![1.0, 2.0]).unwrap().n(), 2);
    }

    #[test]
    fn param_space_guards() {
        assert!(ParamSpace::new(vec![0.0], vec![1.0]).is_ok());
        assert!(ParamSpace::new(vec![1.0], vec![0.0]).is_err());
        assert!(ParamSpace::for_farima(vec![0.0], vec![0.4]).is_err());
        assert!(ParamSpace::for_farima(vec![0.01], vec![0.49]).is_ok());
    }

    #[test]
    fn boundary_distance_reports_nearest_face() {
        let s = ParamSpace::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(s.boundary_distance(&[0.2, 0.5]), 0.2);
        assert!((s.boundary_distance(&[0.5, 0.999]) - 0.001).abs() < 1e-15);
    }
}
