//! Change-point detection for parametric time series by a normalized
//! sup-Wald scan, with a long-memory FARIMA model family, a Monte Carlo
//! size/power harness, and an empirical lab for forward/backward
//! partial-sum limit behavior.

pub mod cli;
pub mod convolve;
pub mod doclint;
pub mod error;
pub mod farima;
pub mod io;
pub mod kahan;
pub mod mc;
pub mod model;
pub mod ned;
pub mod norm;
pub mod optim;
pub mod rng;
pub mod scan;

pub use doclint::{doc_lint, doc_lint_path, DocLintReport};
pub use error::{CpError, Result};
pub use io::{emit_json, ingest};
pub use farima::{
    frac_diff_coeffs, inverse_frac_coeffs, log_deriv_coeffs, residuals, score_panel,
    simulate_farima, simulate_with_innovations, FarimaParams, ParamSpace, SeriesBuffer, SimSpec,
};
pub use mc::{
    ks_distance, null_distribution, run_power, run_size, AltMode, McDesign, McReport,
    NullDistribution,
};
pub use model::{ar_model, farima_model, ModelKind, ModelSpec};
pub use ned::{
    gaussian_max_check, rate_fit, reversibility_diagnostic, sum_paths, Direction, GaussianMaxReport,
    NedGenerator, NedSequenceSpec, PathTable, RateFit,
};
pub use norm::{critical_value, norm_constants, p_value, NormConstants};
pub use optim::{fit, fit_window, FitOptions, FitResult};
pub use rng::{stream_rng, Innovations};
pub use scan::{scan, scan_with, wald_at, RightPiece, SandwichEstimates, ScanOptions, ScanResult, ScanRow};
