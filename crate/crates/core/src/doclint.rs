//! Method-notes coverage lint.
//!
//! Every substantive public operation must have an entry in
//! docs/method-notes.md under a `### module::operation` heading stating the
//! formula it computes. Pure plumbing (file IO, CLI, this lint) is exempt.
//! The test suite runs the lint so coverage cannot silently rot.

use crate::error::{CpError, Result};
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::Path;

/// Operations that must be documented, as `module::operation` keys.
pub const REQUIRED_ENTRIES: &[&str] = &[
    "farima_core::frac_diff_coeffs",
    "farima_core::inverse_frac_coeffs",
    "farima_core::log_deriv_coeffs",
    "farima_core::simulate_farima",
    "farima_core::residuals",
    "farima_core::score_panel",
    "model_framework::farima_model",
    "model_framework::ar_model",
    "model_framework::fit",
    "changepoint_scan::wald_at",
    "changepoint_scan::norm_constants",
    "changepoint_scan::scan",
    "changepoint_scan::p_value",
    "changepoint_scan::critical_value",
    "mc_harness::run_size",
    "mc_harness::run_power",
    "mc_harness::null_distribution",
    "ned_lab::sum_paths",
    "ned_lab::rate_fit",
    "ned_lab::gaussian_max_check",
];

#[derive(Debug, Clone, Serialize)]
pub struct DocLintReport {
    pub required: usize,
    pub found: usize,
    pub missing: Vec<String>,
    /// Headings present in the notes but not on the required list; listed
    /// for information, not an error.
    pub extra: Vec<String>,
}

impl DocLintReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Lint the given method-notes markdown.
pub fn doc_lint(markdown: &str) -> DocLintReport {
    let present: BTreeSet<&str> = markdown
        .lines()
        .filter_map(|l| l.strip_prefix("### "))
        .map(str::trim)
        .collect();
    let missing: Vec<String> = REQUIRED_ENTRIES
        .iter()
        .filter(|k| !present.contains(**k))
        .map(|k| k.to_string())
        .collect();
    let extra: Vec<String> = present
        .iter()
        .filter(|k| !REQUIRED_ENTRIES.contains(*k) && k.contains("::"))
        .map(|k| k.to_string())
        .collect();
    DocLintReport {
        required: REQUIRED_ENTRIES.len(),
        found: REQUIRED_ENTRIES.len() - missing.len(),
        missing,
        extra,
    }
}

/// Lint a notes file on disk.
pub fn doc_lint_path(path: &Path) -> Result<DocLintReport> {
    let text = std::fs::read_to_string(path).map_err(|source| CpError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(doc_lint(&text))
}
