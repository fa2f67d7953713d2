//! File ingestion, result emission, and flat key=value configuration.
//!
//! Emission is deterministic: the same result struct always produces the
//! same bytes. CSV numeric cells are printed with 17 significant digits
//! (full f64 round trip); JSON goes through serde_json, whose float
//! rendering is also round-trip exact.

use crate::error::{CpError, Result};
use crate::farima::SeriesBuffer;
use crate::mc::{McReport, NullDistribution};
use crate::ned::PathTable;
use crate::scan::ScanResult;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const SCHEMA: &str = "cp-wald/1";
pub const MAX_ROWS: usize = 100_000_000;

/// FNV-1a 64-bit content hash; cheap, stable, good enough for provenance.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("fnv1a:{h:016x}")
}

/// Read a one-column numeric series. An optional single header line is
/// allowed at the top; every other row must parse to a finite number.
pub fn ingest(path: &Path) -> Result<SeriesBuffer> {
    let bytes = std::fs::read(path).map_err(|source| CpError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let mut values = Vec::new();
    let mut header_allowed = true;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if line_no > MAX_ROWS {
            return Err(CpError::domain(format!(
                "input exceeds {MAX_ROWS} rows"
            )));
        }
        let s = raw.trim();
        if s.is_empty() {
            return Err(CpError::Parse {
                line: line_no,
                msg: "blank line".into(),
            });
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                values.push(v);
                header_allowed = false;
            }
            Ok(_) => {
                return Err(CpError::Parse {
                    line: line_no,
                    msg: format!("non-finite value {s:?}"),
                })
            }
            Err(_) if header_allowed => {
                // single header line, skipped
                header_allowed = false;
            }
            Err(_) => {
                return Err(CpError::Parse {
                    line: line_no,
                    msg: format!("not a number: {s:?}"),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(CpError::EmptyFile(path.display().to_string()));
    }
    Ok(SeriesBuffer::new(values)?.with_provenance(content_hash(&bytes)))
}

fn io_err(path: &str, source: std::io::Error) -> CpError {
    CpError::Io {
        path: path.into(),
        source,
    }
}

/// Full-precision cell: 17 significant digits, round-trip exact.
pub fn fmt_full(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

/// Serialize any result as a schema-tagged JSON object on one line. Keys
/// are emitted sorted, so bytes are deterministic.
pub fn emit_json<T: Serialize>(kind: &str, value: &T, out: &mut dyn Write) -> Result<()> {
    let v = serde_json::to_value(value)
        .map_err(|e| CpError::domain(format!("serialize {kind}: {e}")))?;
    let mut obj = match v {
        serde_json::Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    obj.insert("schema".into(), SCHEMA.into());
    obj.insert("kind".into(), kind.into());
    let line = serde_json::to_string(&serde_json::Value::Object(obj))
        .map_err(|e| CpError::domain(format!("serialize {kind}: {e}")))?;
    writeln!(out, "{line}").map_err(|e| io_err("<writer>", e))
}

/// Per-split scan table. Lambda cells are blank on degenerate rows.
pub fn scan_csv(r: &ScanResult, out: &mut dyn Write) -> Result<()> {
    let m = r.m;
    let mut header = String::from("k,tau,W");
    for j in 1..=m {
        header.push_str(&format!(",lambda_left_{j}"));
    }
    for j in 1..=m {
        header.push_str(&format!(",lambda_right_{j}"));
    }
    header.push_str(",degenerate");
    writeln!(out, "{header}").map_err(|e| io_err("<writer>", e))?;
    for row in &r.rows {
        let mut line = format!("{},{},", row.k, fmt_full(row.tau));
        match row.w {
            Some(w) => line.push_str(&fmt_full(w)),
            None => {}
        }
        for side in [&row.lambda_left, &row.lambda_right] {
            for j in 0..m {
                line.push(',');
                if let Some(v) = side.get(j) {
                    line.push_str(&fmt_full(*v));
                }
            }
        }
        line.push_str(if row.degenerate { ",true" } else { ",false" });
        writeln!(out, "{line}").map_err(|e| io_err("<writer>", e))?;
    }
    Ok(())
}

/// Scan summary as schema-tagged JSON.
pub fn scan_summary_json(
    r: &ScanResult,
    provenance: Option<&str>,
    out: &mut dyn Write,
) -> Result<()> {
    #[derive(Serialize)]
    struct Summary<'a> {
        n: usize,
        m: usize,
        k_star: usize,
        w_max: f64,
        w_hat: f64,
        p_value: f64,
        trim: usize,
        a_n: f64,
        b_n: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        provenance: Option<&'a str>,
    }
    emit_json(
        "scan-summary",
        &Summary {
            n: r.n,
            m: r.m,
            k_star: r.k_star,
            w_max: r.w_max,
            w_hat: r.w_hat,
            p_value: r.p_value,
            trim: r.norm.trim,
            a_n: r.norm.a_n,
            b_n: r.norm.b_n,
            provenance,
        },
        out,
    )
}

/// One-column numeric series, no header: the shape `ingest` reads back.
pub fn series_csv(values: &[f64], out: &mut dyn Write) -> Result<()> {
    for v in values {
        writeln!(out, "{}", fmt_full(*v)).map_err(|e| io_err("<writer>", e))?;
    }
    Ok(())
}

/// Monte Carlo table rows: one line per report, rejection rate and standard
/// error per level. Size rows leave d1/tau blank.
pub fn table_csv(reports: &[McReport], out: &mut dyn Write) -> Result<()> {
    let levels: &[f64] = reports
        .first()
        .map(|r| r.levels.as_slice())
        .unwrap_or(&[0.10, 0.05, 0.01]);
    let mut header = String::from("n,d0,d1,tau,reps,seed");
    for l in levels {
        let pct = (l * 100.0).round() as usize;
        header.push_str(&format!(",rate_{pct},se_{pct}"));
    }
    writeln!(out, "{header}").map_err(|e| io_err("<writer>", e))?;
    for r in reports {
        let mut line = format!(
            "{},{},{},{},{},{}",
            r.n,
            fmt_full(r.null_d),
            r.alt_d.map(fmt_full).unwrap_or_default(),
            r.break_frac.map(fmt_full).unwrap_or_default(),
            r.reps,
            r.seed
        );
        for (rate, se) in r.rates.iter().zip(&r.std_errors) {
            line.push_str(&format!(",{},{}", fmt_full(*rate), fmt_full(*se)));
        }
        writeln!(out, "{line}").map_err(|e| io_err("<writer>", e))?;
    }
    Ok(())
}

/// Sorted null-distribution draws, one rank per row.
pub fn null_dist_csv(nd: &NullDistribution, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "rank,w_hat").map_err(|e| io_err("<writer>", e))?;
    for (i, w) in nd.w_sorted.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, fmt_full(*w)).map_err(|e| io_err("<writer>", e))?;
    }
    Ok(())
}

/// Partial-sum path table for one direction.
pub fn paths_csv(p: &PathTable, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "k,s_over_k,seg_max").map_err(|e| io_err("<writer>", e))?;
    for ((k, s), m) in p.grid.iter().zip(&p.s_over_k).zip(&p.seg_max) {
        writeln!(out, "{},{},{}", k, fmt_full(*s), fmt_full(*m))
            .map_err(|e| io_err("<writer>", e))?;
    }
    Ok(())
}

/// Flat key=value configuration. `#` starts a comment; keys are
/// lowercase dotted words; duplicates are rejected.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(CpError::Config(format!(
                "line {line_no}: expected key=value, got {s:?}"
            )));
        };
        let k = k.trim();
        let v = v.trim();
        if k.is_empty()
            || !k
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || "._-".contains(c))
        {
            return Err(CpError::Config(format!("line {line_no}: bad key {k:?}")));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CpError::Config(format!("line {line_no}: duplicate key {k:?}")));
        }
    }
    Ok(map)
}

/// Canonical rendering: sorted key=value lines. parse(canonical(m)) == m.
pub fn canonical_config(map: &BTreeMap<String, String>) -> String {
    let mut s = String::new();
    for (k, v) in map {
        s.push_str(k);
        s.push('=');
        s.push_str(v);
        s.push('\n');
    }
    s
}

/// Reject keys outside the allowed set for the active command.
pub fn check_known_keys(map: &BTreeMap<String, String>, allowed: &[&str]) -> Result<()> {
    let unknown: Vec<&str> = map
        .keys()
        .map(|k| k.as_str())
        .filter(|k| !allowed.contains(k))
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(CpError::Config(format!(
            "unknown config keys: {}",
            unknown.join(", ")
        )))
    }
}
