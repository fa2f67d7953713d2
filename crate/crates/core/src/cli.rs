//! Command-line surface. Every command reads defaults from an optional
//! flat key=value config file (`--config`); explicit flags override the
//! file; unknown config keys are rejected. Data goes to stdout (or the
//! requested file), logs to stderr. Exit codes: 0 success, 2 usage error,
//! 1 runtime failure, 3 "rejected at the requested level" when `scan` runs
//! with `--reject-exit`.

use crate::doclint;
use crate::error::{CpError, Result};
use crate::farima::{FarimaParams, ParamSpace, SimSpec};
use crate::io;
use crate::mc::{null_distribution, run_power, run_size, AltMode, McDesign};
use crate::model::{ar_model, farima_model, ModelSpec};
use crate::ned::{
    gaussian_max_check, rate_fit, reversibility_diagnostic, sum_paths, Direction, NedGenerator,
    NedSequenceSpec,
};
use crate::optim::fit;
use crate::rng::Innovations;
use crate::scan::{scan_with, RightPiece, ScanOptions};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(CpError),
}

impl From<CpError> for Failure {
    fn from(e: CpError) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(
    name = "cp-wald",
    version,
    about = "Change-point scan for parametric time series: normalized sup-Wald test"
)]
struct Cli {
    /// Flat key=value config file; flags given on the command line override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate a FARIMA(p, d, q) series to stdout or a file
    Simulate(SimulateArgs),
    /// Fit the model on a full series
    Fit(FitArgs),
    /// Scan all admissible splits and report the normalized statistic
    Scan(ScanArgs),
    /// One Monte Carlo size/power cell, table-shaped CSV or JSON
    Table1(Table1Args),
    /// Null distribution of the normalized statistic with its distance to
    /// the limit law
    NullDist(NullDistArgs),
    /// Partial-sum dependence lab
    #[command(subcommand)]
    Ned(NedCmd),
    /// Check method-notes coverage of the substantive operations
    DocLint(DocLintArgs),
}

#[derive(Args, Debug, Default)]
struct SimulateArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Fractional order in (0, 0.5)
    #[arg(long)]
    d: Option<f64>,
    /// AR coefficients, comma-separated
    #[arg(long)]
    phi: Option<String>,
    /// MA coefficients, comma-separated
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    /// normal | student-t:DF | centered-exponential
    #[arg(long)]
    innovations: Option<String>,
    /// Fractional filter truncation length
    #[arg(long)]
    cut: Option<usize>,
    /// Extra ARMA warm block
    #[arg(long)]
    burn: Option<usize>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// farima | ar
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    d_lower: Option<f64>,
    #[arg(long)]
    d_upper: Option<f64>,
    /// Box half-width for ARMA coordinates
    #[arg(long)]
    ar_bound: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct FitArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug, Default)]
struct ScanArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    trim: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// backward | forward: how the post-split window is read
    #[arg(long)]
    right_piece: Option<String>,
    /// Write the per-split table here (CSV)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Scripting mode: exit 3 when p-value <= this level
    #[arg(long)]
    reject_exit: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct Table1Args {
    #[arg(long)]
    n: Option<usize>,
    /// Null fractional order
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Mandatory: reproduction runs must pin their stream
    #[arg(long)]
    seed: Option<u64>,
    /// Post-break fractional order (power cell when present)
    #[arg(long)]
    d1: Option<f64>,
    /// Break fraction in (0, 1)
    #[arg(long)]
    tau: Option<f64>,
    /// Comma-separated rejection levels
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    innovations: Option<String>,
    /// restart | filter-through
    #[arg(long)]
    alt_mode: Option<String>,
    #[arg(long)]
    trim: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Include every replication's statistic in the JSON report
    #[arg(long)]
    dump_w: bool,
}

#[derive(Args, Debug, Default)]
struct NullDistArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trim: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// Write rank,w_hat rows here (CSV)
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum NedCmd {
    /// Normalized partial-sum path table for one realization
    Paths(NedPathsArgs),
    /// Decay-exponent fit on the segment maxima
    Rate(NedPathsArgs),
    /// Normalized-max distribution check against the one-direction law
    GaussianMax(NedMaxArgs),
    /// Third-moment time-irreversibility diagnostic
    Reversibility(NedRevArgs),
}

#[derive(Args, Debug, Default)]
struct NedPathsArgs {
    /// ar1-squared:PHI | ar1-level:PHI | ar1-score:PHI | farima-score:D |
    /// filtered:W1,W2,...
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// forward | backward
    #[arg(long)]
    direction: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Smallest segment endpoint used by the rate fit
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    innovations: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct NedMaxArgs {
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Upper end of the max window as a fraction of n
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    innovations: Option<String>,
}

#[derive(Args, Debug, Default)]
struct NedRevArgs {
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    innovations: Option<String>,
}

#[derive(Args, Debug, Default)]
struct DocLintArgs {
    /// Method-notes file to check
    #[arg(long)]
    docs: Option<PathBuf>,
}

/// Entry point used by main and by the integration tests.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CpError::Io {
                path: path.display().to_string(),
                source,
            })?;
            io::parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    match cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a, &config),
        Cmd::Fit(a) => cmd_fit(a, &config),
        Cmd::Scan(a) => cmd_scan(a, &config),
        Cmd::Table1(a) => cmd_table1(a, &config),
        Cmd::NullDist(a) => cmd_null_dist(a, &config),
        Cmd::Ned(op) => cmd_ned(op, &config),
        Cmd::DocLint(a) => cmd_doc_lint(a, &config),
    }
}

// config merging: a config value fills a flag the user left unset

fn take<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
    slot: &mut Option<T>,
) -> CliResult<()>
where
    T::Err: std::fmt::Display,
{
    if slot.is_none() {
        if let Some(raw) = map.get(key) {
            *slot = Some(raw.parse().map_err(|e| {
                Failure::Runtime(CpError::Config(format!("key {key}: {e}")))
            })?);
        }
    }
    Ok(())
}

fn take_flag(map: &BTreeMap<String, String>, key: &str, slot: &mut bool) -> CliResult<()> {
    if !*slot {
        if let Some(raw) = map.get(key) {
            *slot = raw.parse().map_err(|e| {
                Failure::Runtime(CpError::Config(format!("key {key}: {e}")))
            })?;
        }
    }
    Ok(())
}

fn known(map: &BTreeMap<String, String>, allowed: &[&str]) -> CliResult<()> {
    io::check_known_keys(map, allowed).map_err(Failure::Runtime)
}

fn required<T>(slot: Option<T>, name: &str) -> CliResult<T> {
    slot.ok_or_else(|| Failure::Usage(format!("missing --{name}")))
}

fn parse_innovations(s: Option<&str>) -> CliResult<Innovations> {
    let Some(s) = s else {
        return Ok(Innovations::Normal);
    };
    match s {
        "normal" => Ok(Innovations::Normal),
        "centered-exponential" => Ok(Innovations::CenteredExponential),
        other => {
            if let Some(df) = other.strip_prefix("student-t:") {
                let df: f64 = df
                    .parse()
                    .map_err(|_| Failure::Usage(format!("bad student-t df {df:?}")))?;
                Ok(Innovations::StudentT { df })
            } else {
                Err(Failure::Usage(format!(
                    "unknown innovations {other:?} (normal | student-t:DF | centered-exponential)"
                )))
            }
        }
    }
}

fn parse_f64_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("bad number {p:?} in list")))
        })
        .collect()
}

fn parse_direction(s: Option<&str>) -> CliResult<Direction> {
    match s.unwrap_or("forward") {
        "forward" => Ok(Direction::Forward),
        "backward" => Ok(Direction::Backward),
        other => Err(Failure::Usage(format!(
            "unknown direction {other:?} (forward | backward)"
        ))),
    }
}

fn parse_generator(s: &str) -> CliResult<NedGenerator> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let scalar = |name: &str| -> CliResult<f64> {
        arg.parse::<f64>()
            .map_err(|_| Failure::Usage(format!("generator {name} needs a numeric argument")))
    };
    match kind {
        "ar1-squared" => Ok(NedGenerator::Ar1SquaredCentered { phi: scalar("ar1-squared")? }),
        "ar1-level" => Ok(NedGenerator::Ar1Level { phi: scalar("ar1-level")? }),
        "ar1-score" => Ok(NedGenerator::Ar1Score { phi: scalar("ar1-score")? }),
        "farima-score" => Ok(NedGenerator::FarimaScore { d: scalar("farima-score")? }),
        "filtered" => Ok(NedGenerator::Filtered {
            weights: parse_f64_list(arg)?,
        }),
        other => Err(Failure::Usage(format!("unknown generator {other:?}"))),
    }
}

fn build_model(args: &ModelArgs) -> CliResult<ModelSpec> {
    let name = args.model.as_deref().unwrap_or("farima");
    let p = args.p.unwrap_or(0);
    let q = args.q.unwrap_or(0);
    let ar_bound = args.ar_bound.unwrap_or(0.95);
    let spec = match name {
        "farima" => {
            let mut lo = vec![args.d_lower.unwrap_or(0.001)];
            let mut hi = vec![args.d_upper.unwrap_or(0.499)];
            lo.extend(std::iter::repeat(-ar_bound).take(p + q));
            hi.extend(std::iter::repeat(ar_bound).take(p + q));
            farima_model(ParamSpace::new(lo, hi)?, p, q)?
        }
        "ar" => {
            if p == 0 {
                return Err(Failure::Usage("model ar needs --p >= 1".into()));
            }
            let b = ar_bound.min(1.0 - 1e-3);
            ar_model(p, ParamSpace::new(vec![-b; p], vec![b; p])?)?
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown model {other:?} (farima | ar)"
            )))
        }
    };
    Ok(spec)
}

fn merge_model(args: &mut ModelArgs, map: &BTreeMap<String, String>) -> CliResult<()> {
    take(map, "model", &mut args.model)?;
    take(map, "p", &mut args.p)?;
    take(map, "q", &mut args.q)?;
    take(map, "d-lower", &mut args.d_lower)?;
    take(map, "d-upper", &mut args.d_upper)?;
    take(map, "ar-bound", &mut args.ar_bound)?;
    Ok(())
}

const MODEL_KEYS: &[&str] = &["model", "p", "q", "d-lower", "d-upper", "ar-bound"];

fn with_out<F>(dest: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match dest {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(|source| CpError::Io {
                path: path.display().to_string(),
                source,
            })?;
            f(&mut file)?;
            file.flush().map_err(|source| CpError::Io {
                path: path.display().to_string(),
                source,
            })
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

fn cmd_simulate(mut a: SimulateArgs, map: &BTreeMap<String, String>) -> CliResult<i32> {
    known(map, &["n", "d", "phi", "psi", "seed", "stream", "innovations", "cut", "burn", "out"])?;
    take(map, "n", &mut a.n)?;
    take(map, "d", &mut a.d)?;
    take(map, "phi", &mut a.phi)?;
    take(map, "psi", &mut a.psi)?;
    take(map, "seed", &mut a.seed)?;
    take(map, "stream", &mut a.stream)?;
    take(map, "innovations", &mut a.innovations)?;
    take(map, "cut", &mut a.cut)?;
    take(map, "burn", &mut a.burn)?;
    take(map, "out", &mut a.out)?;

    let n = required(a.n, "n")?;
    let d = required(a.d, "d")?;
    let seed = required(a.seed, "seed")?;
    let phi = a.phi.as_deref().map(parse_f64_list).transpose()?.unwrap_or_default();
    let psi = a.psi.as_deref().map(parse_f64_list).transpose()?.unwrap_or_default();
    let params = FarimaParams::new(d, phi, psi)?;
    let mut spec = SimSpec::new(params, n, seed);
    spec.stream = a.stream.unwrap_or(0);
    spec.innovations = parse_innovations(a.innovations.as_deref())?;
    spec.cut = a.cut;
    spec.burn = a.burn;
    let y = crate::farima::simulate_farima(&spec)?;
    log::info!("simulated n={} values ({})", y.n(), y.provenance.as_deref().unwrap_or("-"));
    with_out(a.out.as_deref(), |out| io::series_csv(&y.values, out))?;
    Ok(0)
}

fn cmd_fit(mut a: FitArgs, map: &BTreeMap<String, String>) -> CliResult<i32> {
    let mut keys = vec!["input"];
    keys.extend_from_slice(MODEL_KEYS);
    known(map, &keys)?;
    take(map, "input", &mut a.input)?;
    merge_model(&mut a.model, map)?;

    let input = required(a.input, "input")?;
    let model = build_model(&a.model)?;
    let series = io::ingest(&input)?;
    let n = series.n();
    let result = fit(&model, &series, (0, n), None)?;
    with_out(None, |out| io::emit_json("fit", &result, out))?;
    Ok(0)
}

fn cmd_scan(mut a: ScanArgs, map: &BTreeMap<String, String>) -> CliResult<i32> {
    let mut keys = vec!["input", "trim", "stride", "right-piece", "csv", "reject-exit"];
    keys.extend_from_slice(MODEL_KEYS);
    known(map, &keys)?;
    take(map, "input", &mut a.input)?;
    take(map, "trim", &mut a.trim)?;
    take(map, "stride", &mut a.stride)?;
    take(map, "right-piece", &mut a.right_piece)?;
    take(map, "csv", &mut a.csv)?;
    take(map, "reject-exit", &mut a.reject_exit)?;
    merge_model(&mut a.model, map)?;

    let input = required(a.input, "input")?;
    let model = build_model(&a.model)?;
    let series = io::ingest(&input)?;
    let opts = ScanOptions {
        trim: a.trim,
        stride: a.stride.unwrap_or(1),
        right_piece: match a.right_piece.as_deref() {
            None | Some("backward") => RightPiece::Backward,
            Some("forward") => RightPiece::Forward,
            Some(other) => {
                return Err(Failure::Usage(format!(
                    "unknown right-piece {other:?} (backward | forward)"
                )))
            }
        },
        fit: Default::default(),
    };
    let result = scan_with(&model, &series, &opts)?;
    log::info!(
        "scan n={} m={}: w_hat={:.6} at k={}",
        result.n,
        result.m,
        result.w_hat,
        result.k_star
    );
    if let Some(csv) = &a.csv {
        with_out(Some(csv), |out| io::scan_csv(&result, out))?;
    }
    with_out(None, |out| {
        io::scan_summary_json(&result, series.provenance.as_deref(), out)
    })?;
    if let Some(alpha) = a.reject_exit {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Failure::Usage("reject-exit level must lie in [0, 1]".into()));
        }
        if result.p_value <= alpha {
            return Ok(3);
        }
    }
    Ok(0)
}

fn mc_design(
    n: Option<usize>,
    d0: Option<f64>,
    reps: Option<usize>,
    seed: Option<u64>,
    trim: Option<usize>,
    stride: Option<usize>,
) -> CliResult<McDesign> {
    let mut design = McDesign::new(
        required(n, "n")?,
        required(reps, "reps")?,
        required(d0, "d0")?,
        required(seed, "seed")?,
    );
    design.trim = trim;
    if let Some(s) = stride {
        design.stride = s;
    }
    Ok(design)
}

fn cmd_table1(mut a: Table1Args, map: &BTreeMap<String, String>) -> CliResult<i32> {
    known(
        map,
        &[
            "n", "d0", "reps", "seed", "d1", "tau", "levels", "innovations", "alt-mode", "trim",
            "stride", "format", "dump-w",
        ],
    )?;
    take(map, "n", &mut a.n)?;
    take(map, "d0", &mut a.d0)?;
    take(map, "reps", &mut a.reps)?;
    take(map, "seed", &mut a.seed)?;
    take(map, "d1", &mut a.d1)?;
    take(map, "tau", &mut a.tau)?;
    take(map, "levels", &mut a.levels)?;
    take(map, "innovations", &mut a.innovations)?;
    take(map, "alt-mode", &mut a.alt_mode)?;
    take(map, "trim", &mut a.trim)?;
    take(map, "stride", &mut a.stride)?;
    take(map, "format", &mut a.format)?;
    take_flag(map, "dump-w", &mut a.dump_w)?;

    let mut design = mc_design(a.n, a.d0, a.reps, a.seed, a.trim, a.stride)?;
    if let Some(levels) = a.levels.as_deref() {
        design.levels = parse_f64_list(levels)?;
    }
    design.innovations = parse_innovations(a.innovations.as_deref())?;
    design.alt_mode = match a.alt_mode.as_deref() {
        None | Some("filter-through") => AltMode::FilterThrough,
        Some("restart") => AltMode::Restart,
        Some(other) => {
            return Err(Failure::Usage(format!(
                "unknown alt-mode {other:?} (restart | filter-through)"
            )))
        }
    };
    design.dump_w = a.dump_w;
    let report = match (a.d1, a.tau) {
        (None, None) => run_size(&design)?,
        (Some(d1), tau) => {
            design = design.with_alternative(d1, tau.unwrap_or(0.5));
            run_power(&design)?
        }
        (None, Some(_)) => {
            return Err(Failure::Usage("--tau needs --d1".into()));
        }
    };
    log::info!(
        "mc cell n={} reps={} redraws={}: rates {:?}",
        report.n,
        report.reps,
        report.redraws,
        report.rates
    );
    match a.format.as_deref().unwrap_or("csv") {
        "csv" => with_out(None, |out| io::table_csv(std::slice::from_ref(&report), out))?,
        "json" => with_out(None, |out| io::emit_json("mc-report", &report, out))?,
        other => {
            return Err(Failure::Usage(format!(
                "unknown format {other:?} (csv | json)"
            )))
        }
    }
    Ok(0)
}

fn cmd_null_dist(mut a: NullDistArgs, map: &BTreeMap<String, String>) -> CliResult<i32> {
    known(map, &["n", "d0", "reps", "seed", "trim", "stride", "csv"])?;
    take(map, "n", &mut a.n)?;
    take(map, "d0", &mut a.d0)?;
    take(map, "reps", &mut a.reps)?;
    take(map, "seed", &mut a.seed)?;
    take(map, "trim", &mut a.trim)?;
    take(map, "stride", &mut a.stride)?;
    take(map, "csv", &mut a.csv)?;

    let design = mc_design(a.n, a.d0, a.reps, a.seed, a.trim, a.stride)?;
    let nd = null_distribution(&design)?;
    log::info!(
        "null distribution n={} reps={}: ks={:.4}",
        nd.n,
        nd.reps,
        nd.ks_distance
    );
    if let Some(csv) = &a.csv {
        with_out(Some(csv), |out| io::null_dist_csv(&nd, out))?;
    }
    with_out(None, |out| io::emit_json("null-distribution", &nd, out))?;
    Ok(0)
}

fn ned_spec(generator: Option<&str>, innovations: Option<&str>) -> CliResult<NedSequenceSpec> {
    let gen = parse_generator(required(generator, "generator")?)?;
    let mut spec = NedSequenceSpec::new(gen);
    spec.innovations = parse_innovations(innovations)?;
    Ok(spec)
}

fn cmd_ned(op: NedCmd, map: &BTreeMap<String, String>) -> CliResult<i32> {
    match op {
        NedCmd::Paths(mut a) => {
            known(map, &["generator", "n", "direction", "seed", "k-min", "innovations", "csv"])?;
            merge_ned_paths(&mut a, map)?;
            let spec = ned_spec(a.generator.as_deref(), a.innovations.as_deref())?;
            let paths = sum_paths(
                &spec,
                required(a.n, "n")?,
                parse_direction(a.direction.as_deref())?,
                required(a.seed, "seed")?,
            )?;
            if let Some(csv) = &a.csv {
                with_out(Some(csv), |out| io::paths_csv(&paths, out))?;
            }
            with_out(None, |out| io::emit_json("ned-paths", &paths, out))?;
            Ok(0)
        }
        NedCmd::Rate(mut a) => {
            known(map, &["generator", "n", "direction", "seed", "k-min", "innovations", "csv"])?;
            merge_ned_paths(&mut a, map)?;
            let spec = ned_spec(a.generator.as_deref(), a.innovations.as_deref())?;
            let paths = sum_paths(
                &spec,
                required(a.n, "n")?,
                parse_direction(a.direction.as_deref())?,
                required(a.seed, "seed")?,
            )?;
            let fit = rate_fit(&paths, a.k_min.unwrap_or(crate::ned::GRID_FLOOR))?;
            if let Some(csv) = &a.csv {
                with_out(Some(csv), |out| io::paths_csv(&paths, out))?;
            }
            with_out(None, |out| io::emit_json("ned-rate", &fit, out))?;
            Ok(0)
        }
        NedCmd::GaussianMax(mut a) => {
            known(map, &["generator", "n", "reps", "mu", "seed", "innovations"])?;
            take(map, "generator", &mut a.generator)?;
            take(map, "n", &mut a.n)?;
            take(map, "reps", &mut a.reps)?;
            take(map, "mu", &mut a.mu)?;
            take(map, "seed", &mut a.seed)?;
            take(map, "innovations", &mut a.innovations)?;
            let spec = ned_spec(a.generator.as_deref(), a.innovations.as_deref())?;
            let rep = gaussian_max_check(
                &spec,
                required(a.n, "n")?,
                required(a.reps, "reps")?,
                a.mu.unwrap_or(0.9),
                required(a.seed, "seed")?,
            )?;
            log::info!(
                "gaussian-max: ks fwd={:.4} bwd={:.4}",
                rep.forward.ks_distance,
                rep.backward.ks_distance
            );
            with_out(None, |out| io::emit_json("ned-gaussian-max", &rep, out))?;
            Ok(0)
        }
        NedCmd::Reversibility(mut a) => {
            known(map, &["generator", "n", "seed", "innovations"])?;
            take(map, "generator", &mut a.generator)?;
            take(map, "n", &mut a.n)?;
            take(map, "seed", &mut a.seed)?;
            take(map, "innovations", &mut a.innovations)?;
            let spec = ned_spec(a.generator.as_deref(), a.innovations.as_deref())?;
            let rep = reversibility_diagnostic(
                &spec,
                required(a.n, "n")?,
                required(a.seed, "seed")?,
            )?;
            with_out(None, |out| io::emit_json("ned-reversibility", &rep, out))?;
            Ok(0)
        }
    }
}

fn merge_ned_paths(a: &mut NedPathsArgs, map: &BTreeMap<String, String>) -> CliResult<()> {
    take(map, "generator", &mut a.generator)?;
    take(map, "n", &mut a.n)?;
    take(map, "direction", &mut a.direction)?;
    take(map, "seed", &mut a.seed)?;
    take(map, "k-min", &mut a.k_min)?;
    take(map, "innovations", &mut a.innovations)?;
    take(map, "csv", &mut a.csv)?;
    Ok(())
}

fn cmd_doc_lint(mut a: DocLintArgs, map: &BTreeMap<String, String>) -> CliResult<i32> {
    known(map, &["docs"])?;
    take(map, "docs", &mut a.docs)?;
    let path = a
        .docs
        .unwrap_or_else(|| PathBuf::from("docs/method-notes.md"));
    let report = doclint::doc_lint_path(&path)?;
    with_out(None, |out| io::emit_json("doc-lint", &report, out))?;
    if report.is_clean() {
        Ok(0)
    } else {
        Err(Failure::Runtime(CpError::domain(format!(
            "method notes missing entries: {}",
            report.missing.join(", ")
        ))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_strings_parse() {
        assert!(matches!(
            parse_generator("ar1-squared:0.8").unwrap(),
            NedGenerator::Ar1SquaredCentered { .. }
        ));
        assert!(matches!(
            parse_generator("farima-score:0.3").unwrap(),
            NedGenerator::FarimaScore { .. }
        ));
        match parse_generator("filtered:0.5,0.5").unwrap() {
            NedGenerator::Filtered { weights } => assert_eq!(weights, vec![0.5, 0.5]),
            other => panic!("{other:?}"),
        }
        assert!(parse_generator("nope:1").is_err());
        assert!(parse_generator("ar1-level").is_err());
    }

    #[test]
    fn innovation_strings_parse() {
        assert_eq!(parse_innovations(None).unwrap(), Innovations::Normal);
        assert_eq!(
            parse_innovations(Some("centered-exponential")).unwrap(),
            Innovations::CenteredExponential
        );
        assert!(matches!(
            parse_innovations(Some("student-t:8")).unwrap(),
            Innovations::StudentT { .. }
        ));
        assert!(parse_innovations(Some("cauchy")).is_err());
    }

    #[test]
    fn config_fills_only_missing_slots() {
        let mut map = BTreeMap::new();
        map.insert("n".to_string(), "400".to_string());
        let mut set: Option<usize> = Some(250);
        let mut unset: Option<usize> = None;
        take(&map, "n", &mut set).unwrap();
        take(&map, "n", &mut unset).unwrap();
        assert_eq!(set, Some(250));
        assert_eq!(unset, Some(400));
    }

    #[test]
    fn model_defaults_are_farima00() {
        let m = build_model(&ModelArgs::default()).unwrap();
        assert_eq!(m.dim(), 1);
        let ar = build_model(&ModelArgs {
            model: Some("ar".into()),
            p: Some(1),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(ar.dim(), 1);
        assert!(build_model(&ModelArgs {
            model: Some("ar".into()),
            ..Default::default()
        })
        .is_err());
    }
}
