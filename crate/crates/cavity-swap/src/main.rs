//! Command-line front end: run one protocol instance, sweep a parameter
//! grid, run the self-check battery, or print the timing budget.
//!
//! Exit codes: 0 success, 1 failed self checks, 2 invalid input,
//! 3 I/O failure. Terminal output rounds to six decimals; files always
//! carry full precision.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cavity_swap::analysis::{
    fidelity_plot_svg, sweep, timing_budget, write_csv, write_json, GridRange, SweepConfig,
    TimingBudget, DEFAULT_BUDGET_FACTOR, DEFAULT_CAVITY_LIFETIME, DEFAULT_COUPLING,
    DEFAULT_RADIATIVE_LIFETIME,
};
use cavity_swap::protocol::{
    readout_pair_target, run_swap, Branch, Encoding, ProtocolParams, ProtocolResult, Variant,
};
use cavity_swap::verify::{all_pass, run_checks, Check};

#[derive(Parser)]
#[command(
    name = "cavity-swap",
    version,
    about = "Entanglement swapping between an atomic and a photonic pair, \
             simulated from first principles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol instance and print its scalars and branches
    Run(RunArgs),
    /// Evaluate a parameter grid and emit CSV or JSON records
    Sweep(SweepArgs),
    /// Run the built-in self checks against closed forms and golden values
    Verify(VerifyArgs),
    /// Print the pulse-time budget against the coherence lifetimes
    Timing(TimingArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Ground-pair amplitude b (0 < b < 1)
    #[arg(long)]
    b: Option<f64>,
    /// Amplitude mismatch k of the cavity pair: b' = b (1 + k)
    #[arg(long)]
    k: Option<f64>,
    /// Exchange pulse area gt (default 7 pi / 4)
    #[arg(long)]
    gt: Option<f64>,
    /// Post-selection variant: atom | cavity-vacuum
    #[arg(long)]
    variant: Option<String>,
    /// Pair encoding: same-excitation | single-excitation
    #[arg(long)]
    encoding: Option<String>,
    /// Fock levels kept per cavity (at least 3)
    #[arg(long)]
    truncation: Option<usize>,
    /// Read cavity 4 out onto a fresh atom after post-selection
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    bob_readout: Option<bool>,
    /// key=value file with any of this subcommand's long flags as keys;
    /// explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the full-precision JSON report to this file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Terminal format: text | json
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Default)]
struct SweepArgs {
    /// Grid for b: "start:stop:step" or a single value
    #[arg(long)]
    b_range: Option<String>,
    /// Grid for k: "start:stop:step" or a single value
    #[arg(long)]
    k_range: Option<String>,
    /// Grid for gt: "start:stop:step" or a single value
    #[arg(long)]
    gt_range: Option<String>,
    /// Post-selection variant: atom | cavity-vacuum
    #[arg(long)]
    variant: Option<String>,
    /// Pair encoding: same-excitation | single-excitation
    #[arg(long)]
    encoding: Option<String>,
    /// Fock levels kept per cavity (at least 3)
    #[arg(long)]
    truncation: Option<usize>,
    /// key=value file with any of this subcommand's long flags as keys;
    /// explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write records here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record format: csv | json
    #[arg(long)]
    format: Option<String>,
    /// Also write an SVG plot of fidelity against b to this file
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Replace every default tolerance with this one
    #[arg(long)]
    tolerance: Option<f64>,
    /// Terminal format: text | json
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct TimingArgs {
    /// Angular coupling rate g in rad/s (default 2 pi x 25 kHz)
    #[arg(long)]
    coupling: Option<f64>,
    /// Atomic radiative lifetime in seconds
    #[arg(long)]
    radiative_lifetime: Option<f64>,
    /// Cavity field lifetime in seconds
    #[arg(long)]
    cavity_lifetime: Option<f64>,
    /// Total protocol time as a multiple of one pulse time
    #[arg(long)]
    budget_factor: Option<f64>,
    /// Terminal format: text | json
    #[arg(long)]
    format: Option<String>,
}

enum CliError {
    Invalid(String),
    Io(String),
    ChecksFailed(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(msg) => write!(f, "invalid input: {msg}"),
            CliError::Io(msg) => write!(f, "i/o failure: {msg}"),
            CliError::ChecksFailed(n) => write!(f, "{n} self check(s) failed"),
        }
    }
}

impl From<cavity_swap::Error> for CliError {
    fn from(e: cavity_swap::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Timing(args) => cmd_timing(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

// --- config files --------------------------------------------------------

/// Parse a `key = value` file with `#` comments into a map, allowing only
/// the given keys.
fn load_config(path: &Path, allowed: &[&str]) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Invalid(format!(
                "{}:{}: expected key=value, got `{line}`",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim().to_string();
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::Invalid(format!(
                "{}:{}: unknown key `{key}` (allowed: {})",
                path.display(),
                lineno + 1,
                allowed.join(", ")
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Invalid(format!("{key}: cannot parse `{value}`")))
}

fn parse_variant(value: &str) -> Result<Variant, CliError> {
    value.parse().map_err(|e: cavity_swap::Error| e.into())
}

fn parse_encoding(value: &str) -> Result<Encoding, CliError> {
    value.parse().map_err(|e: cavity_swap::Error| e.into())
}

/// Parse "start:stop:step" (or a single value) into an inclusive grid.
/// Inverted or malformed ranges are rejected here, before any work runs.
fn parse_range(key: &str, value: &str) -> Result<GridRange, CliError> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(GridRange::fixed(parse_num(key, single)?)),
        [start, stop, step] => {
            let (start, stop, step) = (
                parse_num::<f64>(key, start)?,
                parse_num::<f64>(key, stop)?,
                parse_num::<f64>(key, step)?,
            );
            if stop < start {
                return Err(CliError::Invalid(format!(
                    "{key}: inverted range {start}:{stop}"
                )));
            }
            if step <= 0.0 && start != stop {
                return Err(CliError::Invalid(format!(
                    "{key}: step must be positive, got {step}"
                )));
            }
            Ok(GridRange::new(start, stop, step))
        }
        _ => Err(CliError::Invalid(format!(
            "{key}: expected start:stop:step or a single value, got `{value}`"
        ))),
    }
}

enum OutputFormat {
    Text,
    Json,
    Csv,
}

fn parse_format(value: &str, csv_world: bool) -> Result<OutputFormat, CliError> {
    match (value, csv_world) {
        ("text", false) => Ok(OutputFormat::Text),
        ("csv", true) => Ok(OutputFormat::Csv),
        ("json", _) => Ok(OutputFormat::Json),
        _ => Err(CliError::Invalid(format!(
            "format: expected {} | json, got `{value}`",
            if csv_world { "csv" } else { "text" }
        ))),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

// --- run ------------------------------------------------------------------

#[derive(Serialize)]
struct RunReport<'a> {
    params: &'a ProtocolParams,
    outcome_probability: f64,
    fidelity: f64,
    useful_probability: f64,
    branches: &'a [Branch],
    #[serde(skip_serializing_if = "Option::is_none")]
    readout_fidelity: Option<f64>,
}

const RUN_KEYS: &[&str] = &[
    "b",
    "k",
    "gt",
    "variant",
    "encoding",
    "truncation",
    "bob-readout",
    "out",
    "format",
];

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let cfg = match &args.config {
        Some(path) => load_config(path, RUN_KEYS)?,
        None => HashMap::new(),
    };
    let mut params = ProtocolParams::default();
    if let Some(v) = cfg.get("b") {
        params.b = parse_num("b", v)?;
    }
    if let Some(v) = cfg.get("k") {
        params.k = parse_num("k", v)?;
    }
    if let Some(v) = cfg.get("gt") {
        params.pulse_area = parse_num("gt", v)?;
    }
    if let Some(v) = cfg.get("variant") {
        params.variant = parse_variant(v)?;
    }
    if let Some(v) = cfg.get("encoding") {
        params.encoding = parse_encoding(v)?;
    }
    if let Some(v) = cfg.get("truncation") {
        params.truncation = parse_num("truncation", v)?;
    }
    if let Some(v) = cfg.get("bob-readout") {
        params.bob_readout = parse_num("bob-readout", v)?;
    }
    if let Some(b) = args.b {
        params.b = b;
    }
    if let Some(k) = args.k {
        params.k = k;
    }
    if let Some(gt) = args.gt {
        params.pulse_area = gt;
    }
    if let Some(v) = &args.variant {
        params.variant = parse_variant(v)?;
    }
    if let Some(v) = &args.encoding {
        params.encoding = parse_encoding(v)?;
    }
    if let Some(t) = args.truncation {
        params.truncation = t;
    }
    if let Some(r) = args.bob_readout {
        params.bob_readout = r;
    }
    let out = args.out.clone().or_else(|| cfg.get("out").map(PathBuf::from));
    let format = args
        .format
        .clone()
        .or_else(|| cfg.get("format").cloned())
        .unwrap_or_else(|| "text".into());
    let format = parse_format(&format, false)?;

    let result = run_swap(&params)?;
    let readout_fidelity = match &result.bob_state {
        Some(state) => Some(state.fidelity_against_pure(&readout_pair_target()?)?),
        None => None,
    };
    let report = RunReport {
        params: &result.params,
        outcome_probability: result.outcome_probability,
        fidelity: result.fidelity,
        useful_probability: result.useful_probability,
        branches: &result.branches,
        readout_fidelity,
    };

    match format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Io(e.to_string()))?;
            println!("{text}");
        }
        _ => print!("{}", render_run_text(&result, readout_fidelity)),
    }
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Io(e.to_string()))?;
        write_file(&path, format!("{text}\n").as_bytes())?;
    }
    Ok(())
}

fn render_run_text(result: &ProtocolResult, readout_fidelity: Option<f64>) -> String {
    let p = &result.params;
    let mut text = String::new();
    text.push_str("entanglement swap\n");
    text.push_str(&format!("  variant              {}\n", p.variant));
    text.push_str(&format!("  encoding             {}\n", p.encoding));
    text.push_str(&format!("  b                    {:.6}\n", p.b));
    text.push_str(&format!("  k                    {:.6}\n", p.k));
    text.push_str(&format!("  pulse area (gt)      {:.6}\n", p.pulse_area));
    text.push_str(&format!("  truncation           {}\n", p.truncation));
    text.push('\n');
    text.push_str(&format!(
        "  outcome probability  {:.6}\n",
        result.outcome_probability
    ));
    text.push_str(&format!("  fidelity             {:.6}\n", result.fidelity));
    text.push_str(&format!(
        "  useful probability   {:.6}\n",
        result.useful_probability
    ));
    if let Some(f) = readout_fidelity {
        text.push_str(&format!("  readout fidelity     {f:.6}\n"));
    }
    text.push('\n');
    text.push_str("  branches of the post-selected outcome\n");
    let width = result
        .branches
        .iter()
        .map(|b| b.label.len())
        .max()
        .unwrap_or(0);
    for branch in &result.branches {
        text.push_str(&format!(
            "    {:width$}   weight {:.6}   overlap {:.6}\n",
            branch.label, branch.weight, branch.target_overlap
        ));
    }
    text
}

// --- sweep ------------------------------------------------------------

const SWEEP_KEYS: &[&str] = &[
    "b-range",
    "k-range",
    "gt-range",
    "variant",
    "encoding",
    "truncation",
    "out",
    "format",
    "plot",
];

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = match &args.config {
        Some(path) => load_config(path, SWEEP_KEYS)?,
        None => HashMap::new(),
    };
    let mut config = SweepConfig::default();
    if let Some(v) = cfg.get("b-range") {
        config.b = parse_range("b-range", v)?;
    }
    if let Some(v) = cfg.get("k-range") {
        config.k = parse_range("k-range", v)?;
    }
    if let Some(v) = cfg.get("gt-range") {
        config.gt = parse_range("gt-range", v)?;
    }
    if let Some(v) = cfg.get("variant") {
        config.variant = parse_variant(v)?;
    }
    if let Some(v) = cfg.get("encoding") {
        config.encoding = parse_encoding(v)?;
    }
    if let Some(v) = cfg.get("truncation") {
        config.truncation = parse_num("truncation", v)?;
    }
    if let Some(v) = &args.b_range {
        config.b = parse_range("b-range", v)?;
    }
    if let Some(v) = &args.k_range {
        config.k = parse_range("k-range", v)?;
    }
    if let Some(v) = &args.gt_range {
        config.gt = parse_range("gt-range", v)?;
    }
    if let Some(v) = &args.variant {
        config.variant = parse_variant(v)?;
    }
    if let Some(v) = &args.encoding {
        config.encoding = parse_encoding(v)?;
    }
    if let Some(t) = args.truncation {
        config.truncation = t;
    }
    let out = args.out.clone().or_else(|| cfg.get("out").map(PathBuf::from));
    let plot = args.plot.clone().or_else(|| cfg.get("plot").map(PathBuf::from));
    let format = args
        .format
        .clone()
        .or_else(|| cfg.get("format").cloned())
        .unwrap_or_else(|| "csv".into());
    let format = parse_format(&format, true)?;

    let records = sweep(&config)?;
    let mut bytes = Vec::new();
    match format {
        OutputFormat::Json => write_json(&mut bytes, &records),
        _ => write_csv(&mut bytes, &records),
    }
    .map_err(|e| CliError::Io(e.to_string()))?;

    match &out {
        Some(path) => {
            write_file(path, &bytes)?;
            println!("wrote {} records to {}", records.len(), path.display());
        }
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
        }
    }
    if let Some(path) = &plot {
        write_file(path, fidelity_plot_svg(&records).as_bytes())?;
        println!("wrote plot to {}", path.display());
    }
    Ok(())
}

// --- verify -----------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    if let Some(t) = args.tolerance {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Invalid(format!(
                "tolerance must be positive and finite, got {t}"
            )));
        }
    }
    let format = args.format.clone().unwrap_or_else(|| "text".into());
    let format = parse_format(&format, false)?;
    let checks = run_checks(args.tolerance)?;
    match format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&checks)
                .map_err(|e| CliError::Io(e.to_string()))?;
            println!("{text}");
        }
        _ => print!("{}", render_checks_text(&checks)),
    }
    if all_pass(&checks) {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(
            checks.iter().filter(|c| !c.pass).count(),
        ))
    }
}

fn render_checks_text(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut text = String::new();
    for c in checks {
        text.push_str(&format!(
            "[{}] {:width$}   deviation {:.3e}   tolerance {:.1e}\n",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.deviation,
            c.tolerance
        ));
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    text.push_str(&format!(
        "{} checks: {} passed, {} failed\n",
        checks.len(),
        checks.len() - failed,
        failed
    ));
    text
}

// --- timing -----------------------------------------------------------

fn cmd_timing(args: TimingArgs) -> Result<(), CliError> {
    let format = args.format.clone().unwrap_or_else(|| "text".into());
    let format = parse_format(&format, false)?;
    let budget = timing_budget(
        args.coupling.unwrap_or(DEFAULT_COUPLING),
        args.radiative_lifetime.unwrap_or(DEFAULT_RADIATIVE_LIFETIME),
        args.cavity_lifetime.unwrap_or(DEFAULT_CAVITY_LIFETIME),
        args.budget_factor.unwrap_or(DEFAULT_BUDGET_FACTOR),
    )?;
    match format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&budget)
                .map_err(|e| CliError::Io(e.to_string()))?;
            println!("{text}");
        }
        _ => print!("{}", render_timing_text(&budget)),
    }
    Ok(())
}

fn render_timing_text(t: &TimingBudget) -> String {
    let mut text = String::new();
    text.push_str("pulse-time budget\n");
    text.push_str(&format!(
        "  coupling g           {:.6e} rad/s\n",
        t.coupling_rad_per_s
    ));
    text.push_str(&format!(
        "  interaction time     {:.6e} s\n",
        t.interaction_time_s
    ));
    text.push_str(&format!(
        "  {:<21}{:.6e} s\n",
        format!("total time (x{:.1})", t.budget_factor),
        t.total_time_s
    ));
    text.push_str(&format!(
        "  radiative lifetime   {:.6e} s\n",
        t.radiative_lifetime_s
    ));
    text.push_str(&format!(
        "  cavity lifetime      {:.6e} s\n",
        t.cavity_lifetime_s
    ));
    text.push_str(&format!(
        "  feasible             {}\n",
        if t.feasible { "yes" } else { "no" }
    ));
    text
}
