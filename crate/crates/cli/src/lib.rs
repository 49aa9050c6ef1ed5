//! Command-line front end for [`schwarz1d`].
//!
//! Arguments are first normalized into a [`RunConfig`], which has a canonical
//! JSON form, and only then executed. Two runs with the same canonical config
//! produce byte-identical output.
//!
//! Exit codes: 0 success, 2 invalid input, 3 verification failure,
//! 4 not converged, 1 for I/O or internal failures.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use schwarz1d::analysis::{
    norm_via_ones, scalability_sweep, spectral_bound, spectral_radius, verify_all, AnalysisError,
    SpectralMethod, SpectralOptions, SweepOptions, DEFAULT_EIGEN_CAP, DEFAULT_MAX_ITERATIONS,
};
use schwarz1d::geometry::{Decomposition, GeometryError};
use schwarz1d::io::{
    checks_table, curve_table, dense_matrix_table, interface_vector_table, norms_table,
    read_endpoints_csv, sweep_table, trace_table, verification_json, Format, IoError, Table,
};
use schwarz1d::numerics::{Backend, Exact, NumericsError, Scalar, Value};
use schwarz1d::operator::{OperatorError, SchwarzOperator, DEFAULT_DENSE_CAP};
use schwarz1d::psm::{Initialization, PsmError, PsmTrace};

/// Default output directory when `--output` is absent or relative.
pub const OUTPUT_DIR_ENV: &str = "SCHWARZ1D_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NotConverged(_) => 4,
            CliError::Io(_) | CliError::Internal(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Invalid(_) => "invalid_input",
            CliError::NotConverged(_) => "not_converged",
            CliError::Io(_) => "io",
            CliError::Internal(_) => "internal",
        }
    }

    /// One-line JSON message for standard error.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<PsmError> for CliError {
    fn from(e: PsmError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            AnalysisError::EigenFailed => CliError::Internal(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Matrix,
    Iterate,
    Norms,
    Verify,
    Spectrum,
    Sweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_possible_value().expect("no skipped variants");
        f.write_str(s.get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

/// What `iterate` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    /// Endpoint values of every subdomain solution.
    #[default]
    Trace,
    /// Sampled subdomain solutions, ready for plotting.
    Curves,
    /// The interface vector `T^n e^0` at each step.
    Interface,
}

/// Initial error: `ones`, `zero`, `random:SEED` or `file:PATH`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitSpec {
    Ones,
    Zero,
    Random(u64),
    File(PathBuf),
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Ones => f.write_str("ones"),
            InitSpec::Zero => f.write_str("zero"),
            InitSpec::Random(seed) => write!(f, "random:{seed}"),
            InitSpec::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ones" => return Ok(InitSpec::Ones),
            "zero" => return Ok(InitSpec::Zero),
            _ => {}
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed
                .parse()
                .map(InitSpec::Random)
                .map_err(|_| format!("invalid seed `{seed}`"));
        }
        if let Some(path) = s.strip_prefix("file:") {
            if !path.is_empty() {
                return Ok(InitSpec::File(path.into()));
            }
        }
        Err(format!(
            "unknown initialization `{s}` (expected ones, zero, random:SEED or file:PATH)"
        ))
    }
}

impl TryFrom<String> for InitSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<InitSpec> for String {
    fn from(i: InitSpec) -> Self {
        i.to_string()
    }
}

/// Parses `N`, `LO:HI`, `LO:HI:STEP` (inclusive) or a comma-separated list.
pub fn parse_subdomains(s: &str) -> Result<Vec<usize>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid subdomain count `{t}` in `{s}`"))
    };
    let counts = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (lo, hi, step) = match parts.as_slice() {
            [lo, hi] => (num(lo)?, num(hi)?, 1),
            [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
            _ => {
                return Err(format!(
                    "invalid range `{s}` (expected LO:HI or LO:HI:STEP)"
                ))
            }
        };
        if step == 0 || lo > hi {
            return Err(format!("empty range `{s}`"));
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if counts.is_empty() {
        return Err("no subdomain counts given".into());
    }
    Ok(counts)
}

#[derive(Debug, Parser)]
#[command(
    name = "schwarz1d",
    version,
    about = "Parallel Schwarz iteration for the 1D Laplace error equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Write the dense 2N x 2N iteration matrix.
    Matrix(MatrixArgs),
    /// Run the Schwarz iteration from an initial error.
    Iterate(IterateArgs),
    /// Write ||T^n||_inf for n = 0..=n-max.
    Norms(CommonArgs),
    /// Run every exact check and write a verification report.
    Verify(VerifyArgs),
    /// Write the spectral radius of T next to its bound.
    Spectrum(SpectrumArgs),
    /// Count iterations to a tolerance over a range of N.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Subdomain count: N, LO:HI, LO:HI:STEP or A,B,C.
    #[arg(long = "n", value_name = "N")]
    pub subdomains: String,
    /// Subdomain length.
    #[arg(long, default_value = "1")]
    pub ell: String,
    /// Overlap width.
    #[arg(long, default_value = "1/4")]
    pub delta: String,
    /// Error tolerance for `sweep`.
    #[arg(long, default_value = "1/1000000")]
    pub tol: String,
    /// Last step (default 4N).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// exact or float; inferred from the inputs when omitted.
    #[arg(long)]
    pub backend: Option<Backend>,
    /// ones, zero, random:SEED or file:PATH.
    #[arg(long, default_value = "ones")]
    pub init: InitSpec,
    /// Output file; relative paths resolve against $SCHWARZ1D_OUTPUT_DIR.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
    /// Print the canonical run configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Largest matrix dimension 2N that will be assembled.
    #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
    pub max_dim: usize,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t)]
    pub emit: Emit,
    /// Points per subdomain for `--emit curves`.
    #[arg(long, default_value_t = 21)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of sampled (a, b, c, d) for the block relations.
    #[arg(long, default_value_t = 1000)]
    pub relation_samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Negate one generator entry (self-test of the checks).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Largest dimension for dense eigenvalues; larger N use ||T^n 1||^(1/n).
    #[arg(long, default_value_t = DEFAULT_EIGEN_CAP)]
    pub eigen_cap: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: usize,
}

/// Fully resolved run. Its JSON form is canonical: parsing it back yields an
/// equal config and the same JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub subdomains: Vec<usize>,
    pub ell: String,
    pub delta: String,
    pub tol: String,
    pub n_max: Option<usize>,
    pub backend: Backend,
    pub init: InitSpec,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub emit: Emit,
    pub samples: usize,
    pub seed: u64,
    pub relation_samples: usize,
    pub max_iterations: usize,
    pub eigen_cap: usize,
    pub max_dim: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inject_fault: bool,
}

/// Normalizes a numeric literal: rationals are reduced, decimals are kept
/// as written.
fn canonical_literal(flag: &str, s: &str) -> Result<(String, Backend), CliError> {
    let s = s.trim();
    match Value::parse(s) {
        Ok(Value::Exact(q)) => Ok((q.to_string(), Backend::Exact)),
        Ok(Value::Float(x)) if x.is_finite() => Ok((s.to_string(), Backend::Float)),
        _ => Err(CliError::Invalid(format!("--{flag}: invalid number `{s}`"))),
    }
}

impl RunConfig {
    /// Builds a config from parsed arguments. Warnings (such as a decimal
    /// input promoting the run to floats) are returned alongside.
    pub fn from_cli(
        cli: Cli,
        output_dir: Option<&Path>,
    ) -> Result<(RunConfig, Vec<String>, bool), CliError> {
        let mut cfg = RunConfig {
            command: Command::Norms,
            subdomains: Vec::new(),
            ell: String::new(),
            delta: String::new(),
            tol: String::new(),
            n_max: None,
            backend: Backend::Exact,
            init: InitSpec::Ones,
            output: None,
            format: OutputFormat::Csv,
            emit: Emit::Trace,
            samples: 21,
            seed: 7,
            relation_samples: 1000,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            eigen_cap: DEFAULT_EIGEN_CAP,
            max_dim: DEFAULT_DENSE_CAP,
            inject_fault: false,
        };
        let common = match cli.command {
            CliCommand::Matrix(a) => {
                cfg.command = Command::Matrix;
                cfg.max_dim = a.max_dim;
                a.common
            }
            CliCommand::Iterate(a) => {
                cfg.command = Command::Iterate;
                cfg.emit = a.emit;
                cfg.samples = a.samples;
                a.common
            }
            CliCommand::Norms(a) => a,
            CliCommand::Verify(a) => {
                cfg.command = Command::Verify;
                cfg.relation_samples = a.relation_samples;
                cfg.seed = a.seed;
                cfg.inject_fault = a.inject_fault;
                a.common
            }
            CliCommand::Spectrum(a) => {
                cfg.command = Command::Spectrum;
                cfg.eigen_cap = a.eigen_cap;
                a.common
            }
            CliCommand::Sweep(a) => {
                cfg.command = Command::Sweep;
                cfg.max_iterations = a.max_iterations;
                a.common
            }
        };
        cfg.subdomains = parse_subdomains(&common.subdomains).map_err(CliError::Invalid)?;
        cfg.n_max = common.n_max;
        cfg.init = common.init;
        cfg.format = common.format;
        cfg.output = match (common.output, output_dir) {
            (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
            (Some(p), _) => Some(p),
            (None, Some(dir)) => {
                Some(dir.join(format!("{}.{}", cfg.command, cfg.format.extension())))
            }
            (None, None) => None,
        };

        let mut warnings = Vec::new();
        let mut decimals = Vec::new();
        for (flag, raw, slot) in [
            ("ell", &common.ell, &mut cfg.ell),
            ("delta", &common.delta, &mut cfg.delta),
            ("tol", &common.tol, &mut cfg.tol),
        ] {
            let (lit, backend) = canonical_literal(flag, raw)?;
            if backend == Backend::Float {
                decimals.push(format!("--{flag} {lit}"));
            }
            *slot = lit;
        }
        cfg.backend = match common.backend {
            Some(Backend::Exact) if !decimals.is_empty() => {
                return Err(CliError::Invalid(format!(
                    "the exact backend needs rational inputs (p/q or integers), got {}",
                    decimals.join(", ")
                )))
            }
            Some(b) => b,
            None if decimals.is_empty() => Backend::Exact,
            None => {
                warnings.push(format!(
                    "decimal input ({}) selects the float backend; write p/q for exact arithmetic",
                    decimals.join(", ")
                ));
                Backend::Float
            }
        };
        cfg.validate()?;
        Ok((cfg, warnings, common.print_config))
    }

    /// Checks the constraints that do not depend on the geometry.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.subdomains.is_empty() {
            return Err(CliError::Invalid("no subdomain counts given".into()));
        }
        if self.backend == Backend::Exact {
            for (flag, lit) in [
                ("ell", &self.ell),
                ("delta", &self.delta),
                ("tol", &self.tol),
            ] {
                if !matches!(Value::parse(lit), Ok(Value::Exact(_))) {
                    return Err(CliError::Invalid(format!(
                        "the exact backend needs a rational --{flag}, got `{lit}`"
                    )));
                }
            }
        }
        if self.command == Command::Verify && self.backend != Backend::Exact {
            return Err(CliError::Invalid(
                "verify only runs on the exact backend; pass rational inputs (p/q) and --backend exact"
                    .into(),
            ));
        }
        let single = matches!(
            self.command,
            Command::Matrix | Command::Iterate | Command::Norms
        );
        if single && self.subdomains.len() != 1 {
            return Err(CliError::Invalid(format!(
                "{} takes a single N, got {}",
                self.command,
                self.subdomains.len()
            )));
        }
        Ok(())
    }

    pub fn to_canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_canonical(s: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(s).map_err(|e| CliError::Invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    VerificationFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::VerificationFailed => 3,
        }
    }
}

enum Rendered {
    Table(Table),
    Json(serde_json::Value),
}

/// Runs `cfg`, returning the output bytes. Diagnostics go to `diag`.
pub fn execute(cfg: &RunConfig, diag: &mut dyn Write) -> Result<(Vec<u8>, Status), CliError> {
    let (rendered, status) = match cfg.backend {
        Backend::Exact => execute_in::<Exact>(cfg, diag)?,
        Backend::Float => execute_in::<f64>(cfg, diag)?,
    };
    let mut out = Vec::new();
    match rendered {
        Rendered::Table(t) => t.write(cfg.format.into(), &mut out)?,
        Rendered::Json(j) => {
            serde_json::to_writer_pretty(&mut out, &j)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            out.push(b'\n');
        }
    }
    Ok((out, status))
}

fn scalar<S: Scalar>(lit: &str) -> Result<S, CliError> {
    Ok(Value::parse(lit)?.into_scalar::<S>()?)
}

fn with_leading_column(mut t: Table, name: &str, value: &str) -> Table {
    if let Some(h) = t.header.as_mut() {
        h.insert(0, name.into());
    }
    for row in &mut t.rows {
        row.insert(0, value.into());
    }
    t
}

fn append(target: &mut Option<Table>, t: Table) {
    match target {
        Some(acc) => acc.rows.extend(t.rows),
        None => *target = Some(t),
    }
}

fn execute_in<S: Scalar>(
    cfg: &RunConfig,
    diag: &mut dyn Write,
) -> Result<(Rendered, Status), CliError> {
    let ell: S = scalar(&cfg.ell)?;
    let delta: S = scalar(&cfg.delta)?;
    let decomposition = |n: usize| Decomposition::new(n, ell.clone(), delta.clone());
    let n_max = |n: usize| cfg.n_max.unwrap_or(4 * n);

    match cfg.command {
        Command::Matrix => {
            let n = cfg.subdomains[0];
            let op = SchwarzOperator::new(decomposition(n)?);
            let t = op.assemble_dense(cfg.max_dim)?;
            let sums = t.dense().row_sums();
            let min = sums
                .iter()
                .cloned()
                .reduce(|a, b| if b < a { b } else { a });
            let norm = t.dense().norm_inf();
            writeln!(
                diag,
                "N = {n}, dimension {}: row sums min {}, max {}",
                op.dim(),
                min.map(|m| m.to_literal()).unwrap_or_default(),
                norm.to_literal()
            )?;
            Ok((
                Rendered::Table(dense_matrix_table(t.dense())),
                Status::Success,
            ))
        }
        Command::Norms => {
            let n = cfg.subdomains[0];
            let op = SchwarzOperator::new(decomposition(n)?);
            Ok((
                Rendered::Table(norms_table(&norm_via_ones(&op, n_max(n)))),
                Status::Success,
            ))
        }
        Command::Iterate => {
            let n = cfg.subdomains[0];
            let d = decomposition(n)?;
            let init = match &cfg.init {
                InitSpec::Ones => Initialization::Ones,
                InitSpec::Zero => Initialization::Zero,
                InitSpec::Random(seed) => Initialization::Random { seed: *seed },
                InitSpec::File(path) => {
                    let file = File::open(path).map_err(|e| {
                        CliError::Invalid(format!("cannot read {}: {e}", path.display()))
                    })?;
                    Initialization::Endpoints(read_endpoints_csv::<S, _>(file)?)
                }
            };
            let trace = PsmTrace::run(&d, &init, n_max(n))?;
            let table = match cfg.emit {
                Emit::Trace => trace_table(&trace),
                Emit::Curves => {
                    if cfg.samples < 2 {
                        return Err(CliError::Invalid("--samples must be at least 2".into()));
                    }
                    curve_table(&trace, cfg.samples)
                }
                Emit::Interface => {
                    let mut acc = None;
                    for k in 0..trace.iterations().len() {
                        let t = interface_vector_table(&d, &trace.interface_vector(k));
                        append(&mut acc, with_leading_column(t, "n", &k.to_string()));
                    }
                    acc.expect("trace has at least the initial iterate")
                }
            };
            Ok((Rendered::Table(table), Status::Success))
        }
        Command::Verify => {
            let mut runs = Vec::new();
            for &n in &cfg.subdomains {
                let d = decomposition(n)?;
                let mut blocks = schwarz1d::operator::GeneratorBlocks::new(&d);
                if cfg.inject_fault {
                    blocks.t2_tilde[1][0] = -blocks.t2_tilde[1][0].clone();
                }
                let op = SchwarzOperator::from_parts(d.clone(), blocks);
                let checks = verify_all(&op, n_max(n), cfg.relation_samples, cfg.seed)?;
                for c in checks.iter().filter(|c| c.asserted && !c.pass) {
                    writeln!(
                        diag,
                        "FAIL N = {n} {}: {}",
                        c.name,
                        c.first_violation.as_deref().unwrap_or("")
                    )?;
                }
                runs.push((d, checks));
            }
            let report = verification_json(&runs);
            let status = if report["pass"] == json!(true) {
                Status::Success
            } else {
                Status::VerificationFailed
            };
            let rendered = match cfg.format {
                OutputFormat::Json => Rendered::Json(report),
                OutputFormat::Csv => {
                    let mut acc = None;
                    for (d, checks) in &runs {
                        let t = checks_table(checks);
                        append(
                            &mut acc,
                            with_leading_column(t, "N", &d.subdomains().to_string()),
                        );
                    }
                    Rendered::Table(acc.expect("at least one N"))
                }
            };
            Ok((rendered, status))
        }
        Command::Spectrum => {
            let options = SpectralOptions {
                dense_cap: cfg.eigen_cap,
                allow_fallback: true,
            };
            let mut t = Table {
                header: Some(
                    ["N", "ell", "delta", "rho", "method", "bound"]
                        .map(String::from)
                        .to_vec(),
                ),
                rows: Vec::new(),
            };
            for &n in &cfg.subdomains {
                let d = decomposition(n)?;
                let bound = spectral_bound(&d);
                let estimate = spectral_radius(&SchwarzOperator::new(d), options)?;
                let method = match estimate.method {
                    SpectralMethod::DenseEigen => "dense_eigen".to_string(),
                    SpectralMethod::Gelfand {
                        iterations,
                        converged,
                    } => {
                        if !converged {
                            writeln!(diag, "warning: N = {n}: power estimate not settled after {iterations} steps")?;
                        }
                        format!("gelfand_{iterations}")
                    }
                };
                t.rows.push(vec![
                    n.to_string(),
                    ell.to_literal(),
                    delta.to_literal(),
                    estimate.value.to_literal(),
                    method,
                    bound.to_literal(),
                ]);
            }
            Ok((Rendered::Table(t), Status::Success))
        }
        Command::Sweep => {
            let tol: S = scalar(&cfg.tol)?;
            let options = SweepOptions {
                max_iterations: cfg.max_iterations,
                ..SweepOptions::default()
            };
            let report = scalability_sweep(&cfg.subdomains, &ell, &delta, &tol, options)?;
            Ok((Rendered::Table(sweep_table(&report)), Status::Success))
        }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(bytes)?;
            w.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Entry point shared by the binary and tests.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let output_dir = std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let mut stderr = io::stderr().lock();
    let result =
        RunConfig::from_cli(cli, output_dir.as_deref()).and_then(|(cfg, warnings, print)| {
            for w in warnings {
                writeln!(stderr, "warning: {w}")?;
            }
            if print {
                write_output(None, format!("{}\n", cfg.to_canonical()).as_bytes())?;
                return Ok(Status::Success);
            }
            let (bytes, status) = execute(&cfg, &mut stderr)?;
            write_output(cfg.output.as_deref(), &bytes)?;
            Ok(status)
        });
    match result {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> Result<(RunConfig, Vec<String>, bool), CliError> {
        let mut full = vec!["schwarz1d"];
        full.extend_from_slice(args);
        RunConfig::from_cli(Cli::try_parse_from(full).expect("parses"), None)
    }

    #[test]
    fn subdomain_specs() {
        assert_eq!(parse_subdomains("6").unwrap(), vec![6]);
        assert_eq!(parse_subdomains("2:5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_subdomains("2:8:2").unwrap(), vec![2, 4, 6, 8]);
        assert_eq!(parse_subdomains("3,5, 9").unwrap(), vec![3, 5, 9]);
        assert!(parse_subdomains("5:2").is_err());
        assert!(parse_subdomains("2:8:0").is_err());
        assert!(parse_subdomains("x").is_err());
    }

    #[test]
    fn init_specs_round_trip() {
        for s in ["ones", "zero", "random:42", "file:data/e0.csv"] {
            assert_eq!(s.parse::<InitSpec>().unwrap().to_string(), s);
        }
        assert!("random:".parse::<InitSpec>().is_err());
        assert!("file:".parse::<InitSpec>().is_err());
        assert!("twos".parse::<InitSpec>().is_err());
    }

    #[test]
    fn canonical_form_is_stable() {
        let (cfg, _, _) =
            config(&["sweep", "--n", "2:8:2", "--delta", "2/8", "--tol", "1e-6"]).unwrap();
        assert_eq!(cfg.delta, "1/4");
        assert_eq!(cfg.backend, Backend::Float);
        let text = cfg.to_canonical();
        let back = RunConfig::from_canonical(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_canonical(), text);
    }

    #[test]
    fn backend_inference() {
        let (cfg, warnings, _) = config(&["norms", "--n", "4"]).unwrap();
        assert_eq!(cfg.backend, Backend::Exact);
        assert!(warnings.is_empty());

        let (cfg, warnings, _) = config(&["norms", "--n", "4", "--delta", "0.25"]).unwrap();
        assert_eq!(cfg.backend, Backend::Float);
        assert_eq!(warnings.len(), 1);

        let err =
            config(&["norms", "--n", "4", "--delta", "0.25", "--backend", "exact"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let err = config(&["verify", "--n", "4", "--backend", "float"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("exact"));
    }

    #[test]
    fn single_n_commands_reject_ranges() {
        assert_eq!(
            config(&["matrix", "--n", "2:4"]).unwrap_err().exit_code(),
            2
        );
        assert!(config(&["spectrum", "--n", "2:4"]).is_ok());
    }

    #[test]
    fn canonical_config_rejects_exact_decimals() {
        let (mut cfg, _, _) = config(&["norms", "--n", "4"]).unwrap();
        cfg.ell = "1.5".into();
        assert!(RunConfig::from_canonical(&cfg.to_canonical()).is_err());
    }

    #[test]
    fn output_directory_resolution() {
        let dir = Path::new("/tmp/out");
        let cli =
            Cli::try_parse_from(["schwarz1d", "norms", "--n", "4", "--format", "json"]).unwrap();
        let (cfg, _, _) = RunConfig::from_cli(cli, Some(dir)).unwrap();
        assert_eq!(cfg.output.unwrap(), dir.join("norms.json"));

        let cli = Cli::try_parse_from(["schwarz1d", "norms", "--n", "4", "-o", "a.csv"]).unwrap();
        let (cfg, _, _) = RunConfig::from_cli(cli, Some(dir)).unwrap();
        assert_eq!(cfg.output.unwrap(), dir.join("a.csv"));
    }

    #[test]
    fn norms_for_half_overlap() {
        let (cfg, _, _) = config(&["norms", "--n", "2", "--delta", "1/2", "--n-max", "3"]).unwrap();
        let (bytes, status) = execute(&cfg, &mut Vec::new()).unwrap();
        assert_eq!(status, Status::Success);
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "n,norm,ratio\n0,1,\n1,1/2,1/2\n2,1/4,1/2\n3,1/8,1/2\n"
        );
    }
}
