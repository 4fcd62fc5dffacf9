//! Command-line front end for `sepmix`.
//!
//! [`execute`] parses an argument vector, runs one subcommand and returns the
//! exit code together with what would go to standard output and standard
//! error. The binary is a thin wrapper around it.

pub mod io;
pub mod report;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use sepmix::analysis::{self, format_ratio};
use sepmix::decompose::{
    decompose, ensemble_length_upper, ppt_min_eigenvalue, uhlmann_bounds_check, DecomposeOptions,
    DecomposeResult,
};
use sepmix::herm::{min_eigenvalue, sample_density, sample_pure};
use sepmix::mixing::mix;
use sepmix::rng::stream_rng;
use sepmix::{DensityMatrix, Ensemble, Model, SystemShape};

use io::{EnsembleFile, StateFile};
use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARGUMENT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_SEARCH_FAILED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Argument(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Argument(_) => EXIT_ARGUMENT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<sepmix::Error> for CliError {
    fn from(e: sepmix::Error) -> Self {
        use sepmix::Error as E;
        match e {
            E::InvalidArgument(_) | E::DimensionMismatch { .. } | E::Overflow(_) => CliError::Argument(e.to_string()),
            E::Construction(_) | E::Invariant(_) => CliError::Numerical(e.to_string()),
        }
    }
}

/// Comma-separated particle dimensions, e.g. `2,3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dims(pub Vec<usize>);

impl FromStr for Dims {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("invalid dimension `{t}`")))
            .collect::<Result<Vec<_>, _>>()
            .map(Dims)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "sepmix", version, about = "Mixing-function analysis of separable quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// `csv` is accepted by `rank-scan` only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for scans and restarts. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Include wall time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact ensemble-length thresholds for a shape.
    Thresholds(ShapeOnly),
    /// Rank of the differential at seeded random ensembles.
    RankScan(RankScanArgs),
    /// Explicit ensemble at which the differential is onto.
    Witness(WitnessArgs),
    /// Row-reduction check of the equal-dimension edge case; `--shape n,n`.
    DegenerateCheck(ShapeOnly),
    /// Search for a length-k product decomposition of a state.
    Decompose(DecomposeArgs),
    /// Smallest length at which the search succeeds.
    LengthUpper(LengthArgs),
    /// Draw a seeded random state.
    SampleState(SampleArgs),
    /// Mix an ensemble file into a state.
    Mix(MixArgs),
}

#[derive(Debug, Args)]
struct ShapeOnly {
    #[arg(long)]
    shape: Dims,
}

#[derive(Debug, Args)]
struct RankScanArgs {
    #[arg(long)]
    shape: Dims,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "general")]
    model: Model,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args)]
struct WitnessArgs {
    #[arg(long)]
    shape: Dims,
    #[arg(long)]
    k: usize,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// State file, or a report that carries a state.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "general")]
    model: Model,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args)]
struct LengthArgs {
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    shape: Dims,
    #[arg(long)]
    seed: u64,
    /// Mix `k` random product terms instead of drawing a global state.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "general")]
    model: Model,
}

#[derive(Debug, Args)]
struct MixArgs {
    /// Ensemble file, or a report that carries an ensemble.
    #[arg(long, visible_alias = "input")]
    ensemble: PathBuf,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    /// The JSON report on stdout, if there is one.
    pub fn report(&self) -> Option<Report> {
        serde_json::from_str(&self.stdout).ok()
    }
}

struct Done {
    report: Report,
    summary: String,
    code: i32,
}

pub fn execute<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: EXIT_ARGUMENT, stdout: String::new(), stderr: text },
            };
        }
    };
    let start = Instant::now();
    let done = match run(&cli) {
        Ok(d) => d,
        Err(e) => return Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n") },
    };
    let elapsed = start.elapsed().as_secs_f64();
    let Done { mut report, mut summary, code } = done;
    if cli.timing {
        report.wall_time = Some(elapsed);
    }
    let _ = writeln!(summary, "elapsed: {elapsed:.3} s");
    let stdout = match render(&cli, &report) {
        Ok(s) => s,
        Err(e) => return Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n") },
    };
    if let Some(path) = &cli.output {
        if let Err(e) = std::fs::write(path, &stdout) {
            return Outcome { code: EXIT_ARGUMENT, stdout, stderr: format!("error: cannot write {}: {e}\n", path.display()) };
        }
    }
    Outcome { code, stdout, stderr: summary }
}

fn render(cli: &Cli, report: &Report) -> Result<String, CliError> {
    match (cli.format, &report.payload) {
        (Format::Json, _) => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Numerical(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        (Format::Csv, Payload::RankScan(stats)) => {
            let mut s = String::from("sample,rank\n");
            for (i, r) in stats.ranks.iter().enumerate() {
                let _ = writeln!(s, "{i},{r}");
            }
            Ok(s)
        }
        (Format::Csv, _) => Err(CliError::Argument("--format csv is only available for rank-scan".into())),
    }
}

fn shape_of(d: &Dims) -> Result<SystemShape, CliError> {
    Ok(SystemShape::new(d.0.clone())?)
}

fn report(command: &str, parameters: Parameters, seed: Option<u64>, payload: Payload) -> Report {
    Report {
        command: command.to_string(),
        parameters,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        payload,
        wall_time: None,
    }
}

fn run(cli: &Cli) -> Result<Done, CliError> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::RankScan(_)) {
        return Err(CliError::Argument("--format csv is only available for rank-scan".into()));
    }
    if cli.threads == Some(0) {
        return Err(CliError::Argument("--threads must be at least 1".into()));
    }
    match &cli.command {
        Command::Thresholds(a) => run_thresholds(a),
        Command::RankScan(a) => run_rank_scan(a, cli.threads),
        Command::Witness(a) => run_witness(a),
        Command::DegenerateCheck(a) => run_degenerate(a),
        Command::Decompose(a) => run_decompose(a, cli.threads),
        Command::LengthUpper(a) => run_length(a, cli.threads),
        Command::SampleState(a) => run_sample(a),
        Command::Mix(a) => run_mix(a),
    }
}

fn run_thresholds(a: &ShapeOnly) -> Result<Done, CliError> {
    let shape = shape_of(&a.shape)?;
    let t = analysis::thresholds(&shape)?;
    let table = ThresholdTable {
        dims: shape.dims().to_vec(),
        total_dim: shape.total(),
        caratheodory: t.caratheodory,
        uhlmann_max_rank: t.uhlmann_max_rank,
        thm1_applicable: t.thm1_applicable,
        thm1_open_at: t.thm1_open_at,
        thm2_open_at: t.thm2_open_at,
        thm2_zero_below: format_ratio(&t.thm2_zero_below),
        thm3_zero_below: format_ratio(&t.thm3_zero_below),
        general_domain: Affine { slope: t.general_domain.slope, intercept: t.general_domain.intercept },
        pure_domain: Affine { slope: t.pure_domain.slope, intercept: t.pure_domain.intercept },
        codomain_dim: t.codomain_dim,
    };
    let mut summary = format!("shape {shape}: general lengths below {} and pure lengths below {} are measure zero\n", table.thm2_zero_below, table.thm3_zero_below);
    match table.thm1_open_at {
        Some(k) => {
            let _ = writeln!(summary, "sharp threshold {k}: open set from k = {k}");
        }
        None => {
            let _ = writeln!(summary, "open set from k = {} (sufficient, not sharp)", table.thm2_open_at);
        }
    }
    let params = Parameters { shape: Some(shape.dims().to_vec()), ..Default::default() };
    Ok(Done { report: report("thresholds", params, None, Payload::Thresholds(table)), summary, code: EXIT_OK })
}

fn run_rank_scan(a: &RankScanArgs, threads: Option<usize>) -> Result<Done, CliError> {
    let shape = shape_of(&a.shape)?;
    let s = analysis::criticality_scan(&shape, a.k, a.model, a.samples, a.seed, threads)?;
    let summary = format!(
        "rank of the differential over {} samples: min {}, max {}, codomain {}, full-rank fraction {}\n",
        s.samples, s.min_rank, s.max_rank, s.codomain_dim, s.full_rank_fraction
    );
    let params = Parameters {
        shape: Some(shape.dims().to_vec()),
        k: Some(a.k),
        model: Some(a.model.to_string()),
        samples: Some(a.samples),
        ..Default::default()
    };
    let stats = ScanStats {
        domain_dim: s.domain_dim,
        codomain_dim: s.codomain_dim,
        ranks: s.ranks,
        max_rank: s.max_rank,
        min_rank: s.min_rank,
        full_rank_fraction: s.full_rank_fraction,
    };
    Ok(Done { report: report("rank-scan", params, Some(a.seed), Payload::RankScan(stats)), summary, code: EXIT_OK })
}

fn run_witness(a: &WitnessArgs) -> Result<Done, CliError> {
    let shape = shape_of(&a.shape)?;
    let (ens, jac) = analysis::onto_witness(&shape, a.k)?;
    let ens = Ensemble::General(ens);
    let rho = mix(&ens)?;
    let codomain = jac.codomain_dim();
    let w = WitnessRank {
        rank: jac.rank,
        codomain_dim: codomain,
        domain_dim: jac.domain_dim(),
        onto: jac.is_onto(),
        smallest_singular_value: jac.singular_values.get(codomain - 1).copied().unwrap_or(0.0),
        ensemble: EnsembleFile::from_ensemble(&ens),
        state: StateFile::from_matrix(&shape, &rho),
    };
    let summary = format!("witness at k = {}: rank {} of {}\n", a.k, w.rank, codomain);
    let params = Parameters { shape: Some(shape.dims().to_vec()), k: Some(a.k), ..Default::default() };
    Ok(Done { report: report("witness", params, None, Payload::Witness(w)), summary, code: EXIT_OK })
}

fn run_degenerate(a: &ShapeOnly) -> Result<Done, CliError> {
    let n = match a.shape.0.as_slice() {
        [x, y] if x == y => *x,
        _ => return Err(CliError::Argument("degenerate-check needs --shape n,n".into())),
    };
    let r = analysis::degenerate_span_check(n)?;
    let stats = DegenerateStats {
        n: r.n,
        k: r.k,
        group_sizes: r.group_sizes,
        element_count: r.element_count,
        span_dim: r.span_dim,
        image_rank: r.image_rank,
        joint_rank: r.joint_rank,
        jacobian_rank: r.jacobian_rank,
        codomain_dim: r.codomain_dim,
        image_deviation: r.image_deviation,
        reduction_deviation: r.reduction_deviation,
        deficient: r.is_deficient(),
    };
    let summary = format!(
        "n = {n}, k = {}: {} reduced elements spanning {} of {} dimensions\n",
        r.k, r.element_count, r.span_dim, r.codomain_dim
    );
    let params = Parameters { shape: Some(vec![n, n]), k: Some(r.k), ..Default::default() };
    Ok(Done { report: report("degenerate-check", params, None, Payload::DegenerateCheck(stats)), summary, code: EXIT_OK })
}

fn read_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Argument(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Argument(format!("{} is not valid JSON: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<StateFile, CliError> {
    let v = read_json(path)?;
    if v.get("matrix").is_some() {
        return serde_json::from_value(v).map_err(|e| CliError::Argument(format!("bad state file: {e}")));
    }
    let r: Report = serde_json::from_value(v).map_err(|e| CliError::Argument(format!("neither a state file nor a report: {e}")))?;
    r.payload.state().cloned().ok_or_else(|| CliError::Argument("report carries no state".into()))
}

fn load_ensemble(path: &Path) -> Result<EnsembleFile, CliError> {
    let v = read_json(path)?;
    if v.get("weights").is_some() {
        return serde_json::from_value(v).map_err(|e| CliError::Argument(format!("bad ensemble file: {e}")));
    }
    let r: Report = serde_json::from_value(v).map_err(|e| CliError::Argument(format!("neither an ensemble file nor a report: {e}")))?;
    r.payload.ensemble().cloned().ok_or_else(|| CliError::Argument("report carries no ensemble".into()))
}

fn search_options(a: &SearchArgs, threads: Option<usize>) -> DecomposeOptions {
    DecomposeOptions {
        restarts: a.restarts,
        max_iterations: a.max_iters,
        tolerance: a.tol,
        seed: a.seed,
        workers: threads,
        ..Default::default()
    }
}

fn search_params(a: &SearchArgs, shape: &SystemShape, k: Option<usize>) -> Parameters {
    Parameters {
        shape: Some(shape.dims().to_vec()),
        k,
        model: Some(a.model.to_string()),
        restarts: Some(a.restarts),
        tol: Some(a.tol),
        max_iters: Some(a.max_iters),
        input: Some(a.input.display().to_string()),
        ..Default::default()
    }
}

const FAILURE_NOTE: &str = "search failure; this is not evidence of entanglement";

fn certificate(target: &DensityMatrix, shape: &SystemShape, res: &DecomposeResult, tol: f64) -> Result<Certificate, CliError> {
    let file = EnsembleFile::from_ensemble(&res.ensemble);
    // recompute from the serialized form, independently of the optimizer
    let remixed = mix(&file.to_ensemble()?)?;
    let remix_residual = remixed.sub(target).hs_norm();
    let k = res.ensemble.k();
    let uhlmann = if res.is_success() && res.ensemble.model() == Model::Pure {
        let u = uhlmann_bounds_check(target, k);
        if !u.lower_bound_holds {
            return Err(sepmix::Error::Invariant(format!("pure decomposition of length {k} below target rank {}", u.rank)).into());
        }
        Some(UhlmannFlags { rank: u.rank, found_len: u.found_len, lower_bound_holds: u.lower_bound_holds, above_optimum_bound: u.above_optimum_bound })
    } else {
        None
    };
    let message = if res.is_success() {
        match &uhlmann {
            Some(u) if u.above_optimum_bound => "decomposition found; above Uhlmann optimum bound, witness not optimal".to_string(),
            _ => "decomposition found".to_string(),
        }
    } else {
        format!("no decomposition found at length {k}; {FAILURE_NOTE}")
    };
    Ok(Certificate {
        status: if res.is_success() { "success" } else { "failure" }.to_string(),
        k,
        residual: res.residual,
        tolerance: tol,
        remix_residual,
        iterations: res.iterations,
        restart: res.restart,
        restarts_run: res.restarts_run,
        message,
        uhlmann,
        advisory_ppt_min_eigenvalue: ppt_min_eigenvalue(target, shape)?,
        ensemble: file,
    })
}

fn run_decompose(a: &DecomposeArgs, threads: Option<usize>) -> Result<Done, CliError> {
    let s = &a.search;
    let state = load_state(&s.input)?;
    let shape = state.shape()?;
    let target = state.density()?;
    let opts = search_options(s, threads);
    let res = decompose(&target, &shape, a.k, s.model, &opts)?;
    let cert = certificate(&target, &shape, &res, s.tol)?;
    let summary = format!("{}: residual {:e} after {} restarts\n", cert.message, cert.residual, cert.restarts_run);
    let code = if res.is_success() { EXIT_OK } else { EXIT_SEARCH_FAILED };
    let params = search_params(s, &shape, Some(a.k));
    Ok(Done { report: report("decompose", params, Some(s.seed), Payload::Decompose(cert)), summary, code })
}

fn run_length(a: &LengthArgs, threads: Option<usize>) -> Result<Done, CliError> {
    let s = &a.search;
    let state = load_state(&s.input)?;
    let shape = state.shape()?;
    let target = state.density()?;
    let opts = search_options(s, threads);
    let found = ensemble_length_upper(&target, &shape, s.model, &opts)?;
    let certificate = match &found.certificate {
        Some(res) => Some(certificate(&target, &shape, res, s.tol)?),
        None => None,
    };
    let n2 = shape.total() * shape.total();
    let message = match found.length {
        Some(k) => format!("{} model length at most {k}", s.model),
        None => format!("no decomposition found up to {n2} terms; {FAILURE_NOTE}"),
    };
    let est = LengthEstimate {
        length: found.length,
        target_rank: sepmix::herm::numerical_rank(target.as_matrix(), sepmix::herm::RANK_REL_TOL).rank,
        skipped_below: found.skipped_below,
        attempts: found.attempts.iter().map(|&(k, residual)| Attempt { k, residual }).collect(),
        message: message.clone(),
        advisory_ppt_min_eigenvalue: ppt_min_eigenvalue(&target, &shape)?,
        certificate,
    };
    let code = if found.length.is_some() { EXIT_OK } else { EXIT_SEARCH_FAILED };
    let params = search_params(s, &shape, None);
    Ok(Done { report: report("length-upper", params, Some(s.seed), Payload::LengthUpper(est)), summary: format!("{message}\n"), code })
}

fn run_sample(a: &SampleArgs) -> Result<Done, CliError> {
    let shape = shape_of(&a.shape)?;
    let mut rng = stream_rng(a.seed, 0);
    let (construction, rho, ensemble) = match a.k {
        None => match a.model {
            Model::General => ("hilbert-schmidt", sample_density(shape.total(), &mut rng), None),
            Model::Pure => ("pure", sample_pure(shape.total(), &mut rng), None),
        },
        Some(k) => {
            let ens = Ensemble::random(&shape, k, a.model, &mut rng)?;
            ("separable-mixture", mix(&ens)?, Some(EnsembleFile::from_ensemble(&ens)))
        }
    };
    let summary = format!("{construction} state on {shape}\n");
    let params = Parameters { shape: Some(shape.dims().to_vec()), k: a.k, model: Some(a.model.to_string()), ..Default::default() };
    let payload = Payload::SampleState(SampledState { construction: construction.to_string(), state: StateFile::from_matrix(&shape, &rho), ensemble });
    Ok(Done { report: report("sample-state", params, Some(a.seed), payload), summary, code: EXIT_OK })
}

fn run_mix(a: &MixArgs) -> Result<Done, CliError> {
    let file = load_ensemble(&a.ensemble)?;
    let ens = file.to_ensemble()?;
    let rho = mix(&ens)?;
    let out = MixedState {
        k: ens.k(),
        trace: rho.trace(),
        min_eigenvalue: min_eigenvalue(&rho),
        state: StateFile::from_matrix(ens.shape(), &rho),
    };
    let summary = format!("mixed {} terms on {}\n", out.k, ens.shape());
    let params = Parameters {
        shape: Some(ens.shape().dims().to_vec()),
        k: Some(ens.k()),
        model: Some(ens.model().to_string()),
        input: Some(a.ensemble.display().to_string()),
        ..Default::default()
    };
    Ok(Done { report: report("mix", params, None, Payload::Mix(out)), summary, code: EXIT_OK })
}
