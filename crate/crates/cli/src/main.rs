//! Command-line surface for the programming-scheme toolkit.
//!
//! Subcommands: `capacity`, `delay`, `optimize`, `sweep`, `simulate`, and
//! `oracle` (Blahut-Arimoto and solver-vs-grid cross checks). All output is
//! machine readable (JSON or CSV) and deterministic for fixed flags.
//!
//! Exit codes: 0 success, 2 domain error, 3 numeric failure, 4 cross-check
//! counterexample.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use progcell_core::channels::{
    BinaryChannelKind, Channel, ChannelModel, ChannelSequence, RetryCount,
};
use progcell_core::optimizer::{
    qmark_threshold, solve_f1, solve_f1_z, solve_f2, solve_f3, z_alpha_star, OptResult,
};
use progcell_core::oracle::{
    blahut_arimoto, grid_cross_check, simulate_slice, CrossCheckCase, DmcMatrix, GridSpec,
    SimTotals,
};
use progcell_core::schemes::{
    normalized_capacity, scheme_capacity, scheme_delay, DelayBudget, Scheme,
};
use progcell_core::Error as CoreError;

use output::{fmt_sig, Csv};

const SEED_ENV: &str = "PROGCELL_SEED";

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    /// Invalid input or parameters outside their domain (exit 2).
    Domain(String),
    /// A numeric method failed: no root, no convergence (exit 3).
    Numeric(String),
    /// A grid point beat a solver (exit 4).
    Counterexample(String),
    /// I/O failure (exit 1).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Counterexample(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Domain(m)
            | CliError::Numeric(m)
            | CliError::Counterexample(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NoRoot(_) | CoreError::NonConvergence { .. } => {
                CliError::Numeric(e.to_string())
            }
            CoreError::Counterexample { .. } => CliError::Counterexample(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn domain(msg: impl Into<String>) -> CliError {
    CliError::Domain(msg.into())
}

type CliResult<T> = Result<T, CliError>;

// ---------------------------------------------------------------------------
// Argument shapes
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "progcell",
    version,
    about = "Capacity and delay analysis for iterative programming of noisy memory cells"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity (bits per cell) of a retry strategy or mixture scheme.
    Capacity(EvalArgs),
    /// Expected programming attempts per cell.
    Delay(EvalArgs),
    /// Solve a delay-constrained capacity problem (f1, f1z, f2, f3).
    Optimize(OptimizeArgs),
    /// Emit CSV curves: figure presets or single-variable sweeps.
    Sweep(SweepArgs),
    /// Seeded Monte Carlo run of a programming scheme.
    Simulate(SimulateArgs),
    /// Independent checks: Blahut-Arimoto capacity and solver-vs-grid cross checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelKind {
    Bsc,
    Bec,
    Z,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    F1,
    F1z,
    F2,
    F3,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ChannelArgs {
    /// Channel kind (bsc, bec, z). With --seq it names the sequence kind.
    #[arg(long = "channel", value_enum)]
    channel: Option<ChannelKind>,
    /// Per-attempt error probability.
    #[arg(long = "p")]
    p: Option<f64>,
    /// Attempt-indexed error probabilities: "p1,p2,...;tail" (or a bare tail).
    #[arg(long = "seq")]
    seq: Option<String>,
}

impl ChannelArgs {
    fn model(&self) -> CliResult<ChannelModel> {
        match (&self.seq, self.channel, self.p) {
            (Some(spec), kind, None) => {
                let kind = match kind {
                    Some(ChannelKind::Bsc) => BinaryChannelKind::Bsc,
                    Some(ChannelKind::Bec) | None => BinaryChannelKind::Bec,
                    Some(ChannelKind::Z) => {
                        return Err(domain("sequences cover bsc and bec kinds only"))
                    }
                };
                Ok(ChannelModel::Sequence(parse_sequence(kind, spec)?))
            }
            (Some(_), _, Some(_)) => Err(domain("--seq and --p are mutually exclusive")),
            (None, Some(kind), Some(p)) => {
                let ch = match kind {
                    ChannelKind::Bsc => Channel::bsc(p)?,
                    ChannelKind::Bec => Channel::bec(p)?,
                    ChannelKind::Z => Channel::z(p)?,
                };
                Ok(ChannelModel::Fixed(ch))
            }
            _ => Err(domain("a channel needs --channel and --p, or --seq")),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Retry count: attempts per cell, -1 for retry-until-success.
    #[arg(long = "t", allow_hyphen_values = true)]
    t: Option<i64>,
    /// Fraction of ones in the codewords (Z channel).
    #[arg(long = "alpha")]
    alpha: Option<f64>,
    /// Final-attempt write probability (combined model over the BSC).
    #[arg(long = "q")]
    q: Option<f64>,
    /// Mixture scheme as JSON: {"parts":[{"beta":...,"t":...}]}.
    #[arg(long = "scheme", conflicts_with = "t")]
    scheme: Option<String>,
    #[arg(long = "format", value_enum, default_value = "json")]
    format: Format,
}

impl EvalArgs {
    fn scheme(&self) -> CliResult<Scheme> {
        match (&self.scheme, self.t) {
            (Some(json), None) => parse_scheme(json),
            (None, Some(t)) => {
                let t = RetryCount::from_signed(t)?;
                Ok(match (self.alpha, self.q) {
                    (Some(a), None) => Scheme::single_z(t, a),
                    (None, Some(q)) => Scheme::single_combined(t, q),
                    (None, None) => Scheme::single(t),
                    (Some(_), Some(_)) => {
                        return Err(domain("--alpha and --q are mutually exclusive"))
                    }
                })
            }
            _ => Err(domain("exactly one of --t or --scheme is required")),
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long = "problem", value_enum)]
    problem: Problem,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Average delay budget (attempts per cell).
    #[arg(long = "D")]
    avg_delay: f64,
    /// Maximum delay cap; -1 for uncapped.
    #[arg(long = "T", allow_hyphen_values = true)]
    max_delay: i64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Figure1,
    Figure2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepVariable {
    P,
    T,
    D,
    Q,
}

#[derive(Args)]
struct SweepArgs {
    /// Canned curve: figure1 (Z-channel normalized capacities) or figure2
    /// (marking threshold).
    #[arg(long = "preset", value_enum)]
    preset: Option<Preset>,
    /// Variable of a generic sweep.
    #[arg(long = "variable", value_enum, conflicts_with = "preset")]
    variable: Option<SweepVariable>,
    #[arg(long = "start", allow_hyphen_values = true)]
    start: Option<f64>,
    #[arg(long = "stop", allow_hyphen_values = true)]
    stop: Option<f64>,
    #[arg(long = "step")]
    step: Option<f64>,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Fixed retry count for p/q sweeps.
    #[arg(long = "t", allow_hyphen_values = true)]
    t: Option<i64>,
    /// Fixed fraction of ones (Z channel).
    #[arg(long = "alpha")]
    alpha: Option<f64>,
    /// Fixed final-attempt write probability.
    #[arg(long = "q")]
    q: Option<f64>,
    /// Problem solved per grid point in a D sweep.
    #[arg(long = "problem", value_enum)]
    problem: Option<Problem>,
    /// Fixed average delay budget.
    #[arg(long = "D")]
    avg_delay: Option<f64>,
    /// Fixed maximum delay cap.
    #[arg(long = "T", allow_hyphen_values = true)]
    max_delay: Option<i64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Mixture scheme as JSON.
    #[arg(long = "scheme")]
    scheme: String,
    /// Number of cells.
    #[arg(long = "n")]
    n_cells: u64,
    /// RNG seed; falls back to PROGCELL_SEED, then 0.
    #[arg(long = "seed")]
    seed: Option<u64>,
    /// Worker threads; the report is bit-identical for any count.
    #[arg(long = "workers", default_value_t = 1)]
    workers: u32,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Blahut-Arimoto capacity of a transition matrix.
    Ba(BaArgs),
    /// Replay a solver against an exhaustive truncated-strategy grid.
    Cross(CrossArgs),
}

#[derive(Args)]
struct BaArgs {
    /// Named matrix: identity2, identity3, identity4, bsc, bec, z
    /// (channel names need --p and take --t, default 1).
    #[arg(long = "matrix")]
    matrix: Option<String>,
    /// Matrix as JSON rows: [[0.9,0.1],[0.1,0.9]].
    #[arg(long = "matrix-json", conflicts_with = "matrix")]
    matrix_json: Option<String>,
    #[arg(long = "p")]
    p: Option<f64>,
    #[arg(long = "t", allow_hyphen_values = true, default_value_t = 1)]
    t: i64,
    #[arg(long = "tol", default_value_t = 1e-9)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 100_000)]
    max_iter: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridChoice {
    Default,
    Fine,
}

#[derive(Args)]
struct CrossArgs {
    #[arg(long = "problem", value_enum)]
    problem: Problem,
    #[arg(long = "grid", value_enum, default_value = "default")]
    grid: GridChoice,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Average delay budget for a single-case check.
    #[arg(long = "D")]
    avg_delay: Option<f64>,
    /// Maximum delay cap for a single-case check.
    #[arg(long = "T", allow_hyphen_values = true)]
    max_delay: Option<i64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long = "out")]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

fn parse_scheme(json: &str) -> CliResult<Scheme> {
    serde_json::from_str(json).map_err(|e| domain(format!("invalid scheme JSON: {e}")))
}

fn parse_sequence(kind: BinaryChannelKind, spec: &str) -> CliResult<ChannelSequence> {
    let bad = |what: &str| domain(format!("invalid sequence '{spec}': {what}"));
    let (prefix_part, tail_part) = match spec.split_once(';') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => ("", spec.trim()),
    };
    let mut prefix = Vec::new();
    if !prefix_part.is_empty() {
        for item in prefix_part.split(',') {
            prefix.push(
                item.trim()
                    .parse::<f64>()
                    .map_err(|_| bad("prefix entries must be numbers"))?,
            );
        }
    }
    let tail = tail_part
        .parse::<f64>()
        .map_err(|_| bad("the tail must be a number"))?;
    Ok(ChannelSequence::new(kind, prefix, tail)?)
}

fn budget_from(avg: f64, max: i64) -> CliResult<DelayBudget> {
    Ok(DelayBudget::new(avg, RetryCount::from_signed(max)?)?)
}

fn print_value(value: f64, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::json!({ "value": value })),
        Format::Csv => println!("{}", fmt_sig(value)),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

// ---------------------------------------------------------------------------
// Command handlers
// ---------------------------------------------------------------------------

fn cmd_capacity(args: &EvalArgs) -> CliResult<()> {
    let model = args.channel.model()?;
    let scheme = args.scheme()?;
    print_value(scheme_capacity(&scheme, &model)?, args.format);
    Ok(())
}

fn cmd_delay(args: &EvalArgs) -> CliResult<()> {
    let model = args.channel.model()?;
    let scheme = args.scheme()?;
    print_value(scheme_delay(&scheme, &model)?, args.format);
    Ok(())
}

fn cmd_optimize(args: &OptimizeArgs) -> CliResult<()> {
    let budget = budget_from(args.avg_delay, args.max_delay)?;
    let result: OptResult = match args.problem {
        Problem::F1 => {
            let model = args.channel.model()?;
            match model {
                ChannelModel::Fixed(ref ch) => solve_f1(ch, budget)?,
                ChannelModel::Sequence(_) => {
                    return Err(domain(
                        "--problem f1 takes a fixed channel; use f2 for sequences",
                    ))
                }
            }
        }
        Problem::F1z => {
            let p = args
                .channel
                .p
                .ok_or_else(|| domain("--problem f1z needs --p"))?;
            solve_f1_z(p, budget)?
        }
        Problem::F2 => {
            let model = args.channel.model()?;
            match model {
                ChannelModel::Sequence(ref seq) => solve_f2(seq, budget)?,
                ChannelModel::Fixed(_) => {
                    return Err(domain(
                        "--problem f2 needs --seq (use f1 for fixed channels)",
                    ))
                }
            }
        }
        Problem::F3 => {
            let p = args
                .channel
                .p
                .ok_or_else(|| domain("--problem f3 needs --p"))?;
            solve_f3(p, budget)?
        }
    };
    print_json(&result)
}

fn sweep_grid(start: f64, stop: f64, step: f64) -> CliResult<Vec<f64>> {
    if step.is_nan() || step <= 0.0 {
        return Err(domain("--step must be positive"));
    }
    if start > stop {
        return Err(domain("--start must not exceed --stop"));
    }
    let mut grid = Vec::new();
    let mut i = 0u64;
    loop {
        let x = start + step * i as f64;
        if x > stop + step * 1e-9 {
            break;
        }
        grid.push(x);
        i += 1;
    }
    Ok(grid)
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    if let Some(preset) = args.preset {
        let csv = match preset {
            Preset::Figure1 => {
                let mut csv = Csv::new("p,t,normcap,baseline");
                for i in 1..=99u32 {
                    let p = f64::from(i) * 0.01;
                    let baseline = 1.0 - p;
                    for t in [-1i64, 1, 2, 3, 4] {
                        let t = RetryCount::from_signed(t)?;
                        let nc = z_alpha_star(p, t)?.normalized_capacity;
                        csv.row(&[fmt_sig(p), t.to_string(), fmt_sig(nc), fmt_sig(baseline)]);
                    }
                }
                csv
            }
            Preset::Figure2 => {
                let mut csv = Csv::new("p,t_p");
                for i in 2..=98u32 {
                    let p = f64::from(i) * 0.005;
                    csv.row(&[fmt_sig(p), fmt_sig(qmark_threshold(p)?)]);
                }
                csv
            }
        };
        return Ok(csv.write(args.out.as_deref())?);
    }

    let variable = args
        .variable
        .ok_or_else(|| domain("sweep needs --preset or --variable"))?;
    let (start, stop, step) = match (args.start, args.stop, args.step) {
        (Some(a), Some(b), Some(s)) => (a, b, s),
        _ => return Err(domain("generic sweeps need --start, --stop, and --step")),
    };
    let grid = sweep_grid(start, stop, step)?;

    let csv = match variable {
        SweepVariable::P => {
            let kind = args
                .channel
                .channel
                .ok_or_else(|| domain("a p sweep needs --channel"))?;
            let t = RetryCount::from_signed(args.t.ok_or_else(|| domain("a p sweep needs --t"))?)?;
            let mut csv = Csv::new("p,capacity,delay,normcap");
            for &p in &grid {
                let model = ChannelModel::Fixed(match kind {
                    ChannelKind::Bsc => Channel::bsc(p)?,
                    ChannelKind::Bec => Channel::bec(p)?,
                    ChannelKind::Z => Channel::z(p)?,
                });
                let scheme = match (kind, args.alpha, args.q) {
                    (ChannelKind::Z, Some(a), None) => Scheme::single_z(t, a),
                    (ChannelKind::Z, None, _) => {
                        return Err(domain("a Z-channel sweep needs --alpha"))
                    }
                    (_, None, Some(q)) => Scheme::single_combined(t, q),
                    (_, None, None) => Scheme::single(t),
                    (_, Some(_), _) => return Err(domain("--alpha applies to the Z channel only")),
                };
                csv.row(&[
                    fmt_sig(p),
                    fmt_sig(scheme_capacity(&scheme, &model)?),
                    fmt_sig(scheme_delay(&scheme, &model)?),
                    fmt_sig(normalized_capacity(&scheme, &model)?),
                ]);
            }
            csv
        }
        SweepVariable::T => {
            let model = args.channel.model()?;
            let mut csv = Csv::new("t,capacity,delay,normcap");
            for &x in &grid {
                let t = RetryCount::from_signed(x.round() as i64)?;
                let scheme = match (args.alpha, args.q) {
                    (Some(a), None) => Scheme::single_z(t, a),
                    (None, Some(q)) => Scheme::single_combined(t, q),
                    (None, None) => Scheme::single(t),
                    _ => return Err(domain("--alpha and --q are mutually exclusive")),
                };
                csv.row(&[
                    t.to_string(),
                    fmt_sig(scheme_capacity(&scheme, &model)?),
                    fmt_sig(scheme_delay(&scheme, &model)?),
                    fmt_sig(normalized_capacity(&scheme, &model)?),
                ]);
            }
            csv
        }
        SweepVariable::D => {
            let problem = args
                .problem
                .ok_or_else(|| domain("a D sweep needs --problem"))?;
            let t_cap = args
                .max_delay
                .ok_or_else(|| domain("a D sweep needs --T"))?;
            let mut csv = Csv::new("D,value");
            for &d in &grid {
                let budget = budget_from(d, t_cap)?;
                let value = match problem {
                    Problem::F1 => match args.channel.model()? {
                        ChannelModel::Fixed(ref ch) => solve_f1(ch, budget)?.value,
                        ChannelModel::Sequence(_) => {
                            return Err(domain("f1 takes a fixed channel"))
                        }
                    },
                    Problem::F1z => {
                        let p = args.channel.p.ok_or_else(|| domain("f1z needs --p"))?;
                        solve_f1_z(p, budget)?.value
                    }
                    Problem::F2 => match args.channel.model()? {
                        ChannelModel::Sequence(ref seq) => solve_f2(seq, budget)?.value,
                        ChannelModel::Fixed(_) => return Err(domain("f2 needs --seq")),
                    },
                    Problem::F3 => {
                        let p = args.channel.p.ok_or_else(|| domain("f3 needs --p"))?;
                        solve_f3(p, budget)?.value
                    }
                };
                csv.row(&[fmt_sig(d), fmt_sig(value)]);
            }
            csv
        }
        SweepVariable::Q => {
            let p = args
                .channel
                .p
                .ok_or_else(|| domain("a q sweep needs --p"))?;
            let t = args.t.ok_or_else(|| domain("a q sweep needs --t"))?;
            let t = u32::try_from(t).map_err(|_| domain("a q sweep needs a finite t >= 1"))?;
            let mut csv = Csv::new("q,capacity");
            for &q in &grid {
                csv.row(&[
                    fmt_sig(q),
                    fmt_sig(progcell_core::channels::combined_capacity(p, t, q)?),
                ]);
            }
            csv
        }
    };
    Ok(csv.write(args.out.as_deref())?)
}

fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| domain(format!("{SEED_ENV} must be an unsigned 64-bit integer"))),
        Err(_) => Ok(0),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let model = args.channel.model()?;
    let scheme = parse_scheme(&args.scheme)?;
    let seed = resolve_seed(args.seed)?;
    let n = args.n_cells;
    let workers = u64::from(args.workers.max(1));

    let totals = if workers == 1 {
        simulate_slice(&model, &scheme, n, seed, 0, n)?
    } else {
        let chunk = n.div_ceil(workers).max(1);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..workers {
                let first = w * chunk;
                let last = ((w + 1) * chunk).min(n);
                if first >= last {
                    break;
                }
                let (model, scheme) = (&model, &scheme);
                handles
                    .push(scope.spawn(move || simulate_slice(model, scheme, n, seed, first, last)));
            }
            handles
                .into_iter()
                .try_fold(SimTotals::default(), |acc, handle| {
                    handle
                        .join()
                        .expect("simulation worker panicked")
                        .map(|t| acc.merge(t))
                })
        })?
    };
    print_json(&totals.into_report(seed))
}

fn named_matrix(args: &BaArgs) -> CliResult<DmcMatrix> {
    if let Some(json) = &args.matrix_json {
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(json).map_err(|e| domain(format!("invalid matrix JSON: {e}")))?;
        return Ok(DmcMatrix::from_rows(rows)?);
    }
    let name = args
        .matrix
        .as_deref()
        .ok_or_else(|| domain("oracle ba needs --matrix or --matrix-json"))?;
    let channel_matrix = |ch: Channel| -> CliResult<DmcMatrix> {
        Ok(ch.transition_matrix(RetryCount::from_signed(args.t)?)?)
    };
    match name {
        "identity2" => Ok(DmcMatrix::identity(2)?),
        "identity3" => Ok(DmcMatrix::identity(3)?),
        "identity4" => Ok(DmcMatrix::identity(4)?),
        "bsc" | "bec" | "z" => {
            let p = args.p.ok_or_else(|| domain("channel matrices need --p"))?;
            channel_matrix(match name {
                "bsc" => Channel::bsc(p)?,
                "bec" => Channel::bec(p)?,
                _ => Channel::z(p)?,
            })
        }
        other => Err(domain(format!(
            "unknown matrix '{other}' (expected identity2/3/4, bsc, bec, z, or --matrix-json)"
        ))),
    }
}

fn cmd_oracle_ba(args: &BaArgs) -> CliResult<()> {
    let matrix = named_matrix(args)?;
    let result = blahut_arimoto(&matrix, args.tol, args.max_iter)?;
    print_json(&result)
}

fn cross_cases(args: &CrossArgs) -> CliResult<Vec<(String, CrossCheckCase)>> {
    let mut cases = Vec::new();
    let single = args.avg_delay.is_some() || args.max_delay.is_some();
    if single {
        let d = args
            .avg_delay
            .ok_or_else(|| domain("a single-case check needs --D"))?;
        let t = args
            .max_delay
            .ok_or_else(|| domain("a single-case check needs --T"))?;
        let budget = budget_from(d, t)?;
        let case = match args.problem {
            Problem::F1 => match args.channel.model()? {
                ChannelModel::Fixed(channel) => {
                    let label = format!("channel={} D={d} T={t}", channel_label(&channel));
                    (label, CrossCheckCase::F1 { channel, budget })
                }
                ChannelModel::Sequence(_) => return Err(domain("f1 takes a fixed channel")),
            },
            Problem::F1z => {
                let p = args.channel.p.ok_or_else(|| domain("f1z needs --p"))?;
                (
                    format!("p={p} D={d} T={t}"),
                    CrossCheckCase::F1Z { p, budget },
                )
            }
            Problem::F2 => match args.channel.model()? {
                ChannelModel::Sequence(sequence) => (
                    format!("seq={:?} D={d} T={t}", sequence.prefix()),
                    CrossCheckCase::F2 { sequence, budget },
                ),
                ChannelModel::Fixed(_) => return Err(domain("f2 needs --seq")),
            },
            Problem::F3 => {
                let p = args.channel.p.ok_or_else(|| domain("f3 needs --p"))?;
                (
                    format!("p={p} D={d} T={t}"),
                    CrossCheckCase::F3 { p, budget },
                )
            }
        };
        cases.push(case);
        return Ok(cases);
    }

    // Built-in parameter sweeps.
    match args.problem {
        Problem::F1 => {
            for kind in [ChannelKind::Bsc, ChannelKind::Bec] {
                let ps: &[f64] = match kind {
                    ChannelKind::Bsc => &[0.05, 0.15, 0.25, 0.35, 0.45],
                    _ => &[0.05, 0.25, 0.45, 0.65, 0.85],
                };
                for &p in ps {
                    for &d in &[0.5, 1.0, 2.0, 4.0] {
                        for &t in &[1i64, 2, 4, -1] {
                            let channel = match kind {
                                ChannelKind::Bsc => Channel::bsc(p)?,
                                _ => Channel::bec(p)?,
                            };
                            let label = format!("channel={} D={d} T={t}", channel_label(&channel));
                            cases.push((
                                label,
                                CrossCheckCase::F1 {
                                    channel,
                                    budget: budget_from(d, t)?,
                                },
                            ));
                        }
                    }
                }
            }
        }
        Problem::F1z => {
            for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                for &d in &[0.5, 1.0] {
                    cases.push((
                        format!("p={p} D={d} T=4"),
                        CrossCheckCase::F1Z {
                            p,
                            budget: budget_from(d, 4)?,
                        },
                    ));
                }
            }
        }
        Problem::F2 => {
            let sequences = [
                (
                    "bec-nonincreasing",
                    BinaryChannelKind::Bec,
                    vec![0.5, 0.25],
                    0.125,
                ),
                ("bec-general", BinaryChannelKind::Bec, vec![0.1, 0.9], 0.9),
                ("bsc", BinaryChannelKind::Bsc, vec![0.4, 0.2], 0.3),
            ];
            for (name, kind, prefix, tail) in sequences {
                for &d in &[0.5, 1.0, 2.0] {
                    for &t in &[1i64, 2, 4, -1] {
                        let sequence = ChannelSequence::new(kind, prefix.clone(), tail)?;
                        cases.push((
                            format!("seq={name} D={d} T={t}"),
                            CrossCheckCase::F2 {
                                sequence,
                                budget: budget_from(d, t)?,
                            },
                        ));
                    }
                }
            }
        }
        Problem::F3 => {
            for &p in &[0.05, 0.15, 0.25, 0.35, 0.45] {
                for &d in &[1.0, 2.0, 5.0] {
                    for t in 1..=4i64 {
                        cases.push((
                            format!("p={p} D={d} T={t}"),
                            CrossCheckCase::F3 {
                                p,
                                budget: budget_from(d, t)?,
                            },
                        ));
                    }
                }
            }
        }
    }
    Ok(cases)
}

fn channel_label(ch: &Channel) -> String {
    match ch {
        Channel::Bsc(p) => format!("bsc({p})"),
        Channel::Bec(p) => format!("bec({p})"),
        Channel::Z(p) => format!("z({p})"),
        Channel::GenericDmc(_) => "dmc".to_string(),
    }
}

fn cmd_oracle_cross(args: &CrossArgs) -> CliResult<()> {
    let grid = match args.grid {
        GridChoice::Default => GridSpec::default(),
        GridChoice::Fine => GridSpec {
            alpha_step: 2e-4,
            q_step: 0.01,
            mixture_weights: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            unbounded_t_cap: 60,
        },
    };
    let mut csv = Csv::new("problem,params,solver_value,best_grid_value,gap");
    let problem = match args.problem {
        Problem::F1 => "f1",
        Problem::F1z => "f1z",
        Problem::F2 => "f2",
        Problem::F3 => "f3",
    };
    for (label, case) in cross_cases(args)? {
        match grid_cross_check(&case, &grid, 1e-6) {
            Ok(report) => {
                csv.row(&[
                    problem.to_string(),
                    label,
                    fmt_sig(report.solver_value),
                    fmt_sig(report.best_grid_value),
                    fmt_sig(report.gap),
                ]);
            }
            Err(CoreError::Counterexample {
                description,
                solver_value,
                grid_value,
            }) => {
                csv.row(&[
                    problem.to_string(),
                    label.clone(),
                    fmt_sig(solver_value),
                    fmt_sig(grid_value),
                    fmt_sig(grid_value - solver_value),
                ]);
                csv.write(args.out.as_deref())?;
                return Err(CliError::Counterexample(format!(
                    "{label}: {description} reaches {grid_value} but the solver reports {solver_value}"
                )));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(csv.write(args.out.as_deref())?)
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Capacity(args) => cmd_capacity(args),
        Command::Delay(args) => cmd_delay(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Oracle(OracleCommand::Ba(args)) => cmd_oracle_ba(args),
        Command::Oracle(OracleCommand::Cross(args)) => cmd_oracle_cross(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
