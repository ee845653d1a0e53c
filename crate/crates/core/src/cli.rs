//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or I/O errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baseline::{median_binarize, mine_binary};
use crate::data::{canonicalize_labels, load_dataset, ClassRatios};
use crate::eval::{
    benchmark, fwer_simulation, precision_recall, EvalReport, Method, MinerSummary, NullSpec,
};
use crate::miner::{mine, MinerOptions, MiningResult};
use crate::ranking::rank_matrix;
use crate::synth::{generate, SynthMetadata, SynthSpec};

pub const RESULT_SCHEMA: &str = "sigcomb.result/1";

#[derive(Debug, Parser)]
#[command(
    name = "sigcomb",
    version,
    about = "Significant feature combination mining on continuous data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mine a continuous CSV dataset with the copula-support miner.
    Mine(MineArgs),
    /// Median-binarize a CSV dataset and mine the binary features.
    Baseline(BaselineArgs),
    /// Generate a synthetic dataset plus a ground-truth sidecar.
    Synth(SynthArgs),
    /// Score a result file against a ground-truth sidecar.
    Eval(EvalArgs),
    /// Estimate the family-wise error rate on null data.
    Fwer(FwerArgs),
    /// Sweep N or n over synthetic data with both methods, emitting TSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct MinerArgs {
    /// Significance level in (0, 1).
    #[arg(long, value_parser = parse_alpha)]
    alpha: f64,
    /// Worker threads for the search.
    #[arg(long, env = "SIGCOMB_THREADS", default_value_t = 1)]
    threads: usize,
    /// Largest combination size to explore.
    #[arg(long)]
    max_order: Option<usize>,
    /// Log progress every this many visited nodes.
    #[arg(long)]
    progress: Option<u64>,
}

impl MinerArgs {
    fn options(&self) -> MinerOptions {
        MinerOptions {
            max_order: self.max_order,
            threads: self.threads.max(1),
            progress_interval: self.progress,
            record_trace: false,
        }
    }
}

#[derive(Debug, Args)]
struct MineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long)]
    out: PathBuf,
    /// Optional TSV dump of the rank matrix.
    #[arg(long)]
    rank_dump: Option<PathBuf>,
    #[command(flatten)]
    miner: MinerArgs,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV export of the binarized dataset.
    #[arg(long)]
    binary_out: Option<PathBuf>,
    #[command(flatten)]
    miner: MinerArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long = "N")]
    n_samples: usize,
    #[arg(long = "n")]
    n_features: usize,
    #[arg(long, default_value_t = 0.5)]
    r1: f64,
    #[arg(long, default_value_t = 0.2)]
    assoc_frac: f64,
    /// Defaults to sqrt(0.2).
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// CSV path; the sidecar goes next to it as `<stem>.truth.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Result JSON written by `mine` or `baseline`.
    #[arg(long)]
    result: PathBuf,
    /// Ground-truth sidecar written by `synth`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FwerArgs {
    #[arg(long = "N", default_value_t = 100)]
    n_samples: usize,
    #[arg(long = "n", default_value_t = 15)]
    n_features: usize,
    #[arg(long, default_value_t = 0.5)]
    r1: f64,
    #[arg(long, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SIGCOMB_THREADS", default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepAxis {
    #[value(name = "N")]
    Samples,
    #[value(name = "n")]
    Features,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Which parameter to sweep.
    #[arg(long, value_enum)]
    vary: SweepAxis,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    #[arg(long = "N", default_value_t = 200)]
    n_samples: usize,
    #[arg(long = "n", default_value_t = 20)]
    n_features: usize,
    #[arg(long, default_value_t = 0.5)]
    r1: f64,
    /// Datasets per configuration; seeds are `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TSV plot data.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON with the full per-run reports.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    miner: MinerArgs,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let alpha: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(format!("alpha must lie in (0, 1), got {alpha}"))
    }
}

/// One significant combination in a result file. Feature indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationRecord {
    pub features: Vec<usize>,
    pub feature_names: Vec<String>,
    pub eta: f64,
    pub eta1: f64,
    pub p_value: f64,
    pub min_p_value: f64,
}

/// Run diagnostics that vary between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub nodes_visited: u64,
    pub nodes_pruned: u64,
    pub runtime_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema: String,
    pub version: String,
    pub method: Method,
    pub input: String,
    pub label_column: String,
    pub labels_swapped: bool,
    pub alpha: f64,
    pub n_samples: usize,
    pub n_features: usize,
    pub r1: f64,
    pub max_order: Option<usize>,
    pub testable_count: usize,
    pub sigma_final: f64,
    pub psi_level: Option<f64>,
    pub delta: Option<f64>,
    pub significant: Vec<CombinationRecord>,
    pub stats: RunStats,
}

impl ResultFile {
    pub fn new(
        method: Method,
        input: &Path,
        label_column: &str,
        ratios: &ClassRatios,
        names: &[String],
        result: &MiningResult,
        opts: &MinerOptions,
    ) -> Self {
        let significant = result
            .significant
            .iter()
            .map(|s| CombinationRecord {
                features: s.combination.features.iter().map(|j| j + 1).collect(),
                feature_names: s
                    .combination
                    .features
                    .iter()
                    .map(|&j| names[j].clone())
                    .collect(),
                eta: s.combination.support,
                eta1: s.combination.support1,
                p_value: s.p_value,
                min_p_value: s.combination.min_p,
            })
            .collect();
        Self {
            schema: RESULT_SCHEMA.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            method,
            input: input.display().to_string(),
            label_column: label_column.to_string(),
            labels_swapped: ratios.swapped,
            alpha: result.alpha,
            n_samples: result.n_samples,
            n_features: result.n_features,
            r1: result.r1,
            max_order: opts.max_order,
            testable_count: result.correction_factor,
            sigma_final: result.sigma_final,
            psi_level: result.psi_level,
            delta: result.delta,
            significant,
            stats: RunStats {
                nodes_visited: result.stats.nodes_visited,
                nodes_pruned: result.stats.nodes_pruned,
                runtime_seconds: (result.stats.wall_time_seconds * 1e3).round() / 1e3,
                threads: opts.threads,
            },
        }
    }
}

/// One row of sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_id: usize,
    pub n_samples: usize,
    pub n_features: usize,
    pub r1: f64,
    pub seed: u64,
    pub report: EvalReport,
}

/// Tab-separated plot data, one row per (configuration, method). Precision is
/// `NA` when nothing was significant.
pub fn emit_plot_data(rows: &[SweepRow]) -> anyhow::Result<String> {
    anyhow::ensure!(!rows.is_empty(), "empty sweep");
    let mut out =
        String::from("config_id\tN\tn\tr1\tmethod\tprecision\trecall\truntime_seconds\ttestable\n");
    for r in rows {
        let m = &r.report.metrics;
        let precision = if m.precision_na {
            "NA".to_string()
        } else {
            m.precision.to_string()
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.config_id,
            r.n_samples,
            r.n_features,
            r.r1,
            r.report.method.as_str(),
            precision,
            m.recall,
            r.report.runtime_seconds,
            r.report.miner_stats.testable_count
        )?;
    }
    Ok(out)
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Data(e.into())
    }
}

fn check_output(path: &Path) -> Result<(), CliError> {
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if parent.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "output directory {} does not exist",
            parent.display()
        )))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Sidecar path for a generated CSV: `d.csv` -> `d.truth.json`.
pub fn truth_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.truth.json"))
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Mine(args) => run_mine(args),
        Command::Baseline(args) => run_baseline(args),
        Command::Synth(args) => run_synth(args),
        Command::Eval(args) => run_eval(args),
        Command::Fwer(args) => run_fwer(args),
        Command::Bench(args) => run_bench(args),
    }
}

fn run_mine(args: MineArgs) -> Result<(), CliError> {
    check_output(&args.out)?;
    if let Some(p) = &args.rank_dump {
        check_output(p)?;
    }
    let opts = args.miner.options();
    let d = load_dataset(&args.input, &args.label_column)?;
    let (d, ratios) = canonicalize_labels(&d);
    if let Some(p) = &args.rank_dump {
        let file = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        rank_matrix(&d)?.write_tsv(std::io::BufWriter::new(file), d.feature_names())?;
    }
    let result = mine(&d, args.miner.alpha, &opts)?;
    let file = ResultFile::new(
        Method::Proposed,
        &args.input,
        &args.label_column,
        &ratios,
        d.feature_names(),
        &result,
        &opts,
    );
    write_json(&args.out, &file)?;
    Ok(())
}

fn run_baseline(args: BaselineArgs) -> Result<(), CliError> {
    check_output(&args.out)?;
    if let Some(p) = &args.binary_out {
        check_output(p)?;
    }
    let opts = args.miner.options();
    let d = load_dataset(&args.input, &args.label_column)?;
    let (d, ratios) = canonicalize_labels(&d);
    let b = median_binarize(&d);
    if let Some(p) = &args.binary_out {
        b.save_csv(p, &args.label_column)?;
    }
    let result = mine_binary(&b, args.miner.alpha, &opts)?;
    let file = ResultFile::new(
        Method::Baseline,
        &args.input,
        &args.label_column,
        &ratios,
        &b.feature_names(),
        &result,
        &opts,
    );
    write_json(&args.out, &file)?;
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    check_output(&args.out)?;
    let mut spec = SynthSpec::new(args.n_samples, args.n_features, args.r1, args.seed);
    spec.assoc_frac = args.assoc_frac;
    if let Some(sd) = args.noise_sd {
        spec.noise_sd = sd;
    }
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let data = generate(&spec)?;
    data.dataset.save_csv(&args.out, &args.label_column)?;
    write_json(&truth_path(&args.out), &data.metadata(&spec))?;
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    check_output(&args.out)?;
    let result: ResultFile = read_json(&args.result)?;
    let truth: SynthMetadata = read_json(&args.truth)?;
    let ground_truth: Vec<usize> = match result.method {
        Method::Proposed => truth.ground_truth.clone(),
        // column 2j is the <= side and 2j + 1 the > side of source j (0-based)
        Method::Baseline => truth
            .ground_truth
            .iter()
            .flat_map(|&j| [2 * j - 1, 2 * j])
            .collect(),
    };
    let sets: Vec<Vec<usize>> = result
        .significant
        .iter()
        .map(|s| s.features.clone())
        .collect();
    let report = EvalReport {
        method: result.method,
        metrics: precision_recall(&sets, &ground_truth),
        runtime_seconds: result.stats.runtime_seconds,
        miner_stats: MinerSummary {
            nodes_visited: result.stats.nodes_visited,
            nodes_pruned: result.stats.nodes_pruned,
            testable_count: result.testable_count,
            sigma_final: result.sigma_final,
        },
    };
    write_json(&args.out, &report)?;
    Ok(())
}

fn run_fwer(args: FwerArgs) -> Result<(), CliError> {
    check_output(&args.out)?;
    let spec = NullSpec {
        n_samples: args.n_samples,
        n_features: args.n_features,
        r1: args.r1,
    };
    let report = fwer_simulation(spec, args.alpha, args.reps, args.seed, args.threads)?;
    write_json(&args.out, &report)?;
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<(), CliError> {
    check_output(&args.out)?;
    if let Some(p) = &args.json {
        check_output(p)?;
    }
    if args.values.is_empty() {
        return Err(CliError::Usage("--values needs at least one entry".into()));
    }
    let opts = args.miner.options();
    let mut rows = Vec::new();
    let mut config_id = 0;
    for &value in &args.values {
        let (n_samples, n_features) = match args.vary {
            SweepAxis::Samples => (value, args.n_features),
            SweepAxis::Features => (args.n_samples, value),
        };
        for offset in 0..args.seeds {
            let seed = args.seed + offset;
            let spec = SynthSpec::new(n_samples, n_features, args.r1, seed);
            spec.validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let data = generate(&spec)?;
            for method in [Method::Proposed, Method::Baseline] {
                let (report, _) = benchmark(
                    &data.dataset,
                    &data.ground_truth,
                    method,
                    args.miner.alpha,
                    &opts,
                )?;
                log::info!(
                    "config {config_id} N={n_samples} n={n_features} seed={seed} {}: {} significant in {:.3}s",
                    method.as_str(),
                    report.metrics.num_significant,
                    report.runtime_seconds
                );
                rows.push(SweepRow {
                    config_id,
                    n_samples,
                    n_features,
                    r1: args.r1,
                    seed,
                    report,
                });
            }
            config_id += 1;
        }
    }
    std::fs::write(&args.out, emit_plot_data(&rows)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(p) = &args.json {
        write_json(p, &rows)?;
    }
    Ok(())
}
