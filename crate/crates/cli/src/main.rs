use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use episodic_koopman::{
    abs_errors, gen_piecewise_exponential, improvement, load_csv, run_with_bank, ColumnSelector, CsvOptions,
    ForecastConfig, ForecastRun, MemoryBank, Mode, PiecewiseExponential, TimeSeries,
};

mod config;
mod report;

use config::TuningArgs;
use report::{InputInfo, Manifest, RunSummary, MANIFEST};

#[derive(Parser)]
#[command(name = "ekm", version, about = "Sliding EDMD forecasting with episodic memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a piecewise exponential benchmark series as CSV (t,value,lambda)
    Generate(GenerateArgs),
    /// Forecast a CSV series in one mode
    Forecast(ForecastArgs),
    /// Run a baseline and a candidate mode on the same input and compare errors
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of values to emit, including x_0
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    /// Steps between regime switches
    #[arg(long = "switch", alias = "switch-period", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    switch_period: u64,
    /// Multiplicative noise magnitude
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with a header row
    #[arg(short, long)]
    input: PathBuf,
    /// Column name, or zero-based index
    #[arg(long, default_value = "value")]
    column: String,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Linearly interpolate interior missing values
    #[arg(long)]
    interpolate: bool,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Recorded in the manifest
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// sliding or memory
    #[arg(long)]
    mode: Option<Mode>,
    /// Start from a bank snapshot written by --export-bank
    #[arg(long)]
    warm_start: Option<PathBuf>,
    /// Also write the final memory bank as bank.jsonl
    #[arg(long)]
    export_bank: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long, default_value = "sliding")]
    baseline: Mode,
    #[arg(long, default_value = "memory")]
    candidate: Mode,
}

fn load_input(args: &InputArgs) -> Result<TimeSeries> {
    if !args.delimiter.is_ascii() {
        bail!("delimiter must be a single ASCII character");
    }
    let column: ColumnSelector = args.column.parse()?;
    let options = CsvOptions {
        delimiter: args.delimiter as u8,
        interpolate: args.interpolate,
        ..CsvOptions::default()
    };
    load_csv(&args.input, &column, &options).with_context(|| format!("loading {}", args.input.display()))
}

fn output_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let params = PiecewiseExponential {
        steps: args.steps as usize,
        switch_period: args.switch_period as usize,
        eta: args.eta,
        seed: args.seed,
    };
    let data = gen_piecewise_exponential(&params)?;
    let mut w = csv::Writer::from_path(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    w.write_record(["t", "value", "lambda"])?;
    for (t, (x, lambda)) in data.series.values().iter().zip(&data.lambdas).enumerate() {
        w.serialize((t, x, lambda))?;
    }
    w.flush()?;
    Ok(())
}

fn forecast(args: &ForecastArgs) -> Result<()> {
    let series = load_input(&args.input)?;
    let cfg = config::resolve(&args.tuning, args.mode)?;
    let bank = match &args.warm_start {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            MemoryBank::read_jsonl(BufReader::new(file), cfg.capacity)?
        }
        None => MemoryBank::new(cfg.capacity),
    };
    let run = run_with_bank(&cfg, &series, bank)?;

    let dir = &args.input.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = vec!["predictions.csv".to_string(), "summary.json".to_string()];
    report::write_predictions(&output_path(dir, "predictions.csv"), &series, &run.records)?;
    let summary = RunSummary::new(cfg.mode, &series, &run)?;
    report::write_json(&output_path(dir, "summary.json"), &summary)?;
    if args.export_bank {
        let path = output_path(dir, "bank.jsonl");
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        run.bank.write_jsonl(&mut w)?;
        std::io::Write::flush(&mut w)?;
        outputs.push("bank.jsonl".into());
    }
    write_manifest(dir, "forecast", &args.input, &series, &cfg, None, outputs)?;

    print_summary(&summary);
    Ok(())
}

fn print_summary(summary: &RunSummary) {
    match &summary.error {
        Some(e) => println!(
            "{}: {} records, median relative error {:.3}%, median abs error {:.6}",
            summary.mode, summary.n_records, e.median_rel_error_pct, e.median_abs_error
        ),
        None => println!("{}: {} records, no scorable targets", summary.mode, summary.n_records),
    }
    if let Some(m) = &summary.matches {
        println!("matched {} of {} steps ({:.1}%)", m.n_matched, summary.n_records, 100.0 * m.match_rate);
    }
}

#[derive(serde::Serialize)]
struct CompareReport {
    manifest: &'static str,
    baseline_mode: Mode,
    candidate_mode: Mode,
    /// `null` when the candidate's median error is zero and the baseline's is not.
    improvement_pct: Option<f64>,
    candidate_median_error_zero: bool,
    baseline: RunSummary,
    candidate: RunSummary,
}

fn compare(args: &CompareArgs) -> Result<()> {
    let series = load_input(&args.input)?;
    let cfg = config::resolve(&args.tuning, Some(args.candidate))?;
    let run_mode = |mode: Mode| -> Result<ForecastRun> {
        let c = ForecastConfig { mode, ..cfg.clone() };
        Ok(run_with_bank(&c, &series, MemoryBank::new(c.capacity))?)
    };
    let baseline = run_mode(args.baseline)?;
    let candidate = run_mode(args.candidate)?;

    let eb = abs_errors(&series, &baseline.records)?;
    let ec = abs_errors(&series, &candidate.records)?;
    let imp = improvement(&eb, &ec)?;

    let dir = &args.input.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    report::write_predictions(&output_path(dir, "baseline_predictions.csv"), &series, &baseline.records)?;
    report::write_predictions(&output_path(dir, "candidate_predictions.csv"), &series, &candidate.records)?;
    report::write_comparison(&output_path(dir, "comparison.csv"), &series, &baseline.records, &candidate.records)?;
    let rep = CompareReport {
        manifest: MANIFEST,
        baseline_mode: args.baseline,
        candidate_mode: args.candidate,
        improvement_pct: imp.percent.is_finite().then_some(imp.percent),
        candidate_median_error_zero: imp.memory_median_zero,
        baseline: RunSummary::new(args.baseline, &series, &baseline)?,
        candidate: RunSummary::new(args.candidate, &series, &candidate)?,
    };
    report::write_json(&output_path(dir, "report.json"), &rep)?;
    let outputs = ["baseline_predictions.csv", "candidate_predictions.csv", "comparison.csv", "report.json"]
        .map(String::from)
        .to_vec();
    write_manifest(dir, "compare", &args.input, &series, &cfg, Some(args.baseline), outputs)?;

    println!("{} vs {}: improvement {:.2}%", args.candidate, args.baseline, imp.percent);
    Ok(())
}

fn write_manifest(
    dir: &Path,
    command: &'static str,
    input: &InputArgs,
    series: &TimeSeries,
    cfg: &ForecastConfig,
    baseline_mode: Option<Mode>,
    outputs: Vec<String>,
) -> Result<()> {
    let manifest = Manifest {
        tool: "ekm",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: input.seed,
        config: cfg,
        baseline_mode,
        input: InputInfo::new(&input.input, &input.column, series)?,
        outputs,
    };
    report::write_json(&output_path(dir, MANIFEST), &manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Forecast(args) => forecast(args),
        Command::Compare(args) => compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
