use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sertk::dsp::WindowKind;
use sertk::functionals::builtin_set;
use sertk::harness::{
    evaluate_run, extract_manifest, load_manifest, read_report_json, render_csv, render_table,
    run_experiment, run_grid, write_report_json, CellResult, ExperimentConfig, ExtractOptions,
    GridConfig, HarnessError, SplitName, TableRow,
};
use sertk::models::ModelError;
use sertk::toy::{generate_toy_corpus, ToyCorpusConfig};

/// Speech emotion recognition toolkit.
#[derive(Debug, Parser)]
#[command(name = "sertk", version)]
struct Cli {
    /// Worker threads for extraction and grids [default: logical cores]
    #[arg(long, global = true, env = "SERTK_WORKERS")]
    workers: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract LLD matrices (and optionally functionals) for every manifest entry
    Extract(ExtractArgs),
    /// Train one configuration and evaluate it on its test split
    Train(TrainArgs),
    /// Re-evaluate a finished run from its checkpoint
    Eval(EvalArgs),
    /// Run a grid of configurations and render a comparison table
    Grid(GridArgs),
    /// Generate the synthetic five-class corpus
    MakeToyCorpus(ToyArgs),
    /// Render a table from run directories, grid directories or report files
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum WindowArg {
    Hamming,
    Hann,
    Rectangular,
}

impl From<WindowArg> for WindowKind {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Hamming => WindowKind::Hamming,
            WindowArg::Hann => WindowKind::Hann,
            WindowArg::Rectangular => WindowKind::Rectangular,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct ExtractArgs {
    /// Manifest CSV or corpus directory
    #[arg(long)]
    manifest: PathBuf,
    /// Filename regex with named groups `label`, `speaker`, `gender` (directories only)
    #[arg(long)]
    filename_rule: Option<String>,
    /// Frame length in ms: 32 or 100; repeat for both
    #[arg(long = "frame-ms", default_values_t = [32u32], value_parser = parse_frame_ms)]
    frame_ms: Vec<u32>,
    /// Output directory for feature files
    #[arg(long)]
    out: PathBuf,
    /// Also write utterance-level functionals (hand_crafted_624 or large)
    #[arg(long)]
    functional_set: Option<String>,
    #[arg(long, value_enum, default_value_t = WindowArg::Hamming)]
    window: WindowArg,
}

#[derive(Debug, Args)]
struct TrainOverrides {
    /// Root for run directories
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Early-stopping patience in epochs, 0 disables
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the LLD frame length
    #[arg(long, value_parser = parse_frame_ms)]
    frame_ms: Option<u32>,
    #[command(flatten)]
    overrides: TrainOverrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Run directory written by `train`
    #[arg(long)]
    run: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Write the report JSON here as well as to stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid config (TOML)
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: TrainOverrides,
}

#[derive(Debug, Args)]
struct ToyArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    per_class: usize,
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Run directories, grid directories or report JSON files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "Results")]
    title: String,
    /// Emit CSV instead of a text table
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_frame_ms(s: &str) -> Result<u32, String> {
    match s {
        "32" => Ok(32),
        "100" => Ok(100),
        _ => Err("frame length must be 32 or 100".into()),
    }
}

fn workers(cli: &Cli) -> usize {
    cli.workers
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn config_base(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", path.display())).into())
}

fn apply_overrides(train: &mut sertk::harness::TrainConfig, o: &TrainOverrides) {
    if let Some(v) = o.seed {
        train.seed = v;
    }
    if let Some(v) = o.max_epochs {
        train.max_epochs = v;
    }
    if let Some(v) = o.learning_rate {
        train.learning_rate = v;
    }
    if let Some(v) = o.batch_size {
        train.batch_size = v;
    }
    if let Some(v) = o.patience {
        train.early_stop_patience = v;
    }
}

fn cmd_extract(args: &ExtractArgs, workers: usize) -> Result<ExitCode> {
    let manifest = load_manifest(&args.manifest, args.filename_rule.as_deref())?;
    let set = args
        .functional_set
        .as_deref()
        .map(builtin_set)
        .transpose()?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(
        args.out.join("extract_config.json"),
        serde_json::to_string_pretty(args)?,
    )?;
    let mut failures = 0;
    for &frame_ms in &args.frame_ms {
        let opts = ExtractOptions {
            frame_ms,
            window: args.window.into(),
            functional_set: set.clone(),
            workers,
        };
        let summary = extract_manifest(&manifest, &args.out, &opts)?;
        println!(
            "{frame_ms} ms: {}/{} clips extracted in {:.1} s into {}",
            summary.succeeded,
            summary.total,
            summary.wall_time_s,
            summary.lld_dir.display()
        );
        for f in &summary.failed {
            eprintln!("failed: {}: {}", f.path.display(), f.error);
        }
        failures += summary.failed.len();
    }
    Ok(if failures > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_toml(&read_text(path)?)?;
    config.resolve_paths(&config_base(path));
    Ok(config)
}

fn cmd_train(args: &TrainArgs) -> Result<ExitCode> {
    let mut config = load_experiment(&args.config)?;
    if let Some(ms) = args.frame_ms {
        config.frame_ms = ms;
    }
    if let Some(dir) = &args.overrides.out_dir {
        config.out_dir = dir.clone();
    }
    apply_overrides(&mut config.train, &args.overrides);
    let out = run_experiment(&config)?;
    println!("run directory: {}", out.run_dir.display());
    if let Some(v) = &out.val_report {
        println!("val:  UA {:.2}  WA {:.2}", v.ua, v.wa);
    }
    println!(
        "test: UA {:.2}  WA {:.2}",
        out.test_report.ua, out.test_report.wa
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: &EvalArgs) -> Result<ExitCode> {
    let split = match args.split {
        SplitArg::Train => SplitName::Train,
        SplitArg::Val => SplitName::Val,
        SplitArg::Test => SplitName::Test,
    };
    let report = evaluate_run(&args.run, split)?;
    if let Some(p) = &args.output {
        write_report_json(p, &report)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_grid(args: &GridArgs, workers: usize) -> Result<ExitCode> {
    let mut grid = GridConfig::from_toml(&read_text(&args.config)?)?;
    grid.resolve_paths(&config_base(&args.config));
    if let Some(dir) = &args.overrides.out_dir {
        grid.out_dir = dir.clone();
    }
    apply_overrides(&mut grid.train, &args.overrides);
    for cell in &mut grid.cells {
        if let Some(t) = &mut cell.train {
            apply_overrides(t, &args.overrides);
        }
    }
    let outcome = run_grid(&grid, workers)?;
    print!("{}", outcome.table);
    println!("grid directory: {}", outcome.dir.display());
    Ok(if outcome.failures() > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_make_toy_corpus(args: &ToyArgs) -> Result<ExitCode> {
    let config = ToyCorpusConfig {
        seed: args.seed,
        per_class: args.per_class,
        sample_rate: args.sample_rate,
    };
    let manifest = generate_toy_corpus(&args.out, &config)?;
    println!(
        "wrote {} clips and {}",
        5 * args.per_class,
        manifest.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn report_rows(input: &Path) -> Result<Vec<TableRow>> {
    if input.join("grid.json").is_file() {
        let cells: Vec<CellResult> = serde_json::from_str(&read_text(&input.join("grid.json"))?)?;
        return Ok(cells.iter().map(TableRow::from_cell).collect());
    }
    if input.join("report.json").is_file() {
        let report = read_report_json(input.join("report.json"))?;
        let config = ExperimentConfig::from_toml(&read_text(&input.join("config.toml"))?)?;
        return Ok(vec![TableRow::from_report(
            config.features.describe(),
            config.model.kind().to_string(),
            Some(&report),
            None,
            None,
        )]);
    }
    if input.is_file() {
        let report = read_report_json(input)?;
        return Ok(vec![TableRow::from_report(
            report.metadata.split.clone(),
            report.metadata.model_kind.clone(),
            Some(&report),
            None,
            None,
        )]);
    }
    bail!(HarnessError::ConfigInvalid(format!(
        "{} is not a run, grid or report",
        input.display()
    )))
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let mut rows = Vec::new();
    for input in &args.inputs {
        rows.extend(report_rows(input)?);
    }
    let text = if args.csv {
        render_csv(&rows)?
    } else {
        render_table(&args.title, &rows)
    };
    if let Some(p) = &args.output {
        fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

/// 2 for configuration and input errors, 1 for runtime failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|e| {
        if let Some(h) = e.downcast_ref::<HarnessError>() {
            matches!(
                h,
                HarnessError::ConfigInvalid(_)
                    | HarnessError::FeatureMissing(_)
                    | HarnessError::MissingFile(_)
                    | HarnessError::UnknownLabel { .. }
                    | HarnessError::EmptyManifest
                    | HarnessError::DuplicatePath(_)
                    | HarnessError::DuplicateClipId(_)
                    | HarnessError::BadRule(_)
                    | HarnessError::ClassTooSmall { .. }
                    | HarnessError::InvalidRatios(_)
                    | HarnessError::Model(
                        ModelError::InvalidSpec(_) | ModelError::IncompatibleShape(_)
                    )
                    | HarnessError::Functional(sertk::functionals::FunctionalError::UnknownSet(_))
            )
        } else {
            e.downcast_ref::<sertk::functionals::FunctionalError>()
                .is_some_and(|f| matches!(f, sertk::functionals::FunctionalError::UnknownSet(_)))
        }
    });
    if config {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let workers = workers(&cli);
    let result = match &cli.command {
        Command::Extract(a) => cmd_extract(a, workers),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Grid(a) => cmd_grid(a, workers),
        Command::MakeToyCorpus(a) => cmd_make_toy_corpus(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
