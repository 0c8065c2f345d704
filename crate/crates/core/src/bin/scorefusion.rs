use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scorefusion::dataset::{self, AttributeKind, LoadOptions, Schema};
use scorefusion::error::{Error, Result};
use scorefusion::pipeline::{self, FusionPair, RunConfig, WeightEval};
use scorefusion::preprocess::TaskKind;

/// Weighted score-level fusion of classifier pairs on tabular heart data.
#[derive(Debug, Parser)]
#[command(name = "scorefusion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the members, fuse each pair and write a report.
    Run(RunArgs),
    /// Check a written report against the reference accuracies.
    Validate {
        /// Report directory (or its report.json).
        #[arg(long)]
        report: PathBuf,
    },
    /// Print per-column statistics of a data file.
    Summarize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        has_header: bool,
        /// JSON schema file; defaults to the built-in Cleveland schema.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// binary | multiclass
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated pairs, e.g. `ann+rf,svm+lr,ada+dt`.
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long)]
    report_dir: Option<PathBuf>,
    /// Split used to pick fusion weights: test | validation
    #[arg(long)]
    weight_eval: Option<WeightEval>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Plain random split instead of a class-stratified one.
    #[arg(long)]
    unstratified: bool,
    #[arg(long)]
    has_header: bool,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Run with N consecutive master seeds and report mean and std.
    #[arg(long)]
    repeat: Option<usize>,
    /// Record the wall-clock time in the report.
    #[arg(long)]
    timestamp: bool,
}

impl RunArgs {
    fn into_config(self) -> Result<(RunConfig, Option<usize>)> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => {
                let data = self
                    .data
                    .clone()
                    .ok_or_else(|| Error::Usage("--data is required without --config".into()))?;
                RunConfig::new(data, self.task.unwrap_or(TaskKind::Binary))
            }
        };
        if let Some(d) = self.data {
            config.data_path = d;
        }
        if let Some(t) = self.task {
            config.task = t;
        }
        if let Some(f) = self.test_fraction {
            config.test_fraction = f;
        }
        if let Some(s) = self.seed {
            config.master_seed = s;
        }
        if let Some(p) = self.pairs {
            config.fusion_pairs = Some(FusionPair::parse_list(&p)?);
        }
        if let Some(d) = self.report_dir {
            config.report_dir = Some(d);
        }
        if let Some(w) = self.weight_eval {
            config.weight_eval = w;
        }
        if let Some(v) = self.validation_fraction {
            config.validation_fraction = v;
        }
        if self.unstratified {
            config.stratified = false;
        }
        if self.has_header {
            config.has_header = true;
        }
        if let Some(s) = self.schema {
            config.schema_path = Some(s);
        }
        if self.timestamp {
            config.include_timestamp = true;
        }
        Ok((config, self.repeat))
    }
}

fn run(args: RunArgs) -> Result<()> {
    let (config, repeat) = args.into_config()?;
    config.validate()?;
    match repeat {
        None | Some(1) => {
            let report = pipeline::run_experiment(&config)?;
            print!("{}", pipeline::render_markdown(&report));
            if let Some(dir) = &config.report_dir {
                let files = pipeline::emit_report(&report, dir)?;
                log::info!("wrote {} files to {}", files.len(), dir.display());
            }
        }
        Some(n) => {
            let (runs, summary) = pipeline::run_repeated(&config, n)?;
            print!("{}", pipeline::render_repeat_markdown(&summary));
            if let Some(dir) = &config.report_dir {
                let files = pipeline::emit_repeat(&runs, &summary, dir)?;
                log::info!("wrote {} files to {}", files.len(), dir.display());
            }
        }
    }
    Ok(())
}

fn validate(report: PathBuf) -> Result<()> {
    let report = pipeline::load_report(&report)?;
    pipeline::check_consistency(&report)?;
    let checks = pipeline::validate_against_published(&report);
    if checks.is_empty() {
        println!("no reference values for this task, split and pair set");
    }
    for c in &checks {
        println!("{c}");
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!("{passed}/{} checks passed", checks.len());
    Ok(())
}

fn summarize(data: PathBuf, has_header: bool, schema: Option<PathBuf>) -> Result<()> {
    let schema = match schema {
        Some(p) => Schema::from_json_file(p)?,
        None => Schema::cleveland(),
    };
    let options = LoadOptions {
        has_header,
        ..LoadOptions::default()
    };
    let table = dataset::load_csv(&data, &schema, &options)?;
    println!("{} rows, {} missing cells", table.n_rows(), table.missing_count());
    println!("class counts: {:?}", table.class_counts(0));
    for c in dataset::summarize(&table)? {
        match c.kind {
            AttributeKind::Continuous => {
                println!(
                    "{:<10} mean {:>9.3}  std {:>8.3}  (n={})",
                    c.name, c.mean, c.std, c.observed
                )
            }
            AttributeKind::Categorical => {
                let freq: Vec<String> = c.frequencies.iter().map(|(v, p)| format!("{v}: {p:.2}%")).collect();
                println!("{:<10} {}  (n={})", c.name, freq.join(", "), c.observed)
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { report } => validate(report),
        Command::Summarize {
            data,
            has_header,
            schema,
        } => summarize(data, has_header, schema),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
