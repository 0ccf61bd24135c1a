use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use rowcomp::config::PipelineConfig;
use rowcomp::formats::{ingest_file, load_table, FormatError};
use rowcomp::pipeline::{cmd_complete, cmd_evaluate, cmd_link, to_json, Resources, Stages, Timer};

#[derive(Parser)]
#[command(name = "rowcomp", version, about = "Suggest and fill new rows of entity tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Link a table's main column to entities and its columns to properties.
    Link {
        table: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Suggest new subjects for a table and fill their cells.
    Complete {
        table: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Score suggestions and fills on a directory of benchmark tables.
    Evaluate {
        dir: PathBuf,
        /// Average over every seed combination drawn from the top five rows.
        #[arg(long)]
        stability: bool,
        #[command(flatten)]
        opts: Opts,
    },
    /// Convert a JSON-lines entity dump into the KB TSV format.
    Ingest { input: PathBuf, output: PathBuf },
}

#[derive(Args)]
struct Opts {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    label_vectors: Option<PathBuf>,
    /// `http` or `mock:<fixture.json>`.
    #[arg(long)]
    clients: Option<String>,
    #[arg(long)]
    seed_rows: Option<usize>,
    #[arg(long)]
    suggestions: Option<usize>,
    /// `knn` or `lof`.
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    contamination: Option<f64>,
    #[arg(long)]
    fill_threshold: Option<f64>,
    #[arg(long)]
    k_per_seed: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print per-stage wall-clock times to stderr.
    #[arg(long)]
    timings: bool,
}

impl Opts {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone().into();
                }
            )*};
        }
        set!(kb, embeddings, label_vectors, clients, seed_rows, suggestions, detector, contamination, fill_threshold, k_per_seed, seed);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let output = match cli.command {
        Command::Link { table, opts } => {
            let cfg = opts.config()?;
            let stages = Stages::from_config(&cfg)?;
            let res = Resources::load(&cfg, false)?;
            let table = load_table(&table)?;
            to_json(&cmd_link(&res, &stages, &table))?
        }
        Command::Complete { table, opts } => {
            let mut timer = Timer::new(opts.timings);
            let cfg = opts.config()?;
            let stages = Stages::from_config(&cfg)?;
            let res = Resources::load(&cfg, true)?;
            let table = load_table(&table)?;
            timer.lap("load");
            to_json(&cmd_complete(&res, &stages, &table, cfg.seed_rows, cfg.suggestions, &mut timer)?)?
        }
        Command::Evaluate { dir, stability, opts } => {
            let mut timer = Timer::new(opts.timings);
            let cfg = opts.config()?;
            let stages = Stages::from_config(&cfg)?;
            let res = Resources::load(&cfg, true)?;
            timer.lap("load");
            let report = cmd_evaluate(&res, &stages, &dir, cfg.seed_rows, stability)?;
            timer.lap("evaluate");
            eprintln!(
                "evaluated {} tables, skipped {}",
                report.table_count,
                report.skipped.len()
            );
            to_json(&report)?
        }
        Command::Ingest { input, output } => {
            let kb = ingest_file(&input, &output)?;
            eprintln!(
                "wrote {} entities, {} properties, {} triples to {}",
                kb.entity_count(),
                kb.property_count(),
                kb.triple_count(),
                output.display()
            );
            return Ok(());
        }
    };
    print!("{output}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<FormatError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
