use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swdrank::config::EngineConfig;
use swdrank::engine::{self, BenchGrid, BenchOptions, EngineError};
use swdrank::graph::TransferRates;
use swdrank::rank::InitMode;
use swdrank::store::{load_state, save_state};
use swdrank::synth;

const DEFAULT_CONFIG: &str = "engine.toml";

#[derive(Parser)]
#[command(
    name = "swdrank",
    version,
    about = "Rank semantic web documents by typed link authority"
)]
struct Cli {
    /// Config file (defaults to ./engine.toml when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// State directory.
    #[arg(long, global = true, env = "ENGINE_STATE_DIR", default_value = "./state")]
    state_dir: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    damping: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Shortest indexed keyword.
    #[arg(long, global = true)]
    min_length: Option<usize>,
    /// Transfer rates for one relation role, as `role=forward,backward`.
    #[arg(long = "rate", global = true, value_name = "ROLE=F,B")]
    rates: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse every .nt file under a directory and store the document graph.
    Ingest { dir: PathBuf },
    /// Compute authority scores and the keyword index.
    Build {
        #[arg(long)]
        init: Option<InitMode>,
        /// Keep the last iterate when the iteration limit is hit.
        #[arg(long)]
        allow_unconverged: bool,
    },
    /// Answer a keyword query with authority and hub lists.
    Query {
        #[arg(required = true)]
        terms: Vec<String>,
        /// Number of seed documents.
        #[arg(short = 'n', long)]
        n: Option<usize>,
        /// In-link cap per seed.
        #[arg(short = 'c', long)]
        c: Option<usize>,
        /// Length of each result list.
        #[arg(short = 'k', long)]
        k: Option<usize>,
        #[arg(long)]
        unweighted: bool,
        #[arg(long)]
        json: bool,
        /// Include timings in JSON output.
        #[arg(long)]
        timings: bool,
    },
    /// Time the query stage over a grid of seed counts and in-link caps.
    Bench {
        /// Grid as `n=5,10;c=1,2`.
        #[arg(long)]
        grid: Option<BenchGrid>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Comma-separated query terms (default: most frequent indexed terms).
        #[arg(long, value_delimiter = ',')]
        terms: Option<Vec<String>>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show one document by id or URI.
    Inspect { key: String },
    /// Write a seeded synthetic corpus.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 1000)]
        docs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn parse_rate(arg: &str) -> Result<(String, TransferRates), EngineError> {
    let bad = || EngineError::InvalidArgument(format!("expected role=forward,backward, got {arg:?}"));
    let (role, values) = arg.split_once('=').ok_or_else(bad)?;
    let (f, b) = values.split_once(',').ok_or_else(bad)?;
    let f: f64 = f.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((role.trim().to_owned(), TransferRates::new(f, b)))
}

fn load_config(cli: &Cli) -> Result<EngineConfig, EngineError> {
    let mut config = match &cli.config {
        Some(path) => EngineConfig::load(path)?,
        None if Path::new(DEFAULT_CONFIG).exists() => EngineConfig::load(Path::new(DEFAULT_CONFIG))?,
        None => EngineConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(d) = o.damping {
        config.rank.damping = d;
    }
    if let Some(e) = o.epsilon {
        config.rank.epsilon = e;
    }
    if let Some(m) = o.max_iter {
        config.rank.max_iter = m;
    }
    if let Some(m) = o.min_length {
        config.tokenizer.min_length = m;
    }
    for arg in &o.rates {
        let (role, rates) = parse_rate(arg)?;
        config.rates.insert(role, rates);
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode, EngineError> {
    let mut config = load_config(&cli)?;
    let state_dir = cli.state_dir.as_path();
    match cli.command {
        Command::Ingest { dir } => {
            if !dir.is_dir() {
                return Err(EngineError::InvalidArgument(format!(
                    "{} is not a directory",
                    dir.display()
                )));
            }
            let (state, summary) = engine::ingest_dir(&dir, &config)?;
            save_state(&state, state_dir)?;
            for f in &summary.failures {
                eprintln!("error: {}: {}", f.path.display(), f.error);
            }
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            if summary.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{} file(s) failed to parse", summary.failures.len());
                Ok(ExitCode::from(1))
            }
        }
        Command::Build {
            init,
            allow_unconverged,
        } => {
            if let Some(init) = init {
                config.rank.init = init;
            }
            let mut state = load_state(state_dir)?;
            let summary = engine::build(&mut state, &config.rank, allow_unconverged)?;
            save_state(&state, state_dir)?;
            if !summary.converged {
                eprintln!(
                    "warning: stopped after {} iterations without converging",
                    summary.iterations_used
                );
            }
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            Ok(ExitCode::SUCCESS)
        }
        Command::Query {
            terms,
            n,
            c,
            k,
            unweighted,
            json,
            timings,
        } => {
            let mut settings = config.query;
            settings.n = n.unwrap_or(settings.n);
            settings.c = c.unwrap_or(settings.c);
            settings.top_k = k.unwrap_or(settings.top_k);
            settings.weighted &= !unweighted;
            let state = load_state(state_dir)?;
            let result = engine::query(&state, &terms.join(" "), &config.tokenizer, &settings)?;
            if json {
                println!("{}", result.to_json(timings));
            } else {
                println!("{result}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { grid, reps, terms, out } => {
            let state = load_state(state_dir)?;
            let options = BenchOptions {
                grid: grid.unwrap_or_default(),
                reps,
                terms,
                settings: config.query,
            };
            let rows = engine::bench(&state, &options)?;
            let csv = engine::bench_csv(&rows);
            match out {
                Some(path) => std::fs::write(&path, csv).map_err(|source| EngineError::Io { path, source })?,
                None => print!("{csv}"),
            }
            let cmp = engine::compare_inits(&state.graph, &config.rank)?;
            eprintln!(
                "init iterations: uniform {} / inratio {} (ratio {:.3}, max score gap {:.2e})",
                cmp.uniform_iterations,
                cmp.inratio_iterations,
                cmp.ratio(),
                cmp.max_score_gap
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect { key } => {
            let state = load_state(state_dir)?;
            println!("{}", engine::inspect(&state, &key)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth { dir, docs, seed } => {
            let written = synth::write_corpus(&dir, docs, seed).map_err(|source| EngineError::Io {
                path: dir.clone(),
                source,
            })?;
            println!("wrote {written} documents to {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
