use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use frontal_nav::navigator::render_timeline;
use frontal_nav::report::{read_trace, report_dir};
use frontal_nav::run::{run_batch, ProviderKind, RunConfig};

#[derive(Parser)]
#[command(name = "frontal-nav", version, about = "Run, score and inspect frontal-view navigation episodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of episodes and write one trace per episode.
    Run(RunArgs),
    /// Recompute metrics from a directory of traces.
    Report {
        dir: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print a readable timeline of one trace file.
    Inspect { file: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Episode files or directories.
    #[arg(long, num_args = 1..)]
    episodes: Vec<PathBuf>,
    #[arg(long)]
    worlds: Option<PathBuf>,
    #[arg(long, value_enum)]
    provider: Option<Provider>,
    /// Script files for the scripted provider.
    #[arg(long = "script", num_args = 1..)]
    scripts: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: Option<usize>,
    /// Decision budget per episode.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Save every provider answer as a replayable script.
    #[arg(long)]
    record: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Scripted,
    Remote,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if !self.episodes.is_empty() {
            cfg.episodes = self.episodes;
        }
        if let Some(w) = self.worlds {
            cfg.worlds = w;
        }
        if let Some(p) = self.provider {
            cfg.provider = match p {
                Provider::Scripted => ProviderKind::Scripted,
                Provider::Remote => ProviderKind::Remote,
            };
        }
        if !self.scripts.is_empty() {
            cfg.scripts = self.scripts;
        }
        if let Some(o) = self.out {
            cfg.out = o;
        }
        if let Some(n) = self.parallel {
            cfg.parallel = n;
        }
        if let Some(n) = self.max_steps {
            cfg.navigator.max_steps = n;
        }
        cfg.record |= self.record;
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = args.into_config()?;
    let summary = run_batch(&cfg)?;
    print!("{}", summary.report.to_table());
    println!("manifest: {}", summary.manifest_path.display());
    let failed: Vec<_> = summary.results.iter().filter(|r| r.failed()).collect();
    for r in &failed {
        eprintln!("episode {} failed: {}", r.episode, r.error.as_deref().unwrap_or("unknown error"));
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn report(dir: PathBuf, json: Option<PathBuf>) -> Result<ExitCode> {
    let report = report_dir(&dir)?;
    print!("{}", report.to_table());
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&report)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn inspect(file: PathBuf) -> Result<ExitCode> {
    let trace = read_trace(&file)?;
    print!("{}", render_timeline(&trace));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Report { dir, json } => report(dir, json),
        Command::Inspect { file } => inspect(file),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
