//! `xraysegkit`: batch segmentation, label tooling, evaluation and the
//! annotation service.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

mod eval;
mod labels;
mod segment;
mod serve;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "xraysegkit", version, about = "Classical X-ray segmentation, YOLO labels and evaluation")]
struct Cli {
    /// Worker threads for batch work [default: available cores]
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment one image or every image in a directory
    Segment(Box<segment::SegmentArgs>),
    /// Validate, rasterize or trace YOLO label files
    #[command(subcommand)]
    Labels(labels::LabelsCommand),
    /// Score predictions against a labelled dataset
    Eval(eval::EvalArgs),
    /// Run the annotation service
    Serve(serve::ServeArgs),
}

/// A problem with the invocation rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn thread_pool(jobs: Option<u16>) -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n as usize);
    }
    Ok(b.build()?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Segment(args) => thread_pool(cli.jobs)?.install(|| segment::run(*args)),
        Command::Labels(cmd) => thread_pool(cli.jobs)?.install(|| labels::run(cmd)),
        Command::Eval(args) => thread_pool(cli.jobs)?.install(|| eval::run(args)),
        Command::Serve(args) => serve::run(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("XRAYSEGKIT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Parses `x,y`.
pub fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x,y but got {s:?}"))?;
    match (a.trim().parse(), b.trim().parse()) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(format!("expected x,y but got {s:?}")),
    }
}

pub fn ensure_parent(path: &std::path::Path) -> anyhow::Result<()> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(p).map_err(|e| anyhow::anyhow!("creating {}: {e}", p.display()))?;
    }
    Ok(())
}
