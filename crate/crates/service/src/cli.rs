//! The `ideareader` command line.

use std::ffi::OsString;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use ideareader_core::pipeline::{run_pipeline, PipelineConfig};
use ideareader_core::tree::render_report;
use ideareader_core::{CitationGraph, CorpusStore, ResultDocument};
use log::info;
use thiserror::Error;

use crate::http::{serve, AppState};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "ideareader", version, about = "Idea-flow machine reading over a local citation corpus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a line-delimited corpus file and write a store directory.
    Ingest {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the pipeline for one target and write the result document.
    Run {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a result document as a self-contained HTML report.
    Report {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Failures that map to the data-error exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Corpus(#[from] ideareader_core::CorpusError),
    #[error(transparent)]
    Pipeline(#[from] ideareader_core::PipelineError),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

fn file_error(path: &Path, e: impl ToString) -> CliError {
    CliError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::from(EXIT_OK),
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| file_error(p, e))?;
            PipelineConfig::from_json(&bytes).map_err(|e| file_error(p, e))?
        }
        None => PipelineConfig::default(),
    };
    config.apply_env();
    config.validate()?;
    Ok(config)
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { corpus, out } => {
            let store = CorpusStore::ingest(&corpus)?;
            store.save(&out)?;
            let s = store.stats();
            eprintln!(
                "stored {} of {} records ({} duplicates, {} dangling, {} self references dropped)",
                s.stored, s.records_read, s.duplicates_dropped, s.dangling_dropped, s.self_edges_dropped
            );
        }
        Command::Run {
            store,
            target,
            config,
            out,
        } => {
            let config = load_config(config.as_deref())?;
            let store = CorpusStore::load(&store)?;
            let graph = CitationGraph::build(&store);
            let result = run_pipeline(&store, &graph, &target, &config)?;
            for t in &result.timings {
                info!("{:<24} {:>10.2} ms", t.stage, t.millis);
            }
            std::fs::write(&out, &result.bytes).map_err(|e| file_error(&out, e))?;
        }
        Command::Report { result, out } => {
            let bytes = std::fs::read(&result).map_err(|e| file_error(&result, e))?;
            let doc = ResultDocument::from_bytes(&bytes).map_err(|e| file_error(&result, e))?;
            std::fs::write(&out, render_report(&doc)).map_err(|e| file_error(&out, e))?;
        }
        Command::Serve {
            store,
            port,
            host,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let store = CorpusStore::load(&store)?;
            let state = AppState::new(store, config);
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| file_error(Path::new("<runtime>"), e))?;
            let addr = SocketAddr::new(host, port);
            runtime
                .block_on(serve(state, addr))
                .map_err(|e| file_error(Path::new(&addr.to_string()), e))?;
        }
    }
    Ok(())
}
