//! Command-line front end for the simplex QMC toolkit.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use simplex_qmc::Error;

use crate::config::RunConfig;

const AFTER_HELP: &str = "\
Configuration: built-in defaults < command-line flags < --config FILE
(JSON object with \"schema\": 1 and any of the long flag names, with
dashes written as underscores, e.g. {\"schema\": 1, \"d\": 2, \"max_degree\": 8}).

CSV tables (--format csv, or --csv FILE):
  bounds        n,expected,upper,lower
  rate          n,best_e,best_e2,upper_e,expected_e
  tract         m,sum_gamma,upper,lower,upper_eps2,m_exponent,
                strong_polynomial,polynomial,weak
  wce, search   d,r,m,n,seed,e2,upper,lower,expected
Point-set CSV files have a header x{j}_{i} (coordinate i of factor j,
from 1) and one row per node.

Exit status: 0 success, 1 runtime failure or failed verification,
2 invalid configuration, 3 smoothness r <= d + 1.
Errors are printed to stderr as {\"error\": {\"code\", \"kind\", \"message\"}}.";

#[derive(Debug, Parser)]
#[command(name = "simplex-qmc", version, about = "QMC integration over products of simplices", after_help = AFTER_HELP)]
struct Cli {
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file; its values override flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Result format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the command's table as CSV
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// More logging (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build (or load from the cache) the orthonormal basis of degree <= L
    Basis {
        #[command(flatten)]
        cfg: RunConfig,
        /// Write the exact basis document here
        #[arg(long)]
        document: Option<PathBuf>,
    },
    /// Evaluate g, K_1 per factor and K_m at --x, --y
    Kernel {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Kernel constants c_dr, s_dr, extremum estimates, b_dr, M_dr, α_dr
    Constants {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Worst-case error of the point set in --points, with its bounds
    Wce {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Upper, lower and mean-square bounds for each n in --n-values
    Bounds {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Best-of-R random search, optionally refined by exchange descent
    Search {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Best-of-R error against n and its log-log slope
    Rate {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Tractability verdict and node-count bounds against m for --family
    Tract {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Run the invariant checks; exits 1 if any fails
    Verify {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Write a uniform random point set
    Sample {
        #[command(flatten)]
        cfg: RunConfig,
    },
}

impl Command {
    fn cfg(&self) -> &RunConfig {
        match self {
            Command::Basis { cfg, .. }
            | Command::Kernel { cfg }
            | Command::Constants { cfg }
            | Command::Wce { cfg }
            | Command::Bounds { cfg }
            | Command::Search { cfg }
            | Command::Rate { cfg }
            | Command::Tract { cfg }
            | Command::Verify { cfg }
            | Command::Sample { cfg } => cfg,
        }
    }
}

/// Exit status and kind label for a library error.
fn classify(e: &Error) -> (u8, &'static str) {
    match e {
        Error::Smoothness { .. } => (3, "smoothness"),
        Error::InvalidArgument(_) => (2, "invalid-argument"),
        Error::DimensionMismatch { .. } => (2, "dimension-mismatch"),
        Error::OutOfRange { .. } => (2, "out-of-range"),
        Error::Parse(_) => (2, "parse"),
        Error::Io(_) => (1, "io"),
        Error::Internal(_) => (1, "internal"),
    }
}

fn fail(code: u8, kind: &str, message: &str) -> ExitCode {
    let doc = json!({ "error": { "code": code, "kind": kind, "message": message } });
    eprintln!("{doc}");
    ExitCode::from(code)
}

fn write_out(path: Option<&PathBuf>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(2, "usage", e.render().to_string().trim()),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(2, "invalid-argument", "--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(1, "internal", &e.to_string());
        }
    }

    let cfg = match &cli.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok(file) => cli.command.cfg().clone().overlay(file),
            Err(e) => return fail(2, "config", &e.to_string()),
        },
        None => cli.command.cfg().clone(),
    };

    let result = match &cli.command {
        Command::Basis { document, .. } => commands::basis(&cfg, document.as_ref()),
        Command::Kernel { .. } => commands::kernel(&cfg),
        Command::Constants { .. } => commands::constants_report(&cfg),
        Command::Wce { .. } => commands::wce(&cfg),
        Command::Bounds { .. } => commands::bounds(&cfg),
        Command::Search { .. } => commands::search(&cfg),
        Command::Rate { .. } => commands::rate(&cfg),
        Command::Tract { .. } => commands::tract(&cfg),
        Command::Verify { .. } => commands::verify(&cfg),
        Command::Sample { .. } => commands::sample(&cfg),
    };
    let output = match result {
        Ok(o) => o,
        Err(e) => {
            let (code, kind) = classify(&e);
            return fail(code, kind, &e.to_string());
        }
    };

    let main_text = match cli.format {
        Format::Json => &output.json,
        Format::Csv => match &output.csv {
            Some(t) => t,
            None => return fail(2, "invalid-argument", "this command has no CSV table"),
        },
    };
    if let Err(e) = write_out(cli.out.as_ref(), main_text) {
        return fail(1, "io", &e.to_string());
    }
    if let Some(path) = &cli.csv {
        let Some(table) = &output.csv else {
            return fail(2, "invalid-argument", "this command has no CSV table");
        };
        if let Err(e) = std::fs::write(path, table) {
            return fail(1, "io", &e.to_string());
        }
    }
    if output.failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
