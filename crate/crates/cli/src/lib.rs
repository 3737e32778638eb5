//! Command-line front end for the asymptotic-ℓ1 workbench. Every command
//! writes one JSON artifact holding its configuration, a status and the
//! result; exit codes are 0 for success, 1 for a mathematical failure, 2 for
//! usage errors and 3 when a resource budget runs out.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use asyml1_core::budget::Budget;
use asyml1_core::VERIFIER_VERSION;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

pub mod commands;
pub mod config;
pub mod json;

use config::RunConfig;

pub const SCHEMA_VERSION: &str = "asyml1-artifact/1";

#[derive(Parser, Debug)]
#[command(name = "asyml1", version, about = "Exact certificates for asymptotic-l1 block constructions")]
pub struct Cli {
    /// Resource limits: `default` or e.g. `support=20,evals=200000,window=64,sets=1048576`.
    #[arg(long, global = true, default_value = "default", value_parser = config::parse_budget)]
    pub budget: Budget,
    /// Recorded in the artifact. Every search is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the artifact here (atomically) instead of to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Schreier families S_alpha.
    #[command(subcommand)]
    Schreier(commands::SchreierCmd),
    /// Norms of the bundled space models.
    #[command(subcommand)]
    Norm(commands::NormCmd),
    /// (alpha, eps) block certificates.
    #[command(subcommand)]
    Block(commands::BlockCmd),
    /// Chains of blocks and the domination checks.
    #[command(subcommand)]
    Chain(commands::ChainCmd),
    /// Measure families and the separation transcript.
    #[command(subcommand)]
    Msep(commands::MsepCmd),
    /// Countable ordinals in Cantor normal form.
    #[command(subcommand)]
    Ordinal(commands::OrdinalCmd),
}

impl Command {
    fn name(&self) -> String {
        let (group, sub) = match self {
            Command::Schreier(c) => ("schreier", c.name()),
            Command::Norm(c) => ("norm", c.name()),
            Command::Block(c) => ("block", c.name()),
            Command::Chain(c) => ("chain", c.name()),
            Command::Msep(c) => ("msep", c.name()),
            Command::Ordinal(c) => ("ordinal", c.name()),
        };
        format!("{group} {sub}")
    }
}

/// Model selection shared by the commands that evaluate norms.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// `schreier` or `tsirelson`.
    #[arg(long, default_value = "schreier")]
    pub model: String,
    /// Level of the norming family.
    #[arg(long, default_value = "1")]
    pub alpha: String,
    /// Tsirelson damping factor.
    #[arg(long, default_value = "1/2")]
    pub theta: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Usage,
    Resource,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Usage => 2,
            Status::Resource => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Usage => "usage_error",
            Status::Resource => "resource_error",
        }
    }
}

/// What a command produced: a status and its result object.
pub struct Outcome {
    pub status: Status,
    pub result: Value,
}

impl Outcome {
    pub fn pass(result: Value) -> Self {
        Outcome { status: Status::Pass, result }
    }

    pub fn check(ok: bool, result: Value) -> Self {
        Outcome { status: if ok { Status::Pass } else { Status::Fail }, result }
    }
}

/// Maps an error to its status and result. Core errors keep their kind;
/// anything else (bad files, malformed JSON) is a usage error.
fn error_outcome(err: &anyhow::Error) -> Outcome {
    use asyml1_core::Error as E;
    let message = format!("{err:#}");
    let core = err.chain().find_map(|e| e.downcast_ref::<E>());
    let (status, kind, step) = match core {
        Some(E::Budget { .. }) => (Status::Resource, "budget", None),
        Some(E::Exhausted(_)) => (Status::Resource, "exhausted", None),
        Some(E::Failed { step, .. }) => (Status::Fail, "failed", Some(step.clone())),
        Some(E::Precondition(_)) => (Status::Usage, "precondition", None),
        Some(E::Parse(_)) => (Status::Usage, "parse", None),
        None => (Status::Usage, "input", None),
    };
    let mut result = json!({"error": kind, "message": message});
    if let Some(step) = step {
        result["step"] = json!(step);
    }
    Outcome { status, result }
}

pub fn artifact(config: &RunConfig, outcome: &Outcome) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "config": config.to_json(),
        "status": outcome.status.label(),
        "result": outcome.result,
        "verifier": VERIFIER_VERSION,
    })
}

/// Canonical artifact text: pretty JSON with sorted keys and a final newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parses `argv` (program name first), runs the command and emits the
/// artifact. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage.code() } else { 0 };
        }
    };
    let config = RunConfig {
        argv: argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        command: cli.command.name(),
        budget: cli.budget,
        seed: cli.seed,
        out: cli.out.clone(),
    };
    let outcome = commands::dispatch(&cli.command, &config).unwrap_or_else(|e| {
        eprintln!("asyml1: {e:#}");
        error_outcome(&e)
    });
    let text = render(&artifact(&config, &outcome));
    match &config.out {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                eprintln!("asyml1: {e:#}");
                return Status::Usage.code();
            }
        }
        None => print!("{text}"),
    }
    outcome.status.code()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_exit_codes() {
        let budget = anyhow::Error::new(asyml1_core::Error::Budget { what: "x", needed: 2, limit: 1 });
        assert_eq!(error_outcome(&budget).status, Status::Resource);
        let failed = anyhow::Error::new(asyml1_core::Error::Failed { step: "block".into(), detail: "none".into() });
        let o = error_outcome(&failed);
        assert_eq!((o.status, o.result["step"].as_str()), (Status::Fail, Some("block")));
        let io = anyhow::anyhow!("no such file");
        assert_eq!(error_outcome(&io).status, Status::Usage);
        let wrapped = anyhow::Error::new(asyml1_core::Error::Exhausted("m0".into())).context("find0");
        assert_eq!(error_outcome(&wrapped).status, Status::Resource);
    }
}
