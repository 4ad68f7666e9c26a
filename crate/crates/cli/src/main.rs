mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use config::{Cli, Command};

const THREADS_VAR: &str = "CAVITY_SQUEEZE_THREADS";
const DEFAULT_MANIFEST: &str = "cavity-squeeze.manifest.json";

/// Record of one run. `config` is enough to replay it.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    command: String,
    config: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    replayed_from: Option<PathBuf>,
    threads: usize,
    exit_code: u8,
    output: Option<PathBuf>,
    output_bytes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    timings: Timings,
    metadata: Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct Timings {
    compute_seconds: f64,
    total_seconds: f64,
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<cavity_squeeze::Error>() {
        Some(err) if err.is_numerical() => 3,
        _ => 1,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn manifest_path(out: Option<&Path>, explicit: Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| match out {
        Some(p) => {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(DEFAULT_MANIFEST),
    })
}

fn run(command: Command) -> Result<u8> {
    let started = Instant::now();
    let (command, replayed_from, manifest_override) = match command {
        Command::Replay(r) => {
            let text = std::fs::read_to_string(&r.manifest_file).with_context(|| format!("reading {}", r.manifest_file.display()))?;
            let recorded: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", r.manifest_file.display()))?;
            let mut config = recorded.config;
            if matches!(config, Command::Replay(_)) {
                bail!("manifest records a replay");
            }
            if let Some(out) = r.out {
                config.redirect(out);
            }
            (config, Some(r.manifest_file), r.manifest)
        }
        other => (other, None, None),
    };

    let (out, explicit_manifest) = command.destinations();
    let manifest_file = manifest_path(out.as_deref(), manifest_override.or(explicit_manifest));
    let computed = commands::execute(&command);
    let compute_seconds = started.elapsed().as_secs_f64();

    let (outcome, error) = match computed {
        Ok(o) => (Some(o), None),
        Err(e) => (None, Some(e)),
    };
    if let Some(o) = &outcome {
        match &out {
            Some(p) => std::fs::write(p, &o.data).with_context(|| format!("writing {}", p.display()))?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(o.data.as_bytes())?;
                stdout.flush()?;
            }
        }
    }
    let exit_code = match (&outcome, &error) {
        (Some(o), _) => o.exit_code,
        (None, Some(e)) => exit_code_for(e),
        (None, None) => unreachable!(),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: cavity_squeeze::VERSION.to_string(),
        command: command.name().to_string(),
        config: command.clone(),
        replayed_from,
        threads: rayon::current_num_threads(),
        exit_code,
        output: out,
        output_bytes: outcome.as_ref().map_or(0, |o| o.data.len()),
        error: error.as_ref().map(|e| format!("{e:#}")),
        timings: Timings {
            compute_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        },
        metadata: outcome.map_or(Value::Null, |o| o.metadata),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&manifest_file, text).with_context(|| format!("writing manifest {}", manifest_file.display()))?;
    match error {
        Some(e) => Err(e),
        None => Ok(exit_code),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
