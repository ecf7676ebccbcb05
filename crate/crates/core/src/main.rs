use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use kurepa::scenario::{run, Command, Scenario};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    BuildFamily,
    TwoThin,
    Color,
    Audit,
    Pr1,
    All,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::BuildFamily => Command::BuildFamily,
            Cmd::TwoThin => Command::TwoThin,
            Cmd::Color => Command::Color,
            Cmd::Audit => Command::Audit,
            Cmd::Pr1 => Command::Pr1,
            Cmd::All => Command::All,
        }
    }
}

/// Run a scenario through the pipeline and write certificates.
///
/// Exit status: 0 when every audit passes, 2 on an audit failure, 3 when the
/// scenario cannot be run.
#[derive(Parser, Debug)]
#[command(name = "kurepa", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    scenario: PathBuf,
    /// Output directory for the JSON documents.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn write(dir: &Path, name: &str, v: &Value) -> anyhow::Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = fs::create_dir_all(&cli.out) {
        eprintln!("error: {}: {e}", cli.out.display());
        return ExitCode::from(3);
    }
    let outcome = Scenario::load(&cli.scenario).and_then(|sc| run(&sc, cli.command.into()));
    match outcome {
        Ok(out) => {
            for (name, doc) in &out.files {
                if let Err(e) = write(&cli.out, name, doc) {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(3);
                }
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                for (name, doc) in &out.files {
                    for k in failing(doc) {
                        eprintln!("FAIL {name}: {k}");
                    }
                }
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let _ = write(&cli.out, "error.json", &json!({"error": e.to_string()}));
            ExitCode::from(3)
        }
    }
}

fn failing(doc: &Value) -> Vec<String> {
    let cert = doc.get("certificate").unwrap_or(doc);
    cert.get("clauses")
        .and_then(Value::as_object)
        .map(|m| {
            m.iter()
                .filter(|(_, c)| c["pass"] == false)
                .map(|(k, c)| format!("{k} {}", c["witness"]))
                .collect()
        })
        .unwrap_or_default()
}
