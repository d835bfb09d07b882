//! Stamped JSON and CSV emission.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(CliError::Parse(format!("unknown format `{s}`"))),
        }
    }
}

pub struct Emitter {
    pub format: Format,
    pub seed: u64,
    pub command: String,
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    command: &'a str,
    result: &'a T,
}

pub fn stamp(seed: u64, command: &str) -> String {
    format!("# conic-moduli {VERSION} seed={seed} command={command}\n")
}

pub fn csv_bytes(seed: u64, command: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut buf = stamp(seed, command).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

impl Emitter {
    fn write(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.output {
            Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    pub fn json<T: Serialize>(&self, result: &T) -> Result<(), CliError> {
        let env = Envelope { tool: "conic-moduli", version: VERSION, seed: self.seed, command: &self.command, result };
        let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write(s.as_bytes())
    }

    pub fn csv(&self, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        self.write(&csv_bytes(self.seed, &self.command, header, rows)?)
    }

    /// JSON-only commands refuse a CSV request up front.
    pub fn require_json(&self) -> Result<(), CliError> {
        if self.format == Format::Csv {
            return Err(CliError::Parse(format!("`{}` only emits JSON", self.command)));
        }
        Ok(())
    }
}
