use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Bumped whenever a field is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Common JSON wrapper. `generated_at` is the only field that varies
/// between identical runs.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: &'static str,
    pub command: &'a str,
    pub tool_version: &'static str,
    pub generated_at: String,
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

pub fn envelope<T: Serialize>(command: &str, seed: u64, body: T) -> Envelope<'_, T> {
    Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed,
        body,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// CSV with a `schema_version` first column on every row.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut full = vec!["schema_version"];
    full.extend_from_slice(header);
    w.write_record(&full).map_err(|e| CliError::Numerical(e.to_string()))?;
    for row in rows {
        let mut rec = vec![SCHEMA_VERSION.to_string()];
        rec.extend(row.iter().cloned());
        w.write_record(&rec).map_err(|e| CliError::Numerical(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn emit(bytes: &[u8], output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

pub fn num(v: f64) -> String {
    v.to_string()
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
