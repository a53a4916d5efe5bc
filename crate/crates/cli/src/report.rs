use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Serialize)]
pub struct InputInfo {
    pub path: PathBuf,
    /// SHA-256 of the file bytes.
    pub sha256: String,
    /// Checksum of the parsed metric space, when the input is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space_checksum: Option<String>,
}

impl InputInfo {
    pub fn of(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(InputInfo {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            space_checksum: None,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputInfo>,
    pub seed: u64,
    pub verdict: String,
    pub exit_code: i32,
    pub result: Value,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            input: None,
            seed,
            verdict: String::new(),
            exit_code: EXIT_OK,
            result: Value::Null,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn finish(&mut self, verdict: &str, exit_code: i32, result: Value) {
        self.verdict = verdict.to_string();
        self.exit_code = exit_code;
        self.result = result;
    }

    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_ms.insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        match out {
            Some(path) => std::fs::write(path, text + "\n"),
            None => {
                use std::io::Write;
                match writeln!(std::io::stdout().lock(), "{text}") {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                    other => other,
                }
            }
        }
    }
}
