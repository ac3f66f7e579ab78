use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::io::OutDir;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// How a run ended, as recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    Partial,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Complete => "complete",
            Status::Partial => "partial",
            Status::Failed => "failed",
        }
    }
}

/// Text sidecar describing one run: command line, effective settings,
/// input digests and wall-clock time per phase. Timings live only here so
/// that the numeric outputs stay byte-identical across reruns.
#[derive(Debug, Clone)]
pub struct RunManifest {
    command_line: Vec<String>,
    config: Vec<(String, String)>,
    inputs: Vec<(String, String)>,
    phases: Vec<(String, Duration)>,
    notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>) -> Self {
        RunManifest {
            command_line,
            config: Vec::new(),
            inputs: Vec::new(),
            phases: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.config.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.config.push((key.to_string(), value)),
        }
    }

    /// Records the SHA-256 of an input file.
    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(|e| CliError::file(path, e))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.inputs.push((path.display().to_string(), digest));
        Ok(())
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    /// Runs `f` and records its wall-clock time under `name`.
    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push((name.to_string(), start.elapsed()));
        out
    }

    pub fn render(&self, status: Status) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command_line.join(" "));
        let _ = writeln!(s, "version = {}", spectral_descent::VERSION);
        let _ = writeln!(s, "status = {}", status.as_str());
        s.push_str("\n[config]\n");
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k} = {v}");
        }
        s.push_str("\n[inputs]\n");
        for (path, digest) in &self.inputs {
            let _ = writeln!(s, "sha256 {digest}  {path}");
        }
        s.push_str("\n[timing]\n");
        for (name, d) in &self.phases {
            let _ = writeln!(s, "{name} = {:.6}s", d.as_secs_f64());
        }
        if !self.notes.is_empty() {
            s.push_str("\n[notes]\n");
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        s
    }

    pub fn write(&self, out: &OutDir, status: Status) -> CliResult<()> {
        out.write_bytes(MANIFEST_FILE, self.render(status).as_bytes())
    }
}
