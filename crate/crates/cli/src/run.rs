//! Run directories: configuration hashing, artifact envelopes and the run
//! report.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "shadowlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    /// A verified negative result (failure witness, impossibility).
    Negative,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Negative => 3,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    config_hash: &'a str,
    kind: &'a str,
    body: &'a T,
}

#[derive(Serialize)]
struct ArtifactRef {
    kind: String,
    file: String,
}

#[derive(Serialize)]
struct Stage {
    name: String,
    seconds: f64,
}

#[derive(Serialize)]
struct RunReport<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    config: &'a Value,
    status: Status,
    summary: &'a Value,
    artifacts: &'a [ArtifactRef],
    timing: &'static str,
}

/// One run: a directory named by the command and the hash of its
/// configuration, the artifacts written into it and per-stage wall times.
pub struct Run {
    command: String,
    dir: PathBuf,
    config: Value,
    hash: String,
    seed: u64,
    artifacts: Vec<ArtifactRef>,
    stages: Vec<Stage>,
    clock: Instant,
}

impl Run {
    pub fn create<C: Serialize>(root: &Path, command: &str, seed: u64, config: &C) -> Result<Run> {
        let config = serde_json::to_value(config)?;
        let hash = sha256_hex(serde_json::to_string(&config)?.as_bytes());
        let dir = root.join(format!("{command}-{}", &hash[..16]));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run {
            command: command.to_string(),
            dir,
            config,
            hash,
            seed,
            artifacts: Vec::new(),
            stages: Vec::new(),
            clock: Instant::now(),
        })
    }

    /// Closes the current stage under `name`.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push(Stage { name: name.to_string(), seconds: (now - self.clock).as_secs_f64() });
        self.clock = now;
    }

    /// Writes `body` wrapped in an envelope carrying the seed and config hash.
    pub fn json<T: Serialize>(&mut self, file: &str, kind: &str, body: &T) -> Result<()> {
        let hash = self.hash.clone();
        let env = Envelope { tool: TOOL, version: VERSION, seed: self.seed, config_hash: &hash, kind, body };
        self.write(file, kind, |w| Ok(serde_json::to_writer_pretty(w, &env)?))
    }

    pub fn csv<F>(&mut self, file: &str, kind: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
    {
        self.write(file, kind, f)
    }

    fn write<F>(&mut self, file: &str, kind: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
    {
        let path = self.dir.join(file);
        let mut w = BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        f(&mut w)?;
        w.flush()?;
        self.artifacts.push(ArtifactRef { kind: kind.to_string(), file: file.to_string() });
        Ok(())
    }

    /// Writes run.json and timing.json and prints the run directory.
    pub fn finish(self, status: Status, summary: Value) -> Result<Status> {
        let report = RunReport {
            tool: TOOL,
            version: VERSION,
            command: &self.command,
            config_hash: &self.hash,
            config: &self.config,
            status,
            summary: &summary,
            artifacts: &self.artifacts,
            timing: "timing.json",
        };
        fs::write(self.dir.join("run.json"), serde_json::to_string_pretty(&report)?)?;
        fs::write(self.dir.join("timing.json"), serde_json::to_string_pretty(&self.stages)?)?;
        // A closed stdout (e.g. piped into head) is not an error for the run.
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", serde_json::to_string(&summary)?);
        let _ = writeln!(out, "{}", self.dir.display());
        Ok(status)
    }
}
