//! Report files. Payloads are deterministic; anything run-specific goes
//! into the `run.meta.json` sidecar.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliError;

pub const META_FILE: &str = "run.meta.json";

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialising report: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Destination for the files a command produces.
pub struct Sink {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?;
        }
        Ok(Sink {
            dir,
            written: Vec::new(),
        })
    }

    /// No-op without an output directory.
    pub fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(d) = &self.dir {
            write_atomic(&d.join(name), bytes)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn finish(self, command: &str, config: &Path, elapsed: Duration) -> Result<(), CliError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let meta = RunMeta {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: config.display().to_string(),
            outputs: &self.written,
            finished_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            elapsed_ms: elapsed.as_secs_f64() * 1e3,
        };
        write_atomic(&dir.join(META_FILE), to_json(&meta)?.as_bytes())
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: String,
    outputs: &'a [String],
    finished_unix_s: u64,
    elapsed_ms: f64,
}
