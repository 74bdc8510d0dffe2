use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Plot {
    Svg,
}

/// Provenance record written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: Value,
    pub library_version: String,
    pub truncation: Option<Value>,
    pub wall_time_seconds: f64,
}

pub struct Sink {
    out: Option<PathBuf>,
    started: Instant,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self { out, started: Instant::now() }
    }

    /// Writes `body` to `--out` (with a manifest) or stdout, and the plot
    /// next to it.
    pub fn emit(
        &self,
        subcommand: &str,
        parameters: Value,
        truncation: Option<Value>,
        body: &str,
        svg: Option<String>,
    ) -> Result<()> {
        match &self.out {
            None => {
                if svg.is_some() {
                    bail!(UsageError("--plot needs --out to place the SVG next to the data".into()));
                }
                io::stdout().write_all(body.as_bytes())?;
            }
            Some(path) => {
                fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
                if let Some(svg) = svg {
                    let p = sibling(path, "svg");
                    fs::write(&p, svg).with_context(|| format!("writing {}", p.display()))?;
                }
                let manifest = RunManifest {
                    subcommand: subcommand.to_string(),
                    parameters,
                    library_version: sesqui::VERSION.to_string(),
                    truncation,
                    wall_time_seconds: self.started.elapsed().as_secs_f64(),
                };
                let p = sibling(path, "manifest.json");
                fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")
                    .with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Ok(())
    }
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Command-line misuse that clap cannot detect.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
