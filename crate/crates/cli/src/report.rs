use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Wrapper around every emitted result. Carries no timestamp, so identical
/// inputs and seed give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(
        command: &str,
        cfg: &RunConfig,
        seed: Option<u64>,
        inputs: &[&Path],
        result: T,
    ) -> anyhow::Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| digest(p).map(|sha256| InputDigest {
                path: p.to_path_buf(),
                sha256,
            }))
            .collect::<anyhow::Result<_>>()?;
        Ok(Envelope {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            seed,
            config: cfg.echo(),
            inputs,
            result,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }
}

/// Reads the `result` of an envelope written by another subcommand.
pub fn read_result<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let env: Envelope<T> = serde_json::from_str(&src)
        .map_err(morcela::Error::from)
        .with_context(|| format!("parsing report {}", path.display()))?;
    Ok(env.result)
}

pub fn digest(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Where the envelope for a non-JSON output goes.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}
