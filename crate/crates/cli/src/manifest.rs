//! Run manifests.
//!
//! Every run writes `<out>.manifest` next to its primary output:
//!
//! ```text
//! # advscape run manifest
//! tool_version = 0.1.0
//! subcommand = train
//! config.<key> = <value>          one line per resolved key
//! seed.<key> = <value>            seed-typed keys, repeated for quick lookup
//! input.<key> = <sha256> <path>
//! output.<key> = <sha256> <path>
//! timing.wall_secs = <seconds>
//! ```
//!
//! Paths are recorded as given on the command line, so a replay must run
//! from the same working directory.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::parse_pairs;
use crate::error::{config_err, io_err, CliError, Result};

pub const HEADER: &str = "# advscape run manifest";

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub key: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub config: Vec<(String, String)>,
    pub seeds: Vec<(String, String)>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub wall_secs: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Sidecar manifest path for an output file.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Hash `path` and, when a sidecar manifest exists, check the hash against
/// the one recorded there.
pub fn verify_input(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(CliError::Integrity(format!("input {} does not exist", path.display())));
    }
    let digest = sha256_file(path)?;
    let side = sidecar(path);
    if side.is_file() {
        let manifest = RunManifest::read(&side)?;
        let name = path.file_name();
        let recorded = manifest
            .outputs
            .iter()
            .find(|a| a.path.file_name() == name)
            .ok_or_else(|| {
                CliError::Integrity(format!("{} does not list {}", side.display(), path.display()))
            })?;
        if recorded.sha256 != digest {
            return Err(CliError::Integrity(format!(
                "{} has sha256 {digest} but {} records {}",
                path.display(),
                side.display(),
                recorded.sha256
            )));
        }
    }
    Ok(digest)
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\n");
        let _ = writeln!(out, "tool_version = {}", self.tool_version);
        let _ = writeln!(out, "subcommand = {}", self.subcommand);
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k} = {v}");
        }
        for (k, v) in &self.seeds {
            let _ = writeln!(out, "seed.{k} = {v}");
        }
        for (tag, list) in [("input", &self.inputs), ("output", &self.outputs)] {
            for a in list {
                let _ = writeln!(out, "{tag}.{} = {} {}", a.key, a.sha256, a.path.display());
            }
        }
        let _ = writeln!(out, "timing.wall_secs = {:.3}", self.wall_secs);
        out
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        if !text.starts_with(HEADER) {
            return Err(CliError::Integrity(format!("{origin} is not a run manifest")));
        }
        let mut m = RunManifest::default();
        for (key, value) in parse_pairs(text, origin)? {
            let artifact = |k: &str| -> Result<Artifact> {
                let (sha, path) = value
                    .split_once(' ')
                    .ok_or_else(|| config_err!("{origin}: malformed artifact line for {k}"))?;
                Ok(Artifact {
                    key: k.to_string(),
                    path: PathBuf::from(path),
                    sha256: sha.to_string(),
                })
            };
            if key == "tool_version" {
                m.tool_version = value.clone();
            } else if key == "subcommand" {
                m.subcommand = value.clone();
            } else if key == "timing.wall_secs" {
                m.wall_secs = value.parse().unwrap_or(f64::NAN);
            } else if let Some(k) = key.strip_prefix("config.") {
                m.config.push((k.to_string(), value.clone()));
            } else if let Some(k) = key.strip_prefix("seed.") {
                m.seeds.push((k.to_string(), value.clone()));
            } else if let Some(k) = key.strip_prefix("input.") {
                m.inputs.push(artifact(k)?);
            } else if let Some(k) = key.strip_prefix("output.") {
                m.outputs.push(artifact(k)?);
            } else {
                return Err(config_err!("{origin}: unknown manifest key `{key}`"));
            }
        }
        if m.subcommand.is_empty() {
            return Err(config_err!("{origin}: manifest names no subcommand"));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(io_err(path))
    }
}
