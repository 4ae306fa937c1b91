//! Result files and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const SIG_DIGITS: usize = 12;

/// Fixed 12-significant-digit form used in CSV files.
pub fn fmt_sig(v: f64) -> String {
    if v.is_finite() {
        format!("{:.*e}", SIG_DIGITS - 1, v)
    } else {
        v.to_string()
    }
}

/// `v` rounded to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v.is_finite() {
        fmt_sig(v).parse().unwrap_or(v)
    } else {
        v
    }
}

/// Round every number in a JSON tree to 12 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = x;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

/// One file a command produces. `suffix` is appended to the output path;
/// the primary result has an empty suffix.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub suffix: &'static str,
    pub contents: String,
}

impl Artifact {
    pub fn primary(contents: String) -> Self {
        Artifact { suffix: "", contents }
    }

    pub fn path(&self, out: &Path) -> PathBuf {
        let mut p = out.as_os_str().to_owned();
        p.push(self.suffix);
        PathBuf::from(p)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub version: String,
    pub duration_s: f64,
    pub outputs: Vec<FileDigest>,
}

pub fn version() -> String {
    format!("qjump {}", env!("CARGO_PKG_VERSION"))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".manifest.json");
    PathBuf::from(p)
}

/// Write the artifacts next to `out` and a manifest referencing them.
pub fn write_outputs(
    out: &Path,
    command: &str,
    config: &RunConfig,
    artifacts: &[Artifact],
    elapsed: Duration,
) -> Result<PathBuf, CliError> {
    let mut outputs = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = a.path(out);
        fs::write(&path, &a.contents)?;
        outputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(a.contents.as_bytes()) });
    }
    let manifest = RunManifest {
        command: command.to_string(),
        config: config.clone(),
        seed: config.seed,
        version: version(),
        duration_s: elapsed.as_secs_f64(),
        outputs,
    };
    let path = manifest_path(out);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}
