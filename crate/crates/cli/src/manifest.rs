//! Run manifests written next to every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::{write_file, IoError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    /// Output file name to hex SHA-256 of its contents.
    pub checksums: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `<file>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

impl RunManifest {
    pub fn new(command_line: &str, seed: u64, wall_time_s: f64) -> Self {
        Self {
            command_line: command_line.to_owned(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_time_s,
            checksums: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, output: &Path, contents: &[u8]) {
        let key = output.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.checksums.insert(key, sha256_hex(contents));
    }

    pub fn write_for(&self, output: &Path) -> Result<PathBuf, IoError> {
        let path = manifest_path(output);
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        write_file(&path, json.as_bytes())?;
        Ok(path)
    }
}

/// Writes `contents` to `path` plus its manifest.
pub fn write_with_manifest(
    path: &Path,
    contents: &[u8],
    command_line: &str,
    seed: u64,
    wall_time_s: f64,
) -> Result<(), IoError> {
    write_file(path, contents)?;
    let mut m = RunManifest::new(command_line, seed, wall_time_s);
    m.record(path, contents);
    m.write_for(path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_sits_next_to_the_output() {
        assert_eq!(manifest_path(Path::new("out/a.csv")), PathBuf::from("out/a.csv.manifest.json"));
    }
}
