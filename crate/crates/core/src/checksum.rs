//! SHA-256 helpers and the `sha256  path` manifest format.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Writes `bytes` and returns their checksum.
pub fn write_checked(path: &Path, bytes: &[u8]) -> Result<String> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(bytes))
}

/// Ordered list of `(relative path, sha256)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChecksumList {
    pub entries: Vec<(String, String)>,
}

impl ChecksumList {
    pub fn push(&mut self, name: impl Into<String>, sha: String) {
        self.entries.push((name.into(), sha));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, s)| s.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(n, s)| format!("{s}  {n}\n")).collect()
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (sha, name) = line
                .split_once("  ")
                .ok_or_else(|| format!("line {}: expected `<sha256>  <path>`", i + 1))?;
            if sha.len() != 64 || !sha.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(format!("line {}: malformed checksum", i + 1));
            }
            entries.push((name.to_string(), sha.to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|m| Error::format(path, m))
    }

    pub fn write(&self, path: &Path) -> Result<String> {
        write_checked(path, self.to_text().as_bytes())
    }
}
