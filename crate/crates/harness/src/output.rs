//! Output files: atomic writes and the checksum manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, ManifestEntry>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// File contents keyed by name, written together with a manifest.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, data: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), data.into());
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.add(name, text);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            files: self
                .files
                .iter()
                .map(|(name, data)| {
                    (
                        name.clone(),
                        ManifestEntry {
                            sha256: sha256_hex(data),
                            bytes: data.len() as u64,
                        },
                    )
                })
                .collect(),
        }
    }

    /// Writes every file and the manifest, each through a temp file and rename.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, data) in &self.files {
            write_atomic(&dir.join(name), data)?;
        }
        let mut manifest = serde_json::to_vec_pretty(&self.manifest())?;
        manifest.push(b'\n');
        let path = dir.join(MANIFEST);
        write_atomic(&path, &manifest)?;
        Ok(path)
    }

    /// Compares against the manifest already in `dir`; returns mismatching names.
    pub fn check_against(&self, dir: &Path) -> Result<Vec<String>> {
        let stored = read_manifest(dir)?;
        let fresh = self.manifest();
        let mut bad: Vec<String> = fresh
            .files
            .iter()
            .filter(|(name, entry)| stored.files.get(*name) != Some(entry))
            .map(|(name, _)| name.clone())
            .collect();
        bad.extend(
            stored
                .files
                .keys()
                .filter(|name| !fresh.files.contains_key(*name))
                .cloned(),
        );
        Ok(bad)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_slice(&text)?)
}

/// Files in `dir` whose checksum differs from the manifest.
pub fn verify_dir(dir: &Path) -> Result<Vec<String>> {
    let manifest = read_manifest(dir)?;
    let mut bad = Vec::new();
    for (name, entry) in &manifest.files {
        match fs::read(dir.join(name)) {
            Ok(data) if sha256_hex(&data) == entry.sha256 => {}
            _ => bad.push(name.clone()),
        }
    }
    Ok(bad)
}

pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let Some(name) = path.file_name() else {
        bail!("not a file path: {}", path.display());
    };
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(data)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// Builds a CSV with a mandatory header; floats use 17 significant digits.
pub struct CsvTable {
    header: Vec<String>,
    body: String,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, body: String::new() }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.header.len(), "row width does not match header");
        let line: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
        self.body.push_str(&line.join(","));
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }
}
