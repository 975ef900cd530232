//! JSONL corpus files and their manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use textscene_core::corpus::{Condition, Corpus, CorpusConfig, DescriptionSample, Split, SplitKey};

use crate::error::{self, Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub lines: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub mode: String,
    pub config_sha256: String,
    /// `split[_condition]` to `family` to record count.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub files: Vec<FileEntry>,
    pub config: CorpusConfig,
}

impl Manifest {
    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.name == name)
    }
}

pub fn config_hash(config: &CorpusConfig) -> String {
    sha256_hex(serde_json::to_string(config).expect("corpus config serializes").as_bytes())
}

pub fn file_name(key: &SplitKey) -> String {
    format!("{}.jsonl", key.file_stem())
}

pub fn file_for(split: Split, condition: Condition) -> String {
    file_name(&SplitKey::of(split, condition))
}

/// One JSON object per line in field order.
pub fn to_jsonl(samples: &[DescriptionSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("samples serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str, origin: &str) -> Result<Vec<DescriptionSample>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::invalid(format!("{origin}:{}: {e}", i + 1)))
        })
        .collect()
}

pub fn read_samples(path: &Path) -> Result<Vec<DescriptionSample>> {
    parse_jsonl(&error::read_string(path)?, &path.display().to_string())
}

pub fn manifest_for(corpus: &Corpus, config: &CorpusConfig, files: Vec<FileEntry>) -> Manifest {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for (key, samples) in &corpus.parts {
        let row = counts.entry(key.file_stem()).or_default();
        for s in samples {
            *row.entry(s.family.name().into()).or_default() += 1;
        }
    }
    Manifest {
        format_version: FORMAT_VERSION,
        seed: config.seed,
        mode: config.mode.name().into(),
        config_sha256: config_hash(config),
        counts,
        files,
        config: config.clone(),
    }
}

/// Writes one file per split/condition plus `manifest.json`.
pub fn write_corpus(dir: &Path, corpus: &Corpus, config: &CorpusConfig) -> Result<Manifest> {
    let mut files = Vec::new();
    for (key, samples) in &corpus.parts {
        let name = file_name(key);
        let text = to_jsonl(samples);
        error::write(&dir.join(&name), &text)?;
        files.push(FileEntry { name, lines: samples.len(), sha256: sha256_hex(text.as_bytes()) });
    }
    let manifest = manifest_for(corpus, config, files);
    error::write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let manifest: Manifest = error::read_json(&dir.join(MANIFEST))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::invalid(format!(
            "corpus format version {} is not supported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    Ok(manifest)
}

/// Reads one corpus file, checking it against the manifest hash.
pub fn read_part(dir: &Path, manifest: &Manifest, name: &str) -> Result<Vec<DescriptionSample>> {
    let entry = manifest.file(name).ok_or_else(|| Error::invalid(format!("manifest lists no file {name}")))?;
    let path = dir.join(name);
    let bytes = error::read(&path)?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(Error::Checksum { path });
    }
    let text = String::from_utf8(bytes).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    parse_jsonl(&text, &path.display().to_string())
}

/// A corpus directory held in memory.
#[derive(Debug, Clone)]
pub struct CorpusDir {
    pub manifest: Manifest,
    pub parts: BTreeMap<String, Vec<DescriptionSample>>,
}

impl CorpusDir {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = read_manifest(dir)?;
        let mut parts = BTreeMap::new();
        for f in &manifest.files {
            parts.insert(f.name.clone(), read_part(dir, &manifest, &f.name)?);
        }
        Ok(CorpusDir { manifest, parts })
    }

    pub fn get(&self, split: Split, condition: Condition) -> &[DescriptionSample] {
        self.parts.get(&file_for(split, condition)).map_or(&[], Vec::as_slice)
    }
}
