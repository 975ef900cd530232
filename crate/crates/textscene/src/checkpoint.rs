//! Versioned checkpoint container.
//!
//! Layout: 8-byte magic, `u32` version, `u64` header length, JSON header,
//! parameter snapshots, optimizer moment snapshots, then the SHA-256 of
//! everything before it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use textscene_core::corpus::stats::ClassWeights;
use textscene_core::model::{Model, ModelConfig, Vocab};
use textscene_core::optim::{Optimizer, OptimizerConfig};
use textscene_core::scene::{feature_schema, Mode};
use textscene_core::tensor::Tensor;

use crate::error::{self, Error, Result};
use crate::train::{LogRow, TrainConfig};

pub const MAGIC: &[u8; 8] = b"TXSCNCKP";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub epochs_done: usize,
    pub config: TrainConfig,
    pub optimizer: OptimizerConfig,
    pub optimizer_steps: u64,
    pub best_val_cond_a: Option<f64>,
    pub history: Vec<LogRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub mode: Mode,
    pub class_counts: Vec<usize>,
    pub model: ModelConfig,
    pub vocab: Vocab,
    pub class_weights: ClassWeights,
    pub param_names: Vec<String>,
    pub moment_pairs: usize,
    pub train: Option<TrainState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: Header,
    pub model: Model,
    /// Adam moments, empty for plain gradient descent.
    pub moments: Vec<(Tensor, Tensor)>,
}

impl Checkpoint {
    pub fn new(model: Model, vocab: Vocab, class_weights: ClassWeights, train: Option<(TrainState, &Optimizer)>) -> Self {
        let (train, moments) = match train {
            Some((state, opt)) => (Some(state), opt.moments.clone()),
            None => (None, Vec::new()),
        };
        let header = Header {
            mode: model.config.mode,
            class_counts: model.config.class_counts.clone(),
            model: model.config.clone(),
            vocab,
            class_weights,
            param_names: model.names().to_vec(),
            moment_pairs: moments.len(),
            train,
        };
        Checkpoint { header, model, moments }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::with_capacity(header.len() + 8 * self.model.param_count() * 3 + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for p in &self.model.params {
            p.write_snapshot(&mut out);
        }
        for (m, v) in &self.moments {
            m.write_snapshot(&mut out);
            v.write_snapshot(&mut out);
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |m: String| Error::invalid(format!("{}: {m}", origin.display()));
        if bytes.len() < MAGIC.len() + 12 + 32 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(bad(format!("checkpoint version {version} is not supported (expected {VERSION})")));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checksum { path: origin.to_path_buf() });
        }
        let len = u64::from_le_bytes(body[12..20].try_into().unwrap()) as usize;
        let header_bytes = body.get(20..20 + len).ok_or_else(|| bad("truncated header".into()))?;
        let header: Header = serde_json::from_slice(header_bytes).map_err(|e| bad(format!("header: {e}")))?;
        let schema = feature_schema(header.mode);
        if header.class_counts != schema.class_counts() || header.model.mode != header.mode {
            return Err(bad(format!("schema mismatch: class counts {:?} for {} mode", header.class_counts, header.mode)));
        }
        if header.vocab.len() != header.model.vocab_size {
            return Err(bad(format!("vocabulary has {} tokens, model expects {}", header.vocab.len(), header.model.vocab_size)));
        }
        let mut pos = 20 + len;
        let mut next = || -> Result<Tensor> {
            let (t, used) = Tensor::read_snapshot(&body[pos..]).map_err(|e| bad(e.to_string()))?;
            pos += used;
            Ok(t)
        };
        let params = (0..header.param_names.len()).map(|_| next()).collect::<Result<Vec<_>>>()?;
        let moments = (0..header.moment_pairs).map(|_| Ok((next()?, next()?))).collect::<Result<Vec<_>>>()?;
        if pos != body.len() {
            return Err(bad(format!("{} trailing bytes", body.len() - pos)));
        }
        let model = Model::from_params(header.model.clone(), params).map_err(|e| bad(e.to_string()))?;
        if model.names() != header.param_names.as_slice() {
            return Err(bad("parameter names do not match the model layout".into()));
        }
        Ok(Checkpoint { header, model, moments })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        error::write(path, self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&error::read(path)?, path)
    }

    pub fn expect_mode(&self, mode: Mode) -> Result<()> {
        if self.header.mode != mode {
            return Err(Error::invalid(format!("checkpoint is for {} mode, not {}", self.header.mode, mode)));
        }
        Ok(())
    }

    pub fn vocab(&self) -> &Vocab {
        &self.header.vocab
    }

    /// SHA-256 of the serialized parameters.
    pub fn model_hash(&self) -> String {
        let mut bytes = Vec::new();
        for p in &self.model.params {
            p.write_snapshot(&mut bytes);
        }
        hex::encode(Sha256::digest(&bytes))
    }
}
