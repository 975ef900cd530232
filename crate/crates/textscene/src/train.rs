//! Training loop: seeded shuffles, weighted loss, periodic validation on both
//! conditions, best/last checkpoints and a CSV log.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use textscene_core::corpus::stats::{class_weights, ClassWeights};
use textscene_core::corpus::{Condition, DescriptionSample, Split};
use textscene_core::metrics::{object_feature_accuracy, FeatureTally};
use textscene_core::model::{split_dims, Model, ModelConfig, RunOptions, Vocab};
use textscene_core::optim::{Optimizer, OptimizerConfig, OptimizerKind};
use textscene_core::rng::{self, stream};
use textscene_core::scene::{feature_schema, FeatureSchema, Mode, SceneLayout};
use textscene_core::tensor::Grads;

use crate::checkpoint::{Checkpoint, TrainState};
use crate::corpus_io::CorpusDir;
use crate::error::{self, Error, Result};

pub const BEST: &str = "best.ckpt";
pub const LAST: &str = "last.ckpt";
pub const LOG: &str = "log.csv";
pub const NAN_DUMP: &str = "nan-dump.json";
pub const CONFIG_ECHO: &str = "train-config.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Desk,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub preset: Preset,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
    pub dropout: f64,
    pub teacher_forcing: f64,
    /// Validate (and log) every this many epochs; the last epoch always validates.
    pub val_interval: usize,
    /// Encoder width, recurrent width and summed feedback width.
    pub dims: usize,
    pub attn_dim: usize,
    pub mixer: bool,
    pub mixer_dim: usize,
    pub max_objects: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn desk(mode: Mode) -> Self {
        TrainConfig {
            mode,
            preset: Preset::Desk,
            epochs: 12,
            batch_size: 32,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            clip_norm: Some(5.0),
            dropout: 0.1,
            teacher_forcing: 0.5,
            val_interval: 1,
            dims: 128,
            attn_dim: 64,
            mixer: true,
            mixer_dim: 32,
            max_objects: 11,
            seed: 0,
        }
    }

    pub fn paper(mode: Mode) -> Self {
        TrainConfig {
            preset: Preset::Paper,
            epochs: 120,
            batch_size: 520,
            optimizer: OptimizerKind::Sgd,
            learning_rate: 0.01,
            val_interval: 10,
            dims: 1024,
            attn_dim: 1024,
            mixer_dim: 64,
            ..TrainConfig::desk(mode)
        }
    }

    pub fn preset(preset: Preset, mode: Mode) -> Self {
        match preset {
            Preset::Desk => Self::desk(mode),
            Preset::Paper => Self::paper(mode),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive".into());
        }
        if self.val_interval == 0 || (self.epochs % self.val_interval != 0 && self.val_interval < self.epochs) {
            return bad(format!("validation interval {} neither divides nor bounds {} epochs", self.val_interval, self.epochs));
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing) {
            return bad(format!("teacher forcing ratio {} outside [0, 1]", self.teacher_forcing));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.learning_rate > 0.0) || self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("learning rate and clip norm must be positive".into());
        }
        Ok(())
    }

    pub fn model_config(&self, schema: &FeatureSchema, vocab_size: usize) -> ModelConfig {
        let mut c = ModelConfig::new(schema, vocab_size, self.dims, self.attn_dim, self.dims);
        c.embed_dims = split_dims(self.dims, schema.head_count());
        c.mixer = self.mixer;
        c.mixer_dim = self.mixer_dim;
        c.max_objects = self.max_objects;
        c.dropout = self.dropout;
        c.teacher_forcing = self.teacher_forcing;
        c
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let mut c = match self.optimizer {
            OptimizerKind::Adam => OptimizerConfig::adam(self.learning_rate),
            OptimizerKind::Sgd => OptimizerConfig::sgd(self.learning_rate),
        };
        c.clip_norm = self.clip_norm;
        c
    }

    /// Everything except the epoch budget must agree to resume.
    fn resumable_from(&self, saved: &TrainConfig) -> bool {
        TrainConfig { epochs: saved.epochs, val_interval: saved.val_interval, ..self.clone() } == *saved
    }
}

/// One validation row. Wall time stays out of checkpoints so they are
/// reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_cond_a: f64,
    pub val_cond_b: f64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainData {
    pub train: Vec<DescriptionSample>,
    pub val_a: Vec<DescriptionSample>,
    pub val_b: Vec<DescriptionSample>,
}

impl TrainData {
    pub fn load(dir: &Path, mode: Mode) -> Result<Self> {
        let corpus = CorpusDir::load(dir)?;
        if corpus.manifest.config.mode != mode {
            return Err(Error::invalid(format!(
                "corpus {} holds {} data, training asked for {mode}",
                dir.display(),
                corpus.manifest.config.mode
            )));
        }
        Ok(TrainData {
            train: corpus.get(Split::Train, Condition::CondA).to_vec(),
            val_a: corpus.get(Split::Val, Condition::CondA).to_vec(),
            val_b: corpus.get(Split::Val, Condition::CondB).to_vec(),
        })
    }
}

type Encoded = (Vec<usize>, Vec<Vec<usize>>);

pub struct Trainer {
    pub config: TrainConfig,
    pub model: Model,
    pub vocab: Vocab,
    pub weights: ClassWeights,
    pub optimizer: Optimizer,
    pub epochs_done: usize,
    pub best_val_cond_a: Option<f64>,
    pub history: Vec<LogRow>,
    data: TrainData,
    encoded: Vec<Encoded>,
    out: Option<PathBuf>,
}

pub fn encode_samples(samples: &[DescriptionSample], vocab: &Vocab, schema: &FeatureSchema) -> Vec<Encoded> {
    samples
        .iter()
        .map(|s| (vocab.encode_text(&s.text).1, s.layout.objects.iter().map(|o| schema.encode(o)).collect()))
        .collect()
}

/// Decodes every sample's text and scores it against its layout.
pub fn accuracy(model: &Model, vocab: &Vocab, samples: &[DescriptionSample]) -> Result<FeatureTally> {
    let preds = decode_all(model, vocab, samples)?;
    let truths: Vec<SceneLayout> = samples.iter().map(|s| s.layout.clone()).collect();
    Ok(object_feature_accuracy(&preds, &truths, &model.config.schema(), None)?)
}

pub fn decode_all(model: &Model, vocab: &Vocab, samples: &[DescriptionSample]) -> Result<Vec<SceneLayout>> {
    samples
        .par_iter()
        .map(|s| Ok(model.greedy_decode(&s.text, vocab)?.layout))
        .collect()
}

impl Trainer {
    /// Fresh model: vocabulary and class weights come from the training split.
    pub fn new(config: TrainConfig, data: TrainData) -> Result<Self> {
        config.validate()?;
        if data.train.is_empty() {
            return Err(Error::invalid("training split is empty"));
        }
        let schema = feature_schema(config.mode);
        let vocab = Vocab::build(data.train.iter().map(|s| s.text.as_str()));
        let weights = class_weights(&data.train, &schema);
        let model = Model::init(config.model_config(&schema, vocab.len()), config.seed)?;
        let optimizer = Optimizer::new(config.optimizer_config(), &model.params);
        Ok(Self::assemble(config, model, vocab, weights, optimizer, data))
    }

    fn assemble(
        config: TrainConfig,
        model: Model,
        vocab: Vocab,
        weights: ClassWeights,
        optimizer: Optimizer,
        data: TrainData,
    ) -> Self {
        let encoded = encode_samples(&data.train, &vocab, &feature_schema(config.mode));
        Trainer {
            config,
            model,
            vocab,
            weights,
            optimizer,
            epochs_done: 0,
            best_val_cond_a: None,
            history: Vec::new(),
            data,
            encoded,
            out: None,
        }
    }

    /// Continues from a checkpoint holding training state.
    pub fn resume(checkpoint: Checkpoint, config: TrainConfig, data: TrainData) -> Result<Self> {
        config.validate()?;
        checkpoint.expect_mode(config.mode)?;
        let state = checkpoint
            .header
            .train
            .clone()
            .ok_or_else(|| Error::invalid("checkpoint has no training state to resume"))?;
        if !config.resumable_from(&state.config) {
            return Err(Error::invalid("training config differs from the checkpoint's beyond the epoch budget"));
        }
        if state.epochs_done > config.epochs {
            return Err(Error::invalid(format!(
                "checkpoint already trained {} epochs, budget is {}",
                state.epochs_done, config.epochs
            )));
        }
        let optimizer =
            Optimizer::restore(state.optimizer.clone(), state.optimizer_steps, checkpoint.moments, &checkpoint.model.params)
                .map_err(|e| Error::invalid(e.to_string()))?;
        let mut t = Self::assemble(
            config,
            checkpoint.model,
            checkpoint.header.vocab,
            checkpoint.header.class_weights,
            optimizer,
            data,
        );
        t.epochs_done = state.epochs_done;
        t.best_val_cond_a = state.best_val_cond_a;
        t.history = state.history;
        Ok(t)
    }

    /// Directory for checkpoints, log and config echo.
    pub fn with_output(mut self, dir: &Path) -> Self {
        self.out = Some(dir.to_path_buf());
        self
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let state = TrainState {
            epochs_done: self.epochs_done,
            config: self.config.clone(),
            optimizer: self.optimizer.config.clone(),
            optimizer_steps: self.optimizer.steps,
            best_val_cond_a: self.best_val_cond_a,
            history: self.history.clone(),
        };
        Checkpoint::new(self.model.clone(), self.vocab.clone(), self.weights.clone(), Some((state, &self.optimizer)))
    }

    fn opts(&self, epoch: usize, index: usize) -> RunOptions {
        RunOptions {
            train: true,
            seed: rng::derive(self.config.seed, &[stream::DROPOUT, epoch as u64, index as u64]),
            teacher_forcing: self.config.teacher_forcing,
        }
    }

    /// Gradient of one batch, reduced in sample order.
    fn batch_gradient(&self, epoch: usize, batch: &[usize]) -> Result<(Grads, Vec<f64>)> {
        let k = 1.0 / batch.len() as f64;
        let mut acc = Grads::empty(self.model.params.len());
        let mut losses = Vec::with_capacity(batch.len());
        if rayon::current_num_threads() > 1 {
            let grads: Vec<_> = batch
                .par_iter()
                .map(|&i| {
                    let (ids, targets) = &self.encoded[i];
                    self.model.sample_gradient(ids, targets, &self.weights, &self.opts(epoch, i))
                })
                .collect::<std::result::Result<_, _>>()?;
            for g in grads {
                acc.accumulate(&g.grads, k);
                losses.push(g.loss);
            }
        } else {
            for &i in batch {
                let (ids, targets) = &self.encoded[i];
                let (loss, _) =
                    self.model.accumulate_gradient(ids, targets, &self.weights, &self.opts(epoch, i), &mut acc, k)?;
                losses.push(loss);
            }
        }
        Ok((acc, losses))
    }

    fn dump_nan(&self, epoch: usize, batch: &[usize], losses: &[f64]) -> Error {
        let records: Vec<_> = batch
            .iter()
            .zip(losses)
            .map(|(&i, &l)| {
                serde_json::json!({
                    "index": i,
                    "loss": if l.is_finite() { serde_json::json!(l) } else { serde_json::json!(l.to_string()) },
                    "text": self.data.train[i].text,
                    "layout": self.data.train[i].layout,
                })
            })
            .collect();
        let dump = serde_json::json!({ "epoch": epoch, "batch": records });
        let mut msg = format!("non-finite loss in epoch {epoch}");
        if let Some(dir) = &self.out {
            let path = dir.join(NAN_DUMP);
            if error::write_json(&path, &dump).is_ok() {
                msg += &format!("; batch written to {}", path.display());
            }
        }
        Error::Runtime(msg)
    }

    /// One pass over the shuffled training split. Returns the mean loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        let epoch = self.epochs_done;
        let mut order: Vec<usize> = (0..self.encoded.len()).collect();
        order.shuffle(&mut rng::rng(rng::derive(self.config.seed, &[stream::SHUFFLE, epoch as u64])));
        let mut total = 0.0;
        for batch in order.chunks(self.config.batch_size) {
            let (mut grads, losses) = self.batch_gradient(epoch, batch)?;
            if losses.iter().any(|l| !l.is_finite()) {
                return Err(self.dump_nan(epoch, batch, &losses));
            }
            total += losses.iter().sum::<f64>();
            self.optimizer.step(&mut self.model.params, &mut grads);
        }
        self.epochs_done += 1;
        Ok(total / self.encoded.len() as f64)
    }

    pub fn validate(&self) -> Result<(f64, f64)> {
        let a = accuracy(&self.model, &self.vocab, &self.data.val_a)?;
        let b = if self.data.val_b.is_empty() { None } else { Some(accuracy(&self.model, &self.vocab, &self.data.val_b)?) };
        Ok((a.percent(), b.map_or(f64::NAN, |b| b.percent())))
    }

    fn write_log_row(&self, dir: &Path, row: &LogRow) -> Result<()> {
        let path = dir.join(LOG);
        let fresh = !path.exists();
        let file = std::fs::OpenOptions::new().create(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        let io = |e: csv::Error| Error::Runtime(format!("{}: {e}", path.display()));
        if fresh {
            w.write_record(["epoch", "train_loss", "val_condA", "val_condB", "wall_seconds"]).map_err(io)?;
        }
        w.write_record([
            row.epoch.to_string(),
            format!("{:.6}", row.train_loss),
            format!("{:.4}", row.val_cond_a),
            format!("{:.4}", row.val_cond_b),
            format!("{:.3}", row.wall_seconds),
        ])
        .map_err(io)?;
        w.flush().map_err(|e| Error::io(&path, e))
    }

    /// Trains up to the configured epoch budget.
    pub fn run(&mut self, mut on_row: impl FnMut(&LogRow)) -> Result<()> {
        if let Some(dir) = &self.out {
            error::write_json(&dir.join(CONFIG_ECHO), &self.config)?;
        }
        let start = Instant::now();
        while self.epochs_done < self.config.epochs {
            let loss = self.run_epoch()?;
            let epoch = self.epochs_done;
            if epoch % self.config.val_interval != 0 && epoch != self.config.epochs {
                continue;
            }
            let (val_cond_a, val_cond_b) = self.validate()?;
            let row = LogRow { epoch, train_loss: loss, val_cond_a, val_cond_b, wall_seconds: start.elapsed().as_secs_f64() };
            let improved = self.best_val_cond_a.is_none_or(|b| val_cond_a > b);
            if improved {
                self.best_val_cond_a = Some(val_cond_a);
            }
            self.history.push(row.clone());
            on_row(&row);
            if let Some(dir) = self.out.clone() {
                self.write_log_row(&dir, &row)?;
                let ckpt = self.checkpoint();
                if improved {
                    ckpt.save(&dir.join(BEST))?;
                }
                ckpt.save(&dir.join(LAST))?;
            }
        }
        Ok(())
    }
}
