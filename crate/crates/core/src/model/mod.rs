//! Attention-based multi-head decoder from token ids to per-object feature
//! classes.
//!
//! One decode step attends over the encoded description with the previous
//! hidden state, feeds `context + feedback` to an LSTM cell, and reads one
//! softmax head per feature from the cell output. The next step's feedback
//! is the concatenation of per-head class embeddings. Decoding ends when the
//! shape head emits EOS.

mod vocab;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::stats::ClassWeights;
use crate::rng::{self, stream};
use crate::scene::{
    feature_schema, validate_layout, FeatureSchema, Mode, SceneLayout, Violation, SHAPE_EOS_INDEX,
};
use crate::tensor::{argmax, Grads, ParamId, Tape, Tensor, TensorError, Var};

pub use vocab::{Vocab, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("empty input sequence")]
    EmptyInput,
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("token id {id} outside vocabulary of {len}")]
    Token { id: usize, len: usize },
    #[error("target object {step}: {reason}")]
    Target { step: usize, reason: String },
}

pub type Result<T> = core::result::Result<T, ModelError>;

/// Dimensions and switches of the parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: Mode,
    pub vocab_size: usize,
    pub enc_dim: usize,
    pub attn_dim: usize,
    pub hid_dim: usize,
    /// Single-head self-attention over token embeddings before decoding.
    pub mixer: bool,
    pub mixer_dim: usize,
    pub class_counts: Vec<usize>,
    /// Per-head feedback embedding widths; they sum to `enc_dim`.
    pub embed_dims: Vec<usize>,
    /// Step cap, EOS step included.
    pub max_objects: usize,
    pub dropout: f64,
    pub teacher_forcing: f64,
    /// Embed the full head distribution instead of a class index.
    pub soft_feedback: bool,
}

/// Splits `total` into `parts` widths differing by at most one, wider first.
pub fn split_dims(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

impl ModelConfig {
    pub fn new(schema: &FeatureSchema, vocab_size: usize, enc_dim: usize, attn_dim: usize, hid_dim: usize) -> Self {
        ModelConfig {
            mode: schema.mode,
            vocab_size,
            enc_dim,
            attn_dim,
            hid_dim,
            mixer: true,
            mixer_dim: 32,
            class_counts: schema.class_counts(),
            embed_dims: split_dims(enc_dim, schema.head_count()),
            max_objects: 11,
            dropout: 0.1,
            teacher_forcing: 0.5,
            soft_feedback: false,
        }
    }

    pub fn desk(schema: &FeatureSchema, vocab_size: usize) -> Self {
        Self::new(schema, vocab_size, 128, 64, 128)
    }

    pub fn paper(schema: &FeatureSchema, vocab_size: usize) -> Self {
        let mut c = Self::new(schema, vocab_size, 1024, 1024, 1024);
        c.mixer_dim = 64;
        c
    }

    pub fn schema(&self) -> FeatureSchema {
        feature_schema(self.mode)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::Config(m));
        let schema = self.schema();
        if self.class_counts != schema.class_counts() {
            return bad(format!("class counts {:?} do not match the {} schema", self.class_counts, self.mode));
        }
        if self.embed_dims.len() != self.class_counts.len() {
            return bad(format!("{} embedding widths for {} heads", self.embed_dims.len(), self.class_counts.len()));
        }
        if self.embed_dims.iter().sum::<usize>() != self.enc_dim {
            return bad(format!("embedding widths {:?} do not sum to enc_dim {}", self.embed_dims, self.enc_dim));
        }
        if [self.enc_dim, self.attn_dim, self.hid_dim, self.mixer_dim].contains(&0) || self.embed_dims.contains(&0) {
            return bad("dimensions must be positive".into());
        }
        if self.vocab_size < 3 {
            return bad(format!("vocabulary of {} tokens", self.vocab_size));
        }
        if self.max_objects < 2 {
            return bad("max_objects must leave room for EOS".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing) {
            return bad(format!("teacher forcing ratio {} outside [0, 1]", self.teacher_forcing));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Ids {
    embed: ParamId,
    mixer: Option<(ParamId, ParamId)>,
    w1: ParamId,
    w2: ParamId,
    b1: ParamId,
    w3: ParamId,
    b2: ParamId,
    lstm_w: ParamId,
    lstm_b: ParamId,
    head_w: Vec<ParamId>,
    head_b: Vec<ParamId>,
    feedback: Vec<ParamId>,
    start: ParamId,
}

/// Parameters plus the configuration that shapes them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Vec<Tensor>,
    names: Vec<String>,
    ids: Ids,
    positions: Tensor,
}

/// Per-call switches for [`Model::forward`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub train: bool,
    pub seed: u64,
    pub teacher_forcing: f64,
}

impl RunOptions {
    pub fn eval() -> Self {
        RunOptions { train: false, seed: 0, teacher_forcing: 0.0 }
    }
}

/// Encoded description: `H0` and its attention projection `H0 W1`.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub h0: Var,
    proj: Var,
    pub pad_mask: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct CellState {
    pub h: Var,
    pub c: Var,
}

#[derive(Debug, Clone)]
pub struct Step {
    /// One `1 x K_i` distribution per head.
    pub dists: Vec<Var>,
    /// `1 x d` attention weights.
    pub attention: Var,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub steps: Vec<Step>,
}

/// Attention weights of one decode, one row per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrace {
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Argmax class per head for every emitted step, EOS step included.
    pub classes: Vec<Vec<usize>>,
    pub trace: AttentionTrace,
}

/// Result of parsing free text into a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub tokens: Vec<String>,
    pub layout: SceneLayout,
    pub trace: AttentionTrace,
    /// Invariants the decoded layout breaks. Objects are never edited.
    pub violations: Vec<Violation>,
    /// Whether the shape head emitted EOS before the step cap.
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrad {
    pub loss: f64,
    pub grads: Grads,
    pub clamps: usize,
}

fn uniform(rng: &mut rng::Rng, rows: usize, cols: usize, bound: f64) -> Tensor {
    let dist = Uniform::new_inclusive(-bound, bound).unwrap();
    Tensor::from_rows(rows, cols, (0..rows * cols).map(|_| dist.sample(rng)).collect()).unwrap()
}

/// Sinusoidal position code, `d x dim`.
pub fn positional_encoding(d: usize, dim: usize) -> Tensor {
    let rates: Vec<f64> = (0..dim).map(|i| libm::pow(10000.0, -((2 * (i / 2)) as f64) / dim as f64)).collect();
    let mut t = Tensor::zeros(d, dim);
    for p in 0..d {
        for (i, &rate) in rates.iter().enumerate() {
            let angle = p as f64 * rate;
            t.data_mut()[p * dim + i] = if i % 2 == 0 { libm::sin(angle) } else { libm::cos(angle) };
        }
    }
    t
}

/// Rows of the position code kept precomputed.
const CACHED_POSITIONS: usize = 160;

impl Model {
    /// Fresh parameters: weight matrices uniform in `±1/sqrt(fan_in)`,
    /// embedding tables uniform in `±1`, biases zero except the forget gate.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::rng(rng::derive(seed, &[stream::INIT]));
        let mut params = Vec::new();
        let mut names = Vec::new();
        let mut add = |name: String, t: Tensor| {
            params.push(t);
            names.push(name);
            ParamId(params.len() - 1)
        };
        let c = &config;
        let (e, a, h) = (c.enc_dim, c.attn_dim, c.hid_dim);
        let scaled = |rng: &mut rng::Rng, r: usize, cols: usize| uniform(rng, r, cols, 1.0 / libm::sqrt(r as f64));
        let embed = add("encoder.tokens".into(), uniform(&mut rng, c.vocab_size, e, 1.0));
        let mixer = if c.mixer {
            let q = add("encoder.query".into(), scaled(&mut rng, e, c.mixer_dim));
            let k = add("encoder.key".into(), scaled(&mut rng, e, c.mixer_dim));
            Some((q, k))
        } else {
            None
        };
        let w1 = add("attention.w1".into(), scaled(&mut rng, e, a));
        let w2 = add("attention.w2".into(), scaled(&mut rng, h, a));
        let b1 = add("attention.b1".into(), Tensor::zeros(1, a));
        let w3 = add("attention.w3".into(), scaled(&mut rng, a, 1));
        let b2 = add("attention.b2".into(), Tensor::zeros(1, 1));
        let lstm_w = add("lstm.weight".into(), scaled(&mut rng, e + h, 4 * h));
        let mut bias = Tensor::zeros(1, 4 * h);
        bias.data_mut()[h..2 * h].fill(1.0);
        let lstm_b = add("lstm.bias".into(), bias);
        let schema = c.schema();
        let mut head_w = Vec::new();
        let mut head_b = Vec::new();
        let mut feedback = Vec::new();
        for (i, head) in schema.heads.iter().enumerate() {
            let k = head.len();
            head_w.push(add(format!("head.{}.weight", head.feature), scaled(&mut rng, h, k)));
            head_b.push(add(format!("head.{}.bias", head.feature), Tensor::zeros(1, k)));
            feedback.push(add(format!("feedback.{}", head.feature), uniform(&mut rng, k, c.embed_dims[i], 1.0)));
        }
        let start = add("decoder.start".into(), uniform(&mut rng, 1, e, 1.0));
        let ids = Ids { embed, mixer, w1, w2, b1, w3, b2, lstm_w, lstm_b, head_w, head_b, feedback, start };
        let positions = positional_encoding(CACHED_POSITIONS, config.enc_dim);
        Ok(Model { config, params, names, ids, positions })
    }

    /// Rebuilds a model from stored tensors, checking count and shapes.
    pub fn from_params(config: ModelConfig, params: Vec<Tensor>) -> Result<Self> {
        let mut model = Model::init(config, 0)?;
        if params.len() != model.params.len() {
            return Err(ModelError::Config(format!(
                "{} parameter tensors, expected {}",
                params.len(),
                model.params.len()
            )));
        }
        for (i, (have, want)) in params.iter().zip(&model.params).enumerate() {
            if have.shape() != want.shape() {
                return Err(ModelError::Config(format!(
                    "{}: shape {:?}, expected {:?}",
                    model.names[i],
                    have.shape(),
                    want.shape()
                )));
            }
            have.check_finite()?;
        }
        model.params = params;
        Ok(model)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Output-head weight and bias of head `i`.
    pub fn head_params(&self, i: usize) -> (ParamId, ParamId) {
        (self.ids.head_w[i], self.ids.head_b[i])
    }

    fn dropout(&self, tape: &mut Tape, x: Var, opts: &RunOptions, site: u64) -> Result<Var> {
        let seed = rng::derive(opts.seed, &[stream::DROPOUT, site]);
        Ok(tape.dropout(x, self.config.dropout, seed, opts.train)?)
    }

    /// `H0 = E(T_d)`: token embeddings plus position codes, optionally mixed
    /// by one self-attention layer with a residual connection. PAD ids are
    /// masked out as attention keys.
    pub fn encode(&self, tape: &mut Tape, ids: &[usize], opts: &RunOptions) -> Result<Encoded> {
        if ids.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= self.config.vocab_size) {
            return Err(ModelError::Token { id, len: self.config.vocab_size });
        }
        let pad_mask: Vec<bool> = ids.iter().map(|&i| i == PAD).collect();
        if pad_mask.iter().all(|&m| m) {
            return Err(ModelError::EmptyInput);
        }
        let table = tape.param(self.ids.embed);
        let x = tape.lookup(table, ids)?;
        let d = ids.len();
        let code = if d <= CACHED_POSITIONS {
            let e = self.config.enc_dim;
            Tensor::from_rows(d, e, self.positions.data()[..d * e].to_vec())?
        } else {
            positional_encoding(d, self.config.enc_dim)
        };
        let pe = tape.constant(code);
        let mut x = tape.add(x, pe)?;
        x = self.dropout(tape, x, opts, 0)?;
        if let Some((wq, wk)) = self.ids.mixer {
            let (wq, wk) = (tape.param(wq), tape.param(wk));
            let q = tape.matmul(x, wq)?;
            let k = tape.matmul(x, wk)?;
            let kt = tape.transpose(k)?;
            let s = tape.matmul(q, kt)?;
            let s = tape.scale(s, 1.0 / libm::sqrt(self.config.mixer_dim as f64));
            let w = tape.masked_softmax(s, 1, Some(&pad_mask))?;
            let mixed = tape.matmul(w, x)?;
            x = tape.add(x, mixed)?;
        }
        let w1 = tape.param(self.ids.w1);
        let proj = tape.matmul(x, w1)?;
        Ok(Encoded { h0: x, proj, pad_mask })
    }

    /// Additive attention: `a_t = tanh(W1 H0 + W2 h + b1)`, scores
    /// `W3 a_t + b2`, weights `softmax(scores)` over unmasked positions.
    /// Returns the context `â_t H0` and the weights.
    pub fn attend(&self, tape: &mut Tape, enc: &Encoded, h_prev: Var) -> Result<(Var, Var)> {
        let (w2, b1, w3, b2) =
            (tape.param(self.ids.w2), tape.param(self.ids.b1), tape.param(self.ids.w3), tape.param(self.ids.b2));
        let q = tape.matmul(h_prev, w2)?;
        let q = tape.add_bias(q, b1)?;
        let pre = tape.add_bias(enc.proj, q)?;
        let act = tape.tanh(pre);
        let scores = tape.matmul(act, w3)?;
        let scores = tape.add_bias(scores, b2)?;
        let scores = tape.transpose(scores)?;
        let weights = tape.masked_softmax(scores, 1, Some(&enc.pad_mask))?;
        let ctx = tape.matmul(weights, enc.h0)?;
        Ok((ctx, weights))
    }

    /// One LSTM step on `ctx + input` followed by the feature heads.
    pub fn decode_step(
        &self,
        tape: &mut Tape,
        ctx: Var,
        input: Var,
        state: CellState,
        opts: &RunOptions,
        step: usize,
    ) -> Result<(Var, CellState, Vec<Var>)> {
        let h = self.config.hid_dim;
        let x = tape.add(ctx, input)?;
        let xh = tape.concat(&[x, state.h], 1)?;
        let (w, b) = (tape.param(self.ids.lstm_w), tape.param(self.ids.lstm_b));
        let z = tape.matmul(xh, w)?;
        let z = tape.add_bias(z, b)?;
        let gi = tape.slice_cols(z, 0, h)?;
        let gf = tape.slice_cols(z, h, h)?;
        let gg = tape.slice_cols(z, 2 * h, h)?;
        let go = tape.slice_cols(z, 3 * h, h)?;
        let (i, f, g, o) = (tape.sigmoid(gi), tape.sigmoid(gf), tape.tanh(gg), tape.sigmoid(go));
        let keep = tape.mul(f, state.c)?;
        let write = tape.mul(i, g)?;
        let c = tape.add(keep, write)?;
        let tc = tape.tanh(c);
        let hidden = tape.mul(o, tc)?;
        let y = self.dropout(tape, hidden, opts, 1 + step as u64)?;
        let mut dists = Vec::with_capacity(self.ids.head_w.len());
        for (&wi, &bi) in self.ids.head_w.iter().zip(&self.ids.head_b) {
            let (wi, bi) = (tape.param(wi), tape.param(bi));
            let logits = tape.matmul(y, wi)?;
            let logits = tape.add_bias(logits, bi)?;
            dists.push(tape.softmax(logits, 1)?);
        }
        Ok((y, CellState { h: hidden, c }, dists))
    }

    /// `i_{t+1}`: per-head class embeddings, concatenated.
    pub fn feature_feedback(&self, tape: &mut Tape, indices: &[usize]) -> Result<Var> {
        if indices.len() != self.ids.feedback.len() {
            return Err(ModelError::Target {
                step: 0,
                reason: format!("{} indices for {} heads", indices.len(), self.ids.feedback.len()),
            });
        }
        let mut parts = Vec::with_capacity(indices.len());
        for (&id, &idx) in self.ids.feedback.iter().zip(indices) {
            let table = tape.param(id);
            parts.push(tape.lookup(table, &[idx])?);
        }
        Ok(tape.concat(&parts, 1)?)
    }

    fn soft_feedback(&self, tape: &mut Tape, dists: &[Var]) -> Result<Var> {
        let mut parts = Vec::with_capacity(dists.len());
        for (&id, &d) in self.ids.feedback.iter().zip(dists) {
            let table = tape.param(id);
            parts.push(tape.matmul(d, table)?);
        }
        Ok(tape.concat(&parts, 1)?)
    }

    fn check_targets(&self, targets: &[Vec<usize>]) -> Result<()> {
        if targets.len() + 1 > self.config.max_objects {
            return Err(ModelError::Target {
                step: targets.len(),
                reason: format!("{} objects exceed the cap of {}", targets.len(), self.config.max_objects - 1),
            });
        }
        for (step, t) in targets.iter().enumerate() {
            let bad = t.len() != self.config.class_counts.len()
                || t.iter().zip(&self.config.class_counts).any(|(&c, &k)| c >= k)
                || t[0] == SHAPE_EOS_INDEX;
            if bad {
                return Err(ModelError::Target { step, reason: format!("classes {t:?} outside the schema") });
            }
        }
        Ok(())
    }

    /// Runs the decoder. With targets it emits exactly `targets.len() + 1`
    /// steps and feeds back ground truth with probability
    /// `opts.teacher_forcing` per step; without targets it stops at EOS or
    /// the step cap.
    pub fn forward(
        &self,
        tape: &mut Tape,
        ids: &[usize],
        targets: Option<&[Vec<usize>]>,
        opts: &RunOptions,
    ) -> Result<ForwardPass> {
        if let Some(t) = targets {
            self.check_targets(t)?;
        }
        let enc = self.encode(tape, ids, opts)?;
        let zeros = tape.constant(Tensor::zeros(1, self.config.hid_dim));
        let mut state = CellState { h: zeros, c: zeros };
        let mut input = tape.param(self.ids.start);
        let mut teacher = rng::rng(rng::derive(opts.seed, &[stream::TEACHER]));
        let limit = targets.map_or(self.config.max_objects, |t| t.len() + 1);
        let mut steps = Vec::new();
        for step in 0..limit {
            let (ctx, attention) = self.attend(tape, &enc, state.h)?;
            let (_, next, dists) = self.decode_step(tape, ctx, input, state, opts, step)?;
            state = next;
            let predicted: Vec<usize> = dists.iter().map(|&d| argmax(tape.value(d).data())).collect();
            steps.push(Step { dists: dists.clone(), attention });
            let target = targets.and_then(|t| t.get(step));
            if target.is_none() && (targets.is_some() || predicted[0] == SHAPE_EOS_INDEX) {
                break;
            }
            let forced = match target {
                Some(t) if teacher.random::<f64>() < opts.teacher_forcing => Some(t),
                _ => None,
            };
            input = match forced {
                Some(t) => self.feature_feedback(tape, t)?,
                None if self.config.soft_feedback => self.soft_feedback(tape, &dists)?,
                None => self.feature_feedback(tape, &predicted)?,
            };
        }
        Ok(ForwardPass { steps })
    }

    /// Weighted negative log likelihood summed over steps and heads; the
    /// final (EOS) step scores the shape head only.
    pub fn loss(
        &self,
        tape: &mut Tape,
        pass: &ForwardPass,
        targets: &[Vec<usize>],
        weights: &ClassWeights,
    ) -> Result<Var> {
        if pass.steps.len() < targets.len() + 1 {
            return Err(ModelError::Target {
                step: pass.steps.len(),
                reason: format!("{} steps for {} objects plus EOS", pass.steps.len(), targets.len()),
            });
        }
        let mut terms = Vec::new();
        for (step, t) in targets.iter().enumerate() {
            for (head, (&dist, &class)) in pass.steps[step].dists.iter().zip(t).enumerate() {
                terms.push(tape.nll(dist, class, weights.get(head, class))?);
            }
        }
        let eos = pass.steps[targets.len()].dists[0];
        terms.push(tape.nll(eos, SHAPE_EOS_INDEX, weights.get(0, SHAPE_EOS_INDEX))?);
        Ok(tape.sum(&terms)?)
    }

    /// Loss and parameter gradients of one training sample.
    pub fn sample_gradient(
        &self,
        ids: &[usize],
        targets: &[Vec<usize>],
        weights: &ClassWeights,
        opts: &RunOptions,
    ) -> Result<SampleGrad> {
        let mut tape = Tape::new(&self.params);
        let pass = self.forward(&mut tape, ids, Some(targets), opts)?;
        let loss = self.loss(&mut tape, &pass, targets, weights)?;
        let value = tape.value(loss).item();
        let grads = tape.backward(loss)?;
        Ok(SampleGrad { loss: value, grads, clamps: tape.clamp_count() })
    }

    /// Like [`sample_gradient`](Self::sample_gradient) but adds `scale`
    /// times the gradients straight into `acc`. Returns loss and clamp count.
    pub fn accumulate_gradient(
        &self,
        ids: &[usize],
        targets: &[Vec<usize>],
        weights: &ClassWeights,
        opts: &RunOptions,
        acc: &mut Grads,
        scale: f64,
    ) -> Result<(f64, usize)> {
        let mut tape = Tape::new(&self.params);
        let pass = self.forward(&mut tape, ids, Some(targets), opts)?;
        let loss = self.loss(&mut tape, &pass, targets, weights)?;
        tape.backward_into(loss, acc, scale)?;
        Ok((tape.value(loss).item(), tape.clamp_count()))
    }

    /// Greedy decode of token ids in eval mode.
    pub fn decode_ids(&self, ids: &[usize]) -> Result<Decoded> {
        let mut tape = Tape::new(&self.params);
        let pass = self.forward(&mut tape, ids, None, &RunOptions::eval())?;
        let mut classes = Vec::with_capacity(pass.steps.len());
        let mut rows = Vec::with_capacity(pass.steps.len());
        for step in &pass.steps {
            classes.push(step.dists.iter().map(|&d| argmax(tape.value(d).data())).collect());
            rows.push(tape.value(step.attention).data().to_vec());
        }
        Ok(Decoded { classes, trace: AttentionTrace { rows } })
    }

    /// Tokenizes `text`, decodes it and assembles the layout.
    pub fn greedy_decode(&self, text: &str, vocab: &Vocab) -> Result<Parsed> {
        let (tokens, ids) = vocab.encode_text(text);
        if ids.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        let decoded = self.decode_ids(&ids)?;
        let schema = self.config.schema();
        let terminated = decoded.classes.last().is_some_and(|c| c[0] == SHAPE_EOS_INDEX);
        let layout = assemble_layout(&schema, &decoded.classes);
        let violations = validate_layout(&layout, &schema).err().unwrap_or_default();
        Ok(Parsed { tokens, layout, trace: decoded.trace, violations, terminated })
    }
}

/// Objects up to the first EOS step. Full-mode output is an animated scene
/// when any object carries a motion.
pub fn assemble_layout(schema: &FeatureSchema, classes: &[Vec<usize>]) -> SceneLayout {
    let objects: Vec<_> = classes.iter().map_while(|c| schema.decode(c)).collect();
    let animated = match schema.mode {
        Mode::Static => false,
        Mode::Animated => true,
        Mode::Full => objects.iter().any(|o| o.motion.is_some()),
    };
    if animated {
        SceneLayout::new_animated(objects)
    } else {
        SceneLayout::new_static(objects)
    }
}

#[cfg(test)]
mod tests;
