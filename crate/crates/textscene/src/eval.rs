//! Test-set evaluation, SSIM of rendered layouts and attention export.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use textscene_core::corpus::{describe, Condition, CorpusConfig, DescriptionSample, Split, Stated};
use textscene_core::metrics::{head_names, object_feature_accuracy, ssim, video_ssim, FeatureTally, SsimWindow};
use textscene_core::model::{AttentionTrace, Model, Vocab};
use textscene_core::render::RenderConfig;
use textscene_core::rng;
use textscene_core::scene::{Class, Motion, SceneKind, SceneLayout, EOS};

use crate::checkpoint::Checkpoint;
use crate::corpus_io::{config_hash, CorpusDir};
use crate::error::{Error, Result};
use crate::render_io::render_layout;
use crate::train::decode_all;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub samples: usize,
    pub strict: f64,
    pub specified_only: f64,
    pub per_head: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
    pub rendered: usize,
    pub render_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: String,
    pub split: String,
    pub conditions: BTreeMap<String, ConditionReport>,
    pub model_sha256: String,
    pub corpus_config_sha256: String,
}

/// Rendering settings for SSIM.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderEval {
    pub config: RenderConfig,
    /// Render at most this many samples per condition.
    pub limit: Option<usize>,
    pub seed: u64,
}

/// Features each sample's text states, in target order.
pub fn stated_features(samples: &[DescriptionSample], config: &CorpusConfig) -> Result<Vec<Vec<Stated>>> {
    samples.iter().map(|s| Ok(describe(s, config)?.stated)).collect()
}

/// Gives a prediction the ground truth's scene kind so both render to the
/// same number of frames. Missing motions rest; static scenes drop them.
pub fn align_kind(pred: &SceneLayout, truth: &SceneLayout) -> SceneLayout {
    let mut out = pred.clone();
    out.kind = truth.kind;
    out.duration_seconds = truth.duration_seconds;
    for o in &mut out.objects {
        o.motion = match truth.kind {
            SceneKind::Static => None,
            SceneKind::Animated => Some(o.motion.unwrap_or(Motion::Rest)),
        };
    }
    out
}

/// SSIM between renders of two layouts from one placement seed.
pub fn layout_ssim(pred: &SceneLayout, truth: &SceneLayout, seed: u64, config: &RenderConfig) -> Result<f64> {
    let a = render_layout(&align_kind(pred, truth), seed, config)?;
    let b = render_layout(truth, seed, config)?;
    let window = SsimWindow::default();
    Ok(if a.len() == 1 { ssim(&a[0], &b[0], window)? } else { video_ssim(&a, &b, window)? })
}

pub fn tally_report(model: &Model, strict: &FeatureTally, specified: &FeatureTally, samples: usize) -> ConditionReport {
    let names = head_names(&model.config.schema());
    ConditionReport {
        samples,
        strict: strict.percent(),
        specified_only: specified.percent(),
        per_head: names.into_iter().enumerate().map(|(h, n)| (n, strict.head_percent(h))).collect(),
        ssim: None,
        rendered: 0,
        render_failures: 0,
    }
}

pub fn evaluate_samples(
    model: &Model,
    vocab: &Vocab,
    samples: &[DescriptionSample],
    corpus: &CorpusConfig,
    render: Option<&RenderEval>,
) -> Result<ConditionReport> {
    let schema = model.config.schema();
    let preds = decode_all(model, vocab, samples)?;
    let truths: Vec<SceneLayout> = samples.iter().map(|s| s.layout.clone()).collect();
    let stated = stated_features(samples, corpus)?;
    let strict = object_feature_accuracy(&preds, &truths, &schema, None)?;
    let specified = object_feature_accuracy(&preds, &truths, &schema, Some(&stated))?;
    let mut report = tally_report(model, &strict, &specified, samples.len());
    if let Some(r) = render {
        let n = r.limit.map_or(samples.len(), |l| l.min(samples.len()));
        let scores: Vec<Option<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let seed = rng::derive(r.seed, &[samples[i].seed]);
                layout_ssim(&preds[i], &truths[i], seed, &r.config).ok()
            })
            .collect();
        let ok: Vec<f64> = scores.iter().flatten().copied().collect();
        report.rendered = ok.len();
        report.render_failures = n - ok.len();
        report.ssim = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
    }
    Ok(report)
}

pub fn evaluate_run(
    checkpoint: &Checkpoint,
    corpus: &CorpusDir,
    split: Split,
    render: Option<&RenderEval>,
) -> Result<EvalReport> {
    checkpoint.expect_mode(corpus.manifest.config.mode).map_err(|_| {
        Error::invalid(format!(
            "checkpoint is for {} mode, corpus holds {} data",
            checkpoint.header.mode, corpus.manifest.config.mode
        ))
    })?;
    if split == Split::Train {
        return Err(Error::invalid("evaluate on val or test"));
    }
    let mut conditions = BTreeMap::new();
    for cond in Condition::ALL {
        let samples = corpus.get(split, *cond);
        if samples.is_empty() {
            continue;
        }
        let report = evaluate_samples(&checkpoint.model, checkpoint.vocab(), samples, &corpus.manifest.config, render)?;
        conditions.insert(cond.name().to_string(), report);
    }
    if conditions.is_empty() {
        return Err(Error::invalid(format!("corpus has no {} samples", split.name())));
    }
    Ok(EvalReport {
        mode: checkpoint.header.mode.name().into(),
        split: split.name().into(),
        conditions,
        model_sha256: checkpoint.model_hash(),
        corpus_config_sha256: config_hash(&corpus.manifest.config),
    })
}

/// Heatmap CSV: a header of tokens, then one row per decode step labelled
/// with the predicted shape (`<eos>` for the stop step).
pub fn attention_csv(trace: &AttentionTrace, tokens: &[String], layout: &SceneLayout) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Runtime(e.to_string());
    let mut header = vec!["step".to_string()];
    header.extend(tokens.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for (k, row) in trace.rows.iter().enumerate() {
        if row.len() != tokens.len() {
            return Err(Error::Runtime(format!("attention row {k} has {} columns for {} tokens", row.len(), tokens.len())));
        }
        let label = layout.objects.get(k).map_or(EOS.to_string(), |o| o.shape.name().to_string());
        let mut record = vec![label];
        record.extend(row.iter().map(|v| format!("{v:.6}")));
        w.write_record(&record).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
