//! Distribution audits and class rescaling weights.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{describe, CorpusConfig, CorpusError, DescriptionSample, Family};
use crate::scene::{Feature, FeatureSchema, Motion, Shape, SHAPE_EOS_INDEX};

/// Class marginals and family counts of a corpus.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub samples: usize,
    pub objects: usize,
    /// Per feature: count per canonical class.
    pub class_counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub family_counts: BTreeMap<String, usize>,
    /// Semi-narrative mentions with the feature omitted.
    pub dropped_features: BTreeMap<String, usize>,
    /// Spin assigned to a sphere or cylinder.
    pub spin_on_round_shapes: usize,
}

impl CorpusStats {
    /// Share of objects (carrying the feature) that have the given class.
    pub fn marginal(&self, feature: Feature, class: &str) -> f64 {
        let Some(counts) = self.class_counts.get(feature.name()) else {
            return 0.0;
        };
        let total: usize = counts.values().sum();
        if total == 0 {
            return 0.0;
        }
        *counts.get(class).unwrap_or(&0) as f64 / total as f64
    }
}

/// Tallies a corpus. The template bookkeeping in `config` is needed to
/// recover which features semi-narrative texts omitted.
pub fn corpus_stats<'a>(
    samples: impl IntoIterator<Item = &'a DescriptionSample>,
    config: &CorpusConfig,
) -> Result<CorpusStats, CorpusError> {
    let mut stats = CorpusStats::default();
    for feature in Feature::ALL {
        let counts = feature.class_names().into_iter().map(|c| (c.into(), 0)).collect();
        stats.class_counts.insert(feature.name().into(), counts);
    }
    for family in Family::ALL {
        stats.family_counts.insert(family.name().into(), 0);
    }
    for feature in &Feature::ALL[1..] {
        stats.dropped_features.insert(feature.name().into(), 0);
    }
    for sample in samples {
        stats.samples += 1;
        *stats.family_counts.get_mut(sample.family.name()).unwrap() += 1;
        for obj in &sample.layout.objects {
            stats.objects += 1;
            for feature in Feature::ALL {
                if let Some(class) = obj.class_name(feature) {
                    *stats.class_counts.get_mut(feature.name()).unwrap().get_mut(class).unwrap() += 1;
                }
            }
            if obj.motion == Some(Motion::Spin) && obj.shape != Shape::Cube {
                stats.spin_on_round_shapes += 1;
            }
        }
        if sample.family == Family::SemiNarrative {
            let desc = describe(sample, config)?;
            for (obj, stated) in sample.layout.objects.iter().zip(&desc.stated) {
                for feature in &Feature::ALL[1..] {
                    if obj.has(*feature) && !stated.contains(*feature) {
                        *stats.dropped_features.get_mut(feature.name()).unwrap() += 1;
                    }
                }
            }
        }
    }
    Ok(stats)
}

/// Per-head rescaling weights `N / (K * n_c)`; zero for unseen classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub heads: Vec<Vec<f64>>,
    /// `(head, class)` pairs that never occur in the corpus.
    pub unseen: Vec<(usize, usize)>,
}

impl ClassWeights {
    pub fn uniform(schema: &FeatureSchema) -> Self {
        ClassWeights { heads: schema.heads.iter().map(|h| vec![1.0; h.len()]).collect(), unseen: Vec::new() }
    }

    pub fn get(&self, head: usize, class: usize) -> f64 {
        self.heads[head][class]
    }
}

pub fn weights_from_counts(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    let k = counts.len() as f64;
    counts
        .iter()
        .map(|&n| if n == 0 { 0.0 } else { total as f64 / (k * n as f64) })
        .collect()
}

/// Target class counts per head over a corpus, one EOS per sample.
pub fn target_counts<'a>(
    samples: impl IntoIterator<Item = &'a DescriptionSample>,
    schema: &FeatureSchema,
) -> Vec<Vec<usize>> {
    let mut counts: Vec<Vec<usize>> = schema.heads.iter().map(|h| vec![0; h.len()]).collect();
    for sample in samples {
        for obj in &sample.layout.objects {
            for (head, idx) in schema.encode(obj).into_iter().enumerate() {
                if let Some(c) = counts[head].get_mut(idx) {
                    *c += 1;
                }
            }
        }
        counts[0][SHAPE_EOS_INDEX] += 1;
    }
    counts
}

pub fn class_weights<'a>(
    samples: impl IntoIterator<Item = &'a DescriptionSample>,
    schema: &FeatureSchema,
) -> ClassWeights {
    let counts = target_counts(samples, schema);
    let mut unseen = Vec::new();
    for (h, row) in counts.iter().enumerate() {
        for (c, &n) in row.iter().enumerate() {
            if n == 0 {
                unseen.push((h, c));
            }
        }
    }
    ClassWeights { heads: counts.iter().map(|c| weights_from_counts(c)).collect(), unseen }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate, Condition, Split};
    use crate::scene::{feature_schema, Class, Color, Mode};

    #[test]
    fn hand_computed_weights() {
        let w = weights_from_counts(&[2, 1, 1]);
        let expected = [4.0 / 6.0, 4.0 / 3.0, 4.0 / 3.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(weights_from_counts(&[5, 5, 5, 5]), vec![1.0; 4]);
        assert_eq!(weights_from_counts(&[3, 0, 3]), vec![1.0 / 1.5, 0.0, 1.0 / 1.5]);
    }

    #[test]
    fn spin_gets_larger_weight_than_rest() {
        let config = CorpusConfig::scaled(Mode::Animated, 3, 400, 0, 0);
        let corpus = generate(&config).unwrap();
        let schema = feature_schema(Mode::Animated);
        let w = class_weights(corpus.all(), &schema);
        assert!(w.get(4, Motion::Spin.index()) > w.get(4, Motion::Rest.index()));
        assert!(w.unseen.is_empty());
    }

    #[test]
    fn empty_corpus_reports_zero() {
        let config = CorpusConfig::empty(Mode::Static, 0);
        let stats = corpus_stats(core::iter::empty(), &config).unwrap();
        assert_eq!(stats.samples, 0);
        assert_eq!(stats.objects, 0);
        assert!(stats.class_counts.values().all(|m| m.values().all(|&v| v == 0)));
        assert_eq!(stats.marginal(Feature::Color, "red"), 0.0);
    }

    #[test]
    fn semi_narrative_drops_are_counted() {
        let config = CorpusConfig::scaled(Mode::Static, 5, 300, 0, 0);
        let corpus = generate(&config).unwrap();
        let stats = corpus_stats(corpus.get(Split::Train, Condition::CondA), &config).unwrap();
        let semi = stats.family_counts["semi_narrative"];
        assert_eq!(semi, 45);
        assert!(stats.dropped_features["color"] > 0);
        assert_eq!(stats.dropped_features["motion"], 0);
        assert_eq!(stats.spin_on_round_shapes, 0);
        assert!(stats.marginal(Feature::Color, Color::Red.name()) > 0.0);
    }
}
