//! Object-feature accuracy and structural similarity.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::templates::Stated;
use crate::render::image::RgbImage;
use crate::scene::{FeatureSchema, SceneLayout};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("empty evaluation set")]
    Empty,
    #[error("{what}: {left} vs {right}")]
    Mismatch { what: &'static str, left: usize, right: usize },
    #[error("image of {width}x{height} is smaller than the {window}x{window} window")]
    TooSmall { width: usize, height: usize, window: usize },
}

/// Which features enter the accuracy denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// Every feature of every object.
    Strict,
    /// Only features the description states.
    SpecifiedOnly,
}

/// Matched and scored feature counts, overall and per head.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureTally {
    pub correct: usize,
    pub total: usize,
    pub per_head: Vec<(usize, usize)>,
}

impl FeatureTally {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.total as f64
        }
    }

    pub fn head_percent(&self, head: usize) -> f64 {
        let (c, t) = self.per_head[head];
        if t == 0 {
            0.0
        } else {
            100.0 * c as f64 / t as f64
        }
    }
}

/// Scores one prediction against its ground truth. Objects are matched by
/// position; unmatched objects on either side score zero on all features.
/// With `stated`, ground-truth features absent from the text are skipped.
pub fn tally_sample(
    pred: &SceneLayout,
    truth: &SceneLayout,
    schema: &FeatureSchema,
    stated: Option<&[Stated]>,
) -> FeatureTally {
    let n = schema.head_count();
    let mut tally = FeatureTally { correct: 0, total: 0, per_head: vec![(0, 0); n] };
    let slots = pred.objects.len().max(truth.objects.len());
    for j in 0..slots {
        let p = pred.objects.get(j).map(|o| schema.encode(o));
        let t = truth.objects.get(j).map(|o| schema.encode(o));
        for (h, head) in schema.heads.iter().enumerate() {
            let counted = match (stated, t.is_some()) {
                (Some(s), true) => s.get(j).is_none_or(|s| s.contains(head.feature)),
                _ => true,
            };
            if !counted {
                continue;
            }
            let hit = matches!((&p, &t), (Some(p), Some(t)) if p[h] == t[h]);
            tally.total += 1;
            tally.per_head[h].1 += 1;
            if hit {
                tally.correct += 1;
                tally.per_head[h].0 += 1;
            }
        }
    }
    tally
}

/// Object-feature accuracy aggregated over all samples by feature count.
pub fn object_feature_accuracy(
    preds: &[SceneLayout],
    truths: &[SceneLayout],
    schema: &FeatureSchema,
    stated: Option<&[Vec<Stated>]>,
) -> Result<FeatureTally, MetricError> {
    if truths.is_empty() {
        return Err(MetricError::Empty);
    }
    if preds.len() != truths.len() {
        return Err(MetricError::Mismatch { what: "prediction and truth counts", left: preds.len(), right: truths.len() });
    }
    if let Some(s) = stated {
        if s.len() != truths.len() {
            return Err(MetricError::Mismatch { what: "stated-feature records", left: s.len(), right: truths.len() });
        }
    }
    let n = schema.head_count();
    let mut total = FeatureTally { correct: 0, total: 0, per_head: vec![(0, 0); n] };
    for (i, (p, t)) in preds.iter().zip(truths).enumerate() {
        let s = tally_sample(p, t, schema, stated.map(|s| s[i].as_slice()));
        total.correct += s.correct;
        total.total += s.total;
        for (a, b) in total.per_head.iter_mut().zip(&s.per_head) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }
    Ok(total)
}

/// Gaussian SSIM window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimWindow {
    pub size: usize,
    pub sigma: f64,
}

impl Default for SsimWindow {
    fn default() -> Self {
        SsimWindow { size: 11, sigma: 1.5 }
    }
}

pub const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn gaussian(window: SsimWindow) -> Vec<f64> {
    let c = (window.size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..window.size)
        .map(|i| {
            let d = i as f64 - c;
            libm::exp(-d * d / (2.0 * window.sigma * window.sigma))
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Valid-region separable filtering of a `w x h` plane.
fn filter(plane: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = k.iter().zip(&src[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM over all fully contained windows, on luma.
pub fn ssim(a: &RgbImage, b: &RgbImage, window: SsimWindow) -> Result<f64, MetricError> {
    if a.width() != b.width() {
        return Err(MetricError::Mismatch { what: "image widths", left: a.width(), right: b.width() });
    }
    if a.height() != b.height() {
        return Err(MetricError::Mismatch { what: "image heights", left: a.height(), right: b.height() });
    }
    let (w, h) = (a.width(), a.height());
    if w < window.size || h < window.size {
        return Err(MetricError::TooSmall { width: w, height: h, window: window.size });
    }
    let k = gaussian(window);
    let x = a.luma();
    let y = b.luma();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let (mx, my) = (filter(&x, w, h, &k), filter(&y, w, h, &k));
    let (sxx, syy, sxy) = (filter(&xx, w, h, &k), filter(&yy, w, h, &k), filter(&xy, w, h, &k));
    let mut sum = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cov = sxy[i] - ux * uy;
        sum += ((2.0 * ux * uy + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2));
    }
    Ok(sum / mx.len() as f64)
}

/// Mean per-frame SSIM of two equally long clips.
pub fn video_ssim(a: &[RgbImage], b: &[RgbImage], window: SsimWindow) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::Mismatch { what: "frame counts", left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = 0.0;
    for (fa, fb) in a.iter().zip(b) {
        sum += ssim(fa, fb, window)?;
    }
    Ok(sum / a.len() as f64)
}

/// Human-readable head labels for reports.
pub fn head_names(schema: &FeatureSchema) -> Vec<String> {
    schema.heads.iter().map(|h| h.feature.name().into()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::scene::{feature_schema, Color, Feature, Mode, ObjectSpec, Shape, Size, Texture};
    use rand::Rng as _;

    fn obj(shape: Shape, color: Color, size: Size, texture: Texture) -> ObjectSpec {
        ObjectSpec { shape, color, size, texture, motion: None }
    }

    #[test]
    fn seven_of_eight() {
        let schema = feature_schema(Mode::Static);
        let truth = SceneLayout::new_static(vec![
            obj(Shape::Cube, Color::Red, Size::Large, Texture::Metal),
            obj(Shape::Sphere, Color::Blue, Size::Small, Texture::Rubber),
        ]);
        let mut pred = truth.clone();
        pred.objects[1].color = Color::Green;
        let acc = object_feature_accuracy(&[pred], &[truth.clone()], &schema, None).unwrap();
        assert_eq!((acc.correct, acc.total), (7, 8));
        assert_eq!(acc.percent(), 87.5);
        assert_eq!(acc.head_percent(1), 50.0);
        let same = object_feature_accuracy(&[truth.clone()], &[truth], &schema, None).unwrap();
        assert_eq!(same.percent(), 100.0);
    }

    #[test]
    fn length_mismatch_uses_longer_side() {
        let schema = feature_schema(Mode::Static);
        let a = obj(Shape::Cube, Color::Red, Size::Large, Texture::Metal);
        let truth = SceneLayout::new_static(vec![a, a, a]);
        let short = SceneLayout::new_static(vec![a]);
        let long = SceneLayout::new_static(vec![a; 4]);
        let s = object_feature_accuracy(&[short], &[truth.clone()], &schema, None).unwrap();
        assert_eq!((s.correct, s.total), (4, 12));
        let l = object_feature_accuracy(&[long], &[truth], &schema, None).unwrap();
        assert_eq!((l.correct, l.total), (12, 16));
    }

    #[test]
    fn specified_only_skips_unstated() {
        let schema = feature_schema(Mode::Static);
        let truth = SceneLayout::new_static(vec![obj(Shape::Cube, Color::Red, Size::Large, Texture::Metal)]);
        let pred = SceneLayout::new_static(vec![obj(Shape::Cube, Color::Gray, Size::Small, Texture::Metal)]);
        let stated = vec![vec![Stated::only(Feature::Shape)]];
        let s = object_feature_accuracy(&[pred.clone()], &[truth.clone()], &schema, Some(&stated)).unwrap();
        assert_eq!((s.correct, s.total), (1, 1));
        let strict = object_feature_accuracy(&[pred], &[truth], &schema, None).unwrap();
        assert_eq!((strict.correct, strict.total), (2, 4));
    }

    #[test]
    fn errors() {
        let schema = feature_schema(Mode::Static);
        assert_eq!(object_feature_accuracy(&[], &[], &schema, None), Err(MetricError::Empty));
        let l = SceneLayout::new_static(vec![]);
        assert!(object_feature_accuracy(&[], &[l], &schema, None).is_err());
        let a = RgbImage::new(20, 20);
        assert!(ssim(&a, &RgbImage::new(20, 21), SsimWindow::default()).is_err());
        assert!(ssim(&RgbImage::new(5, 5), &RgbImage::new(5, 5), SsimWindow::default()).is_err());
        assert!(video_ssim(&[a.clone()], &[], SsimWindow::default()).is_err());
    }

    fn noise(seed: u64, w: usize, h: usize) -> RgbImage {
        let mut r = rng::rng(seed);
        RgbImage::from_raw(w, h, (0..w * h * 3).map(|_| r.random()).collect()).unwrap()
    }

    #[test]
    fn ssim_identity_symmetry_and_constants() {
        let w = SsimWindow::default();
        let x = noise(1, 40, 30);
        let y = noise(2, 40, 30);
        assert!((ssim(&x, &x, w).unwrap() - 1.0).abs() < 1e-12);
        let xy = ssim(&x, &y, w).unwrap();
        assert_eq!(xy, ssim(&y, &x, w).unwrap());
        assert!((-1.0..1.0).contains(&xy));
        let black = RgbImage::filled(32, 32, [0, 0, 0]);
        let white = RgbImage::filled(32, 32, [255, 255, 255]);
        let expected = SSIM_C1 / (255.0 * 255.0 + SSIM_C1);
        assert!((ssim(&black, &white, w).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn single_pixel_change_lowers_ssim() {
        let x = noise(3, 24, 24);
        let mut y = x.clone();
        let [r, g, b] = y.get(12, 12);
        y.put(12, 12, [r.wrapping_add(40), g, b]);
        assert!(ssim(&x, &y, SsimWindow::default()).unwrap() < 1.0);
    }

    #[test]
    fn video_mean_of_frames() {
        let w = SsimWindow::default();
        let frames: Vec<RgbImage> = (0..4).map(|i| noise(i, 16, 16)).collect();
        let mut other = frames.clone();
        other[2] = noise(99, 16, 16);
        let s = ssim(&frames[2], &other[2], w).unwrap();
        let v = video_ssim(&frames, &other, w).unwrap();
        assert!((v - (3.0 + s) / 4.0).abs() < 1e-12);
        assert!((video_ssim(&frames, &frames, w).unwrap() - 1.0).abs() < 1e-12);
    }
}
