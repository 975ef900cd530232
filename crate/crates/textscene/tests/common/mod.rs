#![allow(dead_code)]

use std::collections::VecDeque;

use textscene_core::render::image::RgbImage;
use textscene_core::render::{place_objects, render_frame, PlacedObject, RenderConfig};
use textscene_core::scene::SceneLayout;

/// Pixels that differ from the empty-scene render.
pub fn foreground(img: &RgbImage, empty: &RgbImage) -> Vec<bool> {
    img.data().chunks(3).zip(empty.data().chunks(3)).map(|(a, b)| a != b).collect()
}

/// 8-connected components of a mask with at least `min_size` pixels.
pub fn components(mask: &[bool], w: usize, h: usize, min_size: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if comp.len() >= min_size {
            out.push(comp);
        }
    }
    out
}

pub fn silhouette_config(width: usize, height: usize) -> RenderConfig {
    RenderConfig { width, height, shadows: false, ..RenderConfig::default() }
}

/// Counts objects in a shadowless render by diffing against the empty scene.
pub fn silhouette_count(placements: &[PlacedObject], t: f64, config: &RenderConfig) -> usize {
    let empty = render_frame(&[], t, config).unwrap();
    let img = render_frame(placements, t, config).unwrap();
    components(&foreground(&img, &empty), config.width, config.height, 4).len()
}

/// Whether every object's own silhouette is apart from all others by at
/// least one pixel, so a correct render must show exactly one component each.
pub fn separated(placements: &[PlacedObject], config: &RenderConfig) -> bool {
    let empty = render_frame(&[], 0.0, config).unwrap();
    let masks: Vec<Vec<bool>> = placements
        .iter()
        .map(|p| foreground(&render_frame(std::slice::from_ref(p), 0.0, config).unwrap(), &empty))
        .collect();
    let (w, h) = (config.width, config.height);
    let dilate = |m: &[bool]| -> Vec<bool> {
        (0..m.len())
            .map(|i| {
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                (-2..=2).any(|dy| {
                    (-2..=2).any(|dx| {
                        let (nx, ny) = (x + dx, y + dy);
                        nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 && m[ny as usize * w + nx as usize]
                    })
                })
            })
            .collect()
    };
    for (i, a) in masks.iter().enumerate() {
        if components(a, w, h, 1).len() != 1 {
            return false;
        }
        let grown = dilate(a);
        if masks[i + 1..].iter().any(|b| b.iter().zip(&grown).any(|(x, y)| *x && *y)) {
            return false;
        }
    }
    true
}

/// Mean pixel position of a silhouette's largest component.
pub fn centroid(img: &RgbImage, empty: &RgbImage) -> Option<(f64, f64)> {
    let (w, h) = (img.width(), img.height());
    let comps = components(&foreground(img, empty), w, h, 4);
    let big = comps.into_iter().max_by_key(Vec::len)?;
    let n = big.len() as f64;
    let sx: f64 = big.iter().map(|&i| (i % w) as f64).sum();
    let sy: f64 = big.iter().map(|&i| (i / w) as f64).sum();
    Some((sx / n, sy / n))
}

pub fn place(layout: &SceneLayout, seed: u64, config: &RenderConfig) -> Vec<PlacedObject> {
    place_objects(layout, seed, config).unwrap()
}
