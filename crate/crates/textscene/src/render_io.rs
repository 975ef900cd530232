//! PNG output, parallel frame rendering and animation manifests.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use textscene_core::render::image::RgbImage;
use textscene_core::render::{frame_times, place_objects, FrameScene, PlacedObject, RenderConfig};
use textscene_core::scene::{SceneKind, SceneLayout};

use crate::error::{self, Error, Result};

pub const FRAME_MANIFEST: &str = "manifest.json";

/// Rows are traced in parallel and assembled in order.
pub fn render_frame_par(placements: &[PlacedObject], t: f64, config: &RenderConfig) -> Result<RgbImage> {
    let scene = FrameScene::new(placements, t, config)?;
    let rows: Vec<Vec<u8>> = (0..scene.height()).into_par_iter().map(|y| scene.render_row(y)).collect();
    Ok(RgbImage::from_raw(scene.width(), scene.height(), rows.concat()).expect("rows cover the frame"))
}

/// One frame for static layouts, `fps * duration` for animated ones.
pub fn render_layout(layout: &SceneLayout, seed: u64, config: &RenderConfig) -> Result<Vec<RgbImage>> {
    let placements = place_objects(layout, seed, config)?;
    match layout.kind {
        SceneKind::Static => Ok(vec![render_frame_par(&placements, 0.0, config)?]),
        SceneKind::Animated => {
            frame_times(layout, config)?.into_iter().map(|t| render_frame_par(&placements, t, config)).collect()
        }
    }
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| Error::Runtime(e.to_string()))?;
        w.write_image_data(img.data()).map_err(|e| Error::Runtime(e.to_string()))?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let dec = png::Decoder::new(bytes);
    let mut reader = dec.read_info().map_err(|e| Error::invalid(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::invalid(e.to_string()))?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::invalid(format!("expected 8-bit RGB, got {:?} {:?}", info.color_type, info.bit_depth)));
    }
    buf.truncate(info.buffer_size());
    Ok(RgbImage::from_raw(info.width as usize, info.height as usize, buf).expect("decoder sized the buffer"))
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<()> {
    error::write(path, encode_png(img)?)
}

pub fn read_png(path: &Path) -> Result<RgbImage> {
    decode_png(&error::read(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimationManifest {
    pub fps: u32,
    pub duration_seconds: f64,
    pub frames: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rendered {
    Image(PathBuf),
    Animation { dir: PathBuf, manifest: AnimationManifest },
}

/// Static layouts go to `out` as one PNG; animated layouts become a frame
/// directory at `out` with `manifest.json`.
pub fn render_to_path(layout: &SceneLayout, seed: u64, config: &RenderConfig, out: &Path) -> Result<Rendered> {
    let frames = render_layout(layout, seed, config)?;
    match layout.kind {
        SceneKind::Static => {
            write_png(out, &frames[0])?;
            Ok(Rendered::Image(out.to_path_buf()))
        }
        SceneKind::Animated => {
            let mut names = Vec::with_capacity(frames.len());
            for (k, f) in frames.iter().enumerate() {
                let name = format!("frame_{k:04}.png");
                write_png(&out.join(&name), f)?;
                names.push(name);
            }
            let manifest = AnimationManifest { fps: config.fps, duration_seconds: layout.duration(), frames: names };
            error::write_json(&out.join(FRAME_MANIFEST), &manifest)?;
            Ok(Rendered::Animation { dir: out.to_path_buf(), manifest })
        }
    }
}

pub fn load_render_config(path: &Path) -> Result<RenderConfig> {
    let config: RenderConfig = error::read_json(path)?;
    config.validate()?;
    Ok(config)
}
