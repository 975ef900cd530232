//! Abstract layout to pixels: placement on a ground plane, procedural
//! motion, and a small ray tracer with Lambert/Blinn-Phong shading and hard
//! shadows.

pub mod geometry;
pub mod image;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use core::f64::consts::PI;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{self, stream};
use crate::scene::{Class, Color, Motion, ObjectSpec, SceneKind, SceneLayout, Shape, Size, Texture};
use geometry::{
    add, cross, dot, hit_box, hit_cylinder, hit_sphere, mat_mul, mat_t_vec, mat_vec, normalize, rot_x, rot_z, scale,
    sub, Hit, Mat3, Mesh, Ray, Vec3,
};
use image::RgbImage;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("invalid render config: {0}")]
    Config(String),
    #[error("degenerate camera: position equals look-at point")]
    Camera,
    #[error("could not place {objects} objects after {restarts} restarts")]
    Placement { objects: usize, restarts: usize },
    #[error("invalid layout: {0}")]
    Layout(String),
}

pub type Result<T> = core::result::Result<T, RenderError>;

/// Geometry used for one shape class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryVariant {
    Analytic,
    /// Once-subdivided icosahedron (spheres only).
    Icosphere,
    /// Twelve-sided prism (cylinders only).
    Prism,
}

impl GeometryVariant {
    pub fn name(self) -> &'static str {
        match self {
            GeometryVariant::Analytic => "analytic",
            GeometryVariant::Icosphere => "icosphere",
            GeometryVariant::Prism => "prism",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [GeometryVariant::Analytic, GeometryVariant::Icosphere, GeometryVariant::Prism]
            .into_iter()
            .find(|v| v.name() == name)
    }

    pub fn supports(self, shape: Shape) -> bool {
        matches!(
            (self, shape),
            (GeometryVariant::Analytic, _)
                | (GeometryVariant::Icosphere, Shape::Sphere)
                | (GeometryVariant::Prism, Shape::Cylinder)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub vfov_degrees: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Light {
    /// Direction towards the key light.
    pub direction: Vec3,
    pub ambient: f64,
    /// Highlight strength and exponent for metal.
    pub specular: f64,
    pub shininess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub fps: u32,
    /// Samples per pixel side (1 = none, 2 = 2x2).
    pub supersample: usize,
    pub camera: Camera,
    pub light: Light,
    pub shadows: bool,
    /// Color class name to RGB.
    pub palette: BTreeMap<String, [u8; 3]>,
    /// Size class name to footprint radius in scene units.
    pub sizes: BTreeMap<String, f64>,
    /// Shape class name to geometry variant.
    pub geometry: BTreeMap<String, GeometryVariant>,
    /// Center coordinates are kept in `[bounds[0], bounds[1]]` on both axes.
    pub bounds: [f64; 2],
    pub margin: f64,
    pub ground: [u8; 3],
    pub sky: [u8; 3],
    pub seed: u64,
}

pub const PALETTE: [(Color, [u8; 3]); 8] = [
    (Color::Gray, [87, 87, 87]),
    (Color::Red, [173, 35, 35]),
    (Color::Blue, [42, 75, 215]),
    (Color::Green, [29, 105, 20]),
    (Color::Brown, [129, 74, 25]),
    (Color::Purple, [129, 38, 192]),
    (Color::Cyan, [41, 208, 208]),
    (Color::Yellow, [255, 238, 51]),
];

pub const MAX_PLACEMENT_ATTEMPTS: usize = 200;
pub const MAX_PLACEMENT_RESTARTS: usize = 20;

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 192,
            height: 128,
            fps: 8,
            supersample: 1,
            camera: Camera { position: [7.5, -6.5, 5.3], look_at: [0.0, 0.0, 0.0], vfov_degrees: 35.0 },
            light: Light { direction: [1.0, -2.0, 3.0], ambient: 0.25, specular: 0.6, shininess: 60.0 },
            shadows: true,
            palette: PALETTE.iter().map(|(c, rgb)| (c.name().into(), *rgb)).collect(),
            sizes: [(Size::Large, 0.7), (Size::Small, 0.35)].iter().map(|(s, r)| (s.name().into(), *r)).collect(),
            geometry: Shape::ALL.iter().map(|s| (s.name().into(), GeometryVariant::Analytic)).collect(),
            bounds: [-3.0, 3.0],
            margin: 0.1,
            ground: [140, 140, 140],
            sky: [200, 200, 205],
            seed: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RenderError::Config(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("resolution {}x{}", self.width, self.height));
        }
        if self.fps == 0 {
            return bad("fps must be positive".into());
        }
        if !(1..=4).contains(&self.supersample) {
            return bad(format!("supersample {} outside 1..=4", self.supersample));
        }
        if !(self.camera.vfov_degrees > 0.0 && self.camera.vfov_degrees < 180.0) {
            return bad(format!("vertical field of view {}", self.camera.vfov_degrees));
        }
        if self.camera.position == self.camera.look_at {
            return Err(RenderError::Camera);
        }
        for &c in Color::ALL {
            if !self.palette.contains_key(c.name()) {
                return bad(format!("palette lacks {}", c.name()));
            }
        }
        for &s in Size::ALL {
            match self.sizes.get(s.name()) {
                Some(&r) if r > 0.0 => {}
                _ => return bad(format!("size {} needs a positive radius", s.name())),
            }
        }
        for &s in Shape::ALL {
            match self.geometry.get(s.name()) {
                Some(v) if v.supports(s) => {}
                Some(v) => return bad(format!("{} geometry cannot render a {}", v.name(), s.name())),
                None => return bad(format!("no geometry registered for {}", s.name())),
            }
        }
        if !(self.bounds[0] < self.bounds[1]) || !(self.margin >= 0.0) {
            return bad(format!("bounds {:?} with margin {}", self.bounds, self.margin));
        }
        if norm_sq(self.light.direction) == 0.0 || !(0.0..=1.0).contains(&self.light.ambient) {
            return bad("light needs a direction and an ambient term in [0, 1]".into());
        }
        Ok(())
    }

    /// Number of frames for a clip, requiring `fps * duration` to be whole.
    pub fn frame_count(&self, duration: f64) -> Result<usize> {
        let f = self.fps as f64 * duration;
        let n = libm::round(f);
        if !(duration > 0.0) || (f - n).abs() > 1e-9 {
            return Err(RenderError::Config(format!("{} fps x {duration} s is not a whole frame count", self.fps)));
        }
        Ok(n as usize)
    }

    pub fn radius(&self, size: Size) -> f64 {
        self.sizes[size.name()]
    }

    pub fn variant(&self, shape: Shape) -> GeometryVariant {
        self.geometry[shape.name()]
    }

    /// Parses `shape=variant`, e.g. `sphere=icosphere`.
    pub fn set_geometry(&mut self, spec: &str) -> Result<()> {
        let (shape, variant) =
            spec.split_once('=').ok_or_else(|| RenderError::Config(format!("expected shape=variant, got {spec:?}")))?;
        let shape = Shape::from_name(shape.trim()).ok_or_else(|| RenderError::Config(format!("unknown shape {shape:?}")))?;
        let variant = GeometryVariant::from_name(variant.trim())
            .ok_or_else(|| RenderError::Config(format!("unknown geometry {variant:?}")))?;
        if !variant.supports(shape) {
            return Err(RenderError::Config(format!("{} geometry cannot render a {}", variant.name(), shape.name())));
        }
        self.geometry.insert(shape.name().into(), variant);
        Ok(())
    }
}

fn norm_sq(v: Vec3) -> f64 {
    dot(v, v)
}

/// An object with a ground position. Positions belong to the renderer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub spec: ObjectSpec,
    pub center: [f64; 2],
    /// Footprint radius.
    pub radius: f64,
    pub yaw: f64,
    pub motion_seed: u64,
}

/// Rejection-samples non-overlapping ground positions.
pub fn place_objects(layout: &SceneLayout, seed: u64, config: &RenderConfig) -> Result<Vec<PlacedObject>> {
    config.validate()?;
    let [lo, hi] = config.bounds;
    for restart in 0..=MAX_PLACEMENT_RESTARTS {
        let mut rng = rng::rng(rng::derive(seed, &[stream::PLACEMENT, restart as u64]));
        let mut placed: Vec<PlacedObject> = Vec::with_capacity(layout.objects.len());
        'objects: for (i, obj) in layout.objects.iter().enumerate() {
            let radius = config.radius(obj.size);
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let center = [rng.random_range(lo..=hi), rng.random_range(lo..=hi)];
                let yaw = rng.random_range(0.0..2.0 * PI);
                let clear = placed.iter().all(|p| {
                    let (dx, dy) = (p.center[0] - center[0], p.center[1] - center[1]);
                    libm::sqrt(dx * dx + dy * dy) >= p.radius + radius + config.margin
                });
                if clear {
                    let motion_seed = rng::derive(seed, &[stream::MOTION, i as u64]);
                    placed.push(PlacedObject { spec: *obj, center, radius, yaw, motion_seed });
                    continue 'objects;
                }
            }
            break;
        }
        if placed.len() == layout.objects.len() {
            return Ok(placed);
        }
    }
    Err(RenderError::Placement { objects: layout.objects.len(), restarts: MAX_PLACEMENT_RESTARTS })
}

/// Offset and rotation a motion adds at time `t` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionTransform {
    pub offset: Vec3,
    /// Extra rotation about the vertical axis, radians.
    pub yaw: f64,
    /// Rocking about the object's own x axis, radians.
    pub roll: f64,
}

impl MotionTransform {
    pub const IDENTITY: MotionTransform = MotionTransform { offset: [0.0; 3], yaw: 0.0, roll: 0.0 };
}

pub const BOUNCE_HEIGHT: f64 = 1.0;
pub const BOUNCE_PERIOD: f64 = 1.0;
pub const SHAKE_AMPLITUDE_DEGREES: f64 = 15.0;
pub const MOVE_SPEED: f64 = 1.0;

/// Unfolded motion; [`fold`] reflects moving objects off the bounds.
pub fn motion_transform(motion: Option<Motion>, t: f64, seed: u64) -> MotionTransform {
    let mut tf = MotionTransform::IDENTITY;
    match motion {
        None | Some(Motion::Rest) => {}
        Some(Motion::Spin) => tf.yaw = 2.0 * PI * t,
        Some(Motion::Bounce) => tf.offset[2] = BOUNCE_HEIGHT * libm::sin(PI * t / BOUNCE_PERIOD).abs(),
        Some(Motion::Shake) => tf.roll = SHAKE_AMPLITUDE_DEGREES.to_radians() * libm::sin(4.0 * PI * t),
        Some(Motion::Move) => {
            let angle = rng::rng(rng::derive(seed, &[stream::MOTION])).random_range(0.0..2.0 * PI);
            tf.offset[0] = MOVE_SPEED * t * libm::cos(angle);
            tf.offset[1] = MOVE_SPEED * t * libm::sin(angle);
        }
    }
    tf
}

/// Reflects coordinate `x` into `[lo, hi]` as if bouncing off both ends.
pub fn fold(x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span <= 0.0 {
        return lo;
    }
    let m = (x - lo).rem_euclid(2.0 * span);
    lo + if m > span { 2.0 * span - m } else { m }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Sphere(f64),
    Cube(f64),
    Cylinder(f64, f64),
    Icosphere(f64),
    Prism(f64),
}

#[derive(Debug, Clone, Copy)]
struct Body {
    kind: Kind,
    center: Vec3,
    rot: Mat3,
    albedo: Vec3,
    metal: bool,
}

/// A frame ready to trace: bodies at time `t` plus camera basis.
#[derive(Debug, Clone)]
pub struct FrameScene {
    bodies: Vec<Body>,
    ico: Mesh,
    prism: Mesh,
    eye: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    half_h: f64,
    half_w: f64,
    light: Vec3,
    config: RenderConfig,
}

fn rgb(c: [u8; 3]) -> Vec3 {
    [c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0]
}

pub const PRISM_SIDES: usize = 12;

impl FrameScene {
    pub fn new(placements: &[PlacedObject], t: f64, config: &RenderConfig) -> Result<Self> {
        config.validate()?;
        let cam = config.camera;
        let forward = normalize(sub(cam.look_at, cam.position));
        let mut right = cross(forward, [0.0, 0.0, 1.0]);
        if norm_sq(right) < 1e-12 {
            right = cross(forward, [0.0, 1.0, 0.0]);
        }
        let right = normalize(right);
        let up = cross(right, forward);
        let half_h = libm::tan(cam.vfov_degrees.to_radians() / 2.0);
        let half_w = half_h * config.width as f64 / config.height as f64;
        let [lo, hi] = config.bounds;
        let bodies = placements
            .iter()
            .map(|p| {
                let tf = motion_transform(p.spec.motion, t, p.motion_seed);
                let r = p.radius;
                let (kind, lift) = match (p.spec.shape, config.variant(p.spec.shape)) {
                    (Shape::Cube, _) => (Kind::Cube(r / core::f64::consts::SQRT_2), r / core::f64::consts::SQRT_2),
                    (Shape::Sphere, GeometryVariant::Icosphere) => (Kind::Icosphere(r), r),
                    (Shape::Sphere, _) => (Kind::Sphere(r), r),
                    (Shape::Cylinder, GeometryVariant::Prism) => (Kind::Prism(r), r),
                    (Shape::Cylinder, _) => (Kind::Cylinder(r, r), r),
                };
                let center = [
                    fold(p.center[0] + tf.offset[0], lo, hi),
                    fold(p.center[1] + tf.offset[1], lo, hi),
                    lift + tf.offset[2],
                ];
                Body {
                    kind,
                    center,
                    rot: mat_mul(&rot_z(p.yaw + tf.yaw), &rot_x(tf.roll)),
                    albedo: rgb(config.palette[p.spec.color.name()]),
                    metal: p.spec.texture == Texture::Metal,
                }
            })
            .collect();
        Ok(FrameScene {
            bodies,
            ico: Mesh::icosphere(1),
            prism: Mesh::prism(PRISM_SIDES, 1.0),
            eye: cam.position,
            forward,
            right,
            up,
            half_h,
            half_w,
            light: normalize(config.light.direction),
            config: config.clone(),
        })
    }

    fn hit_body(&self, b: &Body, ray: &Ray, t_min: f64) -> Option<Hit> {
        let local = Ray { origin: mat_t_vec(&b.rot, sub(ray.origin, b.center)), dir: mat_t_vec(&b.rot, ray.dir) };
        let hit = match b.kind {
            Kind::Sphere(r) => hit_sphere(&local, r, t_min),
            Kind::Cube(h) => hit_box(&local, h, t_min),
            Kind::Cylinder(r, h) => hit_cylinder(&local, r, h, t_min),
            Kind::Icosphere(r) => self.ico.hit(&local, r, t_min),
            Kind::Prism(r) => self.prism.hit(&local, r, t_min),
        }?;
        Some(Hit { t: hit.t, normal: mat_vec(&b.rot, hit.normal) })
    }

    fn nearest(&self, ray: &Ray, t_min: f64) -> Option<(Hit, Option<usize>)> {
        let mut best: Option<(Hit, Option<usize>)> = None;
        if ray.dir[2] < -1e-12 {
            let t = -ray.origin[2] / ray.dir[2];
            if t > t_min {
                best = Some((Hit { t, normal: [0.0, 0.0, 1.0] }, None));
            }
        }
        for (i, b) in self.bodies.iter().enumerate() {
            if let Some(h) = self.hit_body(b, ray, t_min) {
                if best.is_none_or(|(bh, _)| h.t < bh.t) {
                    best = Some((h, Some(i)));
                }
            }
        }
        best
    }

    fn occluded(&self, p: Vec3) -> bool {
        let ray = Ray { origin: p, dir: self.light };
        self.bodies.iter().any(|b| self.hit_body(b, &ray, 1e-6).is_some())
    }

    fn shade(&self, ray: &Ray) -> Vec3 {
        let Some((hit, body)) = self.nearest(ray, 1e-9) else {
            return rgb(self.config.sky);
        };
        let mut n = normalize(hit.normal);
        if dot(n, ray.dir) > 0.0 {
            n = scale(n, -1.0);
        }
        let p = add(add(ray.origin, scale(ray.dir, hit.t)), scale(n, 1e-7));
        let (albedo, metal) = match body {
            Some(i) => (self.bodies[i].albedo, self.bodies[i].metal),
            None => (rgb(self.config.ground), false),
        };
        let light = &self.config.light;
        let lit = !(self.config.shadows && self.occluded(p));
        let lambert = if lit { dot(n, self.light).max(0.0) } else { 0.0 };
        let diffuse = light.ambient + (1.0 - light.ambient) * lambert;
        let highlight = if metal && lit && lambert > 0.0 {
            let h = normalize(sub(self.light, ray.dir));
            light.specular * libm::pow(dot(n, h).max(0.0), light.shininess)
        } else {
            0.0
        };
        [0, 1, 2].map(|c| albedo[c] * diffuse + highlight)
    }

    fn primary_ray(&self, x: f64, y: f64) -> Ray {
        let (w, h) = (self.config.width as f64, self.config.height as f64);
        let sx = (2.0 * x / w - 1.0) * self.half_w;
        let sy = (1.0 - 2.0 * y / h) * self.half_h;
        let dir = normalize(add(self.forward, add(scale(self.right, sx), scale(self.up, sy))));
        Ray { origin: self.eye, dir }
    }

    /// RGB bytes of row `y`.
    pub fn render_row(&self, y: usize) -> Vec<u8> {
        let ss = self.config.supersample;
        let mut out = Vec::with_capacity(self.config.width * 3);
        for x in 0..self.config.width {
            let mut acc = [0.0; 3];
            for sy in 0..ss {
                for sx in 0..ss {
                    let fx = x as f64 + (sx as f64 + 0.5) / ss as f64;
                    let fy = y as f64 + (sy as f64 + 0.5) / ss as f64;
                    let c = self.shade(&self.primary_ray(fx, fy));
                    for k in 0..3 {
                        acc[k] += c[k];
                    }
                }
            }
            let n = (ss * ss) as f64;
            out.extend(acc.map(|v| libm::round((v / n).clamp(0.0, 1.0) * 255.0) as u8));
        }
        out
    }

    pub fn height(&self) -> usize {
        self.config.height
    }

    pub fn width(&self) -> usize {
        self.config.width
    }

    /// Pixel position of a world point, if it lies in front of the camera.
    pub fn project(&self, p: Vec3) -> Option<[f64; 2]> {
        let v = sub(p, self.eye);
        let z = dot(v, self.forward);
        if z <= 0.0 {
            return None;
        }
        let sx = dot(v, self.right) / z / self.half_w;
        let sy = dot(v, self.up) / z / self.half_h;
        let (w, h) = (self.config.width as f64, self.config.height as f64);
        Some([(sx + 1.0) * w / 2.0, (1.0 - sy) * h / 2.0])
    }

    /// World-space body centers at this frame's time.
    pub fn centers(&self) -> Vec<Vec3> {
        self.bodies.iter().map(|b| b.center).collect()
    }
}

/// Traces one frame.
pub fn render_frame(placements: &[PlacedObject], t: f64, config: &RenderConfig) -> Result<RgbImage> {
    let scene = FrameScene::new(placements, t, config)?;
    let mut data = Vec::with_capacity(config.width * config.height * 3);
    for y in 0..config.height {
        data.extend(scene.render_row(y));
    }
    Ok(RgbImage::from_raw(config.width, config.height, data).unwrap())
}

pub fn render_static(layout: &SceneLayout, seed: u64, config: &RenderConfig) -> Result<RgbImage> {
    let placements = place_objects(layout, seed, config)?;
    render_frame(&placements, 0.0, config)
}

/// Frame times `k / fps` for the layout's duration.
pub fn frame_times(layout: &SceneLayout, config: &RenderConfig) -> Result<Vec<f64>> {
    let n = config.frame_count(layout.duration())?;
    Ok((0..n).map(|k| k as f64 / config.fps as f64).collect())
}

pub fn render_animation(layout: &SceneLayout, seed: u64, config: &RenderConfig) -> Result<Vec<RgbImage>> {
    if layout.kind != SceneKind::Animated {
        return Err(RenderError::Layout("animation needs an animated layout".into()));
    }
    let placements = place_objects(layout, seed, config)?;
    frame_times(layout, config)?.into_iter().map(|t| render_frame(&placements, t, config)).collect()
}
