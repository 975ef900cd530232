//! Description templates and synonym substitution.
//!
//! A template pairs a sentence frame ("Draw ...", "There are ...") with an
//! object-phrase pattern. Rendering records, for every object of the target
//! sequence, the token span of its mention and which of its features the text
//! actually states.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Family;
use crate::rng::{self, stream};
use crate::scene::{Class, Feature, ObjectSpec, SceneKind, SceneLayout, Shape};
use crate::text::tokenize;

/// Alternative wordings keyed by canonical class name (or `frame.*` key).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymTable {
    pub words: BTreeMap<String, Vec<String>>,
}

impl Default for SynonymTable {
    fn default() -> Self {
        let mut words = BTreeMap::new();
        let mut put = |key: &str, alts: &[&str]| {
            words.insert(key.to_string(), alts.iter().map(|s| s.to_string()).collect());
        };
        put("metal", &["metal", "shiny", "metallic"]);
        put("rubber", &["rubber", "matte"]);
        put("large", &["large", "big"]);
        put("small", &["small", "tiny"]);
        put("spin", &["spinning"]);
        put("bounce", &["bouncing"]);
        put("shake", &["shaking", "rocking"]);
        put("move", &["moving"]);
        put("rest", &["still", "resting"]);
        put("frame.draw", &["Draw"]);
        put("frame.there_are", &["There are"]);
        put("frame.scene_contains", &["The scene contains", "The scene has"]);
        SynonymTable { words }
    }
}

impl SynonymTable {
    /// A table with exactly one wording per key: the canonical one, except
    /// motions (participles) and frames.
    pub fn canonical() -> Self {
        let mut table = SynonymTable::default();
        for alts in table.words.values_mut() {
            alts.truncate(1);
        }
        table
    }

    pub fn with(mut self, key: &str, alts: &[&str]) -> Self {
        self.words.insert(key.into(), alts.iter().map(|s| s.to_string()).collect());
        self
    }

    /// All wordings for a key; falls back to the key itself.
    pub fn alternatives<'a>(&'a self, key: &'a str) -> Vec<&'a str> {
        match self.words.get(key) {
            Some(alts) if !alts.is_empty() => alts.iter().map(String::as_str).collect(),
            _ => vec![key],
        }
    }

    fn pick<'a>(&'a self, key: &'a str, rng: &mut rng::Rng) -> &'a str {
        let alts = self.alternatives(key);
        if alts.len() == 1 {
            alts[0]
        } else {
            alts[rng.random_range(0..alts.len())]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Draw,
    ThereAre,
    SceneContains,
}

impl Frame {
    fn key(self) -> &'static str {
        match self {
            Frame::Draw => "frame.draw",
            Frame::ThereAre => "frame.there_are",
            Frame::SceneContains => "frame.scene_contains",
        }
    }
}

/// One element of an object phrase. Literals tagged with a feature vanish
/// together with that feature when it is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    Slot(Feature),
    Lit(&'static str, Option<Feature>),
}

use Feature::{Color as C, Motion as M, Shape as H, Size as S, Texture as T};
use Piece::{Lit, Slot};

const P_COLORED_OF_TEXTURE: &[Piece] =
    &[Slot(S), Slot(C), Lit("colored", Some(C)), Slot(H), Lit("of", Some(T)), Slot(T), Lit("texture", Some(T))];
const P_COLOR_TEXTURE_SIZE: &[Piece] = &[Slot(C), Slot(T), Slot(S), Slot(H)];
const P_SIZE_COLOR_TEXTURE: &[Piece] = &[Slot(S), Slot(C), Slot(T), Slot(H)];
const P_OF_COLOR_WITH_TEXTURE: &[Piece] = &[
    Slot(S),
    Slot(H),
    Lit("of", Some(C)),
    Slot(C),
    Lit("color", Some(C)),
    Lit("with", Some(T)),
    Slot(T),
    Lit("texture", Some(T)),
];
const P_TEXTURE_SIZE_COLOR: &[Piece] = &[Slot(T), Slot(S), Slot(C), Slot(H)];
const P_OF_SIZE_WITH_TEXTURE: &[Piece] = &[
    Slot(C),
    Slot(H),
    Lit("of", Some(S)),
    Slot(S),
    Lit("size", Some(S)),
    Lit("with", Some(T)),
    Slot(T),
    Lit("texture", Some(T)),
];
const P_OF_COLOR: &[Piece] = &[Slot(S), Slot(T), Slot(H), Lit("of", Some(C)), Slot(C), Lit("color", Some(C))];

const A_COLORED_OF_TEXTURE: &[Piece] = &[
    Slot(M),
    Slot(S),
    Slot(C),
    Lit("colored", Some(C)),
    Slot(H),
    Lit("of", Some(T)),
    Slot(T),
    Lit("texture", Some(T)),
];
const A_COLOR_MOTION_TEXTURE_SIZE: &[Piece] = &[Slot(C), Slot(M), Slot(T), Slot(S), Slot(H)];
const A_MOTION_COLOR_TEXTURE_OF_SIZE: &[Piece] =
    &[Slot(M), Slot(C), Slot(T), Slot(H), Lit("of", Some(S)), Slot(S), Lit("size", Some(S))];
const A_SIZE_MOTION_COLOR_TEXTURE: &[Piece] = &[Slot(S), Slot(M), Slot(C), Slot(T), Slot(H)];
const A_THAT_IS_MOTION: &[Piece] =
    &[Slot(S), Slot(C), Slot(T), Slot(H), Lit("that", Some(M)), Lit("is", Some(M)), Slot(M)];
const A_OF_SIZE_WITH_TEXTURE_MOTION: &[Piece] = &[
    Slot(C),
    Slot(H),
    Lit("of", Some(S)),
    Slot(S),
    Lit("size", Some(S)),
    Lit("with", Some(T)),
    Slot(T),
    Lit("texture", Some(T)),
    Lit("that", Some(M)),
    Lit("is", Some(M)),
    Slot(M),
];
const A_TEXTURE_SIZE_COLOR_MOTION: &[Piece] = &[Slot(T), Slot(S), Slot(C), Slot(H), Slot(M)];

/// How objects are phrased by a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Body {
    /// One phrase per object.
    Objects(&'static [Piece]),
    /// Per-shape counts only.
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub family: Family,
    pub frame: Frame,
    pub body: Body,
}

const fn t(family: Family, frame: Frame, body: Body) -> Template {
    Template { family, frame, body }
}

const STATIC_BANK: &[Template] = &[
    t(Family::Narrative, Frame::Draw, Body::Objects(P_COLORED_OF_TEXTURE)),
    t(Family::Narrative, Frame::Draw, Body::Objects(P_COLOR_TEXTURE_SIZE)),
    t(Family::Narrative, Frame::ThereAre, Body::Objects(P_SIZE_COLOR_TEXTURE)),
    t(Family::Narrative, Frame::SceneContains, Body::Objects(P_OF_COLOR_WITH_TEXTURE)),
    t(Family::Narrative, Frame::ThereAre, Body::Objects(P_TEXTURE_SIZE_COLOR)),
    t(Family::Narrative, Frame::Draw, Body::Objects(P_OF_SIZE_WITH_TEXTURE)),
    t(Family::Narrative, Frame::SceneContains, Body::Objects(P_OF_COLOR)),
    t(Family::SemiNarrative, Frame::Draw, Body::Objects(P_SIZE_COLOR_TEXTURE)),
    t(Family::SemiNarrative, Frame::ThereAre, Body::Objects(P_OF_COLOR_WITH_TEXTURE)),
    t(Family::SemiNarrative, Frame::Draw, Body::Objects(P_COLORED_OF_TEXTURE)),
    t(Family::Quantitative, Frame::ThereAre, Body::Counts),
    t(Family::Quantitative, Frame::SceneContains, Body::Counts),
    t(Family::Quantitative, Frame::Draw, Body::Counts),
];

const ANIMATED_BANK: &[Template] = &[
    t(Family::Narrative, Frame::Draw, Body::Objects(A_COLORED_OF_TEXTURE)),
    t(Family::Narrative, Frame::ThereAre, Body::Objects(A_COLOR_MOTION_TEXTURE_SIZE)),
    t(Family::Narrative, Frame::Draw, Body::Objects(A_MOTION_COLOR_TEXTURE_OF_SIZE)),
    t(Family::Narrative, Frame::SceneContains, Body::Objects(A_SIZE_MOTION_COLOR_TEXTURE)),
    t(Family::Narrative, Frame::ThereAre, Body::Objects(A_THAT_IS_MOTION)),
    t(Family::Narrative, Frame::Draw, Body::Objects(A_OF_SIZE_WITH_TEXTURE_MOTION)),
    t(Family::Narrative, Frame::SceneContains, Body::Objects(A_TEXTURE_SIZE_COLOR_MOTION)),
    t(Family::SemiNarrative, Frame::Draw, Body::Objects(A_SIZE_MOTION_COLOR_TEXTURE)),
    t(Family::SemiNarrative, Frame::ThereAre, Body::Objects(A_COLOR_MOTION_TEXTURE_SIZE)),
    t(Family::SemiNarrative, Frame::Draw, Body::Objects(A_MOTION_COLOR_TEXTURE_OF_SIZE)),
    t(Family::SemiNarrative, Frame::SceneContains, Body::Objects(A_THAT_IS_MOTION)),
    t(Family::Quantitative, Frame::ThereAre, Body::Counts),
    t(Family::Quantitative, Frame::SceneContains, Body::Counts),
    t(Family::Quantitative, Frame::Draw, Body::Counts),
];

/// All templates for a scene kind; template ids index into this slice.
pub fn template_bank(kind: SceneKind) -> &'static [Template] {
    match kind {
        SceneKind::Static => STATIC_BANK,
        SceneKind::Animated => ANIMATED_BANK,
    }
}

/// Template ids of one family for a scene kind.
pub fn template_ids(kind: SceneKind, family: Family) -> Vec<usize> {
    template_bank(kind)
        .iter()
        .enumerate()
        .filter(|(_, t)| t.family == family)
        .map(|(i, _)| i)
        .collect()
}

/// Per-feature probability that a semi-narrative mention omits it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropProbabilities {
    pub color: f64,
    pub size: f64,
    pub texture: f64,
    pub motion: f64,
}

impl DropProbabilities {
    pub fn uniform(p: f64) -> Self {
        DropProbabilities { color: p, size: p, texture: p, motion: p }
    }

    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Shape => 0.0,
            Feature::Color => self.color,
            Feature::Size => self.size,
            Feature::Texture => self.texture,
            Feature::Motion => self.motion,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.color, self.size, self.texture, self.motion]
    }
}

impl Default for DropProbabilities {
    fn default() -> Self {
        DropProbabilities::uniform(0.35)
    }
}

/// Set of features stated in the text for one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stated(u8);

impl Stated {
    pub fn all() -> Self {
        Stated(0b11111)
    }

    pub fn only(feature: Feature) -> Self {
        Stated(1 << feature as u8)
    }

    pub fn insert(&mut self, feature: Feature) {
        self.0 |= 1 << feature as u8;
    }

    pub fn remove(&mut self, feature: Feature) {
        self.0 &= !(1 << feature as u8);
    }

    pub fn contains(self, feature: Feature) -> bool {
        self.0 & (1 << feature as u8) != 0
    }
}

/// A rendered description with per-object bookkeeping. All per-object vectors
/// follow the target order, i.e. order of first mention.
#[derive(Debug, Clone, PartialEq)]
pub struct Description {
    pub text: String,
    pub tokens: Vec<String>,
    /// Half-open token range of each object's mention.
    pub spans: Vec<(usize, usize)>,
    pub stated: Vec<Stated>,
    /// `order[k]` is the index in the input layout of the k-th target object.
    pub order: Vec<usize>,
}

impl Description {
    /// The input layout reordered into mention order.
    pub fn target(&self, layout: &SceneLayout) -> SceneLayout {
        SceneLayout {
            kind: layout.kind,
            duration_seconds: layout.duration_seconds,
            objects: self.order.iter().map(|&i| layout.objects[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {id} does not exist for {kind} scenes")]
    UnknownTemplate { id: usize, kind: &'static str },
    #[error("template {id} belongs to family {actual}, not {requested}")]
    FamilyMismatch { id: usize, actual: &'static str, requested: &'static str },
    #[error("cannot describe an empty scene")]
    EmptyScene,
}

const COUNT_WORDS: [&str; 11] =
    ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];

pub fn count_word(n: usize) -> Option<&'static str> {
    COUNT_WORDS.get(n).copied()
}

pub fn plural(shape: Shape) -> &'static str {
    match shape {
        Shape::Cube => "cubes",
        Shape::Sphere => "spheres",
        Shape::Cylinder => "cylinders",
    }
}

struct Builder {
    text: String,
    tokens: Vec<String>,
}

impl Builder {
    fn word(&mut self, w: &str) {
        if !self.text.is_empty() {
            self.text.push(' ');
        }
        self.text.push_str(w);
        self.tokens.extend(tokenize(w));
    }

    fn punct(&mut self, p: &str) {
        self.text.push_str(p);
        self.tokens.extend(tokenize(p));
    }

    fn separator(&mut self, index: usize, total: usize) {
        if index + 1 == total {
            return;
        }
        if index + 2 == total {
            self.word("and");
        } else {
            self.punct(",");
        }
    }
}

fn feature_key(obj: &ObjectSpec, feature: Feature) -> &'static str {
    obj.class_name(feature).unwrap_or("rest")
}

/// Renders one layout as text. Deterministic in all arguments.
pub fn render_description(
    layout: &SceneLayout,
    family: Family,
    template_id: usize,
    seed: u64,
    synonyms: &SynonymTable,
    drop: &DropProbabilities,
) -> Result<Description, TemplateError> {
    let bank = template_bank(layout.kind);
    let template = bank.get(template_id).ok_or(TemplateError::UnknownTemplate {
        id: template_id,
        kind: layout.kind.name(),
    })?;
    if template.family != family {
        return Err(TemplateError::FamilyMismatch {
            id: template_id,
            actual: template.family.name(),
            requested: family.name(),
        });
    }
    if layout.objects.is_empty() {
        return Err(TemplateError::EmptyScene);
    }
    let mut rng = rng::rng(rng::derive(seed, &[stream::TEXT]));
    let mut out = Builder { text: String::new(), tokens: Vec::new() };
    let frame = synonyms.pick(template.frame.key(), &mut rng);
    out.word(frame);

    let n = layout.objects.len();
    let mut spans = Vec::with_capacity(n);
    let mut stated = Vec::with_capacity(n);
    let mut order = Vec::with_capacity(n);

    match template.body {
        Body::Objects(pattern) => {
            for (i, obj) in layout.objects.iter().enumerate() {
                let mut keep = Stated::only(Feature::Shape);
                for feature in [Feature::Color, Feature::Size, Feature::Texture, Feature::Motion] {
                    if !obj.has(feature) {
                        continue;
                    }
                    let dropped = family == Family::SemiNarrative && {
                        let p = drop.get(feature);
                        p > 0.0 && rng.random::<f64>() < p
                    };
                    if !dropped {
                        keep.insert(feature);
                    }
                }
                let start = out.tokens.len();
                out.word("a");
                for piece in pattern {
                    match *piece {
                        Slot(feature) if keep.contains(feature) && obj.has(feature) => {
                            let word = synonyms.pick(feature_key(obj, feature), &mut rng);
                            out.word(word);
                        }
                        Slot(_) => {}
                        Lit(text, tag) => {
                            if tag.map_or(true, |f| keep.contains(f) && obj.has(f)) {
                                out.word(text);
                            }
                        }
                    }
                }
                spans.push((start, out.tokens.len()));
                stated.push(keep);
                order.push(i);
                out.separator(i, n);
            }
        }
        Body::Counts => {
            let mut groups: Vec<(Shape, Vec<usize>)> = Vec::new();
            for (i, obj) in layout.objects.iter().enumerate() {
                match groups.iter_mut().find(|(s, _)| *s == obj.shape) {
                    Some((_, members)) => members.push(i),
                    None => groups.push((obj.shape, vec![i])),
                }
            }
            let g = groups.len();
            for (gi, (shape, members)) in groups.iter().enumerate() {
                let start = out.tokens.len();
                let count = members.len();
                out.word(count_word(count).unwrap_or("many"));
                if count == 1 {
                    out.word(synonyms.pick(shape.name(), &mut rng));
                } else {
                    out.word(plural(*shape));
                }
                let span = (start, out.tokens.len());
                for &m in members {
                    spans.push(span);
                    stated.push(Stated::only(Feature::Shape));
                    order.push(m);
                }
                out.separator(gi, g);
            }
        }
    }
    out.punct(".");
    Ok(Description { text: out.text, tokens: out.tokens, spans, stated, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Color, Motion, Size, Texture};

    fn o(shape: Shape, color: Color, size: Size, texture: Texture) -> ObjectSpec {
        ObjectSpec { shape, color, size, texture, motion: None }
    }

    fn matte_table() -> SynonymTable {
        SynonymTable::canonical().with("rubber", &["matte"]).with("metal", &["shiny"])
    }

    #[test]
    fn bank_sizes() {
        assert_eq!(template_bank(SceneKind::Static).len(), 13);
        assert_eq!(template_bank(SceneKind::Animated).len(), 14);
        for kind in [SceneKind::Static, SceneKind::Animated] {
            for family in Family::ALL {
                assert!(!template_ids(kind, *family).is_empty());
            }
        }
    }

    #[test]
    fn draw_template_single_cylinder() {
        let layout = SceneLayout::new_static(vec![o(Shape::Cylinder, Color::Yellow, Size::Large, Texture::Rubber)]);
        let d = render_description(&layout, Family::Narrative, 0, 1, &matte_table(), &DropProbabilities::default())
            .unwrap();
        assert_eq!(d.text, "Draw a large yellow colored cylinder of matte texture.");
        assert_eq!(d.spans, vec![(1, 9)]);
        assert_eq!(d.tokens.len(), 10);
    }

    #[test]
    fn quantitative_counts() {
        let s = o(Shape::Sphere, Color::Red, Size::Small, Texture::Metal);
        let c = o(Shape::Cylinder, Color::Blue, Size::Large, Texture::Rubber);
        let layout = SceneLayout::new_static(vec![s, s, c, s, s]);
        let d = render_description(&layout, Family::Quantitative, 10, 3, &SynonymTable::default(), &DropProbabilities::default())
            .unwrap();
        assert_eq!(d.text, "There are four spheres and one cylinder.");
        assert_eq!(d.order, vec![0, 1, 3, 4, 2]);
        assert_eq!(d.spans, vec![(2, 4), (2, 4), (2, 4), (2, 4), (5, 7)]);
        assert!(d.stated.iter().all(|s| s.contains(Feature::Shape) && !s.contains(Feature::Color)));
    }

    #[test]
    fn full_drop_removes_every_color_word() {
        let layout = SceneLayout::new_static(
            Color::ALL.iter().map(|&c| o(Shape::Cube, c, Size::Small, Texture::Metal)).collect(),
        );
        let drop = DropProbabilities { color: 1.0, ..DropProbabilities::uniform(0.0) };
        for id in template_ids(SceneKind::Static, Family::SemiNarrative) {
            let d = render_description(&layout, Family::SemiNarrative, id, 9, &SynonymTable::default(), &drop).unwrap();
            for c in Color::ALL {
                assert!(!d.tokens.iter().any(|t| t == c.name()), "{}", d.text);
            }
            assert!(!d.tokens.iter().any(|t| t == "colored" || t == "color"));
            assert!(d.stated.iter().all(|s| !s.contains(Feature::Color) && s.contains(Feature::Size)));
        }
    }

    #[test]
    fn animated_phrase_and_determinism() {
        let layout = SceneLayout::new_animated(vec![
            ObjectSpec { motion: Some(Motion::Shake), ..o(Shape::Sphere, Color::Cyan, Size::Large, Texture::Rubber) },
            ObjectSpec { motion: Some(Motion::Spin), ..o(Shape::Cube, Color::Blue, Size::Small, Texture::Rubber) },
        ]);
        let table = matte_table().with("shake", &["rocking"]);
        let d = render_description(&layout, Family::Narrative, 2, 5, &table, &DropProbabilities::default()).unwrap();
        assert_eq!(d.text, "Draw a rocking cyan matte sphere of large size and a spinning blue matte cube of small size.");
        let again = render_description(&layout, Family::Narrative, 2, 5, &table, &DropProbabilities::default()).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn wrong_family_is_rejected() {
        let layout = SceneLayout::new_static(vec![o(Shape::Cube, Color::Red, Size::Small, Texture::Metal)]);
        assert!(matches!(
            render_description(&layout, Family::Quantitative, 0, 0, &SynonymTable::default(), &DropProbabilities::default()),
            Err(TemplateError::FamilyMismatch { .. })
        ));
        assert!(matches!(
            render_description(&layout, Family::Narrative, 99, 0, &SynonymTable::default(), &DropProbabilities::default()),
            Err(TemplateError::UnknownTemplate { .. })
        ));
    }
}
