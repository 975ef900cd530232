//! Seeded synthesis of description corpora.
//!
//! Scenes are sampled under a compositional condition rule, described by a
//! template of one of three families, and assembled into split files whose
//! contents are a pure function of the configuration.

pub mod stats;
pub mod templates;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{self, stream};
use crate::scene::{
    Class, Color, CountBounds, Mode, Motion, ObjectSpec, SceneKind, SceneLayout, Shape, Size, Texture,
};
pub use templates::{render_description, Description, DropProbabilities, Stated, SynonymTable, TemplateError};

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [Self] = &[$(Self::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(Self::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = CorpusError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| CorpusError::Config(alloc::format!("unknown {} `{s}`", stringify!($name))))
            }
        }
    };
}

label_enum!(
    /// Description family.
    Family {
        Narrative => "narrative",
        SemiNarrative => "semi_narrative",
        Quantitative => "quantitative",
    }
);

label_enum!(
    /// Compositional-generalization condition.
    Condition {
        CondA => "condA",
        CondB => "condB",
    }
);

label_enum!(Split {
    Train => "train",
    Val => "val",
    Test => "test",
});

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Shape–color pairs a condition never produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionRule {
    pub name: String,
    pub forbidden: BTreeSet<(Shape, Color)>,
}

const COND_A_CUBE: [Color; 4] = [Color::Red, Color::Green, Color::Purple, Color::Cyan];
const COND_A_CYLINDER: [Color; 4] = [Color::Gray, Color::Blue, Color::Brown, Color::Yellow];

impl ConditionRule {
    pub fn unconstrained() -> Self {
        ConditionRule { name: "unconstrained".into(), forbidden: BTreeSet::new() }
    }

    /// Cubes are never red, green, purple or cyan; cylinders never gray,
    /// blue, brown or yellow.
    pub fn cond_a() -> Self {
        let mut forbidden = BTreeSet::new();
        forbidden.extend(COND_A_CUBE.iter().map(|&c| (Shape::Cube, c)));
        forbidden.extend(COND_A_CYLINDER.iter().map(|&c| (Shape::Cylinder, c)));
        ConditionRule { name: "condA".into(), forbidden }
    }

    /// The complement of [`cond_a`](Self::cond_a) over the constrained pairs.
    pub fn cond_b() -> Self {
        let mut forbidden = BTreeSet::new();
        forbidden.extend(COND_A_CYLINDER.iter().map(|&c| (Shape::Cube, c)));
        forbidden.extend(COND_A_CUBE.iter().map(|&c| (Shape::Cylinder, c)));
        ConditionRule { name: "condB".into(), forbidden }
    }

    pub fn allows(&self, shape: Shape, color: Color) -> bool {
        !self.forbidden.contains(&(shape, color))
    }

    pub fn allowed_colors(&self, shape: Shape) -> Vec<Color> {
        Color::ALL.iter().copied().filter(|&c| self.allows(shape, c)).collect()
    }

    /// Number of objects in a layout that use a forbidden pair.
    pub fn violations(&self, layout: &SceneLayout) -> usize {
        layout.objects.iter().filter(|o| !self.allows(o.shape, o.color)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionRules {
    #[serde(rename = "condA")]
    pub cond_a: ConditionRule,
    #[serde(rename = "condB")]
    pub cond_b: ConditionRule,
}

impl Default for ConditionRules {
    fn default() -> Self {
        ConditionRules { cond_a: ConditionRule::cond_a(), cond_b: ConditionRule::cond_b() }
    }
}

impl ConditionRules {
    pub fn get(&self, condition: Condition) -> &ConditionRule {
        match condition {
            Condition::CondA => &self.cond_a,
            Condition::CondB => &self.cond_b,
        }
    }
}

/// One corpus line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionSample {
    pub text: String,
    pub family: Family,
    pub condition: Condition,
    pub split: Split,
    pub layout: SceneLayout,
    pub template_id: usize,
    pub seed: u64,
}

/// Requested number of records for one (kind, family, split, condition) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub kind: SceneKind,
    pub family: Family,
    pub split: Split,
    pub condition: Condition,
    pub count: usize,
}

/// Narrative/semi-narrative/quantitative proportions.
pub const DEFAULT_FAMILY_MIX: [f64; 3] = [0.70, 0.15, 0.15];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub mode: Mode,
    pub seed: u64,
    pub bounds: CountBounds,
    pub cells: Vec<CellCount>,
    pub drop_probability: DropProbabilities,
    pub synonyms: SynonymTable,
    pub rules: ConditionRules,
}

/// Splits `total` by the family mix, rounding into the first families and
/// giving the remainder to the last.
pub fn family_counts(total: usize, mix: [f64; 3]) -> [usize; 3] {
    let a = libm::round(total as f64 * mix[0]) as usize;
    let b = (libm::round(total as f64 * mix[1]) as usize).min(total - a);
    [a, b, total - a - b]
}

impl CorpusConfig {
    /// Empty configuration; add cells with [`with_split`](Self::with_split).
    pub fn empty(mode: Mode, seed: u64) -> Self {
        CorpusConfig {
            mode,
            seed,
            bounds: CountBounds::default(),
            cells: Vec::new(),
            drop_probability: DropProbabilities::default(),
            synonyms: SynonymTable::default(),
            rules: ConditionRules::default(),
        }
    }

    /// Kinds produced by a mode, each with its share of every count.
    fn kinds(mode: Mode) -> &'static [SceneKind] {
        match mode {
            Mode::Static => &[SceneKind::Static],
            Mode::Animated => &[SceneKind::Animated],
            Mode::Full => &[SceneKind::Static, SceneKind::Animated],
        }
    }

    /// Adds `total` records for one split and condition, divided evenly over
    /// the mode's scene kinds and then by the default family mix.
    pub fn with_split(mut self, split: Split, condition: Condition, total: usize) -> Self {
        let kinds = Self::kinds(self.mode);
        let per_kind = total / kinds.len();
        for (k, &kind) in kinds.iter().enumerate() {
            let share = if k + 1 == kinds.len() { total - per_kind * (kinds.len() - 1) } else { per_kind };
            for (family, count) in Family::ALL.iter().zip(family_counts(share, DEFAULT_FAMILY_MIX)) {
                self.cells.push(CellCount { kind, family: *family, split, condition, count });
            }
        }
        self
    }

    /// Train on condA, validate and test on both conditions.
    pub fn scaled(mode: Mode, seed: u64, train: usize, val: usize, test: usize) -> Self {
        CorpusConfig::empty(mode, seed)
            .with_split(Split::Train, Condition::CondA, train)
            .with_split(Split::Val, Condition::CondA, val)
            .with_split(Split::Val, Condition::CondB, val)
            .with_split(Split::Test, Condition::CondA, test)
            .with_split(Split::Test, Condition::CondB, test)
    }

    /// Desk-scale preset: 20,000 train, 1,000 + 1,000 val, 1,280 + 1,280 test.
    pub fn desk(mode: Mode, seed: u64) -> Self {
        CorpusConfig::scaled(mode, seed, 20_000, 1_000, 1_280)
    }

    /// The full-size train/val/test scheme (100,000 / 5,000 / 6,400).
    pub fn paper_split(mode: Mode, seed: u64) -> Self {
        CorpusConfig::scaled(mode, seed, 100_000, 5_000, 6_400)
    }

    /// The full description pool per family for one kind. The condition
    /// pools are emitted as test cells.
    pub fn paper_pool(kind: SceneKind, seed: u64) -> Self {
        let narrative: [usize; 3] = match kind {
            SceneKind::Static => [490_000, 105_000, 105_000],
            SceneKind::Animated => [560_000, 120_000, 120_000],
        };
        let rows = [
            (Family::Narrative, narrative),
            (Family::SemiNarrative, [210_000, 45_000, 45_000]),
            (Family::Quantitative, [210_000, 45_000, 45_000]),
        ];
        let mode = match kind {
            SceneKind::Static => Mode::Static,
            SceneKind::Animated => Mode::Animated,
        };
        let mut config = CorpusConfig::empty(mode, seed);
        for (family, [train, a, b]) in rows {
            for (split, condition, count) in
                [(Split::Train, Condition::CondA, train), (Split::Test, Condition::CondA, a), (Split::Test, Condition::CondB, b)]
            {
                config.cells.push(CellCount { kind, family, split, condition, count });
            }
        }
        config
    }

    pub fn count(&self, split: Split, condition: Option<Condition>, family: Option<Family>) -> usize {
        self.cells
            .iter()
            .filter(|c| c.split == split)
            .filter(|c| condition.map_or(true, |x| c.condition == x))
            .filter(|c| family.map_or(true, |x| c.family == x))
            .map(|c| c.count)
            .sum()
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.cells.iter().all(|c| c.count == 0) {
            return Err(CorpusError::Config("every cell count is zero".into()));
        }
        if self.bounds.min == 0 || self.bounds.min > self.bounds.max {
            return Err(CorpusError::Config(alloc::format!(
                "invalid object count bounds {}..={}",
                self.bounds.min,
                self.bounds.max
            )));
        }
        if self.bounds.max > 10 {
            return Err(CorpusError::Config("object count above ten cannot be described".into()));
        }
        for p in self.drop_probability.values() {
            if !(0.0..1.0).contains(&p) {
                return Err(CorpusError::Config(alloc::format!("drop probability {p} outside [0, 1)")));
            }
        }
        for cell in &self.cells {
            if !self.mode.admits(cell.kind) {
                return Err(CorpusError::Config(alloc::format!(
                    "{} cell under {} mode",
                    cell.kind.name(),
                    self.mode
                )));
            }
        }
        for rule in [&self.rules.cond_a, &self.rules.cond_b] {
            check_rule(rule)?;
        }
        Ok(())
    }
}

fn check_rule(rule: &ConditionRule) -> Result<(), CorpusError> {
    for &shape in Shape::ALL {
        if rule.allowed_colors(shape).is_empty() {
            return Err(CorpusError::Config(alloc::format!(
                "condition {} leaves no color for {shape}",
                rule.name
            )));
        }
    }
    Ok(())
}

fn pick<T: Copy>(rng: &mut rng::Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

/// Motions a shape may carry; spin only makes a visible difference on cubes.
pub fn allowed_motions(shape: Shape) -> &'static [Motion] {
    match shape {
        Shape::Cube => Motion::ALL,
        _ => &[Motion::Bounce, Motion::Shake, Motion::Move, Motion::Rest],
    }
}

/// Samples one scene. Deterministic in `seed`.
pub fn sample_scene(
    seed: u64,
    kind: SceneKind,
    bounds: CountBounds,
    rule: &ConditionRule,
) -> Result<SceneLayout, CorpusError> {
    check_rule(rule)?;
    if bounds.min > bounds.max {
        return Err(CorpusError::Config("empty object count range".into()));
    }
    let mut rng = rng::rng(rng::derive(seed, &[stream::SCENE]));
    let n = rng.random_range(bounds.min..=bounds.max);
    let objects = (0..n)
        .map(|_| {
            let shape = pick(&mut rng, Shape::ALL);
            let color = pick(&mut rng, &rule.allowed_colors(shape));
            let size = pick(&mut rng, Size::ALL);
            let texture = pick(&mut rng, Texture::ALL);
            let motion = match kind {
                SceneKind::Static => None,
                SceneKind::Animated => Some(pick(&mut rng, allowed_motions(shape))),
            };
            ObjectSpec { shape, color, size, texture, motion }
        })
        .collect();
    Ok(match kind {
        SceneKind::Static => SceneLayout::new_static(objects),
        SceneKind::Animated => SceneLayout::new_animated(objects),
    })
}

/// Builds one record from its seed: scene, template choice, text, and the
/// layout reordered into mention order.
pub fn make_sample(
    seed: u64,
    cell: &CellCount,
    config: &CorpusConfig,
) -> Result<DescriptionSample, CorpusError> {
    let rule = config.rules.get(cell.condition);
    let scene = sample_scene(seed, cell.kind, config.bounds, rule)?;
    let ids = templates::template_ids(cell.kind, cell.family);
    let mut rng = rng::rng(rng::derive(seed, &[stream::RECORD]));
    let template_id = pick(&mut rng, &ids);
    let desc = render_description(
        &scene,
        cell.family,
        template_id,
        seed,
        &config.synonyms,
        &config.drop_probability,
    )?;
    Ok(DescriptionSample {
        layout: desc.target(&scene),
        text: desc.text,
        family: cell.family,
        condition: cell.condition,
        split: cell.split,
        template_id,
        seed,
    })
}

/// Re-renders a sample's description; spans and stated features line up with
/// `sample.layout.objects`.
pub fn describe(sample: &DescriptionSample, config: &CorpusConfig) -> Result<Description, CorpusError> {
    Ok(render_description(
        &sample.layout,
        sample.family,
        sample.template_id,
        sample.seed,
        &config.synonyms,
        &config.drop_probability,
    )?)
}

/// Identifies an output file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SplitKey {
    pub split: Split,
    pub condition: Option<Condition>,
}

impl SplitKey {
    pub fn of(split: Split, condition: Condition) -> Self {
        match split {
            Split::Train => SplitKey { split, condition: None },
            _ => SplitKey { split, condition: Some(condition) },
        }
    }

    pub fn file_stem(&self) -> String {
        match self.condition {
            None => self.split.name().into(),
            Some(c) => alloc::format!("{}_{}", self.split.name(), c.name()),
        }
    }
}

/// Generated records grouped by output file, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub parts: BTreeMap<SplitKey, Vec<DescriptionSample>>,
}

impl Corpus {
    pub fn all(&self) -> impl Iterator<Item = &DescriptionSample> {
        self.parts.values().flatten()
    }

    pub fn get(&self, split: Split, condition: Condition) -> &[DescriptionSample] {
        self.parts.get(&SplitKey::of(split, condition)).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.parts.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const MAX_ATTEMPTS: u64 = 1_000;

/// Generates every cell of the configuration. Records never repeat a
/// (text, layout) pair anywhere in the corpus, so splits are disjoint.
pub fn generate(config: &CorpusConfig) -> Result<Corpus, CorpusError> {
    config.validate()?;
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut parts: BTreeMap<SplitKey, Vec<DescriptionSample>> = BTreeMap::new();
    let mut index: u64 = 0;
    for cell in &config.cells {
        let out = parts.entry(SplitKey::of(cell.split, cell.condition)).or_default();
        for _ in 0..cell.count {
            let mut attempt = 0;
            loop {
                let seed = rng::derive(config.seed, &[stream::RECORD, index, attempt]);
                let sample = make_sample(seed, cell, config)?;
                let key = (sample.text.clone(), crate::scene::layout_to_json(&sample.layout));
                if seen.insert(key) {
                    out.push(sample);
                    break;
                }
                attempt += 1;
                if attempt == MAX_ATTEMPTS {
                    return Err(CorpusError::Config(alloc::format!(
                        "could not find a unique record for cell {:?} after {MAX_ATTEMPTS} attempts",
                        cell
                    )));
                }
            }
            index += 1;
        }
    }
    Ok(Corpus { parts })
}

/// Share of scenes with at least `min_objects` objects that contain a pair
/// forbidden by `rule`.
pub fn forbidden_pair_rate(samples: &[DescriptionSample], rule: &ConditionRule, min_objects: usize) -> f64 {
    let eligible: Vec<_> = samples.iter().filter(|s| s.layout.objects.len() >= min_objects).collect();
    if eligible.is_empty() {
        return 0.0;
    }
    let hits = eligible.iter().filter(|s| rule.violations(&s.layout) > 0).count();
    hits as f64 / eligible.len() as f64
}
