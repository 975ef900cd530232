//! Scene vocabulary and the abstract layout data model.
//!
//! Every object in a scene is described by a handful of closed categorical
//! features. The decoder predicts one class per feature head and the renderer
//! consumes the resulting [`SceneLayout`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

/// Default length of an animated scene.
pub const DEFAULT_DURATION_SECONDS: f64 = 3.0;

/// A closed set of canonical class names.
pub trait Class: Copy + Eq + Sized + 'static {
    const ALL: &'static [Self];
    const FEATURE: Feature;

    fn name(self) -> &'static str;

    fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }

    fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }
}

macro_rules! class_enum {
    ($(#[$meta:meta])* $name:ident, $feature:expr, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl Class for $name {
            const ALL: &'static [Self] = &[$(Self::$variant),+];
            const FEATURE: Feature = $feature;

            fn name(self) -> &'static str {
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
            type Err = SceneError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::from_name(s).ok_or_else(|| SceneError::UnknownClass {
                    field: $feature.name().to_string(),
                    value: s.to_string(),
                })
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.name())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                text.parse().map_err(D::Error::custom)
            }
        }
    };
}

class_enum!(Shape, Feature::Shape, {
    Cube => "cube",
    Sphere => "sphere",
    Cylinder => "cylinder",
});

class_enum!(Color, Feature::Color, {
    Gray => "gray",
    Red => "red",
    Blue => "blue",
    Green => "green",
    Brown => "brown",
    Purple => "purple",
    Cyan => "cyan",
    Yellow => "yellow",
});

class_enum!(Size, Feature::Size, {
    Large => "large",
    Small => "small",
});

class_enum!(Texture, Feature::Texture, {
    Metal => "metal",
    Rubber => "rubber",
});

class_enum!(Motion, Feature::Motion, {
    Spin => "spin",
    Bounce => "bounce",
    Shake => "shake",
    Move => "move",
    Rest => "rest",
});

/// One categorical attribute of an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Shape,
    Color,
    Size,
    Texture,
    Motion,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Feature::Shape,
        Feature::Color,
        Feature::Size,
        Feature::Texture,
        Feature::Motion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Shape => "shape",
            Feature::Color => "color",
            Feature::Size => "size",
            Feature::Texture => "texture",
            Feature::Motion => "motion",
        }
    }

    /// Canonical class names, without reserved classes.
    pub fn class_names(self) -> Vec<&'static str> {
        fn names<C: Class>() -> Vec<&'static str> {
            C::ALL.iter().map(|c| c.name()).collect()
        }
        match self {
            Feature::Shape => names::<Shape>(),
            Feature::Color => names::<Color>(),
            Feature::Size => names::<Size>(),
            Feature::Texture => names::<Texture>(),
            Feature::Motion => names::<Motion>(),
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reserved shape-head class that terminates the object sequence.
pub const EOS: &str = "<eos>";
/// Reserved motion-head class for static objects in mixed-mode schemas.
pub const NONE: &str = "<none>";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SceneError {
    #[error("configuration error: unknown mode `{0}` (expected static, animated or full)")]
    UnknownMode(String),
    #[error("unknown class `{value}` for field `{field}`")]
    UnknownClass { field: String, value: String },
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("invalid value for field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("schema mismatch at `{field}`: {reason}")]
    SchemaMismatch { field: String, reason: String },
    #[error("malformed layout json: {0}")]
    Malformed(String),
}

/// Which scene families a model covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Static,
    Animated,
    Full,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Animated => "animated",
            Mode::Full => "full",
        }
    }

    pub fn admits(self, kind: SceneKind) -> bool {
        match self {
            Mode::Static => kind == SceneKind::Static,
            Mode::Animated => kind == SceneKind::Animated,
            Mode::Full => true,
        }
    }
}

impl FromStr for Mode {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(Mode::Static),
            "animated" => Ok(Mode::Animated),
            "full" => Ok(Mode::Full),
            other => Err(SceneError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One classification head of the decoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Head {
    pub feature: Feature,
    /// Dense, 0-based class list. Reserved classes come last.
    pub classes: Vec<String>,
}

impl Head {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }
}

impl Serialize for Feature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Feature::ALL
            .iter()
            .copied()
            .find(|f| f.name() == text)
            .ok_or_else(|| D::Error::custom(format!("unknown feature `{text}`")))
    }
}

/// Ordered feature heads for one model mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub mode: Mode,
    pub heads: Vec<Head>,
}

/// Class index of the shape-head end-of-sequence class.
pub const SHAPE_EOS_INDEX: usize = 3;
/// Class index of the motion-head NONE class (full mode only).
pub const MOTION_NONE_INDEX: usize = 5;

/// Builds the canonical schema for a mode.
pub fn feature_schema(mode: Mode) -> FeatureSchema {
    let mut heads = Vec::new();
    let mut features = alloc::vec![Feature::Shape, Feature::Color, Feature::Size, Feature::Texture];
    if mode != Mode::Static {
        features.push(Feature::Motion);
    }
    for feature in features {
        let mut classes: Vec<String> = feature.class_names().into_iter().map(String::from).collect();
        match feature {
            Feature::Shape => classes.push(EOS.into()),
            Feature::Motion if mode == Mode::Full => classes.push(NONE.into()),
            _ => {}
        }
        heads.push(Head { feature, classes });
    }
    FeatureSchema { mode, heads }
}

/// Parses a mode name and builds its schema.
pub fn feature_schema_named(mode: &str) -> Result<FeatureSchema, SceneError> {
    Ok(feature_schema(mode.parse()?))
}

impl FeatureSchema {
    pub fn head_count(&self) -> usize {
        self.heads.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.heads.iter().map(Head::len).collect()
    }

    pub fn has_motion(&self) -> bool {
        self.heads.iter().any(|h| h.feature == Feature::Motion)
    }

    /// Target class index per head for one object.
    pub fn encode(&self, obj: &ObjectSpec) -> Vec<usize> {
        self.heads
            .iter()
            .map(|head| match head.feature {
                Feature::Shape => obj.shape.index(),
                Feature::Color => obj.color.index(),
                Feature::Size => obj.size.index(),
                Feature::Texture => obj.texture.index(),
                Feature::Motion => match obj.motion {
                    Some(m) => m.index(),
                    None => MOTION_NONE_INDEX,
                },
            })
            .collect()
    }

    /// Inverse of [`encode`](Self::encode). Returns `None` on the EOS class.
    /// Out-of-range indices on non-shape heads fall back to the first class;
    /// a NONE motion maps to `motion: None`.
    pub fn decode(&self, indices: &[usize]) -> Option<ObjectSpec> {
        let mut obj = ObjectSpec {
            shape: Shape::Cube,
            color: Color::Gray,
            size: Size::Large,
            texture: Texture::Metal,
            motion: None,
        };
        for (head, &idx) in self.heads.iter().zip(indices) {
            match head.feature {
                Feature::Shape => obj.shape = Shape::from_index(idx)?,
                Feature::Color => obj.color = Color::from_index(idx).unwrap_or(Color::Gray),
                Feature::Size => obj.size = Size::from_index(idx).unwrap_or(Size::Large),
                Feature::Texture => obj.texture = Texture::from_index(idx).unwrap_or(Texture::Metal),
                Feature::Motion => obj.motion = Motion::from_index(idx),
            }
        }
        Some(obj)
    }
}

/// Categorical features of one scene object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub color: Color,
    pub size: Size,
    pub texture: Texture,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motion: Option<Motion>,
}

impl ObjectSpec {
    pub fn has(&self, feature: Feature) -> bool {
        feature != Feature::Motion || self.motion.is_some()
    }

    /// Canonical class name of one feature, if present.
    pub fn class_name(&self, feature: Feature) -> Option<&'static str> {
        match feature {
            Feature::Shape => Some(self.shape.name()),
            Feature::Color => Some(self.color.name()),
            Feature::Size => Some(self.size.name()),
            Feature::Texture => Some(self.texture.name()),
            Feature::Motion => self.motion.map(Motion::name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    Static,
    Animated,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Static => "static",
            SceneKind::Animated => "animated",
        }
    }
}

/// The abstract layout: ordered objects plus scene kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneLayout {
    pub kind: SceneKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
    pub objects: Vec<ObjectSpec>,
}

impl SceneLayout {
    pub fn new_static(objects: Vec<ObjectSpec>) -> Self {
        SceneLayout { kind: SceneKind::Static, duration_seconds: None, objects }
    }

    pub fn new_animated(objects: Vec<ObjectSpec>) -> Self {
        SceneLayout {
            kind: SceneKind::Animated,
            duration_seconds: Some(DEFAULT_DURATION_SECONDS),
            objects,
        }
    }

    /// Duration used for rendering; static scenes have none.
    pub fn duration(&self) -> f64 {
        self.duration_seconds.unwrap_or(DEFAULT_DURATION_SECONDS)
    }
}

/// Allowed object counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountBounds {
    pub min: usize,
    pub max: usize,
}

impl Default for CountBounds {
    fn default() -> Self {
        CountBounds { min: 3, max: 10 }
    }
}

/// A single invariant violation found by [`validate_layout`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SpinExcluded { index: usize, shape: Shape },
    CountBelowMinimum { count: usize, min: usize },
    CountAboveMaximum { count: usize, max: usize },
    MissingMotion { index: usize },
    UnexpectedMotion { index: usize },
    NonPositiveDuration,
    KindNotInMode { kind: SceneKind, mode: Mode },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SpinExcluded { index, shape } => {
                write!(f, "object {index}: spin excluded for {shape}")
            }
            Violation::CountBelowMinimum { count, min } => {
                write!(f, "count below minimum ({count} < {min})")
            }
            Violation::CountAboveMaximum { count, max } => {
                write!(f, "count above maximum ({count} > {max})")
            }
            Violation::MissingMotion { index } => {
                write!(f, "object {index}: animated object without motion")
            }
            Violation::UnexpectedMotion { index } => {
                write!(f, "object {index}: static object with motion")
            }
            Violation::NonPositiveDuration => f.write_str("duration must be positive"),
            Violation::KindNotInMode { kind, mode } => {
                write!(f, "{} layout under {mode} schema", kind.name())
            }
        }
    }
}

/// Checks every layout invariant with the default count bounds.
pub fn validate_layout(layout: &SceneLayout, schema: &FeatureSchema) -> Result<(), Vec<Violation>> {
    validate_layout_with(layout, schema, CountBounds::default())
}

pub fn validate_layout_with(
    layout: &SceneLayout,
    schema: &FeatureSchema,
    bounds: CountBounds,
) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let n = layout.objects.len();
    if n < bounds.min {
        out.push(Violation::CountBelowMinimum { count: n, min: bounds.min });
    }
    if n > bounds.max {
        out.push(Violation::CountAboveMaximum { count: n, max: bounds.max });
    }
    if !schema.mode.admits(layout.kind) {
        out.push(Violation::KindNotInMode { kind: layout.kind, mode: schema.mode });
    }
    if let Some(d) = layout.duration_seconds {
        if !(d > 0.0) {
            out.push(Violation::NonPositiveDuration);
        }
    }
    for (index, obj) in layout.objects.iter().enumerate() {
        match (layout.kind, obj.motion) {
            (SceneKind::Animated, None) => out.push(Violation::MissingMotion { index }),
            (SceneKind::Static, Some(_)) => out.push(Violation::UnexpectedMotion { index }),
            _ => {}
        }
        if obj.motion == Some(Motion::Spin) && obj.shape != Shape::Cube {
            out.push(Violation::SpinExcluded { index, shape: obj.shape });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

pub fn layout_to_value(layout: &SceneLayout) -> Value {
    serde_json::to_value(layout).expect("layout serialization is infallible")
}

pub fn layout_to_json(layout: &SceneLayout) -> String {
    serde_json::to_string(layout).expect("layout serialization is infallible")
}

pub fn layout_to_json_pretty(layout: &SceneLayout) -> String {
    serde_json::to_string_pretty(layout).expect("layout serialization is infallible")
}

pub fn layout_from_json(text: &str) -> Result<SceneLayout, SceneError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SceneError::Malformed(e.to_string()))?;
    layout_from_value(&value)
}

fn class_field<C: Class + FromStr<Err = SceneError>>(
    obj: &Map<String, Value>,
    path: &str,
    required: bool,
) -> Result<Option<C>, SceneError> {
    let key = C::FEATURE.name();
    let field = format!("{path}.{key}");
    match obj.get(key) {
        None | Some(Value::Null) if !required => Ok(None),
        None | Some(Value::Null) => Err(SceneError::MissingField(field)),
        Some(Value::String(s)) => s
            .parse::<C>()
            .map(Some)
            .map_err(|_| SceneError::UnknownClass { field, value: s.clone() }),
        Some(other) => Err(SceneError::InvalidField {
            field,
            reason: format!("expected a class name string, got {other}"),
        }),
    }
}

pub fn layout_from_value(value: &Value) -> Result<SceneLayout, SceneError> {
    let root = value
        .as_object()
        .ok_or_else(|| SceneError::Malformed("top level must be an object".into()))?;
    let kind = match root.get("kind") {
        None => return Err(SceneError::MissingField("kind".into())),
        Some(Value::String(s)) if s == "static" => SceneKind::Static,
        Some(Value::String(s)) if s == "animated" => SceneKind::Animated,
        Some(other) => {
            return Err(SceneError::InvalidField {
                field: "kind".into(),
                reason: format!("expected \"static\" or \"animated\", got {other}"),
            })
        }
    };
    let duration_seconds = match root.get("duration_seconds") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_f64() {
            Some(d) if d > 0.0 && d.is_finite() => Some(d),
            _ => {
                return Err(SceneError::InvalidField {
                    field: "duration_seconds".into(),
                    reason: format!("expected a positive number, got {v}"),
                })
            }
        },
    };
    let items = match root.get("objects") {
        None => return Err(SceneError::MissingField("objects".into())),
        Some(Value::Array(items)) => items,
        Some(other) => {
            return Err(SceneError::InvalidField {
                field: "objects".into(),
                reason: format!("expected an array, got {other}"),
            })
        }
    };
    let mut objects = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let path = format!("objects[{i}]");
        let obj = item.as_object().ok_or_else(|| SceneError::InvalidField {
            field: path.clone(),
            reason: "expected an object".into(),
        })?;
        for key in obj.keys() {
            if !Feature::ALL.iter().any(|f| f.name() == key) {
                return Err(SceneError::InvalidField {
                    field: format!("{path}.{key}"),
                    reason: "unknown field".into(),
                });
            }
        }
        let motion = class_field::<Motion>(obj, &path, false)?;
        if kind == SceneKind::Static && motion.is_some() {
            return Err(SceneError::SchemaMismatch {
                field: format!("{path}.motion"),
                reason: "static layouts carry no motion".into(),
            });
        }
        objects.push(ObjectSpec {
            shape: class_field::<Shape>(obj, &path, true)?.unwrap(),
            color: class_field::<Color>(obj, &path, true)?.unwrap(),
            size: class_field::<Size>(obj, &path, true)?.unwrap(),
            texture: class_field::<Texture>(obj, &path, true)?.unwrap(),
            motion,
        });
    }
    if kind == SceneKind::Static && duration_seconds.is_some() {
        return Err(SceneError::SchemaMismatch {
            field: "duration_seconds".into(),
            reason: "static layouts have no duration".into(),
        });
    }
    Ok(SceneLayout { kind, duration_seconds, objects })
}

impl<'de> Deserialize<'de> for SceneLayout {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        layout_from_value(&value).map_err(D::Error::custom)
    }
}

impl<'de> Deserialize<'de> for ObjectSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        let wrapper = serde_json::json!({ "kind": "animated", "objects": [value] });
        let mut layout = layout_from_value(&wrapper).map_err(D::Error::custom)?;
        Ok(layout.objects.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn obj(shape: Shape, color: Color, motion: Option<Motion>) -> ObjectSpec {
        ObjectSpec { shape, color, size: Size::Large, texture: Texture::Rubber, motion }
    }

    #[test]
    fn schema_head_counts() {
        let s = feature_schema(Mode::Static);
        assert_eq!(s.head_count(), 4);
        assert_eq!(s.heads[0].classes, ["cube", "sphere", "cylinder", EOS]);
        assert_eq!(s.heads[1].len(), 8);
        let a = feature_schema(Mode::Animated);
        assert_eq!(a.head_count(), 5);
        assert_eq!(a.heads[4].classes, ["spin", "bounce", "shake", "move", "rest"]);
        let f = feature_schema(Mode::Full);
        assert_eq!(f.heads[4].len(), 6);
        assert_eq!(f.heads[4].classes[MOTION_NONE_INDEX], NONE);
        assert_eq!(f.heads[0].classes[SHAPE_EOS_INDEX], EOS);
    }

    #[test]
    fn schema_is_deterministic() {
        assert_eq!(feature_schema(Mode::Full), feature_schema(Mode::Full));
        assert!(matches!(feature_schema_named("video"), Err(SceneError::UnknownMode(_))));
    }

    #[test]
    fn spinning_sphere_is_flagged() {
        let layout = SceneLayout::new_animated(vec![
            obj(Shape::Sphere, Color::Red, Some(Motion::Spin)),
            obj(Shape::Cube, Color::Red, Some(Motion::Spin)),
            obj(Shape::Cylinder, Color::Red, Some(Motion::Rest)),
        ]);
        let v = validate_layout(&layout, &feature_schema(Mode::Animated)).unwrap_err();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("spin excluded for sphere"));
    }

    #[test]
    fn empty_layout_is_below_minimum() {
        let v = validate_layout(&SceneLayout::new_static(vec![]), &feature_schema(Mode::Static)).unwrap_err();
        assert!(v[0].to_string().contains("count below minimum"));
    }

    #[test]
    fn valid_animated_layout() {
        let layout = SceneLayout::new_animated(vec![
            obj(Shape::Cube, Color::Gray, Some(Motion::Spin)),
            obj(Shape::Sphere, Color::Blue, Some(Motion::Bounce)),
            obj(Shape::Cylinder, Color::Cyan, Some(Motion::Shake)),
            obj(Shape::Sphere, Color::Yellow, Some(Motion::Move)),
            obj(Shape::Cube, Color::Brown, Some(Motion::Rest)),
        ]);
        assert_eq!(validate_layout(&layout, &feature_schema(Mode::Animated)), Ok(()));
        assert!(validate_layout(&layout, &feature_schema(Mode::Static)).is_err());
        assert_eq!(validate_layout(&layout, &feature_schema(Mode::Full)), Ok(()));
    }

    #[test]
    fn json_errors_name_the_field() {
        let pink = r#"{"kind":"static","objects":[{"shape":"cube","color":"pink","size":"large","texture":"metal"}]}"#;
        let err = layout_from_json(pink).unwrap_err();
        assert!(err.to_string().contains("unknown class"), "{err}");
        assert!(err.to_string().contains("objects[0].color"), "{err}");
        let missing = r#"{"objects":[]}"#;
        let err = layout_from_json(missing).unwrap_err();
        assert!(err.to_string().contains("missing field `kind`"), "{err}");
        let mismatch = r#"{"kind":"static","objects":[{"shape":"cube","color":"red","size":"large","texture":"metal","motion":"spin"}]}"#;
        assert!(matches!(layout_from_json(mismatch), Err(SceneError::SchemaMismatch { .. })));
        assert!(matches!(layout_from_json("{"), Err(SceneError::Malformed(_))));
    }

    #[test]
    fn json_shape() {
        let layout = SceneLayout::new_animated(vec![obj(Shape::Cube, Color::Red, Some(Motion::Move))]);
        assert_eq!(
            layout_to_json(&layout),
            r#"{"kind":"animated","duration_seconds":3.0,"objects":[{"shape":"cube","color":"red","size":"large","texture":"rubber","motion":"move"}]}"#
        );
    }

    #[test]
    fn encode_decode_indices() {
        let schema = feature_schema(Mode::Full);
        let o = obj(Shape::Cylinder, Color::Purple, None);
        let idx = schema.encode(&o);
        assert_eq!(idx, vec![2, 5, 0, 1, MOTION_NONE_INDEX]);
        assert_eq!(schema.decode(&idx), Some(o));
        assert_eq!(schema.decode(&[SHAPE_EOS_INDEX, 0, 0, 0, 0]), None);
    }
}
