//! Core of a two-stage text-to-scene pipeline.
//!
//! A free-form scene description is parsed by an attention-based multi-head
//! decoder into an abstract layout (one record of categorical features per
//! object), and the layout is turned into pixels by a small ray tracer.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, training
//! orchestration and the command line live in the `textscene` crate.
#![no_std]

extern crate alloc;

pub mod corpus;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod render;
pub mod rng;
pub mod scene;
pub mod tensor;
pub mod text;

pub use scene::{FeatureSchema, Mode, ObjectSpec, SceneKind, SceneLayout};
