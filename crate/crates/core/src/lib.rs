//! Multimodal clickbait screening for short videos.
//!
//! The pipeline reads per-video modality bundles, derives title, text and
//! visual disparity features, learns a graph readout from the keyframe star
//! graph, and classifies with a stacked ensemble.

pub mod config;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod graph_net;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod text_disparity;
pub mod title;
pub mod visual;

pub use error::{Error, Result};
