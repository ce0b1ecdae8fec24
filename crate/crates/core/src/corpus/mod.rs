//! On-disk data model: the video manifest and per-video modality bundles.
//!
//! A bundle directory holds everything the pipeline needs about one video at
//! upload time:
//!
//! | file | contents |
//! |------|----------|
//! | `title.emb` | 1 × 768 title embedding |
//! | `thumbnail.emb` | 1 × 2048 thumbnail embedding |
//! | `keyframes.emb` | K × 2048 keyframe embeddings |
//! | `faces_thumbnail.emb`, `faces_kf000.emb`, … | face embeddings per image |
//! | `detections_thumbnail.json`, `detections_kf000.json`, … | objects + colour histogram per image |
//! | `caption.txt`, `transcript.txt` | English thumbnail caption and audio transcript |
//!
//! The title itself comes from the manifest.

mod bundle;
pub mod emb;
mod manifest;
pub(crate) mod validate;

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub use bundle::{load_bundle, read_bundle, write_bundle, ImageName};
pub use manifest::{load_manifest, write_manifest};
pub use validate::{validate_bundle, ValidationReport, Violation, ViolationCode};

pub const TITLE_DIM: usize = 768;
pub const IMAGE_DIM: usize = 2048;
pub const HISTOGRAM_BINS: usize = 512;

/// The five clickbait categories annotated per video.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Categories {
    #[serde(default)]
    pub misleading: bool,
    #[serde(default)]
    pub spam: bool,
    #[serde(default)]
    pub false_promise: bool,
    #[serde(default)]
    pub exaggerated: bool,
    #[serde(default)]
    pub curiosity_gap: bool,
}

impl Categories {
    pub const NAMES: [&'static str; 5] = [
        "misleading",
        "spam",
        "false_promise",
        "exaggerated",
        "curiosity_gap",
    ];

    pub fn as_array(&self) -> [bool; 5] {
        [
            self.misleading,
            self.spam,
            self.false_promise,
            self.exaggerated,
            self.curiosity_gap,
        ]
    }

    pub fn from_array(flags: [bool; 5]) -> Self {
        Categories {
            misleading: flags[0],
            spam: flags[1],
            false_promise: flags[2],
            exaggerated: flags[3],
            curiosity_gap: flags[4],
        }
    }

    pub fn any(&self) -> bool {
        self.as_array().iter().any(|&f| f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub video_id: String,
    pub title: String,
    /// 1 = clickbait, 0 = real.
    pub label: u8,
    pub categories: Categories,
    /// Resolved against the manifest's directory when relative.
    pub bundle_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceSet {
    /// Declared embedding dimension (from the file header).
    pub dim: usize,
    pub faces: Vec<Vec<f64>>,
}

impl FaceSet {
    pub fn empty(dim: usize) -> Self {
        FaceSet {
            dim,
            faces: Vec::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.faces.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSet {
    pub labels: Vec<String>,
}

impl ObjectSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        ObjectSet {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }
}

/// 8×8×8 RGB histogram of raw pixel counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorHistogram {
    pub bins: Vec<f64>,
    pub total_pixels: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalityBundle {
    pub video_id: String,
    pub title: String,
    pub title_embedding: Vec<f64>,
    pub thumbnail_embedding: Vec<f64>,
    pub keyframe_embeddings: Vec<Vec<f64>>,
    pub thumbnail_faces: FaceSet,
    pub keyframe_faces: Vec<FaceSet>,
    pub thumbnail_objects: ObjectSet,
    pub keyframe_objects: Vec<ObjectSet>,
    pub thumbnail_histogram: ColorHistogram,
    pub keyframe_histograms: Vec<ColorHistogram>,
    pub caption: String,
    pub transcript: String,
}

impl ModalityBundle {
    pub fn keyframe_count(&self) -> usize {
        self.keyframe_embeddings.len()
    }
}
