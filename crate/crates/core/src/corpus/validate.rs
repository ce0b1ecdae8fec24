use std::fmt;

use serde::Serialize;

use super::{ColorHistogram, FaceSet, ModalityBundle, HISTOGRAM_BINS, IMAGE_DIM, TITLE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    TitleDim,
    ImageDim,
    NoKeyframes,
    LengthMismatch,
    Nonfinite,
    FaceDim,
    HistogramBins,
    HistogramNegative,
    HistogramTotal,
    HistogramSum,
    /// The bundle could not be read at all (missing file, bad header, ...).
    Unreadable,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TitleDim => "TITLE_DIM",
            Self::ImageDim => "IMAGE_DIM",
            Self::NoKeyframes => "NO_KEYFRAMES",
            Self::LengthMismatch => "LENGTH_MISMATCH",
            Self::Nonfinite => "NONFINITE",
            Self::FaceDim => "FACE_DIM",
            Self::HistogramBins => "HISTOGRAM_BINS",
            Self::HistogramNegative => "HISTOGRAM_NEGATIVE",
            Self::HistogramTotal => "HISTOGRAM_TOTAL",
            Self::HistogramSum => "HISTOGRAM_SUM",
            Self::Unreadable => "UNREADABLE",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Field path, e.g. `keyframe_histograms[2]`.
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub video_id: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// Report for a bundle that failed to load.
    pub fn unreadable(video_id: &str, error: &crate::Error) -> Self {
        let mut r = ValidationReport {
            video_id: video_id.to_string(),
            violations: Vec::new(),
        };
        r.push(ViolationCode::Unreadable, "bundle_dir", error.to_string());
        r
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: ViolationCode, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            field: field.into(),
            message: message.into(),
        });
    }
}

fn check_vector(report: &mut ValidationReport, field: &str, v: &[f64], dim: usize, code: ViolationCode) {
    if v.len() != dim {
        report.push(code, field, format!("length {} != {dim}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        report.push(ViolationCode::Nonfinite, field, "non-finite value");
    }
}

fn check_faces(report: &mut ValidationReport, field: &str, faces: &FaceSet, shared_dim: &mut Option<usize>) {
    let mut bad_dim = false;
    let mut nonfinite = false;
    for f in &faces.faces {
        bad_dim |= f.len() != faces.dim;
        nonfinite |= f.iter().any(|x| !x.is_finite());
    }
    if bad_dim {
        report.push(ViolationCode::FaceDim, field, format!("embedding length differs from declared {}", faces.dim));
    } else if faces.count() > 0 {
        match shared_dim {
            Some(d) if *d != faces.dim => report.push(
                ViolationCode::FaceDim,
                field,
                format!("face dimension {} differs from {} used elsewhere in the bundle", faces.dim, d),
            ),
            Some(_) => {}
            None => *shared_dim = Some(faces.dim),
        }
    }
    if nonfinite {
        report.push(ViolationCode::Nonfinite, field, "non-finite face embedding value");
    }
}

fn check_histogram(report: &mut ValidationReport, field: &str, h: &ColorHistogram) {
    if h.bins.len() != HISTOGRAM_BINS {
        report.push(ViolationCode::HistogramBins, field, format!("{} bins != {HISTOGRAM_BINS}", h.bins.len()));
    }
    if h.bins.iter().any(|x| !x.is_finite()) {
        report.push(ViolationCode::Nonfinite, field, "non-finite bin");
        return;
    }
    if h.bins.iter().any(|&x| x < 0.0) {
        report.push(ViolationCode::HistogramNegative, field, "negative bin");
    }
    if h.total_pixels == 0 {
        report.push(ViolationCode::HistogramTotal, field, "total_pixels must be positive");
        return;
    }
    let sum: f64 = h.bins.iter().sum();
    let total = h.total_pixels as f64;
    if ((sum - total) / total).abs() > 1e-6 {
        report.push(ViolationCode::HistogramSum, field, format!("bins sum to {sum}, total_pixels is {total}"));
    }
}

/// Check every bundle invariant, listing all violations found. Deterministic:
/// fields are visited in declaration order.
pub fn validate_bundle(bundle: &ModalityBundle) -> ValidationReport {
    let mut r = ValidationReport {
        video_id: bundle.video_id.clone(),
        violations: Vec::new(),
    };
    check_vector(&mut r, "title_embedding", &bundle.title_embedding, TITLE_DIM, ViolationCode::TitleDim);
    check_vector(&mut r, "thumbnail_embedding", &bundle.thumbnail_embedding, IMAGE_DIM, ViolationCode::ImageDim);

    let k = bundle.keyframe_embeddings.len();
    if k == 0 {
        r.push(ViolationCode::NoKeyframes, "keyframe_embeddings", "at least one keyframe is required");
    }
    for (name, len) in [
        ("keyframe_faces", bundle.keyframe_faces.len()),
        ("keyframe_objects", bundle.keyframe_objects.len()),
        ("keyframe_histograms", bundle.keyframe_histograms.len()),
    ] {
        if len != k {
            r.push(ViolationCode::LengthMismatch, name, format!("{len} entries for {k} keyframes"));
        }
    }
    for (i, e) in bundle.keyframe_embeddings.iter().enumerate() {
        check_vector(&mut r, &format!("keyframe_embeddings[{i}]"), e, IMAGE_DIM, ViolationCode::ImageDim);
    }

    let mut face_dim = None;
    check_faces(&mut r, "thumbnail_faces", &bundle.thumbnail_faces, &mut face_dim);
    for (i, f) in bundle.keyframe_faces.iter().enumerate() {
        check_faces(&mut r, &format!("keyframe_faces[{i}]"), f, &mut face_dim);
    }

    check_histogram(&mut r, "thumbnail_histogram", &bundle.thumbnail_histogram);
    for (i, h) in bundle.keyframe_histograms.iter().enumerate() {
        check_histogram(&mut r, &format!("keyframe_histograms[{i}]"), h);
    }
    r
}
