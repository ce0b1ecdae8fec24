use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::emb::{self, EmbeddingKind};
use super::validate::{validate_bundle, ViolationCode};
use super::{ColorHistogram, FaceSet, ManifestEntry, ModalityBundle, ObjectSet, IMAGE_DIM, TITLE_DIM};
use crate::error::{Error, Result};

/// Image slot inside a bundle: the thumbnail or the i-th keyframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageName {
    Thumbnail,
    Keyframe(usize),
}

impl ImageName {
    pub fn stem(self) -> String {
        match self {
            ImageName::Thumbnail => "thumbnail".to_string(),
            ImageName::Keyframe(i) => format!("kf{i:03}"),
        }
    }

    pub fn faces_file(self) -> String {
        format!("faces_{}.emb", self.stem())
    }

    pub fn detections_file(self) -> String {
        format!("detections_{}.json", self.stem())
    }
}

#[derive(Serialize, Deserialize)]
struct Detections {
    objects: Vec<String>,
    histogram: ColorHistogram,
}

struct Reader<'a> {
    dir: &'a Path,
    video_id: &'a str,
}

impl Reader<'_> {
    fn path(&self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact {
                video_id: self.video_id.to_string(),
                artifact: name.to_string(),
            })
        }
    }

    fn embeddings(&self, name: &str, kind: EmbeddingKind, dim: Option<usize>) -> Result<emb::EmbeddingBlock> {
        let path = self.path(name)?;
        let block = emb::read(&path)?;
        if block.kind != kind {
            return Err(Error::Format {
                path,
                message: format!("kind {:?}, expected {:?}", block.kind, kind),
            });
        }
        if let Some(dim) = dim {
            if block.dim != dim {
                return Err(Error::DimensionMismatch {
                    what: format!("{}/{name}", self.video_id),
                    expected: dim,
                    found: block.dim,
                });
            }
        }
        Ok(block)
    }

    fn single(&self, name: &str, kind: EmbeddingKind, dim: usize) -> Result<Vec<f64>> {
        let mut block = self.embeddings(name, kind, Some(dim))?;
        if block.rows.len() != 1 {
            return Err(Error::LengthMismatch {
                what: format!("{}/{name} vector count", self.video_id),
                left: block.rows.len(),
                right: 1,
            });
        }
        Ok(block.rows.pop().unwrap())
    }

    fn faces(&self, image: ImageName) -> Result<FaceSet> {
        let block = self.embeddings(&image.faces_file(), EmbeddingKind::Faces, None)?;
        Ok(FaceSet {
            dim: block.dim,
            faces: block.rows,
        })
    }

    fn detections(&self, image: ImageName) -> Result<Detections> {
        let name = image.detections_file();
        let path = self.path(&name)?;
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }

    fn text(&self, name: &str) -> Result<String> {
        let path = self.path(name)?;
        fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
    }

    /// Number of files named `{prefix}kfNNN{suffix}` in the directory.
    fn count_keyframe_files(&self, prefix: &str, suffix: &str) -> Result<usize> {
        let rd = fs::read_dir(self.dir).map_err(|e| Error::io(self.dir, e))?;
        let mut n = 0;
        for ent in rd {
            let ent = ent.map_err(|e| Error::io(self.dir, e))?;
            let name = ent.file_name();
            let name = name.to_string_lossy();
            if let Some(mid) = name.strip_prefix(prefix).and_then(|s| s.strip_suffix(suffix)) {
                if mid.len() == 5 && mid.starts_with("kf") && mid[2..].bytes().all(|b| b.is_ascii_digit()) {
                    n += 1;
                }
            }
        }
        Ok(n)
    }
}

/// Read a bundle from disk without checking value-level invariants
/// (finiteness, histogram sums). Structural problems (missing files, wrong
/// declared dimensions, inconsistent keyframe counts) are still errors.
pub fn read_bundle(entry: &ManifestEntry) -> Result<ModalityBundle> {
    if !entry.bundle_dir.is_dir() {
        return Err(Error::MissingArtifact {
            video_id: entry.video_id.clone(),
            artifact: entry.bundle_dir.display().to_string(),
        });
    }
    let r = Reader {
        dir: &entry.bundle_dir,
        video_id: &entry.video_id,
    };
    let title_embedding = r.single("title.emb", EmbeddingKind::Title, TITLE_DIM)?;
    let thumbnail_embedding = r.single("thumbnail.emb", EmbeddingKind::Thumbnail, IMAGE_DIM)?;
    let keyframe_embeddings = r.embeddings("keyframes.emb", EmbeddingKind::Keyframes, Some(IMAGE_DIM))?.rows;
    let k = keyframe_embeddings.len();

    for (prefix, suffix, what) in [
        ("detections_", ".json", "keyframe detections"),
        ("faces_", ".emb", "keyframe face files"),
    ] {
        let found = r.count_keyframe_files(prefix, suffix)?;
        if found != k {
            return Err(Error::LengthMismatch {
                what: format!("{}: keyframe embeddings vs {what}", entry.video_id),
                left: k,
                right: found,
            });
        }
    }

    let thumb_det = r.detections(ImageName::Thumbnail)?;
    let mut keyframe_faces = Vec::with_capacity(k);
    let mut keyframe_objects = Vec::with_capacity(k);
    let mut keyframe_histograms = Vec::with_capacity(k);
    for i in 0..k {
        let img = ImageName::Keyframe(i);
        keyframe_faces.push(r.faces(img)?);
        let det = r.detections(img)?;
        keyframe_objects.push(ObjectSet { labels: det.objects });
        keyframe_histograms.push(det.histogram);
    }

    Ok(ModalityBundle {
        video_id: entry.video_id.clone(),
        title: entry.title.clone(),
        title_embedding,
        thumbnail_embedding,
        keyframe_embeddings,
        thumbnail_faces: r.faces(ImageName::Thumbnail)?,
        keyframe_faces,
        thumbnail_objects: ObjectSet {
            labels: thumb_det.objects,
        },
        keyframe_objects,
        thumbnail_histogram: thumb_det.histogram,
        keyframe_histograms,
        caption: r.text("caption.txt")?,
        transcript: r.text("transcript.txt")?,
    })
}

/// Read and fully validate a bundle; the first violation becomes the error.
pub fn load_bundle(entry: &ManifestEntry) -> Result<ModalityBundle> {
    let bundle = read_bundle(entry)?;
    let report = validate_bundle(&bundle);
    if let Some(v) = report.violations.first() {
        let what = format!("{}/{}", bundle.video_id, v.field);
        return Err(match v.code {
            ViolationCode::Nonfinite => Error::NonFinite { what },
            _ => Error::InvalidBundle(format!("{what}: {} ({})", v.message, v.code)),
        });
    }
    Ok(bundle)
}

fn write_json(path: &Path, det: &Detections) -> Result<()> {
    let text = serde_json::to_string(det)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write every artifact of `bundle` into `dir` (created if needed).
pub fn write_bundle(dir: &Path, bundle: &ModalityBundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    emb::write(&dir.join("title.emb"), EmbeddingKind::Title, TITLE_DIM, std::slice::from_ref(&bundle.title_embedding))?;
    emb::write(
        &dir.join("thumbnail.emb"),
        EmbeddingKind::Thumbnail,
        IMAGE_DIM,
        std::slice::from_ref(&bundle.thumbnail_embedding),
    )?;
    emb::write(&dir.join("keyframes.emb"), EmbeddingKind::Keyframes, IMAGE_DIM, &bundle.keyframe_embeddings)?;

    let images = std::iter::once((
        ImageName::Thumbnail,
        &bundle.thumbnail_faces,
        &bundle.thumbnail_objects,
        &bundle.thumbnail_histogram,
    ))
    .chain(
        bundle
            .keyframe_faces
            .iter()
            .zip(&bundle.keyframe_objects)
            .zip(&bundle.keyframe_histograms)
            .enumerate()
            .map(|(i, ((f, o), h))| (ImageName::Keyframe(i), f, o, h)),
    );
    for (img, faces, objects, histogram) in images {
        emb::write(&dir.join(img.faces_file()), EmbeddingKind::Faces, faces.dim, &faces.faces)?;
        write_json(
            &dir.join(img.detections_file()),
            &Detections {
                objects: objects.labels.clone(),
                histogram: histogram.clone(),
            },
        )?;
    }
    for (name, text) in [("caption.txt", &bundle.caption), ("transcript.txt", &bundle.transcript)] {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate::tests::sample_bundle;
    use crate::corpus::Categories;

    fn entry_for(dir: &Path, b: &ModalityBundle) -> ManifestEntry {
        ManifestEntry {
            video_id: b.video_id.clone(),
            title: b.title.clone(),
            label: 0,
            categories: Categories::default(),
            bundle_dir: dir.to_path_buf(),
        }
    }

    /// Rounds every embedding value through f32 like the on-disk format.
    fn as_stored(mut b: ModalityBundle) -> ModalityBundle {
        let narrow = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x = *x as f32 as f64);
        narrow(&mut b.title_embedding);
        narrow(&mut b.thumbnail_embedding);
        b.keyframe_embeddings.iter_mut().for_each(narrow);
        b.thumbnail_faces.faces.iter_mut().for_each(narrow);
        b.keyframe_faces.iter_mut().flat_map(|f| f.faces.iter_mut()).for_each(narrow);
        b
    }

    #[test]
    fn complete_bundle_loads() {
        let tmp = tempfile::tempdir().unwrap();
        let b = sample_bundle(3);
        write_bundle(tmp.path(), &b).unwrap();
        let loaded = load_bundle(&entry_for(tmp.path(), &b)).unwrap();
        assert_eq!(loaded.title_embedding.len(), TITLE_DIM);
        assert_eq!(loaded.thumbnail_embedding.len(), IMAGE_DIM);
        assert_eq!(loaded.keyframe_count(), 3);
        assert_eq!(loaded, as_stored(b));
    }

    #[test]
    fn reserialize_is_bit_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let b = sample_bundle(2);
        write_bundle(tmp.path(), &b).unwrap();
        let e = entry_for(tmp.path(), &b);
        let first = load_bundle(&e).unwrap();
        let tmp2 = tempfile::tempdir().unwrap();
        write_bundle(tmp2.path(), &first).unwrap();
        let second = load_bundle(&entry_for(tmp2.path(), &b)).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&first.thumbnail_embedding), bits(&second.thumbnail_embedding));
        assert_eq!(first, second);
        for name in ["keyframes.emb", "detections_kf001.json", "faces_thumbnail.emb"] {
            assert_eq!(fs::read(tmp.path().join(name)).unwrap(), fs::read(tmp2.path().join(name)).unwrap());
        }
    }

    #[test]
    fn wrong_declared_dim_is_dimension_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        let b = sample_bundle(1);
        write_bundle(tmp.path(), &b).unwrap();
        emb::write(&tmp.path().join("thumbnail.emb"), EmbeddingKind::Thumbnail, 512, &[vec![0.0; 512]]).unwrap();
        match load_bundle(&entry_for(tmp.path(), &b)) {
            Err(Error::DimensionMismatch { expected: 2048, found: 512, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn keyframe_histogram_count_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        let b = sample_bundle(3);
        write_bundle(tmp.path(), &b).unwrap();
        fs::remove_file(tmp.path().join("detections_kf002.json")).unwrap();
        assert!(matches!(
            load_bundle(&entry_for(tmp.path(), &b)),
            Err(Error::LengthMismatch { left: 3, right: 2, .. })
        ));
    }

    #[test]
    fn missing_caption_names_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let b = sample_bundle(1);
        write_bundle(tmp.path(), &b).unwrap();
        fs::remove_file(tmp.path().join("caption.txt")).unwrap();
        match load_bundle(&entry_for(tmp.path(), &b)) {
            Err(Error::MissingArtifact { artifact, .. }) => assert_eq!(artifact, "caption.txt"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonfinite_value_rejected_on_load() {
        let tmp = tempfile::tempdir().unwrap();
        let mut b = sample_bundle(1);
        b.keyframe_embeddings[0][7] = f64::NAN;
        write_bundle(tmp.path(), &b).unwrap();
        assert!(matches!(load_bundle(&entry_for(tmp.path(), &b)), Err(Error::NonFinite { .. })));
        assert!(read_bundle(&entry_for(tmp.path(), &b)).is_ok());
    }
}
