use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Categories, ManifestEntry};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct RawEntry {
    video_id: String,
    title: String,
    label: serde_json::Value,
    #[serde(default)]
    categories: Categories,
    bundle_dir: String,
}

#[derive(Serialize)]
struct OutEntry<'a> {
    video_id: &'a str,
    title: &'a str,
    label: u8,
    categories: Categories,
    bundle_dir: String,
}

/// Read a JSON Lines manifest. Relative `bundle_dir`s are resolved against
/// the manifest's parent directory. Blank lines are skipped.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEntry = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let label = match raw.label.as_u64() {
            Some(0) => 0,
            Some(1) => 1,
            _ => {
                return Err(Error::InvalidLabel {
                    line: line_no,
                    message: format!("expected 0 or 1, got {}", raw.label),
                })
            }
        };
        if label == 0 && raw.categories.any() {
            return Err(Error::InvalidEntry {
                line: line_no,
                message: format!(
                    "video `{}` is labelled real but has clickbait categories set",
                    raw.video_id
                ),
            });
        }
        if !seen.insert(raw.video_id.clone()) {
            return Err(Error::DuplicateId {
                video_id: raw.video_id,
                line: line_no,
            });
        }
        let dir = Path::new(&raw.bundle_dir);
        let bundle_dir = if dir.is_absolute() {
            dir.to_path_buf()
        } else {
            base.join(dir)
        };
        entries.push(ManifestEntry {
            video_id: raw.video_id,
            title: raw.title,
            label,
            categories: raw.categories,
            bundle_dir,
        });
    }
    Ok(entries)
}

/// Write entries as JSON Lines. `bundle_dir`s under the manifest's directory
/// are stored relative to it.
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut out = Vec::new();
    for e in entries {
        let dir = e
            .bundle_dir
            .strip_prefix(base)
            .unwrap_or(&e.bundle_dir)
            .to_string_lossy()
            .into_owned();
        let rec = OutEntry {
            video_id: &e.video_id,
            title: &e.title,
            label: e.label,
            categories: e.categories,
            bundle_dir: dir,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> std::path::PathBuf {
        let p = dir.join("manifest.jsonl");
        fs::write(&p, body).unwrap();
        p
    }

    const A: &str = r#"{"video_id":"a","title":"OMG!!","label":1,"categories":{"misleading":true,"spam":false,"false_promise":false,"exaggerated":true,"curiosity_gap":false},"bundle_dir":"a"}"#;
    const B: &str = r#"{"video_id":"b","title":"Cooking rice","label":0,"categories":{"misleading":false,"spam":false,"false_promise":false,"exaggerated":false,"curiosity_gap":false},"bundle_dir":"b"}"#;

    #[test]
    fn parses_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), &format!("{A}\n{B}\n"));
        let entries = load_manifest(&p).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].video_id, "a");
        assert_eq!(entries[0].label, 1);
        assert!(entries[0].categories.exaggerated);
        assert_eq!(entries[1].label, 0);
        assert_eq!(entries[1].bundle_dir, dir.path().join("b"));
    }

    #[test]
    fn duplicate_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), &format!("{A}\n{A}\n"));
        match load_manifest(&p) {
            Err(Error::DuplicateId { video_id, line }) => {
                assert_eq!(video_id, "a");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn real_with_category_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let bad = B.replace(r#""misleading":false"#, r#""misleading":true"#);
        let p = write(dir.path(), &bad);
        assert!(matches!(load_manifest(&p), Err(Error::InvalidEntry { line: 1, .. })));
    }

    #[test]
    fn label_out_of_range_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), &B.replace(r#""label":0"#, r#""label":2"#));
        assert!(matches!(load_manifest(&p), Err(Error::InvalidLabel { line: 1, .. })));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), &format!("{A}\n\n{{not json\n"));
        assert!(matches!(load_manifest(&p), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), &format!("{A}\n{B}\n"));
        let entries = load_manifest(&p).unwrap();
        let q = dir.path().join("copy.jsonl");
        write_manifest(&q, &entries).unwrap();
        assert_eq!(load_manifest(&q).unwrap(), entries);
    }
}
