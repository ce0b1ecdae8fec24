use std::fs;
use std::path::{Path, PathBuf};

use baitscan::config::PipelineConfig;
use baitscan::corpus::{load_bundle, load_manifest, validate_bundle};
use baitscan::pipeline::{fit_model, predict_model, prepare_corpus, ClickbaitModel, PipelineSettings};
use baitscan::synth::{synth_corpus, SynthSpec};

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn small(seed: u64) -> SynthSpec {
    SynthSpec {
        n_videos: 60,
        seed,
        ..SynthSpec::default()
    }
}

#[test]
fn balanced_labels_and_valid_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth_corpus(&SynthSpec::default(), dir.path()).unwrap();
    let entries = load_manifest(&out.manifest).unwrap();
    assert_eq!(entries.len(), 400);
    assert_eq!(entries.iter().filter(|e| e.label == 1).count(), 200);
    for e in &entries {
        let bundle = load_bundle(e).unwrap();
        let report = validate_bundle(&bundle);
        assert!(report.is_valid(), "{}: {:?}", e.video_id, report);
        assert_eq!(e.label == 1, e.categories.any(), "{}", e.video_id);
    }
}

#[test]
fn rerun_is_bit_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth_corpus(&small(3), a.path()).unwrap();
    synth_corpus(&small(3), b.path()).unwrap();
    let names = files(a.path());
    assert_eq!(names, files(b.path()));
    for n in &names {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{}", n.display());
    }
    let c = tempfile::tempdir().unwrap();
    synth_corpus(&small(4), c.path()).unwrap();
    assert_ne!(fs::read(a.path().join("manifest.jsonl")).unwrap(), fs::read(c.path().join("manifest.jsonl")).unwrap());
}

#[test]
fn rejects_bad_specs() {
    let dir = tempfile::tempdir().unwrap();
    for spec in [
        SynthSpec { n_videos: 5, ..SynthSpec::default() },
        SynthSpec { clickbait_fraction: 1.0, ..SynthSpec::default() },
        SynthSpec { keyframes_min: 4, keyframes_max: 2, ..SynthSpec::default() },
    ] {
        assert!(synth_corpus(&spec, dir.path()).is_err());
    }
}

#[test]
fn model_json_round_trip_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth_corpus(&small(9), dir.path()).unwrap();
    let cfg = PipelineConfig::load(&out.config).unwrap();
    let entries = load_manifest(cfg.manifest_path().unwrap()).unwrap();
    let mut settings = PipelineSettings::default();
    settings.gcn.epochs = 10;
    settings.stacking.select_k = Some(100);
    let corpus = prepare_corpus(&entries, &cfg.load_resources().unwrap(), &settings.features).unwrap();
    let rows: Vec<usize> = (0..corpus.len()).collect();
    let model = fit_model(&corpus, &rows, &settings, 9).unwrap();
    let text = serde_json::to_string(&model).unwrap();
    let back: ClickbaitModel = serde_json::from_str(&text).unwrap();
    assert_eq!(back, model);
    let (a, b) = (predict_model(&model, &corpus, &rows).unwrap(), predict_model(&back, &corpus, &rows).unwrap());
    assert_eq!(a.probability, b.probability);
    assert!(a.probability.iter().all(|p| (0.0..=1.0).contains(p)));
}
