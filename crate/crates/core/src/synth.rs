//! Seeded synthetic corpus with label-dependent signal in every feature
//! group. With every strength at 0 the labels are independent of the data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    write_bundle, write_manifest, Categories, ColorHistogram, FaceSet, ManifestEntry, ModalityBundle, ObjectSet,
    HISTOGRAM_BINS, IMAGE_DIM, TITLE_DIM,
};
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::text_disparity::WordEmbeddingTable;
use crate::title::BaitLexicons;

pub const FACE_DIM: usize = 32;
pub const WORD_DIM: usize = 25;
const HISTOGRAM_PIXELS: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalStrengths {
    /// Title-embedding cluster shift.
    pub bert: f64,
    /// Thumbnail-embedding cluster shift.
    pub resnet: f64,
    /// Thumbnail/keyframe mismatch (faces, objects, histograms, embeddings).
    pub graph: f64,
    /// Caption and transcript drift away from the title.
    pub text: f64,
    /// Baity phrasing: lexicon phrases, caps, numbers, punctuation, emoji.
    pub title: f64,
}

impl SignalStrengths {
    pub fn uniform(s: f64) -> Self {
        SignalStrengths {
            bert: s,
            resnet: s,
            graph: s,
            text: s,
            title: s,
        }
    }
}

impl Default for SignalStrengths {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_videos: usize,
    pub clickbait_fraction: f64,
    pub keyframes_min: usize,
    pub keyframes_max: usize,
    pub signal: SignalStrengths,
    /// Scale of the per-coordinate embedding noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_videos: 400,
            clickbait_fraction: 0.5,
            keyframes_min: 3,
            keyframes_max: 6,
            signal: SignalStrengths::default(),
            noise: 1.0,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_videos < 20 {
            return Err(Error::Config(format!("synth needs n ≥ 20, got {}", self.n_videos)));
        }
        if !(self.clickbait_fraction > 0.0 && self.clickbait_fraction < 1.0) {
            return Err(Error::Config(format!(
                "clickbait fraction {} outside (0, 1)",
                self.clickbait_fraction
            )));
        }
        if self.keyframes_min == 0 || self.keyframes_min > self.keyframes_max {
            return Err(Error::Config("keyframe range must satisfy 1 ≤ min ≤ max".into()));
        }
        let s = self.signal;
        for v in [s.bert, s.resnet, s.graph, s.text, s.title, self.noise] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config("signal strengths and noise must be finite and ≥ 0".into()));
            }
        }
        Ok(())
    }

    pub fn n_clickbait(&self) -> usize {
        (self.n_videos as f64 * self.clickbait_fraction).round() as usize
    }
}

const TOPICS: [(&str, [&str; 10]); 8] = [
    ("cooking", ["paneer", "recipe", "masala", "kitchen", "curry", "biryani", "spicy", "dal", "roti", "chutney"]),
    ("cricket", ["cricket", "match", "wicket", "batting", "bowler", "stadium", "innings", "century", "catch", "umpire"]),
    ("music", ["song", "guitar", "singer", "melody", "concert", "album", "lyrics", "studio", "acoustic", "cover"]),
    ("travel", ["travel", "mountain", "beach", "trek", "hotel", "village", "journey", "temple", "road", "river"]),
    ("tech", ["phone", "laptop", "unboxing", "camera", "battery", "review", "android", "gadget", "screen", "charger"]),
    ("fitness", ["workout", "yoga", "gym", "diet", "running", "muscle", "stretch", "cardio", "protein", "weights"]),
    ("movies", ["film", "scene", "actor", "director", "trailer", "story", "cinema", "climax", "dialogue", "premiere"]),
    ("study", ["exam", "lecture", "notes", "maths", "physics", "chapter", "lesson", "school", "teacher", "syllabus"]),
];

const FILLER: [&str; 8] = ["the", "with", "for", "and", "in", "at", "of", "my"];
const OBJECTS: [&str; 16] = [
    "person", "car", "dog", "cat", "chair", "cup", "bottle", "laptop", "phone", "tv", "book", "bicycle", "bowl",
    "clock", "plant", "bench",
];
const CAPS_BAIT: [&str; 6] = ["SHOCKING", "OMG", "WOW", "EXPOSED", "UNBELIEVABLE", "VIRAL"];
const EMOJI: [&str; 4] = ["😱", "🔥", "😍", "💔"];
const POSITIVE: [&str; 4] = ["amazing", "best", "beautiful", "awesome"];
const NEGATIVE: [&str; 4] = ["disaster", "worst", "cheated", "dead"];

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Round through f32 so values survive the on-disk format unchanged.
fn f32_exact(v: f64) -> f64 {
    v as f32 as f64
}

fn pick<'a>(r: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs[r.gen_range(0..xs.len())]
}

fn phrase(r: &mut ChaCha8Rng, list: &crate::title::PhraseList) -> String {
    let p = list
        .phrases()
        .iter()
        .filter(|p| !p.iter().any(|t| t.starts_with('<')))
        .collect::<Vec<_>>();
    p[r.gen_range(0..p.len())].join(" ")
}

fn title_case(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Generated {
    bundle: ModalityBundle,
    categories: Categories,
}

fn make_title(r: &mut ChaCha8Rng, topic: usize, baity: bool, lex: &BaitLexicons) -> (String, Vec<String>) {
    let words = &TOPICS[topic].1;
    let n = r.gen_range(3..=5);
    let content: Vec<String> = (0..n).map(|_| pick(r, words).to_string()).collect();
    let mut parts: Vec<String> = Vec::new();
    for (i, w) in content.iter().enumerate() {
        if i > 0 && r.gen_bool(0.3) {
            parts.push(pick(r, &FILLER).to_string());
        }
        parts.push(title_case(w));
    }
    // sentiment words appear in both styles; baity titles lean emotional
    let emo = if baity { 0.6 } else { 0.25 };
    if r.gen_bool(emo) {
        let w = if r.gen_bool(0.5) { pick(r, &POSITIVE) } else { pick(r, &NEGATIVE) };
        parts.insert(0, title_case(w));
    }
    if baity {
        let before = parts.len();
        if r.gen_bool(0.45) {
            parts.insert(0, pick(r, &CAPS_BAIT).to_string());
        }
        if r.gen_bool(0.35) {
            let n = r.gen_range(3..=12);
            parts.insert(0, format!("{n} reasons why"));
        }
        if r.gen_bool(0.4) {
            let p = title_case(&phrase(r, &lex.celebrities));
            parts.push(p);
        }
        if r.gen_bool(0.3) {
            let p = phrase(r, &lex.slang);
            parts.insert(0, p);
        }
        for (prob, list) in [(0.3, &lex.bollywood), (0.2, &lex.porn), (0.4, &lex.generic)] {
            if r.gen_bool(prob) {
                let p = phrase(r, list);
                parts.push(p);
            }
        }
        if parts.len() == before {
            parts.push(phrase(r, &lex.generic));
        }
        let mut t = parts.join(" ");
        if r.gen_bool(0.4) {
            t.push_str(["!!", "!!!", "!"][r.gen_range(0..3)]);
        }
        if r.gen_bool(0.3) {
            t.push('?');
        }
        if r.gen_bool(0.35) {
            t.push(' ');
            t.push_str(pick(r, &EMOJI));
        }
        (t, content)
    } else {
        if r.gen_bool(0.15) {
            parts.push(format!("part {}", r.gen_range(1..=4)));
        }
        if r.gen_bool(0.1) {
            parts.push("?".into());
        }
        (parts.join(" "), content)
    }
}

fn make_text(r: &mut ChaCha8Rng, topic: usize, title_words: &[String], overlap: f64, len: usize) -> String {
    let words = &TOPICS[topic].1;
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        if i % 3 == 2 {
            out.push(pick(r, &FILLER).to_string());
        } else if !title_words.is_empty() && r.gen_bool(overlap) {
            out.push(title_words[r.gen_range(0..title_words.len())].clone());
        } else {
            out.push(pick(r, words).to_string());
        }
    }
    out.join(" ")
}

fn unit_vector(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| normal(r)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| f32_exact(x / n)).collect()
}

fn histogram(r: &mut ChaCha8Rng, peak: f64) -> ColorHistogram {
    let w: Vec<f64> = (0..HISTOGRAM_BINS).map(|_| (peak * normal(r)).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut bins: Vec<f64> = w.iter().map(|x| (x / total * HISTOGRAM_PIXELS as f64).floor()).collect();
    let assigned: f64 = bins.iter().sum();
    let mut rest = HISTOGRAM_PIXELS - assigned as u64;
    let mut i = 0;
    while rest > 0 {
        bins[i % HISTOGRAM_BINS] += 1.0;
        rest -= 1;
        i += 1;
    }
    ColorHistogram {
        bins,
        total_pixels: HISTOGRAM_PIXELS,
    }
}

fn generate_video(spec: &SynthSpec, index: usize, label: u8, lex: &BaitLexicons, directions: &Directions) -> Generated {
    let mut r = rng::stream(spec.seed, &[tag::SYNTH, 1, index as u64]);
    let s = spec.signal;
    let bait = label == 1;
    let topic = r.gen_range(0..TOPICS.len());

    let baity_style = r.gen_bool(if bait { (0.15 + 0.6 * s.title).min(0.95) } else { 0.15 });
    let (title, title_words) = make_title(&mut r, topic, baity_style, lex);

    let drift = if bait { (0.65 * s.text).min(1.0) } else { 0.0 };
    let content_topic = if r.gen_bool(drift) {
        (topic + r.gen_range(1..TOPICS.len())) % TOPICS.len()
    } else {
        topic
    };
    let overlap = if content_topic == topic { 0.35 } else { 0.0 };
    let caption_len = r.gen_range(6..10);
    let caption = make_text(&mut r, content_topic, &title_words, overlap, caption_len);
    let transcript_len = r.gen_range(20..40);
    let transcript = make_text(&mut r, content_topic, &title_words, overlap * 0.6, transcript_len);

    let sign = if bait { 1.0 } else { -1.0 };
    let title_embedding: Vec<f64> = (0..TITLE_DIM)
        .map(|j| f32_exact(spec.noise * normal(&mut r) + sign * 0.25 * s.bert * spec.noise * directions.bert[j]))
        .collect();
    let thumbnail_embedding: Vec<f64> = (0..IMAGE_DIM)
        .map(|j| f32_exact(spec.noise * normal(&mut r) + sign * 0.2 * s.resnet * spec.noise * directions.resnet[j]))
        .collect();

    let mismatch = if bait { (0.75 * s.graph).min(1.0) } else { 0.0 };
    let k = r.gen_range(spec.keyframes_min..=spec.keyframes_max);
    let n_faces = r.gen_range(0..=3);
    let thumb_faces: Vec<Vec<f64>> = (0..n_faces).map(|_| unit_vector(&mut r, FACE_DIM)).collect();
    let n_obj = r.gen_range(1..=4);
    let thumb_objects: Vec<String> = (0..n_obj).map(|_| pick(&mut r, &OBJECTS).to_string()).collect();
    let thumb_peak = r.gen_range(0.5..1.5);
    let thumbnail_histogram = histogram(&mut r, thumb_peak);

    let mut keyframe_embeddings = Vec::with_capacity(k);
    let mut keyframe_faces = Vec::with_capacity(k);
    let mut keyframe_objects = Vec::with_capacity(k);
    let mut keyframe_histograms = Vec::with_capacity(k);
    for _ in 0..k {
        let off = r.gen_bool(mismatch);
        let keep = if off { 0.15 } else { 0.8 };
        let rho = if off { 0.1 } else { 0.7 };
        keyframe_embeddings.push(
            thumbnail_embedding
                .iter()
                .map(|&t| f32_exact(rho * t + (1.0 - rho * rho).sqrt() * spec.noise * normal(&mut r)))
                .collect::<Vec<f64>>(),
        );
        let mut faces: Vec<Vec<f64>> = Vec::new();
        for f in &thumb_faces {
            if r.gen_bool(keep) {
                faces.push(f.iter().map(|&x| f32_exact(x + 0.03 * normal(&mut r))).collect());
            }
        }
        for _ in 0..r.gen_range(0..=1) {
            faces.push(unit_vector(&mut r, FACE_DIM));
        }
        keyframe_faces.push(FaceSet {
            dim: FACE_DIM,
            faces,
        });
        let mut objects: Vec<String> = thumb_objects.iter().filter(|_| r.gen_bool(keep)).cloned().collect();
        for _ in 0..r.gen_range(0..=2) {
            objects.push(pick(&mut r, &OBJECTS).to_string());
        }
        keyframe_objects.push(ObjectSet::new(objects));
        let peak = if off { r.gen_range(0.5..3.0) } else { thumb_peak * r.gen_range(0.9..1.1) };
        keyframe_histograms.push(histogram(&mut r, peak));
    }

    let categories = if bait {
        let mut flags = [false; 5];
        flags[0] = r.gen_bool(0.5);
        flags[4] = r.gen_bool(if flags[0] { 0.7 } else { 0.3 });
        flags[1] = r.gen_bool(0.25);
        flags[2] = r.gen_bool(0.35);
        flags[3] = r.gen_bool(if baity_style { 0.6 } else { 0.2 });
        if !flags.iter().any(|&f| f) {
            flags[r.gen_range(0..5)] = true;
        }
        Categories::from_array(flags)
    } else {
        Categories::default()
    };

    let video_id = format!("vid{index:04}");
    Generated {
        bundle: ModalityBundle {
            video_id,
            title,
            title_embedding,
            thumbnail_embedding,
            keyframe_embeddings,
            thumbnail_faces: FaceSet {
                dim: FACE_DIM,
                faces: thumb_faces,
            },
            keyframe_faces,
            thumbnail_objects: ObjectSet::new(thumb_objects),
            keyframe_objects,
            thumbnail_histogram,
            keyframe_histograms,
            caption,
            transcript,
        },
        categories,
    }
}

/// Sparse ±1 directions: a few dozen coordinates carry the class shift.
struct Directions {
    bert: Vec<f64>,
    resnet: Vec<f64>,
}

fn sparse_direction(r: &mut ChaCha8Rng, dim: usize, active: usize) -> Vec<f64> {
    let mut d = vec![0.0; dim];
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.shuffle(r);
    for &i in &idx[..active] {
        d[i] = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    d
}

/// Word vectors clustered by topic; every vocabulary word gets one.
pub fn synth_word_vectors(seed: u64) -> WordEmbeddingTable {
    let mut r = rng::stream(seed, &[tag::SYNTH, 2]);
    let mut table = WordEmbeddingTable::new(WORD_DIM);
    let mut words: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (_, topic_words) in TOPICS {
        let center: Vec<f64> = (0..WORD_DIM).map(|_| normal(&mut r)).collect();
        for w in topic_words {
            let v = center.iter().map(|c| f32_exact(c + 0.6 * normal(&mut r))).collect();
            words.entry(w.to_string()).or_insert(v);
        }
    }
    for w in POSITIVE.iter().chain(&NEGATIVE).chain(&FILLER) {
        let v = (0..WORD_DIM).map(|_| f32_exact(normal(&mut r))).collect();
        words.entry(w.to_string()).or_insert(v);
    }
    for (w, v) in words {
        table.insert(&w, v).expect("fixed dimension");
    }
    table
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub config: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

/// Write manifest, bundles, lexicons, word vectors and a config file under `dir`.
pub fn synth_corpus(spec: &SynthSpec, dir: &Path) -> Result<SynthOutput> {
    spec.validate()?;
    let lex = BaitLexicons::bundled();
    let mut r = rng::stream(spec.seed, &[tag::SYNTH, 0]);
    let directions = Directions {
        bert: sparse_direction(&mut r, TITLE_DIM, 48),
        resnet: sparse_direction(&mut r, IMAGE_DIM, 64),
    };
    let n_pos = spec.n_clickbait();
    let mut labels: Vec<u8> = (0..spec.n_videos).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut r);

    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bundles_dir = dir.join("bundles");
    let entries = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let g = generate_video(spec, i, label, &lex, &directions);
            let bundle_dir = bundles_dir.join(&g.bundle.video_id);
            write_bundle(&bundle_dir, &g.bundle)?;
            Ok(ManifestEntry {
                video_id: g.bundle.video_id.clone(),
                title: g.bundle.title.clone(),
                label,
                categories: g.categories,
                bundle_dir,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = dir.join("manifest.jsonl");
    write_manifest(&manifest, &entries)?;
    BaitLexicons::write_bundled(&dir.join("lexicons"))?;
    let glove = dir.join("glove.txt");
    std::fs::write(&glove, synth_word_vectors(spec.seed).to_text()).map_err(|e| Error::io(&glove, e))?;
    let spec_path = dir.join("synth_spec.json");
    std::fs::write(&spec_path, serde_json::to_string_pretty(spec)? + "\n").map_err(|e| Error::io(&spec_path, e))?;
    let config = dir.join("pipeline.conf");
    let text = format!(
        "# generated corpus, seed {}\nmanifest = manifest.jsonl\nlexicons = lexicons\nembeddings = glove.txt\nseed = {}\n",
        spec.seed, spec.seed
    );
    std::fs::write(&config, text).map_err(|e| Error::io(&config, e))?;
    Ok(SynthOutput {
        manifest,
        config,
        entries,
    })
}
