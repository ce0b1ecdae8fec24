//! Cosine-matching disparity between the title and another text (thumbnail
//! caption or audio transcript) on three measures: raw term frequencies,
//! preprocessed term frequencies, and mean word embeddings.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DisparityTriplet {
    pub cos_plain: f64,
    pub cos_preprocessed: f64,
    pub cos_embedding: f64,
}

impl DisparityTriplet {
    pub fn to_vec(&self) -> [f64; 3] {
        [self.cos_plain, self.cos_preprocessed, self.cos_embedding]
    }
}

/// GloVe-style word vectors.
#[derive(Debug, Clone, Default)]
pub struct WordEmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordEmbeddingTable {
    pub fn new(dim: usize) -> Self {
        WordEmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: &str, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: format!("word vector `{word}`"),
                expected: self.dim,
                found: v.len(),
            });
        }
        self.vectors.insert(word.to_lowercase(), v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    /// Parse `word v1 … vd` lines; `d` is fixed by the first line.
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut table: Option<WordEmbeddingTable> = None;
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let err = |message: String| Error::Parse {
                path: source.to_path_buf(),
                line: i + 1,
                message,
            };
            let v: Vec<f64> = parts
                .map(|p| p.parse::<f64>().map_err(|e| err(format!("bad component `{p}`: {e}"))))
                .collect::<Result<_>>()?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(err("non-finite component".into()));
            }
            let t = table.get_or_insert_with(|| WordEmbeddingTable::new(v.len()));
            if v.len() != t.dim {
                return Err(err(format!("dimension {} differs from {}", v.len(), t.dim)));
            }
            t.vectors.insert(word.to_lowercase(), v);
        }
        Ok(table.unwrap_or_default())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Lines sorted by word, shortest round-trip float formatting.
    pub fn to_text(&self) -> String {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            for x in &self.vectors[w] {
                out.push(' ');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Stopword list plus word vectors.
#[derive(Debug, Clone, Default)]
pub struct TextResources {
    pub stopwords: HashSet<String>,
    pub embeddings: WordEmbeddingTable,
}

impl TextResources {
    pub fn new<S: AsRef<str>>(stopwords: impl IntoIterator<Item = S>, embeddings: WordEmbeddingTable) -> Self {
        TextResources {
            stopwords: stopwords.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
            embeddings,
        }
    }
}

pub fn load_stopwords(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            what: "cosine operands".into(),
            expected: u.len(),
            found: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Lowercase, remove punctuation, split on whitespace, drop stopwords.
pub fn preprocess(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect::<String>()
        .to_lowercase();
    cleaned
        .split_whitespace()
        .filter(|t| !stopwords.contains(*t))
        .map(str::to_string)
        .collect()
}

pub fn embed_mean<S: AsRef<str>>(tokens: &[S], table: &WordEmbeddingTable) -> Vec<f64> {
    let mut mean = vec![0.0; table.dim()];
    let mut n = 0usize;
    for t in tokens {
        if let Some(v) = table.get(t.as_ref()) {
            mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
            n += 1;
        }
    }
    if n > 0 {
        mean.iter_mut().for_each(|m| *m /= n as f64);
    }
    mean
}

fn tf_cosine<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    fn counts<S: AsRef<str>>(tokens: &[S]) -> BTreeMap<&str, f64> {
        let mut m: BTreeMap<&str, f64> = BTreeMap::new();
        for t in tokens {
            *m.entry(t.as_ref()).or_default() += 1.0;
        }
        m
    }
    let (ta, tb) = (counts(a), counts(b));
    let norm = |m: &BTreeMap<&str, f64>| m.values().map(|c| c * c).sum::<f64>().sqrt();
    let (na, nb) = (norm(&ta), norm(&tb));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = ta.iter().filter_map(|(k, ca)| tb.get(k).map(|cb| ca * cb)).sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

pub fn disparity_triplet(text_a: &str, text_b: &str, res: &TextResources) -> DisparityTriplet {
    let raw_a: Vec<&str> = text_a.split_whitespace().collect();
    let raw_b: Vec<&str> = text_b.split_whitespace().collect();
    let pre_a = preprocess(text_a, &res.stopwords);
    let pre_b = preprocess(text_b, &res.stopwords);
    let ea = embed_mean(&pre_a, &res.embeddings);
    let eb = embed_mean(&pre_b, &res.embeddings);
    DisparityTriplet {
        cos_plain: tf_cosine(&raw_a, &raw_b),
        cos_preprocessed: tf_cosine(&pre_a, &pre_b),
        cos_embedding: cosine_similarity(&ea, &eb).expect("same table dimension"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table(entries: &[(&str, &[f64])]) -> WordEmbeddingTable {
        let mut t = WordEmbeddingTable::new(entries[0].1.len());
        for (w, v) in entries {
            t.insert(w, v.to_vec()).unwrap();
        }
        t
    }

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine_similarity(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(cosine_similarity(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn preprocess_examples() {
        let sw: HashSet<String> = ["the".to_string()].into();
        assert_eq!(preprocess("The Movie, the TRAILER!", &sw), vec!["movie", "trailer"]);
        assert!(preprocess("", &sw).is_empty());
        let a: HashSet<String> = ["a".to_string()].into();
        assert!(preprocess("a a a", &a).is_empty());
    }

    #[test]
    fn embed_mean_examples() {
        let t = table(&[("w", &[1.0, 2.0]), ("u", &[0.0, 1.0])]);
        assert_eq!(embed_mean(&["w"], &t), vec![1.0, 2.0]);
        let t2 = table(&[("w", &[1.0, 0.0]), ("u", &[0.0, 1.0])]);
        assert_eq!(embed_mean(&["w", "u"], &t2), vec![0.5, 0.5]);
        assert_eq!(embed_mean(&["zz", "qq"], &t2), vec![0.0, 0.0]);
    }

    #[test]
    fn big_cat_big_dog() {
        let res = TextResources::new(
            Vec::<String>::new(),
            table(&[("cat", &[0.0, 1.0]), ("dog", &[1.0, 0.0]), ("big", &[1.0, 1.0])]),
        );
        let t = disparity_triplet("big cat", "big dog", &res);
        // TF vectors over {big, cat, dog}: (1,1,0)·(1,0,1) / (√2·√2)
        assert_abs_diff_eq!(t.cos_plain, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.cos_preprocessed, 0.5, epsilon = 1e-15);
        // means (0.5,1) and (1,0.5): 1 / 1.25
        assert_abs_diff_eq!(t.cos_embedding, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn identical_and_disjoint() {
        let res = TextResources::new(
            ["the"],
            table(&[("movie", &[1.0, 0.0, 0.0]), ("song", &[0.0, 1.0, 0.0]), ("dance", &[0.0, 0.0, 1.0])]),
        );
        let same = disparity_triplet("The movie song", "The movie song", &res);
        assert_abs_diff_eq!(same.cos_plain, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(same.cos_preprocessed, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(same.cos_embedding, 1.0, epsilon = 1e-12);
        let apart = disparity_triplet("movie", "dance", &res);
        assert_eq!(apart.to_vec(), [0.0, 0.0, 0.0]);
        assert_eq!(disparity_triplet("", "movie", &res).to_vec(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn glove_parse_enforces_dimension() {
        let t = WordEmbeddingTable::parse("Cat 0.1 0.2\ndog 0.3 0.4\n", Path::new("g.txt")).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.get("CAT"), Some(&[0.1, 0.2][..]));
        let back = WordEmbeddingTable::parse(&t.to_text(), Path::new("g.txt")).unwrap();
        assert_eq!(back.get("dog"), t.get("dog"));
        assert!(matches!(
            WordEmbeddingTable::parse("a 1 2\nb 1 2 3\n", Path::new("g.txt")),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    fn fuzz_resources() -> TextResources {
        TextResources::new(
            ["the", "a"],
            table(&[("x", &[1.0, -2.0]), ("y", &[-1.0, 0.5]), ("zed", &[0.3, 0.3])]),
        )
    }

    proptest! {
        #[test]
        fn symmetric_and_in_range(a in "\\PC{0,30}", b in "\\PC{0,30}") {
            let res = fuzz_resources();
            let ab = disparity_triplet(&a, &b, &res);
            let ba = disparity_triplet(&b, &a, &res);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab.cos_plain));
            prop_assert!((0.0..=1.0).contains(&ab.cos_preprocessed));
            prop_assert!((-1.0..=1.0).contains(&ab.cos_embedding));
        }

        #[test]
        fn in_vocab_fuzz(a in prop::collection::vec(prop::sample::select(vec!["x", "y", "zed", "the", "q"]), 0..6),
                         b in prop::collection::vec(prop::sample::select(vec!["x", "y", "zed", "the", "q"]), 0..6)) {
            let res = fuzz_resources();
            let t = disparity_triplet(&a.join(" "), &b.join(" "), &res);
            prop_assert!((-1.0..=1.0).contains(&t.cos_embedding));
            let bare = TextResources::new(Vec::<String>::new(), WordEmbeddingTable::new(2));
            let u = disparity_triplet(&a.join(" "), &b.join(" "), &bare);
            prop_assert_eq!(u.cos_plain, u.cos_preprocessed);
        }
    }
}
