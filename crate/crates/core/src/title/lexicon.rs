use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Placeholder token in phrase lexicons matching any all-digit token.
pub const NUMBER_WILDCARD: &str = "<num>";

/// Lowercase a token and trim punctuation from both ends, keeping inner
/// apostrophes and hyphens ("won't", "jaw-dropping").
pub fn normalize_token(raw: &str) -> String {
    raw.trim_matches(|c: char| !c.is_alphanumeric())
        .replace('\u{2019}', "'")
        .to_lowercase()
}

/// Whitespace tokens, normalized, empties dropped.
pub fn match_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Does lexicon token `pattern` accept title token `token`?
pub fn token_matches(pattern: &str, token: &str) -> bool {
    if pattern == NUMBER_WILDCARD {
        !token.is_empty() && token.chars().all(|c| c.is_ascii_digit())
    } else {
        pattern == token
    }
}

/// A list of single- or multi-word phrases, kept longest-first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseList {
    phrases: Vec<Vec<String>>,
}

impl PhraseList {
    pub fn new<S: AsRef<str>>(entries: impl IntoIterator<Item = S>) -> Self {
        let mut phrases: Vec<Vec<String>> = entries
            .into_iter()
            .map(|e| {
                e.as_ref()
                    .split_whitespace()
                    .map(|t| if t == NUMBER_WILDCARD { t.to_string() } else { normalize_token(t) })
                    .filter(|t| !t.is_empty())
                    .collect::<Vec<_>>()
            })
            .filter(|p| !p.is_empty())
            .collect();
        phrases.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        phrases.dedup();
        PhraseList { phrases }
    }

    pub fn phrases(&self) -> &[Vec<String>] {
        &self.phrases
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Length of the longest phrase matching `tokens` at position `at`.
    pub fn longest_match_at(&self, tokens: &[String], at: usize) -> Option<usize> {
        let rest = &tokens[at..];
        self.phrases
            .iter()
            .find(|p| p.len() <= rest.len() && p.iter().zip(rest).all(|(pat, tok)| token_matches(pat, tok)))
            .map(Vec::len)
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.phrases.iter().any(|p| p.len() == 1 && token_matches(&p[0], word))
    }
}

/// The dictionaries behind the baitiness counters and the sentiment scorer.
#[derive(Debug, Clone, Default)]
pub struct BaitLexicons {
    pub celebrities: PhraseList,
    pub slang: PhraseList,
    pub porn: PhraseList,
    pub bollywood: PhraseList,
    pub generic: PhraseList,
    pub valence: HashMap<String, f64>,
    pub negators: PhraseList,
    pub intensifiers: HashMap<String, f64>,
    pub stopwords: Vec<String>,
}

fn entries(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_weights(text: &str, name: &str) -> Result<HashMap<String, f64>> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: name.into(),
            line: i + 1,
            message,
        };
        let (term, value) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected term<TAB>value".into()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad value `{value}`: {e}")))?;
        if !value.is_finite() {
            return Err(parse_err("non-finite value".into()));
        }
        map.insert(normalize_token(term), value);
    }
    Ok(map)
}

macro_rules! bundled {
    ($file:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/lexicons/", $file))
    };
}

impl BaitLexicons {
    pub const FILES: [&'static str; 9] = [
        "celebrities.txt",
        "slang.txt",
        "porn.txt",
        "bollywood.txt",
        "generic.txt",
        "valence.tsv",
        "negators.txt",
        "intensifiers.tsv",
        "stopwords.txt",
    ];

    fn from_texts(texts: [&str; 9]) -> Result<Self> {
        let [celebrities, slang, porn, bollywood, generic, valence, negators, intensifiers, stopwords] = texts;
        Ok(BaitLexicons {
            celebrities: PhraseList::new(entries(celebrities)),
            slang: PhraseList::new(entries(slang)),
            porn: PhraseList::new(entries(porn)),
            bollywood: PhraseList::new(entries(bollywood)),
            generic: PhraseList::new(entries(generic)),
            valence: parse_weights(valence, "valence.tsv")?,
            negators: PhraseList::new(entries(negators)),
            intensifiers: parse_weights(intensifiers, "intensifiers.tsv")?,
            stopwords: entries(stopwords).map(str::to_lowercase).collect(),
        })
    }

    /// The fixture lexicons compiled into the crate.
    pub fn bundled() -> Self {
        Self::from_texts([
            bundled!("celebrities.txt"),
            bundled!("slang.txt"),
            bundled!("porn.txt"),
            bundled!("bollywood.txt"),
            bundled!("generic.txt"),
            bundled!("valence.tsv"),
            bundled!("negators.txt"),
            bundled!("intensifiers.tsv"),
            bundled!("stopwords.txt"),
        ])
        .expect("bundled lexicons parse")
    }

    /// Load the nine lexicon files from `dir` (names as in [`Self::FILES`]).
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut texts: Vec<String> = Vec::with_capacity(9);
        for name in Self::FILES {
            let p = dir.join(name);
            texts.push(fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?);
        }
        let refs: [&str; 9] = std::array::from_fn(|i| texts[i].as_str());
        Self::from_texts(refs).map_err(|e| match e {
            Error::Parse { path, line, message } => Error::Parse {
                path: dir.join(path),
                line,
                message,
            },
            other => other,
        })
    }

    /// Write the bundled fixture files into `dir`.
    pub fn write_bundled(dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let texts = [
            bundled!("celebrities.txt"),
            bundled!("slang.txt"),
            bundled!("porn.txt"),
            bundled!("bollywood.txt"),
            bundled!("generic.txt"),
            bundled!("valence.tsv"),
            bundled!("negators.txt"),
            bundled!("intensifiers.tsv"),
            bundled!("stopwords.txt"),
        ];
        for (name, text) in Self::FILES.iter().zip(texts) {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }

    pub fn valence_of(&self, token: &str) -> f64 {
        self.valence.get(token).copied().unwrap_or(0.0)
    }
}
