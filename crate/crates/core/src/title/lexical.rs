use serde::{Deserialize, Serialize};

use super::unicode::{is_decimal_digit, is_emoji};

const PUNCTUATION: [char; 6] = ['!', '?', ',', '.', ';', ':'];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LexicalFeatures {
    pub has_number: bool,
    pub is_question: bool,
    pub emoji_count: usize,
    /// Uppercase letters over all letters; 0 when the title has no letters.
    pub capital_ratio: f64,
    pub punct_count: usize,
}

impl LexicalFeatures {
    pub fn to_vec(&self) -> [f64; 5] {
        [
            f64::from(u8::from(self.has_number)),
            f64::from(u8::from(self.is_question)),
            self.emoji_count as f64,
            self.capital_ratio,
            self.punct_count as f64,
        ]
    }
}

pub fn lexical_features(title: &str) -> LexicalFeatures {
    let mut f = LexicalFeatures::default();
    let (mut letters, mut upper) = (0usize, 0usize);
    for c in title.chars() {
        f.has_number |= is_decimal_digit(c);
        f.is_question |= c == '?';
        if is_emoji(c) {
            f.emoji_count += 1;
        }
        if c.is_alphabetic() {
            letters += 1;
            if c.is_uppercase() {
                upper += 1;
            }
        }
        if PUNCTUATION.contains(&c) {
            f.punct_count += 1;
        }
    }
    if letters > 0 {
        f.capital_ratio = upper as f64 / letters as f64;
    }
    f
}
