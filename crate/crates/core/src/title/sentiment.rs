//! Lexicon-and-rules sentiment in the style of VADER: per-token valences,
//! four adjustment heuristics, a compound score `x / sqrt(x² + α)` and
//! positive/negative/neutral proportions summing to one.

use serde::{Deserialize, Serialize};

use super::lexicon::{normalize_token, BaitLexicons};

pub const DEFAULT_ALPHA: f64 = 15.0;
pub const NEGATION_SCALE: f64 = -0.74;
pub const ALL_CAPS_SCALE: f64 = 1.5;
pub const EXCLAMATION_BOOST: f64 = 0.292;
pub const MAX_EXCLAMATION_BOOSTS: usize = 3;
const NEGATION_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
    pub compound: f64,
    /// Sum of adjusted valences, including the exclamation boost.
    pub raw_sum: f64,
    pub alpha: f64,
}

impl SentimentScores {
    pub fn to_vec(&self) -> [f64; 4] {
        [self.positive, self.negative, self.neutral, self.compound]
    }
}

pub fn compound(x: f64, alpha: f64) -> f64 {
    x / (x * x + alpha).sqrt()
}

struct Token {
    lower: String,
    all_caps: bool,
    has_letters: bool,
}

fn tokenize(title: &str) -> Vec<Token> {
    title
        .split_whitespace()
        .filter_map(|raw| {
            let lower = normalize_token(raw);
            if lower.is_empty() {
                return None;
            }
            let letters: Vec<char> = raw.chars().filter(|c| c.is_alphabetic()).collect();
            let cased = letters.iter().filter(|c| c.is_uppercase() || c.is_lowercase()).count();
            Some(Token {
                lower,
                all_caps: cased >= 2 && letters.iter().all(|c| !c.is_lowercase()),
                has_letters: !letters.is_empty(),
            })
        })
        .collect()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Score a title. Heuristics apply per valenced token in this order:
/// negation (a negator among the three preceding tokens scales by -0.74),
/// emphasis (an all-caps token in a mixed-case title scales by 1.5),
/// intensifier (the preceding token's boost is added in the valence's
/// direction). Then each `!` after the first adds 0.292 in the direction of
/// the total, at most three times.
pub fn sentiment_scores(title: &str, lex: &BaitLexicons, alpha: f64) -> SentimentScores {
    assert!(alpha > 0.0, "alpha must be positive");
    let tokens = tokenize(title);
    let any_caps = tokens.iter().any(|t| t.all_caps);
    let any_not_caps = tokens.iter().any(|t| t.has_letters && !t.all_caps);
    let mixed_case = any_caps && any_not_caps;

    let (mut pos, mut neg, mut neu) = (0.0f64, 0.0f64, 0.0f64);
    let mut x = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let mut v = lex.valence_of(&tok.lower);
        if v != 0.0 {
            let window = &tokens[i.saturating_sub(NEGATION_WINDOW)..i];
            if window.iter().any(|t| lex.negators.contains_word(&t.lower)) {
                v *= NEGATION_SCALE;
            }
            if mixed_case && tok.all_caps {
                v *= ALL_CAPS_SCALE;
            }
            if i > 0 {
                if let Some(&boost) = lex.intensifiers.get(&tokens[i - 1].lower) {
                    v += sign(v) * boost;
                }
            }
        }
        x += v;
        if v > 0.0 {
            pos += v;
        } else if v < 0.0 {
            neg += -v;
        } else {
            neu += 1.0;
        }
    }

    let marks = title.chars().filter(|&c| c == '!').count();
    let boosts = marks.saturating_sub(1).min(MAX_EXCLAMATION_BOOSTS);
    if boosts > 0 && x != 0.0 {
        let extra = boosts as f64 * EXCLAMATION_BOOST;
        if x > 0.0 {
            pos += extra;
        } else {
            neg += extra;
        }
        x += sign(x) * extra;
    }

    let total = pos + neg + neu;
    let (positive, negative, neutral) = if total > 0.0 {
        (pos / total, neg / total, neu / total)
    } else {
        (0.0, 0.0, 1.0)
    };
    SentimentScores {
        positive,
        negative,
        neutral,
        compound: compound(x, alpha),
        raw_sum: x,
        alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::title::PhraseList;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn lex() -> BaitLexicons {
        BaitLexicons {
            valence: HashMap::from([("good".into(), 1.9), ("bad".into(), -2.5), ("love".into(), 3.2)]),
            negators: PhraseList::new(["not", "never"]),
            intensifiers: HashMap::from([("very".into(), 0.293), ("slightly".into(), -0.293)]),
            ..Default::default()
        }
    }

    #[test]
    fn no_lexicon_tokens_is_neutral() {
        let s = sentiment_scores("rice and dal recipe", &lex(), DEFAULT_ALPHA);
        assert_eq!((s.positive, s.negative, s.neutral, s.compound), (0.0, 0.0, 1.0, 0.0));
        let e = sentiment_scores("", &lex(), DEFAULT_ALPHA);
        assert_eq!(e.neutral, 1.0);
    }

    #[test]
    fn compound_substitution() {
        assert_abs_diff_eq!(compound(2.4, 15.0), 2.4 / 20.76f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(compound(2.4, 15.0), 0.52674, epsilon = 1e-5);
    }

    #[test]
    fn negated_good() {
        let s = sentiment_scores("not good", &lex(), 15.0);
        let adjusted = 1.9 * -0.74;
        assert_abs_diff_eq!(s.raw_sum, adjusted, epsilon = 1e-15);
        assert_abs_diff_eq!(s.raw_sum, -1.406, epsilon = 1e-12);
        assert_abs_diff_eq!(s.compound, -1.406 / (1.406f64 * 1.406 + 15.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.compound, -0.3412, epsilon = 5e-5);
        // "not" contributes one neutral unit.
        assert_abs_diff_eq!(s.negative, 1.406 / 2.406, epsilon = 1e-12);
        assert_abs_diff_eq!(s.neutral, 1.0 / 2.406, epsilon = 1e-12);
    }

    #[test]
    fn negation_window_is_three_tokens() {
        let near = sentiment_scores("never a b good", &lex(), 15.0);
        let far = sentiment_scores("never a b c good", &lex(), 15.0);
        assert!(near.raw_sum < 0.0);
        assert_abs_diff_eq!(far.raw_sum, 1.9, epsilon = 1e-15);
    }

    #[test]
    fn caps_intensifier_and_exclamations() {
        let caps = sentiment_scores("this is GOOD", &lex(), 15.0);
        assert_abs_diff_eq!(caps.raw_sum, 1.9 * 1.5, epsilon = 1e-12);
        // an all-caps title is not mixed case
        let shout = sentiment_scores("GOOD NEWS", &lex(), 15.0);
        assert_abs_diff_eq!(shout.raw_sum, 1.9, epsilon = 1e-12);
        let very = sentiment_scores("very bad", &lex(), 15.0);
        assert_abs_diff_eq!(very.raw_sum, -2.5 - 0.293, epsilon = 1e-12);
        let slightly = sentiment_scores("slightly good", &lex(), 15.0);
        assert_abs_diff_eq!(slightly.raw_sum, 1.9 - 0.293, epsilon = 1e-12);
        let bang = sentiment_scores("good!!!!!!", &lex(), 15.0);
        assert_abs_diff_eq!(bang.raw_sum, 1.9 + 3.0 * 0.292, epsilon = 1e-12);
        let one = sentiment_scores("good!", &lex(), 15.0);
        assert_abs_diff_eq!(one.raw_sum, 1.9, epsilon = 1e-12);
        let neutral_bang = sentiment_scores("rice!!!", &lex(), 15.0);
        assert_eq!(neutral_bang.raw_sum, 0.0);
    }

    proptest! {
        #[test]
        fn proportions_and_compound_contract(words in prop::collection::vec(
            prop::sample::select(vec!["good", "GOOD", "bad", "BAD", "love", "not", "never", "very",
                                      "slightly", "rice", "Movie", "!!", "!", "?"]), 0..15),
            alpha in 0.1f64..100.0) {
            let title = words.join(" ");
            let s = sentiment_scores(&title, &lex(), alpha);
            prop_assert!((s.positive + s.negative + s.neutral - 1.0).abs() <= 1e-9);
            for v in [s.positive, s.negative, s.neutral] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((s.compound - s.raw_sum / (s.raw_sum * s.raw_sum + alpha).sqrt()).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&s.compound));
            prop_assert_eq!(sign(s.compound), sign(s.raw_sum));
        }

        #[test]
        fn compound_is_odd_and_increasing(x in -50.0f64..50.0, dx in 1e-6f64..5.0, alpha in 0.1f64..50.0) {
            prop_assert_eq!(compound(-x, alpha), -compound(x, alpha));
            prop_assert!(compound(x + dx, alpha) > compound(x, alpha));
        }
    }
}
