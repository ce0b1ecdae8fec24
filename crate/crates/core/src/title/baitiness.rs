use serde::{Deserialize, Serialize};

use super::lexicon::{match_tokens, BaitLexicons, PhraseList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BaitinessFeatures {
    pub celebrity_mentions: usize,
    pub slang_count: usize,
    pub porn_word_count: usize,
    pub bollywood_phrase_count: usize,
    pub generic_lure_count: usize,
}

impl BaitinessFeatures {
    pub fn to_vec(&self) -> [f64; 5] {
        [
            self.celebrity_mentions as f64,
            self.slang_count as f64,
            self.porn_word_count as f64,
            self.bollywood_phrase_count as f64,
            self.generic_lure_count as f64,
        ]
    }
}

/// Left-to-right scan taking the longest phrase at each position; matched
/// spans never overlap within one list.
fn count_matches(list: &PhraseList, tokens: &[String]) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i < tokens.len() {
        match list.longest_match_at(tokens, i) {
            Some(len) => {
                count += 1;
                i += len;
            }
            None => i += 1,
        }
    }
    count
}

pub fn baitiness_features(title: &str, lex: &BaitLexicons) -> BaitinessFeatures {
    let tokens = match_tokens(title);
    BaitinessFeatures {
        celebrity_mentions: count_matches(&lex.celebrities, &tokens),
        slang_count: count_matches(&lex.slang, &tokens),
        porn_word_count: count_matches(&lex.porn, &tokens),
        bollywood_phrase_count: count_matches(&lex.bollywood, &tokens),
        generic_lure_count: count_matches(&lex.generic, &tokens),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::title::lexicon::token_matches;
    use proptest::prelude::*;

    fn fixture() -> BaitLexicons {
        BaitLexicons {
            celebrities: PhraseList::new(["shah rukh khan", "salman khan"]),
            slang: PhraseList::new(["omg", "lol"]),
            porn: PhraseList::new(["hot"]),
            bollywood: PhraseList::new(["casting couch", "nepotism"]),
            generic: PhraseList::new(["shocking", "you won't believe"]),
            ..Default::default()
        }
    }

    /// Independent oracle: enumerate every (start, len) occurrence, then the
    /// maximum number of pairwise disjoint occurrences by interval DP.
    fn oracle_count(list: &PhraseList, tokens: &[String]) -> usize {
        let n = tokens.len();
        let mut occ: Vec<(usize, usize)> = Vec::new();
        for start in 0..n {
            for p in list.phrases() {
                if start + p.len() <= n && (0..p.len()).all(|j| token_matches(&p[j], &tokens[start + j])) {
                    occ.push((start, start + p.len()));
                }
            }
        }
        // best[i] = max disjoint occurrences within tokens[i..]
        let mut best = vec![0usize; n + 1];
        for i in (0..n).rev() {
            best[i] = best[i + 1];
            for &(s, e) in occ.iter().filter(|o| o.0 == i) {
                debug_assert_eq!(s, i);
                best[i] = best[i].max(1 + best[e]);
            }
        }
        best[0]
    }

    fn oracle(title: &str, lex: &BaitLexicons) -> [usize; 5] {
        let t = match_tokens(title);
        [
            oracle_count(&lex.celebrities, &t),
            oracle_count(&lex.slang, &t),
            oracle_count(&lex.porn, &t),
            oracle_count(&lex.bollywood, &t),
            oracle_count(&lex.generic, &t),
        ]
    }

    fn counts(f: BaitinessFeatures) -> [usize; 5] {
        [
            f.celebrity_mentions,
            f.slang_count,
            f.porn_word_count,
            f.bollywood_phrase_count,
            f.generic_lure_count,
        ]
    }

    #[test]
    fn mixed_categories() {
        let lex = fixture();
        let title = "OMG Shah Rukh Khan SHOCKING news";
        assert_eq!(oracle(title, &lex), [1, 1, 0, 0, 1]);
        assert_eq!(counts(baitiness_features(title, &lex)), [1, 1, 0, 0, 1]);
    }

    #[test]
    fn repeated_phrase_counts_twice() {
        let lex = fixture();
        let title = "casting couch casting couch";
        assert_eq!(oracle(title, &lex)[3], 2);
        assert_eq!(baitiness_features(title, &lex).bollywood_phrase_count, 2);
    }

    #[test]
    fn no_terms_all_zero() {
        assert_eq!(baitiness_features("Cooking rice at home", &fixture()), BaitinessFeatures::default());
    }

    #[test]
    fn word_boundaries_respected() {
        // "hot" must not fire inside "shot" or "photo".
        assert_eq!(baitiness_features("photo shot", &fixture()).porn_word_count, 0);
    }

    #[test]
    fn bundled_number_wildcard() {
        let lex = BaitLexicons::bundled();
        let f = baitiness_features("10 Reasons Why Nepotism is SHOCKING", &lex);
        assert_eq!(f.generic_lure_count, 2);
        assert_eq!(f.bollywood_phrase_count, 1);
    }

    proptest! {
        #[test]
        fn greedy_matches_oracle_on_fixture_vocab(words in prop::collection::vec(
            prop::sample::select(vec!["omg", "lol", "shah", "rukh", "khan", "salman", "casting", "couch",
                                      "hot", "shocking", "you", "won't", "believe", "news", "the"]), 0..12)) {
            let lex = fixture();
            let title = words.join(" ");
            prop_assert_eq!(counts(baitiness_features(&title, &lex)), oracle(&title, &lex));
        }

        #[test]
        fn appending_a_phrase_never_decreases(words in prop::collection::vec("[a-z]{1,6}", 0..8)) {
            let lex = fixture();
            let title = words.join(" ");
            let before = counts(baitiness_features(&title, &lex));
            let after = counts(baitiness_features(&format!("{title} casting couch omg"), &lex));
            prop_assert!(after[3] >= before[3] + 1);
            prop_assert!(after[1] >= before[1] + 1);
            let padded = counts(baitiness_features(&format!("  {title}\t"), &lex));
            prop_assert_eq!(padded, before);
        }
    }
}
