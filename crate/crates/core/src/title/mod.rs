//! Title-only features: lexical cues, baitiness counters and sentiment.

mod baitiness;
mod lexical;
mod lexicon;
mod sentiment;
pub mod unicode;

pub use baitiness::{baitiness_features, BaitinessFeatures};
pub use lexical::{lexical_features, LexicalFeatures};
pub use lexicon::{match_tokens, normalize_token, BaitLexicons, PhraseList, NUMBER_WILDCARD};
pub use sentiment::{
    compound, sentiment_scores, SentimentScores, ALL_CAPS_SCALE, DEFAULT_ALPHA, EXCLAMATION_BOOST,
    MAX_EXCLAMATION_BOOSTS, NEGATION_SCALE,
};
