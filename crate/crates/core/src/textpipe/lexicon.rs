use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Positive and negative word lists used to drop sentiment-bearing tokens
/// before content comparison.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SentimentLexicon {
    positive: HashSet<String>,
    negative: HashSet<String>,
    /// Words listed under both polarities; still filtered.
    ambiguous: HashSet<String>,
}

impl SentimentLexicon {
    pub fn new<I, J, S, T>(positive: I, negative: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let norm = |w: &str| w.trim().to_lowercase();
        let mut pos: HashSet<String> = positive
            .into_iter()
            .map(|w| norm(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        let mut neg: HashSet<String> = negative
            .into_iter()
            .map(|w| norm(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        let ambiguous: HashSet<String> = pos.intersection(&neg).cloned().collect();
        pos.retain(|w| !ambiguous.contains(w));
        neg.retain(|w| !ambiguous.contains(w));
        SentimentLexicon {
            positive: pos,
            negative: neg,
            ambiguous,
        }
    }

    /// Two plain-text files, one word per line. Lines starting with `;` are
    /// comments (the convention of the common opinion-lexicon files).
    pub fn load(positive: &Path, negative: &Path) -> Result<Self> {
        let read = |p: &Path| -> Result<Vec<String>> {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(text
                .lines()
                .filter(|l| !l.trim_start().starts_with(';'))
                .map(str::to_string)
                .collect())
        };
        Ok(Self::new(read(positive)?, read(negative)?))
    }

    pub fn positive(&self) -> &HashSet<String> {
        &self.positive
    }

    pub fn negative(&self) -> &HashSet<String> {
        &self.negative
    }

    pub fn contains(&self, word: &str) -> bool {
        self.positive.contains(word) || self.negative.contains(word) || self.ambiguous.contains(word)
    }
}

/// Drops every token in either polarity list, preserving order.
pub fn filter_sentiment<S: AsRef<str> + Clone>(tokens: &[S], lexicon: &SentimentLexicon) -> Vec<S> {
    tokens
        .iter()
        .filter(|t| !lexicon.contains(t.as_ref()))
        .cloned()
        .collect()
}
