//! Seeded two-style marker corpus for desk-scale experiments.
//!
//! Every sentence is 5 to 8 content words drawn uniformly from `c01..c40`
//! plus exactly one style marker at a uniform position. Style 0 uses
//! `aa1`/`aa2`, style 1 uses `bb1`/`bb2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr_free::standard_normal;

use super::corpus::StyledCorpus;
use super::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

pub const N_CONTENT_WORDS: usize = 40;
pub const MARKERS: [[&str; 2]; 2] = [["aa1", "aa2"], ["bb1", "bb2"]];
pub const MIN_SIZE_PER_STYLE: usize = 100;

pub fn content_word(i: usize) -> String {
    format!("c{:02}", i + 1)
}

/// Content words followed by the markers.
pub fn synth_tokens() -> Vec<String> {
    (0..N_CONTENT_WORDS)
        .map(content_word)
        .chain(MARKERS.iter().flatten().map(|m| m.to_string()))
        .collect()
}

/// Style owning a marker token, if `token` is one.
pub fn marker_style(token: &str) -> Option<usize> {
    MARKERS.iter().position(|family| family.contains(&token))
}

pub fn synth_corpus(seed: u64, size_per_style: usize) -> Result<StyledCorpus> {
    if size_per_style < MIN_SIZE_PER_STYLE {
        return Err(Error::Config(format!(
            "synthetic corpus needs at least {MIN_SIZE_PER_STYLE} sentences per style"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(2 * size_per_style);
    let mut labels = Vec::with_capacity(2 * size_per_style);
    for (style, family) in MARKERS.iter().enumerate() {
        for _ in 0..size_per_style {
            let n_content = rng.gen_range(5..=8);
            let mut s: Vec<String> = (0..n_content)
                .map(|_| content_word(rng.gen_range(0..N_CONTENT_WORDS)))
                .collect();
            let marker = family[rng.gen_range(0..family.len())];
            let pos = rng.gen_range(0..=n_content);
            s.insert(pos, marker.to_string());
            sentences.push(s);
            labels.push(style);
        }
    }
    StyledCorpus::new(sentences, labels, MARKERS.len())
}

/// Standard-normal word vectors for every synthetic token, seeded.
pub fn synth_embedding_table(seed: u64, dim: usize) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new(dim);
    for tok in synth_tokens() {
        let v = (0..dim).map(|_| standard_normal(&mut rng)).collect();
        table.insert(tok, v).expect("dim");
    }
    table
}

mod rand_distr_free {
    use rand::Rng;

    /// Box-Muller; one draw per call keeps the stream position simple.
    pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
