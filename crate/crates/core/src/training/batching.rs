use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::models::ModelKind;

/// How examples are grouped into batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    /// Single-style batches, styles taking turns.
    Grouped,
    /// One global shuffle, styles mixed within batches.
    Mixed,
}

impl BatchMode {
    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::MultiDecoder => BatchMode::Grouped,
            _ => BatchMode::Mixed,
        }
    }
}

/// Seed for the shuffle of a given epoch.
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Index lists of each batch for one pass over examples labelled `styles`.
///
/// Grouped mode shuffles each style separately, cuts it into batches, and
/// emits them round-robin by style (0, 1, 0, 1, ...); a style that runs out
/// simply drops out of the rotation.
pub fn make_batches(styles: &[usize], batch_size: usize, seed: u64, mode: BatchMode) -> Vec<Vec<usize>> {
    let batch_size = batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        BatchMode::Mixed => {
            let mut order: Vec<usize> = (0..styles.len()).collect();
            order.shuffle(&mut rng);
            order.chunks(batch_size).map(<[usize]>::to_vec).collect()
        }
        BatchMode::Grouped => {
            let n_styles = styles.iter().max().map_or(0, |&m| m + 1);
            let per_style: Vec<Vec<Vec<usize>>> = (0..n_styles)
                .map(|k| {
                    let mut idx: Vec<usize> = (0..styles.len()).filter(|&i| styles[i] == k).collect();
                    idx.shuffle(&mut rng);
                    idx.chunks(batch_size).map(<[usize]>::to_vec).collect()
                })
                .collect();
            let rounds = per_style.iter().map(Vec::len).max().unwrap_or(0);
            let mut out = Vec::new();
            for r in 0..rounds {
                for batches in &per_style {
                    if let Some(b) = batches.get(r) {
                        out.push(b.clone());
                    }
                }
            }
            out
        }
    }
}
