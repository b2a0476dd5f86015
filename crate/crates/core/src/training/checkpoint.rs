use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::models::{ModelDims, StyleModel};
use crate::numerics::container::{read_container, round_to_f32, write_container};
use crate::textpipe::Vocabulary;

const MAGIC: &[u8; 8] = b"TSTYCKPT";
/// Current on-disk format version.
pub const FORMAT_VERSION: u32 = 1;

/// A trained model with everything needed to run it on raw text.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub style_names: Vec<String>,
    /// 1-based epoch the parameters come from.
    pub epoch: usize,
    pub val_perplexity: f64,
    pub model: StyleModel,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: TrainConfig,
    dims: ModelDims,
    vocab: Vec<String>,
    style_names: Vec<String>,
    epoch: usize,
    val_perplexity: f64,
}

impl Checkpoint {
    /// Snapshot of `model`; parameters are rounded to 32-bit so the in-memory
    /// checkpoint behaves exactly like one read back from disk.
    pub fn new(
        config: TrainConfig,
        vocab: Vocabulary,
        style_names: Vec<String>,
        epoch: usize,
        val_perplexity: f64,
        model: &StyleModel,
    ) -> Self {
        let mut model = model.clone();
        round_to_f32(&mut model.store);
        Checkpoint {
            config,
            vocab,
            style_names,
            epoch,
            val_perplexity,
            model,
        }
    }

    pub fn style_index(&self, name: &str) -> Option<usize> {
        self.style_names.iter().position(|s| s == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = Meta {
            config: self.config.clone(),
            dims: self.model.dims,
            vocab: self.vocab.tokens().to_vec(),
            style_names: self.style_names.clone(),
            epoch: self.epoch,
            val_perplexity: self.val_perplexity,
        };
        write_container(MAGIC, FORMAT_VERSION, &meta, &self.model.store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Parses a checkpoint; `path` only labels errors.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let (meta, store): (Meta, _) = read_container(bytes, MAGIC, FORMAT_VERSION, path)?;
        let corrupt = |m: &str| Error::Corrupt(path.to_path_buf(), m.to_string());
        let model = StyleModel::from_store(meta.config.kind, meta.dims, store)?;
        if model.dims.vocab_size != meta.vocab.len() {
            return Err(corrupt("vocabulary size disagrees with the model"));
        }
        if meta.style_names.len() != model.dims.n_styles {
            return Err(corrupt("style names disagree with the model"));
        }
        Ok(Checkpoint {
            config: meta.config,
            vocab: Vocabulary::from_tokens(meta.vocab)?,
            style_names: meta.style_names,
            epoch: meta.epoch,
            val_perplexity: meta.val_perplexity,
            model,
        })
    }
}
