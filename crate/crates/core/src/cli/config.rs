use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{StrengthConfig, LOWER_BOUND_PAIRS};
use crate::models::ModelKind;
use crate::training::{TrainConfig, REFERENCE_BATCH_SIZE, REFERENCE_LR, REVIEWS_MAX_EPOCHS, TITLES_MAX_EPOCHS};

pub const TITLES_VOCAB: usize = 80_000;
pub const REVIEWS_VOCAB: usize = 60_000;
pub const PRETRAINED_DIM: usize = 100;

/// Dimension grid; a single training run uses the first entry of each list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimGrid {
    pub word_dims: Vec<usize>,
    pub enc_dims: Vec<usize>,
    /// Ignored by the auto-encoder and multi-decoder.
    #[serde(default)]
    pub style_dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexiconPaths {
    pub positive: PathBuf,
    pub negative: PathBuf,
}

/// One experiment: data, model, schedule, evaluation resources, outputs.
/// Relative paths are relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub style_names: Vec<String>,
    pub style_files: Vec<PathBuf>,
    /// Split lines on whitespace only instead of the default tokenizer.
    #[serde(default)]
    pub pretokenized: bool,
    pub split_seed: u64,
    pub vocab_size: usize,
    pub model: ModelKind,
    pub grid: DimGrid,
    pub batch_size: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub seed: u64,
    #[serde(default)]
    pub embedding_table: Option<PathBuf>,
    pub embedding_dim: usize,
    #[serde(default)]
    pub lexicon: Option<LexiconPaths>,
    pub output_dir: PathBuf,
    pub lower_bound_pairs: usize,
    pub classifier: StrengthConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Paper-news titles: 80k vocabulary, 50 epochs.
    Titles,
    /// Positive-negative reviews: 60k vocabulary, 10 epochs.
    Reviews,
    /// Seeded marker corpus at desk scale.
    Synthetic,
}

/// Learning-rate multiplier and batch size for the synthetic corpus.
pub const SYNTH_LR: f64 = 3.0;
pub const SYNTH_BATCH_SIZE: usize = 8;
pub const SYNTH_SPLIT_SEED: u64 = 2;
pub const SYNTH_SEED: u64 = 7;

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = ExperimentConfig {
            style_names: vec![],
            style_files: vec![],
            pretokenized: false,
            split_seed: 0,
            vocab_size: TITLES_VOCAB,
            model: ModelKind::MultiDecoder,
            grid: DimGrid {
                word_dims: vec![64],
                enc_dims: vec![32, 64, 128],
                style_dims: vec![32, 64, 128],
            },
            batch_size: REFERENCE_BATCH_SIZE,
            lr: REFERENCE_LR,
            max_epochs: TITLES_MAX_EPOCHS,
            seed: 0,
            embedding_table: Some("glove.6B.100d.txt".into()),
            embedding_dim: PRETRAINED_DIM,
            lexicon: None,
            output_dir: "out".into(),
            lower_bound_pairs: LOWER_BOUND_PAIRS,
            classifier: StrengthConfig::default(),
        };
        match preset {
            Preset::Titles => ExperimentConfig {
                style_names: vec!["paper".into(), "news".into()],
                style_files: vec!["paper.txt".into(), "news.txt".into()],
                ..base
            },
            Preset::Reviews => ExperimentConfig {
                style_names: vec!["negative".into(), "positive".into()],
                style_files: vec!["negative.txt".into(), "positive.txt".into()],
                vocab_size: REVIEWS_VOCAB,
                max_epochs: REVIEWS_MAX_EPOCHS,
                grid: DimGrid {
                    word_dims: vec![64],
                    enc_dims: vec![16, 32, 64],
                    style_dims: vec![16, 32, 64],
                },
                lexicon: Some(LexiconPaths {
                    positive: "positive-words.txt".into(),
                    negative: "negative-words.txt".into(),
                }),
                classifier: StrengthConfig {
                    vocab_size: REVIEWS_VOCAB,
                    ..StrengthConfig::default()
                },
                ..base
            },
            Preset::Synthetic => ExperimentConfig {
                style_names: vec!["aa".into(), "bb".into()],
                style_files: vec!["style0.txt".into(), "style1.txt".into()],
                pretokenized: true,
                split_seed: SYNTH_SPLIT_SEED,
                vocab_size: 1000,
                grid: DimGrid {
                    word_dims: vec![16],
                    enc_dims: vec![32],
                    style_dims: vec![8],
                },
                batch_size: SYNTH_BATCH_SIZE,
                lr: SYNTH_LR,
                seed: SYNTH_SEED,
                embedding_table: Some("embeddings.txt".into()),
                embedding_dim: SYNTH_EMBEDDING_DIM,
                classifier: StrengthConfig {
                    word_dim: 16,
                    hidden_dim: 16,
                    vocab_size: 1000,
                    ..StrengthConfig::default()
                },
                ..base
            },
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })
    }

    /// Reads, resolves relative paths against the file's directory, and
    /// validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text, path)?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.style_files.iter_mut().for_each(fix);
        if let Some(p) = self.embedding_table.as_mut() {
            fix(p);
        }
        if let Some(l) = self.lexicon.as_mut() {
            fix(&mut l.positive);
            fix(&mut l.negative);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.style_files.len() < 2 || self.style_files.len() != self.style_names.len() {
            return Err(Error::Config(
                "need at least two style files and one name per file".into(),
            ));
        }
        let g = &self.grid;
        if g.word_dims.is_empty() || g.enc_dims.is_empty() {
            return Err(Error::Config("dimension grid is empty".into()));
        }
        if self.model == ModelKind::StyleEmbedding && g.style_dims.is_empty() {
            return Err(Error::Config("style-embedding grid needs style_dims".into()));
        }
        if self.vocab_size < 5 {
            return Err(Error::Config("vocab_size must leave room for real words".into()));
        }
        let mut paths: Vec<&Path> = self.style_files.iter().map(PathBuf::as_path).collect();
        if let Some(l) = &self.lexicon {
            paths.extend([l.positive.as_path(), l.negative.as_path()]);
        }
        for p in paths {
            if !p.exists() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        self.train_config(self.model, None).validate()
    }

    /// Training settings for one grid point; `None` takes the first entries.
    pub fn train_config(&self, kind: ModelKind, point: Option<GridPoint>) -> TrainConfig {
        let p = point.unwrap_or(GridPoint {
            word_dim: self.grid.word_dims.first().copied().unwrap_or(0),
            enc_dim: self.grid.enc_dims.first().copied().unwrap_or(0),
            style_dim: self.grid.style_dims.first().copied().unwrap_or(0),
        });
        TrainConfig {
            kind,
            word_dim: p.word_dim,
            enc_dim: p.enc_dim,
            style_dim: if kind == ModelKind::StyleEmbedding { p.style_dim } else { 0 },
            batch_size: self.batch_size,
            lr: self.lr,
            max_epochs: self.max_epochs,
            seed: self.seed,
        }
    }

    /// Every grid point for `kind`, word dim outermost; style dims only
    /// multiply the grid for the style-embedding model.
    pub fn grid_points(&self, kind: ModelKind) -> Vec<GridPoint> {
        let styles: Vec<usize> = if kind == ModelKind::StyleEmbedding {
            self.grid.style_dims.clone()
        } else {
            vec![0]
        };
        let mut out = Vec::new();
        for &word_dim in &self.grid.word_dims {
            for &enc_dim in &self.grid.enc_dims {
                for &style_dim in &styles {
                    out.push(GridPoint {
                        word_dim,
                        enc_dim,
                        style_dim,
                    });
                }
            }
        }
        out
    }

    pub fn prep_dir(&self) -> PathBuf {
        self.output_dir.join("prep")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.output_dir.join("models")
    }

    pub fn classifier_path(&self) -> PathBuf {
        self.output_dir.join("strength.clf")
    }

    pub fn results_path(&self) -> PathBuf {
        self.output_dir.join("results.csv")
    }
}

pub const SYNTH_EMBEDDING_DIM: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridPoint {
    pub word_dim: usize,
    pub enc_dim: usize,
    pub style_dim: usize,
}

/// File stem naming a trained configuration, e.g. `style-embedding-w16-e32-s8`.
pub fn run_tag(cfg: &TrainConfig) -> String {
    let mut tag = format!("{}-w{}-e{}", cfg.kind.name(), cfg.word_dim, cfg.enc_dim);
    if cfg.kind == ModelKind::StyleEmbedding {
        tag.push_str(&format!("-s{}", cfg.style_dim));
    }
    tag
}
