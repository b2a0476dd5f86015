use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{lstm_bce, lstm_scores, LstmParams};
use crate::numerics::container::{read_container, write_container};
use crate::numerics::{sigmoid, AdadeltaState, Graph, ParamStore};
use crate::textpipe::{StyledCorpus, Vocabulary, MAX_TOKENS};
use crate::training::{epoch_seed, make_batches, BatchMode, EVAL_BATCH};

/// Scores at or below this are style 0, above it style 1.
pub const THRESHOLD: f64 = 0.5;

const MAGIC: &[u8; 8] = b"TSTYCLSF";
const FORMAT_VERSION: u32 = 1;
const PREFIX: &str = "lstm";

/// Settings of the LSTM-sigmoid style classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthConfig {
    pub word_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub vocab_size: usize,
    pub seed: u64,
}

impl Default for StrengthConfig {
    /// 128-wide embeddings and state, two epochs.
    fn default() -> Self {
        StrengthConfig {
            word_dim: 128,
            hidden_dim: 128,
            epochs: 2,
            batch_size: 32,
            lr: 1.0,
            vocab_size: 80_000,
            seed: 0,
        }
    }
}

/// A trained binary style classifier over token sequences.
#[derive(Clone, Debug)]
pub struct StrengthClassifier {
    pub config: StrengthConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    pub params: LstmParams,
    /// Accuracy on the validation split after training.
    pub val_accuracy: f64,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: StrengthConfig,
    vocab: Vec<String>,
    val_accuracy: f64,
}

fn require_binary(corpus: &StyledCorpus) -> Result<()> {
    if corpus.n_styles != 2 {
        return Err(Error::Unsupported(format!(
            "the sigmoid style classifier handles 2 styles, got {}",
            corpus.n_styles
        )));
    }
    Ok(())
}

impl StrengthClassifier {
    /// Trains on `train` with binary cross-entropy and reports accuracy on
    /// `validation`.
    pub fn train(train: &StyledCorpus, validation: &StyledCorpus, config: &StrengthConfig) -> Result<Self> {
        require_binary(train)?;
        require_binary(validation)?;
        if train.is_empty() {
            return Err(Error::Data("classifier training split is empty".into()));
        }
        if config.epochs == 0 || config.batch_size == 0 || config.word_dim == 0 || config.hidden_dim == 0 {
            return Err(Error::Config("classifier dims, epochs and batch size must be positive".into()));
        }
        let vocab = Vocabulary::build(&train.sentences, config.vocab_size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let params = LstmParams::init(&mut store, PREFIX, vocab.len(), config.word_dim, config.hidden_dim, &mut rng);
        let seqs: Vec<Vec<usize>> = train.sentences.iter().map(|s| vocab.encode(s)).collect();
        let ids = params.ids();
        let mut opt = AdadeltaState::new(config.lr);
        for epoch in 1..=config.epochs {
            let batches = make_batches(
                &train.labels,
                config.batch_size,
                epoch_seed(config.seed, epoch),
                BatchMode::Mixed,
            );
            for idx in batches {
                let bseqs: Vec<Vec<usize>> = idx.iter().map(|&i| seqs[i].clone()).collect();
                let labels: Vec<usize> = idx.iter().map(|&i| train.labels[i]).collect();
                let mut g = Graph::new();
                let scores = lstm_scores(&mut g, &store, &params, &bseqs)?;
                let loss = lstm_bce(&mut g, scores, &labels)?;
                if !g.scalar(loss).is_finite() {
                    return Err(Error::Numeric("style classifier loss is not finite".into()));
                }
                let grads = g.backward(loss)?;
                drop(g);
                opt.step(&mut store, &grads, &ids)?;
            }
        }
        let mut clf = StrengthClassifier {
            config: config.clone(),
            vocab,
            store,
            params,
            val_accuracy: f64::NAN,
        };
        if !validation.is_empty() {
            clf.val_accuracy = clf.accuracy(&validation.sentences, &validation.labels)?;
        }
        Ok(clf)
    }

    /// Style-1 scores in (0, 1). Sentences are cut to the length cap; an
    /// empty sentence is scored from the initial state.
    pub fn scores(&self, sentences: &[Vec<String>]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; sentences.len()];
        let empty = sigmoid(self.store.get(self.params.readout_b).data()[0]);
        let idx: Vec<usize> = (0..sentences.len()).collect();
        for chunk in idx.chunks(EVAL_BATCH) {
            let (full, blank): (Vec<usize>, Vec<usize>) = chunk.iter().partition(|&&i| !sentences[i].is_empty());
            for i in blank {
                out[i] = empty;
            }
            if full.is_empty() {
                continue;
            }
            let seqs: Vec<Vec<usize>> = full
                .iter()
                .map(|&i| {
                    let s = &sentences[i];
                    self.vocab.encode(&s[..s.len().min(MAX_TOKENS)])
                })
                .collect();
            let mut g = Graph::new();
            let s = lstm_scores(&mut g, &self.store, &self.params, &seqs)?;
            for (k, &i) in full.iter().enumerate() {
                out[i] = g.value(s).data()[k];
            }
        }
        Ok(out)
    }

    /// Style index per sentence: score at or below 0.5 is style 0.
    pub fn predict(&self, sentences: &[Vec<String>]) -> Result<Vec<usize>> {
        Ok(self.scores(sentences)?.into_iter().map(style_of_score).collect())
    }

    pub fn accuracy(&self, sentences: &[Vec<String>], labels: &[usize]) -> Result<f64> {
        transfer_strength(self, sentences, labels)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = Meta {
            config: self.config.clone(),
            vocab: self.vocab.tokens().to_vec(),
            val_accuracy: self.val_accuracy,
        };
        let bytes = write_container(MAGIC, FORMAT_VERSION, &meta, &self.store)?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Loads a saved classifier. Weights come back rounded to 32-bit.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (meta, store): (Meta, _) = read_container(&bytes, MAGIC, FORMAT_VERSION, path)?;
        let params = LstmParams::from_store(&store, PREFIX)?;
        Ok(StrengthClassifier {
            config: meta.config,
            vocab: Vocabulary::from_tokens(meta.vocab)?,
            store,
            params,
            val_accuracy: meta.val_accuracy,
        })
    }
}

/// Style assigned to a classifier score.
pub fn style_of_score(score: f64) -> usize {
    usize::from(score > THRESHOLD)
}

/// Fraction of `outputs` the classifier assigns to their target style.
pub fn transfer_strength(clf: &StrengthClassifier, outputs: &[Vec<String>], targets: &[usize]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::Contract("transfer strength of an empty output set".into()));
    }
    if outputs.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} outputs with {} target styles",
            outputs.len(),
            targets.len()
        )));
    }
    let predicted = clf.predict(outputs)?;
    let right = predicted.iter().zip(targets).filter(|(p, t)| p == t).count();
    Ok(right as f64 / outputs.len() as f64)
}
