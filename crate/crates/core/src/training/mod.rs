//! Batching, the two-phase adversarial step, perplexity-based selection, and
//! checkpoint files.

mod batching;
mod checkpoint;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use batching::{epoch_seed, make_batches, BatchMode};
pub use checkpoint::{Checkpoint, FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::models::{adv1_loss, adv2_loss, LossTerms, ModelDims, ModelKind, StyleModel, StyledBatch};
use crate::numerics::{AdadeltaState, Graph, Tensor};
use crate::textpipe::Vocabulary;

/// Everything that determines a training run besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub word_dim: usize,
    pub enc_dim: usize,
    /// Style-embedding width; only the style-embedding model uses it.
    #[serde(default)]
    pub style_dim: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

pub const REFERENCE_BATCH_SIZE: usize = 128;
pub const REFERENCE_LR: f64 = 1e-4;
pub const TITLES_MAX_EPOCHS: usize = 50;
pub const REVIEWS_MAX_EPOCHS: usize = 10;

impl TrainConfig {
    /// Reference batch size and learning rate, 64-wide layers.
    pub fn reference(kind: ModelKind) -> Self {
        TrainConfig {
            kind,
            word_dim: 64,
            enc_dim: 64,
            style_dim: if kind == ModelKind::StyleEmbedding { 64 } else { 0 },
            batch_size: REFERENCE_BATCH_SIZE,
            lr: REFERENCE_LR,
            max_epochs: TITLES_MAX_EPOCHS,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.word_dim == 0 || self.enc_dim == 0 {
            return Err(Error::Config("word and encoder dims must be positive".into()));
        }
        if self.kind == ModelKind::StyleEmbedding && self.style_dim == 0 {
            return Err(Error::Config("style-embedding model needs style_dim > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max epochs must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }

    pub fn dims(&self, vocab_size: usize, n_styles: usize) -> ModelDims {
        ModelDims {
            vocab_size,
            word_dim: self.word_dim,
            enc_dim: self.enc_dim,
            style_dim: if self.kind == ModelKind::StyleEmbedding { self.style_dim } else { 0 },
            n_styles,
        }
    }
}

/// A model together with its optimizer state.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub model: StyleModel,
    pub optimizer: AdadeltaState,
    pub steps: usize,
}

fn finite(terms: &LossTerms) -> Result<()> {
    if [terms.gen, terms.adv1, terms.adv2, terms.total].iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite loss {terms:?}")))
    }
}

impl Trainer {
    pub fn new(model: StyleModel, lr: f64) -> Self {
        Trainer {
            model,
            optimizer: AdadeltaState::new(lr),
            steps: 0,
        }
    }

    /// Classifier update from fixed content vectors; returns the classifier
    /// loss before the update.
    pub fn classifier_phase(&mut self, content: &Tensor, styles: &[usize]) -> Result<f64> {
        let clf = self
            .model
            .classifier
            .clone()
            .ok_or_else(|| Error::Contract("model has no adversarial classifier".into()))?;
        let mut g = Graph::new();
        let c = g.constant(content.clone());
        let adv1 = adv1_loss(&mut g, &self.model.store, &clf, c, styles)?;
        let value = g.scalar(adv1);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite classifier loss {value}")));
        }
        let grads = g.backward(adv1)?;
        drop(g);
        let ids = self.model.classifier_ids();
        self.optimizer.step(&mut self.model.store, &grads, &ids)?;
        Ok(value)
    }

    /// One step on `batch`.
    ///
    /// Adversarial models take two phases: (a) the classifier loss on the
    /// current content vectors updates the classifier alone; (b) generation
    /// plus the entropy term, scored by the freshly updated classifier,
    /// updates encoder, decoders and style embeddings. The returned `adv1`
    /// is from before phase (a), `adv2` from phase (b).
    pub fn train_step(&mut self, batch: &StyledBatch) -> Result<LossTerms> {
        let model = &self.model;
        let mut g = Graph::new();
        let content = model.content(&mut g, &batch.seqs)?;
        let (gen, _) = model.generation_loss(&mut g, content, batch)?;
        let mut terms = LossTerms {
            gen: g.scalar(gen),
            ..LossTerms::default()
        };

        let Some(clf) = model.classifier.clone() else {
            terms.total = terms.gen;
            finite(&terms)?;
            let grads = g.backward(gen)?;
            drop(g);
            let ids = self.model.generator_ids();
            self.optimizer.step(&mut self.model.store, &grads, &ids)?;
            self.steps += 1;
            return Ok(terms);
        };

        let c = g.value(content).clone();
        terms.adv1 = self.classifier_phase(&c, &batch.styles)?;

        let model = &self.model;
        let adv2 = adv2_loss(&mut g, &model.store, &clf, content)?;
        terms.adv2 = g.scalar(adv2);
        terms.total = terms.gen + terms.adv1 + terms.adv2;
        finite(&terms)?;
        let objective = g.add(gen, adv2)?;
        let grads = g.backward(objective)?;
        drop(g);
        let ids = self.model.generator_ids();
        self.optimizer.step(&mut self.model.store, &grads, &ids)?;
        self.steps += 1;
        Ok(terms)
    }
}

/// Batch size used when only forward passes are needed.
pub const EVAL_BATCH: usize = 128;

/// `exp(total reconstruction NLL / total target tokens)`.
pub fn validation_perplexity(model: &StyleModel, data: &StyledBatch) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Data("validation split is empty".into()));
    }
    let mut nll = 0.0;
    let mut tokens = 0;
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(EVAL_BATCH) {
        let (l, t) = model.reconstruction_nll(&data.subset(chunk))?;
        nll += l;
        tokens += t;
    }
    Ok((nll / tokens as f64).exp())
}

/// Per-epoch training record: loss terms are means per sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub step: usize,
    pub gen: f64,
    pub adv1: f64,
    pub adv2: f64,
    pub total: f64,
    pub val_perplexity: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} step={} gen={} adv1={} adv2={} total={} val_ppl={}",
            self.epoch, self.step, self.gen, self.adv1, self.adv2, self.total, self.val_perplexity
        )
    }
}

/// Inputs to [`fit`].
#[derive(Clone, Copy, Debug)]
pub struct TrainData<'a> {
    pub vocab: &'a Vocabulary,
    pub style_names: &'a [String],
    pub train: &'a StyledBatch,
    pub validation: &'a StyledBatch,
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    /// Checkpoint with the lowest validation perplexity.
    pub best: Checkpoint,
    pub log: Vec<EpochLog>,
    /// Set when training stopped early on a numeric failure.
    pub warning: Option<String>,
}

fn run_epoch(trainer: &mut Trainer, config: &TrainConfig, train: &StyledBatch, epoch: usize) -> Result<LossTerms> {
    let mode = BatchMode::for_kind(config.kind);
    let batches = make_batches(&train.styles, config.batch_size, epoch_seed(config.seed, epoch), mode);
    let mut sum = LossTerms::default();
    for idx in batches {
        let t = trainer.train_step(&train.subset(&idx))?;
        sum.gen += t.gen;
        sum.adv1 += t.adv1;
        sum.adv2 += t.adv2;
        sum.total += t.total;
    }
    let n = train.len() as f64;
    Ok(LossTerms {
        gen: sum.gen / n,
        adv1: sum.adv1 / n,
        adv2: sum.adv2 / n,
        total: sum.total / n,
    })
}

/// Trains for `max_epochs`, scoring validation perplexity after each epoch,
/// and returns the best epoch's checkpoint. A numeric failure ends training
/// with the best checkpoint so far and a warning; if it happens before any
/// epoch finished, it is an error.
pub fn fit(config: &TrainConfig, data: TrainData<'_>, observer: &mut dyn FnMut(&EpochLog)) -> Result<FitOutcome> {
    config.validate()?;
    if data.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let dims = config.dims(data.vocab.len(), data.style_names.len());
    let model = StyleModel::new(config.kind, dims, config.seed)?;
    let mut trainer = Trainer::new(model, config.lr);
    let mut best: Option<Checkpoint> = None;
    let mut log = Vec::new();
    let mut warning = None;
    for epoch in 1..=config.max_epochs {
        let outcome = run_epoch(&mut trainer, config, data.train, epoch).and_then(|terms| {
            let ppl = validation_perplexity(&trainer.model, data.validation)?;
            if ppl.is_finite() {
                Ok((terms, ppl))
            } else {
                Err(Error::Numeric(format!("validation perplexity {ppl}")))
            }
        });
        let (terms, ppl) = match outcome {
            Ok(v) => v,
            Err(Error::Numeric(msg)) if best.is_some() => {
                warning = Some(format!("epoch {epoch} diverged ({msg}); keeping the best earlier checkpoint"));
                break;
            }
            Err(e) => return Err(e),
        };
        let entry = EpochLog {
            epoch,
            step: trainer.steps,
            gen: terms.gen,
            adv1: terms.adv1,
            adv2: terms.adv2,
            total: terms.total,
            val_perplexity: ppl,
        };
        observer(&entry);
        log.push(entry);
        if best.as_ref().is_none_or(|b| ppl < b.val_perplexity) {
            best = Some(Checkpoint::new(
                config.clone(),
                data.vocab.clone(),
                data.style_names.to_vec(),
                epoch,
                ppl,
                &trainer.model,
            ));
        }
    }
    Ok(FitOutcome {
        best: best.expect("at least one epoch completes or an error is returned"),
        log,
        warning,
    })
}

#[cfg(test)]
mod tests;
