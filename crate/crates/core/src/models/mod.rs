//! GRU/LSTM cells, the encoder-decoder, the adversarial classifier, and the
//! three model assemblies with their losses.

mod classifier;
mod gru;
mod lstm;
mod seq2seq;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use classifier::{adv1_loss, adv2_loss, ClassifierParams};
pub use gru::{gru_cell, GruParams};
pub use lstm::{lstm_bce, lstm_cell, lstm_scores, LstmGate, LstmParams};
pub use seq2seq::{
    argmax, encode, greedy_decode, teacher_forced_nll, DecoderParams, DEFAULT_MAX_DECODE, MAX_TARGET_LEN,
};

use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::textpipe::{StyledCorpus, Vocabulary, EOS_ID};

pub(crate) fn lookup(store: &ParamStore, name: &str) -> Result<ParamId> {
    store
        .find(name)
        .ok_or_else(|| Error::Data(format!("missing parameter {name}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    AutoEncoder,
    MultiDecoder,
    StyleEmbedding,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::AutoEncoder, ModelKind::MultiDecoder, ModelKind::StyleEmbedding];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::AutoEncoder => "auto-encoder",
            ModelKind::MultiDecoder => "multi-decoder",
            ModelKind::StyleEmbedding => "style-embedding",
        }
    }

    /// Whether the adversarial classifier and its two losses are present.
    pub fn is_adversarial(self) -> bool {
        !matches!(self, ModelKind::AutoEncoder)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind {s:?}")))
    }
}

/// Sizes of every component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub word_dim: usize,
    pub enc_dim: usize,
    /// Style-embedding width; ignored by the other kinds.
    pub style_dim: usize,
    pub n_styles: usize,
}

/// One batch of encoder inputs (no `<eos>`) and their style labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StyledBatch {
    pub seqs: Vec<Vec<usize>>,
    pub styles: Vec<usize>,
}

impl StyledBatch {
    pub fn new(seqs: Vec<Vec<usize>>, styles: Vec<usize>) -> Result<Self> {
        if seqs.len() != styles.len() {
            return Err(Error::Dimension(format!(
                "{} sequences with {} labels",
                seqs.len(),
                styles.len()
            )));
        }
        Ok(StyledBatch { seqs, styles })
    }

    /// Encodes a tokenized corpus; unknown tokens become `<unk>`.
    pub fn encode(corpus: &StyledCorpus, vocab: &Vocabulary) -> Self {
        StyledBatch {
            seqs: corpus.sentences.iter().map(|s| vocab.encode(s)).collect(),
            styles: corpus.labels.clone(),
        }
    }

    /// The examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        StyledBatch {
            seqs: indices.iter().map(|&i| self.seqs[i].clone()).collect(),
            styles: indices.iter().map(|&i| self.styles[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    /// Reconstruction targets: each input followed by `<eos>`.
    pub fn targets(&self) -> Vec<Vec<usize>> {
        self.seqs
            .iter()
            .map(|s| {
                let mut t = s.clone();
                t.push(EOS_ID);
                t
            })
            .collect()
    }

    /// Total number of target tokens, `<eos>` included.
    pub fn target_tokens(&self) -> usize {
        self.seqs.iter().map(|s| s.len() + 1).sum()
    }
}

/// Graph nodes of every loss term for one batch.
#[derive(Clone, Debug)]
pub struct LossVars {
    pub content: Var,
    pub gen: Var,
    /// Generation loss of each decoder; `None` where a decoder got no rows.
    pub gen_per_decoder: Vec<Option<Var>>,
    pub adv1: Option<Var>,
    pub adv2: Option<Var>,
    pub total: Var,
}

/// Evaluated loss terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub gen: f64,
    pub adv1: f64,
    pub adv2: f64,
    pub total: f64,
}

impl LossVars {
    pub fn values(&self, g: &Graph) -> LossTerms {
        LossTerms {
            gen: g.scalar(self.gen),
            adv1: self.adv1.map_or(0.0, |v| g.scalar(v)),
            adv2: self.adv2.map_or(0.0, |v| g.scalar(v)),
            total: g.scalar(self.total),
        }
    }
}

/// A complete style-transfer model: parameters plus the ids of each part.
#[derive(Clone, Debug)]
pub struct StyleModel {
    pub kind: ModelKind,
    pub dims: ModelDims,
    pub store: ParamStore,
    pub encoder: GruParams,
    /// One per style for the multi-decoder, otherwise exactly one.
    pub decoders: Vec<DecoderParams>,
    pub classifier: Option<ClassifierParams>,
    pub style_table: Option<ParamId>,
}

const ENC: &str = "enc";
const CLF: &str = "clf";
const STYLE: &str = "style.emb";

fn dec_prefix(k: usize) -> String {
    format!("dec{k}")
}

impl StyleModel {
    /// Fresh model with uniform weights and zero biases.
    pub fn new(kind: ModelKind, dims: ModelDims, seed: u64) -> Result<Self> {
        validate_dims(kind, &dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let ModelDims {
            vocab_size: v,
            word_dim: w,
            enc_dim: h,
            style_dim: ds,
            n_styles: n,
        } = dims;
        let encoder = GruParams::init(&mut store, ENC, v, w, h, &mut rng);
        let (n_dec, dec_h) = match kind {
            ModelKind::AutoEncoder => (1, h),
            ModelKind::MultiDecoder => (n, h),
            ModelKind::StyleEmbedding => (1, h + ds),
        };
        let decoders = (0..n_dec)
            .map(|k| DecoderParams::init(&mut store, &dec_prefix(k), v, w, dec_h, &mut rng))
            .collect();
        let classifier = kind
            .is_adversarial()
            .then(|| ClassifierParams::init(&mut store, CLF, h, n, &mut rng));
        let style_table =
            (kind == ModelKind::StyleEmbedding).then(|| store.add_uniform(STYLE, &[n, ds], &mut rng));
        Ok(StyleModel {
            kind,
            dims,
            store,
            encoder,
            decoders,
            classifier,
            style_table,
        })
    }

    /// Reattaches component ids to a loaded parameter store.
    pub fn from_store(kind: ModelKind, dims: ModelDims, store: ParamStore) -> Result<Self> {
        validate_dims(kind, &dims)?;
        let encoder = GruParams::from_store(&store, ENC)?;
        let n_dec = if kind == ModelKind::MultiDecoder { dims.n_styles } else { 1 };
        let decoders = (0..n_dec)
            .map(|k| DecoderParams::from_store(&store, &dec_prefix(k)))
            .collect::<Result<Vec<_>>>()?;
        let classifier = if kind.is_adversarial() {
            Some(ClassifierParams::from_store(&store, CLF)?)
        } else {
            None
        };
        let style_table = if kind == ModelKind::StyleEmbedding {
            Some(lookup(&store, STYLE)?)
        } else {
            None
        };
        let model = StyleModel {
            kind,
            dims,
            store,
            encoder,
            decoders,
            classifier,
            style_table,
        };
        model.check_against_dims()?;
        Ok(model)
    }

    fn check_against_dims(&self) -> Result<()> {
        let d = &self.dims;
        let dec_h = self.decoder_hidden();
        let ok = self.encoder.hidden_dim == d.enc_dim
            && self.encoder.input_dim == d.word_dim
            && self.encoder.vocab_size(&self.store) == d.vocab_size
            && self.decoders.iter().all(|p| {
                p.hidden_dim() == dec_h && p.gru.vocab_size(&self.store) == d.vocab_size
            })
            && self
                .classifier
                .as_ref()
                .is_none_or(|c| c.input_dim == d.enc_dim && c.n_styles == d.n_styles)
            && self
                .style_table
                .is_none_or(|e| self.store.get(e).shape() == [d.n_styles, d.style_dim]);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("stored parameters disagree with the model dimensions".into()))
        }
    }

    pub fn decoder_hidden(&self) -> usize {
        match self.kind {
            ModelKind::StyleEmbedding => self.dims.enc_dim + self.dims.style_dim,
            _ => self.dims.enc_dim,
        }
    }

    /// Parameters updated by the classifier phase.
    pub fn classifier_ids(&self) -> Vec<ParamId> {
        self.classifier.as_ref().map(ClassifierParams::ids).unwrap_or_default()
    }

    /// Parameters updated by the generator phase: encoder, decoders and style
    /// embeddings.
    pub fn generator_ids(&self) -> Vec<ParamId> {
        let mut ids = self.encoder.ids();
        for d in &self.decoders {
            ids.extend(d.ids());
        }
        ids.extend(self.style_table);
        ids
    }

    fn check_styles(&self, styles: &[usize]) -> Result<()> {
        for &s in styles {
            if s >= self.dims.n_styles {
                return Err(match self.kind {
                    ModelKind::MultiDecoder => Error::Config(format!("style {s} has no decoder")),
                    _ => Error::Index(format!("style {s} out of range for {} styles", self.dims.n_styles)),
                });
            }
        }
        Ok(())
    }

    /// Content vectors `c` for a batch of inputs, `B x enc_dim`.
    pub fn content(&self, g: &mut Graph, seqs: &[Vec<usize>]) -> Result<Var> {
        encode(g, &self.store, &self.encoder, seqs)
    }

    /// Generation loss of a batch given its content vectors: each example is
    /// reconstructed by its own style's decoder, or by the shared decoder
    /// conditioned on its style embedding.
    pub fn generation_loss(
        &self,
        g: &mut Graph,
        content: Var,
        batch: &StyledBatch,
    ) -> Result<(Var, Vec<Option<Var>>)> {
        self.check_styles(&batch.styles)?;
        let targets = batch.targets();
        match self.kind {
            ModelKind::AutoEncoder => {
                let l = teacher_forced_nll(g, &self.store, &self.decoders[0], content, &targets)?;
                Ok((l, vec![Some(l)]))
            }
            ModelKind::StyleEmbedding => {
                let init = self.style_conditioned(g, content, &batch.styles)?;
                let l = teacher_forced_nll(g, &self.store, &self.decoders[0], init, &targets)?;
                Ok((l, vec![Some(l)]))
            }
            ModelKind::MultiDecoder => {
                let mut per = vec![None; self.decoders.len()];
                for (k, dec) in self.decoders.iter().enumerate() {
                    let rows: Vec<usize> = (0..batch.len()).filter(|&i| batch.styles[i] == k).collect();
                    if rows.is_empty() {
                        continue;
                    }
                    let init = if rows.len() == batch.len() {
                        content
                    } else {
                        g.embedding(content, &rows)?
                    };
                    let sub: Vec<Vec<usize>> = rows.iter().map(|&i| targets[i].clone()).collect();
                    per[k] = Some(teacher_forced_nll(g, &self.store, dec, init, &sub)?);
                }
                let present: Vec<Var> = per.iter().flatten().copied().collect();
                let gen = match g.add_all(&present)? {
                    Some(v) => v,
                    None => g.constant(Tensor::scalar(0.0)),
                };
                Ok((gen, per))
            }
        }
    }

    /// `[c, E[style]]` rows for the shared style-embedding decoder.
    fn style_conditioned(&self, g: &mut Graph, content: Var, styles: &[usize]) -> Result<Var> {
        let table = self
            .style_table
            .ok_or_else(|| Error::Contract("model has no style embeddings".into()))?;
        let table = g.param(&self.store, table);
        let e = g.embedding(table, styles)?;
        g.concat(content, e)
    }

    /// All loss terms of the model on one batch, built in a single graph.
    /// The adversarial terms are isolated by stop-gradients, so one backward
    /// pass of `total` gives each parameter group only its own gradient.
    pub fn losses(&self, g: &mut Graph, batch: &StyledBatch) -> Result<LossVars> {
        let content = self.content(g, &batch.seqs)?;
        let (gen, gen_per_decoder) = self.generation_loss(g, content, batch)?;
        let (adv1, adv2) = match &self.classifier {
            Some(clf) => (
                Some(adv1_loss(g, &self.store, clf, content, &batch.styles)?),
                Some(adv2_loss(g, &self.store, clf, content)?),
            ),
            None => (None, None),
        };
        let mut total = gen;
        for term in [adv1, adv2].into_iter().flatten() {
            total = g.add(total, term)?;
        }
        Ok(LossVars {
            content,
            gen,
            gen_per_decoder,
            adv1,
            adv2,
            total,
        })
    }

    /// Decoder initial states for rewriting `seqs` into `target_style`.
    fn transfer_init(&self, seqs: &[Vec<usize>], target_style: usize) -> Result<(usize, Tensor)> {
        self.check_styles(&[target_style])?;
        let mut g = Graph::new();
        let c = self.content(&mut g, seqs)?;
        match self.kind {
            ModelKind::AutoEncoder => Ok((0, g.value(c).clone())),
            ModelKind::MultiDecoder => Ok((target_style, g.value(c).clone())),
            ModelKind::StyleEmbedding => {
                let styles = vec![target_style; seqs.len()];
                let init = self.style_conditioned(&mut g, c, &styles)?;
                Ok((0, g.value(init).clone()))
            }
        }
    }

    /// Greedy rewrite of each input toward `target_style`. The auto-encoder
    /// ignores the target and reconstructs.
    pub fn transfer(&self, seqs: &[Vec<usize>], target_style: usize) -> Result<Vec<Vec<usize>>> {
        if seqs.is_empty() {
            return Ok(Vec::new());
        }
        let (dec, init) = self.transfer_init(seqs, target_style)?;
        greedy_decode(&self.store, &self.decoders[dec], &init, DEFAULT_MAX_DECODE)
    }

    /// Summed reconstruction NLL and target-token count, styles routed as in
    /// training.
    pub fn reconstruction_nll(&self, batch: &StyledBatch) -> Result<(f64, usize)> {
        let mut g = Graph::new();
        let c = self.content(&mut g, &batch.seqs)?;
        let (gen, _) = self.generation_loss(&mut g, c, batch)?;
        Ok((g.scalar(gen), batch.target_tokens()))
    }
}

fn validate_dims(kind: ModelKind, d: &ModelDims) -> Result<()> {
    if d.vocab_size == 0 || d.word_dim == 0 || d.enc_dim == 0 {
        return Err(Error::Config("model dimensions must be positive".into()));
    }
    if d.n_styles < 1 {
        return Err(Error::Config("at least one style is required".into()));
    }
    if kind == ModelKind::StyleEmbedding && d.style_dim == 0 {
        return Err(Error::Config("style-embedding model needs a positive style dim".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
