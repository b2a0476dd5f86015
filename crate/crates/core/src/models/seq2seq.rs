use rand::Rng;

use super::gru::{gru_cell, GruParams};
use super::lookup;
use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::textpipe::{EOS_ID, GO_ID, MAX_TOKENS, PAD_ID};

/// Longest decoder target: the sentence cap plus `<eos>`.
pub const MAX_TARGET_LEN: usize = MAX_TOKENS + 1;

/// Greedy decoding stops after this many tokens when no `<eos>` appears.
pub const DEFAULT_MAX_DECODE: usize = MAX_TOKENS;

/// A decoder GRU with its own word embeddings and a `hidden -> V` softmax
/// projection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderParams {
    pub gru: GruParams,
    pub proj_w: ParamId,
    pub proj_b: ParamId,
}

impl DecoderParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        vocab_size: usize,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let gru = GruParams::init(store, prefix, vocab_size, input_dim, hidden_dim, rng);
        let proj_w = store.add_uniform(format!("{prefix}.proj_w"), &[vocab_size, hidden_dim], rng);
        let proj_b = store.add_zeros(format!("{prefix}.proj_b"), &[vocab_size]);
        DecoderParams { gru, proj_w, proj_b }
    }

    pub fn from_store(store: &ParamStore, prefix: &str) -> Result<Self> {
        let gru = GruParams::from_store(store, prefix)?;
        let proj_w = lookup(store, &format!("{prefix}.proj_w"))?;
        let proj_b = lookup(store, &format!("{prefix}.proj_b"))?;
        let v = gru.vocab_size(store);
        if store.get(proj_w).shape() != [v, gru.hidden_dim] || store.get(proj_b).shape() != [v] {
            return Err(Error::Dimension(format!("{prefix} projection does not match vocab {v}")));
        }
        Ok(DecoderParams { gru, proj_w, proj_b })
    }

    pub fn ids(&self) -> Vec<ParamId> {
        let mut ids = self.gru.ids();
        ids.extend([self.proj_w, self.proj_b]);
        ids
    }

    pub fn hidden_dim(&self) -> usize {
        self.gru.hidden_dim
    }

    /// Softmax over the vocabulary for each row of `s`.
    pub fn output_probs(&self, g: &mut Graph, store: &ParamStore, s: Var) -> Result<Var> {
        let w = g.param(store, self.proj_w);
        let b = g.param(store, self.proj_b);
        let logits = g.matmul_bt(s, w)?;
        let logits = g.add_bias(logits, b)?;
        g.softmax(logits)
    }
}

fn check_rows(g: &Graph, v: Var, rows: usize, width: usize, what: &str) -> Result<()> {
    let shape = g.value(v).shape();
    if shape != [rows, width] {
        return Err(Error::Dimension(format!(
            "{what}: got {shape:?}, expected [{rows}, {width}]"
        )));
    }
    Ok(())
}

/// Final GRU state for each sequence, folded from a zero state. Shorter
/// sequences keep their last state while longer ones continue.
pub fn encode(g: &mut Graph, store: &ParamStore, p: &GruParams, seqs: &[Vec<usize>]) -> Result<Var> {
    if seqs.is_empty() {
        return Err(Error::Contract("encode needs at least one sequence".into()));
    }
    if let Some(i) = seqs.iter().position(Vec::is_empty) {
        return Err(Error::Contract(format!("encode: sequence {i} is empty")));
    }
    let b = seqs.len();
    let max_len = seqs.iter().map(Vec::len).max().unwrap_or(0);
    let mut s = g.constant(Tensor::zeros(&[b, p.hidden_dim]));
    for t in 0..max_len {
        let ids: Vec<usize> = seqs.iter().map(|q| q.get(t).copied().unwrap_or(PAD_ID)).collect();
        let next = gru_cell(g, store, p, s, &ids)?;
        s = if seqs.iter().all(|q| t < q.len()) {
            next
        } else {
            let active: Vec<bool> = seqs.iter().map(|q| t < q.len()).collect();
            g.select_rows(&active, next, s)?
        };
    }
    Ok(s)
}

/// Summed teacher-forced negative log-likelihood of `targets` (each ending in
/// `<eos>`), starting the decoder from the rows of `init` and feeding `<go>`
/// first. Steps past a target's end contribute nothing.
pub fn teacher_forced_nll(
    g: &mut Graph,
    store: &ParamStore,
    dec: &DecoderParams,
    init: Var,
    targets: &[Vec<usize>],
) -> Result<Var> {
    check_rows(g, init, targets.len(), dec.hidden_dim(), "decoder initial state")?;
    for (i, t) in targets.iter().enumerate() {
        if t.is_empty() {
            return Err(Error::Contract(format!("target {i} is empty")));
        }
        if t.len() > MAX_TARGET_LEN {
            return Err(Error::Contract(format!(
                "target {i} has {} tokens, limit is {MAX_TARGET_LEN}",
                t.len()
            )));
        }
    }
    let max_len = targets.iter().map(Vec::len).max().unwrap_or(0);
    let mut s = init;
    let mut terms = Vec::with_capacity(max_len);
    for t in 0..max_len {
        let inputs: Vec<usize> = targets
            .iter()
            .map(|y| match t {
                0 => GO_ID,
                _ => y.get(t - 1).copied().unwrap_or(PAD_ID),
            })
            .collect();
        s = gru_cell(g, store, &dec.gru, s, &inputs)?;
        let probs = dec.output_probs(g, store, s)?;
        let labels: Vec<usize> = targets.iter().map(|y| y.get(t).copied().unwrap_or(PAD_ID)).collect();
        let weights: Vec<f64> = targets.iter().map(|y| if t < y.len() { 1.0 } else { 0.0 }).collect();
        terms.push(g.cross_entropy_weighted(probs, &labels, &weights)?);
    }
    match g.add_all(&terms)? {
        Some(v) => Ok(v),
        None => Ok(g.constant(Tensor::scalar(0.0))),
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Greedy argmax decoding from each row of `init`, feeding predictions back.
/// Output excludes `<eos>` and has at most `max_len` tokens.
pub fn greedy_decode(
    store: &ParamStore,
    dec: &DecoderParams,
    init: &Tensor,
    max_len: usize,
) -> Result<Vec<Vec<usize>>> {
    let (b, h) = init.rows_cols();
    if init.rank() != 2 || h != dec.hidden_dim() {
        return Err(Error::Dimension(format!(
            "decoder initial state {:?}, hidden {}",
            init.shape(),
            dec.hidden_dim()
        )));
    }
    let mut out = vec![Vec::new(); b];
    let mut done = vec![false; b];
    let mut prev = vec![GO_ID; b];
    let mut state = init.clone();
    for _ in 0..max_len {
        if done.iter().all(|&d| d) {
            break;
        }
        let mut g = Graph::new();
        let s0 = g.constant(state);
        let s = gru_cell(&mut g, store, &dec.gru, s0, &prev)?;
        let probs = dec.output_probs(&mut g, store, s)?;
        let pv = g.value(probs);
        let v = pv.rows_cols().1;
        for i in 0..b {
            let tok = argmax(&pv.data()[i * v..(i + 1) * v]);
            prev[i] = tok;
            if done[i] {
                continue;
            }
            if tok == EOS_ID {
                done[i] = true;
            } else {
                out[i].push(tok);
            }
        }
        state = g.value(s).clone();
    }
    Ok(out)
}
