use rand::Rng;

use super::lookup;
use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::textpipe::PAD_ID;

/// Weights of one LSTM gate: input map, recurrent map, bias.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LstmGate {
    pub w: ParamId,
    pub u: ParamId,
    pub b: ParamId,
}

/// Word embeddings, an LSTM layer and a one-unit sigmoid readout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LstmParams {
    pub embedding: ParamId,
    pub input: LstmGate,
    pub forget: LstmGate,
    pub output: LstmGate,
    pub candidate: LstmGate,
    pub readout_w: ParamId,
    pub readout_b: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

const GATES: [&str; 4] = ["i", "f", "o", "c"];

impl LstmParams {
    /// Uniform weights, zero biases.
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        vocab_size: usize,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let embedding = store.add_uniform(format!("{prefix}.emb"), &[vocab_size, input_dim], rng);
        let mut gates = GATES.iter().map(|g| LstmGate {
            w: store.add_uniform(format!("{prefix}.w_{g}"), &[hidden_dim, input_dim], rng),
            u: store.add_uniform(format!("{prefix}.u_{g}"), &[hidden_dim, hidden_dim], rng),
            b: store.add_zeros(format!("{prefix}.b_{g}"), &[hidden_dim]),
        });
        let (input, forget, output, candidate) = (
            gates.next().unwrap(),
            gates.next().unwrap(),
            gates.next().unwrap(),
            gates.next().unwrap(),
        );
        drop(gates);
        LstmParams {
            embedding,
            input,
            forget,
            output,
            candidate,
            readout_w: store.add_uniform(format!("{prefix}.readout_w"), &[1, hidden_dim], rng),
            readout_b: store.add_zeros(format!("{prefix}.readout_b"), &[1]),
            input_dim,
            hidden_dim,
        }
    }

    pub fn from_store(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |n: &str| lookup(store, &format!("{prefix}.{n}"));
        let gate = |g: &str| -> Result<LstmGate> {
            Ok(LstmGate {
                w: get(&format!("w_{g}"))?,
                u: get(&format!("u_{g}"))?,
                b: get(&format!("b_{g}"))?,
            })
        };
        let embedding = get("emb")?;
        let readout_w = get("readout_w")?;
        let p = LstmParams {
            embedding,
            input: gate("i")?,
            forget: gate("f")?,
            output: gate("o")?,
            candidate: gate("c")?,
            readout_w,
            readout_b: get("readout_b")?,
            input_dim: store.get(embedding).shape()[1],
            hidden_dim: store.get(readout_w).shape()[1],
        };
        let (i, h) = (p.input_dim, p.hidden_dim);
        for gate in p.gates() {
            if store.get(gate.w).shape() != [h, i]
                || store.get(gate.u).shape() != [h, h]
                || store.get(gate.b).shape() != [h]
            {
                return Err(Error::Dimension(format!("{prefix} gate shapes are inconsistent")));
            }
        }
        Ok(p)
    }

    fn gates(&self) -> [&LstmGate; 4] {
        [&self.input, &self.forget, &self.output, &self.candidate]
    }

    pub fn ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.embedding];
        for g in self.gates() {
            ids.extend([g.w, g.u, g.b]);
        }
        ids.extend([self.readout_w, self.readout_b]);
        ids
    }
}

/// One LSTM step for a batch.
///
/// ```text
/// i = sigmoid(W_i x + U_i h + b_i)    f = sigmoid(W_f x + U_f h + b_f)
/// o = sigmoid(W_o x + U_o h + b_o)    g = tanh(W_c x + U_c h + b_c)
/// cell' = f * cell + i * g            h' = o * tanh(cell')
/// ```
pub fn lstm_cell(
    g: &mut Graph,
    store: &ParamStore,
    p: &LstmParams,
    h: Var,
    cell: Var,
    ids: &[usize],
) -> Result<(Var, Var)> {
    for v in [h, cell] {
        if g.value(v).shape() != [ids.len(), p.hidden_dim] {
            return Err(Error::Dimension(format!(
                "LSTM state {:?} for {} tokens and hidden {}",
                g.value(v).shape(),
                ids.len(),
                p.hidden_dim
            )));
        }
    }
    let table = g.param(store, p.embedding);
    let x = g.embedding(table, ids)?;
    let pre = |g: &mut Graph, gate: &LstmGate| -> Result<Var> {
        let w = g.param(store, gate.w);
        let u = g.param(store, gate.u);
        let b = g.param(store, gate.b);
        let a = g.matmul_bt(x, w)?;
        let r = g.matmul_bt(h, u)?;
        let s = g.add(a, r)?;
        g.add_bias(s, b)
    };
    let i = pre(g, &p.input)?;
    let i = g.sigmoid(i);
    let f = pre(g, &p.forget)?;
    let f = g.sigmoid(f);
    let o = pre(g, &p.output)?;
    let o = g.sigmoid(o);
    let cand = pre(g, &p.candidate)?;
    let cand = g.tanh(cand);
    let kept = g.mul(f, cell)?;
    let written = g.mul(i, cand)?;
    let cell = g.add(kept, written)?;
    let squashed = g.tanh(cell);
    let h = g.mul(o, squashed)?;
    Ok((h, cell))
}

/// Sigmoid readout of each sequence's final hidden state, as a `B x 1`
/// column of scores in (0, 1).
pub fn lstm_scores(g: &mut Graph, store: &ParamStore, p: &LstmParams, seqs: &[Vec<usize>]) -> Result<Var> {
    if seqs.is_empty() || seqs.iter().any(Vec::is_empty) {
        return Err(Error::Contract("LSTM scoring needs nonempty sequences".into()));
    }
    let b = seqs.len();
    let max_len = seqs.iter().map(Vec::len).max().unwrap_or(0);
    let mut h = g.constant(Tensor::zeros(&[b, p.hidden_dim]));
    let mut cell = g.constant(Tensor::zeros(&[b, p.hidden_dim]));
    for t in 0..max_len {
        let ids: Vec<usize> = seqs.iter().map(|q| q.get(t).copied().unwrap_or(PAD_ID)).collect();
        let (nh, nc) = lstm_cell(g, store, p, h, cell, &ids)?;
        if seqs.iter().all(|q| t < q.len()) {
            (h, cell) = (nh, nc);
        } else {
            let active: Vec<bool> = seqs.iter().map(|q| t < q.len()).collect();
            h = g.select_rows(&active, nh, h)?;
            cell = g.select_rows(&active, nc, cell)?;
        }
    }
    let w = g.param(store, p.readout_w);
    let bias = g.param(store, p.readout_b);
    let z = g.matmul_bt(h, w)?;
    let z = g.add_bias(z, bias)?;
    Ok(g.sigmoid(z))
}

/// Binary cross-entropy of the scores against 0/1 labels, summed.
pub fn lstm_bce(g: &mut Graph, scores: Var, labels: &[usize]) -> Result<Var> {
    let neg = g.one_minus(scores);
    let probs = g.concat(neg, scores)?;
    g.cross_entropy(probs, labels)
}
