use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamId, ParamStore, Var};

/// One GRU layer and the word-embedding matrix feeding it.
///
/// Weight matrices are stored `hidden x input` / `hidden x hidden` and applied
/// to batch rows, so `W . x` becomes `x . W^T` on a `B x input` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GruParams {
    pub embedding: ParamId,
    pub w: ParamId,
    pub u: ParamId,
    pub w_r: ParamId,
    pub u_r: ParamId,
    pub w_z: ParamId,
    pub u_z: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl GruParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        vocab_size: usize,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let emb = store.add_uniform(format!("{prefix}.emb"), &[vocab_size, input_dim], rng);
        let mut mat = |name: &str, cols: usize| {
            store.add_uniform(format!("{prefix}.{name}"), &[hidden_dim, cols], rng)
        };
        GruParams {
            embedding: emb,
            w: mat("w", input_dim),
            u: mat("u", hidden_dim),
            w_r: mat("w_r", input_dim),
            u_r: mat("u_r", hidden_dim),
            w_z: mat("w_z", input_dim),
            u_z: mat("u_z", hidden_dim),
            input_dim,
            hidden_dim,
        }
    }

    /// Looks up the parameters by name in a loaded store.
    pub fn from_store(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |name: &str| {
            store
                .find(&format!("{prefix}.{name}"))
                .ok_or_else(|| Error::Data(format!("missing parameter {prefix}.{name}")))
        };
        let embedding = get("emb")?;
        let w = get("w")?;
        let p = GruParams {
            embedding,
            w,
            u: get("u")?,
            w_r: get("w_r")?,
            u_r: get("u_r")?,
            w_z: get("w_z")?,
            u_z: get("u_z")?,
            input_dim: store.get(embedding).shape()[1],
            hidden_dim: store.get(w).shape()[0],
        };
        p.validate(store)?;
        Ok(p)
    }

    pub fn ids(&self) -> Vec<ParamId> {
        vec![self.embedding, self.w, self.u, self.w_r, self.u_r, self.w_z, self.u_z]
    }

    pub fn vocab_size(&self, store: &ParamStore) -> usize {
        store.get(self.embedding).shape()[0]
    }

    pub fn validate(&self, store: &ParamStore) -> Result<()> {
        let (i, h) = (self.input_dim, self.hidden_dim);
        let want = [
            (self.w, [h, i]),
            (self.u, [h, h]),
            (self.w_r, [h, i]),
            (self.u_r, [h, h]),
            (self.w_z, [h, i]),
            (self.u_z, [h, h]),
        ];
        for (id, shape) in want {
            if store.get(id).shape() != shape {
                return Err(Error::Dimension(format!(
                    "{} is {:?}, expected {:?}",
                    store.name(id),
                    store.get(id).shape(),
                    shape
                )));
            }
        }
        if store.get(self.embedding).shape()[1] != i {
            return Err(Error::Dimension(format!(
                "{} width differs from GRU input {i}",
                store.name(self.embedding)
            )));
        }
        Ok(())
    }
}

/// One GRU step for a batch: `s_prev` is `B x hidden`, `ids` holds the
/// previous token of each row.
///
/// ```text
/// r = sigmoid(W_r E[x] + U_r s_prev)
/// z = sigmoid(W_z E[x] + U_z s_prev)
/// h = tanh(W E[x] + r * (U s_prev))
/// s = z * h + (1 - z) * s_prev
/// ```
pub fn gru_cell(g: &mut Graph, store: &ParamStore, p: &GruParams, s_prev: Var, ids: &[usize]) -> Result<Var> {
    let shape = g.value(s_prev).shape();
    if shape.len() != 2 || shape[1] != p.hidden_dim || shape[0] != ids.len() {
        return Err(Error::Dimension(format!(
            "GRU state {:?} for {} tokens and hidden {}",
            shape,
            ids.len(),
            p.hidden_dim
        )));
    }
    let table = g.param(store, p.embedding);
    let x = g.embedding(table, ids)?;

    let gate = |g: &mut Graph, w: ParamId, u: ParamId| -> Result<Var> {
        let wv = g.param(store, w);
        let uv = g.param(store, u);
        let a = g.matmul_bt(x, wv)?;
        let b = g.matmul_bt(s_prev, uv)?;
        let sum = g.add(a, b)?;
        Ok(g.sigmoid(sum))
    };
    let r = gate(g, p.w_r, p.u_r)?;
    let z = gate(g, p.w_z, p.u_z)?;

    let wv = g.param(store, p.w);
    let uv = g.param(store, p.u);
    let wx = g.matmul_bt(x, wv)?;
    let us = g.matmul_bt(s_prev, uv)?;
    let gated = g.mul(r, us)?;
    let pre = g.add(wx, gated)?;
    let h = g.tanh(pre);

    let zh = g.mul(z, h)?;
    let keep = g.one_minus(z);
    let carried = g.mul(keep, s_prev)?;
    g.add(zh, carried)
}
