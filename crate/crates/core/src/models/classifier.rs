use rand::Rng;

use super::lookup;
use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamId, ParamStore, Var};

/// Adversarial style classifier on the content vector: one tanh hidden layer
/// as wide as its input, then N style logits and a softmax.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassifierParams {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub input_dim: usize,
    pub n_styles: usize,
}

impl ClassifierParams {
    pub fn init<R: Rng>(store: &mut ParamStore, prefix: &str, input_dim: usize, n_styles: usize, rng: &mut R) -> Self {
        ClassifierParams {
            w1: store.add_uniform(format!("{prefix}.w1"), &[input_dim, input_dim], rng),
            b1: store.add_zeros(format!("{prefix}.b1"), &[input_dim]),
            w2: store.add_uniform(format!("{prefix}.w2"), &[n_styles, input_dim], rng),
            b2: store.add_zeros(format!("{prefix}.b2"), &[n_styles]),
            input_dim,
            n_styles,
        }
    }

    pub fn from_store(store: &ParamStore, prefix: &str) -> Result<Self> {
        let w1 = lookup(store, &format!("{prefix}.w1"))?;
        let w2 = lookup(store, &format!("{prefix}.w2"))?;
        let p = ClassifierParams {
            w1,
            b1: lookup(store, &format!("{prefix}.b1"))?,
            w2,
            b2: lookup(store, &format!("{prefix}.b2"))?,
            input_dim: store.get(w1).shape()[0],
            n_styles: store.get(w2).shape()[0],
        };
        let (h, n) = (p.input_dim, p.n_styles);
        if store.get(p.w1).shape() != [h, h]
            || store.get(p.b1).shape() != [h]
            || store.get(p.w2).shape() != [n, h]
            || store.get(p.b2).shape() != [n]
        {
            return Err(Error::Dimension(format!("{prefix} shapes are inconsistent")));
        }
        Ok(p)
    }

    pub fn ids(&self) -> Vec<ParamId> {
        vec![self.w1, self.b1, self.w2, self.b2]
    }

    /// `softmax(W2 tanh(W1 c + b1) + b2)` per row of `c`. With `frozen` the
    /// classifier weights enter as constants.
    pub fn predict(&self, g: &mut Graph, store: &ParamStore, c: Var, frozen: bool) -> Result<Var> {
        let read = |g: &mut Graph, id| if frozen { g.frozen(store, id) } else { g.param(store, id) };
        let w1 = read(g, self.w1);
        let b1 = read(g, self.b1);
        let w2 = read(g, self.w2);
        let b2 = read(g, self.b2);
        let hidden = g.matmul_bt(c, w1)?;
        let hidden = g.add_bias(hidden, b1)?;
        let hidden = g.tanh(hidden);
        let logits = g.matmul_bt(hidden, w2)?;
        let logits = g.add_bias(logits, b2)?;
        g.softmax(logits)
    }
}

/// Classifier loss `-sum_i ln p(l_i | c_i)`. The contents are detached, so
/// only the classifier receives gradient.
pub fn adv1_loss(g: &mut Graph, store: &ParamStore, clf: &ClassifierParams, c: Var, labels: &[usize]) -> Result<Var> {
    let c = g.detach(c);
    let probs = clf.predict(g, store, c, false)?;
    g.cross_entropy(probs, labels)
}

/// Negative summed entropy of the classifier's predictions. The classifier is
/// frozen, so only the encoder receives gradient.
pub fn adv2_loss(g: &mut Graph, store: &ParamStore, clf: &ClassifierParams, c: Var) -> Result<Var> {
    let probs = clf.predict(g, store, c, true)?;
    let h = g.entropy(probs);
    Ok(g.scale(h, -1.0))
}
