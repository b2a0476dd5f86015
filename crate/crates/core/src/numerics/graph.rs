use std::collections::HashMap;
use std::sync::Arc;

use super::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Probabilities below this are clamped before taking a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulBt(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Scale(Var, f64),
    Act(Var, Activation),
    Softmax(Var),
    CrossEntropy {
        probs: Var,
        labels: Vec<usize>,
        weights: Vec<f64>,
    },
    Entropy(Var),
    Concat(Var, Var),
    Embedding {
        table: Var,
        ids: Vec<usize>,
    },
    SelectRows {
        take_new: Vec<bool>,
        new: Var,
        old: Var,
    },
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    value: Arc<Tensor>,
    op: Op,
    requires_grad: bool,
    param: Option<ParamId>,
}

/// Eagerly evaluated tape for reverse-mode differentiation.
///
/// Every operation computes its value immediately and appends a node, so the
/// node order is a topological order. [`Graph::backward`] walks it once in
/// reverse and may be called only once per graph.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    frozen: HashMap<ParamId, Var>,
    backward_done: bool,
}

/// Result of a backward pass.
#[derive(Debug)]
pub struct Gradients {
    nodes: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
    params: HashMap<ParamId, Tensor>,
}

impl Gradients {
    /// Gradient with respect to any node, if one reached it.
    pub fn wrt(&self, v: Var) -> Option<Tensor> {
        self.nodes[v.0]
            .as_ref()
            .map(|g| Tensor::new(self.shapes[v.0].clone(), g.clone()).expect("shape"))
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(&id)
    }

    pub fn params(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.params.iter().map(|(k, v)| (*k, v))
    }
}

fn dim_err(what: &str, a: &[usize], b: &[usize]) -> Error {
    Error::Dimension(format!("{what}: {a:?} vs {b:?}"))
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Arc::new(value),
            op,
            requires_grad,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A differentiable input that is not a stored parameter.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Leaf reading a stored parameter; the same id always maps to the same node
    /// so gradients from every use accumulate there.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: store.shared(id),
            op: Op::Leaf,
            requires_grad: true,
            param: Some(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(id, v);
        v
    }

    /// Parameter read as a constant: no gradient is ever recorded for it.
    pub fn frozen(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.frozen.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: store.shared(id),
            op: Op::Leaf,
            requires_grad: false,
            param: None,
        });
        let v = Var(self.nodes.len() - 1);
        self.frozen.insert(id, v);
        v
    }

    /// Stop-gradient: same value, no gradient flows back through it.
    pub fn detach(&mut self, x: Var) -> Var {
        let value = Arc::clone(&self.nodes[x.0].value);
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// `a[m x k] . b[k x n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(dim_err("matmul", ta.shape(), tb.shape()));
        }
        let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let (da, db) = (ta.data(), tb.data());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let av = da[i * k + p];
                if av == 0.0 {
                    continue;
                }
                for (o, &bv) in orow.iter_mut().zip(&db[p * n..(p + 1) * n]) {
                    *o += av * bv;
                }
            }
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), rg))
    }

    /// `a[m x k] . w[n x k]^T`, the layout used for weight matrices stored as
    /// `out x in`.
    pub fn matmul_bt(&mut self, a: Var, w: Var) -> Result<Var> {
        let (ta, tw) = (self.value(a), self.value(w));
        if ta.rank() != 2 || tw.rank() != 2 || ta.shape()[1] != tw.shape()[1] {
            return Err(dim_err("matmul_bt", ta.shape(), tw.shape()));
        }
        let (m, k, n) = (ta.shape()[0], ta.shape()[1], tw.shape()[0]);
        let (da, dw) = (ta.data(), tw.data());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &da[i * k..(i + 1) * k];
            for j in 0..n {
                let wrow = &dw[j * k..(j + 1) * k];
                out[i * n + j] = arow.iter().zip(wrow).map(|(x, y)| x * y).sum();
            }
        }
        let rg = self.rg(a) || self.rg(w);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMulBt(a, w), rg))
    }

    fn same_shape(&self, what: &str, a: Var, b: Var) -> Result<()> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(dim_err(what, ta.shape(), tb.shape()));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let t = Tensor::new(ta.shape().to_vec(), data).expect("shape");
        let rg = self.rg(a) || self.rg(b);
        self.push(t, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        Ok(self.zip_with(a, b, Op::Add(a, b), |x, y| x + y))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        Ok(self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    /// Adds a bias vector to every row.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(bias));
        let (r, c) = tx.rows_cols();
        if tb.numel() != c || tx.rank() == 0 {
            return Err(dim_err("add_bias", tx.shape(), tb.shape()));
        }
        let mut data = tx.data().to_vec();
        for i in 0..r {
            for (v, &b) in data[i * c..(i + 1) * c].iter_mut().zip(tb.data()) {
                *v += b;
            }
        }
        let t = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x) || self.rg(bias);
        Ok(self.push(t, Op::AddBias(x, bias), rg))
    }

    /// `1 - x`.
    pub fn one_minus(&mut self, x: Var) -> Var {
        let t = self.value(x).map(|v| 1.0 - v);
        let rg = self.rg(x);
        self.push(t, Op::OneMinus(x), rg)
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let t = self.value(x).map(|v| s * v);
        let rg = self.rg(x);
        self.push(t, Op::Scale(x, s), rg)
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Var {
        let t = match kind {
            Activation::Tanh => self.value(x).map(f64::tanh),
            Activation::Sigmoid => self.value(x).map(sigmoid),
        };
        let rg = self.rg(x);
        self.push(t, Op::Act(x, kind), rg)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Tanh)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Sigmoid)
    }

    /// Row-wise softmax (a vector is a single row).
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let tx = self.value(x);
        let (r, c) = tx.rows_cols();
        if c == 0 || tx.rank() == 0 {
            return Err(Error::Dimension("softmax over an empty axis".into()));
        }
        let mut data = tx.data().to_vec();
        for row in data.chunks_mut(c).take(r) {
            softmax_in_place(row);
        }
        let t = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x);
        Ok(self.push(t, Op::Softmax(x), rg))
    }

    /// `sum_i weights[i] * -ln(max(probs[i, labels[i]], PROB_FLOOR))` as a scalar.
    /// Rows with zero weight are skipped entirely.
    pub fn cross_entropy_weighted(
        &mut self,
        probs: Var,
        labels: &[usize],
        weights: &[f64],
    ) -> Result<Var> {
        let tp = self.value(probs);
        let (r, c) = tp.rows_cols();
        if labels.len() != r || weights.len() != r {
            return Err(Error::Dimension(format!(
                "cross_entropy: {r} rows, {} labels, {} weights",
                labels.len(),
                weights.len()
            )));
        }
        let mut loss = 0.0;
        for (i, (&l, &w)) in labels.iter().zip(weights).enumerate() {
            if l >= c {
                return Err(Error::Index(format!("label {l} out of range for {c} classes")));
            }
            if w != 0.0 {
                loss += w * -tp.data()[i * c + l].max(PROB_FLOOR).ln();
            }
        }
        let rg = self.rg(probs);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                probs,
                labels: labels.to_vec(),
                weights: weights.to_vec(),
            },
            rg,
        ))
    }

    /// Summed negative log-likelihood of one label per row.
    pub fn cross_entropy(&mut self, probs: Var, labels: &[usize]) -> Result<Var> {
        let w = vec![1.0; labels.len()];
        self.cross_entropy_weighted(probs, labels, &w)
    }

    /// Sum over rows of `H(p) = -sum_j p_j ln p_j`, with `0 ln 0 = 0`.
    pub fn entropy(&mut self, probs: Var) -> Var {
        let h: f64 = self
            .value(probs)
            .data()
            .iter()
            .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
            .sum();
        let rg = self.rg(probs);
        self.push(Tensor::scalar(h), Op::Entropy(probs), rg)
    }

    /// Concatenation along the feature (last) axis, row by row.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != tb.rank() || ta.rank() == 0 || ta.rank() > 2 {
            return Err(dim_err("concat rank", ta.shape(), tb.shape()));
        }
        let ((ra, ca), (rb, cb)) = (ta.rows_cols(), tb.rows_cols());
        if ra != rb {
            return Err(dim_err("concat rows", ta.shape(), tb.shape()));
        }
        let mut data = Vec::with_capacity(ra * (ca + cb));
        for i in 0..ra {
            data.extend_from_slice(&ta.data()[i * ca..(i + 1) * ca]);
            data.extend_from_slice(&tb.data()[i * cb..(i + 1) * cb]);
        }
        let shape = if ta.rank() == 1 {
            vec![ca + cb]
        } else {
            vec![ra, ca + cb]
        };
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(shape, data)?, Op::Concat(a, b), rg))
    }

    /// Gathers rows of `table[V x d]`; the result is `ids.len() x d`.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let tt = self.value(table);
        if tt.rank() != 2 {
            return Err(Error::Dimension(format!(
                "embedding table must be rank 2, got {:?}",
                tt.shape()
            )));
        }
        let (v, d) = (tt.shape()[0], tt.shape()[1]);
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= v {
                return Err(Error::Index(format!("token id {id} out of range for {v} rows")));
            }
            data.extend_from_slice(&tt.data()[id * d..(id + 1) * d]);
        }
        let rg = self.rg(table);
        Ok(self.push(
            Tensor::new(vec![ids.len(), d], data)?,
            Op::Embedding {
                table,
                ids: ids.to_vec(),
            },
            rg,
        ))
    }

    /// Row `i` comes from `new` where `take_new[i]`, otherwise from `old`.
    pub fn select_rows(&mut self, take_new: &[bool], new: Var, old: Var) -> Result<Var> {
        self.same_shape("select_rows", new, old)?;
        let (tn, to) = (self.value(new), self.value(old));
        let (r, c) = tn.rows_cols();
        if take_new.len() != r {
            return Err(Error::Dimension(format!(
                "select_rows: {} flags for {r} rows",
                take_new.len()
            )));
        }
        let mut data = Vec::with_capacity(r * c);
        for (i, &t) in take_new.iter().enumerate() {
            let src = if t { tn } else { to };
            data.extend_from_slice(&src.data()[i * c..(i + 1) * c]);
        }
        let t = Tensor::new(tn.shape().to_vec(), data)?;
        let rg = self.rg(new) || self.rg(old);
        Ok(self.push(
            t,
            Op::SelectRows {
                take_new: take_new.to_vec(),
                new,
                old,
            },
            rg,
        ))
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    /// Left-to-right sum of scalars; `None` when `terms` is empty.
    pub fn add_all(&mut self, terms: &[Var]) -> Result<Option<Var>> {
        let mut iter = terms.iter();
        let Some(&first) = iter.next() else {
            return Ok(None);
        };
        let mut acc = first;
        for &t in iter {
            acc = self.add(acc, t)?;
        }
        Ok(Some(acc))
    }

    /// Reverse pass from a scalar `loss`. A graph can be differentiated once.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.value(loss).numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        if self.backward_done {
            return Err(Error::Contract(
                "backward already ran on this graph; build a new graph".into(),
            ));
        }
        self.backward_done = true;

        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if node.requires_grad {
                self.propagate(&node.op, &node.value, &g, &mut grads);
            }
            grads[i] = Some(g);
        }

        let mut params = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let (Some(id), Some(g)) = (node.param, grads[i].as_ref()) {
                params.insert(id, Tensor::new(node.value.shape().to_vec(), g.clone())?);
            }
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients {
            nodes: grads,
            shapes,
            params,
        })
    }

    fn propagate(&self, op: &Op, out: &Tensor, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let nodes = &self.nodes;
        // Buffer for input `v`, allocated on first use; None if `v` takes no gradient.
        let buf = |grads: &mut [Option<Vec<f64>>], v: Var| -> bool {
            if !nodes[v.0].requires_grad {
                return false;
            }
            if grads[v.0].is_none() {
                grads[v.0] = Some(vec![0.0; nodes[v.0].value.numel()]);
            }
            true
        };
        let val = |v: Var| nodes[v.0].value.as_ref();

        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                if buf(grads, *a) {
                    let da = grads[a.0].as_mut().unwrap();
                    let bd = tb.data();
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &bd[p * n..(p + 1) * n];
                            da[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                }
                if buf(grads, *b) {
                    let db = grads[b.0].as_mut().unwrap();
                    let ad = ta.data();
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let av = ad[i * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for (d, &gv) in db[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *d += av * gv;
                            }
                        }
                    }
                }
            }
            Op::MatMulBt(a, w) => {
                let (ta, tw) = (val(*a), val(*w));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tw.shape()[0]);
                if buf(grads, *a) {
                    let da = grads[a.0].as_mut().unwrap();
                    let wd = tw.data();
                    for i in 0..m {
                        let arow = &mut da[i * k..(i + 1) * k];
                        for j in 0..n {
                            let gv = g[i * n + j];
                            if gv == 0.0 {
                                continue;
                            }
                            for (d, &wv) in arow.iter_mut().zip(&wd[j * k..(j + 1) * k]) {
                                *d += gv * wv;
                            }
                        }
                    }
                }
                if buf(grads, *w) {
                    let dw = grads[w.0].as_mut().unwrap();
                    let ad = ta.data();
                    for i in 0..m {
                        let arow = &ad[i * k..(i + 1) * k];
                        for j in 0..n {
                            let gv = g[i * n + j];
                            if gv == 0.0 {
                                continue;
                            }
                            for (d, &av) in dw[j * k..(j + 1) * k].iter_mut().zip(arow) {
                                *d += gv * av;
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    if buf(grads, *v) {
                        for (d, &gv) in grads[v.0].as_mut().unwrap().iter_mut().zip(g) {
                            *d += gv;
                        }
                    }
                }
            }
            Op::AddBias(x, bias) => {
                if buf(grads, *x) {
                    for (d, &gv) in grads[x.0].as_mut().unwrap().iter_mut().zip(g) {
                        *d += gv;
                    }
                }
                if buf(grads, *bias) {
                    let c = val(*bias).numel();
                    let db = grads[bias.0].as_mut().unwrap();
                    for row in g.chunks(c) {
                        for (d, &gv) in db.iter_mut().zip(row) {
                            *d += gv;
                        }
                    }
                }
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                if buf(grads, *a) {
                    let da = grads[a.0].as_mut().unwrap();
                    for ((d, &gv), &bv) in da.iter_mut().zip(g).zip(tb.data()) {
                        *d += gv * bv;
                    }
                }
                if buf(grads, *b) {
                    let db = grads[b.0].as_mut().unwrap();
                    for ((d, &gv), &av) in db.iter_mut().zip(g).zip(ta.data()) {
                        *d += gv * av;
                    }
                }
            }
            Op::OneMinus(x) => {
                if buf(grads, *x) {
                    for (d, &gv) in grads[x.0].as_mut().unwrap().iter_mut().zip(g) {
                        *d -= gv;
                    }
                }
            }
            Op::Scale(x, s) => {
                if buf(grads, *x) {
                    for (d, &gv) in grads[x.0].as_mut().unwrap().iter_mut().zip(g) {
                        *d += s * gv;
                    }
                }
            }
            Op::Act(x, kind) => {
                if buf(grads, *x) {
                    let dx = grads[x.0].as_mut().unwrap();
                    match kind {
                        Activation::Tanh => {
                            for ((d, &gv), &y) in dx.iter_mut().zip(g).zip(out.data()) {
                                *d += gv * (1.0 - y * y);
                            }
                        }
                        Activation::Sigmoid => {
                            for ((d, &gv), &y) in dx.iter_mut().zip(g).zip(out.data()) {
                                *d += gv * y * (1.0 - y);
                            }
                        }
                    }
                }
            }
            Op::Softmax(x) => {
                if buf(grads, *x) {
                    let (_, c) = out.rows_cols();
                    let dx = grads[x.0].as_mut().unwrap();
                    for ((drow, grow), yrow) in
                        dx.chunks_mut(c).zip(g.chunks(c)).zip(out.data().chunks(c))
                    {
                        let dot: f64 = grow.iter().zip(yrow).map(|(a, b)| a * b).sum();
                        for ((d, &gv), &y) in drow.iter_mut().zip(grow).zip(yrow) {
                            *d += y * (gv - dot);
                        }
                    }
                }
            }
            Op::CrossEntropy {
                probs,
                labels,
                weights,
            } => {
                if buf(grads, *probs) {
                    let tp = val(*probs);
                    let (_, c) = tp.rows_cols();
                    let dp = grads[probs.0].as_mut().unwrap();
                    for (i, (&l, &w)) in labels.iter().zip(weights).enumerate() {
                        let p = tp.data()[i * c + l];
                        if w != 0.0 && p > PROB_FLOOR {
                            dp[i * c + l] -= g[0] * w / p;
                        }
                    }
                }
            }
            Op::Entropy(probs) => {
                if buf(grads, *probs) {
                    let tp = val(*probs);
                    let dp = grads[probs.0].as_mut().unwrap();
                    for (d, &p) in dp.iter_mut().zip(tp.data()) {
                        *d -= g[0] * (p.max(PROB_FLOOR).ln() + 1.0);
                    }
                }
            }
            Op::Concat(a, b) => {
                let ((r, ca), (_, cb)) = (val(*a).rows_cols(), val(*b).rows_cols());
                let c = ca + cb;
                if buf(grads, *a) {
                    let da = grads[a.0].as_mut().unwrap();
                    for i in 0..r {
                        for (d, &gv) in da[i * ca..(i + 1) * ca].iter_mut().zip(&g[i * c..i * c + ca]) {
                            *d += gv;
                        }
                    }
                }
                if buf(grads, *b) {
                    let db = grads[b.0].as_mut().unwrap();
                    for i in 0..r {
                        for (d, &gv) in db[i * cb..(i + 1) * cb]
                            .iter_mut()
                            .zip(&g[i * c + ca..(i + 1) * c])
                        {
                            *d += gv;
                        }
                    }
                }
            }
            Op::Embedding { table, ids } => {
                if buf(grads, *table) {
                    let d = val(*table).shape()[1];
                    let dt = grads[table.0].as_mut().unwrap();
                    for (row, &id) in g.chunks(d).zip(ids) {
                        for (t, &gv) in dt[id * d..(id + 1) * d].iter_mut().zip(row) {
                            *t += gv;
                        }
                    }
                }
            }
            Op::SelectRows { take_new, new, old } => {
                let (_, c) = out.rows_cols();
                for (v, want) in [(new, true), (old, false)] {
                    if buf(grads, *v) {
                        let dv = grads[v.0].as_mut().unwrap();
                        for (i, &t) in take_new.iter().enumerate() {
                            if t == want {
                                for (d, &gv) in dv[i * c..(i + 1) * c].iter_mut().zip(&g[i * c..(i + 1) * c]) {
                                    *d += gv;
                                }
                            }
                        }
                    }
                }
            }
            Op::Sum(x) => {
                if buf(grads, *x) {
                    for d in grads[x.0].as_mut().unwrap().iter_mut() {
                        *d += g[0];
                    }
                }
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax of one row.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}
