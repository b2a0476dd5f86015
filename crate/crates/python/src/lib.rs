//! Python bindings: preprocessing, the synthetic corpus, model training and
//! transfer, and both evaluation metrics.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use textstyle::evaluation as ev;
use textstyle::models::{ModelKind, StyledBatch};
use textstyle::textpipe::{self as tp, split_corpus, SplitPolicy, StyledCorpus, Vocabulary};
use textstyle::training::{fit, Checkpoint, TrainConfig, TrainData};
use textstyle::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Numeric(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for textstyle::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn corpus(sentences: Vec<Vec<String>>, labels: Vec<usize>) -> PyResult<StyledCorpus> {
    let n = labels.iter().max().map_or(0, |m| m + 1).max(2);
    StyledCorpus::new(sentences, labels, n).py()
}

/// Lowercased, punctuation-split, number-normalized tokens.
#[pyfunction]
fn tokenize(line: &str) -> Vec<String> {
    tp::tokenize(line)
}

/// Tokens of a kept line, or None when the line is empty or too long.
#[pyfunction]
fn preprocess(line: &str) -> Option<Vec<String>> {
    tp::preprocess(line).ok()
}

/// Seeded marker corpus: (sentences, labels).
#[pyfunction]
fn synth_corpus(seed: u64, per_style: usize) -> PyResult<(Vec<Vec<String>>, Vec<usize>)> {
    let c = tp::synth_corpus(seed, per_style).py()?;
    Ok((c.sentences, c.labels))
}

/// Spearman rank correlation with average ranks for ties.
#[pyfunction]
fn spearman(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    ev::spearman(&a, &b).py()
}

/// Runs the command-line front end and returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    textstyle::cli::run(std::iter::once("textstyle".to_string()).chain(args))
}

#[pyclass(name = "EmbeddingTable", module = "textstyle")]
struct PyEmbeddingTable {
    inner: tp::EmbeddingTable,
}

#[pymethods]
impl PyEmbeddingTable {
    #[new]
    fn new(dim: usize) -> Self {
        PyEmbeddingTable {
            inner: tp::EmbeddingTable::new(dim),
        }
    }

    /// Reads a whitespace-separated word-vector text file.
    #[staticmethod]
    fn load(path: PathBuf, dim: usize) -> PyResult<Self> {
        Ok(PyEmbeddingTable {
            inner: tp::EmbeddingTable::load(&path, dim).py()?,
        })
    }

    /// Standard-normal vectors for every synthetic-corpus token.
    #[staticmethod]
    fn synthetic(seed: u64, dim: usize) -> Self {
        PyEmbeddingTable {
            inner: tp::synth_embedding_table(seed, dim),
        }
    }

    fn insert(&mut self, token: String, vector: Vec<f64>) -> PyResult<()> {
        self.inner.insert(token, vector).py()
    }

    fn get(&self, token: &str) -> Option<Vec<f64>> {
        self.inner.get(token).map(<[f64]>::to_vec)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "SentimentLexicon", module = "textstyle")]
struct PyLexicon {
    inner: tp::SentimentLexicon,
}

#[pymethods]
impl PyLexicon {
    #[new]
    fn new(positive: Vec<String>, negative: Vec<String>) -> Self {
        PyLexicon {
            inner: tp::SentimentLexicon::new(positive, negative),
        }
    }

    fn __contains__(&self, word: &str) -> bool {
        self.inner.contains(word)
    }
}

/// Cosine similarity of pooled `[min, mean, max]` sentence embeddings.
#[pyfunction]
#[pyo3(signature = (source, target, table, lexicon=None))]
fn content_preservation(
    source: Vec<String>,
    target: Vec<String>,
    table: PyRef<'_, PyEmbeddingTable>,
    lexicon: Option<PyRef<'_, PyLexicon>>,
) -> PyResult<f64> {
    ev::content_preservation(&source, &target, &table.inner, lexicon.as_ref().map(|l| &l.inner)).py()
}

/// Pooled sentence embedding, `3 * dim` wide.
#[pyfunction]
#[pyo3(signature = (tokens, table, lexicon=None))]
fn sentence_embedding(
    tokens: Vec<String>,
    table: PyRef<'_, PyEmbeddingTable>,
    lexicon: Option<PyRef<'_, PyLexicon>>,
) -> PyResult<Vec<f64>> {
    ev::sentence_embedding(&tokens, &table.inner, lexicon.as_ref().map(|l| &l.inner)).py()
}

/// Mean content preservation of random cross-style pairs.
#[pyfunction]
#[pyo3(signature = (sentences, labels, table, n_pairs=2000, seed=0, lexicon=None))]
fn lower_bound(
    sentences: Vec<Vec<String>>,
    labels: Vec<usize>,
    table: PyRef<'_, PyEmbeddingTable>,
    n_pairs: usize,
    seed: u64,
    lexicon: Option<PyRef<'_, PyLexicon>>,
) -> PyResult<f64> {
    let c = corpus(sentences, labels)?;
    Ok(ev::lower_bound(&c, n_pairs, &table.inner, lexicon.as_ref().map(|l| &l.inner), seed).py()?.mean)
}

#[pyclass(name = "StrengthClassifier", module = "textstyle")]
struct PyClassifier {
    inner: ev::StrengthClassifier,
}

#[pymethods]
impl PyClassifier {
    /// Trains the LSTM-sigmoid style classifier on two-style data.
    #[staticmethod]
    #[pyo3(signature = (sentences, labels, val_sentences, val_labels, word_dim=128, hidden_dim=128, epochs=2, batch_size=32, lr=1.0, vocab_size=80000, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        sentences: Vec<Vec<String>>,
        labels: Vec<usize>,
        val_sentences: Vec<Vec<String>>,
        val_labels: Vec<usize>,
        word_dim: usize,
        hidden_dim: usize,
        epochs: usize,
        batch_size: usize,
        lr: f64,
        vocab_size: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = ev::StrengthConfig {
            word_dim,
            hidden_dim,
            epochs,
            batch_size,
            lr,
            vocab_size,
            seed,
        };
        let train = corpus(sentences, labels)?;
        let val = corpus(val_sentences, val_labels)?;
        Ok(PyClassifier {
            inner: ev::StrengthClassifier::train(&train, &val, &cfg).py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyClassifier {
            inner: ev::StrengthClassifier::load(&path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).py()
    }

    /// Style-1 probability per sentence.
    fn scores(&self, sentences: Vec<Vec<String>>) -> PyResult<Vec<f64>> {
        self.inner.scores(&sentences).py()
    }

    fn predict(&self, sentences: Vec<Vec<String>>) -> PyResult<Vec<usize>> {
        self.inner.predict(&sentences).py()
    }

    /// Fraction of sentences assigned their given style.
    fn accuracy(&self, sentences: Vec<Vec<String>>, labels: Vec<usize>) -> PyResult<f64> {
        self.inner.accuracy(&sentences, &labels).py()
    }

    #[getter]
    fn val_accuracy(&self) -> f64 {
        self.inner.val_accuracy
    }
}

/// A trained style-transfer model (the best-epoch checkpoint).
#[pyclass(name = "Model", module = "textstyle")]
struct PyModel {
    inner: Checkpoint,
    /// (epoch, gen, adv1, adv2, total, validation perplexity) per epoch.
    #[pyo3(get)]
    history: Vec<(usize, f64, f64, f64, f64, f64)>,
}

#[pymethods]
impl PyModel {
    /// Splits the corpus, builds the vocabulary on the training part and
    /// trains `kind` ("auto-encoder", "multi-decoder" or "style-embedding").
    #[staticmethod]
    #[pyo3(signature = (kind, sentences, labels, style_names, word_dim=64, enc_dim=64, style_dim=0, batch_size=128, lr=1e-4, max_epochs=50, seed=0, split_seed=0, vocab_size=80000))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        kind: &str,
        sentences: Vec<Vec<String>>,
        labels: Vec<usize>,
        style_names: Vec<String>,
        word_dim: usize,
        enc_dim: usize,
        style_dim: usize,
        batch_size: usize,
        lr: f64,
        max_epochs: usize,
        seed: u64,
        split_seed: u64,
        vocab_size: usize,
    ) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().py()?;
        let c = StyledCorpus::new(sentences, labels, style_names.len()).py()?;
        let splits = split_corpus(&c, split_seed, SplitPolicy::default()).py()?;
        let vocab = Vocabulary::build(&splits.train.sentences, vocab_size).py()?;
        let cfg = TrainConfig {
            kind,
            word_dim,
            enc_dim,
            style_dim,
            batch_size,
            lr,
            max_epochs,
            seed,
        };
        let train = StyledBatch::encode(&splits.train, &vocab);
        let validation = StyledBatch::encode(&splits.validation, &vocab);
        let data = TrainData {
            vocab: &vocab,
            style_names: &style_names,
            train: &train,
            validation: &validation,
        };
        let out = fit(&cfg, data, &mut |_| {}).py()?;
        let history = out
            .log
            .iter()
            .map(|e| (e.epoch, e.gen, e.adv1, e.adv2, e.total, e.val_perplexity))
            .collect();
        Ok(PyModel {
            inner: out.best,
            history,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: Checkpoint::load(&path).py()?,
            history: vec![],
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).py()
    }

    /// Greedy rewrite of each token list toward the named style.
    fn transfer(&self, sentences: Vec<Vec<String>>, style: &str) -> PyResult<Vec<Vec<String>>> {
        let target = self
            .inner
            .style_index(style)
            .ok_or_else(|| PyValueError::new_err(format!("unknown style {style:?}")))?;
        let mut out = Vec::with_capacity(sentences.len());
        for s in &sentences {
            if s.is_empty() {
                out.push(vec![]);
                continue;
            }
            let s = &s[..s.len().min(tp::MAX_TOKENS)];
            let ids = self.inner.model.transfer(&[self.inner.vocab.encode(s)], target).py()?;
            out.push(self.inner.vocab.decode(&ids[0]));
        }
        Ok(out)
    }

    /// Transfer strength and content preservation on a two-style test set,
    /// each sentence rewritten toward the other style.
    #[pyo3(signature = (sentences, labels, classifier, table, lexicon=None))]
    fn evaluate(
        &self,
        sentences: Vec<Vec<String>>,
        labels: Vec<usize>,
        classifier: PyRef<'_, PyClassifier>,
        table: PyRef<'_, PyEmbeddingTable>,
        lexicon: Option<PyRef<'_, PyLexicon>>,
    ) -> PyResult<(f64, f64)> {
        let test = corpus(sentences, labels)?;
        let (r, _) = ev::evaluate_model(
            &self.inner,
            &test,
            &classifier.inner,
            &table.inner,
            lexicon.as_ref().map(|l| &l.inner),
        )
        .py()?;
        Ok((r.transfer_strength, r.content_preservation))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.config.kind.name()
    }

    #[getter]
    fn style_names(&self) -> Vec<String> {
        self.inner.style_names.clone()
    }

    #[getter]
    fn epoch(&self) -> usize {
        self.inner.epoch
    }

    #[getter]
    fn val_perplexity(&self) -> f64 {
        self.inner.val_perplexity
    }
}

#[pymodule]
#[pyo3(name = "textstyle")]
pub fn textstyle_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(content_preservation, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_embedding, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_class::<PyEmbeddingTable>()?;
    m.add_class::<PyLexicon>()?;
    m.add_class::<PyClassifier>()?;
    m.add_class::<PyModel>()?;
    Ok(())
}
