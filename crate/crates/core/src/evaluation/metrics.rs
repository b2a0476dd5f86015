use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textpipe::{is_special, EmbeddingTable, SentimentLexicon, StyledCorpus};

/// Pooled sentence vector `[min, mean, max]` over the word vectors of the
/// tokens that survive filtering: specials, sentiment words (when a lexicon
/// is given) and tokens missing from the table are dropped.
pub fn sentence_embedding<S: AsRef<str>>(
    tokens: &[S],
    table: &EmbeddingTable,
    lexicon: Option<&SentimentLexicon>,
) -> Result<Vec<f64>> {
    let dim = table.dim();
    let mut min = vec![f64::INFINITY; dim];
    let mut max = vec![f64::NEG_INFINITY; dim];
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for tok in tokens {
        let tok = tok.as_ref();
        if is_special(tok) || lexicon.is_some_and(|l| l.contains(tok)) {
            continue;
        }
        let Some(v) = table.get(tok) else { continue };
        for (j, &x) in v.iter().enumerate() {
            min[j] = min[j].min(x);
            max[j] = max[j].max(x);
            sum[j] += x;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::UndefinedEmbedding);
    }
    let mut out = min;
    out.extend(sum.iter().map(|s| s / n as f64));
    out.extend(max);
    Ok(out)
}

/// Cosine similarity; a zero vector makes it undefined.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("cosine of {} and {} wide vectors", a.len(), b.len())));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedEmbedding);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine similarity of the two pooled sentence embeddings.
pub fn content_preservation<S: AsRef<str>, T: AsRef<str>>(
    source: &[S],
    target: &[T],
    table: &EmbeddingTable,
    lexicon: Option<&SentimentLexicon>,
) -> Result<f64> {
    let a = sentence_embedding(source, table, lexicon)?;
    let b = sentence_embedding(target, table, lexicon)?;
    cosine(&a, &b)
}

/// Mean content preservation over sentence pairs, with pairs lacking an
/// embedding skipped and counted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMean {
    /// `NaN` when every pair was skipped.
    pub mean: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

pub fn mean_preservation<'a, I>(pairs: I, table: &EmbeddingTable, lexicon: Option<&SentimentLexicon>) -> Result<PairMean>
where
    I: IntoIterator<Item = (&'a [String], &'a [String])>,
{
    let mut sum = 0.0;
    let (mut evaluated, mut skipped) = (0, 0);
    for (a, b) in pairs {
        match content_preservation(a, b, table, lexicon) {
            Ok(s) => {
                sum += s;
                evaluated += 1;
            }
            Err(Error::UndefinedEmbedding) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(PairMean {
        mean: if evaluated == 0 { f64::NAN } else { sum / evaluated as f64 },
        evaluated,
        skipped,
    })
}

/// Default sample size for the random-pair lower bound.
pub const LOWER_BOUND_PAIRS: usize = 2000;

/// Mean content preservation over random cross-style pairs of a two-style
/// corpus: `n_pairs` uniform draws with replacement, or every cross-style
/// pair exactly once when `n_pairs` covers them all.
pub fn lower_bound(
    corpus: &StyledCorpus,
    n_pairs: usize,
    table: &EmbeddingTable,
    lexicon: Option<&SentimentLexicon>,
    seed: u64,
) -> Result<PairMean> {
    if corpus.n_styles != 2 {
        return Err(Error::Unsupported(format!(
            "lower bound needs exactly 2 styles, corpus has {}",
            corpus.n_styles
        )));
    }
    let (s0, s1) = (corpus.indices_of(0), corpus.indices_of(1));
    if s0.is_empty() || s1.is_empty() {
        return Err(Error::Data("lower bound needs sentences of both styles".into()));
    }
    let pairs: Vec<(usize, usize)> = if n_pairs >= s0.len() * s1.len() {
        s0.iter().flat_map(|&i| s1.iter().map(move |&j| (i, j))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_pairs)
            .map(|_| (s0[rng.gen_range(0..s0.len())], s1[rng.gen_range(0..s1.len())]))
            .collect()
    };
    let s = &corpus.sentences;
    mean_preservation(
        pairs.iter().map(|&(i, j)| (s[i].as_slice(), s[j].as_slice())),
        table,
        lexicon,
    )
}

/// Average (fractional) ranks, 1-based.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("an input is constant".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("spearman of {} and {} values", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!("{} points", a.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("spearman input is not finite".into()));
    }
    pearson(&ranks(a), &ranks(b))
}
