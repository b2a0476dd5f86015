use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::preprocess::{preprocess, Rejection, MAX_TOKENS};
use crate::error::{Error, Result};

/// Tokenized sentences with one style label each.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StyledCorpus {
    pub sentences: Vec<Vec<String>>,
    pub labels: Vec<usize>,
    pub n_styles: usize,
}

impl StyledCorpus {
    pub fn new(sentences: Vec<Vec<String>>, labels: Vec<usize>, n_styles: usize) -> Result<Self> {
        if sentences.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} sentences but {} labels",
                sentences.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_styles) {
            return Err(Error::Index(format!("style label {bad} with {n_styles} styles")));
        }
        if let Some(s) = sentences.iter().find(|s| s.is_empty() || s.len() > MAX_TOKENS) {
            return Err(Error::Data(format!(
                "sentence of {} tokens outside [1, {MAX_TOKENS}]",
                s.len()
            )));
        }
        Ok(StyledCorpus {
            sentences,
            labels,
            n_styles,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn style_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_styles];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Indices of the sentences carrying `style`, in corpus order.
    pub fn indices_of(&self, style: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == style).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> StyledCorpus {
        StyledCorpus {
            sentences: indices.iter().map(|&i| self.sentences[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_styles: self.n_styles,
        }
    }
}

/// Per-reason counts of lines dropped during ingestion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub kept: Vec<usize>,
    pub rejected: BTreeMap<Rejection, usize>,
}

/// Reads one UTF-8 file per style (style index = position in `paths`) and
/// preprocesses every line.
pub fn read_style_files<P: AsRef<Path>>(paths: &[P]) -> Result<(StyledCorpus, IngestStats)> {
    read_style_files_with(paths, preprocess)
}

/// [`read_style_files`] with a caller-chosen line cleaner.
pub fn read_style_files_with<P, F>(paths: &[P], clean: F) -> Result<(StyledCorpus, IngestStats)>
where
    P: AsRef<Path>,
    F: Fn(&str) -> std::result::Result<Vec<String>, Rejection>,
{
    let mut sentences = Vec::new();
    let mut labels = Vec::new();
    let mut stats = IngestStats::default();
    for (style, path) in paths.iter().enumerate() {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut kept = 0;
        for line in text.lines() {
            match clean(line) {
                Ok(tokens) => {
                    sentences.push(tokens);
                    labels.push(style);
                    kept += 1;
                }
                Err(reason) => *stats.rejected.entry(reason).or_default() += 1,
            }
        }
        stats.kept.push(kept);
    }
    let corpus = StyledCorpus::new(sentences, labels, paths.len())?;
    Ok((corpus, stats))
}

/// Writes sentences one per line, tokens space-separated.
pub fn write_sentences(path: &Path, sentences: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    for s in sentences {
        text.push_str(&s.join(" "));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// How held-out sets are sized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitPolicy {
    /// Size of each of validation and test when the corpus is large enough.
    pub held_out: usize,
    /// Train/validation/test fractions used when `2 * held_out` sentences
    /// would leave no training data. `None` makes that an error.
    pub fallback: Option<[f64; 3]>,
}

impl Default for SplitPolicy {
    fn default() -> Self {
        SplitPolicy {
            held_out: 2000,
            fallback: Some([0.8, 0.1, 0.1]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSplits {
    pub train: StyledCorpus,
    pub validation: StyledCorpus,
    pub test: StyledCorpus,
    /// Corpus indices of each split, ascending.
    pub indices: [Vec<usize>; 3],
}

impl CorpusSplits {
    pub fn get(&self, split: Split) -> &StyledCorpus {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn from_indices(corpus: &StyledCorpus, indices: [Vec<usize>; 3]) -> Result<Self> {
        for idx in indices.iter().flatten() {
            if *idx >= corpus.len() {
                return Err(Error::Data(format!("split index {idx} beyond corpus of {}", corpus.len())));
            }
        }
        Ok(CorpusSplits {
            train: corpus.subset(&indices[0]),
            validation: corpus.subset(&indices[1]),
            test: corpus.subset(&indices[2]),
            indices,
        })
    }
}

/// Splits `total` into parts proportional to `weights` (largest remainder,
/// ties to the lower index).
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut parts: Vec<usize> = weights.iter().map(|&w| total * w / sum).collect();
    let mut rema: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| ((total * w) % sum, i))
        .collect();
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = parts.iter().sum();
    for &(_, i) in rema.iter().take(total - assigned) {
        parts[i] += 1;
    }
    parts
}

/// Seeded, per-style stratified train/validation/test partition.
pub fn split_corpus(corpus: &StyledCorpus, seed: u64, policy: SplitPolicy) -> Result<CorpusSplits> {
    let counts = corpus.style_counts();
    let total = corpus.len();
    let (val, test): (Vec<usize>, Vec<usize>) = if total > 2 * policy.held_out {
        (apportion(policy.held_out, &counts), apportion(policy.held_out, &counts))
    } else if let Some([_, fv, ft]) = policy.fallback {
        let frac = |n: usize, f: f64| (n as f64 * f).round() as usize;
        (
            counts.iter().map(|&n| frac(n, fv)).collect(),
            counts.iter().map(|&n| frac(n, ft)).collect(),
        )
    } else {
        return Err(Error::Data(format!(
            "corpus of {total} sentences cannot supply two held-out sets of {}",
            policy.held_out
        )));
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: [Vec<usize>; 3] = Default::default();
    for style in 0..corpus.n_styles {
        let mut idx = corpus.indices_of(style);
        idx.shuffle(&mut rng);
        let (v, t) = (val[style], test[style]);
        if v + t > idx.len() {
            return Err(Error::Data(format!("style {style} too small to split")));
        }
        out[1].extend_from_slice(&idx[..v]);
        out[2].extend_from_slice(&idx[v..v + t]);
        out[0].extend_from_slice(&idx[v + t..]);
    }
    for part in out.iter_mut() {
        part.sort_unstable();
    }
    CorpusSplits::from_indices(corpus, out)
}

/// Manifest: one `style<TAB>corpus-index` line per sentence.
pub fn write_manifest(path: &Path, corpus: &StyledCorpus, indices: &[usize]) -> Result<()> {
    let mut text = String::new();
    for &i in indices {
        text.push_str(&format!("{}\t{}\n", corpus.labels[i], i));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            line.split('\t')
                .nth(1)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: "expected style<TAB>index".into(),
                })
        })
        .collect()
}
