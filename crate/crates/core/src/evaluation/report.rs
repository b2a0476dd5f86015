use std::fmt::Write as _;

use super::metrics::mean_preservation;
use super::strength::{transfer_strength, StrengthClassifier};
use crate::error::{Error, Result};
use crate::textpipe::{EmbeddingTable, SentimentLexicon, StyledCorpus, MAX_TOKENS};
use crate::training::{Checkpoint, EVAL_BATCH};

/// Column names of a report row.
pub const CSV_HEADER: &str =
    "model,word_dim,enc_dim,style_dim,transfer_strength,content_preservation,skipped_pairs";

/// Both metrics for one model on one test split.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub word_dim: usize,
    pub enc_dim: usize,
    pub style_dim: usize,
    pub transfer_strength: f64,
    pub content_preservation: f64,
    pub skipped_pairs: usize,
    pub n_sentences: usize,
}

impl EvalReport {
    /// One CSV line without a trailing newline. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{}",
            self.model,
            self.word_dim,
            self.enc_dim,
            self.style_dim,
            self.transfer_strength,
            self.content_preservation,
            self.skipped_pairs
        )
        .unwrap();
        s
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 7 {
            return Err(Error::Data(format!("report row has {} fields, expected 7", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Data(format!("bad integer {s:?}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Data(format!("bad number {s:?}: {e}")));
        Ok(EvalReport {
            model: f[0].to_string(),
            word_dim: int(f[1])?,
            enc_dim: int(f[2])?,
            style_dim: int(f[3])?,
            transfer_strength: real(f[4])?,
            content_preservation: real(f[5])?,
            skipped_pairs: int(f[6])?,
            n_sentences: 0,
        })
    }
}

/// Metrics for already transferred sentences.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputScores {
    pub transfer_strength: f64,
    pub content_preservation: f64,
    pub skipped_pairs: usize,
}

pub fn score_outputs(
    sources: &[Vec<String>],
    outputs: &[Vec<String>],
    targets: &[usize],
    clf: &StrengthClassifier,
    table: &EmbeddingTable,
    lexicon: Option<&SentimentLexicon>,
) -> Result<OutputScores> {
    if sources.len() != outputs.len() {
        return Err(Error::Dimension(format!(
            "{} sources with {} outputs",
            sources.len(),
            outputs.len()
        )));
    }
    let strength = transfer_strength(clf, outputs, targets)?;
    let pres = mean_preservation(
        sources.iter().zip(outputs).map(|(a, b)| (a.as_slice(), b.as_slice())),
        table,
        lexicon,
    )?;
    Ok(OutputScores {
        transfer_strength: strength,
        content_preservation: pres.mean,
        skipped_pairs: pres.skipped,
    })
}

/// Source, target style and transferred tokens for every test sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transferred {
    pub source: Vec<String>,
    pub target_style: usize,
    pub output: Vec<String>,
}

/// Greedy rewrite of every sentence toward the other style. Inputs longer
/// than the cap are cut; tokens outside the vocabulary become `<unk>`.
pub fn transfer_to_opposite(ckpt: &Checkpoint, corpus: &StyledCorpus) -> Result<Vec<Transferred>> {
    if corpus.n_styles != 2 || ckpt.model.dims.n_styles != 2 {
        return Err(Error::Unsupported("evaluation transfers between exactly 2 styles".into()));
    }
    let mut out: Vec<Option<Transferred>> = vec![None; corpus.len()];
    for target in 0..2 {
        let idx: Vec<usize> = (0..corpus.len()).filter(|&i| corpus.labels[i] != target).collect();
        for chunk in idx.chunks(EVAL_BATCH) {
            let seqs: Vec<Vec<usize>> = chunk
                .iter()
                .map(|&i| {
                    let s = &corpus.sentences[i];
                    ckpt.vocab.encode(&s[..s.len().min(MAX_TOKENS)])
                })
                .collect();
            let decoded = ckpt.model.transfer(&seqs, target)?;
            for (&i, ids) in chunk.iter().zip(decoded) {
                out[i] = Some(Transferred {
                    source: corpus.sentences[i].clone(),
                    target_style: target,
                    output: ckpt.vocab.decode(&ids),
                });
            }
        }
    }
    Ok(out.into_iter().map(|t| t.expect("every sentence has a target")).collect())
}

/// Transfers the test split to the opposite styles and scores the outputs.
pub fn evaluate_model(
    ckpt: &Checkpoint,
    test: &StyledCorpus,
    clf: &StrengthClassifier,
    table: &EmbeddingTable,
    lexicon: Option<&SentimentLexicon>,
) -> Result<(EvalReport, Vec<Transferred>)> {
    let transferred = transfer_to_opposite(ckpt, test)?;
    let sources: Vec<Vec<String>> = transferred.iter().map(|t| t.source.clone()).collect();
    let outputs: Vec<Vec<String>> = transferred.iter().map(|t| t.output.clone()).collect();
    let targets: Vec<usize> = transferred.iter().map(|t| t.target_style).collect();
    let scores = score_outputs(&sources, &outputs, &targets, clf, table, lexicon)?;
    let c = &ckpt.config;
    let report = EvalReport {
        model: c.kind.name().to_string(),
        word_dim: c.word_dim,
        enc_dim: c.enc_dim,
        style_dim: ckpt.model.dims.style_dim,
        transfer_strength: scores.transfer_strength,
        content_preservation: scores.content_preservation,
        skipped_pairs: scores.skipped_pairs,
        n_sentences: test.len(),
    };
    Ok((report, transferred))
}
