use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::config::{run_tag, ExperimentConfig, GridPoint, Preset};
use super::plot::tradeoff_svg;
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate_model, lower_bound, spearman, EvalReport, PairMean, StrengthClassifier, CSV_HEADER,
};
use crate::models::{ModelKind, StyledBatch};
use crate::textpipe::synth::synth_corpus;
use crate::textpipe::{
    preprocess, read_manifest, read_style_files_with, split_corpus, split_pretokenized, synth_embedding_table,
    tokenize, write_manifest, write_sentences, CorpusSplits, EmbeddingTable, SentimentLexicon, Split, SplitPolicy,
    StyledCorpus, Vocabulary, MAX_TOKENS,
};
use crate::training::{fit, Checkpoint, TrainConfig, TrainData, EVAL_BATCH};

/// Writes a synthetic marker corpus, its word-vector table and a matching
/// config file into `dir`; returns the config path.
pub fn cmd_synth(dir: &Path, per_style: usize, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = ExperimentConfig::preset(Preset::Synthetic);
    let corpus = synth_corpus(seed, per_style)?;
    for (style, file) in cfg.style_files.iter().enumerate() {
        let sentences: Vec<Vec<String>> = corpus.subset(&corpus.indices_of(style)).sentences;
        write_sentences(&dir.join(file), &sentences)?;
    }
    let table = synth_embedding_table(seed, cfg.embedding_dim);
    table.save(&dir.join(cfg.embedding_table.as_ref().expect("preset sets a table")))?;
    let path = dir.join("config.toml");
    cfg.save(&path)?;
    println!("wrote {} sentences per style and {}", per_style, path.display());
    Ok(path)
}

/// Cleaned corpus, its splits and the training vocabulary.
pub struct Prepared {
    pub corpus: StyledCorpus,
    pub splits: CorpusSplits,
    pub vocab: Vocabulary,
}

impl Prepared {
    pub fn batch(&self, split: Split) -> StyledBatch {
        StyledBatch::encode(self.splits.get(split), &self.vocab)
    }
}

fn clean_file(dir: &Path, style: usize) -> PathBuf {
    dir.join(format!("style{style}.txt"))
}

fn manifest_file(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{}.tsv", split.name()))
}

/// Cleans the style files, splits, builds the vocabulary and writes all of
/// it under `<output_dir>/prep`.
pub fn cmd_preprocess(cfg: &ExperimentConfig) -> Result<Prepared> {
    let clean = if cfg.pretokenized { split_pretokenized } else { preprocess };
    let (corpus, stats) = read_style_files_with(&cfg.style_files, clean)?;
    for (name, kept) in cfg.style_names.iter().zip(&stats.kept) {
        println!("{name}: kept {kept}");
    }
    for (reason, n) in &stats.rejected {
        println!("rejected {reason}: {n}");
    }
    if let Some(k) = stats.kept.iter().position(|&n| n == 0) {
        return Err(Error::Data(format!(
            "no sentences after preprocessing in {}",
            cfg.style_files[k].display()
        )));
    }
    let splits = split_corpus(&corpus, cfg.split_seed, SplitPolicy::default())?;
    let vocab = Vocabulary::build(&splits.train.sentences, cfg.vocab_size)?;

    let dir = cfg.prep_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for style in 0..corpus.n_styles {
        let s = corpus.subset(&corpus.indices_of(style)).sentences;
        write_sentences(&clean_file(&dir, style), &s)?;
    }
    for (split, idx) in Split::ALL.iter().zip(&splits.indices) {
        write_manifest(&manifest_file(&dir, *split), &corpus, idx)?;
    }
    vocab.save(&dir.join("vocab.txt"))?;
    println!(
        "splits train/validation/test = {}/{}/{}; vocabulary {}",
        splits.train.len(),
        splits.validation.len(),
        splits.test.len(),
        vocab.len()
    );
    Ok(Prepared { corpus, splits, vocab })
}

/// Reads what [`cmd_preprocess`] wrote.
pub fn load_prepared(cfg: &ExperimentConfig) -> Result<Prepared> {
    let dir = cfg.prep_dir();
    let files: Vec<PathBuf> = (0..cfg.style_files.len()).map(|k| clean_file(&dir, k)).collect();
    let vocab_path = dir.join("vocab.txt");
    let missing = files
        .iter()
        .cloned()
        .chain(Split::ALL.iter().map(|&s| manifest_file(&dir, s)))
        .chain([vocab_path.clone()])
        .find(|p| !p.exists());
    if let Some(p) = missing {
        return Err(Error::Data(format!(
            "missing preprocessed artifact {}; run `preprocess` first",
            p.display()
        )));
    }
    let (corpus, _) = read_style_files_with(&files, split_pretokenized)?;
    let mut idx: [Vec<usize>; 3] = Default::default();
    for (k, split) in Split::ALL.iter().enumerate() {
        idx[k] = read_manifest(&manifest_file(&dir, *split))?;
    }
    let splits = CorpusSplits::from_indices(&corpus, idx)?;
    let vocab = Vocabulary::load(&vocab_path)?;
    Ok(Prepared { corpus, splits, vocab })
}

/// Command-line overrides of the config's training settings.
#[derive(Clone, Debug, Default)]
pub struct TrainOverrides {
    pub model: Option<ModelKind>,
    pub word_dim: Option<usize>,
    pub enc_dim: Option<usize>,
    pub style_dim: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub max_epochs: Option<usize>,
    pub seed: Option<u64>,
}

impl TrainOverrides {
    pub fn apply(&self, cfg: &ExperimentConfig) -> TrainConfig {
        let kind = self.model.unwrap_or(cfg.model);
        let mut t = cfg.train_config(kind, None);
        t.word_dim = self.word_dim.unwrap_or(t.word_dim);
        t.enc_dim = self.enc_dim.unwrap_or(t.enc_dim);
        if kind == ModelKind::StyleEmbedding {
            t.style_dim = self.style_dim.unwrap_or(t.style_dim);
        }
        t.batch_size = self.batch_size.unwrap_or(t.batch_size);
        t.lr = self.lr.unwrap_or(t.lr);
        t.max_epochs = self.max_epochs.unwrap_or(t.max_epochs);
        t.seed = self.seed.unwrap_or(t.seed);
        t
    }
}

/// Where a trained configuration's checkpoint and log live.
pub fn checkpoint_path(cfg: &ExperimentConfig, train: &TrainConfig) -> PathBuf {
    cfg.models_dir().join(format!("{}.ckpt", run_tag(train)))
}

/// Trains one configuration, writing `<tag>.ckpt` and the per-epoch
/// `<tag>.log`; returns the checkpoint path.
pub fn cmd_train(cfg: &ExperimentConfig, prepared: &Prepared, train_cfg: &TrainConfig) -> Result<PathBuf> {
    let dir = cfg.models_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let ckpt_path = checkpoint_path(cfg, train_cfg);
    let log_path = ckpt_path.with_extension("log");
    let mut log = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut log_err = None;
    let train = prepared.batch(Split::Train);
    let validation = prepared.batch(Split::Validation);
    let data = TrainData {
        vocab: &prepared.vocab,
        style_names: &cfg.style_names,
        train: &train,
        validation: &validation,
    };
    let out = fit(train_cfg, data, &mut |entry| {
        eprintln!("{entry}");
        if let Err(e) = writeln!(log, "{entry}") {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(Error::io(&log_path, e));
    }
    if let Some(w) = &out.warning {
        eprintln!("warning: {w}");
    }
    out.best.save(&ckpt_path)?;
    println!(
        "best epoch {} (validation perplexity {}) saved to {}",
        out.best.epoch,
        out.best.val_perplexity,
        ckpt_path.display()
    );
    Ok(ckpt_path)
}

/// Rewrites every line of `input` toward `style`. Lines are tokenized with
/// the default rules unless `pretokenized`; lines over the length cap are
/// cut with a warning; blank lines stay blank.
pub fn transfer_lines(ckpt: &Checkpoint, input: &str, style: &str, pretokenized: bool) -> Result<Vec<String>> {
    let target = ckpt.style_index(style).ok_or_else(|| {
        Error::Config(format!(
            "style {style:?} is not in the checkpoint (styles: {})",
            ckpt.style_names.join(", ")
        ))
    })?;
    let mut out = vec![String::new(); input.lines().count()];
    let mut seqs = Vec::new();
    let mut rows = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let mut toks = if pretokenized {
            line.split_whitespace().map(str::to_string).collect()
        } else {
            tokenize(line)
        };
        if toks.is_empty() {
            continue;
        }
        if toks.len() > MAX_TOKENS {
            eprintln!(
                "warning: line {} has {} tokens; transferring its first {MAX_TOKENS}",
                n + 1,
                toks.len()
            );
            toks.truncate(MAX_TOKENS);
        }
        seqs.push(ckpt.vocab.encode(&toks));
        rows.push(n);
    }
    for (chunk, rows) in seqs.chunks(EVAL_BATCH).zip(rows.chunks(EVAL_BATCH)) {
        for (ids, &n) in ckpt.model.transfer(chunk, target)?.iter().zip(rows) {
            out[n] = ckpt.vocab.decode(ids).join(" ");
        }
    }
    Ok(out)
}

pub fn cmd_transfer(
    ckpt_path: &Path,
    input: &Path,
    style: &str,
    output: Option<&Path>,
    pretokenized: bool,
) -> Result<()> {
    let ckpt = Checkpoint::load(ckpt_path)?;
    let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let lines = transfer_lines(&ckpt, &text, style, pretokenized)?;
    let mut body = String::new();
    for l in &lines {
        body.push_str(l);
        body.push('\n');
    }
    match output {
        Some(p) => fs::write(p, body).map_err(|e| Error::io(p, e)),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Resources shared by every evaluation under one config.
pub struct EvalContext {
    pub classifier: StrengthClassifier,
    pub table: EmbeddingTable,
    pub lexicon: Option<SentimentLexicon>,
}

impl EvalContext {
    /// Loads the word-vector table and lexicon, and the cached style
    /// classifier, training and caching it when absent or configured
    /// differently.
    pub fn load(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<Self> {
        let table_path = cfg
            .embedding_table
            .as_ref()
            .ok_or_else(|| Error::Config("no embedding table configured".into()))?;
        if !table_path.exists() {
            return Err(Error::Config(format!("embedding table {} not found", table_path.display())));
        }
        let table = EmbeddingTable::load(table_path, cfg.embedding_dim)?;
        let lexicon = match &cfg.lexicon {
            Some(l) => Some(SentimentLexicon::load(&l.positive, &l.negative)?),
            None => None,
        };
        let path = cfg.classifier_path();
        let cached = if path.exists() {
            Some(StrengthClassifier::load(&path)?).filter(|c| c.config == cfg.classifier)
        } else {
            None
        };
        let classifier = match cached {
            Some(c) => c,
            None => {
                eprintln!("training the style classifier");
                let c = StrengthClassifier::train(&prepared.splits.train, &prepared.splits.validation, &cfg.classifier)?;
                fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
                c.save(&path)?;
                c
            }
        };
        println!("style classifier validation accuracy {}", classifier.val_accuracy);
        Ok(EvalContext {
            classifier,
            table,
            lexicon,
        })
    }

    pub fn lower_bound(&self, cfg: &ExperimentConfig, prepared: &Prepared) -> Result<PairMean> {
        lower_bound(
            &prepared.splits.test,
            cfg.lower_bound_pairs,
            &self.table,
            self.lexicon.as_ref(),
            cfg.seed,
        )
    }
}

fn append_row(path: &Path, row: &str) -> Result<()> {
    let fresh = !path.exists();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(CSV_HEADER);
        text.push('\n');
    }
    text.push_str(row);
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn write_dump(path: &Path, cfg: &ExperimentConfig, rows: &[crate::evaluation::Transferred]) -> Result<()> {
    let mut text = String::from("source\ttarget_style\toutput\n");
    for t in rows {
        writeln!(text, "{}\t{}\t{}", t.source.join(" "), cfg.style_names[t.target_style], t.output.join(" ")).unwrap();
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Scores one checkpoint on the test split and appends its row to
/// `<output_dir>/results.csv`.
pub fn cmd_evaluate(cfg: &ExperimentConfig, ckpt_path: &Path, dump: Option<&Path>) -> Result<EvalReport> {
    let prepared = load_prepared(cfg)?;
    let ckpt = Checkpoint::load(ckpt_path)?;
    let ctx = EvalContext::load(cfg, &prepared)?;
    let (report, transferred) = evaluate_model(
        &ckpt,
        &prepared.splits.test,
        &ctx.classifier,
        &ctx.table,
        ctx.lexicon.as_ref(),
    )?;
    append_row(&cfg.results_path(), &report.csv_row())?;
    if let Some(p) = dump {
        write_dump(p, cfg, &transferred)?;
    }
    println!("transfer strength {}", report.transfer_strength);
    println!("content preservation {}", report.content_preservation);
    if report.skipped_pairs > 0 {
        println!("pairs without an embedding: {}", report.skipped_pairs);
    }
    let lb = ctx.lower_bound(cfg, &prepared)?;
    println!("random-pair lower bound {}", lb.mean);
    Ok(report)
}

/// Results of a grid sweep.
#[derive(Clone, Debug)]
pub struct Tradeoff {
    pub kind: ModelKind,
    pub reports: Vec<EvalReport>,
    pub failures: Vec<(GridPoint, String)>,
    pub spearman: Result<f64, String>,
    pub lower_bound: f64,
}

fn ranked_table(t: &Tradeoff) -> String {
    let mut order: Vec<usize> = (0..t.reports.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&t.reports[a], &t.reports[b]);
        rb.transfer_strength
            .total_cmp(&ra.transfer_strength)
            .then(rb.content_preservation.total_cmp(&ra.content_preservation))
    });
    let mut s = String::new();
    writeln!(s, "model {}", t.kind.name()).unwrap();
    writeln!(s, "rank  word  enc  style  strength  preservation").unwrap();
    for (rank, &i) in order.iter().enumerate() {
        let r = &t.reports[i];
        writeln!(
            s,
            "{:>4}  {:>4}  {:>3}  {:>5}  {:>8.4}  {:>12.4}",
            rank + 1,
            r.word_dim,
            r.enc_dim,
            r.style_dim,
            r.transfer_strength,
            r.content_preservation
        )
        .unwrap();
    }
    match &t.spearman {
        Ok(r) => writeln!(s, "spearman(strength, preservation) {r}").unwrap(),
        Err(why) => writeln!(s, "spearman(strength, preservation) undefined: {why}").unwrap(),
    }
    writeln!(s, "random-pair lower bound {}", t.lower_bound).unwrap();
    for (p, e) in &t.failures {
        writeln!(s, "failed word {} enc {} style {}: {e}", p.word_dim, p.enc_dim, p.style_dim).unwrap();
    }
    s
}

/// Trains and evaluates every grid point for `kind`. Writes
/// `tradeoff-<model>.csv`, a ranked table `tradeoff-<model>.txt`, and when
/// `svg` is set a scatter of the points.
pub fn cmd_tradeoff(cfg: &ExperimentConfig, kind: ModelKind, svg: bool) -> Result<Tradeoff> {
    let points = cfg.grid_points(kind);
    if points.is_empty() {
        return Err(Error::Config("dimension grid is empty".into()));
    }
    let prepared = load_prepared(cfg)?;
    let ctx = EvalContext::load(cfg, &prepared)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for p in points {
        let train_cfg = cfg.train_config(kind, Some(p));
        let run = cmd_train(cfg, &prepared, &train_cfg).and_then(|path| {
            let ckpt = Checkpoint::load(&path)?;
            evaluate_model(&ckpt, &prepared.splits.test, &ctx.classifier, &ctx.table, ctx.lexicon.as_ref())
        });
        match run {
            Ok((report, _)) => {
                println!("{}", report.csv_row());
                reports.push(report);
            }
            Err(e) => {
                eprintln!("grid point {} failed: {e}", run_tag(&train_cfg));
                failures.push((p, e.to_string()));
            }
        }
    }
    let strength: Vec<f64> = reports.iter().map(|r| r.transfer_strength).collect();
    let pres: Vec<f64> = reports.iter().map(|r| r.content_preservation).collect();
    let t = Tradeoff {
        kind,
        spearman: spearman(&strength, &pres).map_err(|e| e.to_string()),
        lower_bound: ctx.lower_bound(cfg, &prepared)?.mean,
        reports,
        failures,
    };

    let stem = cfg.output_dir.join(format!("tradeoff-{}", kind.name()));
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &t.reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    let csv_path = stem.with_extension("csv");
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    let table = ranked_table(&t);
    let txt_path = stem.with_extension("txt");
    fs::write(&txt_path, &table).map_err(|e| Error::io(&txt_path, e))?;
    if svg {
        let svg_path = stem.with_extension("svg");
        fs::write(&svg_path, tradeoff_svg(&t)).map_err(|e| Error::io(&svg_path, e))?;
    }
    print!("{table}");
    Ok(t)
}
