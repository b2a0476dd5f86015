use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::models::ModelKind;
use crate::textpipe::{split_corpus, synth_corpus, synth_embedding_table, EmbeddingTable, SentimentLexicon, SplitPolicy, StyledCorpus};

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn table2() -> EmbeddingTable {
    let mut t = EmbeddingTable::new(2);
    t.insert("x", vec![1.0, 0.0]).unwrap();
    t.insert("y", vec![0.0, 1.0]).unwrap();
    t.insert("z", vec![2.0, -1.0]).unwrap();
    t.insert("good", vec![5.0, 5.0]).unwrap();
    t
}

#[test]
fn pooling_examples() {
    let t = table2();
    assert_eq!(sentence_embedding(&toks("z"), &t, None).unwrap(), [2.0, -1.0, 2.0, -1.0, 2.0, -1.0]);
    assert_eq!(
        sentence_embedding(&toks("x y"), &t, None).unwrap(),
        [0.0, 0.0, 0.5, 0.5, 1.0, 1.0]
    );
    // specials and out-of-table tokens are dropped
    assert_eq!(
        sentence_embedding(&toks("<unk> x <NUM> nope y"), &t, None).unwrap(),
        [0.0, 0.0, 0.5, 0.5, 1.0, 1.0]
    );
    assert!(matches!(
        sentence_embedding(&toks("<unk> nope"), &t, None),
        Err(Error::UndefinedEmbedding)
    ));
    let empty: Vec<String> = vec![];
    assert!(matches!(sentence_embedding(&empty, &t, None), Err(Error::UndefinedEmbedding)));
}

#[test]
fn lexicon_filters_before_pooling() {
    let t = table2();
    let lex = SentimentLexicon::new(["good"], ["bad"]);
    let with = sentence_embedding(&toks("good x"), &t, Some(&lex)).unwrap();
    assert_eq!(with, sentence_embedding(&toks("x"), &t, None).unwrap());
    assert!(matches!(
        sentence_embedding(&toks("good"), &t, Some(&lex)),
        Err(Error::UndefinedEmbedding)
    ));
}

#[test]
fn preservation_examples() {
    let t = table2();
    let s = toks("x z y");
    assert!((content_preservation(&s, &s, &t, None).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(content_preservation(&toks("x"), &toks("y"), &t, None).unwrap(), 0.0);
    assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::UndefinedEmbedding)));
}

fn synth_table() -> EmbeddingTable {
    synth_embedding_table(4, 10)
}

proptest! {
    #[test]
    fn preservation_properties(
        a in prop::collection::vec(0usize..44, 1..9),
        b in prop::collection::vec(0usize..44, 1..9),
        lambda in 0.01f64..50.0,
        seed in 0u64..100,
    ) {
        let table = synth_table();
        let vocab = crate::textpipe::synth::synth_tokens();
        let sa: Vec<String> = a.iter().map(|&i| vocab[i].clone()).collect();
        let sb: Vec<String> = b.iter().map(|&i| vocab[i].clone()).collect();
        let ab = content_preservation(&sa, &sb, &table, None).unwrap();
        let ba = content_preservation(&sb, &sa, &table, None).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        let scaled = table.scaled(lambda);
        prop_assert!((content_preservation(&sa, &sb, &scaled, None).unwrap() - ab).abs() <= 1e-9);
        let mut shuffled = sa.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (e1, e2) = (sentence_embedding(&shuffled, &table, None).unwrap(), sentence_embedding(&sa, &table, None).unwrap());
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((content_preservation(&sa, &shuffled, &table, None).unwrap() - 1.0).abs() <= 1e-12);
        let v = sentence_embedding(&sa, &table, None).unwrap();
        let d = table.dim();
        for j in 0..d {
            prop_assert!(v[j] <= v[d + j] + 1e-15 && v[d + j] <= v[2 * d + j] + 1e-15);
        }
    }

    #[test]
    fn spearman_is_invariant_under_monotone_maps(
        a in prop::collection::vec(-100.0f64..100.0, 3..12),
        seed in 0u64..1000,
    ) {
        let mut b = a.clone();
        b.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        if let Ok(r) = spearman(&a, &b) {
            let a2: Vec<f64> = a.iter().map(|x| x * x * x + 3.0 * x).collect();
            let b2: Vec<f64> = b.iter().map(|x| -2.0 * x - 7.0).collect();
            let r2 = spearman(&a2, &b2).unwrap();
            prop_assert!((r + r2).abs() < 1e-12, "{} {}", r, r2);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}

#[test]
fn spearman_examples() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    // ranks [1, 2.5, 2.5, 4] vs [1, 3, 2, 4]: covariance 4.5 over sqrt(4.5 * 5)
    assert_eq!(ranks(&[1.0, 2.0, 2.0, 4.0]), [1.0, 2.5, 2.5, 4.0]);
    let r = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((r - 4.5 / 22.5f64.sqrt()).abs() < 1e-12);
    assert!((r - 0.948683).abs() < 1e-6);
    assert!(matches!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::UndefinedCorrelation(_))));
    assert!(matches!(spearman(&[1.0], &[1.0]), Err(Error::UndefinedCorrelation(_))));
    assert!(matches!(spearman(&[1.0, 2.0], &[1.0]), Err(Error::Dimension(_))));
}

fn twenty_sentence_corpus() -> StyledCorpus {
    let c = synth_corpus(8, 100).unwrap();
    let idx: Vec<usize> = (0..10).chain(100..110).collect();
    c.subset(&idx)
}

#[test]
fn lower_bound_exhaustive_matches_brute_force() {
    let corpus = twenty_sentence_corpus();
    let table = synth_table();
    let mut sum = 0.0;
    let mut n = 0;
    for i in 0..corpus.len() {
        for j in 0..corpus.len() {
            if corpus.labels[i] == 0 && corpus.labels[j] == 1 {
                sum += content_preservation(&corpus.sentences[i], &corpus.sentences[j], &table, None).unwrap();
                n += 1;
            }
        }
    }
    assert_eq!(n, 100);
    let oracle = sum / n as f64;
    let exact = lower_bound(&corpus, 100, &table, None, 1).unwrap();
    assert_eq!(exact.evaluated, 100);
    assert!((exact.mean - oracle).abs() < 1e-12);
    let sampled = lower_bound(&corpus, 99, &table, None, 1).unwrap();
    assert_eq!(sampled.evaluated, 99);
    assert!((sampled.mean - oracle).abs() < 0.05);
    assert_eq!(sampled, lower_bound(&corpus, 99, &table, None, 1).unwrap());
}

#[test]
fn lower_bound_of_identical_sentences_is_one() {
    let s = toks("c01 c02 c03");
    let corpus = StyledCorpus::new(vec![s.clone(), s.clone(), s.clone(), s], vec![0, 1, 0, 1], 2).unwrap();
    let lb = lower_bound(&corpus, LOWER_BOUND_PAIRS, &synth_table(), None, 3).unwrap();
    assert!((lb.mean - 1.0).abs() < 1e-12);
    let three = StyledCorpus::new(vec![toks("c01")], vec![0], 3).unwrap();
    assert!(matches!(lower_bound(&three, 10, &synth_table(), None, 0), Err(Error::Unsupported(_))));
}

fn zero_classifier() -> StrengthClassifier {
    let corpus = synth_corpus(1, 100).unwrap();
    let cfg = StrengthConfig {
        word_dim: 4,
        hidden_dim: 3,
        epochs: 1,
        batch_size: 64,
        ..StrengthConfig::default()
    };
    let mut clf = StrengthClassifier::train(&corpus, &StyledCorpus { n_styles: 2, ..Default::default() }, &cfg).unwrap();
    let ids: Vec<_> = clf.store.ids().collect();
    for id in ids {
        clf.store.get_mut(id).data_mut().fill(0.0);
    }
    clf
}

#[test]
fn zero_classifier_scores_half() {
    let clf = zero_classifier();
    let sents = vec![toks("c01 aa1"), toks("bb2 c03 c04"), vec![]];
    assert_eq!(clf.scores(&sents).unwrap(), [0.5, 0.5, 0.5]);
    // 0.5 falls on the style-0 side, so balanced data scores 50%
    let acc = clf.accuracy(&[toks("c01"), toks("c02")], &[0, 1]).unwrap();
    assert_eq!(acc, 0.5);
}

#[test]
fn score_orientation_and_strength_arithmetic() {
    assert_eq!(style_of_score(0.3), 0);
    assert_eq!(style_of_score(0.5), 0);
    assert_eq!(style_of_score(0.7), 1);
    let clf = zero_classifier();
    let outs = vec![toks("c01"); 4];
    assert_eq!(transfer_strength(&clf, &outs, &[0, 0, 0, 1]).unwrap(), 0.75);
    assert_eq!(transfer_strength(&clf, &outs, &[0; 4]).unwrap(), 1.0);
    assert!(matches!(transfer_strength(&clf, &[], &[]), Err(Error::Contract(_))));
}

#[test]
fn classifier_rejects_more_than_two_styles() {
    let corpus = StyledCorpus::new(vec![toks("a"), toks("b"), toks("c")], vec![0, 1, 2], 3).unwrap();
    assert!(matches!(
        StrengthClassifier::train(&corpus, &corpus, &StrengthConfig::default()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn classifier_learns_markers_and_round_trips() {
    let corpus = synth_corpus(2, 300).unwrap();
    let splits = split_corpus(&corpus, 1, SplitPolicy::default()).unwrap();
    let cfg = StrengthConfig {
        word_dim: 8,
        hidden_dim: 8,
        epochs: 2,
        batch_size: 16,
        ..StrengthConfig::default()
    };
    let clf = StrengthClassifier::train(&splits.train, &splits.validation, &cfg).unwrap();
    assert!(clf.val_accuracy >= 0.9, "{}", clf.val_accuracy);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("clf.bin");
    clf.save(&p).unwrap();
    let back = StrengthClassifier::load(&p).unwrap();
    assert_eq!(back.config, clf.config);
    let a = clf.scores(&splits.test.sentences).unwrap();
    let b = back.scores(&splits.test.sentences).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-5);
    }
}

#[test]
fn identity_outputs_preserve_content() {
    let corpus = synth_corpus(5, 100).unwrap();
    let clf = zero_classifier();
    let table = synth_table();
    let targets: Vec<usize> = corpus.labels.iter().map(|l| 1 - l).collect();
    let s = score_outputs(&corpus.sentences, &corpus.sentences, &targets, &clf, &table, None).unwrap();
    assert!((s.content_preservation - 1.0).abs() < 1e-12);
    assert_eq!(s.skipped_pairs, 0);
    assert_eq!(s.transfer_strength, 0.5);
}

#[test]
fn report_row_schema_round_trips() {
    let r = EvalReport {
        model: ModelKind::StyleEmbedding.name().into(),
        word_dim: 16,
        enc_dim: 32,
        style_dim: 8,
        transfer_strength: 0.1 + 0.2,
        content_preservation: 2.0f64.sqrt() / 2.0,
        skipped_pairs: 3,
        n_sentences: 0,
    };
    let row = r.csv_row();
    assert_eq!(row.split(',').count(), 7);
    assert_eq!(CSV_HEADER.split(',').count(), 7);
    assert_eq!(EvalReport::parse_csv_row(&row).unwrap(), r);
    assert!(EvalReport::parse_csv_row("a,b").is_err());
}
