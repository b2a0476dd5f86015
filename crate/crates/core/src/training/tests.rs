use std::path::Path;

use super::*;
use crate::textpipe::{split_corpus, synth_corpus, SplitPolicy};

fn synth_data(per_style: usize) -> (Vocabulary, Vec<String>, StyledBatch, StyledBatch) {
    let corpus = synth_corpus(3, per_style).unwrap();
    let splits = split_corpus(&corpus, 5, SplitPolicy::default()).unwrap();
    let vocab = Vocabulary::build(&splits.train.sentences, 100).unwrap();
    let train = StyledBatch::encode(&splits.train, &vocab);
    let valid = StyledBatch::encode(&splits.validation, &vocab);
    (vocab, vec!["aa".into(), "bb".into()], train, valid)
}

fn small_config(kind: ModelKind) -> TrainConfig {
    TrainConfig {
        kind,
        word_dim: 6,
        enc_dim: 8,
        style_dim: if kind == ModelKind::StyleEmbedding { 4 } else { 0 },
        batch_size: 16,
        lr: 1.0,
        max_epochs: 3,
        seed: 11,
    }
}

#[test]
fn mixed_batches_cover_in_order_sizes() {
    let styles = vec![0; 10];
    let b = make_batches(&styles, 4, 1, BatchMode::Mixed);
    assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), [4, 4, 2]);
    let mut all: Vec<usize> = b.concat();
    all.sort();
    assert_eq!(all, (0..10).collect::<Vec<_>>());
    assert_eq!(b, make_batches(&styles, 4, 1, BatchMode::Mixed));
    assert_ne!(b, make_batches(&styles, 4, 2, BatchMode::Mixed));
}

#[test]
fn grouped_batches_alternate_and_are_fair() {
    let styles: Vec<usize> = (0..40).map(|i| usize::from(i % 3 == 0)).collect();
    let b = make_batches(&styles, 4, 9, BatchMode::Grouped);
    let order: Vec<usize> = b.iter().map(|x| styles[x[0]]).collect();
    for x in &b {
        assert!(x.iter().all(|&i| styles[i] == styles[x[0]]), "single-style batches");
    }
    // 14 style-1 examples give 4 batches, 26 style-0 give 7
    assert_eq!(&order[..8], &[0, 1, 0, 1, 0, 1, 0, 1]);
    assert!(order[8..].iter().all(|&s| s == 0));
    let mut all: Vec<usize> = b.concat();
    all.sort();
    assert_eq!(all, (0..40).collect::<Vec<_>>());
    assert_eq!(b, make_batches(&styles, 4, 9, BatchMode::Grouped));
}

#[test]
fn auto_encoder_step_has_no_adversarial_terms() {
    let (vocab, _, train, _) = synth_data(100);
    let cfg = small_config(ModelKind::AutoEncoder);
    let model = StyleModel::new(cfg.kind, cfg.dims(vocab.len(), 2), 1).unwrap();
    let mut t = Trainer::new(model, 1.0);
    let terms = t.train_step(&train.subset(&[0, 1, 2, 3])).unwrap();
    assert_eq!((terms.adv1, terms.adv2), (0.0, 0.0));
    assert_eq!(terms.total, terms.gen);
    assert!(matches!(
        t.classifier_phase(&Tensor::zeros(&[1, 8]), &[0]),
        Err(Error::Contract(_))
    ));
}

fn snapshot(model: &StyleModel, ids: &[crate::numerics::ParamId]) -> Vec<Vec<f64>> {
    ids.iter().map(|&id| model.store.get(id).data().to_vec()).collect()
}

#[test]
fn phases_touch_only_their_parameters() {
    let (vocab, _, train, _) = synth_data(100);
    for kind in [ModelKind::MultiDecoder, ModelKind::StyleEmbedding] {
        let cfg = small_config(kind);
        let model = StyleModel::new(kind, cfg.dims(vocab.len(), 2), 2).unwrap();
        let batch = train.subset(&(0..12).collect::<Vec<_>>());
        let gen_ids = model.generator_ids();
        let clf_ids = model.classifier_ids();

        let mut g = Graph::new();
        let c = model.content(&mut g, &batch.seqs).unwrap();
        let c = g.value(c).clone();

        let mut phase_a = Trainer::new(model.clone(), 1.0);
        let before = phase_a.classifier_phase(&c, &batch.styles).unwrap();
        assert_eq!(snapshot(&phase_a.model, &gen_ids), snapshot(&model, &gen_ids));
        assert_ne!(snapshot(&phase_a.model, &clf_ids), snapshot(&model, &clf_ids));
        // the classifier loss on the same batch does not increase
        let mut probe = phase_a.clone();
        let after = probe.classifier_phase(&c, &batch.styles).unwrap();
        assert!(after <= before, "{after} > {before}");

        let mut full = Trainer::new(model.clone(), 1.0);
        let terms = full.train_step(&batch).unwrap();
        assert_eq!(terms.adv1, before);
        assert_eq!(snapshot(&full.model, &clf_ids), snapshot(&phase_a.model, &clf_ids));
        assert_ne!(snapshot(&full.model, &gen_ids), snapshot(&model, &gen_ids));
        assert_eq!(terms.total, terms.gen + terms.adv1 + terms.adv2);
    }
}

#[test]
fn non_finite_parameters_are_a_numeric_error() {
    let (vocab, _, train, _) = synth_data(100);
    let cfg = small_config(ModelKind::MultiDecoder);
    let mut model = StyleModel::new(cfg.kind, cfg.dims(vocab.len(), 2), 3).unwrap();
    let id = model.encoder.w;
    model.store.get_mut(id).data_mut()[0] = f64::NAN;
    let mut t = Trainer::new(model, 1.0);
    let before = t.model.store.clone();
    let err = t.train_step(&train.subset(&[0, 1])).unwrap_err();
    assert!(matches!(err, Error::Numeric(_)));
    assert_eq!(err.exit_code(), 3);
    let dec = t.model.decoders[0].proj_w;
    assert_eq!(t.model.store.get(dec), before.get(dec));
}

#[test]
fn perplexity_of_uniform_model_is_vocab_size() {
    let (vocab, _, _, valid) = synth_data(100);
    let cfg = small_config(ModelKind::MultiDecoder);
    let mut model = StyleModel::new(cfg.kind, cfg.dims(vocab.len(), 2), 4).unwrap();
    let ids: Vec<_> = model.store.ids().collect();
    for id in ids {
        model.store.get_mut(id).data_mut().fill(0.0);
    }
    let ppl = validation_perplexity(&model, &valid).unwrap();
    assert!((ppl - vocab.len() as f64).abs() < 1e-9);
    assert!(validation_perplexity(&model, &StyledBatch::default()).is_err());
}

#[test]
fn one_epoch_fit_returns_that_epoch() {
    let (vocab, names, train, valid) = synth_data(100);
    let mut cfg = small_config(ModelKind::AutoEncoder);
    cfg.max_epochs = 1;
    let data = TrainData {
        vocab: &vocab,
        style_names: &names,
        train: &train,
        validation: &valid,
    };
    let mut seen = 0;
    let out = fit(&cfg, data, &mut |_| seen += 1).unwrap();
    assert_eq!((out.best.epoch, out.log.len(), seen), (1, 1, 1));
    assert!(out.warning.is_none());
    assert_eq!(out.log[0].step, train.len().div_ceil(cfg.batch_size));
}

#[test]
fn fit_is_deterministic_and_selects_the_minimum() {
    let (vocab, names, train, valid) = synth_data(100);
    for kind in ModelKind::ALL {
        let cfg = small_config(kind);
        let data = TrainData {
            vocab: &vocab,
            style_names: &names,
            train: &train,
            validation: &valid,
        };
        let a = fit(&cfg, data, &mut |_| {}).unwrap();
        let b = fit(&cfg, data, &mut |_| {}).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.best.epoch, b.best.epoch);
        let min = a.log.iter().map(|e| e.val_perplexity).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best.val_perplexity, min);
        assert_eq!(a.log[a.best.epoch - 1].val_perplexity, min);
        assert_eq!(a.best.to_bytes().unwrap(), b.best.to_bytes().unwrap());
    }
}

#[test]
fn training_lowers_validation_perplexity() {
    let (vocab, names, train, valid) = synth_data(200);
    let cfg = TrainConfig {
        max_epochs: 4,
        ..small_config(ModelKind::AutoEncoder)
    };
    let untrained = StyleModel::new(cfg.kind, cfg.dims(vocab.len(), 2), cfg.seed).unwrap();
    let start = validation_perplexity(&untrained, &valid).unwrap();
    let data = TrainData {
        vocab: &vocab,
        style_names: &names,
        train: &train,
        validation: &valid,
    };
    let out = fit(&cfg, data, &mut |_| {}).unwrap();
    assert!(out.best.val_perplexity < 0.85 * start, "{start} -> {:?}", out.log);
}

fn trained_checkpoint(kind: ModelKind) -> (Checkpoint, StyledBatch) {
    let (vocab, names, train, valid) = synth_data(100);
    let cfg = TrainConfig {
        max_epochs: 1,
        ..small_config(kind)
    };
    let data = TrainData {
        vocab: &vocab,
        style_names: &names,
        train: &train,
        validation: &valid,
    };
    (fit(&cfg, data, &mut |_| {}).unwrap().best, valid)
}

fn losses_of(model: &StyleModel, batch: &StyledBatch) -> LossTerms {
    let mut g = Graph::new();
    model.losses(&mut g, batch).unwrap().values(&g)
}

#[test]
fn checkpoint_roundtrip_reproduces_losses() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let (ckpt, valid) = trained_checkpoint(kind);
        let path = dir.path().join(format!("{kind}.ckpt"));
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.config, ckpt.config);
        assert_eq!(back.vocab, ckpt.vocab);
        assert_eq!(back.style_names, ckpt.style_names);
        assert_eq!((back.epoch, back.val_perplexity), (ckpt.epoch, ckpt.val_perplexity));
        let five = valid.subset(&[0, 1, 2, 3, 4]);
        let (a, b) = (losses_of(&ckpt.model, &five), losses_of(&back.model, &five));
        assert!((a.total - b.total).abs() <= 1e-6 * a.total.abs().max(1.0));
        assert_eq!(a, b);
        assert_eq!(back.style_index("bb"), Some(1));
    }
}

fn reseal(mut body: Vec<u8>) -> Vec<u8> {
    use sha2::{Digest, Sha256};
    let d = Sha256::digest(&body);
    body.extend_from_slice(&d);
    body
}

#[test]
fn checkpoint_errors() {
    let (ckpt, _) = trained_checkpoint(ModelKind::MultiDecoder);
    let bytes = ckpt.to_bytes().unwrap();
    let p = Path::new("mem.ckpt");

    let truncated = &bytes[..bytes.len() - 100];
    assert!(matches!(Checkpoint::from_bytes(truncated, p), Err(Error::Corrupt(..))));
    assert!(matches!(Checkpoint::from_bytes(&bytes[..10], p), Err(Error::Corrupt(..))));

    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 1;
    assert!(matches!(Checkpoint::from_bytes(&flipped, p), Err(Error::Corrupt(..))));

    let body = bytes[..bytes.len() - 32].to_vec();
    let mut v2 = body.clone();
    v2[8..12].copy_from_slice(&7u32.to_le_bytes());
    assert!(matches!(Checkpoint::from_bytes(&reseal(v2), p), Err(Error::Version(..))));

    // rewrite the declared tensor count, keeping the header length
    let hlen = u64::from_le_bytes(body[12..20].try_into().unwrap()) as usize;
    let header = String::from_utf8(body[20..20 + hlen].to_vec()).unwrap();
    let n = ckpt.model.store.len();
    let from = format!("\"tensor_count\": {n}");
    assert!(header.contains(&from));
    let to = format!("\"tensor_count\": {}", n + 1);
    let to = format!("{to:<width$}", width = from.len());
    let new_header = header.replace(&from, &to);
    let mut tampered = body[..20].to_vec();
    tampered.extend_from_slice(new_header.as_bytes());
    tampered.extend_from_slice(&body[20 + hlen..]);
    assert!(matches!(Checkpoint::from_bytes(&reseal(tampered), p), Err(Error::Version(..))));

    assert!(Checkpoint::from_bytes(&bytes, p).is_ok());
}

#[test]
fn config_validation() {
    let mut c = TrainConfig::reference(ModelKind::StyleEmbedding);
    assert_eq!((c.batch_size, c.lr, c.max_epochs), (128, 1e-4, 50));
    assert!(c.validate().is_ok());
    c.style_dim = 0;
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    let mut c = TrainConfig::reference(ModelKind::MultiDecoder);
    c.batch_size = 0;
    assert!(c.validate().is_err());
    let mut c = TrainConfig::reference(ModelKind::MultiDecoder);
    c.max_epochs = 0;
    assert!(c.validate().is_err());
}
