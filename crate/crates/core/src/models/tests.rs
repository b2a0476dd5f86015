use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::numerics::gradcheck::{numeric_param_grad, rel_err};
use crate::textpipe::PAD_ID;

const TOL: f64 = 1e-4;

fn zero_all(store: &mut ParamStore) {
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        store.get_mut(id).data_mut().fill(0.0);
    }
}

/// Rescales every parameter so FD checks see non-trivial activations.
fn widen(store: &mut ParamStore, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        for v in store.get_mut(id).data_mut() {
            *v = rng.gen_range(-0.6..0.6);
        }
    }
}

fn check_all_params(store: &ParamStore, ids: &[ParamId], loss: impl Fn(&ParamStore) -> (Graph, Var)) {
    let (mut g, l) = loss(store);
    let grads = g.backward(l).unwrap();
    for &id in ids {
        let numeric = numeric_param_grad(store, id, |s| {
            let (g, l) = loss(s);
            g.scalar(l)
        });
        let analytic = grads
            .param(id)
            .map(|t| t.data().to_vec())
            .unwrap_or_else(|| vec![0.0; numeric.len()]);
        let e = rel_err(&analytic, &numeric);
        assert!(e < TOL, "{}: rel err {e}", store.name(id));
    }
}

fn tiny_gru(seed: u64) -> (ParamStore, GruParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let p = GruParams::init(&mut store, "g", 9, 4, 5, &mut rng);
    widen(&mut store, seed + 1);
    (store, p)
}

#[test]
fn gru_zero_weights() {
    let (mut store, p) = tiny_gru(1);
    zero_all(&mut store);
    let mut g = Graph::new();
    let s0 = g.constant(Tensor::zeros(&[1, 5]));
    let s = gru_cell(&mut g, &store, &p, s0, &[4]).unwrap();
    assert!(g.value(s).data().iter().all(|&x| x == 0.0));

    let v = Tensor::matrix(1, 5, vec![1.0, -2.0, 0.5, 4.0, 0.0]).unwrap();
    let sv = g.constant(v.clone());
    let s = gru_cell(&mut g, &store, &p, sv, &[4]).unwrap();
    let half: Vec<f64> = v.data().iter().map(|x| x / 2.0).collect();
    assert_eq!(g.value(s).data(), &half[..]);
}

#[test]
fn gru_shape_error() {
    let (store, p) = tiny_gru(2);
    let mut g = Graph::new();
    let s0 = g.constant(Tensor::zeros(&[1, 4]));
    assert!(matches!(gru_cell(&mut g, &store, &p, s0, &[1]), Err(Error::Dimension(_))));
}

#[test]
fn gru_gradient_of_squared_norm() {
    let (store, p) = tiny_gru(3);
    let s_prev = Tensor::matrix(2, 5, (0..10).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
    let f = |s: &ParamStore| {
        let mut g = Graph::new();
        let sp = g.constant(s_prev.clone());
        let out = gru_cell(&mut g, s, &p, sp, &[3, 7]).unwrap();
        let sq = g.mul(out, out).unwrap();
        let l = g.sum(sq);
        (g, l)
    };
    check_all_params(&store, &p.ids(), f);
}

#[test]
fn encode_basics() {
    let (store, p) = tiny_gru(4);
    let mut g = Graph::new();
    let c = encode(&mut g, &store, &p, &[vec![6]]).unwrap();
    let s0 = g.constant(Tensor::zeros(&[1, 5]));
    let one = gru_cell(&mut g, &store, &p, s0, &[6]).unwrap();
    assert_eq!(g.value(c), g.value(one));

    let a = encode(&mut g, &store, &p, &[vec![4, 5, 6]]).unwrap();
    let b = encode(&mut g, &store, &p, &[vec![6, 5, 4]]).unwrap();
    assert_ne!(g.value(a), g.value(b));

    assert!(matches!(encode(&mut g, &store, &p, &[vec![]]), Err(Error::Contract(_))));
    assert!(matches!(encode(&mut g, &store, &p, &[]), Err(Error::Contract(_))));

    let mut zero = store.clone();
    zero_all(&mut zero);
    let mut g = Graph::new();
    let c = encode(&mut g, &zero, &p, &[vec![4, 5, 6, 7]]).unwrap();
    assert!(g.value(c).data().iter().all(|&x| x == 0.0));
}

#[test]
fn encode_batch_matches_individual() {
    let (store, p) = tiny_gru(5);
    let seqs = vec![vec![4, 5], vec![6, 7, 8, 4], vec![5]];
    let mut g = Graph::new();
    let batch = encode(&mut g, &store, &p, &seqs).unwrap();
    for (i, s) in seqs.iter().enumerate() {
        let single = encode(&mut g, &store, &p, std::slice::from_ref(s)).unwrap();
        assert_eq!(g.value(batch).row(i), g.value(single).data());
    }
}

fn tiny_decoder(seed: u64, v: usize, h: usize) -> (ParamStore, DecoderParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let d = DecoderParams::init(&mut store, "d", v, 3, h, &mut rng);
    widen(&mut store, seed + 1);
    (store, d)
}

#[test]
fn nll_uniform_and_degenerate() {
    let (mut store, d) = tiny_decoder(6, 10, 4);
    zero_all(&mut store);
    let targets = vec![vec![5, 6, EOS_ID], vec![7, EOS_ID]];
    let mut g = Graph::new();
    let init = g.constant(Tensor::zeros(&[2, 4]));
    let l = teacher_forced_nll(&mut g, &store, &d, init, &targets).unwrap();
    assert!((g.scalar(l) - 5.0 * 10f64.ln()).abs() < 1e-12);

    let init = g.constant(Tensor::zeros(&[1, 4]));
    let l = teacher_forced_nll(&mut g, &store, &d, init, &[vec![EOS_ID]]).unwrap();
    assert!((g.scalar(l) - 10f64.ln()).abs() < 1e-12);

    let long = vec![vec![5; MAX_TARGET_LEN + 1]];
    let init = g.constant(Tensor::zeros(&[1, 4]));
    assert!(matches!(
        teacher_forced_nll(&mut g, &store, &d, init, &long),
        Err(Error::Contract(_))
    ));
    let ok = vec![vec![5; MAX_TARGET_LEN]];
    assert!(teacher_forced_nll(&mut g, &store, &d, init, &ok).is_ok());
}

#[test]
fn nll_gradient_three_tokens() {
    let (store, d) = tiny_decoder(7, 8, 4);
    let init = Tensor::matrix(1, 4, vec![0.3, -0.2, 0.5, 0.1]).unwrap();
    let f = |s: &ParamStore| {
        let mut g = Graph::new();
        let i = g.constant(init.clone());
        let l = teacher_forced_nll(&mut g, s, &d, i, &[vec![4, 6, EOS_ID]]).unwrap();
        (g, l)
    };
    check_all_params(&store, &d.ids(), f);
}

#[test]
fn nll_padding_rows_are_neutral() {
    let (store, d) = tiny_decoder(8, 8, 4);
    let init = Tensor::matrix(2, 4, vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.2, 0.0, 0.7]).unwrap();
    let mut g = Graph::new();
    let i = g.constant(init.clone());
    let both = teacher_forced_nll(&mut g, &store, &d, i, &[vec![4, 6, EOS_ID], vec![5, EOS_ID]]).unwrap();
    let mut sum = 0.0;
    for (r, t) in [vec![4, 6, EOS_ID], vec![5, EOS_ID]].into_iter().enumerate() {
        let i = g.constant(Tensor::matrix(1, 4, init.row(r).to_vec()).unwrap());
        let l = teacher_forced_nll(&mut g, &store, &d, i, &[t]).unwrap();
        sum += g.scalar(l);
    }
    assert!((g.scalar(both) - sum).abs() < 1e-12);
}

#[test]
fn greedy_decode_stops_and_caps() {
    let (mut store, d) = tiny_decoder(9, 8, 4);
    zero_all(&mut store);
    let init = Tensor::zeros(&[3, 4]);
    store.get_mut(d.proj_b).data_mut()[EOS_ID] = 5.0;
    let out = greedy_decode(&store, &d, &init, 20).unwrap();
    assert_eq!(out, vec![Vec::<usize>::new(); 3]);

    store.get_mut(d.proj_b).data_mut()[EOS_ID] = 0.0;
    store.get_mut(d.proj_b).data_mut()[6] = 5.0;
    let out = greedy_decode(&store, &d, &init, 7).unwrap();
    assert!(out.iter().all(|o| o == &vec![6; 7]));

    // all-equal logits: the lowest id wins
    store.get_mut(d.proj_b).data_mut().fill(0.0);
    let out = greedy_decode(&store, &d, &init, 3).unwrap();
    assert_eq!(out[0], vec![PAD_ID; 3]);
    assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
}

fn tiny_classifier(seed: u64, h: usize, n: usize) -> (ParamStore, ClassifierParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let c = ClassifierParams::init(&mut store, "c", h, n, &mut rng);
    widen(&mut store, seed + 1);
    (store, c)
}

#[test]
fn classifier_uniform_and_saturation() {
    let (mut store, clf) = tiny_classifier(10, 3, 4);
    zero_all(&mut store);
    let mut g = Graph::new();
    let c = g.constant(Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 5.0]).unwrap());
    let p = clf.predict(&mut g, &store, c, false).unwrap();
    assert!(g.value(p).data().iter().all(|&x| (x - 0.25).abs() < 1e-15));

    let (mut store, clf) = tiny_classifier(11, 3, 2);
    zero_all(&mut store);
    store.get_mut(clf.b2).data_mut()[1] = 40.0;
    let mut g = Graph::new();
    let c = g.constant(Tensor::matrix(1, 3, vec![1.0, 2.0, 3.0]).unwrap());
    let p = clf.predict(&mut g, &store, c, false).unwrap();
    assert!((g.value(p).row(0)[1] - 1.0).abs() < 1e-9);
}

#[test]
fn classifier_gradient() {
    let (store, clf) = tiny_classifier(12, 4, 3);
    let c = Tensor::matrix(2, 4, vec![0.5, -0.3, 0.2, 0.9, -0.7, 0.1, 0.4, -0.2]).unwrap();
    let f = |s: &ParamStore| {
        let mut g = Graph::new();
        let cv = g.constant(c.clone());
        let l = adv1_loss(&mut g, s, &clf, cv, &[2, 0]).unwrap();
        (g, l)
    };
    check_all_params(&store, &clf.ids(), f);
}

/// A one-unit classifier whose style-1 probability for content `x` is
/// `sigmoid(10 tanh(x))`.
fn probe_classifier() -> (ParamStore, ClassifierParams) {
    let (mut store, clf) = tiny_classifier(13, 1, 2);
    zero_all(&mut store);
    store.get_mut(clf.w1).data_mut()[0] = 1.0;
    store.get_mut(clf.w2).data_mut()[1] = 10.0;
    (store, clf)
}

fn content_for(p: f64) -> f64 {
    ((p / (1.0 - p)).ln() / 10.0).atanh()
}

#[test]
fn adv1_examples() {
    let (store, clf) = probe_classifier();
    let mut g = Graph::new();
    let xs: Vec<f64> = [0.9, 0.5, 0.25].iter().map(|&p| content_for(p)).collect();
    let c = g.constant(Tensor::matrix(3, 1, xs).unwrap());
    let l = adv1_loss(&mut g, &store, &clf, c, &[1, 1, 1]).unwrap();
    let oracle = -(0.9f64.ln() + 0.5f64.ln() + 0.25f64.ln());
    assert!((g.scalar(l) - oracle).abs() < 1e-9);
    assert!((g.scalar(l) - 2.1848).abs() < 5e-5);

    assert!(matches!(adv1_loss(&mut g, &store, &clf, c, &[1, 2, 0]), Err(Error::Index(_))));

    let (mut store, clf) = tiny_classifier(14, 2, 2);
    zero_all(&mut store);
    let mut g = Graph::new();
    let c = g.constant(Tensor::zeros(&[5, 2]));
    let l = adv1_loss(&mut g, &store, &clf, c, &[0, 1, 1, 0, 1]).unwrap();
    assert!((g.scalar(l) - 5.0 * 2f64.ln()).abs() < 1e-12);

    store.get_mut(clf.b2).data_mut().copy_from_slice(&[1000.0, -1000.0]);
    let mut g = Graph::new();
    let c = g.constant(Tensor::zeros(&[5, 2]));
    let l = adv1_loss(&mut g, &store, &clf, c, &[0; 5]).unwrap();
    assert_eq!(g.scalar(l), 0.0);
}

#[test]
fn adv2_examples() {
    let (mut store, clf) = tiny_classifier(15, 2, 3);
    zero_all(&mut store);
    let mut g = Graph::new();
    let c = g.constant(Tensor::zeros(&[4, 2]));
    let l = adv2_loss(&mut g, &store, &clf, c).unwrap();
    assert!((g.scalar(l) + 4.0 * 3f64.ln()).abs() < 1e-12);

    store.get_mut(clf.b2).data_mut().copy_from_slice(&[1000.0, -1000.0, 0.0]);
    let mut g = Graph::new();
    let c = g.constant(Tensor::zeros(&[4, 2]));
    let l = adv2_loss(&mut g, &store, &clf, c).unwrap();
    assert_eq!(g.scalar(l), 0.0);

    let (store, clf) = probe_classifier();
    let mut g = Graph::new();
    let c = g.constant(Tensor::matrix(1, 1, vec![content_for(0.2)]).unwrap());
    let l = adv2_loss(&mut g, &store, &clf, c).unwrap();
    let h = -(0.8 * 0.8f64.ln() + 0.2 * 0.2f64.ln());
    assert!((g.scalar(l) + h).abs() < 1e-9);
    assert!((g.scalar(l) + 0.5004).abs() < 5e-5);
}

#[test]
fn adv2_lower_bound_holds() {
    for seed in 0..20 {
        let (store, clf) = tiny_classifier(100 + seed, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 4;
        let mut g = Graph::new();
        let c = g.constant(Tensor::matrix(m, 3, (0..3 * m).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap());
        let l = adv2_loss(&mut g, &store, &clf, c).unwrap();
        assert!(g.scalar(l) >= -(m as f64) * 3f64.ln());
    }
}

fn dims(v: usize, ds: usize) -> ModelDims {
    ModelDims {
        vocab_size: v,
        word_dim: 3,
        enc_dim: 4,
        style_dim: ds,
        n_styles: 2,
    }
}

fn tiny_model(kind: ModelKind, seed: u64) -> StyleModel {
    let mut m = StyleModel::new(kind, dims(11, 2), seed).unwrap();
    widen(&mut m.store, seed + 7);
    m
}

fn sample_batch() -> StyledBatch {
    StyledBatch::new(
        vec![vec![4, 5, 6], vec![7, 8], vec![9, 10, 4, 5], vec![6]],
        vec![0, 1, 1, 0],
    )
    .unwrap()
}

/// One backward pass of the total gives each group the gradient of the terms
/// it optimizes: the classifier sees only adv1, the generator gen + adv2.
#[test]
fn composite_losses_gradient_check() {
    let batch = sample_batch();
    for (i, kind) in ModelKind::ALL.into_iter().enumerate() {
        let m = tiny_model(kind, 20 + i as u64);
        let eval = |s: &ParamStore| {
            let mut model = m.clone();
            model.store = s.clone();
            let mut g = Graph::new();
            let lv = model.losses(&mut g, &batch).unwrap();
            (g, lv)
        };
        let (mut g, lv) = eval(&m.store);
        let grads = g.backward(lv.total).unwrap();
        let groups = [
            (m.generator_ids(), true),
            (m.classifier_ids(), false),
        ];
        for (ids, generator) in groups {
            for id in ids {
                let numeric = numeric_param_grad(&m.store, id, |s| {
                    let (g, lv) = eval(s);
                    if generator {
                        g.scalar(lv.gen) + lv.adv2.map_or(0.0, |v| g.scalar(v))
                    } else {
                        g.scalar(lv.adv1.unwrap())
                    }
                });
                let analytic = grads
                    .param(id)
                    .map(|t| t.data().to_vec())
                    .unwrap_or_else(|| vec![0.0; numeric.len()]);
                let e = rel_err(&analytic, &numeric);
                assert!(e < TOL, "{kind} {}: rel err {e}", m.store.name(id));
            }
        }
    }
}

#[test]
fn total_is_exact_sum_of_terms() {
    let batch = sample_batch();
    for kind in [ModelKind::MultiDecoder, ModelKind::StyleEmbedding] {
        let m = tiny_model(kind, 30);
        let mut g = Graph::new();
        let l = m.losses(&mut g, &batch).unwrap().values(&g);

        let mut g2 = Graph::new();
        let c = m.content(&mut g2, &batch.seqs).unwrap();
        let (gen, _) = m.generation_loss(&mut g2, c, &batch).unwrap();
        let clf = m.classifier.as_ref().unwrap();
        let a1 = adv1_loss(&mut g2, &m.store, clf, c, &batch.styles).unwrap();
        let a2 = adv2_loss(&mut g2, &m.store, clf, c).unwrap();
        let sum = g2.scalar(gen) + g2.scalar(a1) + g2.scalar(a2);
        assert!((l.total - sum).abs() <= 1e-12);
        assert_eq!((l.gen, l.adv1, l.adv2), (g2.scalar(gen), g2.scalar(a1), g2.scalar(a2)));
    }
}

#[test]
fn gradient_isolation() {
    let batch = sample_batch();
    for kind in [ModelKind::MultiDecoder, ModelKind::StyleEmbedding] {
        let m = tiny_model(kind, 31);
        let mut g = Graph::new();
        let lv = m.losses(&mut g, &batch).unwrap();
        let grads = g.backward(lv.adv1.unwrap()).unwrap();
        for id in m.generator_ids() {
            assert!(grads.param(id).is_none_or(|t| t.data().iter().all(|&x| x == 0.0)));
        }
        assert!(m.classifier_ids().iter().any(|&id| grads.param(id).is_some()));

        let mut g = Graph::new();
        let lv = m.losses(&mut g, &batch).unwrap();
        let grads = g.backward(lv.adv2.unwrap()).unwrap();
        for id in m.classifier_ids() {
            assert!(grads.param(id).is_none());
        }
        assert!(m.encoder.ids().iter().any(|&id| grads.param(id).is_some()));
    }
}

#[test]
fn zero_model_loss_values() {
    let batch = sample_batch();
    let v = 11;
    for kind in [ModelKind::MultiDecoder, ModelKind::StyleEmbedding] {
        let mut m = tiny_model(kind, 32);
        zero_all(&mut m.store);
        let mut g = Graph::new();
        let l = m.losses(&mut g, &batch).unwrap().values(&g);
        let t = batch.target_tokens() as f64;
        let mm = batch.len() as f64;
        assert!((l.gen - t * (v as f64).ln()).abs() < 1e-10);
        assert!((l.adv1 - mm * 2f64.ln()).abs() < 1e-12);
        assert!((l.adv2 + mm * 2f64.ln()).abs() < 1e-12);
        assert!((l.adv1 + l.adv2).abs() < 1e-12);
    }
}

#[test]
fn multi_decoder_routing() {
    let m = tiny_model(ModelKind::MultiDecoder, 33);
    let only0 = StyledBatch::new(vec![vec![4, 5], vec![6, 7, 8]], vec![0, 0]).unwrap();
    let mut g = Graph::new();
    let lv = m.losses(&mut g, &only0).unwrap();
    assert!(lv.gen_per_decoder[1].is_none());
    let c = m.content(&mut g, &only0.seqs).unwrap();
    let direct = teacher_forced_nll(&mut g, &m.store, &m.decoders[0], c, &only0.targets()).unwrap();
    assert_eq!(g.scalar(lv.gen), g.scalar(direct));

    // perturbing decoder 1 moves only decoder 1's term
    let batch = sample_batch();
    let mut g = Graph::new();
    let before = m.losses(&mut g, &batch).unwrap();
    let per_before: Vec<f64> = before.gen_per_decoder.iter().map(|v| g.scalar(v.unwrap())).collect();
    let mut m2 = m.clone();
    for id in m2.decoders[1].ids() {
        for x in m2.store.get_mut(id).data_mut() {
            *x += 0.05;
        }
    }
    let mut g2 = Graph::new();
    let after = m2.losses(&mut g2, &batch).unwrap();
    let per_after: Vec<f64> = after.gen_per_decoder.iter().map(|v| g2.scalar(v.unwrap())).collect();
    assert_eq!(per_before[0], per_after[0]);
    assert_ne!(per_before[1], per_after[1]);

    let bad = StyledBatch::new(vec![vec![4]], vec![2]).unwrap();
    assert!(matches!(m.losses(&mut g2, &bad), Err(Error::Config(_))));
}

#[test]
fn style_embedding_symmetry_and_errors() {
    let mut m = tiny_model(ModelKind::StyleEmbedding, 34);
    let e = m.style_table.unwrap();
    let row: Vec<f64> = m.store.get(e).row(0).to_vec();
    m.store.get_mut(e).data_mut()[2..4].copy_from_slice(&row);
    let batch = sample_batch();
    let swapped = StyledBatch::new(batch.seqs.clone(), batch.styles.iter().map(|s| 1 - s).collect()).unwrap();
    let mut g = Graph::new();
    let a = m.losses(&mut g, &batch).unwrap();
    let b = m.losses(&mut g, &swapped).unwrap();
    assert_eq!(g.scalar(a.gen), g.scalar(b.gen));

    let bad = StyledBatch::new(vec![vec![4]], vec![2]).unwrap();
    assert!(matches!(m.losses(&mut g, &bad), Err(Error::Index(_))));
}

#[test]
fn style_embedding_gradient_reaches_table() {
    let m = tiny_model(ModelKind::StyleEmbedding, 35);
    let batch = sample_batch();
    let e = m.style_table.unwrap();
    let f = |s: &ParamStore| {
        let mut model = m.clone();
        model.store = s.clone();
        let mut g = Graph::new();
        let lv = model.losses(&mut g, &batch).unwrap();
        (g, lv.gen)
    };
    check_all_params(&m.store, &[e], f);
    let (mut g, l) = f(&m.store);
    assert!(g.backward(l).unwrap().param(e).is_some());
}

#[test]
fn decoder_widths() {
    let se = StyleModel::new(ModelKind::StyleEmbedding, dims(11, 3), 0).unwrap();
    assert_eq!(se.decoders.len(), 1);
    assert_eq!(se.decoders[0].hidden_dim(), 7);
    let md = StyleModel::new(ModelKind::MultiDecoder, dims(11, 3), 0).unwrap();
    assert_eq!(md.decoders.len(), 2);
    assert_eq!(md.decoders[1].hidden_dim(), 4);
    assert_eq!(md.classifier.as_ref().unwrap().input_dim, 4);
    let ae = StyleModel::new(ModelKind::AutoEncoder, dims(11, 3), 0).unwrap();
    assert!(ae.classifier.is_none() && ae.style_table.is_none());
}

#[test]
fn model_from_store_roundtrip() {
    for kind in ModelKind::ALL {
        let m = tiny_model(kind, 36);
        let back = StyleModel::from_store(kind, m.dims, m.store.clone()).unwrap();
        assert_eq!(back.generator_ids(), m.generator_ids());
        assert_eq!(back.classifier_ids(), m.classifier_ids());
        let out = back.transfer(&[vec![4, 5, 6]], 1).unwrap();
        assert_eq!(out, m.transfer(&[vec![4, 5, 6]], 1).unwrap());
        assert!(out[0].len() <= DEFAULT_MAX_DECODE);
    }
    let m = tiny_model(ModelKind::MultiDecoder, 37);
    assert!(StyleModel::from_store(ModelKind::StyleEmbedding, m.dims, m.store.clone()).is_err());
    assert_eq!("multi-decoder".parse::<ModelKind>().unwrap(), ModelKind::MultiDecoder);
    assert!("lstm".parse::<ModelKind>().is_err());
}

fn tiny_lstm(seed: u64) -> (ParamStore, LstmParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let p = LstmParams::init(&mut store, "l", 10, 3, 4, &mut rng);
    widen(&mut store, seed + 1);
    (store, p)
}

#[test]
fn lstm_zero_weights() {
    let (mut store, p) = tiny_lstm(40);
    zero_all(&mut store);
    let mut g = Graph::new();
    let h = g.constant(Tensor::zeros(&[1, 4]));
    let c = g.constant(Tensor::zeros(&[1, 4]));
    let (h2, c2) = lstm_cell(&mut g, &store, &p, h, c, &[5]).unwrap();
    assert!(g.value(h2).data().iter().all(|&x| x == 0.0));
    assert!(g.value(c2).data().iter().all(|&x| x == 0.0));
    let s = lstm_scores(&mut g, &store, &p, &[vec![4, 5], vec![6]]).unwrap();
    assert_eq!(g.value(s).data(), &[0.5, 0.5]);

    let bad = g.constant(Tensor::zeros(&[1, 3]));
    assert!(matches!(lstm_cell(&mut g, &store, &p, bad, c, &[5]), Err(Error::Dimension(_))));
}

#[test]
fn lstm_readout_gradient() {
    let (store, p) = tiny_lstm(41);
    let f = |s: &ParamStore| {
        let mut g = Graph::new();
        let sc = lstm_scores(&mut g, s, &p, &[vec![4, 7, 5, 9], vec![6, 8]]).unwrap();
        let l = lstm_bce(&mut g, sc, &[1, 0]).unwrap();
        (g, l)
    };
    check_all_params(&store, &p.ids(), f);
    let from = LstmParams::from_store(&store, "l").unwrap();
    assert_eq!(from, p);
}

#[test]
fn lstm_padding_neutral() {
    let (store, p) = tiny_lstm(42);
    let mut g = Graph::new();
    let both = lstm_scores(&mut g, &store, &p, &[vec![4, 7, 5], vec![6]]).unwrap();
    let one = lstm_scores(&mut g, &store, &p, &[vec![6]]).unwrap();
    assert_eq!(g.value(both).row(1), g.value(one).data());
}

