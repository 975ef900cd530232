use super::*;
use alloc::vec;
use crate::scene::{feature_schema, Mode};
use crate::tensor::grad_check;

fn toy(mode: Mode, seed: u64) -> Model {
    let schema = feature_schema(mode);
    let mut c = ModelConfig::new(&schema, 9, 16, 8, 16);
    c.mixer_dim = 4;
    Model::init(c, seed).unwrap()
}

fn zero_heads(model: &mut Model) {
    for i in 0..model.ids.head_w.len() {
        let (w, b) = model.head_params(i);
        model.params[w.0].data_mut().fill(0.0);
        model.params[b.0].data_mut().fill(0.0);
    }
}

#[test]
fn split_dims_sum() {
    assert_eq!(split_dims(128, 5), vec![26, 26, 26, 25, 25]);
    assert_eq!(split_dims(128, 4), vec![32; 4]);
    let schema = feature_schema(Mode::Full);
    let c = ModelConfig::desk(&schema, 50);
    assert_eq!(c.embed_dims.iter().sum::<usize>(), c.enc_dim);
    assert_eq!(ModelConfig::paper(&schema, 50).enc_dim, 1024);
    let mut bad = c.clone();
    bad.embed_dims[0] += 1;
    assert!(matches!(Model::init(bad, 0), Err(ModelError::Config(_))));
}

#[test]
fn encode_shape_and_determinism() {
    let schema = feature_schema(Mode::Static);
    let model = Model::init(ModelConfig::desk(&schema, 20), 3).unwrap();
    let ids = [2, 5, 7, 3, 9, 11];
    let mut tape = Tape::new(&model.params);
    let a = model.encode(&mut tape, &ids, &RunOptions::eval()).unwrap();
    let b = model.encode(&mut tape, &ids, &RunOptions::eval()).unwrap();
    assert_eq!(tape.value(a.h0).shape(), &[6, 128]);
    assert_eq!(tape.value(a.h0), tape.value(b.h0));
    assert_eq!(model.encode(&mut tape, &[], &RunOptions::eval()).unwrap_err(), ModelError::EmptyInput);
    assert!(matches!(model.encode(&mut tape, &[20], &RunOptions::eval()), Err(ModelError::Token { id: 20, .. })));
}

#[test]
fn single_token_attention_is_one() {
    let model = toy(Mode::Static, 1);
    let mut tape = Tape::new(&model.params);
    let enc = model.encode(&mut tape, &[4], &RunOptions::eval()).unwrap();
    let h = tape.constant(Tensor::filled(1, 16, 0.3));
    let (ctx, w) = model.attend(&mut tape, &enc, h).unwrap();
    assert_eq!(tape.value(w).data(), &[1.0]);
    assert_eq!(tape.value(ctx).data(), tape.value(enc.h0).data());
}

#[test]
fn attention_rows_are_distributions_with_zero_pads() {
    let model = toy(Mode::Animated, 2);
    let decoded = model.decode_ids(&[3, 4, PAD, 5, PAD]).unwrap();
    for row in &decoded.trace.rows {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(row[2], 0.0);
        assert_eq!(row[4], 0.0);
    }
}

#[test]
fn right_padding_does_not_change_decoding() {
    let model = toy(Mode::Static, 4);
    let plain = model.decode_ids(&[3, 4, 5, 6]).unwrap();
    let padded = model.decode_ids(&[3, 4, 5, 6, PAD, PAD]).unwrap();
    assert_eq!(plain.classes, padded.classes);
    for (a, b) in plain.trace.rows.iter().zip(&padded.trace.rows) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_head_weights_give_uniform_heads() {
    let mut model = toy(Mode::Animated, 5);
    zero_heads(&mut model);
    let mut tape = Tape::new(&model.params);
    let pass = model.forward(&mut tape, &[2, 3, 4], None, &RunOptions::eval()).unwrap();
    assert_eq!(pass.steps[0].dists.len(), 5);
    for (d, k) in pass.steps[0].dists.iter().zip([4, 8, 2, 2, 5]) {
        let v = tape.value(*d).data();
        assert_eq!(v.len(), k);
        for &p in v {
            assert!((p - 1.0 / k as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn head_counts_per_mode() {
    assert_eq!(toy(Mode::Static, 0).ids.head_w.len(), 4);
    assert_eq!(toy(Mode::Animated, 0).ids.head_w.len(), 5);
    assert_eq!(toy(Mode::Full, 0).config.class_counts[4], 6);
}

#[test]
fn feedback_concat_locality() {
    let model = toy(Mode::Static, 6);
    let mut tape = Tape::new(&model.params);
    let a = model.feature_feedback(&mut tape, &[0, 3, 1, 0]).unwrap();
    let b = model.feature_feedback(&mut tape, &[0, 3, 1, 0]).unwrap();
    let c = model.feature_feedback(&mut tape, &[0, 5, 1, 0]).unwrap();
    let (va, vb, vc) = (tape.value(a).data(), tape.value(b).data(), tape.value(c).data());
    assert_eq!(va.len(), 16);
    assert_eq!(va, vb);
    let dims = &model.config.embed_dims;
    let (lo, hi) = (dims[0], dims[0] + dims[1]);
    for i in 0..16 {
        assert_eq!(va[i] == vc[i], !(lo..hi).contains(&i), "coordinate {i}");
    }
    assert!(model.feature_feedback(&mut tape, &[0, 8, 1, 0]).is_err());
}

#[test]
fn untrained_decode_respects_cap() {
    for seed in 0..10 {
        let model = toy(Mode::Static, seed);
        let d = model.decode_ids(&[2, 3, 4, 5]).unwrap();
        assert!(d.classes.len() <= 11);
        assert_eq!(d.trace.rows.len(), d.classes.len());
    }
}

#[test]
fn teacher_forcing_irrelevant_when_predictions_match() {
    let ids = [2, 6, 3, 7, 8];
    let (model, targets) = (0..50)
        .find_map(|seed| {
            let model = toy(Mode::Static, seed);
            let d = model.decode_ids(&ids).unwrap();
            let objs: Vec<Vec<usize>> = d.classes.iter().take_while(|c| c[0] != SHAPE_EOS_INDEX).cloned().collect();
            (objs.len() >= 2).then(|| (model, objs[..2].to_vec()))
        })
        .expect("some seed decodes two objects");
    let run = |ratio: f64| {
        let mut tape = Tape::new(&model.params);
        let opts = RunOptions { train: false, seed: 9, teacher_forcing: ratio };
        let pass = model.forward(&mut tape, &ids, Some(&targets), &opts).unwrap();
        pass.steps.iter().flat_map(|s| s.dists.iter().map(|&d| tape.value(d).clone()).collect::<Vec<_>>()).collect::<Vec<_>>()
    };
    assert_eq!(run(0.0), run(1.0));
}

fn constant_pass(tape: &mut Tape, steps: &[Vec<Vec<f64>>]) -> ForwardPass {
    let steps = steps
        .iter()
        .map(|heads| Step {
            dists: heads.iter().map(|h| tape.constant(Tensor::row(h.clone()))).collect(),
            attention: tape.constant(Tensor::row(vec![1.0])),
        })
        .collect();
    ForwardPass { steps }
}

#[test]
fn loss_closed_forms() {
    let model = toy(Mode::Static, 0);
    let schema = feature_schema(Mode::Static);
    let weights = ClassWeights::uniform(&schema);
    let params: [Tensor; 0] = [];
    let one_hot = |k: usize, i: usize| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    let targets = vec![vec![1, 4, 0, 1]];

    let mut tape = Tape::new(&params);
    let pass = constant_pass(
        &mut tape,
        &[
            vec![one_hot(4, 1), one_hot(8, 4), one_hot(2, 0), one_hot(2, 1)],
            vec![one_hot(4, 3), one_hot(8, 0), one_hot(2, 0), one_hot(2, 0)],
        ],
    );
    let l = model.loss(&mut tape, &pass, &targets, &weights).unwrap();
    assert!(tape.value(l).item().abs() < 1e-12);

    let uniform = |k: usize| vec![1.0 / k as f64; k];
    let mut tape = Tape::new(&params);
    let step = vec![uniform(4), uniform(8), uniform(2), uniform(2)];
    let pass = constant_pass(&mut tape, &[step.clone(), step]);
    let l = model.loss(&mut tape, &pass, &targets, &weights).unwrap();
    let expected = libm::log(4.0) + libm::log(8.0) + 2.0 * libm::log(2.0) + libm::log(4.0);
    assert!((tape.value(l).item() - expected).abs() < 1e-12);

    let mut doubled = weights.clone();
    doubled.heads[1][4] = 2.0;
    let l2 = model.loss(&mut tape, &pass, &targets, &doubled).unwrap();
    let diff = tape.value(l2).item() - tape.value(l).item();
    assert!((diff - libm::log(8.0)).abs() < 1e-12);

    let short = ForwardPass { steps: pass.steps[..1].to_vec() };
    assert!(model.loss(&mut tape, &short, &targets, &weights).is_err());
}

#[test]
fn logit_shift_keeps_decoding() {
    let mut model = toy(Mode::Animated, 8);
    let ids = [2, 3, 4, 5, 6];
    let before = model.decode_ids(&ids).unwrap().classes;
    let (_, b) = model.head_params(1);
    for v in model.params[b.0].data_mut() {
        *v += 3.25;
    }
    assert_eq!(model.decode_ids(&ids).unwrap().classes, before);
}

#[test]
fn heads_are_independent() {
    let model = toy(Mode::Static, 10);
    let ids = [2, 3, 4, 5];
    let targets = vec![vec![0, 1, 0, 1], vec![2, 7, 1, 0]];
    let opts = RunOptions { train: false, seed: 1, teacher_forcing: 1.0 };
    let dists = |m: &Model| {
        let mut tape = Tape::new(&m.params);
        let pass = m.forward(&mut tape, &ids, Some(&targets), &opts).unwrap();
        pass.steps.iter().map(|s| s.dists.iter().map(|&d| tape.value(d).clone()).collect::<Vec<_>>()).collect::<Vec<_>>()
    };
    let base = dists(&model);
    let mut perturbed = model.clone();
    let (w, _) = perturbed.head_params(2);
    perturbed.params[w.0].data_mut()[0] += 0.5;
    let after = dists(&perturbed);
    for (s0, s1) in base.iter().zip(&after) {
        for head in 0..4 {
            assert_eq!(s0[head] == s1[head], head != 2);
        }
    }
}

#[test]
fn end_to_end_gradient_matches_finite_differences() {
    let schema = feature_schema(Mode::Animated);
    let mut c = ModelConfig::new(&schema, 7, 16, 8, 16);
    c.mixer_dim = 4;
    let model = Model::init(c, 21).unwrap();
    let ids = [2, 3, 4, 5, 6];
    let targets = vec![vec![0, 1, 0, 1, 2], vec![1, 5, 1, 0, 3]];
    let weights = ClassWeights {
        heads: vec![vec![1.2, 0.8, 1.0, 0.6], vec![1.0; 8], vec![0.9, 1.1], vec![1.0, 1.3], vec![0.7, 1.0, 1.5, 0.9, 1.1]],
        unseen: Vec::new(),
    };
    let opts = RunOptions { train: true, seed: 77, teacher_forcing: 0.5 };
    let err = grad_check(
        |tape, _| {
            let pass = model.forward(tape, &ids, Some(&targets), &opts).map_err(unwrap_tensor)?;
            model.loss(tape, &pass, &targets, &weights).map_err(unwrap_tensor)
        },
        &model.params,
        1e-4,
    )
    .unwrap();
    assert!(err < 1e-4, "max relative error {err}");
}

fn unwrap_tensor(e: ModelError) -> TensorError {
    match e {
        ModelError::Tensor(t) => t,
        other => panic!("{other}"),
    }
}

#[test]
fn greedy_decode_maps_unknown_words() {
    let model = toy(Mode::Static, 3);
    let vocab = Vocab::build(["a red cube", "two spheres", "big", "."]);
    assert_eq!(vocab.len(), 9);
    let parsed = model.greedy_decode("A zebra cube.", &vocab).unwrap();
    assert_eq!(parsed.tokens, ["a", "zebra", "cube", "."]);
    assert_eq!(parsed.trace.rows[0].len(), 4);
    assert_eq!(model.greedy_decode("A zebra cube.", &vocab).unwrap(), parsed);
    assert_eq!(model.greedy_decode("  ", &vocab).unwrap_err(), ModelError::EmptyInput);
}

#[test]
fn restored_params_are_checked() {
    let model = toy(Mode::Static, 3);
    let back = Model::from_params(model.config.clone(), model.params.clone()).unwrap();
    assert_eq!(back, model);
    let mut wrong = model.params.clone();
    wrong.pop();
    assert!(Model::from_params(model.config.clone(), wrong).is_err());
}
