use textscene_core::model::{Model, ModelConfig, RunOptions};
use textscene_core::scene::{feature_schema, Mode};
use textscene_core::tensor::{Tape, Tensor};

fn step_losses(model: &Model, ids: &[usize], targets: &[Vec<usize>], ratio: f64) -> Vec<Vec<f64>> {
    let mut tape = Tape::new(&model.params);
    let opts = RunOptions { train: false, seed: 3, teacher_forcing: ratio };
    let pass = model.forward(&mut tape, ids, Some(targets), &opts).unwrap();
    pass.steps
        .iter()
        .zip(targets)
        .map(|(step, t)| step.dists.iter().zip(t).map(|(&d, &c)| -tape.value(d).data()[c].ln()).collect())
        .collect()
}

/// A copy whose shape head strongly prefers class `k`, so its shape
/// predictions are wrong wherever the target differs.
fn corrupt_shape_head(model: &Model, k: usize) -> Model {
    let mut params = model.params.clone();
    let (_, bias) = model.head_params(0);
    let b: &mut Tensor = &mut params[bias.0];
    for (i, v) in b.data_mut().iter_mut().enumerate() {
        *v = if i == k { 50.0 } else { -50.0 };
    }
    Model::from_params(model.config.clone(), params).unwrap()
}

#[test]
fn full_teacher_forcing_ignores_earlier_predictions() {
    let schema = feature_schema(Mode::Static);
    let model = Model::init(ModelConfig::new(&schema, 12, 24, 12, 24), 5).unwrap();
    let ids = [2, 5, 7, 3, 9, 11, 4];
    let targets = vec![vec![1, 4, 0, 1], vec![2, 6, 1, 0], vec![0, 2, 1, 1]];
    let corrupted = corrupt_shape_head(&model, 0);

    let clean = step_losses(&model, &ids, &targets, 1.0);
    let dirty = step_losses(&corrupted, &ids, &targets, 1.0);
    for (a, b) in clean.iter().zip(&dirty) {
        for head in 1..4 {
            assert_eq!(a[head], b[head]);
        }
    }

    let clean = step_losses(&model, &ids, &targets, 0.0);
    let dirty = step_losses(&corrupted, &ids, &targets, 0.0);
    assert_eq!(clean[0][1..], dirty[0][1..]);
    assert!(clean[1..].iter().zip(&dirty[1..]).any(|(a, b)| a[1..] != b[1..]));
}
