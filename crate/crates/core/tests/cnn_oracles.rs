use ctilab::cnn::*;
use ctilab::dataset::NUM_CLASSES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_arch() -> ArchSpec {
    ArchSpec {
        input_channels: 2,
        input_len: 9,
        conv_channels: [3, 3],
        kernel: 3,
        padding: 1,
        stride: 1,
        hidden: [6, 6],
        num_classes: NUM_CLASSES,
    }
}

fn randomize(model: &mut CnnModel, rng: &mut ChaCha8Rng) {
    for p in model.parameters_mut() {
        p.iter_mut().for_each(|v| *v = rng.random_range(-0.8..0.8));
    }
}

/// Central differences over every parameter of the model.
fn check_gradients(model: &mut CnnModel, input: &[f64], targets: &[usize]) {
    let (_, analytic) = model.loss_and_gradients(input, targets).unwrap();
    let h = 1e-5;
    let shapes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut worst = 0.0f64;
    for (t, &len) in shapes.iter().enumerate() {
        for i in 0..len {
            let orig = model.parameters()[t][i];
            model.parameters_mut()[t][i] = orig + h;
            let (lp, _) = model.loss_and_gradients(input, targets).unwrap();
            model.parameters_mut()[t][i] = orig - h;
            let (lm, _) = model.loss_and_gradients(input, targets).unwrap();
            model.parameters_mut()[t][i] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            let a = analytic.tensors[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "tensor {t} index {i}: analytic {a}, numeric {numeric}");
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4);
}

#[test]
fn every_layer_passes_finite_difference_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut model = CnnModel::new(&tiny_arch(), 5).unwrap();
    randomize(&mut model, &mut rng);
    let batch = 4;
    let input: Vec<f64> = (0..batch * 18).map(|_| rng.random_range(-1.0..1.0)).collect();
    check_gradients(&mut model, &input, &[0, 3, 13, 7]);
}

#[test]
fn strided_model_passes_finite_difference_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let c1 = Conv1d::zeros(2, 3, 3, 2, 1);
    let c2 = Conv1d::zeros(3, 2, 2, 1, 0);
    let l1 = c1.output_len(10).unwrap();
    let l2 = c2.output_len(l1).unwrap();
    let layers = vec![
        Layer::Conv1d(c1),
        Layer::Relu,
        Layer::Conv1d(c2),
        Layer::Relu,
        Layer::Flatten,
        Layer::Dense(Dense::zeros(2 * l2, 5)),
        Layer::Relu,
        Layer::Dense(Dense::zeros(5, 4)),
        Layer::Relu,
        Layer::Dense(Dense::zeros(4, NUM_CLASSES)),
        Layer::LogSoftmax,
    ];
    let mut model = CnnModel::from_layers(2, 10, layers).unwrap();
    randomize(&mut model, &mut rng);
    let input: Vec<f64> = (0..3 * 20).map(|_| rng.random_range(-1.0..1.0)).collect();
    check_gradients(&mut model, &input, &[1, 12, 4]);
}

fn naive_conv(x: &[f64], layer: &Conv1d, len: usize) -> Vec<f64> {
    let out_len = (len + 2 * layer.padding - layer.kernel) / layer.stride + 1;
    let mut y = vec![0.0; layer.out_channels * out_len];
    for o in 0..layer.out_channels {
        for t in 0..out_len {
            let mut acc = layer.bias[o];
            for i in 0..layer.in_channels {
                for k in 0..layer.kernel {
                    let pos = (t * layer.stride + k) as isize - layer.padding as isize;
                    if pos >= 0 && (pos as usize) < len {
                        acc += layer.weight[(o * layer.in_channels + i) * layer.kernel + k] * x[i * len + pos as usize];
                    }
                }
            }
            y[o * out_len + t] = acc;
        }
    }
    y
}

#[test]
fn conv_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for (cin, cout, k, s, p, len) in [(2, 8, 5, 1, 2, 242), (3, 4, 3, 2, 1, 17), (1, 1, 1, 1, 0, 5), (4, 2, 4, 3, 3, 11)] {
        let mut layer = Conv1d::zeros(cin, cout, k, s, p);
        layer.weight.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
        layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        let x: Vec<f64> = (0..cin * len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = conv1d_forward(&Tensor::new(vec![cin, len], x.clone()).unwrap(), &layer).unwrap();
        let expect = naive_conv(&x, &layer, len);
        assert_eq!(y.shape()[1] * cout, expect.len());
        for (a, b) in y.data().iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn dense_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut d = Dense::zeros(37, 11);
    d.weight.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
    d.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
    let x: Vec<f64> = (0..37).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = dense_forward(&Tensor::new(vec![37], x.clone()).unwrap(), &d).unwrap();
    for o in 0..11 {
        let e = d.bias[o] + (0..37).map(|i| d.weight[o * 37 + i] * x[i]).sum::<f64>();
        assert!((y.data()[o] - e).abs() <= 1e-12);
    }
}

#[test]
fn adam_scalar_update_matches_hand_evaluation() {
    // One parameter, gradient 0.5 then -0.25, default betas.
    let cfg = AdamConfig { lr: 0.01, ..AdamConfig::default() };
    let mut st = AdamState::new(cfg, &[1]);
    let mut p = vec![1.0];
    st.step(&mut [&mut p], &Gradients { tensors: vec![vec![0.5]] }).unwrap();
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let (mut m, mut v) = (0.1 * 0.5, 0.001 * 0.25);
    let mut expect = 1.0 - 0.01 * (m / (1.0 - b1)) / ((v / (1.0 - b2)).sqrt() + eps);
    assert!((p[0] - expect).abs() <= 1e-12);
    st.step(&mut [&mut p], &Gradients { tensors: vec![vec![-0.25]] }).unwrap();
    m = b1 * m + (1.0 - b1) * -0.25;
    v = b2 * v + (1.0 - b2) * 0.0625;
    expect -= 0.01 * (m / (1.0 - b1 * b1)) / ((v / (1.0 - b2 * b2)).sqrt() + eps);
    assert!((p[0] - expect).abs() <= 1e-12, "{} vs {expect}", p[0]);
}

#[test]
fn model_file_round_trip_preserves_predictions() {
    let model = CnnModel::new(&ArchSpec::for_width(212), 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ctim");
    save_model(&path, &model).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back.input_len(), 212);
    assert_eq!(back.param_count(), model.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let x: Vec<f64> = (0..2 * 212).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = model.log_probs_batch(&x, 1).unwrap();
    let b = back.log_probs_batch(&x, 1).unwrap();
    assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-4));
}
