use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{log_softmax_backward, log_softmax_rows, relu_backward, relu_in_place, Conv1d, Dense};
use super::{CnnError, Tensor};
use crate::dataset::NUM_CLASSES;

/// Widths of the two-conv, three-dense classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub input_channels: usize,
    /// Subcarriers per snapshot (242 full band, 212 for two 106-tone RUs).
    pub input_len: usize,
    pub conv_channels: [usize; 2],
    pub kernel: usize,
    pub padding: usize,
    pub stride: usize,
    pub hidden: [usize; 2],
    pub num_classes: usize,
}

impl ArchSpec {
    /// Default widths for an input of `input_len` subcarriers.
    pub fn for_width(input_len: usize) -> Self {
        Self {
            input_channels: 2,
            input_len,
            conv_channels: [8, 16],
            kernel: 5,
            padding: 2,
            stride: 1,
            hidden: [240, 64],
            num_classes: NUM_CLASSES,
        }
    }
}

impl Default for ArchSpec {
    fn default() -> Self {
        Self::for_width(242)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv1d(Conv1d),
    Relu,
    Flatten,
    Dense(Dense),
    LogSoftmax,
}

impl Layer {
    fn kind(&self) -> char {
        match self {
            Layer::Conv1d(_) => 'C',
            Layer::Relu => 'R',
            Layer::Flatten => 'F',
            Layer::Dense(_) => 'D',
            Layer::LogSoftmax => 'L',
        }
    }
}

const LAYOUT: &str = "CRCRFDRDRDL";

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dim {
    Seq { channels: usize, len: usize },
    Flat(usize),
}

impl Dim {
    fn size(self) -> usize {
        match self {
            Dim::Seq { channels, len } => channels * len,
            Dim::Flat(n) => n,
        }
    }
}

/// Gradients in the order of [`CnnModel::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub(crate) fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub(crate) fn scale(&mut self, k: f64) {
        self.tensors.iter_mut().flatten().for_each(|v| *v *= k);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    input_channels: usize,
    input_len: usize,
    layers: Vec<Layer>,
    /// Input dimension of each layer, plus the output dimension last.
    dims: Vec<Dim>,
}

impl CnnModel {
    /// Builds a model from explicit layers, checking the layer pattern
    /// conv-relu-conv-relu-flatten-dense-relu-dense-relu-dense-logsoftmax and
    /// that consecutive shapes agree.
    pub fn from_layers(input_channels: usize, input_len: usize, layers: Vec<Layer>) -> Result<Self, CnnError> {
        let pattern: String = layers.iter().map(Layer::kind).collect();
        if pattern != LAYOUT {
            return Err(CnnError::Architecture(format!("layer pattern {pattern}, expected {LAYOUT}")));
        }
        let mut dims = vec![Dim::Seq { channels: input_channels, len: input_len }];
        for layer in &layers {
            let cur = *dims.last().unwrap();
            let next = match (layer, cur) {
                (Layer::Conv1d(c), Dim::Seq { channels, len }) => {
                    if c.in_channels != channels {
                        return Err(CnnError::Architecture(format!(
                            "conv expects {} channels, previous layer gives {channels}",
                            c.in_channels
                        )));
                    }
                    if c.weight.len() != c.out_channels * c.in_channels * c.kernel || c.bias.len() != c.out_channels {
                        return Err(CnnError::Architecture("conv parameter size mismatch".into()));
                    }
                    let len = c
                        .output_len(len)
                        .ok_or_else(|| CnnError::Architecture(format!("length {len} too short for kernel {}", c.kernel)))?;
                    Dim::Seq { channels: c.out_channels, len }
                }
                (Layer::Dense(d), Dim::Flat(n)) => {
                    if d.inputs != n {
                        return Err(CnnError::Architecture(format!("dense expects {} inputs, previous layer gives {n}", d.inputs)));
                    }
                    if d.weight.len() != d.inputs * d.outputs || d.bias.len() != d.outputs {
                        return Err(CnnError::Architecture("dense parameter size mismatch".into()));
                    }
                    Dim::Flat(d.outputs)
                }
                (Layer::Flatten, d) => Dim::Flat(d.size()),
                (Layer::Relu | Layer::LogSoftmax, d) => d,
                _ => return Err(CnnError::Architecture("layer applied to incompatible shape".into())),
            };
            dims.push(next);
        }
        if dims.last().unwrap().size() != NUM_CLASSES {
            return Err(CnnError::Architecture(format!(
                "output dimension {}, expected {NUM_CLASSES}",
                dims.last().unwrap().size()
            )));
        }
        let all_params = layers.iter().flat_map(|l| match l {
            Layer::Conv1d(c) => c.weight.iter().chain(&c.bias).collect::<Vec<_>>(),
            Layer::Dense(d) => d.weight.iter().chain(&d.bias).collect(),
            _ => Vec::new(),
        });
        if all_params.into_iter().any(|v| !v.is_finite()) {
            return Err(CnnError::NonFinite);
        }
        Ok(Self { input_channels, input_len, layers, dims })
    }

    /// Kaiming-uniform weights, zero biases.
    pub fn new(arch: &ArchSpec, seed: u64) -> Result<Self, CnnError> {
        if arch.num_classes != NUM_CLASSES {
            return Err(CnnError::Architecture(format!("{} classes, expected {NUM_CLASSES}", arch.num_classes)));
        }
        if arch.kernel == 0 || arch.stride == 0 || arch.input_channels == 0 || arch.input_len == 0 {
            return Err(CnnError::Architecture("zero-sized dimension".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |n: usize, fan_in: usize| -> Vec<f64> {
            let bound = (6.0 / fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let [c1, c2] = arch.conv_channels;
        let mut conv = |cin: usize, cout: usize| {
            let mut c = Conv1d::zeros(cin, cout, arch.kernel, arch.stride, arch.padding);
            c.weight = uniform(c.weight.len(), cin * arch.kernel);
            c
        };
        let conv1 = conv(arch.input_channels, c1);
        let conv2 = conv(c1, c2);
        let len = conv1
            .output_len(arch.input_len)
            .and_then(|l| conv2.output_len(l))
            .ok_or_else(|| CnnError::Architecture("input too short for the conv stack".into()))?;
        let [h1, h2] = arch.hidden;
        let mut dense = |i: usize, o: usize| {
            let mut d = Dense::zeros(i, o);
            d.weight = uniform(d.weight.len(), i);
            d
        };
        let layers = vec![
            Layer::Conv1d(conv1),
            Layer::Relu,
            Layer::Conv1d(conv2),
            Layer::Relu,
            Layer::Flatten,
            Layer::Dense(dense(c2 * len, h1)),
            Layer::Relu,
            Layer::Dense(dense(h1, h2)),
            Layer::Relu,
            Layer::Dense(dense(h2, arch.num_classes)),
            Layer::LogSoftmax,
        ];
        Self::from_layers(arch.input_channels, arch.input_len, layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    fn input_size(&self) -> usize {
        self.input_channels * self.input_len
    }

    pub fn num_outputs(&self) -> usize {
        self.dims.last().unwrap().size()
    }

    pub fn param_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    /// Weight and bias vectors of every parameterized layer, in layer order.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Conv1d(c) => out.extend([c.weight.as_slice(), c.bias.as_slice()]),
                Layer::Dense(d) => out.extend([d.weight.as_slice(), d.bias.as_slice()]),
                _ => {}
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Conv1d(c) => out.extend([&mut c.weight, &mut c.bias]),
                Layer::Dense(d) => out.extend([&mut d.weight, &mut d.bias]),
                _ => {}
            }
        }
        out
    }

    pub(crate) fn zero_gradients(&self) -> Gradients {
        Gradients { tensors: self.parameters().iter().map(|p| vec![0.0; p.len()]).collect() }
    }

    /// Runs `batch` inputs and returns every intermediate activation
    /// (the input first, log-probabilities last).
    fn forward_cached(&self, input: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let mut acts = vec![input.to_vec()];
        for (layer, dim) in self.layers.iter().zip(&self.dims) {
            let x = acts.last().unwrap();
            let y = match layer {
                Layer::Conv1d(c) => {
                    let Dim::Seq { len, .. } = *dim else { unreachable!() };
                    c.forward_batch(x, batch, len).0
                }
                Layer::Dense(d) => d.forward_batch(x, batch),
                Layer::Relu => {
                    let mut y = x.clone();
                    relu_in_place(&mut y);
                    y
                }
                Layer::Flatten => x.clone(),
                Layer::LogSoftmax => {
                    let mut y = x.clone();
                    log_softmax_rows(&mut y, dim.size());
                    y
                }
            };
            acts.push(y);
        }
        acts
    }

    /// Log-probabilities for a batch of flattened `[C, L]` inputs.
    pub fn log_probs_batch(&self, input: &[f64], batch: usize) -> Result<Vec<f64>, CnnError> {
        if input.len() != batch * self.input_size() {
            return Err(CnnError::Shape(format!(
                "batch of {batch} needs {} values, got {}",
                batch * self.input_size(),
                input.len()
            )));
        }
        let mut acts = self.forward_cached(input, batch);
        Ok(acts.pop().unwrap())
    }

    /// Log-probabilities for one `[C, L]` tensor.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, CnnError> {
        if input.shape() != [self.input_channels, self.input_len] {
            return Err(CnnError::Shape(format!(
                "model expects [{}, {}], got {:?}",
                self.input_channels,
                self.input_len,
                input.shape()
            )));
        }
        let y = self.log_probs_batch(input.data(), 1)?;
        Ok(Tensor::from_parts(vec![y.len()], y))
    }

    /// Summed NLL over the batch and its gradient (also summed).
    pub(crate) fn nll_sum_and_gradients(&self, input: &[f64], targets: &[usize]) -> (f64, Gradients) {
        let batch = targets.len();
        let acts = self.forward_cached(input, batch);
        let n_out = self.num_outputs();
        let logp = acts.last().unwrap();
        let loss = targets.iter().enumerate().map(|(b, &t)| -logp[b * n_out + t]).sum();

        let mut grads = self.zero_gradients();
        let mut slot = grads.tensors.len();
        let mut dy = vec![0.0; batch * n_out];
        for (b, &t) in targets.iter().enumerate() {
            dy[b * n_out + t] = -1.0;
        }
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let need_input = i > 0;
            match layer {
                Layer::LogSoftmax => log_softmax_backward(&acts[i + 1], &mut dy, n_out),
                Layer::Relu => relu_backward(&acts[i + 1], &mut dy),
                Layer::Flatten => {}
                Layer::Dense(d) => {
                    slot -= 2;
                    let (w, rest) = grads.tensors[slot..].split_at_mut(1);
                    match d.backward_batch(&acts[i], &dy, batch, &mut w[0], &mut rest[0], need_input) {
                        Some(dx) => dy = dx,
                        None => break,
                    }
                }
                Layer::Conv1d(c) => {
                    slot -= 2;
                    let Dim::Seq { len, .. } = self.dims[i] else { unreachable!() };
                    let (w, rest) = grads.tensors[slot..].split_at_mut(1);
                    match c.backward_batch(&acts[i], &dy, batch, len, &mut w[0], &mut rest[0], need_input) {
                        Some(dx) => dy = dx,
                        None => break,
                    }
                }
            }
        }
        (loss, grads)
    }

    /// Mean negative log-likelihood of `targets` and its gradient.
    pub fn loss_and_gradients(&self, input: &[f64], targets: &[usize]) -> Result<(f64, Gradients), CnnError> {
        let batch = targets.len();
        if batch == 0 {
            return Err(CnnError::EmptyDataset);
        }
        if input.len() != batch * self.input_size() {
            return Err(CnnError::Shape(format!("batch of {batch} needs {} values", batch * self.input_size())));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= self.num_outputs()) {
            return Err(CnnError::Shape(format!("target {t} out of range")));
        }
        let (loss, mut g) = self.nll_sum_and_gradients(input, targets);
        g.scale(1.0 / batch as f64);
        Ok((loss / batch as f64, g))
    }
}
