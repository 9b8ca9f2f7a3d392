//! Layer kernels. Batched activations are stored row-major as
//! `[batch, channels, length]` for sequences and `[batch, features]` after
//! flattening.

use super::{CnnError, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// `[out, in, kernel]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            weight: vec![0.0; out_channels * in_channels * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn output_len(&self, len: usize) -> Option<usize> {
        let padded = len + 2 * self.padding;
        (self.stride > 0 && padded >= self.kernel).then(|| (padded - self.kernel) / self.stride + 1)
    }

    fn w(&self, o: usize, i: usize, k: usize) -> f64 {
        self.weight[(o * self.in_channels + i) * self.kernel + k]
    }

    /// Range of output positions `t` whose input index `t*stride + k - pad` is in bounds.
    fn valid_range(&self, k: usize, len: usize, out_len: usize) -> std::ops::Range<usize> {
        let s = self.stride;
        let lo = if k >= self.padding { 0 } else { (self.padding - k).div_ceil(s) };
        // largest t with t*s + k - pad <= len - 1
        let hi = if len + self.padding >= k + 1 { ((len - 1 + self.padding - k) / s + 1).min(out_len) } else { 0 };
        lo.min(hi)..hi
    }

    pub(crate) fn forward_batch(&self, x: &[f64], batch: usize, len: usize) -> (Vec<f64>, usize) {
        let out_len = self.output_len(len).expect("conv input shorter than kernel");
        let (cin, cout) = (self.in_channels, self.out_channels);
        let mut y = vec![0.0; batch * cout * out_len];
        for b in 0..batch {
            let xb = &x[b * cin * len..(b + 1) * cin * len];
            for o in 0..cout {
                let yo = &mut y[(b * cout + o) * out_len..(b * cout + o + 1) * out_len];
                yo.fill(self.bias[o]);
                for i in 0..cin {
                    let xi = &xb[i * len..(i + 1) * len];
                    for k in 0..self.kernel {
                        let w = self.w(o, i, k);
                        let r = self.valid_range(k, len, out_len);
                        if self.stride == 1 {
                            let start = r.start + k - self.padding;
                            for (yv, xv) in yo[r.clone()].iter_mut().zip(&xi[start..start + r.len()]) {
                                *yv += w * xv;
                            }
                        } else {
                            for t in r {
                                yo[t] += w * xi[t * self.stride + k - self.padding];
                            }
                        }
                    }
                }
            }
        }
        (y, out_len)
    }

    /// Accumulates parameter gradients into `gw`/`gb`; returns the input gradient when asked.
    pub(crate) fn backward_batch(
        &self,
        x: &[f64],
        dy: &[f64],
        batch: usize,
        len: usize,
        gw: &mut [f64],
        gb: &mut [f64],
        need_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let out_len = self.output_len(len).unwrap();
        let (cin, cout, kk) = (self.in_channels, self.out_channels, self.kernel);
        let mut dx = need_input_grad.then(|| vec![0.0; batch * cin * len]);
        for b in 0..batch {
            let xb = &x[b * cin * len..(b + 1) * cin * len];
            for o in 0..cout {
                let dyo = &dy[(b * cout + o) * out_len..(b * cout + o + 1) * out_len];
                gb[o] += dyo.iter().sum::<f64>();
                for i in 0..cin {
                    let xi = &xb[i * len..(i + 1) * len];
                    for k in 0..kk {
                        let r = self.valid_range(k, len, out_len);
                        let widx = (o * cin + i) * kk + k;
                        let mut acc = 0.0;
                        if self.stride == 1 {
                            let start = r.start + k - self.padding;
                            for (d, xv) in dyo[r.clone()].iter().zip(&xi[start..start + r.len()]) {
                                acc += d * xv;
                            }
                        } else {
                            for t in r.clone() {
                                acc += dyo[t] * xi[t * self.stride + k - self.padding];
                            }
                        }
                        gw[widx] += acc;
                        if let Some(dx) = dx.as_mut() {
                            let w = self.weight[widx];
                            let dxi = &mut dx[(b * cin + i) * len..(b * cin + i + 1) * len];
                            for t in r {
                                dxi[t * self.stride + k - self.padding] += w * dyo[t];
                            }
                        }
                    }
                }
            }
        }
        dx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `[out, in]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weight: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    pub(crate) fn forward_batch(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let (n_in, n_out) = (self.inputs, self.outputs);
        let mut y: Vec<f64> = (0..batch).flat_map(|_| self.bias.iter().copied()).collect();
        // y[b, o] += sum_i x[b, i] * w[o, i]
        unsafe {
            matrixmultiply::dgemm(
                batch, n_in, n_out, 1.0,
                x.as_ptr(), n_in as isize, 1,
                self.weight.as_ptr(), 1, n_in as isize,
                1.0,
                y.as_mut_ptr(), n_out as isize, 1,
            );
        }
        y
    }

    pub(crate) fn backward_batch(
        &self,
        x: &[f64],
        dy: &[f64],
        batch: usize,
        gw: &mut [f64],
        gb: &mut [f64],
        need_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let (n_in, n_out) = (self.inputs, self.outputs);
        for row in dy.chunks_exact(n_out) {
            for (g, d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        // gw[o, i] += sum_b dy[b, o] * x[b, i]
        unsafe {
            matrixmultiply::dgemm(
                n_out, batch, n_in, 1.0,
                dy.as_ptr(), 1, n_out as isize,
                x.as_ptr(), n_in as isize, 1,
                1.0,
                gw.as_mut_ptr(), n_in as isize, 1,
            );
        }
        need_input_grad.then(|| {
            let mut dx = vec![0.0; batch * n_in];
            // dx[b, i] = sum_o dy[b, o] * w[o, i]
            unsafe {
                matrixmultiply::dgemm(
                    batch, n_out, n_in, 1.0,
                    dy.as_ptr(), n_out as isize, 1,
                    self.weight.as_ptr(), n_in as isize, 1,
                    0.0,
                    dx.as_mut_ptr(), n_in as isize, 1,
                );
            }
            dx
        })
    }
}

pub(crate) fn relu_in_place(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Gradient through ReLU given its output.
pub(crate) fn relu_backward(y: &[f64], dy: &mut [f64]) {
    for (d, &v) in dy.iter_mut().zip(y) {
        if v <= 0.0 {
            *d = 0.0;
        }
    }
}

pub(crate) fn log_softmax_rows(x: &mut [f64], width: usize) {
    for row in x.chunks_exact_mut(width) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.iter_mut().for_each(|v| *v -= lse);
    }
}

/// dx = dy - softmax * sum(dy), row-wise, given the log-softmax output.
pub(crate) fn log_softmax_backward(y: &[f64], dy: &mut [f64], width: usize) {
    for (yr, dr) in y.chunks_exact(width).zip(dy.chunks_exact_mut(width)) {
        let total: f64 = dr.iter().sum();
        for (d, v) in dr.iter_mut().zip(yr) {
            *d -= v.exp() * total;
        }
    }
}

/// Cross-correlation of a `[C_in, L]` input with bias.
pub fn conv1d_forward(input: &Tensor, layer: &Conv1d) -> Result<Tensor, CnnError> {
    let [cin, len] = input.shape() else {
        return Err(CnnError::Shape(format!("conv1d expects [C, L], got {:?}", input.shape())));
    };
    if *cin != layer.in_channels {
        return Err(CnnError::Shape(format!("conv1d expects {} channels, got {cin}", layer.in_channels)));
    }
    if layer.output_len(*len).is_none() {
        return Err(CnnError::Shape(format!("input length {len} too short for kernel {}", layer.kernel)));
    }
    let (y, out_len) = layer.forward_batch(input.data(), 1, *len);
    Ok(Tensor::from_parts(vec![layer.out_channels, out_len], y))
}

/// y = W x + b for a flat input.
pub fn dense_forward(input: &Tensor, layer: &Dense) -> Result<Tensor, CnnError> {
    if input.len() != layer.inputs {
        return Err(CnnError::Shape(format!("dense expects {} inputs, got {}", layer.inputs, input.len())));
    }
    Ok(Tensor::from_parts(vec![layer.outputs], layer.forward_batch(input.data(), 1)))
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    let mut d = input.data().to_vec();
    relu_in_place(&mut d);
    Tensor::from_parts(input.shape().to_vec(), d)
}

/// Max-shifted log-softmax over a flat vector.
pub fn logsoftmax_forward(input: &Tensor) -> Result<Tensor, CnnError> {
    if input.is_empty() {
        return Err(CnnError::Shape("log-softmax of an empty vector".into()));
    }
    let mut d = input.data().to_vec();
    let w = d.len();
    log_softmax_rows(&mut d, w);
    Ok(Tensor::from_parts(input.shape().to_vec(), d))
}
