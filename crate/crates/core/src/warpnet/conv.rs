//! Length-preserving 1D convolution over `[time][channel]` buffers.
//!
//! With zero padding, the receptive field of output time `t` is the
//! contiguous block `padded[t .. t + kernel]` of the padded input. That block
//! is row `t` of an overlapping-row view with row stride `channels`, so the
//! forward pass, the kernel gradient and the input gradient are each a single
//! GEMM without materialising an im2col matrix.

use serde::{Deserialize, Serialize};

/// One convolutional layer. `kernel` is laid out `[k][in][out]`, i.e. a
/// row-major `(kernel_size·in_channels) × out_channels` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel_size: usize) -> Self {
        ConvLayer {
            in_channels,
            out_channels,
            kernel_size,
            kernel: vec![0.0; kernel_size * in_channels * out_channels],
            bias: vec![0.0; out_channels],
        }
    }

    /// Zeros inserted before the first sample (`same` padding; the extra zero of
    /// an even kernel goes to the right).
    pub fn pad_left(&self) -> usize {
        (self.kernel_size - 1) / 2
    }

    pub fn padded_len(&self, len: usize) -> usize {
        len + self.kernel_size - 1
    }

    /// Copies a `[len][in]` buffer into a zero-padded `[len + k - 1][in]` buffer.
    pub fn pad_input(&self, input: &[f64], len: usize) -> Vec<f64> {
        let c = self.in_channels;
        debug_assert_eq!(input.len(), len * c);
        let mut padded = vec![0.0; self.padded_len(len) * c];
        let off = self.pad_left() * c;
        padded[off..off + len * c].copy_from_slice(input);
        padded
    }

    /// `out[t][o] = bias[o] + Σ_k Σ_c kernel[k][c][o]·padded[t + k][c]`.
    pub fn forward(&self, padded: &[f64], len: usize) -> Vec<f64> {
        let (ci, co) = (self.in_channels, self.out_channels);
        assert_eq!(padded.len(), self.padded_len(len) * ci);
        let mut out = Vec::with_capacity(len * co);
        for _ in 0..len {
            out.extend_from_slice(&self.bias);
        }
        gemm(
            len,
            self.kernel_size * ci,
            co,
            Operand::new(padded, ci as isize, 1),
            Operand::new(&self.kernel, co as isize, 1),
            1.0,
            &mut out,
        );
        out
    }

    /// Accumulates kernel and bias gradients for one sample given the
    /// gradient `grad_out` (`[len][out]`) with respect to the layer output.
    pub fn accumulate_param_grad(
        &self,
        padded: &[f64],
        grad_out: &[f64],
        len: usize,
        kernel_grad: &mut [f64],
        bias_grad: &mut [f64],
    ) {
        let (ci, co) = (self.in_channels, self.out_channels);
        assert_eq!(grad_out.len(), len * co);
        assert_eq!(kernel_grad.len(), self.kernel.len());
        // view of the receptive-field matrix, transposed
        gemm(
            self.kernel_size * ci,
            len,
            co,
            Operand::new(padded, 1, ci as isize),
            Operand::new(grad_out, co as isize, 1),
            1.0,
            kernel_grad,
        );
        for row in grad_out.chunks_exact(co) {
            bias_grad.iter_mut().zip(row).for_each(|(b, g)| *b += g);
        }
    }

    /// Kernel with taps reversed and channel axes swapped, `[k'][out][in]`,
    /// as needed by [`ConvLayer::input_grad`].
    pub fn flipped_kernel(&self) -> Vec<f64> {
        let (ci, co, ks) = (self.in_channels, self.out_channels, self.kernel_size);
        let mut flipped = vec![0.0; self.kernel.len()];
        for k in 0..ks {
            let src = (ks - 1 - k) * ci * co;
            for o in 0..co {
                for c in 0..ci {
                    flipped[(k * co + o) * ci + c] = self.kernel[src + c * co + o];
                }
            }
        }
        flipped
    }

    /// Gradient with respect to the unpadded input, `[len][in]`.
    pub fn input_grad(&self, flipped: &[f64], grad_out: &[f64], len: usize) -> Vec<f64> {
        let (ci, co, ks) = (self.in_channels, self.out_channels, self.kernel_size);
        let left = ks - 1 - self.pad_left();
        let mut padded = vec![0.0; (len + ks - 1) * co];
        padded[left * co..(left + len) * co].copy_from_slice(grad_out);
        let mut grad_in = vec![0.0; len * ci];
        gemm(
            len,
            ks * co,
            ci,
            Operand::new(&padded, co as isize, 1),
            Operand::new(flipped, ci as isize, 1),
            0.0,
            &mut grad_in,
        );
        grad_in
    }
}

/// Read-only strided matrix view.
struct Operand<'a> {
    data: &'a [f64],
    row_stride: isize,
    col_stride: isize,
}

impl<'a> Operand<'a> {
    fn new(data: &'a [f64], row_stride: isize, col_stride: isize) -> Self {
        Operand {
            data,
            row_stride,
            col_stride,
        }
    }

    fn max_offset(&self, rows: usize, cols: usize) -> usize {
        (rows as isize - 1) as usize * self.row_stride as usize
            + (cols as isize - 1) as usize * self.col_stride as usize
    }
}

/// `c ← a·b + beta·c` with `a: m×k`, `b: k×n` (strided) and `c: m×n` row-major.
fn gemm(m: usize, k: usize, n: usize, a: Operand, b: Operand, beta: f64, c: &mut [f64]) {
    assert!(m > 0 && k > 0 && n > 0);
    assert!(a.max_offset(m, k) < a.data.len(), "lhs view out of bounds");
    assert!(b.max_offset(k, n) < b.data.len(), "rhs view out of bounds");
    assert_eq!(c.len(), m * n);
    // SAFETY: the asserts above keep every element addressed through the
    // strides inside the borrowed slices; `c` is exclusively borrowed and its
    // rows do not overlap.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride,
            a.col_stride,
            b.data.as_ptr(),
            b.row_stride,
            b.col_stride,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(ci: usize, co: usize, ks: usize) -> ConvLayer {
        let mut l = ConvLayer::zeros(ci, co, ks);
        for (i, w) in l.kernel.iter_mut().enumerate() {
            *w = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
        }
        for (i, b) in l.bias.iter_mut().enumerate() {
            *b = i as f64 * 0.1;
        }
        l
    }

    fn naive(l: &ConvLayer, input: &[f64], len: usize) -> Vec<f64> {
        let (ci, co) = (l.in_channels, l.out_channels);
        let mut out = vec![0.0; len * co];
        for t in 0..len {
            for o in 0..co {
                let mut acc = l.bias[o];
                for k in 0..l.kernel_size {
                    let s = t as isize + k as isize - l.pad_left() as isize;
                    if s < 0 || s >= len as isize {
                        continue;
                    }
                    for c in 0..ci {
                        acc += l.kernel[(k * ci + c) * co + o] * input[s as usize * ci + c];
                    }
                }
                out[t * co + o] = acc;
            }
        }
        out
    }

    #[test]
    fn forward_matches_direct_sum() {
        for &(ci, co, ks, len) in &[(1, 3, 5, 11), (2, 4, 4, 9), (3, 1, 9, 9), (2, 2, 1, 6)] {
            let l = layer(ci, co, ks);
            let input: Vec<f64> = (0..len * ci).map(|i| (i as f64 * 0.37).sin()).collect();
            let fast = l.forward(&l.pad_input(&input, len), len);
            let slow = naive(&l, &input, len);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn input_grad_is_adjoint_of_forward() {
        // <grad_out, conv(x) - bias> = <input_grad(grad_out), x>
        let (ci, co, ks, len) = (3, 2, 6, 10);
        let l = layer(ci, co, ks);
        let x: Vec<f64> = (0..len * ci).map(|i| (i as f64 * 0.61).cos()).collect();
        let g: Vec<f64> = (0..len * co).map(|i| (i as f64 * 0.29).sin()).collect();
        let y = naive(&l, &x, len);
        let lhs: f64 = y
            .iter()
            .zip(&g)
            .enumerate()
            .map(|(i, (y, g))| (y - l.bias[i % co]) * g)
            .sum();
        let gx = l.input_grad(&l.flipped_kernel(), &g, len);
        let rhs: f64 = gx.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn kernel_grad_matches_definition() {
        let (ci, co, ks, len) = (2, 3, 4, 7);
        let l = layer(ci, co, ks);
        let x: Vec<f64> = (0..len * ci).map(|i| (i as f64 * 0.41).sin()).collect();
        let g: Vec<f64> = (0..len * co).map(|i| (i as f64 * 0.13).cos()).collect();
        let mut kg = vec![0.0; l.kernel.len()];
        let mut bg = vec![0.0; co];
        l.accumulate_param_grad(&l.pad_input(&x, len), &g, len, &mut kg, &mut bg);
        // d<g, conv(x)>/d kernel[i] = <g, conv_with_unit_kernel(x)>
        for i in 0..l.kernel.len() {
            let mut unit = ConvLayer::zeros(ci, co, ks);
            unit.kernel[i] = 1.0;
            let y = naive(&unit, &x, len);
            let expected: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
            assert!((kg[i] - expected).abs() < 1e-12);
        }
        for o in 0..co {
            let expected: f64 = g.iter().skip(o).step_by(co).sum();
            assert!((bg[o] - expected).abs() < 1e-12);
        }
    }
}
