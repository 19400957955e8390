//! Batched primitive layers and their reverse-mode derivatives.
//!
//! Activations are `[batch, channels, len]` row-major slices. Every
//! reduction over the batch is carried out in a fixed order (fixed-size
//! example chunks summed in chunk order), so results are bit-identical
//! whether or not the work runs in parallel.

use rand::Rng;

use crate::par;
use crate::{Error, Real, Result};

/// Examples per work unit for weight-gradient accumulation.
const GRAD_CHUNK: usize = 4;

pub fn conv_out_len(len: usize, width: usize, stride: usize) -> Result<usize> {
    if len < width {
        return Err(Error::ShapeMismatch(format!(
            "input length {len} shorter than kernel width {width}"
        )));
    }
    Ok((len - width) / stride + 1)
}

/// `cols[t][i*width + k] = x[i][t*stride + k]`
fn im2col<T: Real>(x: &[T], in_ch: usize, len: usize, width: usize, stride: usize, out_len: usize, cols: &mut [T]) {
    let kk = in_ch * width;
    for t in 0..out_len {
        let row = &mut cols[t * kk..(t + 1) * kk];
        for i in 0..in_ch {
            let src = &x[i * len + t * stride..i * len + t * stride + width];
            row[i * width..(i + 1) * width].copy_from_slice(src);
        }
    }
}

fn col2im_add<T: Real>(cols: &[T], in_ch: usize, len: usize, width: usize, stride: usize, out_len: usize, dx: &mut [T]) {
    let kk = in_ch * width;
    for t in 0..out_len {
        let row = &cols[t * kk..(t + 1) * kk];
        for i in 0..in_ch {
            let dst = &mut dx[i * len + t * stride..i * len + t * stride + width];
            for (d, &c) in dst.iter_mut().zip(&row[i * width..(i + 1) * width]) {
                *d += c;
            }
        }
    }
}

/// Column matrix of `n_ex` consecutive examples, transposed so the
/// examples sit side by side: `cols[i*width + k][e*out_len + t] = x_e[i][t*stride + k]`.
#[allow(clippy::too_many_arguments)]
fn im2col_t<T: Real>(xs: &[T], n_ex: usize, in_ch: usize, len: usize, width: usize, stride: usize, out_len: usize, cols: &mut [T]) {
    let ld = n_ex * out_len;
    for (e, x) in xs.chunks_exact(in_ch * len).take(n_ex).enumerate() {
        for i in 0..in_ch {
            for k in 0..width {
                let row = &mut cols[(i * width + k) * ld + e * out_len..][..out_len];
                let src = &x[i * len + k..];
                if stride == 1 {
                    row.copy_from_slice(&src[..out_len]);
                } else {
                    row.iter_mut().enumerate().for_each(|(t, v)| *v = src[t * stride]);
                }
            }
        }
    }
}

/// Geometry of a 1-D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvDims {
    pub in_ch: usize,
    pub out_ch: usize,
    pub width: usize,
    pub stride: usize,
    pub len: usize,
}

impl ConvDims {
    pub fn out_len(&self) -> Result<usize> {
        conv_out_len(self.len, self.width, self.stride)
    }
}

/// Valid (unpadded) cross-correlation plus bias; no activation.
/// `kernel` is `[out_ch, in_ch, width]`.
pub fn conv1d_forward<T: Real>(input: &[T], batch: usize, d: ConvDims, kernel: &[T], bias: &[T]) -> Result<Vec<T>> {
    let out_len = d.out_len()?;
    let in_size = d.in_ch * d.len;
    if input.len() != batch * in_size || kernel.len() != d.out_ch * d.in_ch * d.width || bias.len() != d.out_ch {
        return Err(Error::ShapeMismatch("conv1d operand sizes".into()));
    }
    let kk = d.in_ch * d.width;
    let out_size = d.out_ch * out_len;
    let mut out = vec![T::zero(); batch * out_size];
    par::for_each_chunk_mut(&mut out, GRAD_CHUNK * out_size, |c, ys| {
        let n_ex = ys.len() / out_size;
        let ld = n_ex * out_len;
        let first = c * GRAD_CHUNK;
        let mut cols = vec![T::zero(); kk * ld];
        im2col_t(&input[first * in_size..(first + n_ex) * in_size], n_ex, d.in_ch, d.len, d.width, d.stride, out_len, &mut cols);
        // z[o][e*out_len + t] = sum_j kernel[o][j] * cols[j][e*out_len + t]
        let mut z = vec![T::zero(); d.out_ch * ld];
        T::gemm(
            d.out_ch, kk, ld, T::one(),
            kernel, kk as isize, 1,
            &cols, ld as isize, 1,
            T::zero(), &mut z, ld as isize, 1,
        );
        for (e, y) in ys.chunks_exact_mut(out_size).enumerate() {
            for (o, row) in y.chunks_exact_mut(out_len).enumerate() {
                let src = &z[o * ld + e * out_len..][..out_len];
                for (v, &s) in row.iter_mut().zip(src) {
                    *v = s + bias[o];
                }
            }
        }
    });
    Ok(out)
}

pub struct ConvGrads<T> {
    pub input: Vec<T>,
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
}

pub fn conv1d_backward<T: Real>(input: &[T], batch: usize, d: ConvDims, kernel: &[T], dout: &[T]) -> Result<ConvGrads<T>> {
    let out_len = d.out_len()?;
    let in_size = d.in_ch * d.len;
    let out_size = d.out_ch * out_len;
    let kk = d.in_ch * d.width;
    if dout.len() != batch * out_size || input.len() != batch * in_size {
        return Err(Error::ShapeMismatch("conv1d backward operand sizes".into()));
    }
    let n_chunks = batch.div_ceil(GRAD_CHUNK);
    let partials = par::map_range(n_chunks, |c| {
        let lo = c * GRAD_CHUNK;
        let hi = (lo + GRAD_CHUNK).min(batch);
        let mut dk = vec![T::zero(); kernel.len()];
        let mut db = vec![T::zero(); d.out_ch];
        let mut dx = vec![T::zero(); (hi - lo) * in_size];
        let mut cols = vec![T::zero(); out_len * kk];
        let mut dcols = vec![T::zero(); out_len * kk];
        for b in lo..hi {
            let x = &input[b * in_size..(b + 1) * in_size];
            let g = &dout[b * out_size..(b + 1) * out_size];
            im2col(x, d.in_ch, d.len, d.width, d.stride, out_len, &mut cols);
            // dk[o][j] += sum_t g[o][t] * cols[t][j]
            T::gemm(
                d.out_ch, out_len, kk, T::one(),
                g, out_len as isize, 1,
                &cols, kk as isize, 1,
                T::one(), &mut dk, kk as isize, 1,
            );
            // dcols[t][j] = sum_o g[o][t] * kernel[o][j]
            T::gemm(
                out_len, d.out_ch, kk, T::one(),
                g, 1, out_len as isize,
                kernel, kk as isize, 1,
                T::zero(), &mut dcols, kk as isize, 1,
            );
            col2im_add(&dcols, d.in_ch, d.len, d.width, d.stride, out_len, &mut dx[(b - lo) * in_size..(b - lo + 1) * in_size]);
            for (o, row) in g.chunks_exact(out_len).enumerate() {
                db[o] += row.iter().copied().sum::<T>();
            }
        }
        (dk, db, dx)
    });
    let mut grads = ConvGrads {
        input: Vec::with_capacity(batch * in_size),
        kernel: vec![T::zero(); kernel.len()],
        bias: vec![T::zero(); d.out_ch],
    };
    for (dk, db, dx) in partials {
        grads.kernel.iter_mut().zip(&dk).for_each(|(a, &b)| *a += b);
        grads.bias.iter_mut().zip(&db).for_each(|(a, &b)| *a += b);
        grads.input.extend_from_slice(&dx);
    }
    Ok(grads)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// What a train-mode batch-norm pass leaves behind for the backward pass.
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    pub xhat: Vec<T>,
    pub inv_std: Vec<T>,
    pub mean: Vec<T>,
    /// Biased batch variance.
    pub var: Vec<T>,
}

fn channel_reduce<T: Real, F>(x: &[T], batch: usize, ch: usize, len: usize, f: F) -> Vec<T>
where
    F: Fn(usize, &[T]) -> T + Sync + Send,
{
    // f(c, row) maps a length-`len` row to a partial; rows summed in batch order
    par::map_range(ch, |c| {
        let mut acc = T::zero();
        for b in 0..batch {
            let off = (b * ch + c) * len;
            acc += f(c, &x[off..off + len]);
        }
        acc
    })
}

pub fn batchnorm_forward_train<T: Real>(
    x: &[T],
    batch: usize,
    ch: usize,
    len: usize,
    gamma: &[T],
    beta: &[T],
    eps: f64,
) -> Result<(Vec<T>, BnCache<T>)> {
    let n = batch * len;
    if n < 2 {
        return Err(Error::InvalidArgument(
            "train-mode batch norm needs at least 2 values per channel".into(),
        ));
    }
    let nt = T::from_f64(n as f64);
    let mean: Vec<T> = channel_reduce(x, batch, ch, len, |_, r| r.iter().copied().sum())
        .into_iter()
        .map(|s| s / nt)
        .collect();
    let var: Vec<T> = channel_reduce(x, batch, ch, len, |c, r| {
        r.iter().map(|&v| (v - mean[c]) * (v - mean[c])).sum()
    })
    .into_iter()
    .map(|s| s / nt)
    .collect();
    let eps = T::from_f64(eps);
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut xhat = vec![T::zero(); x.len()];
    let mut y = vec![T::zero(); x.len()];
    let ex = ch * len;
    par::for_each_chunk_pair_mut(&mut xhat, ex, &mut y, ex, |b, xh, yy| {
        for c in 0..ch {
            let src = &x[b * ex + c * len..b * ex + (c + 1) * len];
            for j in 0..len {
                let h = (src[j] - mean[c]) * inv_std[c];
                xh[c * len + j] = h;
                yy[c * len + j] = gamma[c] * h + beta[c];
            }
        }
    });
    Ok((y, BnCache { xhat, inv_std, mean, var }))
}

#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward_eval<T: Real>(
    x: &[T],
    ch: usize,
    len: usize,
    running_mean: &[T],
    running_var: &[T],
    gamma: &[T],
    beta: &[T],
    eps: f64,
) -> Vec<T> {
    let eps = T::from_f64(eps);
    let scale: Vec<T> = (0..ch)
        .map(|c| gamma[c] / (running_var[c] + eps).sqrt())
        .collect();
    let mut y = x.to_vec();
    par::for_each_chunk_mut(&mut y, ch * len, |_, ex| {
        for (c, row) in ex.chunks_exact_mut(len).enumerate() {
            for v in row {
                *v = (*v - running_mean[c]) * scale[c] + beta[c];
            }
        }
    });
    y
}

/// Returns (dx, dgamma, dbeta), differentiating through the batch
/// statistics.
pub fn batchnorm_backward<T: Real>(
    dy: &[T],
    cache: &BnCache<T>,
    batch: usize,
    ch: usize,
    len: usize,
    gamma: &[T],
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let dbeta = channel_reduce(dy, batch, ch, len, |_, r| r.iter().copied().sum());
    let ex = ch * len;
    let dgamma = par::map_range(ch, |c| {
        let mut acc = T::zero();
        for b in 0..batch {
            let off = b * ex + c * len;
            acc += dy[off..off + len]
                .iter()
                .zip(&cache.xhat[off..off + len])
                .map(|(&g, &h)| g * h)
                .sum::<T>();
        }
        acc
    });
    let nt = T::from_f64((batch * len) as f64);
    let mut dx = vec![T::zero(); dy.len()];
    par::for_each_chunk_mut(&mut dx, ex, |b, out| {
        for c in 0..ch {
            let k = gamma[c] * cache.inv_std[c] / nt;
            for j in 0..len {
                let i = b * ex + c * len + j;
                out[c * len + j] = k * (nt * dy[i] - dbeta[c] - cache.xhat[i] * dgamma[c]);
            }
        }
    });
    (dx, dgamma, dbeta)
}

// ---------------------------------------------------------------------------

pub fn relu_forward<T: Real>(x: &mut [T]) {
    x.iter_mut().for_each(|v| {
        if *v < T::zero() {
            *v = T::zero()
        }
    });
}

/// `out` is the ReLU output; gradient passes where it is positive.
pub fn relu_backward<T: Real>(out: &[T], dy: &mut [T]) {
    dy.iter_mut().zip(out).for_each(|(g, &o)| {
        if o <= T::zero() {
            *g = T::zero()
        }
    });
}

/// Zero-pads every row `[left zeros | row | right zeros]`.
pub fn pad_forward<T: Real>(x: &[T], rows: usize, len: usize, left: usize, right: usize) -> Vec<T> {
    let nl = len + left + right;
    let mut out = vec![T::zero(); rows * nl];
    for r in 0..rows {
        out[r * nl + left..r * nl + left + len].copy_from_slice(&x[r * len..(r + 1) * len]);
    }
    out
}

pub fn pad_backward<T: Real>(dy: &[T], rows: usize, len: usize, left: usize, right: usize) -> Vec<T> {
    let nl = len + left + right;
    let mut out = Vec::with_capacity(rows * len);
    for r in 0..rows {
        out.extend_from_slice(&dy[r * nl + left..r * nl + left + len]);
    }
    out
}

/// Non-overlapping max pooling over each row. Returns the pooled rows and,
/// for each output, the offset of the winning input inside its window
/// (first maximum on ties).
pub fn maxpool1d<T: Real>(x: &[T], rows: usize, len: usize, width: usize) -> Result<(Vec<T>, Vec<u32>)> {
    if width == 0 || len % width != 0 {
        return Err(Error::ShapeMismatch(format!(
            "length {len} is not divisible by pool width {width}"
        )));
    }
    let out_len = len / width;
    let mut out = Vec::with_capacity(rows * out_len);
    let mut arg = Vec::with_capacity(rows * out_len);
    for win in x[..rows * len].chunks_exact(width) {
        let mut best = 0;
        for (i, &v) in win.iter().enumerate() {
            if v > win[best] {
                best = i;
            }
        }
        out.push(win[best]);
        arg.push(best as u32);
    }
    Ok((out, arg))
}

pub fn maxpool1d_backward<T: Real>(dy: &[T], arg: &[u32], width: usize) -> Vec<T> {
    let mut dx = vec![T::zero(); dy.len() * width];
    for (o, (&g, &a)) in dy.iter().zip(arg).enumerate() {
        dx[o * width + a as usize] = g;
    }
    dx
}

/// Inverted dropout. In train mode returns the mask of multipliers
/// (`0` or `1/(1-p)`); in eval mode or with `p == 0` the input is untouched.
pub fn dropout<T: Real, R: Rng + ?Sized>(x: &mut [T], p: f64, mode: Mode, rng: &mut R) -> Option<Vec<T>> {
    if mode == Mode::Eval || p <= 0.0 {
        return None;
    }
    let keep = T::from_f64(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
        .collect();
    x.iter_mut().zip(&mask).for_each(|(v, &m)| *v *= m);
    Some(mask)
}

// ---------------------------------------------------------------------------

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `y = sigmoid(x W + b)` for `x: [batch, in_dim]`, `W: [in_dim, out_dim]`.
pub fn dense_sigmoid_forward<T: Real>(x: &[T], batch: usize, in_dim: usize, w: &[T], b: &[T]) -> Result<Vec<T>> {
    let out_dim = b.len();
    if x.len() != batch * in_dim || w.len() != in_dim * out_dim {
        return Err(Error::ShapeMismatch(format!(
            "dense layer expects {in_dim} inputs per example and a {in_dim}x{out_dim} weight"
        )));
    }
    let mut y = vec![T::zero(); batch * out_dim];
    par::for_each_chunk_mut(&mut y, out_dim * GRAD_CHUNK, |c, out| {
        let lo = c * GRAD_CHUNK;
        let rows = out.len() / out_dim;
        for row in out.chunks_exact_mut(out_dim) {
            row.copy_from_slice(b);
        }
        T::gemm(
            rows, in_dim, out_dim, T::one(),
            &x[lo * in_dim..], in_dim as isize, 1,
            w, out_dim as isize, 1,
            T::one(), out, out_dim as isize, 1,
        );
        out.iter_mut().for_each(|v| *v = sigmoid(*v));
    });
    Ok(y)
}

/// Given the logit gradient `dz: [batch, out_dim]`, returns `(dx, dW, db)`.
pub fn dense_backward<T: Real>(x: &[T], batch: usize, in_dim: usize, w: &[T], dz: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let out_dim = dz.len() / batch;
    let mut dw = vec![T::zero(); in_dim * out_dim];
    // dW = x^T dz
    T::gemm(
        in_dim, batch, out_dim, T::one(),
        x, 1, in_dim as isize,
        dz, out_dim as isize, 1,
        T::zero(), &mut dw, out_dim as isize, 1,
    );
    let mut db = vec![T::zero(); out_dim];
    for row in dz.chunks_exact(out_dim) {
        db.iter_mut().zip(row).for_each(|(a, &g)| *a += g);
    }
    // dx = dz W^T
    let mut dx = vec![T::zero(); batch * in_dim];
    T::gemm(
        batch, out_dim, in_dim, T::one(),
        dz, out_dim as isize, 1,
        w, 1, out_dim as isize,
        T::zero(), &mut dx, in_dim as isize, 1,
    );
    (dx, dw, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn randv(n: usize, seed: u64) -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
    }

    /// Direct triple loop, independent of the im2col/GEMM path.
    fn naive_conv(x: &[f64], in_ch: usize, len: usize, k: &[f64], bias: &[f64], out_ch: usize, width: usize, stride: usize) -> Vec<f64> {
        let out_len = (len - width) / stride + 1;
        let mut y = vec![0.0; out_ch * out_len];
        for o in 0..out_ch {
            for t in 0..out_len {
                let mut s = bias[o];
                for i in 0..in_ch {
                    for j in 0..width {
                        s += k[(o * in_ch + i) * width + j] * x[i * len + t * stride + j];
                    }
                }
                y[o * out_len + t] = s;
            }
        }
        y
    }

    #[test]
    fn conv_delta_kernel_is_identity() {
        let x = randv(20, 1);
        let d = ConvDims { in_ch: 1, out_ch: 1, width: 3, stride: 1, len: 20 };
        let y = conv1d_forward(&x, 1, d, &[0.0, 1.0, 0.0], &[0.0]).unwrap();
        assert_eq!(y.len(), 18);
        assert_eq!(&y[..], &x[1..19]);
    }

    #[test]
    fn conv_zero_input_gives_bias() {
        let d = ConvDims { in_ch: 2, out_ch: 3, width: 4, stride: 2, len: 16 };
        let k = randv(3 * 2 * 4, 2);
        let y = conv1d_forward(&[0.0; 32], 1, d, &k, &[0.5, -1.0, 2.0]).unwrap();
        for (o, row) in y.chunks(7).enumerate() {
            assert!(row.iter().all(|&v| v == [0.5, -1.0, 2.0][o]));
        }
    }

    #[test]
    fn conv_matches_naive_oracle() {
        let x = randv(8, 3);
        let k = randv(3, 4);
        let d = ConvDims { in_ch: 1, out_ch: 1, width: 3, stride: 2, len: 8 };
        let y = conv1d_forward(&x, 1, d, &k, &[0.1]).unwrap();
        assert_eq!(y.len(), 3);
        let want = naive_conv(&x, 1, 8, &k, &[0.1], 1, 3, 2);
        for (a, b) in y.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }

        // multi-channel, multi-example
        let (b, ic, oc, len, w, s) = (3, 4, 5, 37, 6, 3);
        let x = randv(b * ic * len, 5);
        let k = randv(oc * ic * w, 6);
        let bias = randv(oc, 7);
        let d = ConvDims { in_ch: ic, out_ch: oc, width: w, stride: s, len };
        let y = conv1d_forward(&x, b, d, &k, &bias).unwrap();
        let ol = (len - w) / s + 1;
        for e in 0..b {
            let want = naive_conv(&x[e * ic * len..(e + 1) * ic * len], ic, len, &k, &bias, oc, w, s);
            for (a, b) in y[e * oc * ol..(e + 1) * oc * ol].iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_rejects_short_input() {
        let d = ConvDims { in_ch: 1, out_ch: 1, width: 9, stride: 1, len: 8 };
        assert!(conv1d_forward(&[0.0; 8], 1, d, &[0.0; 9], &[0.0]).is_err());
    }

    #[test]
    fn batchnorm_train_statistics() {
        let (b, c, l) = (4, 3, 50);
        let x: Vec<f64> = randv(b * c * l, 8).iter().map(|v| 3.0 * v + 1.5).collect();
        let (y, _) = batchnorm_forward_train(&x, b, c, l, &[1.0; 3], &[0.0; 3], 1e-5).unwrap();
        for ch in 0..c {
            let vals: Vec<f64> = (0..b).flat_map(|e| y[(e * c + ch) * l..(e * c + ch + 1) * l].to_vec()).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(m.abs() < 1e-5);
            assert!((v - 1.0).abs() < 1e-3);
        }
        let (y, _) = batchnorm_forward_train(&x, b, c, l, &[0.0; 3], &[0.25, 0.5, 0.75], 1e-5).unwrap();
        for ch in 0..c {
            assert!((0..b).all(|e| y[(e * c + ch) * l..(e * c + ch + 1) * l].iter().all(|&v| v == [0.25, 0.5, 0.75][ch])));
        }
        assert!(batchnorm_forward_train(&[1.0], 1, 1, 1, &[1.0], &[0.0], 1e-5).is_err());
    }

    #[test]
    fn batchnorm_eval_identity_stats() {
        let x = randv(40, 9);
        let y = batchnorm_forward_eval(&x, 2, 10, &[0.0; 2], &[1.0; 2], &[1.0; 2], &[0.0; 2], 1e-5);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn maxpool_cases() {
        let (y, _) = maxpool1d(&[1.0, 3.0, 2.0, 0.0], 1, 4, 2).unwrap();
        assert_eq!(y, vec![3.0, 2.0]);
        let x = randv(12, 10);
        assert_eq!(maxpool1d(&x, 2, 6, 1).unwrap().0, x);
        let mono: Vec<f64> = (0..12).map(|i| i as f64).collect();
        assert_eq!(maxpool1d(&mono, 1, 12, 3).unwrap().0, vec![2.0, 5.0, 8.0, 11.0]);
        assert!(maxpool1d(&mono, 1, 12, 5).is_err());
    }

    #[test]
    fn dropout_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = randv(100, 11);
        let mut y = x.clone();
        assert!(dropout(&mut y, 0.25, Mode::Eval, &mut rng).is_none());
        assert_eq!(x, y);
        assert!(dropout(&mut y, 0.0, Mode::Train, &mut rng).is_none());
        assert_eq!(x, y);

        let mut ones = vec![1.0f64; 1_000_000];
        dropout(&mut ones, 0.25, Mode::Train, &mut rng).unwrap();
        let mean = ones.iter().sum::<f64>() / ones.len() as f64;
        assert!((mean - 1.0).abs() < 0.005, "{mean}");
        let zeros = ones.iter().filter(|&&v| v == 0.0).count() as f64 / 1e6;
        assert!((zeros - 0.25).abs() < 0.005);
    }

    #[test]
    fn dense_cases() {
        let x = randv(2 * 10, 12);
        let y = dense_sigmoid_forward(&x, 2, 10, &[0.0; 30], &[0.0; 3]).unwrap();
        assert!(y.iter().all(|&v| v == 0.5));
        let y = dense_sigmoid_forward(&x, 2, 10, &[0.0; 30], &[20.0, 0.0, 0.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);

        let w = randv(30, 13);
        let b = randv(3, 14);
        let y = dense_sigmoid_forward(&x, 2, 10, &w, &b).unwrap();
        for e in 0..2 {
            for o in 0..3 {
                let z: f64 = b[o] + (0..10).map(|i| x[e * 10 + i] * w[i * 3 + o]).sum::<f64>();
                assert!((y[e * 3 + o] - 1.0 / (1.0 + (-z).exp())).abs() < 1e-6);
            }
        }
        assert!(dense_sigmoid_forward(&x, 2, 9, &w, &b).is_err());
    }
}
