//! Per-layer kernels. All functions work on whole batches stored
//! contiguously as `[batch, ...]`.

/// Range of output positions `y` for which `y + d` stays inside `0..len`.
#[inline]
fn valid_range(len: usize, d: isize) -> std::ops::Range<usize> {
    let lo = (-d).max(0) as usize;
    let hi = (len as isize - d.max(0)) as usize;
    lo..hi.max(lo)
}

pub(crate) struct ConvDims {
    pub batch: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub h: usize,
    pub w: usize,
}

/// 3×3 same-padded convolution.
pub(crate) fn conv3x3_forward(x: &[f64], weight: &[f64], bias: &[f64], d: &ConvDims) -> Vec<f64> {
    let hw = d.h * d.w;
    let mut out = vec![0.0; d.batch * d.out_ch * hw];
    for b in 0..d.batch {
        for o in 0..d.out_ch {
            let dst = &mut out[(b * d.out_ch + o) * hw..][..hw];
            dst.iter_mut().for_each(|v| *v = bias[o]);
            for c in 0..d.in_ch {
                let src = &x[(b * d.in_ch + c) * hw..][..hw];
                let taps = &weight[(o * d.in_ch + c) * 9..][..9];
                for ky in 0..3 {
                    let dy = ky as isize - 1;
                    for kx in 0..3 {
                        let dx = kx as isize - 1;
                        let wv = taps[ky * 3 + kx];
                        let xs = valid_range(d.w, dx);
                        for y in valid_range(d.h, dy) {
                            let sy = (y as isize + dy) as usize;
                            let drow = &mut dst[y * d.w + xs.start..y * d.w + xs.end];
                            let s0 = (sy * d.w) as isize + xs.start as isize + dx;
                            let srow = &src[s0 as usize..s0 as usize + xs.len()];
                            for (o_v, s_v) in drow.iter_mut().zip(srow) {
                                *o_v += wv * s_v;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Gradients of the 3×3 convolution. Returns (d_input, d_weight, d_bias).
pub(crate) fn conv3x3_backward(
    x: &[f64],
    weight: &[f64],
    grad_out: &[f64],
    d: &ConvDims,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let hw = d.h * d.w;
    let mut gx = vec![0.0; x.len()];
    let mut gw = vec![0.0; weight.len()];
    let mut gb = vec![0.0; d.out_ch];
    for b in 0..d.batch {
        for o in 0..d.out_ch {
            let g = &grad_out[(b * d.out_ch + o) * hw..][..hw];
            gb[o] += g.iter().sum::<f64>();
            for c in 0..d.in_ch {
                let src = &x[(b * d.in_ch + c) * hw..][..hw];
                let gsrc = &mut gx[(b * d.in_ch + c) * hw..][..hw];
                let base = (o * d.in_ch + c) * 9;
                for ky in 0..3 {
                    let dy = ky as isize - 1;
                    for kx in 0..3 {
                        let dx = kx as isize - 1;
                        let wv = weight[base + ky * 3 + kx];
                        let xs = valid_range(d.w, dx);
                        let mut acc = 0.0;
                        for y in valid_range(d.h, dy) {
                            let sy = (y as isize + dy) as usize;
                            let grow = &g[y * d.w + xs.start..y * d.w + xs.end];
                            let s0 = ((sy * d.w) as isize + xs.start as isize + dx) as usize;
                            let srow = &src[s0..s0 + xs.len()];
                            acc += grow.iter().zip(srow).map(|(a, b)| a * b).sum::<f64>();
                            let gsrow = &mut gsrc[s0..s0 + xs.len()];
                            for (gs, gv) in gsrow.iter_mut().zip(grow) {
                                *gs += wv * gv;
                            }
                        }
                        gw[base + ky * 3 + kx] += acc;
                    }
                }
            }
        }
    }
    (gx, gw, gb)
}

/// 2×2 stride-2 max pooling over `planes` planes of `h × w`. Returns the
/// pooled values and, per output, the index of the winning input element.
/// Ties go to the first element in row-major scan order.
pub(crate) fn maxpool_forward(x: &[f64], planes: usize, h: usize, w: usize) -> (Vec<f64>, Vec<u32>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(planes * oh * ow);
    let mut arg = Vec::with_capacity(planes * oh * ow);
    for p in 0..planes {
        let base = p * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best_i = base + 2 * oy * w + 2 * ox;
                let mut best = x[best_i];
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = base + (2 * oy + dy) * w + 2 * ox + dx;
                    if x[i] > best {
                        best = x[i];
                        best_i = i;
                    }
                }
                out.push(best);
                arg.push(best_i as u32);
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool_backward(grad_out: &[f64], argmax: &[u32], input_len: usize) -> Vec<f64> {
    let mut gx = vec![0.0; input_len];
    for (g, &i) in grad_out.iter().zip(argmax) {
        gx[i as usize] += g;
    }
    gx
}

/// `out[b, o] = bias[o] + sum_i weight[o, i] * x[b, i]`.
pub(crate) fn dense_forward(x: &[f64], weight: &[f64], bias: &[f64], batch: usize, in_dim: usize) -> Vec<f64> {
    let out_dim = bias.len();
    let mut out = Vec::with_capacity(batch * out_dim);
    for b in 0..batch {
        let xb = &x[b * in_dim..][..in_dim];
        for o in 0..out_dim {
            let row = &weight[o * in_dim..][..in_dim];
            out.push(bias[o] + row.iter().zip(xb).map(|(w, v)| w * v).sum::<f64>());
        }
    }
    out
}

pub(crate) fn dense_backward(
    x: &[f64],
    weight: &[f64],
    grad_out: &[f64],
    batch: usize,
    in_dim: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let out_dim = weight.len() / in_dim;
    let mut gx = vec![0.0; batch * in_dim];
    let mut gw = vec![0.0; weight.len()];
    let mut gb = vec![0.0; out_dim];
    for b in 0..batch {
        let xb = &x[b * in_dim..][..in_dim];
        let gxb = &mut gx[b * in_dim..][..in_dim];
        for o in 0..out_dim {
            let g = grad_out[b * out_dim + o];
            if g == 0.0 {
                continue;
            }
            gb[o] += g;
            let row = &weight[o * in_dim..][..in_dim];
            let grow = &mut gw[o * in_dim..][..in_dim];
            for i in 0..in_dim {
                grow[i] += g * xb[i];
                gxb[i] += g * row[i];
            }
        }
    }
    (gx, gw, gb)
}
