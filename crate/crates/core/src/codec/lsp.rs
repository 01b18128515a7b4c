use std::f64::consts::PI;

use super::{LpcFrame, LPC_ORDER};
use crate::{Error, Result};

/// Uniform grid size used to bracket LSP roots on `(0, pi)`.
pub const LSP_GRID_POINTS: usize = 512;
const BISECTION_TOL: f64 = 1e-10;
const HALF: usize = LPC_ORDER / 2;

/// Gain plus 8 line spectral frequencies in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LspFrame {
    pub gain: f64,
    pub freqs: [f64; LPC_ORDER],
}

impl LspFrame {
    /// LSPs of the flat filter `A(z) = 1`: `k * pi / 9`.
    pub fn flat(gain: f64) -> Self {
        let mut freqs = [0.0; LPC_ORDER];
        for (k, f) in freqs.iter_mut().enumerate() {
            *f = (k + 1) as f64 * PI / (LPC_ORDER + 1) as f64;
        }
        Self { gain, freqs }
    }

    /// True when `0 < w1 < .. < w8 < pi` and all values are finite.
    pub fn is_ordered(&self) -> bool {
        self.freqs.iter().all(|w| w.is_finite())
            && self.freqs[0] > 0.0
            && self.freqs[LPC_ORDER - 1] < PI
            && self.freqs.windows(2).all(|p| p[0] < p[1])
    }
}

/// Symmetric (sum) and antisymmetric (difference) polynomials with their
/// trivial roots at z = -1 and z = 1 divided out. Both are symmetric of
/// degree 8.
fn deflated_pair(lpc: &LpcFrame) -> ([f64; LPC_ORDER + 1], [f64; LPC_ORDER + 1]) {
    let a = lpc.polynomial();
    let coef = |k: usize| if k <= LPC_ORDER { a[k] } else { 0.0 };
    let mut p = [0.0; LPC_ORDER + 2];
    let mut q = [0.0; LPC_ORDER + 2];
    for k in 0..=LPC_ORDER + 1 {
        p[k] = coef(k) + coef(LPC_ORDER + 1 - k);
        q[k] = coef(k) - coef(LPC_ORDER + 1 - k);
    }
    let mut pd = [0.0; LPC_ORDER + 1];
    let mut qd = [0.0; LPC_ORDER + 1];
    pd[0] = p[0];
    qd[0] = q[0];
    for k in 1..=LPC_ORDER {
        pd[k] = p[k] - pd[k - 1];
        qd[k] = q[k] + qd[k - 1];
    }
    (pd, qd)
}

/// `e^{j 4 w} C(e^{jw})` for a symmetric degree-8 polynomial: a real cosine
/// series.
fn cosine_series(c: &[f64; LPC_ORDER + 1], w: f64) -> f64 {
    let mut acc = c[HALF];
    for k in 1..=HALF {
        acc += 2.0 * c[HALF - k] * (k as f64 * w).cos();
    }
    acc
}

fn bisect(c: &[f64; LPC_ORDER + 1], mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = cosine_series(c, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn roots_on_grid(c: &[f64; LPC_ORDER + 1]) -> Vec<f64> {
    let step = PI / LSP_GRID_POINTS as f64;
    let mut roots = Vec::with_capacity(HALF);
    let mut prev_w = 0.0;
    let mut prev_f = cosine_series(c, prev_w);
    for j in 1..=LSP_GRID_POINTS {
        let w = j as f64 * step;
        let f = cosine_series(c, w);
        if f == 0.0 && j < LSP_GRID_POINTS {
            roots.push(w);
        } else if prev_f != 0.0 && (f < 0.0) != (prev_f < 0.0) {
            roots.push(bisect(c, prev_w, w, prev_f));
        }
        prev_w = w;
        prev_f = f;
    }
    roots
}

/// Line spectral frequencies of an LPC filter.
///
/// Roots of the sum and difference polynomials are bracketed on a
/// 512-point grid over `(0, pi)` and refined by bisection to 1e-10 rad. A
/// root count other than 8 means the filter was not minimum phase (or two
/// roots share a grid cell) and is reported as an error.
pub fn lpc_to_lsp(lpc: &LpcFrame) -> Result<LspFrame> {
    if lpc.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::LspRootIsolation {
            found: 0,
            expected: LPC_ORDER,
        });
    }
    let (pd, qd) = deflated_pair(lpc);
    let p_roots = roots_on_grid(&pd);
    let q_roots = roots_on_grid(&qd);
    let found = p_roots.len() + q_roots.len();
    if p_roots.len() != HALF || q_roots.len() != HALF {
        return Err(Error::LspRootIsolation {
            found,
            expected: LPC_ORDER,
        });
    }
    let mut freqs = [0.0; LPC_ORDER];
    for i in 0..HALF {
        freqs[2 * i] = p_roots[i];
        freqs[2 * i + 1] = q_roots[i];
    }
    let out = LspFrame {
        gain: lpc.gain,
        freqs,
    };
    if !out.is_ordered() {
        // sum/difference roots failed to interleave
        return Err(Error::LspRootIsolation {
            found,
            expected: LPC_ORDER,
        });
    }
    Ok(out)
}

fn multiply(poly: &[f64], factor: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + factor.len() - 1];
    for (i, a) in poly.iter().enumerate() {
        for (j, b) in factor.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Rebuild the LPC filter from strictly ordered line spectral frequencies.
pub fn lsp_to_lpc(lsp: &LspFrame) -> Result<LpcFrame> {
    if !lsp.is_ordered() {
        return Err(Error::InvalidLspOrdering(format!("{:?}", lsp.freqs)));
    }
    let mut p = vec![1.0, 1.0];
    let mut q = vec![1.0, -1.0];
    for i in 0..HALF {
        let cp = -2.0 * lsp.freqs[2 * i].cos();
        let cq = -2.0 * lsp.freqs[2 * i + 1].cos();
        p = multiply(&p, &[1.0, cp, 1.0]);
        q = multiply(&q, &[1.0, cq, 1.0]);
    }
    let mut coeffs = [0.0; LPC_ORDER];
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c = 0.5 * (p[k + 1] + q[k + 1]);
    }
    Ok(LpcFrame {
        coeffs,
        gain: lsp.gain,
    })
}
