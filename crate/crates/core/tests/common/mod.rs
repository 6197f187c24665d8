//! Reference implementations shared by integration tests. Deliberately plain
//! nested loops with no shared code from the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod layers;
pub mod spectral;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `x [n,ci,h,w]`, `k [co,ci,kh,kw]` → `[n,co,ho,wo]`, valid cross-correlation.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_loops(
    x: &[f64],
    [n, ci, h, w]: [usize; 4],
    k: &[f64],
    [co, _, kh, kw]: [usize; 4],
    b: &[f64],
    (sh, sw): (usize, usize),
) -> (Vec<f64>, [usize; 4]) {
    let ho = (h - kh) / sh + 1;
    let wo = (w - kw) / sw + 1;
    let mut out = vec![0.0; n * co * ho * wo];
    for s in 0..n {
        for o in 0..co {
            for i in 0..ho {
                for j in 0..wo {
                    let mut acc = b[o];
                    for c in 0..ci {
                        for a in 0..kh {
                            for bb in 0..kw {
                                acc += k[((o * ci + c) * kh + a) * kw + bb]
                                    * x[((s * ci + c) * h + i * sh + a) * w + j * sw + bb];
                            }
                        }
                    }
                    out[((s * co + o) * ho + i) * wo + j] = acc;
                }
            }
        }
    }
    (out, [n, co, ho, wo])
}

/// Gradients of `sum(conv2d_loops(..) * g)` with respect to x, k and b.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward_loops(
    x: &[f64],
    [n, ci, h, w]: [usize; 4],
    k: &[f64],
    [co, _, kh, kw]: [usize; 4],
    g: &[f64],
    (sh, sw): (usize, usize),
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let ho = (h - kh) / sh + 1;
    let wo = (w - kw) / sw + 1;
    let mut dx = vec![0.0; x.len()];
    let mut dk = vec![0.0; k.len()];
    let mut db = vec![0.0; co];
    for s in 0..n {
        for o in 0..co {
            for i in 0..ho {
                for j in 0..wo {
                    let gv = g[((s * co + o) * ho + i) * wo + j];
                    db[o] += gv;
                    for c in 0..ci {
                        for a in 0..kh {
                            for bb in 0..kw {
                                let xi = ((s * ci + c) * h + i * sh + a) * w + j * sw + bb;
                                let ki = ((o * ci + c) * kh + a) * kw + bb;
                                dk[ki] += gv * x[xi];
                                dx[xi] += gv * k[ki];
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dk, db)
}

/// `x [n,f]`, `w [f,k]`, `b [k]` → `[n,k]`.
pub fn dense_loops(x: &[f64], n: usize, f: usize, w: &[f64], b: &[f64]) -> Vec<f64> {
    let k = b.len();
    let mut out = vec![0.0; n * k];
    for s in 0..n {
        for o in 0..k {
            let mut acc = b[o];
            for i in 0..f {
                acc += w[i * k + o] * x[s * f + i];
            }
            out[s * k + o] = acc;
        }
    }
    out
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max)
}

/// Largest `|a_i − b_i| / scale_i`, where `scale` holds the absolute-sum
/// magnitude of each output (the same op applied to absolute values).
pub fn max_scaled_diff(a: &[f64], b: &[f64], scale: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .zip(scale)
        .map(|((x, y), s)| (x - y).abs() / s.max(1e-300))
        .fold(0.0, f64::max)
}

pub fn abs_all(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}
