//! Layer primitives: forward functions and their hand-written adjoints.
//!
//! Spatial layers take `[N, C, H, W]` batches, `dense` takes `[N, F]`.
//! Convolutions are valid (no padding) cross-correlations.

use super::{gemm, gemm_rs, MatRef, Scalar, Tensor};
use crate::error::{Error, Result};

fn dims4(t: &[usize], what: &str) -> Result<[usize; 4]> {
    match *t {
        [n, c, h, w] => Ok([n, c, h, w]),
        _ => Err(Error::Shape(format!("{what} expects [N, C, H, W], got {t:?}"))),
    }
}

fn check_window(
    (h, w): (usize, usize),
    (kh, kw): (usize, usize),
    (sh, sw): (usize, usize),
    what: &str,
) -> Result<(usize, usize)> {
    if kh == 0 || kw == 0 || sh == 0 || sw == 0 {
        return Err(Error::Shape(format!(
            "{what}: kernel and stride must be >= 1, got kernel ({kh}, {kw}) stride ({sh}, {sw})"
        )));
    }
    if kh > h || kw > w {
        return Err(Error::Shape(format!(
            "{what}: kernel ({kh}, {kw}) larger than input ({h}, {w})"
        )));
    }
    Ok(((h - kh) / sh + 1, (w - kw) / sw + 1))
}

/// Output spatial size of a valid window of `kernel`/`stride` over `(h, w)`.
pub fn window_output(
    input: (usize, usize),
    kernel: (usize, usize),
    stride: (usize, usize),
) -> Result<(usize, usize)> {
    check_window(input, kernel, stride, "window")
}

const ROW_WISE_MIN_KW: usize = 16;

struct ConvGeom {
    cin: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    ho: usize,
    wo: usize,
}

impl ConvGeom {
    fn rows(&self) -> usize {
        self.cin * self.kh * self.kw
    }

    fn cols(&self) -> usize {
        self.ho * self.wo
    }

    /// The unfolded matrix equals the input itself: the kernel spans the full
    /// height with unit width and stride.
    fn col_is_input(&self) -> bool {
        self.kh == self.h && self.kw == 1 && self.sw == 1
    }

    /// Wide kernels skip im2col: each input row is handed to the GEMM as a
    /// strided (Hankel) view `B[kj, oj] = x[oj·sw + kj]`.
    fn row_wise(&self) -> bool {
        self.kw >= ROW_WISE_MIN_KW
    }

    /// `(kernel column offset, input offset)` of every (ci, ki, oi) row GEMM.
    fn row_jobs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.cin).flat_map(move |ci| {
            (0..self.kh).flat_map(move |ki| {
                (0..self.ho).map(move |oi| {
                    (
                        (ci * self.kh + ki) * self.kw,
                        (ci * self.h + oi * self.sh + ki) * self.w,
                        oi * self.wo,
                    )
                })
            })
        })
    }

    fn hankel<'a, T>(&self, x: &'a [T], at: usize) -> MatRef<'a, T> {
        MatRef {
            data: &x[at..],
            rows: self.kw,
            cols: self.wo,
            rs: 1,
            cs: self.sw,
        }
    }

    fn im2col<T: Scalar>(&self, x: &[T], col: &mut [T]) {
        let p = self.cols();
        for ci in 0..self.cin {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (ci * self.kh + ki) * self.kw + kj;
                    let dst_row = &mut col[row * p..(row + 1) * p];
                    for oi in 0..self.ho {
                        let src = &x[(ci * self.h + oi * self.sh + ki) * self.w..];
                        let dst = &mut dst_row[oi * self.wo..(oi + 1) * self.wo];
                        if self.sw == 1 {
                            dst.copy_from_slice(&src[kj..kj + self.wo]);
                        } else {
                            for (oj, d) in dst.iter_mut().enumerate() {
                                *d = src[oj * self.sw + kj];
                            }
                        }
                    }
                }
            }
        }
    }

    fn col2im_add<T: Scalar>(&self, col: &[T], dx: &mut [T]) {
        let p = self.cols();
        for ci in 0..self.cin {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (ci * self.kh + ki) * self.kw + kj;
                    let src_row = &col[row * p..(row + 1) * p];
                    for oi in 0..self.ho {
                        let dst = &mut dx[(ci * self.h + oi * self.sh + ki) * self.w..];
                        let src = &src_row[oi * self.wo..(oi + 1) * self.wo];
                        for (oj, s) in src.iter().enumerate() {
                            dst[oj * self.sw + kj] += *s;
                        }
                    }
                }
            }
        }
    }
}

fn conv_geometry<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: (usize, usize),
) -> Result<([usize; 4], usize, ConvGeom)> {
    let [n, cin, h, w] = dims4(input.shape(), "conv2d input")?;
    let [cout, kcin, kh, kw] = dims4(kernel.shape(), "conv2d kernel")?;
    if kcin != cin {
        return Err(Error::Shape(format!(
            "conv2d: kernel expects {kcin} input channels, input has {cin}"
        )));
    }
    let (ho, wo) = check_window((h, w), (kh, kw), stride, "conv2d")?;
    Ok((
        [n, cin, h, w],
        cout,
        ConvGeom {
            cin,
            h,
            w,
            kh,
            kw,
            sh: stride.0,
            sw: stride.1,
            ho,
            wo,
        },
    ))
}

/// Valid 2-D cross-correlation: `input [N,Cin,H,W] ⋆ kernel [Cout,Cin,kH,kW] + bias [Cout]`.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: (usize, usize),
) -> Result<Tensor<T>> {
    let ([n, cin, h, w], cout, g) = conv_geometry(input, kernel, stride)?;
    if bias.len() != cout {
        return Err(Error::Shape(format!(
            "conv2d: bias has {} entries for {cout} output channels",
            bias.len()
        )));
    }
    let (rows, p) = (g.rows(), g.cols());
    let mut out = vec![T::zero(); n * cout * p];
    if g.row_wise() {
        let kd = kernel.data();
        for s in 0..n {
            let x = &input.data()[s * cin * h * w..(s + 1) * cin * h * w];
            let o = &mut out[s * cout * p..(s + 1) * cout * p];
            for (co, b) in bias.data().iter().enumerate() {
                o[co * p..(co + 1) * p].iter_mut().for_each(|v| *v = *b);
            }
            for (kcol, xat, oat) in g.row_jobs() {
                let a = MatRef {
                    data: &kd[kcol..],
                    rows: cout,
                    cols: g.kw,
                    rs: rows,
                    cs: 1,
                };
                gemm_rs(T::one(), a, g.hankel(x, xat), T::one(), &mut o[oat..], p);
            }
        }
        return Tensor::new(vec![n, cout, g.ho, g.wo], out);
    }
    let mut col = if g.col_is_input() {
        Vec::new()
    } else {
        vec![T::zero(); rows * p]
    };
    let k = MatRef::row_major(kernel.data(), cout, rows);
    for s in 0..n {
        let x = &input.data()[s * cin * h * w..(s + 1) * cin * h * w];
        let col_ref = if g.col_is_input() {
            MatRef::row_major(x, rows, p)
        } else {
            g.im2col(x, &mut col);
            MatRef::row_major(&col, rows, p)
        };
        let o = &mut out[s * cout * p..(s + 1) * cout * p];
        for (co, b) in bias.data().iter().enumerate() {
            o[co * p..(co + 1) * p].iter_mut().for_each(|v| *v = *b);
        }
        gemm(T::one(), k, col_ref, T::one(), o);
    }
    Tensor::new(vec![n, cout, g.ho, g.wo], out)
}

/// Gradients of [`conv2d`].
pub struct Conv2dGrads<T> {
    pub input: Option<Tensor<T>>,
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
}

pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: (usize, usize),
    grad_out: &Tensor<T>,
    want_input_grad: bool,
) -> Result<Conv2dGrads<T>> {
    let ([n, cin, h, w], cout, g) = conv_geometry(input, kernel, stride)?;
    let (rows, p) = (g.rows(), g.cols());
    if grad_out.shape() != [n, cout, g.ho, g.wo] {
        return Err(Error::Shape(format!(
            "conv2d backward: upstream gradient {:?} does not match output [{n}, {cout}, {}, {}]",
            grad_out.shape(),
            g.ho,
            g.wo
        )));
    }
    let mut dk = vec![T::zero(); cout * rows];
    let mut db = vec![T::zero(); cout];
    let mut dx = want_input_grad.then(|| vec![T::zero(); n * cin * h * w]);
    if g.row_wise() {
        let kd = kernel.data();
        let chw = cin * h * w;
        let mut drow = vec![T::zero(); g.kw * g.wo];
        for s in 0..n {
            let x = &input.data()[s * chw..(s + 1) * chw];
            let go = &grad_out.data()[s * cout * p..(s + 1) * cout * p];
            for (co, b) in db.iter_mut().enumerate() {
                *b += go[co * p..(co + 1) * p].iter().copied().sum::<T>();
            }
            for (kcol, xat, oat) in g.row_jobs() {
                let go_row = MatRef {
                    data: &go[oat..],
                    rows: cout,
                    cols: g.wo,
                    rs: p,
                    cs: 1,
                };
                // dK[co, kj] += Σ_oj go[co, oj] · x[oj·sw + kj]
                gemm_rs(T::one(), go_row, g.hankel(x, xat).t(), T::one(), &mut dk[kcol..], rows);
                if let Some(dx) = dx.as_mut() {
                    let a_t = MatRef {
                        data: &kd[kcol..],
                        rows: cout,
                        cols: g.kw,
                        rs: rows,
                        cs: 1,
                    }
                    .t();
                    gemm(T::one(), a_t, go_row, T::zero(), &mut drow);
                    let dxs = &mut dx[s * chw + xat..];
                    for kj in 0..g.kw {
                        for (oj, v) in drow[kj * g.wo..(kj + 1) * g.wo].iter().enumerate() {
                            dxs[oj * g.sw + kj] += *v;
                        }
                    }
                }
            }
        }
        return Ok(Conv2dGrads {
            input: dx
                .map(|d| Tensor::new(input.shape().to_vec(), d))
                .transpose()?,
            kernel: dk,
            bias: db,
        });
    }
    let mut col = if g.col_is_input() {
        Vec::new()
    } else {
        vec![T::zero(); rows * p]
    };
    let mut dcol = if want_input_grad && !g.col_is_input() {
        vec![T::zero(); rows * p]
    } else {
        Vec::new()
    };
    let k = MatRef::row_major(kernel.data(), cout, rows);
    let chw = cin * h * w;
    for s in 0..n {
        let x = &input.data()[s * chw..(s + 1) * chw];
        let go = &grad_out.data()[s * cout * p..(s + 1) * cout * p];
        let go_ref = MatRef::row_major(go, cout, p);
        for (co, b) in db.iter_mut().enumerate() {
            *b += go[co * p..(co + 1) * p].iter().copied().sum::<T>();
        }
        let col_ref = if g.col_is_input() {
            MatRef::row_major(x, rows, p)
        } else {
            g.im2col(x, &mut col);
            MatRef::row_major(&col, rows, p)
        };
        gemm(T::one(), go_ref, col_ref.t(), T::one(), &mut dk);
        if let Some(dx) = dx.as_mut() {
            let dxs = &mut dx[s * chw..(s + 1) * chw];
            if g.col_is_input() {
                gemm(T::one(), k.t(), go_ref, T::zero(), dxs);
            } else {
                gemm(T::one(), k.t(), go_ref, T::zero(), &mut dcol);
                g.col2im_add(&dcol, dxs);
            }
        }
    }
    Ok(Conv2dGrads {
        input: dx
            .map(|d| Tensor::new(input.shape().to_vec(), d))
            .transpose()?,
        kernel: dk,
        bias: db,
    })
}

/// Kernel and bias of a temporal conv (`wt [F1,1,1,K]`, `bt [F1]`) followed
/// by a spatial conv spanning all `C` rows (`ws [F2,F1,C,1]`, `bs [F2]`),
/// folded into one conv with kernel `[F2,1,C,K]`.
pub fn compose_stem<T: Scalar>(
    wt: &Tensor<T>,
    bt: &Tensor<T>,
    ws: &Tensor<T>,
    bs: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let [f1, one, one2, k] = dims4(wt.shape(), "stem temporal kernel")?;
    let [f2, f1s, c, one3] = dims4(ws.shape(), "stem spatial kernel")?;
    if one != 1 || one2 != 1 || one3 != 1 || f1s != f1 || bt.len() != f1 || bs.len() != f2 {
        return Err(Error::Shape(format!(
            "stem: incompatible kernels {:?} and {:?}",
            wt.shape(),
            ws.shape()
        )));
    }
    let (wt, ws) = (wt.data(), ws.data());
    let mut weff = vec![T::zero(); f2 * c * k];
    let mut beff = bs.data().to_vec();
    for o in 0..f2 {
        for f in 0..f1 {
            let wt_f = &wt[f * k..(f + 1) * k];
            for ci in 0..c {
                let w = ws[(o * f1 + f) * c + ci];
                beff[o] += w * bt.data()[f];
                for (e, &t) in weff[(o * c + ci) * k..(o * c + ci + 1) * k].iter_mut().zip(wt_f) {
                    *e += w * t;
                }
            }
        }
    }
    Ok((Tensor::new(vec![f2, 1, c, k], weff)?, Tensor::new(vec![f2], beff)?))
}

/// Gradients of the two stem layers from the gradient of the folded conv.
pub struct StemGrads<T> {
    pub wt: Vec<T>,
    pub bt: Vec<T>,
    pub ws: Vec<T>,
    pub bs: Vec<T>,
}

pub fn compose_stem_backward<T: Scalar>(
    wt: &Tensor<T>,
    bt: &Tensor<T>,
    ws: &Tensor<T>,
    dweff: &[T],
    dbeff: &[T],
) -> Result<StemGrads<T>> {
    let [f1, _, _, k] = dims4(wt.shape(), "stem temporal kernel")?;
    let [f2, _, c, _] = dims4(ws.shape(), "stem spatial kernel")?;
    if dweff.len() != f2 * c * k || dbeff.len() != f2 {
        return Err(Error::Shape("stem backward: gradient size mismatch".into()));
    }
    let (wt, ws) = (wt.data(), ws.data());
    let mut dwt = vec![T::zero(); f1 * k];
    let mut dbt = vec![T::zero(); f1];
    let mut dws = vec![T::zero(); f2 * f1 * c];
    for o in 0..f2 {
        for f in 0..f1 {
            let wt_f = &wt[f * k..(f + 1) * k];
            for ci in 0..c {
                let g = &dweff[(o * c + ci) * k..(o * c + ci + 1) * k];
                let idx = (o * f1 + f) * c + ci;
                dws[idx] = g.iter().zip(wt_f).map(|(&a, &b)| a * b).sum::<T>() + dbeff[o] * bt.data()[f];
                let w = ws[idx];
                dbt[f] += w * dbeff[o];
                for (d, &gv) in dwt[f * k..(f + 1) * k].iter_mut().zip(g) {
                    *d += w * gv;
                }
            }
        }
    }
    Ok(StemGrads {
        wt: dwt,
        bt: dbt,
        ws: dws,
        bs: dbeff.to_vec(),
    })
}

/// Mean over each `kernel` window.
pub fn avgpool2d<T: Scalar>(
    input: &Tensor<T>,
    kernel: (usize, usize),
    stride: (usize, usize),
) -> Result<Tensor<T>> {
    let [n, c, h, w] = dims4(input.shape(), "avgpool2d input")?;
    let (ho, wo) = check_window((h, w), kernel, stride, "avgpool2d")?;
    let scale = T::one() / T::of((kernel.0 * kernel.1) as f64);
    let mut out = Vec::with_capacity(n * c * ho * wo);
    for plane in input.data().chunks_exact(h * w) {
        for oi in 0..ho {
            for oj in 0..wo {
                let mut acc = T::zero();
                for ki in 0..kernel.0 {
                    let row = &plane[(oi * stride.0 + ki) * w + oj * stride.1..];
                    acc += row[..kernel.1].iter().copied().sum::<T>();
                }
                out.push(acc * scale);
            }
        }
    }
    Tensor::new(vec![n, c, ho, wo], out)
}

/// Spreads each upstream cell uniformly (`1 / (kH·kW)`) over its window.
pub fn avgpool2d_backward<T: Scalar>(
    input_shape: &[usize],
    kernel: (usize, usize),
    stride: (usize, usize),
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let [n, c, h, w] = dims4(input_shape, "avgpool2d input")?;
    let (ho, wo) = check_window((h, w), kernel, stride, "avgpool2d")?;
    if grad_out.shape() != [n, c, ho, wo] {
        return Err(Error::Shape(format!(
            "avgpool2d backward: upstream gradient {:?}, expected [{n}, {c}, {ho}, {wo}]",
            grad_out.shape()
        )));
    }
    let scale = T::one() / T::of((kernel.0 * kernel.1) as f64);
    let mut dx = vec![T::zero(); n * c * h * w];
    for (plane, go) in dx
        .chunks_exact_mut(h * w)
        .zip(grad_out.data().chunks_exact(ho * wo))
    {
        for oi in 0..ho {
            for oj in 0..wo {
                let g = go[oi * wo + oj] * scale;
                for ki in 0..kernel.0 {
                    let start = (oi * stride.0 + ki) * w + oj * stride.1;
                    plane[start..start + kernel.1]
                        .iter_mut()
                        .for_each(|v| *v += g);
                }
            }
        }
    }
    Tensor::new(input_shape.to_vec(), dx)
}

fn map<T: Scalar>(input: &Tensor<T>, f: impl Fn(T) -> T) -> Tensor<T> {
    let data = input.data().iter().map(|&x| f(x)).collect();
    Tensor::new(input.shape().to_vec(), data).expect("same shape")
}

fn zip_map<T: Scalar>(
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
    f: impl Fn(T, T) -> T,
) -> Result<Tensor<T>> {
    if input.shape() != grad_out.shape() {
        return Err(Error::Shape(format!(
            "elementwise backward: input {:?} vs gradient {:?}",
            input.shape(),
            grad_out.shape()
        )));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| f(x, g))
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

/// `x` for `x > 0`, `alpha·(eˣ − 1)` otherwise; saturates at `−alpha`.
pub fn elu<T: Scalar>(input: &Tensor<T>, alpha: T) -> Tensor<T> {
    map(input, |x| if x > T::zero() { x } else { alpha * x.exp_m1() })
}

pub fn elu_backward<T: Scalar>(
    input: &Tensor<T>,
    alpha: T,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    zip_map(input, grad_out, |x, g| {
        if x > T::zero() {
            g
        } else {
            g * alpha * x.exp()
        }
    })
}

pub fn square_act<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    map(input, |x| x * x)
}

pub fn square_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    zip_map(input, grad_out, |x, g| g * (x + x))
}

/// `ln(max(x, floor))`.
pub fn log_act<T: Scalar>(input: &Tensor<T>, floor: T) -> Tensor<T> {
    map(input, |x| x.max(floor).ln())
}

/// Zero gradient where the floor clamps.
pub fn log_backward<T: Scalar>(
    input: &Tensor<T>,
    floor: T,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    zip_map(input, grad_out, |x, g| {
        if x > floor {
            g / x
        } else {
            T::zero()
        }
    })
}

fn dense_dims<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let (n, f) = match *input.shape() {
        [n, f] => (n, f),
        ref s => return Err(Error::Shape(format!("dense expects [N, F] input, got {s:?}"))),
    };
    let (wf, k) = match *weight.shape() {
        [wf, k] => (wf, k),
        ref s => return Err(Error::Shape(format!("dense weight must be [F, K], got {s:?}"))),
    };
    if wf != f {
        return Err(Error::Shape(format!(
            "dense: input has {f} features, weight expects {wf}"
        )));
    }
    Ok((n, f, k))
}

/// `input [N,F] · weight [F,K] + bias [K]`.
pub fn dense<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, f, k) = dense_dims(input, weight)?;
    if bias.len() != k {
        return Err(Error::Shape(format!(
            "dense: bias has {} entries for {k} outputs",
            bias.len()
        )));
    }
    let mut out: Vec<T> = (0..n).flat_map(|_| bias.data().iter().copied()).collect();
    gemm(
        T::one(),
        MatRef::row_major(input.data(), n, f),
        MatRef::row_major(weight.data(), f, k),
        T::one(),
        &mut out,
    );
    Tensor::new(vec![n, k], out)
}

pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>> {
    let (n, f, k) = dense_dims(input, weight)?;
    if grad_out.shape() != [n, k] {
        return Err(Error::Shape(format!(
            "dense backward: upstream gradient {:?}, expected [{n}, {k}]",
            grad_out.shape()
        )));
    }
    let go = MatRef::row_major(grad_out.data(), n, k);
    let mut dw = vec![T::zero(); f * k];
    gemm(T::one(), MatRef::row_major(input.data(), n, f).t(), go, T::zero(), &mut dw);
    let mut dx = vec![T::zero(); n * f];
    gemm(T::one(), go, MatRef::row_major(weight.data(), f, k).t(), T::zero(), &mut dx);
    let mut db = vec![T::zero(); k];
    for row in grad_out.data().chunks_exact(k) {
        db.iter_mut().zip(row).for_each(|(b, g)| *b += *g);
    }
    Ok(DenseGrads {
        input: Tensor::new(vec![n, f], dx)?,
        weight: dw,
        bias: db,
    })
}

/// Result of [`softmax_xent`]: mean loss, probabilities and `∂loss/∂logits`.
pub struct SoftmaxXent<T> {
    pub loss: T,
    pub probs: Tensor<T>,
    pub grad: Tensor<T>,
}

/// Row-wise softmax with log-sum-exp stabilization and mean cross-entropy.
pub fn softmax_xent<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<SoftmaxXent<T>> {
    let (n, k) = match *logits.shape() {
        [n, k] => (n, k),
        ref s => return Err(Error::Shape(format!("softmax_xent expects [N, K], got {s:?}"))),
    };
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "softmax_xent: {} labels for {n} rows",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(
            "labels",
            format!("label {bad} out of range for {k} classes"),
        ));
    }
    let mut probs = Vec::with_capacity(n * k);
    let mut loss = T::zero();
    for (row, &label) in logits.data().chunks_exact(k).zip(labels) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = row.iter().map(|&z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[label];
        probs.extend(row.iter().map(|&z| (z - log_z).exp()));
    }
    let inv_n = T::one() / T::of(n as f64);
    let mut grad = probs.clone();
    for (i, &label) in labels.iter().enumerate() {
        grad[i * k + label] -= T::one();
    }
    grad.iter_mut().for_each(|g| *g *= inv_n);
    Ok(SoftmaxXent {
        loss: loss * inv_n,
        probs: Tensor::new(vec![n, k], probs)?,
        grad: Tensor::new(vec![n, k], grad)?,
    })
}
