use serde::{Deserialize, Serialize};

use super::ops;
use super::{glorot_init, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::util::derive_seed;

/// One layer of a sequential network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: [usize; 2],
    },
    AvgPool2d {
        kernel: [usize; 2],
        stride: [usize; 2],
    },
    Elu {
        alpha: f64,
    },
    Square,
    LogAct {
        floor: f64,
    },
    Flatten,
    Dense {
        in_features: usize,
        out_features: usize,
    },
    /// Terminal softmax + cross-entropy; must be the last layer.
    SoftmaxXent,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::AvgPool2d { .. } => "avgpool2d",
            LayerSpec::Elu { .. } => "elu",
            LayerSpec::Square => "square",
            LayerSpec::LogAct { .. } => "logact",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::SoftmaxXent => "softmax_xent",
        }
    }

    /// Weight then bias, for layers that carry parameters.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![
                vec![out_channels, in_channels, kernel[0], kernel[1]],
                vec![out_channels],
            ],
            LayerSpec::Dense {
                in_features,
                out_features,
            } => vec![vec![in_features, out_features], vec![out_features]],
            _ => Vec::new(),
        }
    }

    /// Per-example output shape for a per-example input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let spatial = |what: &str| -> Result<[usize; 3]> {
            match *input {
                [c, h, w] => Ok([c, h, w]),
                _ => Err(Error::Shape(format!(
                    "{what} expects a [C, H, W] input, got {input:?}"
                ))),
            }
        };
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => {
                let [c, h, w] = spatial("conv2d")?;
                if c != in_channels {
                    return Err(Error::Shape(format!(
                        "conv2d declared {in_channels} input channels, receives {c}"
                    )));
                }
                if out_channels == 0 {
                    return Err(Error::Shape("conv2d with zero output channels".into()));
                }
                let (ho, wo) = ops::window_output(
                    (h, w),
                    (kernel[0], kernel[1]),
                    (stride[0], stride[1]),
                )?;
                Ok(vec![out_channels, ho, wo])
            }
            LayerSpec::AvgPool2d { kernel, stride } => {
                let [c, h, w] = spatial("avgpool2d")?;
                let (ho, wo) = ops::window_output(
                    (h, w),
                    (kernel[0], kernel[1]),
                    (stride[0], stride[1]),
                )?;
                Ok(vec![c, ho, wo])
            }
            LayerSpec::Elu { alpha } => {
                if !(alpha > 0.0) {
                    return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
                }
                Ok(input.to_vec())
            }
            LayerSpec::LogAct { floor } => {
                if !(floor > 0.0) {
                    return Err(Error::invalid("floor", format!("must be positive, got {floor}")));
                }
                Ok(input.to_vec())
            }
            LayerSpec::Square | LayerSpec::SoftmaxXent => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Dense {
                in_features,
                out_features,
            } => match *input {
                [f] if f == in_features && out_features > 0 => Ok(vec![out_features]),
                _ => Err(Error::Shape(format!(
                    "dense expects [{in_features}] input, got {input:?}"
                ))),
            },
        }
    }
}

/// Per-example output shape of every layer, validating the whole plan.
pub fn shape_plan(input_shape: &[usize], specs: &[LayerSpec]) -> Result<Vec<Vec<usize>>> {
    if input_shape.is_empty() || input_shape.contains(&0) {
        return Err(Error::Shape(format!("invalid input shape {input_shape:?}")));
    }
    match specs.iter().position(|s| *s == LayerSpec::SoftmaxXent) {
        Some(i) if i + 1 == specs.len() => {}
        _ => {
            return Err(Error::Shape(
                "network must end with exactly one softmax_xent layer".into(),
            ))
        }
    }
    let mut shape = input_shape.to_vec();
    let mut plan = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        shape = spec
            .output_shape(&shape)
            .map_err(|e| Error::Shape(format!("layer {i} ({}): {e}", spec.name())))?;
        plan.push(shape.clone());
    }
    match plan.last().map(Vec::as_slice) {
        Some([_k]) => Ok(plan),
        other => Err(Error::Shape(format!(
            "softmax_xent needs a flat [K] input, got {other:?}"
        ))),
    }
}

/// Loss and class probabilities of one training batch.
#[derive(Clone, Debug)]
pub struct BatchOutcome<T> {
    pub loss: T,
    pub probs: Tensor<T>,
}

/// Sequential network: layer specs plus their parameters in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T = f32> {
    input_shape: Vec<usize>,
    specs: Vec<LayerSpec>,
    params: Vec<Tensor<T>>,
    /// Index of each layer's first parameter in `params`.
    offsets: Vec<usize>,
    /// Layers 0 and 1 run as one folded conv (see [`Network::stem_fusable`]).
    fused_stem: bool,
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights (one derived seed per layer) and zero biases.
    pub fn new(input_shape: &[usize], specs: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        shape_plan(input_shape, &specs)?;
        let mut params = Vec::new();
        for (i, spec) in specs.iter().enumerate() {
            for (j, shape) in spec.param_shapes().into_iter().enumerate() {
                params.push(if j == 0 {
                    glorot_init(&shape, derive_seed(seed, i as u64))?
                } else {
                    Tensor::zeros(shape)?
                });
            }
        }
        Self::from_parameters(input_shape, specs, params)
    }

    pub fn from_parameters(
        input_shape: &[usize],
        specs: Vec<LayerSpec>,
        params: Vec<Tensor<T>>,
    ) -> Result<Self> {
        shape_plan(input_shape, &specs)?;
        let mut offsets = Vec::with_capacity(specs.len());
        let mut expected = Vec::new();
        for spec in &specs {
            offsets.push(expected.len());
            expected.extend(spec.param_shapes());
        }
        if expected.len() != params.len() {
            return Err(Error::Incompatible(format!(
                "architecture declares {} parameter tensors, {} supplied",
                expected.len(),
                params.len()
            )));
        }
        for (i, (shape, p)) in expected.iter().zip(&params).enumerate() {
            if p.shape() != shape.as_slice() {
                return Err(Error::Incompatible(format!(
                    "parameter {i}: expected shape {shape:?}, found {:?}",
                    p.shape()
                )));
            }
        }
        let fused_stem = Self::stem_fusable(input_shape, &specs);
        Ok(Network {
            input_shape: input_shape.to_vec(),
            specs,
            params,
            offsets,
            fused_stem,
        })
    }

    /// A temporal conv over a single input plane (1×K kernel) followed
    /// directly by a conv spanning every row is one linear map. Such a stem is
    /// evaluated as a single conv with the folded kernel, so the
    /// `F1 × rows × time` intermediate is never built.
    pub fn stem_fusable(input_shape: &[usize], specs: &[LayerSpec]) -> bool {
        match (input_shape, specs) {
            (
                [1, rows, _],
                [LayerSpec::Conv2d {
                    in_channels: 1,
                    out_channels: f1,
                    kernel: [1, _],
                    stride: [1, 1],
                }, LayerSpec::Conv2d {
                    in_channels,
                    kernel: [kh, 1],
                    stride: [1, 1],
                    ..
                }, ..],
            ) => in_channels == f1 && kh == rows,
            _ => false,
        }
    }

    /// Evaluates every layer separately even when the stem could be folded.
    pub fn without_stem_fusion(mut self) -> Self {
        self.fused_stem = false;
        self
    }

    pub fn has_fused_stem(&self) -> bool {
        self.fused_stem
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn n_classes(&self) -> usize {
        self.shape_plan().last().expect("validated plan")[0]
    }

    pub fn shape_plan(&self) -> Vec<Vec<usize>> {
        shape_plan(&self.input_shape, &self.specs).expect("validated at construction")
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            input_shape: self.input_shape.clone(),
            specs: self.specs.clone(),
            params: self.params.iter().map(Tensor::cast).collect(),
            offsets: self.offsets.clone(),
            fused_stem: self.fused_stem,
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        if input.shape().len() != self.input_shape.len() + 1
            || input.shape()[1..] != self.input_shape[..]
        {
            return Err(Error::Shape(format!(
                "network expects [N, {}] input, got {:?}",
                self.input_shape
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(", "),
                input.shape()
            )));
        }
        Ok(())
    }

    fn layer_forward(&self, i: usize, x: &Tensor<T>) -> Result<Tensor<T>> {
        let p = &self.params[self.offsets[i]..];
        match self.specs[i] {
            LayerSpec::Conv2d { stride, .. } => {
                ops::conv2d(x, &p[0], &p[1], (stride[0], stride[1]))
            }
            LayerSpec::AvgPool2d { kernel, stride } => {
                ops::avgpool2d(x, (kernel[0], kernel[1]), (stride[0], stride[1]))
            }
            LayerSpec::Elu { alpha } => Ok(ops::elu(x, T::of(alpha))),
            LayerSpec::Square => Ok(ops::square_act(x)),
            LayerSpec::LogAct { floor } => Ok(ops::log_act(x, T::of(floor))),
            LayerSpec::Flatten => {
                let n = x.shape()[0];
                x.clone().reshape(vec![n, x.len() / n])
            }
            LayerSpec::Dense { .. } => ops::dense(x, &p[0], &p[1]),
            LayerSpec::SoftmaxXent => Ok(x.clone()),
        }
    }

    fn stem_forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let p = &self.params;
        let (weff, beff) = ops::compose_stem(&p[0], &p[1], &p[2], &p[3])?;
        ops::conv2d(input, &weff, &beff, (1, 1))
    }

    /// Inputs to every layer (index 0 is the batch itself) and the logits.
    /// With a fused stem the input of layer 1 is never formed (`None`).
    fn forward_trace(&self, input: &Tensor<T>) -> Result<(Vec<Option<Tensor<T>>>, Tensor<T>)> {
        self.check_input(input)?;
        let last = self.specs.len() - 1;
        let mut inputs = Vec::with_capacity(last);
        let (mut x, start) = if self.fused_stem {
            inputs.push(Some(input.clone()));
            inputs.push(None);
            (self.stem_forward(input)?, 2)
        } else {
            (input.clone(), 0)
        };
        for i in start..last {
            let y = self.layer_forward(i, &x)?;
            inputs.push(Some(x));
            x = y;
        }
        Ok((inputs, x))
    }

    /// Logits `[N, K]` (everything before the softmax). Read-only.
    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(input)?;
        let (mut x, start) = if self.fused_stem {
            (self.stem_forward(input)?, 2)
        } else {
            (self.layer_forward(0, input)?, 1)
        };
        for i in start..self.specs.len() - 1 {
            x = self.layer_forward(i, &x)?;
        }
        Ok(x)
    }

    /// Softmax probabilities `[N, K]`.
    pub fn predict_proba(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let logits = self.forward(input)?;
        let n = logits.shape()[0];
        Ok(ops::softmax_xent(&logits, &vec![0; n])?.probs)
    }

    /// For each ELU / log layer, how many of its inputs sit above the kink
    /// (0 for ELU, the floor for log). Used to detect kink crossings.
    pub fn kink_signature(&self, input: &Tensor<T>) -> Result<Vec<usize>> {
        let (inputs, _) = self.forward_trace(input)?;
        Ok(self
            .specs
            .iter()
            .zip(&inputs)
            .filter_map(|(spec, x)| {
                let x = x.as_ref()?;
                let kink = match *spec {
                    LayerSpec::Elu { .. } => T::zero(),
                    LayerSpec::LogAct { floor } => T::of(floor),
                    _ => return None,
                };
                Some(x.data().iter().filter(|&&v| v > kink).count())
            })
            .collect())
    }

    /// Mean cross-entropy on the batch; parameter gradients are overwritten.
    pub fn loss_and_backward(
        &mut self,
        input: &Tensor<T>,
        labels: &[usize],
    ) -> Result<BatchOutcome<T>> {
        let (inputs, logits) = self.forward_trace(input)?;
        let xent = ops::softmax_xent(&logits, labels)?;
        let first_param_layer = self
            .specs
            .iter()
            .position(|s| !s.param_shapes().is_empty());
        for p in &mut self.params {
            p.zero_grad();
        }
        let Some(first) = first_param_layer else {
            return Ok(BatchOutcome {
                loss: xent.loss,
                probs: xent.probs,
            });
        };
        let mut grad = xent.grad;
        let stop = if self.fused_stem { 2 } else { first };
        for i in (stop..self.specs.len() - 1).rev() {
            let x = inputs[i].as_ref().expect("formed outside the stem");
            let need_dx = i > first;
            let off = self.offsets[i];
            grad = match self.specs[i] {
                LayerSpec::Conv2d { stride, .. } => {
                    let g = ops::conv2d_backward(
                        x,
                        &self.params[off],
                        (stride[0], stride[1]),
                        &grad,
                        need_dx,
                    )?;
                    self.params[off].grad_mut().copy_from_slice(&g.kernel);
                    self.params[off + 1].grad_mut().copy_from_slice(&g.bias);
                    match g.input {
                        Some(dx) => dx,
                        None => break,
                    }
                }
                LayerSpec::Dense { .. } => {
                    let g = ops::dense_backward(x, &self.params[off], &grad)?;
                    self.params[off].grad_mut().copy_from_slice(&g.weight);
                    self.params[off + 1].grad_mut().copy_from_slice(&g.bias);
                    if !need_dx {
                        break;
                    }
                    g.input
                }
                LayerSpec::AvgPool2d { kernel, stride } => ops::avgpool2d_backward(
                    x.shape(),
                    (kernel[0], kernel[1]),
                    (stride[0], stride[1]),
                    &grad,
                )?,
                LayerSpec::Elu { alpha } => ops::elu_backward(x, T::of(alpha), &grad)?,
                LayerSpec::Square => ops::square_backward(x, &grad)?,
                LayerSpec::LogAct { floor } => ops::log_backward(x, T::of(floor), &grad)?,
                LayerSpec::Flatten => grad.reshape(x.shape().to_vec())?,
                LayerSpec::SoftmaxXent => unreachable!("terminal layer is excluded"),
            };
        }
        if self.fused_stem {
            let input = inputs[0].as_ref().expect("batch input");
            let (weff, _) = ops::compose_stem(&self.params[0], &self.params[1], &self.params[2], &self.params[3])?;
            let g = ops::conv2d_backward(input, &weff, (1, 1), &grad, false)?;
            let s = ops::compose_stem_backward(&self.params[0], &self.params[1], &self.params[2], &g.kernel, &g.bias)?;
            self.params[0].grad_mut().copy_from_slice(&s.wt);
            self.params[1].grad_mut().copy_from_slice(&s.bt);
            self.params[2].grad_mut().copy_from_slice(&s.ws);
            self.params[3].grad_mut().copy_from_slice(&s.bs);
        }
        Ok(BatchOutcome {
            loss: xent.loss,
            probs: xent.probs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_specs() -> Vec<LayerSpec> {
        vec![
            LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: 2,
                kernel: [1, 3],
                stride: [1, 1],
            },
            LayerSpec::Elu { alpha: 1.0 },
            LayerSpec::AvgPool2d {
                kernel: [1, 2],
                stride: [1, 2],
            },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_features: 2 * 2 * 3,
                out_features: 3,
            },
            LayerSpec::SoftmaxXent,
        ]
    }

    #[test]
    fn plan_and_param_count() {
        let net = Network::<f32>::new(&[1, 2, 8], tiny_specs(), 1).unwrap();
        let plan = net.shape_plan();
        assert_eq!(plan[0], vec![2, 2, 6]);
        assert_eq!(plan[2], vec![2, 2, 3]);
        assert_eq!(plan[3], vec![12]);
        assert_eq!(net.n_classes(), 3);
        assert_eq!(net.n_params(), 2 * 3 + 2 + 12 * 3 + 3);
    }

    #[test]
    fn softmax_must_be_last() {
        let mut specs = tiny_specs();
        specs.pop();
        assert!(Network::<f32>::new(&[1, 2, 8], specs.clone(), 1).is_err());
        specs.insert(0, LayerSpec::SoftmaxXent);
        assert!(Network::<f32>::new(&[1, 2, 8], specs, 1).is_err());
    }

    #[test]
    fn composed_forward_equals_layer_composition() {
        let net = Network::<f64>::new(&[1, 2, 8], tiny_specs(), 3).unwrap();
        let x = Tensor::new(
            vec![2, 1, 2, 8],
            (0..32).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect(),
        )
        .unwrap();
        let p = net.params();
        let a = ops::conv2d(&x, &p[0], &p[1], (1, 1)).unwrap();
        let a = ops::elu(&a, 1.0);
        let a = ops::avgpool2d(&a, (1, 2), (1, 2)).unwrap();
        let a = a.reshape(vec![2, 12]).unwrap();
        let a = ops::dense(&a, &p[2], &p[3]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), a);
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let net = Network::<f32>::new(&[1, 2, 8], tiny_specs(), 1).unwrap();
        let x = Tensor::zeros(vec![1, 1, 3, 8]).unwrap();
        assert!(net.forward(&x).is_err());
    }

    #[test]
    fn parameters_must_match_architecture() {
        let net = Network::<f32>::new(&[1, 2, 8], tiny_specs(), 1).unwrap();
        let mut params = net.params().to_vec();
        params.pop();
        assert!(matches!(
            Network::from_parameters(&[1, 2, 8], tiny_specs(), params),
            Err(Error::Incompatible(_))
        ));
    }

    fn stem_specs() -> Vec<LayerSpec> {
        vec![
            LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: 3,
                kernel: [1, 5],
                stride: [1, 1],
            },
            LayerSpec::Conv2d {
                in_channels: 3,
                out_channels: 2,
                kernel: [4, 1],
                stride: [1, 1],
            },
            LayerSpec::Elu { alpha: 1.0 },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_features: 2 * 12,
                out_features: 3,
            },
            LayerSpec::SoftmaxXent,
        ]
    }

    fn stem_batch() -> Tensor<f64> {
        Tensor::new(
            vec![3, 1, 4, 16],
            (0..192).map(|i| ((i * 37 % 23) as f64 - 11.0) / 7.0).collect(),
        )
        .unwrap()
    }

    #[test]
    fn folded_stem_matches_separate_layers() {
        let fused = Network::<f64>::new(&[1, 4, 16], stem_specs(), 4).unwrap();
        assert!(fused.has_fused_stem());
        let mut fused = fused;
        // nonzero biases so the bias folding is exercised
        for (i, v) in fused.params_mut()[1].data_mut().iter_mut().enumerate() {
            *v = 0.1 * (i as f64 + 1.0);
        }
        fused.params_mut()[3].data_mut()[1] = -0.3;
        let mut plain = fused.clone().without_stem_fusion();
        let x = stem_batch();
        let a = fused.forward(&x).unwrap();
        let b = plain.forward(&x).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-12);
        }
        let labels = [0, 2, 1];
        let la = fused.loss_and_backward(&x, &labels).unwrap().loss;
        let lb = plain.loss_and_backward(&x, &labels).unwrap().loss;
        assert!((la - lb).abs() < 1e-12);
        for (p, q) in fused.params().iter().zip(plain.params()) {
            for (u, v) in p.grad().unwrap().iter().zip(q.grad().unwrap()) {
                assert!((u - v).abs() < 1e-12, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn stem_fusion_requires_full_height_spatial_conv() {
        let specs = stem_specs();
        assert!(Network::<f32>::stem_fusable(&[1, 4, 16], &specs));
        assert!(!Network::<f32>::stem_fusable(&[2, 4, 16], &specs));
        assert!(!Network::<f32>::stem_fusable(&[1, 5, 16], &specs));
        assert!(!Network::<f32>::stem_fusable(&[1, 2, 8], &tiny_specs()));
    }
}
