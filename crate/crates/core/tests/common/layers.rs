//! Small networks that route gradients through one layer kind each.

use mi_eeg::nn::{LayerSpec, Tensor};

use super::{rng, uniform};

pub const INPUT: [usize; 4] = [3, 1, 4, 12];
pub const CLASSES: usize = 3;

fn conv(ci: usize, co: usize, kernel: [usize; 2]) -> LayerSpec {
    LayerSpec::Conv2d {
        in_channels: ci,
        out_channels: co,
        kernel,
        stride: [1, 1],
    }
}

fn head(features: usize) -> [LayerSpec; 3] {
    [
        LayerSpec::Flatten,
        LayerSpec::Dense {
            in_features: features,
            out_features: CLASSES,
        },
        LayerSpec::SoftmaxXent,
    ]
}

/// `(layer name, specs)` for every layer kind.
pub fn probes() -> Vec<(&'static str, Vec<LayerSpec>)> {
    let c = conv(1, 2, [2, 3]);
    // conv output [2, 3, 10]
    let after_conv = 2 * 3 * 10;
    let with = |mid: Vec<LayerSpec>, features: usize| {
        let mut v = vec![c.clone()];
        v.extend(mid);
        v.extend(head(features));
        v
    };
    vec![
        ("conv2d", with(vec![], after_conv)),
        ("conv2d strided", {
            let mut v = vec![LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: 2,
                kernel: [2, 4],
                stride: [2, 2],
            }];
            v.extend(head(2 * 2 * 5));
            v
        }),
        (
            "avgpool2d",
            with(
                vec![LayerSpec::AvgPool2d {
                    kernel: [1, 4],
                    stride: [1, 2],
                }],
                2 * 3 * 4,
            ),
        ),
        ("elu", with(vec![LayerSpec::Elu { alpha: 1.0 }], after_conv)),
        ("square", with(vec![LayerSpec::Square], after_conv)),
        (
            "logact",
            with(vec![LayerSpec::Square, LayerSpec::LogAct { floor: 1e-6 }], after_conv),
        ),
        ("flatten", head(4 * 12).to_vec()),
        ("dense", {
            let mut v = vec![
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    in_features: 48,
                    out_features: 5,
                },
                LayerSpec::Elu { alpha: 1.0 },
                LayerSpec::Dense {
                    in_features: 5,
                    out_features: CLASSES,
                },
            ];
            v.push(LayerSpec::SoftmaxXent);
            v
        }),
        ("softmax_xent", head(4 * 12).to_vec()),
    ]
}

pub fn probe_input(seed: u64) -> (Tensor<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let x = uniform(&mut r, INPUT.iter().product());
    (Tensor::new(INPUT.to_vec(), x).unwrap(), vec![0, 2, 1])
}
