use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// (fan_in, fan_out) for a dense weight `[F, K]` or a conv kernel `[Cout, Cin, kH, kW]`.
fn fans(shape: &[usize]) -> (usize, usize) {
    match *shape {
        [n] => (n, n),
        [f, k] => (f, k),
        [cout, cin, ref rest @ ..] => {
            let rf: usize = rest.iter().product();
            (cin * rf, cout * rf)
        }
        [] => (0, 0),
    }
}

/// Glorot/Xavier uniform draw in `[-b, b]`, `b = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_init<T: Scalar>(shape: &[usize], seed: u64) -> Result<Tensor<T>> {
    if shape.is_empty() {
        return Err(Error::invalid("shape", "empty shape"));
    }
    let (fan_in, fan_out) = fans(shape);
    if fan_in == 0 || fan_out == 0 || shape.contains(&0) {
        return Err(Error::invalid("shape", format!("zero fan in {shape:?}")));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let numel = shape.iter().product();
    let data = (0..numel)
        .map(|_| T::of(rng.random_range(-bound..=bound)))
        .collect();
    Tensor::new(shape.to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = glorot_init::<f32>(&[4, 4], 7).unwrap();
        let b = glorot_init::<f32>(&[4, 4], 7).unwrap();
        assert_eq!(a.data(), b.data());
        let c = glorot_init::<f32>(&[4, 4], 8).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn unit_fan_bound() {
        for seed in 0..50 {
            let t = glorot_init::<f64>(&[1, 1], seed).unwrap();
            assert!(t.data()[0].abs() <= 3f64.sqrt());
        }
    }

    #[test]
    fn conv_kernel_mean_near_zero() {
        // fan_in 63, fan_out 1008, b = sqrt(6/1071); var = b²/3
        let b = (6.0f64 / 1071.0).sqrt();
        let per = 16 * 63;
        let n = (per * 10) as f64;
        let mut sum = 0.0;
        for seed in 0..10 {
            let t = glorot_init::<f64>(&[16, 1, 1, 63], seed).unwrap();
            assert!(t.data().iter().all(|v| v.abs() <= b));
            sum += t.data().iter().sum::<f64>();
        }
        let se = (b * b / 3.0 / n).sqrt();
        assert!((sum / n).abs() < 3.0 * se);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(glorot_init::<f32>(&[], 1).is_err());
        assert!(glorot_init::<f32>(&[3, 0], 1).is_err());
    }
}
