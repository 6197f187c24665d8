//! Central-difference check of the analytic gradients of both networks.

use mi_eeg::nn::{grad_check, GradCheckOptions, Tensor};
use mi_eeg::{ArchitectureConfig, NetKind};
use rand::{Rng, SeedableRng};

fn main() -> mi_eeg::Result<()> {
    let arch = ArchitectureConfig::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let shape = vec![2, 1, arch.n_channels, arch.epoch_len];
    let n = shape.iter().product();
    let x = Tensor::new(shape, (0..n).map(|_| rng.random_range(-3.0..3.0)).collect())?;
    let opts = GradCheckOptions {
        max_per_tensor: Some(25),
        ..GradCheckOptions::default()
    };
    for kind in [NetKind::BfrCnn, NetKind::ShallowConvNet] {
        let r = grad_check(kind.build(&arch)?, &x, &[1, 3], opts)?;
        println!(
            "{kind}: {} coordinates, max relative error {:.2e} ({} skipped at kinks)",
            r.checked, r.max_rel_error, r.skipped
        );
    }
    Ok(())
}
