//! Train BFR-CNN on a small synthetic set, checkpoint it and reload it.
//!
//! cargo run --release --example train_network -- [epochs]

use mi_eeg::eval::evaluate;
use mi_eeg::model::train;
use mi_eeg::synth::generate_dataset;
use mi_eeg::{ArchitectureConfig, GeneratorParams, NetKind, TrainConfig, TrainedNetwork};

fn main() -> anyhow::Result<()> {
    let epochs = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(30);
    let params = GeneratorParams::default();
    let train_set = generate_dataset(20, &params, 1, 1)?.dataset;
    let test_set = generate_dataset(10, &params, 2, 1)?.dataset;
    let arch = ArchitectureConfig::new(train_set.n_channels(), train_set.epoch_len(), train_set.fs(), train_set.n_classes());
    println!("BFR-CNN plan:");
    let specs = NetKind::BfrCnn.build(&arch)?;
    for (spec, shape) in specs.iter().zip(mi_eeg::nn::shape_plan(&arch.input_shape(), &specs)?) {
        println!("  {:<12} → {shape:?}", spec.name());
    }

    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let net = train(NetKind::BfrCnn, &arch, &train_set, &cfg)?;
    for r in net.history.iter().step_by((epochs / 5).max(1)) {
        println!("epoch {:>3}: loss {:.4}, train accuracy {:.3}", r.epoch, r.loss, r.accuracy);
    }

    let bytes = net.save_checkpoint()?;
    let reloaded = TrainedNetwork::<f32>::load_checkpoint(&bytes)?;
    let ev = evaluate(&reloaded, &test_set)?;
    println!("checkpoint {} bytes; held-out accuracy {:.3}", bytes.len(), ev.accuracy);
    print!("{}", String::from_utf8(ev.confusion.to_csv()?)?);
    Ok(())
}
