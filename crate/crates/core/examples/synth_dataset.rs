//! Render a synthetic session, epoch it and write the dataset container.
//!
//! cargo run --example synth_dataset -- [out_dir]

use mi_eeg::data::{read_dataset, write_dataset};
use mi_eeg::synth::generate_dataset;
use mi_eeg::GeneratorParams;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/synth_dataset".into());
    let params = GeneratorParams::default();
    let s = generate_dataset(10, &params, 7, 1)?;
    println!(
        "session: {} channels, {:.0} s at {} Hz, {} trials",
        s.raw.n_channels(),
        s.raw.duration_s(),
        s.raw.fs,
        s.trials.len()
    );
    let ds = &s.dataset;
    println!(
        "dataset: {} epochs of {}×{} at {} Hz, per class {:?}",
        ds.len(),
        ds.n_channels(),
        ds.epoch_len(),
        ds.fs(),
        ds.class_counts()
    );
    let manifest = write_dataset(ds, out.as_ref(), serde_json::json!({ "generator": params, "seed": 7 }))?;
    let (back, _) = read_dataset(out.as_ref())?;
    assert_eq!(&back, ds);
    println!("wrote {out} (digest {})", &manifest.data_digest[..16]);
    Ok(())
}
