//! Stratified k-fold evaluation and a small multi-subject comparison table.
//!
//! cargo run --release --example cross_validation -- [epochs]

use mi_eeg::eval::{compare, cross_validate, CompareConfig, Method};
use mi_eeg::synth::generate_dataset;
use mi_eeg::{GeneratorParams, TrainConfig};

fn main() -> anyhow::Result<()> {
    let epochs = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let params = GeneratorParams::default();
    let ds = generate_dataset(20, &params, 4, 1)?.dataset;
    let train = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let cv = cross_validate(Method::Fbcsp, &ds, 5, 1, &train)?;
    println!("FBCSP+RLDA 5-fold: {:?}", cv.fold_accuracies);
    print!("{}", String::from_utf8(cv.confusion.to_csv()?)?);

    let cfg = CompareConfig {
        cv: 3,
        n_per_class: 15,
        train,
        ..CompareConfig::synthetic(2, 1, &params)
    };
    let result = compare(&cfg)?;
    print!("{}", result.table.to_text());
    Ok(())
}
