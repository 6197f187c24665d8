//! Filter-bank CSP with shrinkage LDA, fitted one-vs-rest.

use mi_eeg::eval::evaluate;
use mi_eeg::fbcsp::{default_bands, fbcsp_fit, DEFAULT_M_PAIRS};
use mi_eeg::synth::generate_dataset;
use mi_eeg::{FbcspModel, GeneratorParams};

fn main() -> anyhow::Result<()> {
    let params = GeneratorParams::default();
    let train_set = generate_dataset(40, &params, 1, 1)?.dataset;
    let test_set = generate_dataset(20, &params, 2, 1)?.dataset;
    let model = fbcsp_fit(&train_set, &default_bands(), DEFAULT_M_PAIRS)?;
    println!(
        "{} bands × {} filters per class → {} features",
        model.bands.len(),
        2 * model.m_pairs,
        model.feature_len()
    );
    for (k, ovr) in model.classes.iter().enumerate() {
        let strongest = ovr
            .csp
            .iter()
            .max_by(|a, b| a.eigenvalues[0].total_cmp(&b.eigenvalues[0]))
            .unwrap();
        println!(
            "  {:<16} shrinkage {:.3}, most discriminative band {:?} (λ {:.3})",
            model.class_names[k], ovr.lda.gamma, strongest.band, strongest.eigenvalues[0]
        );
    }
    let restored = FbcspModel::from_bytes(&model.to_bytes()?)?;
    let ev = evaluate(&restored, &test_set)?;
    println!("held-out accuracy {:.3}", ev.accuracy);
    Ok(())
}
