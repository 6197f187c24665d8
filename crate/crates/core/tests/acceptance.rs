//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! By default the end-to-end criteria train for 100 epochs with accuracy
//! thresholds lowered by 0.05. `MI_EEG_ACCEPT_FULL=1` trains for 200 epochs
//! at the full thresholds.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use common::layers::{probe_input, probes};
use common::spectral::erd_ratio;
use common::*;
use mi_eeg::data::{read_dataset, write_dataset};
use mi_eeg::dsp::{design_butterworth_bandpass, design_notch, filtfilt};
use mi_eeg::eval::{compare, CompareConfig, Comparison, Method};
use mi_eeg::fbcsp::{csp_fit, csp_fit_full, csp_features, shrinkage_lda_fit, Shrinkage};
use mi_eeg::model::train;
use mi_eeg::nn::{grad_check, ops, GradCheckOptions, Tensor};
use mi_eeg::synth::generate_dataset;
use mi_eeg::{ArchitectureConfig, FbcspModel, GeneratorParams, NetKind, TrainConfig, TrainedNetwork};
use nalgebra::DMatrix;
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(t: Duration, limit_s: f64, detail: String) -> Check {
    let secs = t.as_secs_f64();
    ensure(secs < limit_s, format!("{detail}; {secs:.1} s (limit {limit_s} s)"))
}

fn gradients() -> Check {
    let start = Instant::now();
    let opts = GradCheckOptions::default();
    let mut worst: (f64, &str) = (0.0, "");
    for (name, specs) in probes() {
        let (x, y) = probe_input(7);
        let r = grad_check(specs, &x, &y, opts).map_err(|e| format!("{name}: {e}"))?;
        if r.checked == 0 {
            return Err(format!("{name}: no coordinate checked"));
        }
        if r.max_rel_error > worst.0 {
            worst = (r.max_rel_error, name);
        }
    }
    let arch = ArchitectureConfig::default();
    let mut r = rng(1);
    let shape = [2, 1, arch.n_channels, arch.epoch_len];
    let x = Tensor::new(shape.to_vec(), (0..shape.iter().product()).map(|_| r.random_range(-3.0..3.0)).collect())
        .map_err(|e| e.to_string())?;
    let bfr = grad_check(
        NetKind::BfrCnn.build(&arch).map_err(|e| e.to_string())?,
        &x,
        &[1, 3],
        GradCheckOptions {
            max_per_tensor: Some(25),
            ..opts
        },
    )
    .map_err(|e| e.to_string())?;
    let ok = worst.0 < 1e-4 && bfr.max_rel_error < 1e-4;
    within(
        start.elapsed(),
        60.0,
        format!(
            "worst layer {} {:.2e}; full BFR-CNN {:.2e} over {} coordinates",
            worst.1, worst.0, bfr.max_rel_error, bfr.checked
        ),
    )
    .and_then(|d| ensure(ok, d))
}

fn conv_dense_oracle() -> Check {
    let start = Instant::now();
    let mut r = rng(2);
    let (mut worst, mut worst64) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = r.random_range(1..=3);
        let ci = r.random_range(1..=3);
        let co = r.random_range(1..=4);
        let kh = r.random_range(1..=3);
        let kw = if r.random_bool(0.5) { r.random_range(1..=5) } else { r.random_range(16..=26) };
        let stride = (r.random_range(1..=2), r.random_range(1..=3));
        let xs = [n, ci, kh + r.random_range(0..=4), kw + r.random_range(0..=16)];
        let ks = [co, ci, kh, kw];
        let x = uniform(&mut r, xs.iter().product());
        let k = uniform(&mut r, ks.iter().product());
        let b = uniform(&mut r, co);
        let (want, _) = conv2d_loops(&x, xs, &k, ks, &b, stride);
        let (scale, _) = conv2d_loops(&abs_all(&x), xs, &abs_all(&k), ks, &abs_all(&b), stride);
        let t64 = |s: &[usize], v: &[f64]| Tensor::new(s.to_vec(), v.to_vec()).unwrap();
        let t = |s: &[usize], v: &[f64]| t64(s, v).cast::<f32>();
        let got = ops::conv2d(&t64(&xs, &x), &t64(&ks, &k), &t64(&[co], &b), stride).map_err(|e| e.to_string())?;
        worst64 = worst64.max(max_rel_diff(got.data(), &want));
        let got = ops::conv2d(&t(&xs, &x), &t(&ks, &k), &t(&[co], &b), stride).map_err(|e| e.to_string())?;
        let got: Vec<f64> = got.data().iter().map(|&v| v as f64).collect();
        worst = worst.max(max_scaled_diff(&got, &want, &scale));

        let (f, m) = (r.random_range(1..=64), r.random_range(1..=6));
        let xd = uniform(&mut r, n * f);
        let w = uniform(&mut r, f * m);
        let bd = uniform(&mut r, m);
        let want = dense_loops(&xd, n, f, &w, &bd);
        let scale = dense_loops(&abs_all(&xd), n, f, &abs_all(&w), &abs_all(&bd));
        let got = ops::dense(&t64(&[n, f], &xd), &t64(&[f, m], &w), &t64(&[m], &bd)).map_err(|e| e.to_string())?;
        worst64 = worst64.max(max_rel_diff(got.data(), &want));
        let got = ops::dense(&t(&[n, f], &xd), &t(&[f, m], &w), &t(&[m], &bd)).map_err(|e| e.to_string())?;
        let got: Vec<f64> = got.data().iter().map(|&v| v as f64).collect();
        worst = worst.max(max_scaled_diff(&got, &want, &scale));
    }
    within(
        start.elapsed(),
        10.0,
        format!("100 conv + 100 dense shapes, f32 {worst:.2e} of Σ|terms|, f64 {worst64:.2e} of |result|"),
    )
    .and_then(|d| ensure(worst < 1e-6 && worst64 < 1e-6, d))
}

fn filters() -> Check {
    let start = Instant::now();
    let bp = design_butterworth_bandpass(8.0, 12.0, 250.0, 4).map_err(|e| e.to_string())?;
    let centre = bp.magnitude((8.0f64 * 12.0).sqrt());
    let edges = [bp.magnitude(8.0), bp.magnitude(12.0)];
    let stop = bp.magnitude(0.0).max(bp.magnitude(125.0));
    let half = 0.5f64.sqrt();
    let edge_err = edges.iter().map(|e| (e - half).abs() / half).fold(0.0, f64::max);

    let notch = design_notch(60.0, 30.0, 250.0).map_err(|e| e.to_string())?;
    let tone: Vec<f64> = (0..2500).map(|i| (2.0 * PI * 60.0 * i as f64 / 250.0).sin()).collect();
    let out = filtfilt(&notch, &tone).map_err(|e| e.to_string())?;
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let atten_db = 20.0 * (rms(&tone[500..2000]) / rms(&out[500..2000])).log10();

    let ok = (centre - 1.0).abs() < 0.01 && edge_err < 0.02 && stop < 1e-6 && atten_db > 40.0;
    within(
        start.elapsed(),
        5.0,
        format!(
            "|H(centre)| {centre:.5}, edge error {:.3}%, stop {stop:.1e}, notch {atten_db:.1} dB",
            edge_err * 100.0
        ),
    )
    .and_then(|d| ensure(ok, d))
}

fn csp_properties() -> Check {
    let start = Instant::now();
    let c = 6;
    let mut r = rng(4);
    let spd = |r: &mut rand_chacha::ChaCha8Rng| {
        let a = DMatrix::from_fn(c, c, |_, _| r.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(c, c) * 0.1
    };
    let (ct, cr) = (spd(&mut r), spd(&mut r));
    let (pairs, _) = csp_fit_full(&ct, &cr).map_err(|e| e.to_string())?;
    let composite = &ct + &cr;
    let mut residual = 0.0f64;
    for (lambda, w) in &pairs {
        let w = nalgebra::DVector::from_column_slice(w);
        let lhs = &ct * &w;
        let rhs = &composite * &w * *lambda;
        residual = residual.max((lhs - rhs).norm() / (&ct * &w).norm().max(1e-300));
    }
    let wm = DMatrix::from_fn(c, c, |i, j| pairs[j].1[i]);
    let d = wm.transpose() * &composite * &wm;
    let off = (0..c)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| d[(i, j)].abs())
        .fold(0.0, f64::max);

    let toy = csp_fit(
        &DMatrix::from_diagonal(&nalgebra::dvector![2.0, 1.0]),
        &DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0]),
        1,
        (8.0, 12.0),
    )
    .map_err(|e| e.to_string())?;
    let lam_err = (toy.eigenvalues[0] - 2.0 / 3.0).abs().max((toy.eigenvalues[1] - 1.0 / 3.0).abs());

    // epochs whose channel variances are (2, 1) for one class and (1, 2) for the other
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let target = i % 2 == 0;
        let gains = if target { [2f64.sqrt(), 1.0] } else { [1.0, 2f64.sqrt()] };
        let epoch: Vec<Vec<f64>> = gains.iter().map(|g| uniform(&mut r, 500).iter().map(|v| g * v).collect()).collect();
        feats.push(csp_features(&toy, &epoch).map_err(|e| e.to_string())?);
        labels.push(target);
    }
    let x = DMatrix::from_fn(feats.len(), feats[0].len(), |i, j| feats[i][j]);
    let lda = shrinkage_lda_fit(&x, &labels, Shrinkage::LedoitWolf).map_err(|e| e.to_string())?;
    let correct = feats.iter().zip(&labels).filter(|(f, &y)| (lda.score(f) > 0.0) == y).count();

    let ok = residual < 1e-8 && off < 1e-6 && lam_err < 1e-9 && correct == labels.len();
    within(
        start.elapsed(),
        5.0,
        format!(
            "residual {residual:.1e}, off-diagonal {off:.1e}, toy λ error {lam_err:.1e}, LDA {correct}/{}",
            labels.len()
        ),
    )
    .and_then(|d| ensure(ok, d))
}

fn erd_contract() -> Check {
    let start = Instant::now();
    let p = GeneratorParams::default();
    let peak = |pattern: &[f64]| (0..pattern.len()).max_by(|&a, &b| pattern[a].total_cmp(&pattern[b])).unwrap();
    let peaks = [peak(&p.source_patterns[0]), peak(&p.source_patterns[1])];
    let mut lines = Vec::new();
    let mut ok = true;
    for class in 1..p.class_names.len() {
        for (source, &ch) in peaks.iter().enumerate() {
            let depth = p.erd_depth[class][source];
            if depth == 0.0 {
                continue;
            }
            let ratio = erd_ratio(&p, class, ch, 20, 1000 + 100 * class as u64);
            let want = (1.0 - depth).powi(2);
            ok &= ratio < 1.0 && (ratio - want).abs() <= 0.15;
            lines.push(format!(
                "{}/{}: {ratio:.3} vs {want:.3}",
                p.class_names[class], p.channel_names[ch]
            ));
        }
    }
    within(start.elapsed(), 30.0, lines.join(", ")).and_then(|d| ensure(ok, d))
}

struct Mode {
    full: bool,
    epochs: usize,
    slack: f64,
}

fn mode() -> Mode {
    let full = std::env::var("MI_EEG_ACCEPT_FULL").is_ok_and(|v| v == "1");
    Mode {
        full,
        epochs: if full { 200 } else { 100 },
        slack: if full { 0.0 } else { 0.05 },
    }
}

fn compare_config(n_subjects: usize, seed: u64, params: &GeneratorParams, epochs: usize) -> CompareConfig {
    CompareConfig {
        train: TrainConfig {
            epochs,
            ..TrainConfig::default()
        },
        ..CompareConfig::synthetic(n_subjects, seed, params)
    }
}

fn ordering(mode: &Mode) -> (Check, Option<Comparison>) {
    let cfg = compare_config(8, 1, &GeneratorParams::default(), mode.epochs);
    let result = match compare(&cfg) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), None),
    };
    let t = &result.table;
    let m = |k| t.mean_of(k).unwrap();
    let (bfr, shallow, fbcsp) = (m(Method::Bfr), m(Method::Shallow), m(Method::Fbcsp));
    let s = mode.slack;
    let ok = bfr >= 0.85 - s && shallow >= 0.75 - s && fbcsp >= 0.70 - s && bfr - fbcsp >= 0.05;
    let detail = format!(
        "{} epochs: BFR-CNN {bfr:.3} (≥ {:.2}), ShallowConvNet {shallow:.3} (≥ {:.2}), FBCSP+RLDA {fbcsp:.3} (≥ {:.2}), margin {:.3} (≥ 0.05)",
        mode.epochs,
        0.85 - s,
        0.75 - s,
        0.70 - s,
        bfr - fbcsp
    );
    (ensure(ok, detail), Some(result))
}

fn confusion_structure(result: Option<&Comparison>) -> Check {
    let Some(result) = result else {
        return Err("no comparison to inspect".into());
    };
    let cm = result.aggregate_confusion(Method::Bfr).ok_or("BFR-CNN missing")?;
    let mi: Vec<usize> = (1..cm.class_names.len()).collect();
    let to_rest = cm.errors_into(&mi, &[0]);
    let to_mi = cm.errors_into(&mi, &mi);
    ensure(to_rest <= to_mi, format!("MI→rest {to_rest}, MI→other MI {to_mi}"))
}

fn chance(mode: &Mode) -> Check {
    let cfg = compare_config(2, 101, &GeneratorParams::default().without_erd(), mode.epochs);
    let result = compare(&cfg).map_err(|e| e.to_string())?;
    let means: Vec<(Method, f64)> = result.table.methods.iter().map(|&m| (m, result.table.mean_of(m).unwrap())).collect();
    let ok = means.iter().all(|(_, a)| (0.17..=0.33).contains(a));
    let detail = means.iter().map(|(m, a)| format!("{m} {a:.3}")).collect::<Vec<_>>().join(", ");
    ensure(ok, detail)
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let cfg = CompareConfig {
        cv: 2,
        n_per_class: 6,
        ..compare_config(2, 5, &GeneratorParams::default(), 3)
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        compare(&cfg).and_then(|r| r.write(d.path())).map_err(|e| e.to_string())?;
    }
    let (a, b) = (tree(dirs[0].path()), tree(dirs[1].path()));
    ensure(
        !a.is_empty() && a == b,
        format!("{} output files compared byte for byte", a.len()),
    )
}

fn round_trips() -> Check {
    let p = GeneratorParams::default();
    let ds = generate_dataset(4, &p, 9, 1).map_err(|e| e.to_string())?.dataset;
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("ds");
    write_dataset(&ds, &root, serde_json::json!({ "seed": 9 })).map_err(|e| e.to_string())?;
    let (back, _) = read_dataset(&root).map_err(|e| e.to_string())?;
    let same_data = back.data().iter().map(|v| v.to_bits()).eq(ds.data().iter().map(|v| v.to_bits()));
    let same_labels = back.labels() == ds.labels();

    let block = root.join(mi_eeg::data::DATA_FILE);
    let mut bytes = std::fs::read(&block).unwrap();
    bytes[17] ^= 0x40;
    std::fs::write(&block, &bytes).unwrap();
    let corrupt_ds = read_dataset(&root).err().map(|e| e.to_string()).unwrap_or_default();

    let arch = ArchitectureConfig::new(ds.n_channels(), ds.epoch_len(), ds.fs(), ds.n_classes());
    let cfg = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let net = train(NetKind::BfrCnn, &arch, &ds, &cfg).map_err(|e| e.to_string())?;
    let ckpt = net.save_checkpoint().map_err(|e| e.to_string())?;
    let loaded = TrainedNetwork::<f32>::load_checkpoint(&ckpt).map_err(|e| e.to_string())?;
    let probs = |n: &TrainedNetwork<f32>| n.predict(&ds).unwrap().probs;
    let same_net = loaded == net && probs(&loaded) == probs(&net);
    let mut bad = ckpt.clone();
    let mid = bad.len() / 2;
    bad[mid] ^= 1;
    let corrupt_net = TrainedNetwork::<f32>::load_checkpoint(&bad).err().map(|e| e.to_string()).unwrap_or_default();

    let fb = mi_eeg::fbcsp::fbcsp_fit(&ds, &mi_eeg::fbcsp::default_bands(), 2).map_err(|e| e.to_string())?;
    let fb_bytes = fb.to_bytes().map_err(|e| e.to_string())?;
    let fb_back = FbcspModel::from_bytes(&fb_bytes).map_err(|e| e.to_string())?;
    let same_fb = fb_back == fb && fb_back.predict(&ds).unwrap() == fb.predict(&ds).unwrap();
    let mut bad = fb_bytes.clone();
    let last = bad.len() - 3;
    bad[last] ^= 1;
    let corrupt_fb = FbcspModel::from_bytes(&bad).err().map(|e| e.to_string()).unwrap_or_default();

    let named = |msg: &str| msg.contains("integrity") || msg.contains("digest");
    let ok = same_data
        && same_labels
        && same_net
        && same_fb
        && named(&corrupt_ds)
        && named(&corrupt_net)
        && named(&corrupt_fb);
    ensure(
        ok,
        format!(
            "dataset {}, checkpoint {}, FBCSP model {}; rejections: [{corrupt_ds}] [{corrupt_net}] [{corrupt_fb}]",
            if same_data && same_labels { "exact" } else { "differs" },
            if same_net { "exact" } else { "differs" },
            if same_fb { "exact" } else { "differs" },
        ),
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let mode = mode();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, started: Instant, check: Check| {
        let secs = started.elapsed().as_secs_f64();
        let (tag, detail) = match check {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n:>2} {tag} {name}: {detail} [{secs:.1} s]");
    };
    println!(
        "acceptance ({} mode)",
        if mode.full { "full" } else { "CI: 100 epochs, thresholds − 0.05" }
    );
    let t = Instant::now();
    report(1, "gradient check", t, gradients());
    let t = Instant::now();
    report(2, "conv/dense oracle", t, conv_dense_oracle());
    let t = Instant::now();
    report(3, "filter response", t, filters());
    let t = Instant::now();
    report(4, "CSP properties", t, csp_properties());
    let t = Instant::now();
    report(5, "ERD contract", t, erd_contract());
    let t = Instant::now();
    let (check, result) = ordering(&mode);
    report(6, "end-to-end ordering", t, check);
    let t = Instant::now();
    report(7, "confusion structure", t, confusion_structure(result.as_ref()));
    let t = Instant::now();
    report(8, "chance collapse", t, chance(&mode));
    let t = Instant::now();
    report(9, "determinism", t, determinism());
    let t = Instant::now();
    report(10, "round-trip integrity", t, round_trips());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
