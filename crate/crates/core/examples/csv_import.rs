//! Import epochs stored as CSV files, then keep a subset of channels.

use mi_eeg::data::{import_csv, SelectChannels, CLASS_NAMES, INDEX_FILE};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let channels = ["C3", "Cz", "C4"];
    let mut index = String::from("file,label\n");
    for i in 0..6 {
        let mut text = channels.join(",") + "\n";
        for t in 0..250 {
            let v = ((t + i) as f64 * 0.1).sin();
            text += &format!("{v},{},{}\n", 0.5 * v, -v);
        }
        let name = format!("epoch{i}.csv");
        std::fs::write(dir.path().join(&name), text)?;
        index += &format!("{name},{}\n", CLASS_NAMES[i % 4]);
    }
    std::fs::write(dir.path().join(INDEX_FILE), index)?;

    let classes: Vec<String> = CLASS_NAMES.iter().map(|s| s.to_string()).collect();
    let imported = import_csv(dir.path(), 250.0, &classes)?;
    for w in &imported.warnings {
        println!("warning: {w}");
    }
    let ds = imported.dataset;
    println!("imported {} epochs, channels {:?}, labels {:?}", ds.len(), ds.channel_names(), ds.labels());

    let motor = ds.select_channels(&["C4", "C3"])?;
    println!("selected {:?}; first samples {:?}", motor.channel_names(), &motor.epoch(0)[..3]);
    match ds.select_channels(&["C3", "Pz"]) {
        Err(e) => println!("selecting a missing channel fails: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
