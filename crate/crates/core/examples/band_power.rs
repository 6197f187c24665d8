//! Class-average mu band power over the montage: imagery classes lose power
//! over the left motor strip.

use mi_eeg::dsp::class_bandpower;
use mi_eeg::synth::generate_dataset;
use mi_eeg::GeneratorParams;

fn main() -> mi_eeg::Result<()> {
    let ds = generate_dataset(15, &GeneratorParams::default(), 3, 1)?.dataset;
    let power = class_bandpower(&ds, (8.0, 12.0))?;
    print!("{:>6}", "");
    for name in ds.class_names() {
        print!("{name:>16}");
    }
    println!();
    for (c, ch) in ds.channel_names().iter().enumerate() {
        print!("{ch:>6}");
        for row in &power {
            print!("{:>16.2}", row[c] / power[0][c]);
        }
        println!();
    }
    println!("(relative to rest)");
    Ok(())
}
