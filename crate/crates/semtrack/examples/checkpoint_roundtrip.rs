//! Persist the tracker mid-stream and resume it bit-for-bit.
//!
//! ```bash
//! cargo run --example checkpoint_roundtrip
//! ```

use semtrack::io::{read_checkpoint, write_checkpoint};
use semtrack::model::{generate_dataset, GeneratorConfig, Regime};
use semtrack::tracker::{AlgoConfig, Tracker};

fn main() -> semtrack::Result<()> {
    let config = GeneratorConfig::new(8, 4, 60, 0.25, 0.1, Regime::Abrupt, 17)?;
    let dataset = generate_dataset(&config)?;
    let algo = AlgoConfig::new(0.9, 2.0, 0.002)?;

    // Reference: one uninterrupted pass.
    let mut straight = Tracker::new(8, 4, algo, dataset.x.clone())?;
    for batch in &dataset.batches {
        straight.step(&batch.y)?;
    }

    // Interrupted pass: checkpoint at t = 30, restore, continue.
    let mut tracker = Tracker::new(8, 4, algo, dataset.x.clone())?;
    for batch in &dataset.batches[..30] {
        tracker.step(&batch.y)?;
    }
    let path = std::env::temp_dir().join("semtrack_checkpoint.json");
    write_checkpoint(&path, &tracker)?;
    println!("checkpointed at t = {} to {}", tracker.t(), path.display());

    let mut resumed = read_checkpoint(&path)?;
    assert_eq!(resumed, tracker, "checkpoint round-trips bit-exactly");
    for batch in &dataset.batches[30..] {
        resumed.step(&batch.y)?;
    }

    assert_eq!(resumed, straight, "resumed run matches the uninterrupted one");
    println!("resumed run is bit-identical to the uninterrupted run at t = {}", resumed.t());
    Ok(())
}
