//! Track a drifting topology online and watch the estimation error fall.
//!
//! ```bash
//! cargo run --example track_topology
//! ```

use semtrack::experiment::{resolve_alpha, run_tracker};
use semtrack::metrics;
use semtrack::model::{generate_dataset, GeneratorConfig, Regime};
use semtrack::tracker::AlgoConfig;

fn main() -> semtrack::Result<()> {
    let config = GeneratorConfig::new(10, 5, 300, 0.15, 0.1, Regime::Smooth, 7)?;
    let dataset = generate_dataset(&config)?;

    // Two-pass step size: 1 / max eigenvalue of any moment matrix.
    let alpha = resolve_alpha(&dataset.batches, 0.9)?;
    println!("resolved step size alpha = {alpha:.6e}");

    let algo = AlgoConfig::new(0.9, 15.0, alpha)?;
    let record = run_tracker(&dataset.batches, &dataset.x, algo)?;
    let mse = metrics::mse(&record.estimates, &dataset.truth);

    println!("t      MSE");
    for t in [1usize, 5, 10, 30, 100, 200, 300] {
        println!("{t:<6} {:.6e}", mse[t - 1]);
    }

    let final_estimate = record.estimate_snapshots.last().unwrap();
    let truth = dataset.truth.snapshots.last().unwrap();
    let estimated_edges = final_estimate.a.iter().filter(|&&v| v.abs() > 1e-9).count();
    let true_edges = truth.a.iter().filter(|&&v| v.abs() > 1e-9).count();
    println!("nonzero adjacency entries at T: estimated {estimated_edges}, true {true_edges}");
    Ok(())
}
