//! The full benchmark: matched smooth and abrupt runs with the reference
//! parameters, artifact directories, and an overlaid MSE chart.
//!
//! ```bash
//! cargo run --release --example full_experiment
//! ```

use semtrack::chart::Series;
use semtrack::experiment::{emit_plots, run_experiment, AlphaChoice, ExperimentConfig};
use semtrack::model::{GeneratorConfig, Regime};

fn main() -> semtrack::Result<()> {
    let root = std::env::temp_dir().join("semtrack_full_experiment");
    if root.exists() {
        std::fs::remove_dir_all(&root)?;
    }

    let mut mse_series = Vec::new();
    let mut regret_series = Vec::new();
    for regime in [Regime::Smooth, Regime::Abrupt] {
        let config = ExperimentConfig {
            generator: Some(GeneratorConfig::new(10, 5, 300, 0.15, 0.1, regime, 1)?),
            data_in: None,
            lambda: 15.0,
            gamma: 0.9,
            alpha: AlphaChoice::Auto,
            output_dir: root.join(regime.to_string()),
            emit_svg: true,
            stride_eig: 1,
            repeat: 1,
            force: false,
        };
        let out = run_experiment(&config)?;
        println!(
            "{regime}: alpha {:.4e}, total regret {:.4e}, final MSE {:.4e} -> {}",
            out.alpha,
            out.report.totals.regret,
            out.mse_trace.as_ref().unwrap().last().unwrap(),
            out.out_dir.display()
        );
        mse_series.push(Series::new(
            regime.to_string(),
            out.mse_trace
                .unwrap()
                .iter()
                .enumerate()
                .map(|(k, &v)| ((k + 1) as f64, v))
                .collect(),
        ));
        regret_series.push(Series::new(
            regime.to_string(),
            out.regret_trace.iter().enumerate().map(|(k, &v)| ((k + 1) as f64, v)).collect(),
        ));
    }

    // Overlay both regimes in one pair of charts at the top level.
    let written = emit_plots(&root, &mse_series, &regret_series)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    println!(
        "regret ordering (abrupt < smooth): {}",
        regret_series[1].points.last().unwrap().1 < regret_series[0].points.last().unwrap().1
    );
    Ok(())
}
