//! Thin CLI over the experiment runner. All behavior flows from flags and
//! the optional JSON config; no environment variables are consulted.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use semtrack::error::Error;
use semtrack::experiment::{run_repeated, AlphaChoice, DataSource, ExperimentConfig};
use semtrack::model::{GeneratorConfig, Regime};

#[derive(Parser, Debug)]
#[command(
    name = "semtrack",
    about = "Track a time-varying sparse network topology online and certify its dynamic regret",
    after_help = "Exit codes: 0 ok, 2 config error, 3 diverged (step size too large), 4 I/O failure."
)]
struct Args {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for the artifact set.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Node count (generator).
    #[arg(long)]
    n: Option<usize>,

    /// Edge probability (generator).
    #[arg(long)]
    pe: Option<f64>,

    /// Contagion count (generator).
    #[arg(long)]
    c: Option<usize>,

    /// Horizon (generator).
    #[arg(long)]
    t: Option<usize>,

    /// Noise covariance scale (generator).
    #[arg(long)]
    sigma: Option<f64>,

    /// Topology evolution: smooth | abrupt (generator).
    #[arg(long)]
    regime: Option<Regime>,

    /// Master seed (generator).
    #[arg(long)]
    seed: Option<u64>,

    /// l1 weight on the adjacency part.
    #[arg(long)]
    lambda: Option<f64>,

    /// Forgetting factor in (0, 1].
    #[arg(long)]
    gamma: Option<f64>,

    /// Step size: 'auto' (two-pass 1/L_f) or a number.
    #[arg(long)]
    alpha: Option<AlphaChoice>,

    /// Also render mse.svg / regret.svg.
    #[arg(long)]
    emit_svg: bool,

    /// Ingest observations from this directory of per-step CSV files
    /// instead of generating them (requires --data-x and a fixed --alpha).
    #[arg(long, requires = "data_x")]
    data_y: Option<PathBuf>,

    /// Exogenous matrix CSV for --data-y.
    #[arg(long, requires = "data_y")]
    data_x: Option<PathBuf>,

    /// Measure moment eigenvalues every k-th step (1 = every step).
    #[arg(long)]
    stride_eig: Option<usize>,

    /// Run this many consecutive seeds and average the MSE trace.
    #[arg(long)]
    repeat: Option<usize>,

    /// Replace the output directory if it already exists.
    #[arg(long)]
    force: bool,
}

fn build_config(args: &Args) -> Result<ExperimentConfig, Error> {
    let mut config: ExperimentConfig = match &args.config {
        Some(path) => semtrack::io::read_json(path)?,
        None => ExperimentConfig {
            generator: Some(GeneratorConfig::new(10, 5, 300, 0.15, 0.1, Regime::Smooth, 1)?),
            data_in: None,
            lambda: 15.0,
            gamma: 0.9,
            alpha: AlphaChoice::Auto,
            output_dir: PathBuf::new(),
            emit_svg: false,
            stride_eig: 1,
            repeat: 1,
            force: false,
        },
    };

    if let (Some(y_dir), Some(x_file)) = (&args.data_y, &args.data_x) {
        config.data_in = Some(DataSource { y_dir: y_dir.clone(), x_file: x_file.clone() });
        config.generator = None;
    }
    if let Some(generator) = config.generator.as_mut() {
        if let Some(n) = args.n {
            generator.n = n;
        }
        if let Some(pe) = args.pe {
            generator.p_edge = pe;
        }
        if let Some(c) = args.c {
            generator.c = c;
        }
        if let Some(t) = args.t {
            generator.t_horizon = t;
        }
        if let Some(sigma) = args.sigma {
            generator.sigma = sigma;
        }
        if let Some(regime) = args.regime {
            generator.regime = regime;
        }
        if let Some(seed) = args.seed {
            generator.seed = seed;
        }
    }
    if let Some(lambda) = args.lambda {
        config.lambda = lambda;
    }
    if let Some(gamma) = args.gamma {
        config.gamma = gamma;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if args.emit_svg {
        config.emit_svg = true;
    }
    if let Some(stride) = args.stride_eig {
        config.stride_eig = stride;
    }
    if let Some(repeat) = args.repeat {
        config.repeat = repeat;
    }
    if args.force {
        config.force = true;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if config.output_dir.as_os_str().is_empty() {
        return Err(Error::InvalidConfig("--out (or output_dir in the config) is required".into()));
    }
    Ok(config)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::DimensionMismatch(_) => 2,
        Error::NonFiniteValue { .. } => 3,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    match run_repeated(&config) {
        Ok(outputs) => {
            for out in &outputs {
                let regret = out.report.totals.regret;
                let bound = out
                    .report
                    .totals
                    .bound
                    .map(|b| format!("{b:.6e}"))
                    .unwrap_or_else(|| "n/a".to_string());
                let mse = out
                    .mse_trace
                    .as_ref()
                    .and_then(|m| m.last())
                    .map(|v| format!("{v:.6e}"))
                    .unwrap_or_else(|| "n/a".to_string());
                println!(
                    "{}: alpha={:.6e} regret={regret:.6e} bound={bound} final_mse={mse}",
                    out.out_dir.display(),
                    out.alpha
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
