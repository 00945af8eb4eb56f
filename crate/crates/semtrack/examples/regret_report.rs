//! Measure the dynamic regret of a tracked run and certify it against the
//! bound computed from the run's own constants.
//!
//! ```bash
//! cargo run --example regret_report
//! ```

use semtrack::experiment::{analyze, AlphaChoice};
use semtrack::hindsight::SolveOptions;
use semtrack::model::{generate_dataset, GeneratorConfig, Regime};

fn main() -> semtrack::Result<()> {
    // C > N keeps the moment matrices positive definite from the first
    // batch, which is what the bound's strong-convexity assumption needs.
    let config = GeneratorConfig::new(10, 12, 200, 0.15, 0.1, Regime::Smooth, 1)?;
    let dataset = generate_dataset(&config)?;
    let analysis = analyze(
        &dataset.batches,
        &dataset.x,
        Some(&dataset.truth),
        15.0,
        0.9,
        AlphaChoice::Auto,
        1,
        &SolveOptions::default(),
    )?;

    let report = &analysis.bundle.report;
    let consts = &report.constants;
    println!("alpha = {:.6e} (auto: 1/L_f)", analysis.alpha);
    println!(
        "constants: B_xy {:.4}  beta {:.4}  L_f {:.2}  mu {:.2}  rho {:.6}  d {:.4}",
        consts.b_xy,
        consts.beta,
        consts.l_f,
        consts.mu,
        consts.rho,
        consts.d.unwrap_or(f64::NAN)
    );
    println!("assumptions_ok = {}, D_h = {:.4e}", report.assumptions_ok, report.d_h.unwrap());

    println!("node  regret        path length  bound         regret/bound");
    for node in &report.per_node {
        println!(
            "{:<5} {:<13.4e} {:<12.4}  {:<13.4e} {:.4}",
            node.node,
            node.regret,
            node.path_length,
            node.bound.unwrap(),
            node.regret / node.bound.unwrap()
        );
    }
    let totals = &report.totals;
    println!(
        "total regret {:.4e} <= total bound {:.4e}: {}",
        totals.regret,
        totals.bound.unwrap(),
        totals.within_bound.unwrap()
    );

    let cert = report.certificate.as_ref().expect("beta > 0 so the certificate is computable");
    println!(
        "certificate: segment starts at t = {}, beta_segment = {:.4}, all nodes within bound: {}",
        cert.segment_start, cert.beta_segment, cert.all_within_bound
    );
    Ok(())
}
