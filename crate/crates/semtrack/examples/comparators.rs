//! Clairvoyant comparators: solve the per-step hindsight optima, verify
//! their optimality certificates, and cross-check the iterative solver
//! against the exact KKT sign-enumeration oracle on a small instance.
//!
//! ```bash
//! cargo run --example comparators
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semtrack::hindsight::{comparator_trace, exact_oracle, solve_comparator, SolveOptions};
use semtrack::model::{generate_dataset, GeneratorConfig, Regime};
use semtrack::tracker::{build_regressor, NodeState};

fn main() -> semtrack::Result<()> {
    // Small dense instance: iterative solver vs exact enumeration.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
    let phi = &g * g.transpose() + DMatrix::identity(4, 4) * 0.1;
    let r = DVector::from_fn(4, |_, _| rng.gen_range(-2.0..2.0));
    for lambda in [0.1, 1.0, 10.0] {
        let exact = exact_oracle(&phi, &r, lambda)?;
        let iterative = solve_comparator(&phi, &r, lambda, None, &SolveOptions::default());
        println!(
            "lambda {lambda:<5} exact {:?}  gap to iterative {:.2e} ({} iterations)",
            exact.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            (&exact - &iterative.v_star).amax(),
            iterative.iterations
        );
    }

    // Full comparator trace over a generated stream.
    let config = GeneratorConfig::new(6, 8, 40, 0.3, 0.1, Regime::Smooth, 11)?;
    let dataset = generate_dataset(&config)?;
    let mut nodes: Vec<NodeState> = (0..6).map(|_| NodeState::new(6)).collect();
    let mut history = Vec::new();
    for batch in &dataset.batches {
        for (i, node) in nodes.iter_mut().enumerate() {
            let z = build_regressor(&batch.y, &dataset.x, i);
            node.update_moments(&z, &batch.y.row(i).transpose(), 0.9);
        }
        history.push(nodes.iter().map(|nd| nd.moments.clone()).collect::<Vec<_>>());
    }
    let lambda = 2.0;
    let trace = comparator_trace(&history, lambda, &SolveOptions::default());
    println!(
        "solved {} x {} comparator subproblems, all converged: {}",
        trace.n(),
        trace.horizon(),
        trace.all_converged()
    );

    // Subgradient optimality certificate at the final step.
    let t = trace.horizon() - 1;
    for i in 0..trace.n() {
        let v = &trace.v_star[i][t];
        let grad = &history[t][i].phi * v - &history[t][i].r;
        let worst_violation = (0..5)
            .map(|j| {
                if v[j] == 0.0 {
                    (grad[j].abs() - lambda).max(0.0)
                } else {
                    (grad[j] + lambda * v[j].signum()).abs()
                }
            })
            .fold(grad[5].abs(), f64::max);
        println!("node {i}: certificate violation {worst_violation:.2e}");
    }
    Ok(())
}
