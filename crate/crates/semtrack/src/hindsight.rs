//! Clairvoyant comparators: the per-step hindsight optima
//! `v*[t] = argmin_v 1/2 v'Phi v - r'v + lambda * ||a||_1`
//! that the dynamic regret is measured against.
//!
//! The workhorse is a plain batch proximal-gradient solver with step
//! 1/lambda_max(Phi); monotone descent makes it easy to audit and the
//! fixed-point residual doubles as an optimality certificate. For tiny
//! instances an exact KKT sign-enumeration oracle provides an independent
//! second route.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tracker::{prox_partial_l1, NodeMoments};

/// Solver controls. Defaults: tight residual (comparator error pollutes
/// regret traces, which are differences of similar magnitudes) and a
/// generous iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Step size; `None` means 1/lambda_max(Phi).
    pub step: Option<f64>,
    /// Fixed-point residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Record the objective value at every iterate (for descent audits).
    pub record_objective: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { step: None, tol: 1e-10, max_iter: 100_000, record_objective: false }
    }
}

/// Result of one comparator solve. `converged` reflects the residual test
/// only; when Phi is singular the minimizer may be non-unique and any
/// point meeting the residual is acceptable.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub v_star: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub objective_trace: Option<Vec<f64>>,
}

/// Batch proximal gradient on `1/2 v'Phi v - r'v + lambda*||a||_1`,
/// started from `warm` (or zero), run until the fixed-point residual
/// `||v - prox(v - step * grad(v))||` drops below `opts.tol`.
pub fn solve_comparator(
    phi: &DMatrix<f64>,
    r: &DVector<f64>,
    lambda: f64,
    warm: Option<&DVector<f64>>,
    opts: &SolveOptions,
) -> SolveOutcome {
    let n = r.len();
    let step = opts.step.unwrap_or_else(|| {
        let (_, l_max) = linalg::sym_eig_bounds(phi);
        if l_max > 0.0 {
            1.0 / l_max
        } else {
            1.0
        }
    });
    let mut v = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    let mut trace = opts.record_objective.then(Vec::new);
    let objective = |v: &DVector<f64>| -> f64 {
        0.5 * (phi * v).dot(v) - r.dot(v) + lambda * v.iter().take(n - 1).map(|x| x.abs()).sum::<f64>()
    };
    if let Some(tr) = trace.as_mut() {
        tr.push(objective(&v));
    }
    for iter in 1..=opts.max_iter {
        let grad = phi * &v - r;
        let next = prox_partial_l1(&(&v - step * grad), step, lambda);
        let residual = (&next - &v).norm();
        v = next;
        if let Some(tr) = trace.as_mut() {
            tr.push(objective(&v));
        }
        if residual <= opts.tol {
            return SolveOutcome { v_star: v, converged: true, iterations: iter, objective_trace: trace };
        }
    }
    SolveOutcome { v_star: v, converged: false, iterations: opts.max_iter, objective_trace: trace }
}

/// Exact minimizer by KKT sign enumeration, for cross-validating the
/// iterative solver on instances with at most 6 coordinates.
///
/// Every sign pattern of the adjacency part (-, 0, +) yields a candidate:
/// solve the stationarity system on the active set, then accept iff the
/// active signs match and the zero set is dual-feasible (|grad_j| <=
/// lambda). Positive-definite Phi makes the minimizer, and hence the
/// consistent candidate, unique.
pub fn exact_oracle(phi: &DMatrix<f64>, r: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = r.len();
    if n > 6 {
        return Err(Error::DimensionMismatch(format!(
            "exact oracle enumerates 3^(N-1) patterns; N={n} is past its limit of 6"
        )));
    }
    let (l_min, _) = linalg::sym_eig_bounds(phi);
    if l_min <= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "exact oracle requires positive-definite Phi (lambda_min = {l_min:.3e})"
        )));
    }
    let scale = r.norm().max(1.0);
    let dual_tol = 1e-9 * lambda.max(1.0) + 1e-12 * scale;
    let sign_tol = 1e-12 * scale;

    let a_dim = n - 1;
    let patterns = 3usize.pow(a_dim as u32);
    for code in 0..patterns {
        let mut signs = vec![0i8; a_dim];
        let mut rem = code;
        for s in signs.iter_mut() {
            *s = [0i8, 1, -1][rem % 3];
            rem /= 3;
        }
        // Active set: nonzero adjacency coordinates plus the gain, which is
        // never penalized.
        let active: Vec<usize> =
            (0..a_dim).filter(|&j| signs[j] != 0).chain(std::iter::once(n - 1)).collect();
        let k = active.len();
        let mut sys = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for (p, &jp) in active.iter().enumerate() {
            for (q, &jq) in active.iter().enumerate() {
                sys[(p, q)] = phi[(jp, jq)];
            }
            let s = if jp < a_dim { signs[jp] as f64 } else { 0.0 };
            rhs[p] = r[jp] - lambda * s;
        }
        let Some(sol) = linalg::lu_solve_vec(&sys, &rhs) else {
            continue;
        };
        let mut v = DVector::zeros(n);
        for (p, &jp) in active.iter().enumerate() {
            v[jp] = sol[p];
        }
        // Sign consistency on the active set.
        let consistent = active
            .iter()
            .filter(|&&j| j < a_dim)
            .all(|&j| v[j] * signs[j] as f64 >= -sign_tol);
        if !consistent {
            continue;
        }
        // Dual feasibility on the zero set.
        let grad = phi * &v - r;
        let feasible = (0..a_dim)
            .filter(|&j| signs[j] == 0)
            .all(|j| grad[j].abs() <= lambda + dual_tol);
        if feasible {
            return Ok(v);
        }
    }
    Err(Error::NoConsistentPattern)
}

/// Hindsight optima for every node and time step.
#[derive(Debug, Clone)]
pub struct ComparatorTrace {
    /// `v_star[i][t-1]` is node i's optimum at time t.
    pub v_star: Vec<Vec<DVector<f64>>>,
    pub converged: Vec<Vec<bool>>,
    pub iterations: Vec<Vec<usize>>,
}

impl ComparatorTrace {
    pub fn n(&self) -> usize {
        self.v_star.len()
    }

    pub fn horizon(&self) -> usize {
        self.v_star.first().map_or(0, Vec::len)
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().flatten().all(|&c| c)
    }
}

/// Solve every per-(node, time) subproblem of a recorded moment history
/// (`history[t-1][i]` holding node i's moments after absorbing batch t).
///
/// Each node's solves run sequentially over t, warm-started from the
/// previous optimum; nodes are independent and solved in parallel. The
/// outcome does not depend on the warm start beyond the residual
/// tolerance.
pub fn comparator_trace(
    history: &[Vec<NodeMoments>],
    lambda: f64,
    opts: &SolveOptions,
) -> ComparatorTrace {
    let horizon = history.len();
    let n = history.first().map_or(0, Vec::len);
    let per_node: Vec<(Vec<DVector<f64>>, Vec<bool>, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut vs = Vec::with_capacity(horizon);
            let mut flags = Vec::with_capacity(horizon);
            let mut iters = Vec::with_capacity(horizon);
            let mut warm: Option<DVector<f64>> = None;
            for slot in history {
                let m = &slot[i];
                let outcome = solve_comparator(&m.phi, &m.r, lambda, warm.as_ref(), opts);
                warm = Some(outcome.v_star.clone());
                vs.push(outcome.v_star);
                flags.push(outcome.converged);
                iters.push(outcome.iterations);
            }
            (vs, flags, iters)
        })
        .collect();
    let mut trace = ComparatorTrace {
        v_star: Vec::with_capacity(n),
        converged: Vec::with_capacity(n),
        iterations: Vec::with_capacity(n),
    };
    for (vs, flags, iters) in per_node {
        trace.v_star.push(vs);
        trace.converged.push(flags);
        trace.iterations.push(iters);
    }
    trace
}
