//! Online proximal-gradient tracker.
//!
//! Per node i the time-t objective is the exponentially weighted
//! least-squares fit
//!
//! ```text
//! f_t^i(v) = 1/2 sum_{tau<=t} gamma^(t-tau) || y_i^tau - (Z_i^tau)^T v ||^2
//! ```
//!
//! over the stacked variable `v = [a_{-i}; b_i]`, regularized by
//! `lambda * ||a_{-i}||_1` (the exogenous gain is not penalized). The
//! regressor `Z_i^tau` stacks the other nodes' observations on top of the
//! node's exogenous row, so the gradient is `Phi v - r` with recursively
//! maintained moments
//!
//! ```text
//! Phi <- gamma * Phi + Z Z^T        r <- gamma * r + Z y_i
//! ```
//!
//! One [`Tracker::step`] per incoming batch performs, for every node, the
//! moment update, a gradient step from the current iterate, and a partial
//! soft-threshold prox; the reported estimate for time t is the iterate
//! *before* that update, matching an online learner that commits to its
//! estimate before seeing the data it is scored on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TopologySnapshot;

/// Hyperparameters of the online update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    /// Forgetting factor in (0, 1].
    pub gamma: f64,
    /// l1 weight on the adjacency part, >= 0.
    pub lambda: f64,
    /// Gradient step size, > 0. The regret guarantees require
    /// alpha <= 1/L_f; the tracker does not clamp it and instead reports
    /// [`Error::NonFiniteValue`] when the iterates diverge.
    pub alpha: f64,
}

impl AlgoConfig {
    pub fn new(gamma: f64, lambda: f64, alpha: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0,1], got {gamma}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self { gamma, lambda, alpha })
    }
}

/// Exponentially weighted moments of one node's regression problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMoments {
    /// N x N Gram matrix Phi.
    pub phi: DMatrix<f64>,
    /// Length-N cross-moment r.
    pub r: DVector<f64>,
    /// Weighted sum of ||y_i||^2; the constant completing the quadratic so
    /// objective values are exact rather than up-to-constant.
    pub c: f64,
}

impl NodeMoments {
    fn zeros(n: usize) -> Self {
        Self { phi: DMatrix::zeros(n, n), r: DVector::zeros(n), c: 0.0 }
    }

    /// Gradient of the smooth part at `v`: `Phi v - r`.
    pub fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.phi * v - &self.r
    }

    /// Exact objective value `1/2 v'Phi v - r'v + c/2 + lambda*||a||_1`
    /// where the l1 norm runs over all but the last coordinate.
    pub fn objective(&self, v: &DVector<f64>, lambda: f64) -> f64 {
        let quad = 0.5 * (&self.phi * v).dot(v) - self.r.dot(v) + 0.5 * self.c;
        let n = v.len();
        let l1: f64 = v.iter().take(n - 1).map(|x| x.abs()).sum();
        quad + lambda * l1
    }
}

/// Per-node tracker memory: the current iterate plus the moment recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    /// Current iterate `v_i[t]`, length N.
    pub v: DVector<f64>,
    pub moments: NodeMoments,
    /// Number of batches absorbed.
    pub t: usize,
}

impl NodeState {
    /// Fresh per-node state: zero iterate, zero moments.
    pub fn new(n: usize) -> Self {
        Self { v: DVector::zeros(n), moments: NodeMoments::zeros(n), t: 0 }
    }

    /// Absorb one batch into the moment recursion.
    pub fn update_moments(&mut self, z: &DMatrix<f64>, y_i: &DVector<f64>, gamma: f64) {
        let m = &mut self.moments;
        m.phi *= gamma;
        m.phi.gemm(1.0, z, &z.transpose(), 1.0);
        m.r *= gamma;
        m.r.gemv(1.0, z, y_i, 1.0);
        m.c = gamma * m.c + y_i.norm_squared();
        self.t += 1;
    }

    pub fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        self.moments.gradient(v)
    }

    pub fn evaluate_objective(&self, v: &DVector<f64>, lambda: f64) -> f64 {
        self.moments.objective(v, lambda)
    }
}

/// Regressor for node i: the observation matrix with row i removed,
/// stacked on the i-th row of X. Shape N x C.
pub fn build_regressor(y_t: &DMatrix<f64>, x: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
    let n = y_t.nrows();
    let c = y_t.ncols();
    let mut z = DMatrix::zeros(n, c);
    let mut row = 0;
    for j in 0..n {
        if j != i {
            z.row_mut(row).copy_from(&y_t.row(j));
            row += 1;
        }
    }
    z.row_mut(n - 1).copy_from(&x.row(i));
    z
}

/// Componentwise soft threshold: `sign(w) * max(|w| - kappa, 0)`.
/// Entries with `|w| <= kappa` map to exactly zero.
pub fn soft_threshold(w: &DVector<f64>, kappa: f64) -> DVector<f64> {
    w.map(|x| {
        let shrunk = x.abs() - kappa;
        if shrunk > 0.0 {
            shrunk * x.signum()
        } else {
            0.0
        }
    })
}

/// Prox of `alpha * lambda * ||.||_1` applied to all but the last
/// coordinate; the last coordinate (the exogenous gain) passes through.
pub fn prox_partial_l1(v: &DVector<f64>, alpha: f64, lambda: f64) -> DVector<f64> {
    let n = v.len();
    let kappa = alpha * lambda;
    let mut out = DVector::zeros(n);
    for j in 0..n - 1 {
        let shrunk = v[j].abs() - kappa;
        out[j] = if shrunk > 0.0 { shrunk * v[j].signum() } else { 0.0 };
    }
    out[n - 1] = v[n - 1];
    out
}

/// What one tracker step reports: the estimate committed for the step's
/// time index (assembled from the pre-update iterates) and the one-step-
/// ahead prediction (the post-update iterates).
#[derive(Debug, Clone)]
pub struct StepResult {
    pub estimate: TopologySnapshot,
    pub prediction: TopologySnapshot,
}

/// The full online estimator: one [`NodeState`] per node plus the shared
/// configuration and exogenous matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracker {
    pub nodes: Vec<NodeState>,
    pub config: AlgoConfig,
    pub x: DMatrix<f64>,
}

impl Tracker {
    /// Fresh tracker with all-zero iterates and moments.
    pub fn new(n: usize, c: usize, config: AlgoConfig, x: DMatrix<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig("tracker needs at least 2 nodes".into()));
        }
        if x.shape() != (n, c) {
            return Err(Error::DimensionMismatch(format!(
                "X is {}x{}, expected {}x{}",
                x.nrows(),
                x.ncols(),
                n,
                c
            )));
        }
        Ok(Self { nodes: (0..n).map(|_| NodeState::new(n)).collect(), config, x })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn c(&self) -> usize {
        self.x.ncols()
    }

    /// Batches absorbed so far.
    pub fn t(&self) -> usize {
        self.nodes[0].t
    }

    /// Snapshot assembled from the current iterates, stamped with time `t`.
    pub fn assemble(&self, t: usize) -> TopologySnapshot {
        let vs: Vec<_> = self.nodes.iter().map(|nd| nd.v.clone()).collect();
        TopologySnapshot::from_node_vectors(t, &vs)
            .expect("tracker iterates always assemble into a snapshot")
    }

    /// Absorb the batch for the next time step.
    ///
    /// For every node: build the regressor, update the moments, take a
    /// gradient step from the current iterate and apply the partial l1
    /// prox. Nodes are mutually independent, so the loop order does not
    /// affect the result.
    pub fn step(&mut self, y_t: &DMatrix<f64>) -> Result<StepResult> {
        let n = self.n();
        let c = self.c();
        if y_t.shape() != (n, c) {
            return Err(Error::DimensionMismatch(format!(
                "batch is {}x{}, expected {}x{}",
                y_t.nrows(),
                y_t.ncols(),
                n,
                c
            )));
        }
        let t = self.t() + 1;
        let estimate = self.assemble(t);

        let AlgoConfig { gamma, lambda, alpha } = self.config;
        for i in 0..n {
            let z = build_regressor(y_t, &self.x, i);
            let y_i = y_t.row(i).transpose();
            let node = &mut self.nodes[i];
            node.update_moments(&z, &y_i, gamma);
            let grad = node.gradient(&node.v);
            let forward = &node.v - alpha * grad;
            let next = prox_partial_l1(&forward, alpha, lambda);
            if !next.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFiniteValue { context: "tracker iterate", step: t });
            }
            node.v = next;
        }
        let prediction = self.assemble(t + 1);
        Ok(StepResult { estimate, prediction })
    }
}
