//! Dynamic network model: domain types and seeded synthetic-data generation.
//!
//! Each node signal is a linear combination of the other nodes' signals
//! (weighted by a time-varying adjacency matrix `A^t` with zero diagonal)
//! plus a scaled exogenous input and Gaussian noise:
//!
//! ```text
//! Y^t = A^t Y^t + B^t X + E^t
//! ```
//!
//! `Y^t` is N x C (one column per observed contagion), `X` is a static
//! N x C exogenous matrix and `B^t = diag(b)` holds the exogenous gains.
//! The generators below reproduce two evolution regimes for `A^t`: a
//! smooth one where each supported edge follows a fixed function of time,
//! and an abrupt one where the edge weights are redrawn once at mid-horizon.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, Stream};

/// Spectral-radius cap applied to every generated `A^t` so that `I - A^t`
/// stays comfortably invertible.
pub const SPECTRAL_RADIUS_CAP: f64 = 0.9;

/// Condition-estimate threshold above which the observation solve refuses
/// to proceed.
pub const SINGULARITY_THRESHOLD: f64 = 1e12;

/// The network at one time index: adjacency `A` (zero diagonal) and the
/// diagonal `b` of the exogenous-gain matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySnapshot {
    /// Time index, starting at 1.
    pub t: usize,
    /// N x N adjacency; `a[(i, j)]` weights the influence of node j on node i.
    pub a: DMatrix<f64>,
    /// Length-N exogenous gains (diagonal of `B`).
    pub b: DVector<f64>,
}

impl TopologySnapshot {
    /// Validating constructor: `a` square, zero diagonal, everything finite,
    /// `b` of matching length.
    pub fn new(t: usize, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "gain vector has length {}, expected {}",
                b.len(),
                n
            )));
        }
        if (0..n).any(|i| a[(i, i)] != 0.0) {
            return Err(Error::InvalidConfig("adjacency diagonal must be exactly zero".into()));
        }
        if !linalg::all_finite(&a) || !linalg::all_finite_vec(&b) {
            return Err(Error::InvalidConfig("topology entries must be finite".into()));
        }
        Ok(Self { t, a, b })
    }

    /// Number of nodes.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// The stacked per-node vector `[a_{-i}; b_i]` of length N: row i of `A`
    /// without its diagonal entry, followed by the node's exogenous gain.
    pub fn node_vector(&self, i: usize) -> DVector<f64> {
        let n = self.dim();
        let mut v = DVector::zeros(n);
        let mut k = 0;
        for j in 0..n {
            if j != i {
                v[k] = self.a[(i, j)];
                k += 1;
            }
        }
        v[n - 1] = self.b[i];
        v
    }

    /// Rebuild a snapshot from per-node stacked vectors (inverse of
    /// [`node_vector`](Self::node_vector)); the diagonal of `A` is forced to zero.
    pub fn from_node_vectors(t: usize, vs: &[DVector<f64>]) -> Result<Self> {
        let n = vs.len();
        if n < 2 || vs.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch(
                "need N >= 2 vectors of length N to assemble a snapshot".into(),
            ));
        }
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for (i, v) in vs.iter().enumerate() {
            let mut k = 0;
            for j in 0..n {
                if j != i {
                    a[(i, j)] = v[k];
                    k += 1;
                }
            }
            b[i] = v[n - 1];
        }
        Self::new(t, a, b)
    }
}

/// One time step of observations: endogenous `Y^t` and the static
/// exogenous `X`, both N x C.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    pub t: usize,
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
}

impl ObservationBatch {
    pub fn new(t: usize, y: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.shape() != x.shape() {
            return Err(Error::DimensionMismatch(format!(
                "Y is {}x{} but X is {}x{}",
                y.nrows(),
                y.ncols(),
                x.nrows(),
                x.ncols()
            )));
        }
        if !linalg::all_finite(&y) || !linalg::all_finite(&x) {
            return Err(Error::InvalidConfig("observations must be finite".into()));
        }
        Ok(Self { t, y, x })
    }

    /// Largest squared entry over both Y and X; the per-batch contribution
    /// to the empirical bounded-process constant.
    pub fn max_squared_entry(&self) -> f64 {
        self.y
            .iter()
            .chain(self.x.iter())
            .map(|v| v * v)
            .fold(0.0, f64::max)
    }
}

/// How the topology evolves over the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Each supported edge follows one of four fixed functions of t.
    Smooth,
    /// Edge weights drawn once, redrawn at t = ceil(T/2), constant otherwise.
    Abrupt,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Smooth => write!(f, "smooth"),
            Regime::Abrupt => write!(f, "abrupt"),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(Regime::Smooth),
            "abrupt" => Ok(Regime::Abrupt),
            other => Err(Error::InvalidConfig(format!(
                "unknown regime '{other}' (expected smooth|abrupt)"
            ))),
        }
    }
}

/// Parameters of the synthetic-data generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Node count, at least 2.
    pub n: usize,
    /// Contagion count, at least 1.
    pub c: usize,
    /// Horizon, at least 1.
    pub t_horizon: usize,
    /// Edge probability in [0, 1].
    pub p_edge: f64,
    /// Noise covariance scale: per-entry variance of the observation noise
    /// (standard deviation sqrt(sigma)). At least 0.
    pub sigma: f64,
    pub regime: Regime,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(
        n: usize,
        c: usize,
        t_horizon: usize,
        p_edge: f64,
        sigma: f64,
        regime: Regime,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self { n, c, t_horizon, p_edge, sigma, regime, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-check the construction invariants (used after deserialization).
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be >= 2, got {}", self.n)));
        }
        if self.c < 1 {
            return Err(Error::InvalidConfig("c must be >= 1".into()));
        }
        if self.t_horizon < 1 {
            return Err(Error::InvalidConfig("t_horizon must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_edge) {
            return Err(Error::InvalidConfig(format!(
                "p_edge must lie in [0,1], got {}",
                self.p_edge
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// The generated topology sequence together with the per-step rescale
/// factors that were applied to keep the spectral radius under
/// [`SPECTRAL_RADIUS_CAP`]. A factor of 1.0 means the raw draw was kept.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub snapshots: Vec<TopologySnapshot>,
    pub scale_factors: Vec<f64>,
}

impl GroundTruth {
    pub fn horizon(&self) -> usize {
        self.snapshots.len()
    }

    /// True stacked vector `[a_{-i}^t; b_i^t]` for node `i` at 1-based time `t`.
    pub fn v_true(&self, i: usize, t: usize) -> DVector<f64> {
        self.snapshots[t - 1].node_vector(i)
    }
}

/// A full synthetic run: ground truth, exogenous inputs, and the
/// observation stream.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: GeneratorConfig,
    pub truth: GroundTruth,
    pub x: DMatrix<f64>,
    pub batches: Vec<ObservationBatch>,
}

/// The four edge-weight trajectories available to the smooth regime.
fn smooth_value(kind: u8, t: f64) -> f64 {
    match kind {
        0 => 0.5 + 0.5 * (0.1 * t).sin(),
        1 => 0.5 + 0.5 * (0.1 * t).cos(),
        2 => (-0.01 * t).exp(),
        _ => 0.0,
    }
}

/// Erdos-Renyi support: each off-diagonal entry is 1 independently with
/// probability `p_edge`; no self-loops.
pub fn generate_binary_support(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = config.n;
    let mut support = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < config.p_edge {
                support[(i, j)] = 1.0;
            }
        }
    }
    support
}

/// Generate the topology sequence on a given support.
///
/// Smooth regime: each supported edge is assigned one of the four
/// trajectories uniformly at random and then follows it exactly. Abrupt
/// regime: supported edges are standard-Gaussian draws held constant, with
/// one redraw at t = ceil(T/2). In both regimes `b` is drawn once and held
/// constant. Any `A^t` whose spectral radius exceeds
/// [`SPECTRAL_RADIUS_CAP`] is scaled down to the cap; the applied factors
/// are recorded in the returned [`GroundTruth`].
pub fn generate_topology_sequence(
    config: &GeneratorConfig,
    support: &DMatrix<f64>,
    edge_rng: &mut ChaCha8Rng,
    gain_rng: &mut ChaCha8Rng,
) -> Result<GroundTruth> {
    let n = config.n;
    let horizon = config.t_horizon;
    if support.nrows() != n || support.ncols() != n {
        return Err(Error::DimensionMismatch("support shape disagrees with config".into()));
    }
    if (0..n).any(|i| support[(i, i)] != 0.0) {
        return Err(Error::InvalidConfig("support diagonal must be zero".into()));
    }

    let b: DVector<f64> =
        DVector::from_iterator(n, (0..n).map(|_| gain_rng.sample::<f64, _>(StandardNormal)));

    // Per-edge generation state, filled row-major over the support.
    enum EdgePlan {
        Smooth(u8),
        Abrupt { first: f64, second: f64 },
    }
    let mut plans: Vec<(usize, usize, EdgePlan)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if support[(i, j)] != 0.0 {
                let plan = match config.regime {
                    Regime::Smooth => EdgePlan::Smooth(edge_rng.gen_range(0..4u8)),
                    Regime::Abrupt => EdgePlan::Abrupt {
                        first: edge_rng.sample(StandardNormal),
                        second: edge_rng.sample(StandardNormal),
                    },
                };
                plans.push((i, j, plan));
            }
        }
    }

    let t_break = config.t_horizon.div_ceil(2);
    let mut snapshots = Vec::with_capacity(horizon);
    let mut scale_factors = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let mut a = DMatrix::zeros(n, n);
        for (i, j, plan) in &plans {
            a[(*i, *j)] = match plan {
                EdgePlan::Smooth(kind) => smooth_value(*kind, t as f64),
                EdgePlan::Abrupt { first, second } => {
                    if t < t_break {
                        *first
                    } else {
                        *second
                    }
                }
            };
        }
        let radius = linalg::spectral_radius(&a);
        let scale = if radius > SPECTRAL_RADIUS_CAP { SPECTRAL_RADIUS_CAP / radius } else { 1.0 };
        if scale != 1.0 {
            a *= scale;
        }
        scale_factors.push(scale);
        snapshots.push(TopologySnapshot::new(t, a, b.clone())?);
    }
    Ok(GroundTruth { snapshots, scale_factors })
}

/// Static exogenous matrix X with i.i.d. standard-Gaussian entries.
pub fn generate_exogenous(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(config.n, config.c, |_, _| rng.sample(StandardNormal))
}

/// Observations for one snapshot, returning the retained noise matrix as
/// well so callers can audit the defining residual.
///
/// For each contagion the noise is N(0, sigma I) (per-entry standard
/// deviation sqrt(sigma)); Y solves `(I - A) Y = diag(b) X + E` by a dense
/// LU factorization.
pub fn generate_observations_with_noise(
    snapshot: &TopologySnapshot,
    x: &DMatrix<f64>,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(ObservationBatch, DMatrix<f64>)> {
    let n = snapshot.dim();
    if x.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, topology has {} nodes",
            x.nrows(),
            n
        )));
    }
    let c = x.ncols();
    let sd = sigma.sqrt();
    // One noise vector per contagion, in contagion order.
    let mut noise = DMatrix::zeros(n, c);
    for col in 0..c {
        for row in 0..n {
            noise[(row, col)] = sd * rng.sample::<f64, _>(StandardNormal);
        }
    }

    let system = DMatrix::identity(n, n) - &snapshot.a;
    let cond = linalg::condition_estimate(&system);
    if !(cond <= SINGULARITY_THRESHOLD) {
        return Err(Error::SingularSystem { cond });
    }
    let mut rhs = x.clone();
    for row in 0..n {
        for col in 0..c {
            rhs[(row, col)] = snapshot.b[row] * x[(row, col)] + noise[(row, col)];
        }
    }
    let y = linalg::lu_solve(&system, &rhs).ok_or(Error::SingularSystem { cond })?;
    Ok((ObservationBatch::new(snapshot.t, y, x.clone())?, noise))
}

/// Observations for one snapshot; see
/// [`generate_observations_with_noise`] for the contract.
pub fn generate_observations(
    snapshot: &TopologySnapshot,
    x: &DMatrix<f64>,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ObservationBatch> {
    generate_observations_with_noise(snapshot, x, sigma, rng).map(|(batch, _)| batch)
}

/// Full generation pipeline: support, topology sequence, exogenous inputs,
/// and the observation stream, each from its own seed stream.
pub fn generate_dataset(config: &GeneratorConfig) -> Result<Dataset> {
    config.validate()?;
    let support = generate_binary_support(config, &mut rng::stream(config.seed, Stream::Support));
    let truth = generate_topology_sequence(
        config,
        &support,
        &mut rng::stream(config.seed, Stream::EdgeValues),
        &mut rng::stream(config.seed, Stream::ExogenousGains),
    )?;
    let x = generate_exogenous(config, &mut rng::stream(config.seed, Stream::ExogenousInputs));
    let mut noise_rng = rng::stream(config.seed, Stream::Noise);
    let mut batches = Vec::with_capacity(config.t_horizon);
    for snapshot in &truth.snapshots {
        batches.push(generate_observations(snapshot, &x, config.sigma, &mut noise_rng)?);
    }
    Ok(Dataset { config: config.clone(), truth, x, batches })
}
