//! Dynamic regret, path lengths, empirical constants, and the regret
//! bound that certifies the tracker's performance after the fact.
//!
//! The dynamic regret compares the objective at the online estimates
//! against the objective at the per-step hindsight optima. Its upper bound
//! is driven by four measurable quantities: the largest squared data
//! entry, the extreme eigenvalues of the moment matrices (strong-convexity
//! and smoothness constants), and the path length of the optima. All of
//! them are computed here from recorded run artifacts; nothing is assumed.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hindsight::ComparatorTrace;
use crate::linalg;
use crate::model::{GroundTruth, ObservationBatch};
use crate::tracker::NodeMoments;

/// Cumulative regret trace and per-node totals.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretOutcome {
    /// `trace[t-1]` is the regret accumulated over all nodes up to time t.
    pub trace: Vec<f64>,
    /// Per-node totals over the full horizon; they sum to the last trace entry.
    pub per_node: Vec<f64>,
}

/// Dynamic regret from objective values at the estimates and at the
/// comparators, both indexed `[t-1][i]`.
pub fn dynamic_regret(h_estimate: &[Vec<f64>], h_comparator: &[Vec<f64>]) -> RegretOutcome {
    assert_eq!(h_estimate.len(), h_comparator.len(), "horizons must agree");
    let n = h_estimate.first().map_or(0, Vec::len);
    let mut trace = Vec::with_capacity(h_estimate.len());
    let mut per_node = vec![0.0; n];
    let mut running = 0.0;
    for (he, hc) in h_estimate.iter().zip(h_comparator) {
        assert_eq!(he.len(), n);
        assert_eq!(hc.len(), n);
        for i in 0..n {
            let gap = he[i] - hc[i];
            per_node[i] += gap;
            running += gap;
        }
        trace.push(running);
    }
    RegretOutcome { trace, per_node }
}

/// Total variation of a comparator sequence: sum of consecutive distances.
/// Zero for a single point.
pub fn path_length(v_stars: &[DVector<f64>]) -> f64 {
    v_stars.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
}

/// Running path length; `out[t-1]` covers steps up to time t (so `out[0] = 0`).
pub fn path_length_prefix(v_stars: &[DVector<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v_stars.len());
    let mut acc = 0.0;
    for (k, v) in v_stars.iter().enumerate() {
        if k > 0 {
            acc += (v - &v_stars[k - 1]).norm();
        }
        out.push(acc);
    }
    out
}

/// Mean-square error of one step: `1/N^2 * sum_i ||v_i - v_i_true||^2`.
pub fn mse_step(estimates: &[DVector<f64>], truths: &[DVector<f64>]) -> f64 {
    let n = estimates.len();
    let sum: f64 = estimates.iter().zip(truths).map(|(e, t)| (e - t).norm_squared()).sum();
    sum / ((n * n) as f64)
}

/// Per-step MSE of a whole run against the generated ground truth;
/// `estimates[t-1][i]` is node i's reported vector at time t.
pub fn mse(estimates: &[Vec<DVector<f64>>], truth: &GroundTruth) -> Vec<f64> {
    assert_eq!(estimates.len(), truth.horizon(), "horizons must agree");
    estimates
        .iter()
        .enumerate()
        .map(|(idx, est)| {
            let truths: Vec<DVector<f64>> =
                (0..est.len()).map(|i| truth.v_true(i, idx + 1)).collect();
            mse_step(est, &truths)
        })
        .collect()
}

/// Extreme moment eigenvalues at one measured time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    /// 1-based time index.
    pub t: usize,
    /// min over nodes of lambda_min(Phi_i^t).
    pub beta_t: f64,
    /// max over nodes of lambda_max(Phi_i^t).
    pub l_max_t: f64,
}

/// Empirically measured constants of a recorded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    /// Largest squared entry over all observations and the exogenous matrix.
    pub b_xy: f64,
    /// Smallest moment eigenvalue over every measured (node, t).
    pub beta: f64,
    /// Same, restricted to t >= `burn_in` (None when nothing is measured there).
    pub beta_post_burn: Option<f64>,
    /// Largest moment eigenvalue over every measured (node, t).
    pub l_f: f64,
    /// Largest distance between consecutive comparators (None for T < 2).
    pub d: Option<f64>,
    /// 1 - gamma.
    pub mu: f64,
    /// 1 - alpha * beta (with the global beta).
    pub rho: f64,
    /// First t of the burn-in-free segment used for `beta_post_burn`.
    pub burn_in: usize,
    /// Eigenvalues were measured every `stride`-th step (always including
    /// the last); 1 means every step.
    pub stride: usize,
    /// Per-measured-t extreme eigenvalues, in increasing t.
    #[serde(skip)]
    pub spectrum: Vec<SpectrumSample>,
}

/// Measure the run constants from its artifacts.
///
/// `history[t-1][i]` holds node i's moments after absorbing batch t. The
/// eigen-decompositions dominate the cost, so they run at the given
/// stride; the final step is always measured. `burn_in` defaults to
/// `ceil(N/C) * 3`, the point by which the moment matrices have plausibly
/// reached full rank.
pub fn empirical_constants(
    batches: &[ObservationBatch],
    history: &[Vec<NodeMoments>],
    trace: &ComparatorTrace,
    gamma: f64,
    alpha: f64,
    stride: usize,
    burn_in: Option<usize>,
) -> EmpiricalConstants {
    let stride = stride.max(1);
    let horizon = history.len();
    let n = history.first().map_or(0, Vec::len);
    let c = batches.first().map_or(1, |b| b.y.ncols());
    let burn_in = burn_in.unwrap_or_else(|| n.div_ceil(c) * 3);

    let b_xy = batches.iter().map(ObservationBatch::max_squared_entry).fold(0.0, f64::max);

    let mut spectrum = Vec::new();
    let mut beta = f64::INFINITY;
    let mut l_f: f64 = 0.0;
    let mut beta_post_burn = f64::INFINITY;
    let mut measured_post_burn = false;
    for t in (1..=horizon).filter(|&t| (t - 1) % stride == 0 || t == horizon) {
        let mut beta_t = f64::INFINITY;
        let mut l_max_t: f64 = 0.0;
        for m in &history[t - 1] {
            let (lo, hi) = linalg::sym_eig_bounds(&m.phi);
            beta_t = beta_t.min(lo);
            l_max_t = l_max_t.max(hi);
        }
        beta = beta.min(beta_t);
        l_f = l_f.max(l_max_t);
        if t >= burn_in {
            beta_post_burn = beta_post_burn.min(beta_t);
            measured_post_burn = true;
        }
        spectrum.push(SpectrumSample { t, beta_t, l_max_t });
    }
    if !beta.is_finite() {
        beta = 0.0;
    }

    let mut d: Option<f64> = None;
    for i in 0..trace.n() {
        for w in trace.v_star[i].windows(2) {
            let dist = (&w[1] - &w[0]).norm();
            d = Some(d.map_or(dist, |cur| cur.max(dist)));
        }
    }

    EmpiricalConstants {
        b_xy,
        beta,
        beta_post_burn: measured_post_burn.then_some(beta_post_burn),
        l_f,
        d,
        mu: 1.0 - gamma,
        rho: 1.0 - alpha * beta,
        burn_in,
        stride,
        spectrum,
    }
}

/// The regret-bound constant
/// `D_h = 1/(alpha*beta) * (B_xy*C*sqrt(N)/(1-gamma) * (1 + L_f/beta) + lambda*sqrt(N-1))`.
///
/// Fails rather than extrapolate when its premises do not hold: beta must
/// be positive, gamma strictly below 1, and alpha at most 1/L_f.
pub fn theorem_constant(
    b_xy: f64,
    beta: f64,
    l_f: f64,
    lambda: f64,
    alpha: f64,
    c_count: usize,
    n: usize,
    gamma: f64,
) -> Result<f64> {
    if beta <= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "strong convexity fails: empirical beta = {beta:.3e}"
        )));
    }
    let mu = 1.0 - gamma;
    if mu <= 0.0 {
        return Err(Error::AssumptionViolated(
            "gamma = 1 leaves the data bound unsummable (mu = 0)".into(),
        ));
    }
    if l_f <= 0.0 {
        return Err(Error::AssumptionViolated("L_f = 0: moments never left zero".into()));
    }
    if alpha > (1.0 / l_f) * (1.0 + 1e-12) {
        return Err(Error::AssumptionViolated(format!(
            "step size alpha = {alpha:.6e} exceeds 1/L_f = {:.6e}",
            1.0 / l_f
        )));
    }
    let grad_term = b_xy * c_count as f64 * (n as f64).sqrt() / mu * (1.0 + l_f / beta);
    let reg_term = lambda * ((n - 1) as f64).sqrt();
    Ok((grad_term + reg_term) / (alpha * beta))
}

/// Full-horizon regret bound for every node plus a cumulative trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub d_h: f64,
    pub per_node_bound: Vec<f64>,
    pub total_bound: f64,
    /// `bound_trace[t-1]` bounds the regret accumulated up to time t.
    #[serde(skip)]
    pub bound_trace: Vec<f64>,
}

/// Evaluate the regret bound `D_h * (||v_i*[1]|| + W_i[T])` per node, its
/// sum, and the per-step prefix trace. `path_prefixes[i][t-1]` must hold
/// node i's running path length (as from [`path_length_prefix`]).
#[allow(clippy::too_many_arguments)]
pub fn regret_bound(
    constants: &EmpiricalConstants,
    lambda: f64,
    alpha: f64,
    c_count: usize,
    n: usize,
    gamma: f64,
    v_star_initial_norms: &[f64],
    path_prefixes: &[Vec<f64>],
) -> Result<BoundReport> {
    let d_h =
        theorem_constant(constants.b_xy, constants.beta, constants.l_f, lambda, alpha, c_count, n, gamma)?;
    let per_node_bound: Vec<f64> = v_star_initial_norms
        .iter()
        .zip(path_prefixes)
        .map(|(norm0, prefix)| d_h * (norm0 + prefix.last().copied().unwrap_or(0.0)))
        .collect();
    let total_bound = per_node_bound.iter().sum();
    let horizon = path_prefixes.first().map_or(0, Vec::len);
    let bound_trace: Vec<f64> = (0..horizon)
        .map(|k| {
            d_h * v_star_initial_norms
                .iter()
                .zip(path_prefixes)
                .map(|(norm0, prefix)| norm0 + prefix[k])
                .sum::<f64>()
        })
        .collect();
    Ok(BoundReport { d_h, per_node_bound, total_bound, bound_trace })
}

/// One node's entry in the segment certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCertificate {
    pub node: usize,
    /// Regret accumulated over the certified segment.
    pub regret: f64,
    /// Distance between the iterate and the comparator at the segment start.
    pub initial_gap: f64,
    /// Comparator path length over the segment.
    pub path_length: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Segment-restricted certificate of the regret bound.
///
/// The bound's derivation anchors at a step where strong convexity holds,
/// so the certificate starts at the first time from which every later
/// moment matrix is positive definite. When that is t = 1 (typical once
/// C >= N) the initial gap is exactly `||v_i*[1]||` because the tracker
/// starts at zero, and this reduces to the plain full-horizon bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCertificate {
    /// 1-based first time step of the certified segment.
    pub segment_start: usize,
    /// Smallest moment eigenvalue over the segment.
    pub beta_segment: f64,
    pub d_h: f64,
    pub per_node: Vec<NodeCertificate>,
    pub all_within_bound: bool,
    /// Relative slack granted for comparator round-off.
    pub relative_slack: f64,
}

/// Check the per-node regret bound on the positive-definite segment of a
/// recorded run. Requires eigenvalues measured at every step
/// (`constants.stride == 1`).
#[allow(clippy::too_many_arguments)]
pub fn theorem_certificate(
    constants: &EmpiricalConstants,
    h_estimate: &[Vec<f64>],
    h_comparator: &[Vec<f64>],
    estimates: &[Vec<DVector<f64>>],
    trace: &ComparatorTrace,
    lambda: f64,
    alpha: f64,
    c_count: usize,
    n: usize,
    gamma: f64,
    relative_slack: f64,
) -> Result<TheoremCertificate> {
    if constants.stride != 1 {
        return Err(Error::AssumptionViolated(
            "certificate needs eigenvalues at every step (stride_eig = 1)".into(),
        ));
    }
    let horizon = h_estimate.len();
    if horizon == 0 {
        return Err(Error::AssumptionViolated("empty run".into()));
    }
    // Positive-definiteness floor scaled to the measured magnitudes.
    let floor = 1e-12 * constants.l_f.max(1.0);
    let mut segment_start = 1;
    for sample in &constants.spectrum {
        if sample.beta_t <= floor {
            segment_start = sample.t + 1;
        }
    }
    if segment_start > horizon {
        return Err(Error::AssumptionViolated(
            "no trailing segment with positive-definite moments".into(),
        ));
    }
    let beta_segment = constants
        .spectrum
        .iter()
        .filter(|s| s.t >= segment_start)
        .map(|s| s.beta_t)
        .fold(f64::INFINITY, f64::min);
    let d_h = theorem_constant(
        constants.b_xy,
        beta_segment,
        constants.l_f,
        lambda,
        alpha,
        c_count,
        n,
        gamma,
    )?;

    let mut per_node = Vec::with_capacity(n);
    let mut all_ok = true;
    for i in 0..n {
        let regret: f64 =
            (segment_start..=horizon).map(|t| h_estimate[t - 1][i] - h_comparator[t - 1][i]).sum();
        let initial_gap =
            (&estimates[segment_start - 1][i] - &trace.v_star[i][segment_start - 1]).norm();
        let w_seg = path_length(&trace.v_star[i][segment_start - 1..]);
        let bound = d_h * (initial_gap + w_seg);
        let within_bound = regret <= bound * (1.0 + relative_slack) + 1e-9;
        all_ok &= within_bound;
        per_node.push(NodeCertificate {
            node: i,
            regret,
            initial_gap,
            path_length: w_seg,
            bound,
            within_bound,
        });
    }
    Ok(TheoremCertificate {
        segment_start,
        beta_segment,
        d_h,
        per_node,
        all_within_bound: all_ok,
        relative_slack,
    })
}

/// Per-node block of the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub node: usize,
    pub regret: f64,
    pub path_length: f64,
    pub v_star_initial_norm: f64,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalsReport {
    pub regret: f64,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

/// Everything the run report carries about regret and its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub constants: EmpiricalConstants,
    #[serde(rename = "D_h")]
    pub d_h: Option<f64>,
    pub per_node: Vec<NodeReport>,
    pub totals: TotalsReport,
    /// True when beta > 0, gamma < 1 and alpha <= 1/L_f over the whole run.
    pub assumptions_ok: bool,
    /// Why D_h is absent, when it is.
    pub bound_unavailable_reason: Option<String>,
    pub certificate: Option<TheoremCertificate>,
    pub certificate_unavailable_reason: Option<String>,
}

/// Regret trace plus everything needed to render and audit it.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub report: RegretReport,
    pub regret: RegretOutcome,
    /// Cumulative bound per step when the full-horizon bound applies.
    pub bound_trace: Option<Vec<f64>>,
}

/// Assemble the report for one recorded run.
#[allow(clippy::too_many_arguments)]
pub fn build_report(
    constants: EmpiricalConstants,
    h_estimate: &[Vec<f64>],
    h_comparator: &[Vec<f64>],
    estimates: &[Vec<DVector<f64>>],
    trace: &ComparatorTrace,
    lambda: f64,
    alpha: f64,
    gamma: f64,
    c_count: usize,
) -> ReportBundle {
    let n = trace.n();
    let regret = dynamic_regret(h_estimate, h_comparator);
    let initial_norms: Vec<f64> = (0..n).map(|i| trace.v_star[i][0].norm()).collect();
    let prefixes: Vec<Vec<f64>> = (0..n).map(|i| path_length_prefix(&trace.v_star[i])).collect();

    let bound =
        regret_bound(&constants, lambda, alpha, c_count, n, gamma, &initial_norms, &prefixes);
    let (bound_report, bound_reason) = match bound {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let certificate = theorem_certificate(
        &constants,
        h_estimate,
        h_comparator,
        estimates,
        trace,
        lambda,
        alpha,
        c_count,
        n,
        gamma,
        1e-6,
    );
    let (certificate, cert_reason) = match certificate {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let per_node: Vec<NodeReport> = (0..n)
        .map(|i| NodeReport {
            node: i,
            regret: regret.per_node[i],
            path_length: prefixes[i].last().copied().unwrap_or(0.0),
            v_star_initial_norm: initial_norms[i],
            bound: bound_report.as_ref().map(|b| b.per_node_bound[i]),
            within_bound: bound_report
                .as_ref()
                .map(|b| regret.per_node[i] <= b.per_node_bound[i] * (1.0 + 1e-6) + 1e-9),
        })
        .collect();
    let total_regret: f64 = regret.per_node.iter().sum();
    let totals = TotalsReport {
        regret: total_regret,
        bound: bound_report.as_ref().map(|b| b.total_bound),
        within_bound: bound_report
            .as_ref()
            .map(|b| total_regret <= b.total_bound * (1.0 + 1e-6) + 1e-9),
    };
    let assumptions_ok = bound_report.is_some();
    let report = RegretReport {
        constants,
        d_h: bound_report.as_ref().map(|b| b.d_h),
        per_node,
        totals,
        assumptions_ok,
        bound_unavailable_reason: bound_reason,
        certificate,
        certificate_unavailable_reason: cert_reason,
    };
    ReportBundle {
        report,
        regret,
        bound_trace: bound_report.map(|b| b.bound_trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_sequences_have_zero_regret() {
        let h = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let out = dynamic_regret(&h, &h);
        assert_eq!(out.trace, vec![0.0, 0.0]);
        assert_eq!(out.per_node, vec![0.0, 0.0]);
    }

    #[test]
    fn regret_matches_hand_sum() {
        // One node, two steps: gaps 0.5 and 0.25.
        let est = vec![vec![2.0], vec![1.5]];
        let cmp = vec![vec![1.5], vec![1.25]];
        let out = dynamic_regret(&est, &cmp);
        assert_eq!(out.per_node, vec![0.75]);
        assert_eq!(out.trace, vec![0.5, 0.75]);
    }

    #[test]
    fn regret_trace_is_cumulative_over_nodes_and_time() {
        let est = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let cmp = vec![vec![0.5, 0.75], vec![1.0, 0.0]];
        let out = dynamic_regret(&est, &cmp);
        assert_eq!(out.trace, vec![0.75, 1.75]);
        assert_eq!(out.per_node, vec![0.5, 1.25]);
    }

    #[test]
    fn path_length_trivial_cases() {
        let constant = vec![DVector::from_vec(vec![1.0, 2.0]); 5];
        assert_eq!(path_length(&constant), 0.0);
        let two = vec![DVector::from_vec(vec![0.0, 0.0]), DVector::from_vec(vec![3.0, 4.0])];
        assert_eq!(path_length(&two), 5.0);
        assert_eq!(path_length(&two[..1]), 0.0);
    }

    #[test]
    fn path_length_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq: Vec<DVector<f64>> =
            (0..20).map(|_| DVector::from_fn(4, |_, _| rng.gen_range(-2.0..2.0))).collect();
        let mut brute = 0.0;
        for t in 1..seq.len() {
            brute += (&seq[t] - &seq[t - 1]).norm();
        }
        assert_relative_eq!(path_length(&seq), brute, max_relative = 1e-14);
        let prefix = path_length_prefix(&seq);
        assert_eq!(prefix[0], 0.0);
        assert_relative_eq!(prefix[seq.len() - 1], brute, max_relative = 1e-14);
    }

    #[test]
    fn mse_trivial_cases() {
        let est = vec![DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![0.0, 0.0])];
        assert_eq!(mse_step(&est, &est), 0.0);
        // N=2, one node off by squared norm 4, the other exact: 4/(2*2) = 1.
        let truths =
            vec![DVector::from_vec(vec![1.0, 4.0]), DVector::from_vec(vec![0.0, 0.0])];
        assert_eq!(mse_step(&est, &truths), 1.0);
    }

    #[test]
    fn mse_matches_direct_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est: Vec<DVector<f64>> =
            (0..6).map(|_| DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let tru: Vec<DVector<f64>> =
            (0..6).map(|_| DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let mut direct = 0.0;
        for (e, t) in est.iter().zip(&tru) {
            direct += e.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        direct /= 36.0;
        assert_relative_eq!(mse_step(&est, &tru), direct, max_relative = 1e-14);
    }

    #[test]
    fn theorem_constant_hand_value() {
        // alpha=0.1, beta=1, B_xy=1, C=1, N=2, gamma=0.5, L_f=2, lambda=1:
        // D_h = 10 * (2*sqrt(2)*3 + 1) = 94.85281374...
        let d_h = theorem_constant(1.0, 1.0, 2.0, 1.0, 0.1, 1, 2, 0.5).unwrap();
        assert_relative_eq!(d_h, 10.0 * (2.0 * 2.0_f64.sqrt() * 3.0 + 1.0), max_relative = 1e-12);
        assert_relative_eq!(d_h, 94.8528137423857, max_relative = 1e-10);
    }

    #[test]
    fn theorem_constant_degenerate_regularizer_term() {
        // N=1 makes the sqrt(N-1) term vanish regardless of lambda.
        let with = theorem_constant(1.0, 1.0, 1.0, 123.0, 0.5, 1, 1, 0.5).unwrap();
        let without = theorem_constant(1.0, 1.0, 1.0, 0.0, 0.5, 1, 1, 0.5).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn theorem_constant_rejects_broken_premises() {
        assert!(matches!(
            theorem_constant(1.0, 0.0, 1.0, 1.0, 0.1, 1, 2, 0.5),
            Err(Error::AssumptionViolated(_))
        ));
        assert!(matches!(
            theorem_constant(1.0, 1.0, 2.0, 1.0, 0.6, 1, 2, 0.5),
            Err(Error::AssumptionViolated(_))
        ));
        assert!(matches!(
            theorem_constant(1.0, 1.0, 2.0, 1.0, 0.1, 1, 2, 1.0),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn theorem_constant_is_monotone_in_gamma() {
        // Smaller gamma means larger mu = 1 - gamma, hence a smaller data
        // term and a smaller D_h.
        let mut last = 0.0;
        for gamma in [0.5, 0.7, 0.9, 0.99] {
            let d_h = theorem_constant(1.0, 1.0, 2.0, 1.0, 0.1, 3, 5, gamma).unwrap();
            assert!(d_h > last, "gamma {gamma}");
            last = d_h;
        }
    }

    fn constant_history(n: usize, phi: DMatrix<f64>, steps: usize) -> Vec<Vec<NodeMoments>> {
        let m = NodeMoments { phi, r: DVector::zeros(n), c: 0.0 };
        (0..steps).map(|_| vec![m.clone(); 3]).collect()
    }

    #[test]
    fn constants_identity_moments() {
        let history = constant_history(4, DMatrix::identity(4, 4), 5);
        let trace = ComparatorTrace {
            v_star: vec![vec![DVector::zeros(4); 5]; 3],
            converged: vec![vec![true; 5]; 3],
            iterations: vec![vec![1; 5]; 3],
        };
        let consts = empirical_constants(&[], &history, &trace, 0.9, 0.5, 1, None);
        assert_relative_eq!(consts.beta, 1.0, epsilon = 1e-10);
        assert_relative_eq!(consts.l_f, 1.0, epsilon = 1e-10);
        assert_eq!(consts.d, Some(0.0));
        assert_relative_eq!(consts.mu, 0.1, epsilon = 1e-15);
        assert_relative_eq!(consts.rho, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn constants_bound_data_in_unit_box() {
        let y = DMatrix::from_fn(3, 2, |i, j| ((i + j) as f64 * 0.3) - 0.4);
        let x = DMatrix::from_fn(3, 2, |i, j| ((i * j) as f64 * 0.2) - 0.1);
        let batch = ObservationBatch::new(1, y, x).unwrap();
        assert!(batch.max_squared_entry() <= 1.0);
        let history = constant_history(3, DMatrix::identity(3, 3), 1);
        let trace = ComparatorTrace {
            v_star: vec![vec![DVector::zeros(3); 1]; 3],
            converged: vec![vec![true; 1]; 3],
            iterations: vec![vec![1; 1]; 3],
        };
        let consts = empirical_constants(&[batch], &history, &trace, 0.9, 0.1, 1, None);
        assert!(consts.b_xy <= 1.0);
        assert_eq!(consts.d, None); // single step: no consecutive pair
    }

    #[test]
    fn eigen_bounds_match_power_iteration() {
        // Independent route: power iteration for lambda_max on Phi, then on
        // (lambda_max * I - Phi) for lambda_min.
        fn power_extreme(m: &DMatrix<f64>, iters: usize) -> f64 {
            let n = m.nrows();
            let mut v = DVector::from_element(n, 1.0) / (n as f64).sqrt();
            // deterministic tie-breaking perturbation
            for j in 0..n {
                v[j] += 1e-3 * (j as f64 + 1.0);
            }
            v /= v.norm();
            let mut lambda = 0.0;
            for _ in 0..iters {
                let w = m * &v;
                let norm = w.norm();
                if norm == 0.0 {
                    return 0.0;
                }
                v = w / norm;
                lambda = (m * &v).dot(&v);
            }
            lambda
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let g = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
            let phi = &g * g.transpose();
            let (lo, hi) = linalg::sym_eig_bounds(&phi);
            let hi_pow = power_extreme(&phi, 20000);
            let shifted = DMatrix::identity(5, 5) * hi_pow - &phi;
            let lo_pow = hi_pow - power_extreme(&shifted, 20000);
            assert_relative_eq!(hi, hi_pow, max_relative = 1e-6);
            assert!((lo - lo_pow).abs() <= 1e-6 * hi.max(1.0));
        }
    }

    #[test]
    fn regret_bound_values_and_trace() {
        let history = constant_history(3, DMatrix::identity(3, 3), 2);
        let v0 = DVector::from_vec(vec![3.0, 0.0, 0.0]);
        let v1 = DVector::from_vec(vec![3.0, 4.0, 0.0]);
        let trace = ComparatorTrace {
            v_star: vec![vec![v0.clone(), v1.clone()]; 3],
            converged: vec![vec![true; 2]; 3],
            iterations: vec![vec![1; 2]; 3],
        };
        let consts = empirical_constants(&[], &history, &trace, 0.5, 1.0, 1, None);
        let norms = vec![3.0; 3];
        let prefixes: Vec<Vec<f64>> =
            (0..3).map(|i| path_length_prefix(&trace.v_star[i])).collect();
        let bound = regret_bound(&consts, 0.0, 1.0, 1, 3, 0.5, &norms, &prefixes).unwrap();
        // beta = l_f = 1, alpha = 1, B_xy = 0 (no batches), lambda = 0 =>
        // D_h = 0; with b_xy forced by hand this scales linearly, so here
        // just check structure: per-node bound = D_h * (3 + 4).
        for i in 0..3 {
            assert_relative_eq!(bound.per_node_bound[i], bound.d_h * 7.0, max_relative = 1e-12);
        }
        assert_relative_eq!(bound.total_bound, bound.d_h * 21.0, max_relative = 1e-12);
        assert_eq!(bound.bound_trace.len(), 2);
        assert_relative_eq!(bound.bound_trace[0], bound.d_h * 9.0, max_relative = 1e-12);
        assert_relative_eq!(bound.bound_trace[1], bound.d_h * 21.0, max_relative = 1e-12);
    }

    #[test]
    fn regret_bound_refuses_zero_beta() {
        let history = constant_history(3, DMatrix::zeros(3, 3), 1);
        let trace = ComparatorTrace {
            v_star: vec![vec![DVector::zeros(3)]; 3],
            converged: vec![vec![true]; 3],
            iterations: vec![vec![1]; 3],
        };
        let consts = empirical_constants(&[], &history, &trace, 0.5, 0.1, 1, None);
        let prefixes = vec![vec![0.0]; 3];
        assert!(regret_bound(&consts, 1.0, 0.1, 1, 3, 0.5, &[0.0; 3], &prefixes).is_err());
    }
}
