//! Collision detection, classification, and necessary-condition tables.
//!
//! A cluster of vortices "evolves toward an n-collision" when all its
//! internal distances tend to zero; "sequentially" when that happens only
//! along a subsequence of times; "relatively" when the normalized shape
//! coordinates β_ij tend to zero instead of the distances themselves (the
//! configuration collapses in shape, regardless of overall scale). A partial
//! cluster is "proper" when no strict superset satisfies the same criterion.
//!
//! Finite data cannot certify limits, so every tag is operationalized with
//! explicit thresholds: a quantity "tends to zero" when, on the trailing
//! window (last quarter of the samples, at least five), it decreases weakly
//! monotonically, its log-linear fit slope is negative, and its final value
//! is below the caller's `eps`. Sequential tags use the sequence of running
//! record minima instead of the trailing window. Tags are conservative: when
//! a trend test fails, no tag is emitted.
//!
//! The module also provides the strength/M admissibility table for bounded
//! ternary and double-binary collapse, the dipole bound
//! `β_ij^{|Γ_iΓ_j|}/ρ^V` report, and a detector for curves that approach the
//! origin in a regular way (normalized position and normalized velocity both
//! converge).

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::VortexError;
use crate::state::{pair_index, pairs};
use crate::Result;

/// Minimum samples for [`classify`].
pub const MIN_CLASSIFY_SAMPLES: usize = 10;
/// Minimum samples for [`regular_approach`].
pub const MIN_APPROACH_SAMPLES: usize = 20;
/// Minimum number of record minima for a sequential tag.
const MIN_RECORDS: usize = 5;
/// The last record must be below this fraction of the middle record, so
/// that record minima converging to a positive floor are not tagged.
const RECORD_DECAY: f64 = 0.5;
/// Permitted relative uptick between consecutive samples in the "weakly
/// monotone decrease" test.
const MONOTONE_SLACK: f64 = 1e-9;
/// Largest allowed distance between consecutive normalized samples at the
/// end of a regular approach.
const ANGULAR_TOL: f64 = 1e-4;
/// Largest allowed misalignment between normalized finite-difference
/// velocities and the negated limit direction at the end of an approach.
const VELOCITY_ALIGN_TOL: f64 = 1e-2;

/// How a cluster was seen to collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionKind {
    /// All internal distances tend to zero along the full trailing window.
    NCollision,
    /// Internal distances tend to zero only along a subsequence of times.
    Sequential,
    /// Normalized shape coordinates β tend to zero (collapse in shape).
    Relative,
    /// β tends to zero along a subsequence only.
    RelativeSequential,
}

impl CollisionKind {
    /// True for the two shape-space kinds.
    pub fn is_relative(self) -> bool {
        matches!(self, CollisionKind::Relative | CollisionKind::RelativeSequential)
    }
}

/// Evidence backing one cluster tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterEvidence {
    /// Final value of the worst internal metric (distance or β).
    pub final_value: f64,
    /// Log-linear fit slope of the worst internal metric on the window used.
    pub slope: f64,
    /// Time at which the evidence window starts.
    pub window_start: f64,
    /// For sequential tags, the times of the record minima.
    pub record_times: Vec<f64>,
}

/// One detected cluster.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Sorted member indices (0-based), size ≥ 2.
    pub members: Vec<usize>,
    pub kind: CollisionKind,
    /// No strict superset satisfies the same criterion.
    pub proper: bool,
    /// Root of a linear fit of the worst internal metric on the evidence
    /// window; `None` when the fit does not cross zero forward in time.
    pub t_star: Option<f64>,
    pub evidence: ClusterEvidence,
}

/// Full classification of a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionReport {
    /// Detected clusters. Clusters of the same kind family (absolute or
    /// relative) are disjoint; a relative cluster may overlap an absolute
    /// one, as when a shape-space binary sits inside a total collision.
    pub clusters: Vec<ClusterReport>,
    /// Threshold used for "reached zero".
    pub eps: f64,
    /// Distance between the two limit points at the final sample when the
    /// absolute clusters and the leftover vortices form exactly two groups.
    pub limit_separation: Option<f64>,
}

impl CollisionReport {
    /// True when nothing was tagged.
    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Clusters of one kind.
    pub fn of_kind(&self, kind: CollisionKind) -> impl Iterator<Item = &ClusterReport> {
        self.clusters.iter().filter(move |c| c.kind == kind)
    }
}

/// Pair-level trend status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairStatus {
    None,
    Sequential,
    Full,
}

struct PairTrend {
    status: PairStatus,
    final_value: f64,
    slope: f64,
    window_start: f64,
    record_times: Vec<f64>,
    t_star: Option<f64>,
}

/// Least-squares slope and intercept of `y` against `x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn trailing_window_len(len: usize) -> usize {
    ((len as f64 * 0.25).ceil() as usize).max(5).min(len)
}

/// Analyzes one positive series for full and sequential zero-approach.
fn pair_trend(times: &[f64], values: &[f64], eps: f64) -> PairTrend {
    let len = values.len();
    let w = trailing_window_len(len);
    let window_t = &times[len - w..];
    let window_v = &values[len - w..];

    let final_value = values[len - 1];
    let weakly_decreasing = window_v
        .windows(2)
        .all(|p| p[1] <= p[0] * (1.0 + MONOTONE_SLACK));
    let logs: Vec<f64> = window_v.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(window_t, &logs);
    let full = weakly_decreasing && slope < 0.0 && final_value < eps;

    let mut record_times = Vec::new();
    let mut record_values = Vec::new();
    let mut best = f64::INFINITY;
    for (t, v) in times.iter().zip(values) {
        if *v < best {
            best = *v;
            record_times.push(*t);
            record_values.push(*v);
        }
    }
    let sequential = !full
        && record_times.len() >= MIN_RECORDS
        && *record_values.last().unwrap() < eps
        && *record_values.last().unwrap()
            < RECORD_DECAY * record_values[record_values.len() * 2 / 3]
        && {
            let record_logs: Vec<f64> = record_values.iter().map(|v| v.ln()).collect();
            let (record_slope, _) = linear_fit(&record_times, &record_logs);
            record_slope < 0.0
        };

    let (status, fit_t, fit_v): (PairStatus, &[f64], Vec<f64>) = if full {
        (PairStatus::Full, window_t, window_v.to_vec())
    } else if sequential {
        (PairStatus::Sequential, &record_times, record_values.clone())
    } else {
        (PairStatus::None, window_t, window_v.to_vec())
    };

    let (lin_slope, lin_intercept) = linear_fit(fit_t, &fit_v);
    let t_star = (lin_slope < 0.0).then(|| -lin_intercept / lin_slope);

    PairTrend {
        status,
        final_value,
        slope,
        window_start: window_t[0],
        record_times: if status == PairStatus::Sequential { record_times } else { Vec::new() },
        t_star,
    }
}

/// All index subsets of `{0..n}` with at least two members, largest first.
fn subsets_largest_first(n: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (0u32..(1 << n))
        .filter(|mask| mask.count_ones() >= 2)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    subsets.sort_by_key(|s: &Vec<usize>| std::cmp::Reverse(s.len()));
    subsets
}

/// Status of a subset: the weakest status among its internal pairs.
fn subset_status(subset: &[usize], n: usize, trends: &[PairTrend]) -> PairStatus {
    let mut status = PairStatus::Full;
    for (a, idx_a) in subset.iter().enumerate() {
        for idx_b in subset.iter().skip(a + 1) {
            let k = pair_index(n, *idx_a, *idx_b);
            status = match (status, trends[k].status) {
                (_, PairStatus::None) => return PairStatus::None,
                (PairStatus::Sequential, _) | (_, PairStatus::Sequential) => PairStatus::Sequential,
                _ => PairStatus::Full,
            };
        }
    }
    status
}

/// Aggregates the evidence of a subset from its worst internal pair (the one
/// with the largest final value).
fn subset_evidence(subset: &[usize], n: usize, trends: &[PairTrend]) -> (ClusterEvidence, Option<f64>) {
    let mut worst: Option<&PairTrend> = None;
    for (a, idx_a) in subset.iter().enumerate() {
        for idx_b in subset.iter().skip(a + 1) {
            let t = &trends[pair_index(n, *idx_a, *idx_b)];
            if worst.map_or(true, |w| t.final_value > w.final_value) {
                worst = Some(t);
            }
        }
    }
    let w = worst.expect("subset has at least one pair");
    (
        ClusterEvidence {
            final_value: w.final_value,
            slope: w.slope,
            window_start: w.window_start,
            record_times: w.record_times.clone(),
        },
        w.t_star,
    )
}

/// Selects disjoint clusters from one family of pair trends, assigning each
/// the strongest kind its pairs support.
fn select_clusters(
    n: usize,
    trends: &[PairTrend],
    full_kind: CollisionKind,
    seq_kind: CollisionKind,
    forbid_total: bool,
) -> Vec<ClusterReport> {
    let mut taken: Vec<ClusterReport> = Vec::new();
    let mut used = vec![false; n];
    for subset in subsets_largest_first(n) {
        if forbid_total && subset.len() == n {
            continue;
        }
        if subset.iter().any(|i| used[*i]) {
            continue;
        }
        let status = subset_status(&subset, n, trends);
        if status == PairStatus::None {
            continue;
        }
        let kind = if status == PairStatus::Full { full_kind } else { seq_kind };
        let proper = !subsets_largest_first(n).iter().any(|sup| {
            sup.len() > subset.len()
                && subset.iter().all(|i| sup.contains(i))
                && !(forbid_total && sup.len() == n)
                && subset_status(sup, n, trends) != PairStatus::None
        });
        let (evidence, t_star) = subset_evidence(&subset, n, trends);
        for i in &subset {
            used[*i] = true;
        }
        taken.push(ClusterReport { members: subset, kind, proper, t_star, evidence });
    }
    taken
}

/// Classifies the collision structure of a trajectory.
///
/// Absolute tags test the pairwise distances l_ij against `eps`; relative
/// tags test the normalized shape coordinates β_ij against `eps`. See the
/// module docs for the exact trend operationalization.
pub fn classify(traj: &Trajectory, eps: f64) -> Result<CollisionReport> {
    if traj.len() < MIN_CLASSIFY_SAMPLES {
        return Err(VortexError::TrajectoryTooShort {
            len: traj.len(),
            need: MIN_CLASSIFY_SAMPLES,
        });
    }
    let n = traj.first().state.n();
    let times = traj.times();
    let n_pairs = crate::state::pair_count(n);

    let mut distance_series: Vec<Vec<f64>> = vec![Vec::with_capacity(traj.len()); n_pairs];
    let mut beta_series: Vec<Vec<f64>> = vec![Vec::with_capacity(traj.len()); n_pairs];
    for sample in &traj.samples {
        let b = sample.state.squared_distances();
        let rho: f64 = b.iter().sum();
        for (k, bk) in b.iter().enumerate() {
            distance_series[k].push(bk.sqrt());
            beta_series[k].push(bk / rho);
        }
    }

    let abs_trends: Vec<PairTrend> =
        distance_series.iter().map(|v| pair_trend(&times, v, eps)).collect();
    let rel_trends: Vec<PairTrend> =
        beta_series.iter().map(|v| pair_trend(&times, v, eps)).collect();

    let mut clusters = select_clusters(
        n,
        &abs_trends,
        CollisionKind::NCollision,
        CollisionKind::Sequential,
        false,
    );
    clusters.extend(select_clusters(
        n,
        &rel_trends,
        CollisionKind::Relative,
        CollisionKind::RelativeSequential,
        true,
    ));

    let limit_separation = two_group_separation(traj, &clusters);

    Ok(CollisionReport { clusters, eps, limit_separation })
}

/// When the absolute clusters plus leftover singletons form exactly two
/// groups, returns the distance between the group centroids at the final
/// sample.
fn two_group_separation(traj: &Trajectory, clusters: &[ClusterReport]) -> Option<f64> {
    let n = traj.first().state.n();
    let mut groups: Vec<Vec<usize>> = clusters
        .iter()
        .filter(|c| !c.kind.is_relative())
        .map(|c| c.members.clone())
        .collect();
    let mut used = vec![false; n];
    for g in &groups {
        for i in g {
            used[*i] = true;
        }
    }
    for (i, u) in used.iter().enumerate() {
        if !u {
            groups.push(vec![i]);
        }
    }
    if groups.len() != 2 {
        return None;
    }
    let last = &traj.last().state.positions;
    let centroid = |members: &[usize]| {
        members.iter().map(|i| last[*i]).sum::<num_complex::Complex64>() / members.len() as f64
    };
    Some((centroid(&groups[0]) - centroid(&groups[1])).norm())
}

/// A candidate limit pattern for bounded partial collapse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum CollapsePattern {
    /// Vortices `trio` collide while `spectator` stays apart.
    Ternary { trio: [usize; 3], spectator: usize },
    /// Pairs `first` and `second` collide simultaneously at separate points.
    DoubleBinary { first: [usize; 2], second: [usize; 2] },
}

/// Separation d between limit points demanded by the conservation of M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum RequiredSeparation {
    /// Any d > 0 is compatible.
    Arbitrary,
    /// The unique admissible separation.
    Fixed(f64),
    /// No separation satisfies the balance.
    None,
}

/// Verdict for one pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseCondition {
    pub pattern: CollapsePattern,
    /// Final verdict after the energy screening.
    pub admissible: bool,
    /// Verdict of the M-balance table alone.
    pub balance_admissible: bool,
    pub required_d: RequiredSeparation,
    pub reason: String,
}

/// Enumerates the four ternary and three double-binary patterns of a
/// four-vortex system and evaluates the admissibility of each.
///
/// The M-balance works as follows. Writing Γ_S for the summed strength of a
/// cluster S, a ternary collapse of (i,j,k) with spectator l forces
/// `M = Γ_ijk Γ_l d²`, and a double binary of (i,j),(k,l) forces
/// `M = Γ_ij Γ_kl d²`. Hence for M = 0 the product of cluster strengths must
/// vanish (d arbitrary), and for M ≠ 0 it must have the sign of M, with
/// `d = √(M/product)`. On top of the balance, an energy screening marks every
/// pattern inadmissible when all strengths share one sign, since the energy
/// relation then forbids any collision at bounded distances.
pub fn necessary_conditions(strengths: &[f64; 4], m: f64) -> Result<Vec<CollapseCondition>> {
    for (index, g) in strengths.iter().enumerate() {
        if *g == 0.0 {
            return Err(VortexError::ZeroStrength { index });
        }
    }
    let same_sign = strengths.iter().all(|g| *g > 0.0) || strengths.iter().all(|g| *g < 0.0);

    let mut out = Vec::with_capacity(7);

    let ternaries: [([usize; 3], usize); 4] =
        [([0, 1, 2], 3), ([0, 1, 3], 2), ([0, 2, 3], 1), ([1, 2, 3], 0)];
    for (trio, spectator) in ternaries {
        let cluster: f64 = trio.iter().map(|i| strengths[*i]).sum();
        let product = cluster * strengths[spectator];
        out.push(balance_verdict(
            CollapsePattern::Ternary { trio, spectator },
            cluster,
            product,
            m,
            same_sign,
        ));
    }

    let doubles: [([usize; 2], [usize; 2]); 3] =
        [([0, 1], [2, 3]), ([0, 2], [1, 3]), ([0, 3], [1, 2])];
    for (first, second) in doubles {
        let g_first: f64 = first.iter().map(|i| strengths[*i]).sum();
        let g_second: f64 = second.iter().map(|i| strengths[*i]).sum();
        out.push(balance_verdict(
            CollapsePattern::DoubleBinary { first, second },
            g_first * g_second,
            g_first * g_second,
            m,
            same_sign,
        ));
    }

    Ok(out)
}

/// Shared admissibility logic; `cluster_indicator` is the quantity that must
/// vanish when M = 0 (Γ_ijk for ternaries, Γ_ij Γ_kl for double binaries),
/// `product` the cluster-strength product fixing d² = M/product.
fn balance_verdict(
    pattern: CollapsePattern,
    cluster_indicator: f64,
    product: f64,
    m: f64,
    same_sign: bool,
) -> CollapseCondition {
    let (balance_admissible, required_d, balance_reason) = if m == 0.0 {
        if cluster_indicator == 0.0 {
            (true, RequiredSeparation::Arbitrary, "M = 0 with vanishing cluster-strength product; any separation balances".to_string())
        } else {
            (false, RequiredSeparation::None, "M = 0 demands a vanishing cluster-strength product".to_string())
        }
    } else if product != 0.0 && m * product > 0.0 {
        (
            true,
            RequiredSeparation::Fixed((m / product).sqrt()),
            "M and the cluster-strength product agree in sign".to_string(),
        )
    } else {
        (
            false,
            RequiredSeparation::None,
            "M and the cluster-strength product disagree in sign".to_string(),
        )
    };

    let (admissible, reason) = if same_sign {
        (false, "bounded collision requires mixed signs".to_string())
    } else {
        (balance_admissible, balance_reason)
    };

    CollapseCondition { pattern, admissible, balance_admissible, required_d, reason }
}

/// Result of the regular-approach detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum ApproachOutcome {
    /// The normalized curve and its normalized velocity both converge; the
    /// stored direction is the limit of the normalized positions.
    Regular { direction: Vec<f64> },
    /// One of the convergence tests failed.
    NotRegular { why: String },
}

/// Decides whether sampled points approach the origin in a regular way.
///
/// The samples must have strictly decreasing norms. The detector checks that
/// the normalized samples form a Cauchy-like sequence (successive angular
/// variation below [`ANGULAR_TOL`] on the trailing half, with no growth
/// trend) and that normalized finite-difference velocities align with the
/// negated limit direction to [`VELOCITY_ALIGN_TOL`]; both must hold for a
/// `Regular` verdict.
pub fn regular_approach(samples: &[(f64, Vec<f64>)]) -> Result<ApproachOutcome> {
    if samples.len() < MIN_APPROACH_SAMPLES {
        return Err(VortexError::TrajectoryTooShort {
            len: samples.len(),
            need: MIN_APPROACH_SAMPLES,
        });
    }
    let dim = samples[0].1.len();
    let norms: Vec<f64> = samples.iter().map(|(_, v)| norm(v)).collect();
    for w in norms.windows(2) {
        if !(w[1] < w[0]) {
            return Err(VortexError::InvalidState(
                "regular-approach samples must have strictly decreasing norms".into(),
            ));
        }
    }

    let unit: Vec<Vec<f64>> = samples
        .iter()
        .zip(&norms)
        .map(|((_, v), n)| v.iter().map(|x| x / n).collect())
        .collect();

    let steps: Vec<f64> = unit.windows(2).map(|w| distance(&w[0], &w[1])).collect();
    let half = steps.len() / 2;
    let trailing = &steps[half..];
    let max_step = trailing.iter().cloned().fold(0.0f64, f64::max);
    if max_step > ANGULAR_TOL {
        return Ok(ApproachOutcome::NotRegular {
            why: format!("normalized samples still move by {max_step:.3e} near the end"),
        });
    }
    let quarter = trailing.len() / 2;
    if quarter > 0 {
        let early: f64 = trailing[..quarter].iter().sum::<f64>() / quarter as f64;
        let late: f64 =
            trailing[quarter..].iter().sum::<f64>() / (trailing.len() - quarter) as f64;
        if late > early + 1e-12 && late > 0.5 * ANGULAR_TOL {
            return Ok(ApproachOutcome::NotRegular {
                why: "angular variation grows toward the end".into(),
            });
        }
    }

    let direction = unit.last().unwrap().clone();

    let mut worst_alignment: f64 = 0.0;
    let tail_start = samples.len() - samples.len() / 4 - 1;
    for k in tail_start..samples.len() - 1 {
        let diff: Vec<f64> = (0..dim).map(|i| samples[k + 1].1[i] - samples[k].1[i]).collect();
        let d_norm = norm(&diff);
        if d_norm == 0.0 {
            continue;
        }
        let misalign: f64 = (0..dim)
            .map(|i| (diff[i] / d_norm + direction[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        worst_alignment = worst_alignment.max(misalign);
    }
    if worst_alignment > VELOCITY_ALIGN_TOL {
        return Ok(ApproachOutcome::NotRegular {
            why: format!(
                "finite-difference velocity misaligned with the approach direction by {worst_alignment:.3e}"
            ),
        });
    }

    Ok(ApproachOutcome::Regular { direction })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Report of the dipole bound `r(t) = β_ij^{|Γ_iΓ_j|}/ρ^V` over the trailing
/// window, together with the scale-trend direction expected from the sign of
/// the virial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    /// False when a hypothesis fails; the notes say which.
    pub applicable: bool,
    pub hypothesis_notes: Vec<String>,
    /// Smallest r over the trailing window.
    pub r_min: Option<f64>,
    /// Largest r over the trailing window.
    pub r_max: Option<f64>,
    /// r_max/r_min; near 1 means r is pinched between constants.
    pub ratio: Option<f64>,
    /// Final β of the chosen pair.
    pub beta_final: Option<f64>,
    /// Sign of the log-linear slope of ρ on the trailing window.
    pub rho_slope: Option<f64>,
    /// Whether the observed ρ trend matches the direction the virial sign
    /// predicts (V > 0 shrinking, V < 0 growing); observational only.
    pub scale_trend_consistent: Option<bool>,
}

/// Relative M tolerance for the bound's `M ≈ 0` hypothesis, scaled by
/// `Σ |Γ_iΓ_j| b_ij` at the initial sample.
const M_ZERO_REL_TOL: f64 = 1e-9;

/// Evaluates the dipole bound report for the given pair (0-based indices).
///
/// Hypotheses: the pair strengths have opposite signs, the three sums
/// `Γ_i+Γ_j`, `Γ_i+Γ_j+Γ_k`, `Γ_i+Γ_j+Γ_l` are all nonzero, and M vanishes
/// within tolerance. Violations make the report inapplicable rather than an
/// error.
pub fn beta12_virial_bound(traj: &Trajectory, pair: (usize, usize)) -> Result<BoundReport> {
    if traj.len() < MIN_CLASSIFY_SAMPLES {
        return Err(VortexError::TrajectoryTooShort {
            len: traj.len(),
            need: MIN_CLASSIFY_SAMPLES,
        });
    }
    let strengths = traj.strengths();
    let n = strengths.len();
    let (i, j) = (pair.0.min(pair.1), pair.0.max(pair.1));
    if j >= n || i == j {
        return Err(VortexError::InvalidState(format!("invalid pair ({}, {})", pair.0, pair.1)));
    }

    let mut notes = Vec::new();
    if strengths[i] * strengths[j] >= 0.0 {
        notes.push(format!("pair strengths Γ_{i} Γ_{j} do not have opposite signs"));
    }
    let pair_sum = strengths[i] + strengths[j];
    let product = (0..n)
        .filter(|k| *k != i && *k != j)
        .fold(pair_sum, |acc, k| acc * (pair_sum + strengths[k]));
    if product == 0.0 {
        notes.push("a group-strength factor (Γ_ij or Γ_ij + Γ_k) vanishes".into());
    }

    let first = traj.first();
    let b0 = first.state.squared_distances();
    let m_scale: f64 = pairs(n)
        .zip(&b0)
        .map(|((a, b), bb)| (strengths[a] * strengths[b]).abs() * bb)
        .sum();
    let m = first.invariants.m_pair_sum;
    if m.abs() > M_ZERO_REL_TOL * m_scale {
        notes.push(format!("M = {m:.3e} is not zero within tolerance {:.3e}", M_ZERO_REL_TOL * m_scale));
    }

    if !notes.is_empty() {
        return Ok(BoundReport {
            applicable: false,
            hypothesis_notes: notes,
            r_min: None,
            r_max: None,
            ratio: None,
            beta_final: None,
            rho_slope: None,
            scale_trend_consistent: None,
        });
    }

    let virial = first.invariants.virial;
    let exponent = (strengths[i] * strengths[j]).abs();
    let pair_k = pair_index(n, i, j);

    let len = traj.len();
    let w = trailing_window_len(len);
    let mut log_r = Vec::with_capacity(w);
    let mut log_rho = Vec::with_capacity(w);
    let mut times = Vec::with_capacity(w);
    let mut beta_final = 0.0;
    for sample in &traj.samples[len - w..] {
        let b = sample.state.squared_distances();
        let rho: f64 = b.iter().sum();
        let beta = b[pair_k] / rho;
        log_r.push(exponent * beta.ln() - virial * rho.ln());
        log_rho.push(rho.ln());
        times.push(sample.time);
        beta_final = beta;
    }
    let lo = log_r.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = log_r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (rho_slope, _) = linear_fit(&times, &log_rho);
    let consistent = if virial > 0.0 {
        rho_slope < 0.0
    } else if virial < 0.0 {
        rho_slope > 0.0
    } else {
        true
    };

    Ok(BoundReport {
        applicable: true,
        hypothesis_notes: Vec::new(),
        r_min: Some(lo.exp()),
        r_max: Some(hi.exp()),
        ratio: Some((hi - lo).exp()),
        beta_final: Some(beta_final),
        rho_slope: Some(rho_slope),
        scale_trend_consistent: Some(consistent),
    })
}
