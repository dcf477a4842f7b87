//! K-lines clustering: Lloyd-style alternation between nearest-line
//! assignment (perpendicular distance) and major-axis recentering, run from
//! several random starts with the best objective kept.
//!
//! Also hosts the two tools for choosing K: the scree curve of the
//! within-cluster objective and a Gaussian-mixture AIC built from the
//! hard K-lines partition.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GpcsError, Result};
use crate::geometry::{major_axis, perp_distance, BivariatePoint, Line, Moments2};
use crate::rng;

/// Multiset of K lines; repeats are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSet(pub Vec<Line>);

impl LineSet {
    pub fn new(lines: Vec<Line>) -> Result<Self> {
        if lines.is_empty() {
            return Err(GpcsError::InvalidArgument("a line set needs at least one line".into()));
        }
        Ok(Self(lines))
    }

    pub fn lines(&self) -> &[Line] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmptyClusterPolicy {
    /// Replace an empty cluster by a line through the worst-fit point and
    /// its nearest neighbour; a cluster of identical points gets a line
    /// through them and the worst-fit point.
    #[default]
    ReseedFarthest,
    /// Remove empty clusters for the rest of the restart. Clusters of
    /// identical points are an error.
    Drop,
}

/// How each restart picks its starting partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Uniformly random partition into K nonempty groups.
    RandomPartition,
    /// Each line through two randomly drawn points; the partition is the
    /// nearest-line assignment.
    PointPairs,
    /// Seeds drawn with probability proportional to their squared
    /// distance from the lines chosen so far; each line is the major axis
    /// of its seed's m nearest neighbours, m uniform on `2..=n/K`.
    LocalAxes,
    /// Restarts cycle through `RandomPartition`, `PointPairs`, `LocalAxes`.
    #[default]
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlinesConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub empty_cluster_policy: EmptyClusterPolicy,
    pub init: InitStrategy,
}

impl Default for KlinesConfig {
    fn default() -> Self {
        Self {
            restarts: 30,
            max_iterations: 100,
            seed: 0,
            empty_cluster_policy: EmptyClusterPolicy::ReseedFarthest,
            init: InitStrategy::Mixed,
        }
    }
}

impl KlinesConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(GpcsError::InvalidArgument(
                "restarts and max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub lines: LineSet,
    /// Nearest-line index in `1..=K` for every point.
    pub labels: Vec<usize>,
    /// Mean squared perpendicular distance to the nearest line.
    pub objective: f64,
    /// Iterations used by the winning restart.
    pub iterations: usize,
    pub restarts_run: usize,
    /// Whether the winning restart stopped because labels stabilized.
    pub converged: bool,
    /// How many restarts converged before the iteration cap.
    pub restarts_converged: usize,
}

impl FitResult {
    pub fn k(&self) -> usize {
        self.lines.len()
    }
}

fn squared_nearest(p: BivariatePoint, lines: &[Line]) -> f64 {
    lines
        .iter()
        .map(|l| l.signed_distance(p).powi(2))
        .fold(f64::INFINITY, f64::min)
}

/// Mean over points of the squared distance to the nearest line.
pub fn objective_w(points: &[BivariatePoint], lines: &LineSet) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let total: f64 = points.iter().map(|&p| squared_nearest(p, lines.lines())).sum();
    total / points.len() as f64
}

/// Nearest-line labels in `1..=K`; ties go to the lowest index.
pub fn assign(points: &[BivariatePoint], lines: &LineSet) -> Vec<usize> {
    points.iter().map(|&p| nearest_line(p, lines.lines())).collect()
}

fn nearest_line(p: BivariatePoint, lines: &[Line]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, l) in lines.iter().enumerate() {
        let d = perp_distance(p, l);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best + 1
}

/// Major-axis line of every cluster. Empty and identical-point clusters
/// are handled per `policy`; with `Drop` the result may hold fewer than
/// `k` lines.
pub fn recenter(
    points: &[BivariatePoint],
    labels: &[usize],
    k: usize,
    policy: EmptyClusterPolicy,
) -> Result<LineSet> {
    if labels.len() != points.len() {
        return Err(GpcsError::DimensionMismatch(format!(
            "{} labels for {} points",
            labels.len(),
            points.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > k) {
        return Err(GpcsError::InvalidArgument(format!("label {bad} outside 1..={k}")));
    }
    let mut members: Vec<Vec<BivariatePoint>> = vec![Vec::new(); k];
    for (p, &l) in points.iter().zip(labels) {
        members[l - 1].push(*p);
    }

    enum Slot {
        Fitted(Line),
        Empty,
        Identical(BivariatePoint),
    }
    let mut slots = Vec::with_capacity(k);
    for m in &members {
        let slot = match m.len() {
            0 => Slot::Empty,
            1 => Slot::Identical(m[0]),
            _ => match major_axis(m) {
                Ok(fit) => Slot::Fitted(fit.line),
                Err(GpcsError::DegenerateCluster { .. }) => Slot::Identical(m[0]),
                Err(e) => return Err(e),
            },
        };
        slots.push(slot);
    }

    match policy {
        EmptyClusterPolicy::Drop => {
            let mut lines = Vec::with_capacity(k);
            for (slot, m) in slots.into_iter().zip(&members) {
                match slot {
                    Slot::Fitted(l) => lines.push(l),
                    Slot::Empty => {}
                    Slot::Identical(_) => {
                        return Err(GpcsError::DegenerateCluster { size: m.len() })
                    }
                }
            }
            LineSet::new(lines)
        }
        EmptyClusterPolicy::ReseedFarthest => {
            let mut fitted: Vec<Line> = slots
                .iter()
                .filter_map(|s| match s {
                    Slot::Fitted(l) => Some(*l),
                    _ => None,
                })
                .collect();
            let mut residual: Vec<f64> = points
                .iter()
                .map(|&p| squared_nearest(p, &fitted))
                .collect();
            let mut out: Vec<Option<Line>> = slots
                .iter()
                .map(|s| match s {
                    Slot::Fitted(l) => Some(*l),
                    _ => None,
                })
                .collect();

            // clusters that still hold points first, so they keep zero cost
            for (idx, slot) in slots.iter().enumerate() {
                if let Slot::Identical(q) = slot {
                    let line = line_through_worst(points, &residual, *q)
                        .ok_or(GpcsError::DegenerateCluster { size: points.len() })?;
                    update_residuals(points, &mut residual, &line);
                    fitted.push(line);
                    out[idx] = Some(line);
                }
            }
            for (idx, slot) in slots.iter().enumerate() {
                if let Slot::Empty = slot {
                    let worst = argmax(&residual);
                    let anchor = points[worst];
                    let line = nearest_distinct(points, anchor)
                        .and_then(|q| Line::through_points(anchor, q).ok())
                        .ok_or(GpcsError::DegenerateCluster { size: points.len() })?;
                    update_residuals(points, &mut residual, &line);
                    fitted.push(line);
                    out[idx] = Some(line);
                }
            }
            LineSet::new(out.into_iter().map(|l| l.expect("every slot filled")).collect())
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        // NaN-free: residuals are squared finite distances or +inf
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn update_residuals(points: &[BivariatePoint], residual: &mut [f64], line: &Line) {
    for (r, &p) in residual.iter_mut().zip(points) {
        *r = r.min(line.signed_distance(p).powi(2));
    }
}

/// Line through `q` and the worst-fit point that differs from `q`.
fn line_through_worst(points: &[BivariatePoint], residual: &[f64], q: BivariatePoint) -> Option<Line> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if *p == q {
            continue;
        }
        // +inf residuals (no fitted line yet) fall back to Euclidean spread
        let score = if residual[i].is_finite() {
            residual[i]
        } else {
            (p.x - q.x).powi(2) + (p.y - q.y).powi(2)
        };
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.and_then(|(i, _)| Line::through_points(q, points[i]).ok())
}

fn nearest_distinct(points: &[BivariatePoint], anchor: BivariatePoint) -> Option<BivariatePoint> {
    points
        .iter()
        .filter(|p| **p != anchor)
        .map(|p| (*p, (p.x - anchor.x).powi(2) + (p.y - anchor.y).powi(2)))
        .fold(None, |acc: Option<(BivariatePoint, f64)>, (p, d)| match acc {
            Some((_, bd)) if bd <= d => acc,
            _ => Some((p, d)),
        })
        .map(|(p, _)| p)
}

/// Random partition of `0..n` into `k` nonempty groups, as labels in `1..=k`.
pub fn random_partition<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = vec![0; n];
    for (j, &i) in order.iter().enumerate() {
        labels[i] = if j < k { j + 1 } else { rng.random_range(1..=k) };
    }
    labels
}

/// One restart, recording the objective after every recentering step.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub lines: LineSet,
    pub labels: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trajectory: Vec<f64>,
}

/// Runs a single restart from the given initial labels.
pub fn run_from_labels(
    points: &[BivariatePoint],
    k: usize,
    mut labels: Vec<usize>,
    config: &KlinesConfig,
) -> Result<RestartTrace> {
    let mut trajectory = Vec::new();
    let mut lines = recenter(points, &labels, k, config.empty_cluster_policy)?;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        iterations += 1;
        trajectory.push(objective_w(points, &lines));
        let next = assign(points, &lines);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
        if iterations >= config.max_iterations {
            break;
        }
        lines = recenter(points, &labels, lines.len(), config.empty_cluster_policy)?;
    }
    let labels = assign(points, &lines);
    let objective = objective_w(points, &lines);
    Ok(RestartTrace { lines, labels, objective, iterations, converged, trajectory })
}

/// Starting partition from lines through random point pairs. The two seed
/// points of line j are forced into cluster j, so no cluster starts empty.
pub fn point_pair_partition<R: Rng>(points: &[BivariatePoint], k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let per_line = if n >= 2 * k { 2 } else { 1 };
    let seeds = rand::seq::index::sample(rng, n, per_line * k).into_vec();
    let mut lines = Vec::with_capacity(k);
    for j in 0..k {
        let p = points[seeds[per_line * j]];
        let line = if per_line == 2 {
            Line::through_points(p, points[seeds[2 * j + 1]]).ok()
        } else {
            None
        };
        let line = line.unwrap_or_else(|| {
            let t = rng.random_range(0.0..std::f64::consts::PI);
            Line::through(p, (t.cos(), t.sin())).expect("unit direction")
        });
        lines.push(line);
    }
    let mut labels = assign(points, &LineSet(lines));
    for (slot, &i) in seeds.iter().enumerate() {
        labels[i] = slot / per_line + 1;
    }
    labels
}

/// Starting partition from D^2-weighted seeds and local major axes. Each
/// seed is forced into its own cluster.
pub fn local_axes_partition<R: Rng>(points: &[BivariatePoint], k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let m_max = (n / k).max(2).min(n);
    let mut lines: Vec<Line> = Vec::with_capacity(k);
    let mut seeds: Vec<usize> = Vec::with_capacity(k);
    let mut d2 = vec![1.0; n];
    for _ in 0..k {
        for &s in &seeds {
            d2[s] = 0.0;
        }
        let total: f64 = d2.iter().sum();
        let seed = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[seed];
        let m = rng.random_range(2..=m_max);
        let mut near: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.x - c.x).powi(2) + (p.y - c.y).powi(2), i))
            .collect();
        if m < n {
            near.select_nth_unstable_by(m - 1, |a, b| a.0.total_cmp(&b.0));
        }
        let local: Vec<BivariatePoint> = near[..m].iter().map(|&(_, i)| points[i]).collect();
        let line = match major_axis(&local) {
            Ok(fit) => Line::through(c, fit.line.direction()).expect("unit direction"),
            Err(_) => {
                let t = rng.random_range(0.0..std::f64::consts::PI);
                Line::through(c, (t.cos(), t.sin())).expect("unit direction")
            }
        };
        for (i, p) in points.iter().enumerate() {
            d2[i] = if seeds.is_empty() {
                line.signed_distance(*p).powi(2)
            } else {
                d2[i].min(line.signed_distance(*p).powi(2))
            };
        }
        lines.push(line);
        seeds.push(seed);
    }
    let mut labels = assign(points, &LineSet(lines));
    for (j, &i) in seeds.iter().enumerate() {
        labels[i] = j + 1;
    }
    labels
}

/// Restart number `index` of a fit: a random start drawn from stream
/// `index` of `config.seed`, then alternation to convergence.
pub fn run_restart(
    points: &[BivariatePoint],
    k: usize,
    config: &KlinesConfig,
    index: usize,
) -> Result<RestartTrace> {
    let mut rng = rng::stream(config.seed, index as u64);
    let strategy = match config.init {
        InitStrategy::Mixed => [
            InitStrategy::RandomPartition,
            InitStrategy::PointPairs,
            InitStrategy::LocalAxes,
        ][index % 3],
        s => s,
    };
    let init = match strategy {
        InitStrategy::PointPairs => point_pair_partition(points, k, &mut rng),
        InitStrategy::LocalAxes => local_axes_partition(points, k, &mut rng),
        _ => random_partition(points.len(), k, &mut rng),
    };
    run_from_labels(points, k, init, config)
}

/// Best-of-restarts K-lines fit. Deterministic for a fixed seed regardless
/// of how restarts are scheduled across threads.
pub fn klines_fit(points: &[BivariatePoint], k: usize, config: &KlinesConfig) -> Result<FitResult> {
    config.validate()?;
    if k == 0 {
        return Err(GpcsError::InvalidArgument("K must be at least 1".into()));
    }
    if points.len() < k {
        return Err(GpcsError::InsufficientData { needed: k, got: points.len() });
    }
    let runs: Vec<Result<RestartTrace>> = (0..config.restarts)
        .into_par_iter()
        .map(|i| run_restart(points, k, config, i))
        .collect();

    let restarts_converged = runs
        .iter()
        .filter(|r| matches!(r, Ok(t) if t.converged))
        .count();
    let mut best: Option<RestartTrace> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(t) => {
                if best.as_ref().is_none_or(|b| t.objective < b.objective) {
                    best = Some(t);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best = match (best, first_err) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("restarts >= 1"),
    };
    Ok(FitResult {
        lines: best.lines,
        labels: best.labels,
        objective: best.objective,
        iterations: best.iterations,
        restarts_run: config.restarts,
        converged: best.converged,
        restarts_converged,
    })
}

/// `(K, W)` for `K = 1..=k_max`, as fitted. Not forced to be monotone.
pub fn scree(points: &[BivariatePoint], k_max: usize, config: &KlinesConfig) -> Result<Vec<(usize, f64)>> {
    if k_max == 0 || k_max > points.len() {
        return Err(GpcsError::InvalidArgument(format!(
            "k_max must be in 1..={}",
            points.len()
        )));
    }
    (1..=k_max)
        .map(|k| klines_fit(points, k, config).map(|f| (k, f.objective)))
        .collect()
}

/// Relative ridge added to each cluster covariance diagonal before inversion.
pub const AIC_RIDGE: f64 = 1e-10;

/// Gaussian-mixture AIC of a hard K-lines partition:
/// `2(6K - 1) - 2 * sum_i log sum_k p_k * phi(x_i; mu_k, Sigma_k)`
/// with plug-in weights, means and divide-by-n covariances per cluster.
pub fn aic(points: &[BivariatePoint], fit: &FitResult) -> Result<f64> {
    if fit.labels.len() != points.len() {
        return Err(GpcsError::DimensionMismatch(format!(
            "fit has {} labels for {} points",
            fit.labels.len(),
            points.len()
        )));
    }
    let k = fit.k();
    let n = points.len() as f64;
    let mut comps = Vec::with_capacity(k);
    for cluster in 1..=k {
        let members = points
            .iter()
            .zip(&fit.labels)
            .filter(|(_, &l)| l == cluster)
            .map(|(p, _)| p);
        let size = members.clone().count();
        if size < 3 {
            return Err(GpcsError::ClusterTooSmall { cluster, size });
        }
        let m = Moments2::from_iter(members).expect("nonempty");
        let ridge = AIC_RIDGE * (m.var_x + m.var_y) / 2.0;
        let (sxx, syy, sxy) = (m.var_x + ridge, m.var_y + ridge, m.cov_xy);
        let det = sxx * syy - sxy * sxy;
        if !(det > 0.0) {
            return Err(GpcsError::SingularCovariance { cluster });
        }
        comps.push(GaussComp {
            log_weight: (size as f64 / n).ln(),
            mean: m.mean(),
            inv: (syy / det, sxx / det, -sxy / det),
            log_norm: -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln(),
        });
    }
    let log_lik: f64 = points.iter().map(|&p| mixture_log_density(p, &comps)).sum();
    Ok(2.0 * (6 * k - 1) as f64 - 2.0 * log_lik)
}

struct GaussComp {
    log_weight: f64,
    mean: BivariatePoint,
    /// (inv_xx, inv_yy, inv_xy)
    inv: (f64, f64, f64),
    log_norm: f64,
}

fn mixture_log_density(p: BivariatePoint, comps: &[GaussComp]) -> f64 {
    let terms: Vec<f64> = comps
        .iter()
        .map(|c| {
            let dx = p.x - c.mean.x;
            let dy = p.y - c.mean.y;
            let q = c.inv.0 * dx * dx + c.inv.1 * dy * dy + 2.0 * c.inv.2 * dx * dy;
            c.log_weight + c.log_norm - 0.5 * q
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// One row of the K-selection table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KCandidate {
    pub k: usize,
    pub objective: f64,
    /// `None` when the fit violates the AIC preconditions.
    pub aic: Option<f64>,
}

/// Fits K = 1..=k_max and evaluates W and AIC for each.
pub fn k_selection_table(
    points: &[BivariatePoint],
    k_max: usize,
    config: &KlinesConfig,
) -> Result<Vec<KCandidate>> {
    if k_max == 0 {
        return Err(GpcsError::InvalidArgument("k_max must be at least 1".into()));
    }
    let upper = k_max.min(points.len());
    (1..=upper)
        .map(|k| {
            let fit = klines_fit(points, k, config)?;
            Ok(KCandidate { k, objective: fit.objective, aic: aic(points, &fit).ok() })
        })
        .collect()
}

/// AIC-minimizing K; infeasible K are skipped and ties favour smaller K.
pub fn select_k_aic(points: &[BivariatePoint], k_max: usize, config: &KlinesConfig) -> Result<usize> {
    let table = k_selection_table(points, k_max, config)?;
    pick_min_aic(&table).ok_or(GpcsError::NoFeasibleK { k_max })
}

pub fn pick_min_aic(table: &[KCandidate]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for c in table {
        if let Some(a) = c.aic {
            if best.is_none_or(|(_, b)| a < b) {
                best = Some((c.k, a));
            }
        }
    }
    best.map(|(k, _)| k)
}
