//! Permutation-calibrated power comparison of association measures.
//!
//! For each of B alternative samples a null twin is made by permuting Y.
//! Each measure's rejection threshold is the (1 - alpha) quantile of its B
//! null values; power is the fraction of alternative values above it.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GpcsError, Result};
use crate::geometry::{BivariatePoint, BivariateSample, Moments2};
use crate::klines::KlinesConfig;
use crate::measures::r2_gu;
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// `y = +x` or `y = -x`, each with probability 1/2.
    TwoLinesMixedSign,
    /// `y = x`.
    Linear,
    /// `y = x^2 / 5`.
    Parabola,
    /// `y = x + x^2/20` or `y = -x - x^2/20`, each with probability 1/2:
    /// two arcs of opposite slope and curvature.
    PiecewiseNonlinearMix,
    /// `y` drawn independently of `x`; only the noise term remains.
    Independent,
}

impl Pattern {
    pub fn name(&self) -> &'static str {
        match self {
            Pattern::TwoLinesMixedSign => "two_lines",
            Pattern::Linear => "linear",
            Pattern::Parabola => "parabola",
            Pattern::PiecewiseNonlinearMix => "nonlinear_mix",
            Pattern::Independent => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "two_lines" | "two-lines" | "mixed_sign" => Some(Pattern::TwoLinesMixedSign),
            "linear" => Some(Pattern::Linear),
            "parabola" => Some(Pattern::Parabola),
            "nonlinear_mix" | "nonlinear-mix" => Some(Pattern::PiecewiseNonlinearMix),
            "none" | "independent" | "null" => Some(Pattern::Independent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub pattern: Pattern,
    /// Standard deviation of the noise added to y.
    pub sigma: f64,
    /// Standard deviation of x.
    pub x_sd: f64,
}

impl PatternSpec {
    pub fn new(pattern: Pattern, sigma: f64) -> Self {
        Self { pattern, sigma, x_sd: 5.0 }
    }
}

/// Draws `n` points: `x ~ N(0, x_sd^2)`, `y = f(x) + N(0, sigma^2)`.
pub fn generate_pattern(spec: &PatternSpec, n: usize, seed: u64) -> Result<BivariateSample> {
    if n < 2 {
        return Err(GpcsError::InsufficientData { needed: 2, got: n });
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite() && spec.x_sd > 0.0 && spec.x_sd.is_finite()) {
        return Err(GpcsError::InvalidArgument("sigma must be >= 0 and x_sd > 0".into()));
    }
    let mut rng = stream(seed, 0);
    let x_dist = Normal::new(0.0, spec.x_sd).expect("x_sd > 0");
    let noise = Normal::new(0.0, spec.sigma).expect("sigma >= 0");
    let points = (0..n)
        .map(|_| {
            let x = x_dist.sample(&mut rng);
            let f = match spec.pattern {
                Pattern::TwoLinesMixedSign => {
                    if rng.random_bool(0.5) {
                        x
                    } else {
                        -x
                    }
                }
                Pattern::Linear => x,
                Pattern::Parabola => x * x / 5.0,
                Pattern::PiecewiseNonlinearMix => {
                    let arc = x + x * x / 20.0;
                    if rng.random_bool(0.5) {
                        arc
                    } else {
                        -arc
                    }
                }
                Pattern::Independent => x_dist.sample(&mut rng),
            };
            BivariatePoint::new(x, f + noise.sample(&mut rng))
        })
        .collect();
    BivariateSample::new(points)
}

/// A measure value with a flag for the zero-variance fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureValue {
    pub value: f64,
    /// Set when a variance was zero and the value defaulted to 0.
    pub degenerate: bool,
}

/// Squared sample Pearson correlation.
pub fn pearson_r2(points: &[BivariatePoint]) -> MeasureValue {
    match Moments2::from_iter(points.iter()) {
        Some(m) if points.len() >= 2 && m.var_x > 0.0 && m.var_y > 0.0 => MeasureValue {
            value: (m.cov_xy * m.cov_xy / (m.var_x * m.var_y)).clamp(0.0, 1.0),
            degenerate: false,
        },
        _ => MeasureValue { value: 0.0, degenerate: true },
    }
}

/// Sample distance correlation (the square root of the V-statistic
/// dCor^2). O(n^2) time, O(n) memory.
pub fn dcor(points: &[BivariatePoint]) -> MeasureValue {
    let n = points.len();
    if n < 2 {
        return MeasureValue { value: 0.0, degenerate: true };
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let (rx, gx) = row_means(&xs);
    let (ry, gy) = row_means(&ys);

    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let a = (xs[i] - xs[j]).abs() - rx[i] - rx[j] + gx;
            let b = (ys[i] - ys[j]).abs() - ry[i] - ry[j] + gy;
            cov += a * b;
            vx += a * a;
            vy += b * b;
        }
    }
    let denom = (vx * vy).sqrt();
    if !(denom > 0.0) {
        return MeasureValue { value: 0.0, degenerate: true };
    }
    MeasureValue { value: (cov / denom).max(0.0).sqrt().min(1.0), degenerate: false }
}

/// Row means of the |v_i - v_j| matrix and its grand mean.
fn row_means(v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.len() as f64;
    let rows: Vec<f64> = v
        .iter()
        .map(|&a| v.iter().map(|&b| (a - b).abs()).sum::<f64>() / n)
        .collect();
    let grand = rows.iter().sum::<f64>() / n;
    (rows, grand)
}

/// Anything that scores the association in a bivariate sample.
pub trait AssociationMeasure: Sync {
    fn name(&self) -> String;
    /// `seed` is available to randomized measures and ignored by the rest.
    fn evaluate(&self, points: &[BivariatePoint], seed: u64) -> Result<f64>;
}

pub struct PearsonR2;

impl AssociationMeasure for PearsonR2 {
    fn name(&self) -> String {
        "r2".into()
    }

    fn evaluate(&self, points: &[BivariatePoint], _seed: u64) -> Result<f64> {
        Ok(pearson_r2(points).value)
    }
}

pub struct DistanceCorrelation;

impl AssociationMeasure for DistanceCorrelation {
    fn name(&self) -> String {
        "dcor".into()
    }

    fn evaluate(&self, points: &[BivariatePoint], _seed: u64) -> Result<f64> {
        Ok(dcor(points).value)
    }
}

/// Unspecified generalized measure at a fixed K.
pub struct GcsUnspecified {
    pub k: usize,
    pub config: KlinesConfig,
}

impl AssociationMeasure for GcsUnspecified {
    fn name(&self) -> String {
        format!("gcs_k{}", self.k)
    }

    fn evaluate(&self, points: &[BivariatePoint], seed: u64) -> Result<f64> {
        r2_gu(points, self.k, &self.config.with_seed(seed)).map(|e| e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub measure: String,
    pub pattern: Pattern,
    pub n: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub threshold: f64,
    pub power: f64,
    pub b: usize,
}

/// Power reports plus the raw null and alternative values per measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRun {
    pub reports: Vec<PowerReport>,
    pub null_values: Vec<Vec<f64>>,
    pub alt_values: Vec<Vec<f64>>,
}

pub const MIN_POWER_B: usize = 200;

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = prob.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn permutation_power_detailed(
    pattern: &PatternSpec,
    measures: &[&dyn AssociationMeasure],
    n: usize,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<PowerRun> {
    if b < MIN_POWER_B {
        return Err(GpcsError::InvalidArgument(format!("B must be at least {MIN_POWER_B}, got {b}")));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(GpcsError::InvalidArgument(format!("alpha {alpha} must lie in (0, 0.5)")));
    }
    if measures.is_empty() {
        return Err(GpcsError::InvalidArgument("no measures requested".into()));
    }
    let per_sample: Vec<(Vec<f64>, Vec<f64>)> = (0..b)
        .into_par_iter()
        .map(|i| {
            let sample_seed = derive_seed(seed, 2 * i as u64);
            let alt = generate_pattern(pattern, n, sample_seed)?;
            let mut ys: Vec<f64> = alt.points().iter().map(|p| p.y).collect();
            let mut rng = stream(derive_seed(seed, 2 * i as u64 + 1), 0);
            ys.shuffle(&mut rng);
            let null: Vec<BivariatePoint> = alt
                .points()
                .iter()
                .zip(&ys)
                .map(|(p, &y)| BivariatePoint::new(p.x, y))
                .collect();
            let measure_seed = derive_seed(sample_seed, 7);
            let mut alt_v = Vec::with_capacity(measures.len());
            let mut null_v = Vec::with_capacity(measures.len());
            for m in measures {
                alt_v.push(m.evaluate(alt.points(), measure_seed)?);
                null_v.push(m.evaluate(&null, measure_seed)?);
            }
            Ok((null_v, alt_v))
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(measures.len());
    let mut null_values = Vec::with_capacity(measures.len());
    let mut alt_values = Vec::with_capacity(measures.len());
    for (mi, m) in measures.iter().enumerate() {
        let nulls: Vec<f64> = per_sample.iter().map(|s| s.0[mi]).collect();
        let alts: Vec<f64> = per_sample.iter().map(|s| s.1[mi]).collect();
        let mut sorted = nulls.clone();
        sorted.sort_by(f64::total_cmp);
        let threshold = quantile_sorted(&sorted, 1.0 - alpha);
        let power = alts.iter().filter(|&&v| v > threshold).count() as f64 / b as f64;
        reports.push(PowerReport {
            measure: m.name(),
            pattern: pattern.pattern,
            n,
            sigma: pattern.sigma,
            alpha,
            threshold,
            power,
            b,
        });
        null_values.push(nulls);
        alt_values.push(alts);
    }
    Ok(PowerRun { reports, null_values, alt_values })
}

pub fn permutation_power(
    pattern: &PatternSpec,
    measures: &[&dyn AssociationMeasure],
    n: usize,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<PowerReport>> {
    permutation_power_detailed(pattern, measures, n, b, alpha, seed).map(|r| r.reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<BivariatePoint> {
        v.iter().copied().map(BivariatePoint::from).collect()
    }

    /// Distance covariance straight from the original definition:
    /// S1 + S2 - 2 S3 with explicit sums over index pairs and triples.
    fn naive_dcor(p: &[BivariatePoint]) -> f64 {
        let n = p.len();
        let nf = n as f64;
        let dx = |i: usize, j: usize| (p[i].x - p[j].x).abs();
        let dy = |i: usize, j: usize| (p[i].y - p[j].y).abs();
        let dcov2 = |f: &dyn Fn(usize, usize) -> f64, g: &dyn Fn(usize, usize) -> f64| {
            let (mut s1, mut sa, mut sb, mut s3) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    s1 += f(i, j) * g(i, j);
                    sa += f(i, j);
                    sb += g(i, j);
                    for k in 0..n {
                        s3 += f(i, j) * g(i, k);
                    }
                }
            }
            s1 / (nf * nf) + (sa / (nf * nf)) * (sb / (nf * nf)) - 2.0 * s3 / (nf * nf * nf)
        };
        let c = dcov2(&dx, &dy);
        let vx = dcov2(&dx, &dx);
        let vy = dcov2(&dy, &dy);
        (c / (vx * vy).sqrt()).max(0.0).sqrt()
    }

    #[test]
    fn pearson_examples() {
        let line: Vec<_> = (0..8).map(|i| BivariatePoint::new(i as f64, 3.0 * i as f64 + 2.0)).collect();
        assert!((pearson_r2(&line).value - 1.0).abs() < 1e-14);
        let neg: Vec<_> = (0..8).map(|i| BivariatePoint::new(i as f64, -(i as f64))).collect();
        assert!((pearson_r2(&neg).value - 1.0).abs() < 1e-14);
        // sxy = 8, sxx = syy = 10
        let five = pts(&[(1.0, 2.0), (2.0, 1.0), (3.0, 4.0), (4.0, 3.0), (5.0, 5.0)]);
        assert!((pearson_r2(&five).value - 0.64).abs() < 1e-14);
        let flat = pts(&[(1.0, 2.0), (2.0, 2.0)]);
        assert_eq!(pearson_r2(&flat), MeasureValue { value: 0.0, degenerate: true });
    }

    #[test]
    fn dcor_matches_naive_definition() {
        let mut rng = stream(5, 0);
        for n in [2usize, 3, 7, 20] {
            let p: Vec<_> = (0..n)
                .map(|_| BivariatePoint::new(rng.random::<f64>(), rng.random::<f64>() * 3.0))
                .collect();
            assert!((dcor(&p).value - naive_dcor(&p)).abs() < 1e-10);
        }
    }

    #[test]
    fn dcor_identity_and_degenerate() {
        let p: Vec<_> = (0..30).map(|i| BivariatePoint::new(i as f64 * 0.3, i as f64 * 0.3)).collect();
        assert!((dcor(&p).value - 1.0).abs() < 1e-12);
        let flat = pts(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        assert!(dcor(&flat).degenerate);
    }

    #[test]
    fn noiseless_linear_pattern() {
        let s = generate_pattern(&PatternSpec::new(Pattern::Linear, 0.0), 100, 1).unwrap();
        assert!((pearson_r2(s.points()).value - 1.0).abs() < 1e-12);
        assert!(generate_pattern(&PatternSpec::new(Pattern::Linear, 0.0), 1, 1).is_err());
        assert!(generate_pattern(&PatternSpec::new(Pattern::Linear, -1.0), 10, 1).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.0);
        assert_eq!(quantile_sorted(&v, 0.95), 3.8);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }

    #[test]
    fn argument_checks() {
        let spec = PatternSpec::new(Pattern::Linear, 1.0);
        let ms: [&dyn AssociationMeasure; 1] = [&PearsonR2];
        assert!(permutation_power(&spec, &ms, 30, 50, 0.05, 1).is_err());
        assert!(permutation_power(&spec, &ms, 30, 200, 0.6, 1).is_err());
        assert!(permutation_power(&spec, &[], 30, 200, 0.05, 1).is_err());
    }

    #[test]
    fn pattern_names_round_trip() {
        for p in [
            Pattern::TwoLinesMixedSign,
            Pattern::Linear,
            Pattern::Parabola,
            Pattern::PiecewiseNonlinearMix,
            Pattern::Independent,
        ] {
            assert_eq!(Pattern::parse(p.name()), Some(p));
        }
    }
}
