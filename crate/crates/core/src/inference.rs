//! Asymptotic variances of `sqrt(n) (R^2 - rho^2)` for the generalized
//! measures, in the general-moment form and the bivariate-Gaussian closed
//! form, plus normal-theory confidence intervals built from plug-in
//! variances or bootstrap standard errors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GpcsError, Result};
use crate::geometry::{BivariatePoint, BivariateSample, ComponentSummary};
use crate::klines::KlinesConfig;
use crate::measures::{r2_gs, r2_gu, GcsEstimate, Scenario};
use crate::normal;
use crate::rng::{derive_seed, stream};
use crate::simgen::{draw_mixture, Family, MixtureComponent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceVariant {
    /// Fourth-moment form, valid without distributional assumptions.
    GeneralMoments,
    /// Closed form that assumes Gaussian components; needs only p_k and rho2_k.
    GaussianClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    PluginAsymptotic,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    /// Raw bounds; see [`ConfidenceInterval::clamped`] for reporting.
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    pub variant: Option<VarianceVariant>,
    pub se: f64,
    /// Set when a negative plug-in variance was clamped to zero.
    pub variance_clamped: bool,
    /// Bootstrap replicates kept and dropped.
    pub replicates: Option<(usize, usize)>,
}

impl ConfidenceInterval {
    pub fn clamped(&self) -> (f64, f64) {
        (self.lower.clamp(0.0, 1.0), self.upper.clamp(0.0, 1.0))
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

const REQUIRED_MOMENTS: [(u32, u32); 5] = [(4, 0), (0, 4), (3, 1), (1, 3), (2, 2)];

/// General-form variance before clamping. Components with `rho2 == 0`
/// contribute nothing and need no moments.
pub fn asy_var_general_raw(components: &[ComponentSummary]) -> Result<f64> {
    let mut sum = 0.0;
    let mut terms = Vec::with_capacity(components.len());
    for (idx, comp) in components.iter().enumerate() {
        let p = comp.weight;
        if comp.rho2 == 0.0 || p == 0.0 {
            terms.push((p, 0.0));
            continue;
        }
        let mut m = [0.0; 5];
        for (slot, &(c, d)) in m.iter_mut().zip(REQUIRED_MOMENTS.iter()) {
            *slot = comp
                .moment(c, d)
                .ok_or(GpcsError::MissingMoments { component: idx, c, d })?;
        }
        let [x4, y4, x3y, xy3, x2y2] = m;
        // signed correlation; the odd-power term depends on its sign
        let rho = comp
            .moment(1, 1)
            .ok_or(GpcsError::MissingMoments { component: idx, c: 1, d: 1 })?;
        let r2 = rho * rho;
        let a = p * (r2 * r2 * (x4 + 2.0 * x2y2 + y4) - 4.0 * r2 * rho * (x3y + xy3) + 4.0 * r2 * x2y2);
        let b = p * (1.0 - p) * r2 * r2;
        sum += a + b;
        terms.push((p, r2));
    }
    sum += 2.0 * cross_terms(&terms);
    Ok(sum)
}

/// `sum_{k<r} -p_k p_r rho2_k rho2_r`
fn cross_terms(terms: &[(f64, f64)]) -> f64 {
    let mut c = 0.0;
    for (k, &(pk, rk)) in terms.iter().enumerate() {
        for &(pr, rr) in &terms[k + 1..] {
            c -= pk * pr * rk * rr;
        }
    }
    c
}

/// Asymptotic variance of `sqrt(n)(R^2_G - rho^2_G)` in the general form.
/// Divide by n and take the square root for a standard error.
pub fn asy_var_general(components: &[ComponentSummary]) -> Result<f64> {
    asy_var_general_raw(components).map(|v| v.max(0.0))
}

pub fn asy_var_gaussian_raw(weights: &[f64], rho2s: &[f64]) -> Result<f64> {
    if weights.len() != rho2s.len() {
        return Err(GpcsError::DimensionMismatch(format!(
            "{} weights but {} correlation squares",
            weights.len(),
            rho2s.len()
        )));
    }
    if weights.iter().any(|w| !(0.0..=1.0).contains(w)) || rho2s.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(GpcsError::InvalidArgument(
            "weights and correlation squares must lie in [0, 1]".into(),
        ));
    }
    let mut sum = 0.0;
    for (&p, &r2) in weights.iter().zip(rho2s) {
        sum += 4.0 * p * r2 * (1.0 - r2).powi(2) + p * (1.0 - p) * r2 * r2;
    }
    let terms: Vec<(f64, f64)> = weights.iter().copied().zip(rho2s.iter().copied()).collect();
    Ok(sum + 2.0 * cross_terms(&terms))
}

/// Gaussian closed-form asymptotic variance; depends only on weights and
/// correlation squares.
pub fn asy_var_gaussian(weights: &[f64], rho2s: &[f64]) -> Result<f64> {
    asy_var_gaussian_raw(weights, rho2s).map(|v| v.max(0.0))
}

/// Raw variance of the requested variant for a set of components.
pub fn component_variance_raw(components: &[ComponentSummary], variant: VarianceVariant) -> Result<f64> {
    match variant {
        VarianceVariant::GeneralMoments => asy_var_general_raw(components),
        VarianceVariant::GaussianClosedForm => {
            let w: Vec<f64> = components.iter().map(|c| c.weight).collect();
            let r: Vec<f64> = components.iter().map(|c| c.rho2).collect();
            asy_var_gaussian_raw(&w, &r)
        }
    }
}

/// Normal-theory interval `center +- z * sqrt(variance / n)`.
pub fn interval_from_variance(
    center: f64,
    raw_variance: f64,
    n: usize,
    level: f64,
    variant: Option<VarianceVariant>,
) -> Result<ConfidenceInterval> {
    check_level(level)?;
    if n == 0 {
        return Err(GpcsError::InvalidArgument("n must be positive".into()));
    }
    let clamped = raw_variance < 0.0;
    let se = (raw_variance.max(0.0) / n as f64).sqrt();
    let z = normal::two_sided_z(level);
    Ok(ConfidenceInterval {
        lower: center - z * se,
        upper: center + z * se,
        level,
        method: CiMethod::PluginAsymptotic,
        variant,
        se,
        variance_clamped: clamped,
        replicates: None,
    })
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(GpcsError::InvalidArgument(format!("level {level} must lie in (0, 1)")));
    }
    Ok(())
}

/// Plug-in interval: the variance formula evaluated at the estimate's own
/// component statistics. Unspecified estimates reuse the recorded partition.
pub fn plugin_ci(estimate: &GcsEstimate, n: usize, level: f64, variant: VarianceVariant) -> Result<ConfidenceInterval> {
    let v = component_variance_raw(&estimate.components, variant)?;
    interval_from_variance(estimate.value, v, n, level, Some(variant))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    /// Resample from per-component Gaussian fits.
    Parametric,
    /// Resample observations with replacement.
    Nonparametric,
}

/// Which measure the bootstrap recomputes on every replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BootstrapTarget {
    Specified,
    /// Refits K-lines per replicate with a fresh seed.
    Unspecified { k: usize, config: KlinesConfig },
}

pub const MIN_BOOTSTRAP_REPLICATES: usize = 100;
/// Largest tolerated fraction of failed replicates.
pub const MAX_BOOTSTRAP_FAILURE_RATE: f64 = 0.10;

/// Bootstrap replicate values of the measure. Failed replicates are
/// dropped; returns `(values, dropped)`.
pub fn bootstrap_replicates(
    sample: &BivariateSample,
    target: BootstrapTarget,
    b: usize,
    mode: BootstrapMode,
    seed: u64,
) -> Result<(Vec<f64>, usize)> {
    if b < MIN_BOOTSTRAP_REPLICATES {
        return Err(GpcsError::InvalidArgument(format!(
            "need at least {MIN_BOOTSTRAP_REPLICATES} bootstrap replicates, got {b}"
        )));
    }
    let base = estimate_for(sample, target, seed)?;
    let model = match mode {
        BootstrapMode::Parametric => Some(gaussian_components(&base)),
        BootstrapMode::Nonparametric => None,
    };
    let points = sample.points();
    let n = points.len();

    let results: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, rep as u64);
            let resampled = match &model {
                Some(components) => {
                    let (pts, labels) = draw_mixture(components, n, &mut rng);
                    match target {
                        BootstrapTarget::Specified => BivariateSample::with_labels(pts, labels),
                        BootstrapTarget::Unspecified { .. } => BivariateSample::new(pts),
                    }
                }
                None => {
                    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    let pts: Vec<BivariatePoint> = idx.iter().map(|&i| points[i]).collect();
                    match sample.labels() {
                        Some(l) if matches!(target, BootstrapTarget::Specified) => {
                            BivariateSample::with_labels(pts, idx.iter().map(|&i| l[i]).collect())
                        }
                        _ => BivariateSample::new(pts),
                    }
                }
            };
            let replicate_seed = derive_seed(seed, rep as u64);
            resampled
                .and_then(|s| estimate_for(&s, target, replicate_seed))
                .ok()
                .map(|e| e.value)
        })
        .collect();

    let dropped = results.iter().filter(|r| r.is_none()).count();
    if dropped as f64 > MAX_BOOTSTRAP_FAILURE_RATE * b as f64 {
        return Err(GpcsError::TooManyFailures { dropped, total: b });
    }
    Ok((results.into_iter().flatten().collect(), dropped))
}

/// Normal-theory bootstrap interval `value +- z * sd(replicates)`.
pub fn bootstrap_ci(
    sample: &BivariateSample,
    target: BootstrapTarget,
    b: usize,
    mode: BootstrapMode,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval> {
    check_level(level)?;
    let estimate = estimate_for(sample, target, seed)?;
    let (values, dropped) = bootstrap_replicates(sample, target, b, mode, seed)?;
    let se = sample_sd(&values);
    let z = normal::two_sided_z(level);
    Ok(ConfidenceInterval {
        lower: estimate.value - z * se,
        upper: estimate.value + z * se,
        level,
        method: CiMethod::Bootstrap,
        variant: None,
        se,
        variance_clamped: false,
        replicates: Some((values.len(), dropped)),
    })
}

fn estimate_for(sample: &BivariateSample, target: BootstrapTarget, seed: u64) -> Result<GcsEstimate> {
    match target {
        BootstrapTarget::Specified => r2_gs(sample),
        BootstrapTarget::Unspecified { k, config } => r2_gu(sample.points(), k, &config.with_seed(seed)),
    }
}

/// Gaussian mixture with the plug-in weights, means and covariances of an
/// estimate's components. Empty components are skipped.
pub fn gaussian_components(estimate: &GcsEstimate) -> Vec<MixtureComponent> {
    estimate
        .components
        .iter()
        .filter(|c| c.weight > 0.0)
        .map(|c| MixtureComponent {
            weight: c.weight,
            mean: [c.mean_x, c.mean_y],
            shape: [[c.var_x, c.cov_xy], [c.cov_xy, c.var_y]],
            family: Family::Gaussian,
            dof: None,
        })
        .collect()
}

/// Standard deviation with the `n - 1` denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Scenario of an estimate expressed as a bootstrap target.
pub fn target_of(estimate: &GcsEstimate, config: KlinesConfig) -> BootstrapTarget {
    match estimate.scenario {
        Scenario::Specified => BootstrapTarget::Specified,
        Scenario::Unspecified => BootstrapTarget::Unspecified { k: estimate.k, config },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StdMoment;

    fn gaussian_component(weight: f64, rho: f64) -> ComponentSummary {
        let r2 = rho * rho;
        let moments = [
            (0, 0, 1.0),
            (1, 1, rho),
            (2, 0, 1.0),
            (0, 2, 1.0),
            (4, 0, 3.0),
            (0, 4, 3.0),
            (3, 1, 3.0 * rho),
            (1, 3, 3.0 * rho),
            (2, 2, 1.0 + 2.0 * r2),
        ];
        ComponentSummary {
            weight,
            count: 0,
            mean_x: 0.0,
            mean_y: 0.0,
            var_x: 1.0,
            var_y: 1.0,
            cov_xy: rho,
            rho2: r2,
            std_moments: moments.iter().map(|&(c, d, value)| StdMoment { c, d, value }).collect(),
        }
    }

    #[test]
    fn k1_gaussian_matches_r2_limit() {
        // 4 * 0.64 * 0.36^2
        let v = asy_var_general(&[gaussian_component(1.0, 0.8)]).unwrap();
        assert!((v - 0.331_776).abs() < 1e-12);
        let g = asy_var_gaussian(&[1.0], &[0.64]).unwrap();
        assert!((g - 0.331_776).abs() < 1e-12);
    }

    #[test]
    fn setting_two_closed_form() {
        let v = asy_var_gaussian(&[0.5, 0.5], &[0.64, 0.64]).unwrap();
        assert!((v - 0.331_776).abs() < 1e-12);
    }

    #[test]
    fn zero_correlations_give_zero() {
        assert_eq!(asy_var_gaussian(&[0.3, 0.7], &[0.0, 0.0]).unwrap(), 0.0);
        let comps = vec![gaussian_component(0.4, 0.0), gaussian_component(0.6, 0.0)];
        assert_eq!(asy_var_general(&comps).unwrap(), 0.0);
    }

    #[test]
    fn negative_correlation_sign_matters() {
        // odd-moment term flips with the sign of rho when the moments do not
        let mut comp = gaussian_component(1.0, 0.6);
        let pos = asy_var_general(&[comp.clone()]).unwrap();
        for m in comp.std_moments.iter_mut() {
            if m.c == 1 && m.d == 1 {
                m.value = -0.6;
            }
        }
        let neg = asy_var_general(&[comp]).unwrap();
        assert!((pos - neg).abs() > 0.1);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            asy_var_gaussian(&[0.5], &[0.1, 0.2]),
            Err(GpcsError::DimensionMismatch(_))
        ));
        let mut comp = gaussian_component(1.0, 0.5);
        comp.std_moments.retain(|m| !(m.c == 2 && m.d == 2));
        assert_eq!(
            asy_var_general(&[comp]),
            Err(GpcsError::MissingMoments { component: 0, c: 2, d: 2 })
        );
    }

    #[test]
    fn degenerate_interval() {
        let est = GcsEstimate {
            value: 1.0,
            scenario: Scenario::Specified,
            k: 2,
            n: 10,
            components: vec![
                ComponentSummary { rho2: 1.0, ..gaussian_component(0.5, 1.0) },
                ComponentSummary { rho2: 1.0, ..gaussian_component(0.5, -1.0) },
            ],
            fit: None,
        };
        let ci = plugin_ci(&est, 10, 0.95, VarianceVariant::GaussianClosedForm).unwrap();
        // p(1-p) - 2 p^2 with p=1/2 cancels exactly
        assert_eq!((ci.lower, ci.upper), (1.0, 1.0));
    }

    #[test]
    fn interval_validates_level() {
        assert!(interval_from_variance(0.5, 0.1, 10, 1.0, None).is_err());
        assert!(interval_from_variance(0.5, 0.1, 10, 0.0, None).is_err());
        let ci = interval_from_variance(0.5, -1e-12, 10, 0.9, None).unwrap();
        assert!(ci.variance_clamped);
        assert_eq!(ci.se, 0.0);
    }

    #[test]
    fn sd_uses_bessel() {
        assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(sample_sd(&[2.0]), 0.0);
    }
}
