//! Bivariate Gaussian / Student-t mixture generators, population targets
//! and the coverage-probability harness.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GpcsError, Result};
use crate::geometry::{BivariatePoint, BivariateSample, ComponentSummary, StdMoment};
use crate::inference::{
    bootstrap_ci, component_variance_raw, interval_from_variance, plugin_ci, BootstrapMode,
    BootstrapTarget, ConfidenceInterval, VarianceVariant,
};
use crate::klines::{select_k_aic, KlinesConfig};
use crate::measures::{r2_gs, r2_gu, GcsEstimate, Scenario};
use crate::normal;
use crate::rng::{derive_seed, stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    StudentT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: [f64; 2],
    /// Covariance for Gaussian components, shape matrix for Student-t.
    pub shape: [[f64; 2]; 2],
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dof: Option<f64>,
}

impl MixtureComponent {
    pub fn shape_rho2(&self) -> f64 {
        let [[a, c], [_, b]] = self.shape;
        if a > 0.0 && b > 0.0 {
            c * c / (a * b)
        } else {
            0.0
        }
    }

    fn shape_rho(&self) -> f64 {
        let [[a, c], [_, b]] = self.shape;
        if a > 0.0 && b > 0.0 {
            c / (a * b).sqrt()
        } else {
            0.0
        }
    }

    /// Fourth-moment inflation relative to a Gaussian: `(nu - 2) / (nu - 4)`
    /// for Student-t; `None` when the fourth moments are infinite.
    pub fn kurtosis_factor(&self) -> Option<f64> {
        match (self.family, self.dof) {
            (Family::Gaussian, _) => Some(1.0),
            (Family::StudentT, Some(nu)) if nu > 4.0 => Some((nu - 2.0) / (nu - 4.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(GpcsError::InvalidSpec("no components".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(GpcsError::InvalidSpec(format!("weights sum to {total}, not 1")));
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(GpcsError::InvalidSpec(format!("component {i}: weight outside (0, 1]")));
            }
            if !c.mean.iter().all(|m| m.is_finite()) {
                return Err(GpcsError::InvalidSpec(format!("component {i}: non-finite mean")));
            }
            let [[a, b], [b2, d]] = c.shape;
            if b != b2 {
                return Err(GpcsError::InvalidSpec(format!("component {i}: shape not symmetric")));
            }
            if !(a > 0.0 && a * d - b * b > 0.0) {
                return Err(GpcsError::InvalidSpec(format!(
                    "component {i}: shape not positive definite"
                )));
            }
            match (c.family, c.dof) {
                (Family::Gaussian, None) => {}
                (Family::StudentT, Some(nu)) if nu > 2.0 && nu.is_finite() => {}
                (Family::Gaussian, Some(_)) => {
                    return Err(GpcsError::InvalidSpec(format!("component {i}: dof given for Gaussian")))
                }
                (Family::StudentT, _) => {
                    return Err(GpcsError::InvalidSpec(format!(
                        "component {i}: Student-t needs dof > 2"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn is_gaussian(&self) -> bool {
        self.components.iter().all(|c| c.family == Family::Gaussian)
    }
}

fn corr(rho: f64) -> [[f64; 2]; 2] {
    [[1.0, rho], [rho, 1.0]]
}

/// The eight built-in simulation settings. Settings 5-8 repeat 1-4 with
/// Student-t components on 8 degrees of freedom.
pub fn builtin_setting(id: u32) -> Result<MixtureSpec> {
    let base = match id {
        1 | 5 => vec![(0.5, [0.0, -2.0], 0.8), (0.5, [0.0, 2.0], 0.8)],
        2 | 6 => vec![(0.5, [0.0, 0.0], 0.8), (0.5, [0.0, 0.0], -0.8)],
        3 | 7 => vec![(0.3, [0.0, -2.0], 0.8), (0.7, [0.0, 2.0], -0.8)],
        4 | 8 => vec![(0.25, [0.0, -2.0], 0.8), (0.5, [0.0, 6.0], -0.7), (0.25, [-2.0, 2.0], 0.9)],
        other => return Err(GpcsError::UnknownSetting(other)),
    };
    let (family, dof) = if id <= 4 { (Family::Gaussian, None) } else { (Family::StudentT, Some(8.0)) };
    Ok(MixtureSpec {
        components: base
            .into_iter()
            .map(|(weight, mean, rho)| MixtureComponent { weight, mean, shape: corr(rho), family, dof })
            .collect(),
    })
}

/// Lower-triangular factor of a 2x2 positive semi-definite matrix.
fn psd_cholesky(s: &[[f64; 2]; 2]) -> (f64, f64, f64) {
    let l11 = s[0][0].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { s[1][0] / l11 } else { 0.0 };
    let l22 = (s[1][1] - l21 * l21).max(0.0).sqrt();
    (l11, l21, l22)
}

/// Draws `n` points from the mixture with their 1-based component labels.
/// Shapes only need to be positive semi-definite.
pub fn draw_mixture(components: &[MixtureComponent], n: usize, rng: &mut StreamRng) -> (Vec<BivariatePoint>, Vec<usize>) {
    let factors: Vec<_> = components.iter().map(|c| psd_cholesky(&c.shape)).collect();
    let chi: Vec<Option<ChiSquared<f64>>> = components
        .iter()
        .map(|c| match (c.family, c.dof) {
            (Family::StudentT, Some(nu)) => ChiSquared::new(nu).ok(),
            _ => None,
        })
        .collect();
    let total: f64 = components.iter().map(|c| c.weight).sum();
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let mut k = components.len() - 1;
        let mut acc = 0.0;
        for (i, c) in components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                k = i;
                break;
            }
        }
        let comp = &components[k];
        let (l11, l21, l22) = factors[k];
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let scale = match &chi[k] {
            Some(dist) => {
                let nu = comp.dof.expect("t component has dof");
                (nu / dist.sample(rng)).sqrt()
            }
            None => 1.0,
        };
        points.push(BivariatePoint::new(
            comp.mean[0] + scale * l11 * z1,
            comp.mean[1] + scale * (l21 * z1 + l22 * z2),
        ));
        labels.push(k + 1);
    }
    (points, labels)
}

/// i.i.d. sample of size `n`; labels attached when `with_labels`.
pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: u64, with_labels: bool) -> Result<BivariateSample> {
    spec.validate()?;
    if n == 0 {
        return Err(GpcsError::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = stream(seed, 0);
    let (points, labels) = draw_mixture(&spec.components, n, &mut rng);
    if with_labels {
        BivariateSample::with_labels(points, labels)
    } else {
        BivariateSample::new(points)
    }
}

/// Population specified measure `sum_k p_k rho2_k` from the shape matrices.
pub fn population_rho2_gs(spec: &MixtureSpec) -> f64 {
    spec.components.iter().map(|c| c.weight * c.shape_rho2()).sum()
}

/// Exact per-component population summaries: weights, means, covariances,
/// correlations and standardized moments up to order 4 (elliptical
/// identities; odd orders vanish).
pub fn population_components(spec: &MixtureSpec) -> Vec<ComponentSummary> {
    spec.components
        .iter()
        .map(|c| {
            let var_scale = match (c.family, c.dof) {
                (Family::StudentT, Some(nu)) if nu > 2.0 => nu / (nu - 2.0),
                _ => 1.0,
            };
            let rho = c.shape_rho();
            let mut moments = vec![
                StdMoment { c: 0, d: 0, value: 1.0 },
                StdMoment { c: 1, d: 0, value: 0.0 },
                StdMoment { c: 0, d: 1, value: 0.0 },
                StdMoment { c: 2, d: 0, value: 1.0 },
                StdMoment { c: 1, d: 1, value: rho },
                StdMoment { c: 0, d: 2, value: 1.0 },
                StdMoment { c: 3, d: 0, value: 0.0 },
                StdMoment { c: 2, d: 1, value: 0.0 },
                StdMoment { c: 1, d: 2, value: 0.0 },
                StdMoment { c: 0, d: 3, value: 0.0 },
            ];
            if let Some(kappa) = c.kurtosis_factor() {
                moments.extend([
                    StdMoment { c: 4, d: 0, value: 3.0 * kappa },
                    StdMoment { c: 3, d: 1, value: 3.0 * rho * kappa },
                    StdMoment { c: 2, d: 2, value: (1.0 + 2.0 * rho * rho) * kappa },
                    StdMoment { c: 1, d: 3, value: 3.0 * rho * kappa },
                    StdMoment { c: 0, d: 4, value: 3.0 * kappa },
                ]);
            }
            ComponentSummary {
                weight: c.weight,
                count: 0,
                mean_x: c.mean[0],
                mean_y: c.mean[1],
                var_x: c.shape[0][0] * var_scale,
                var_y: c.shape[1][1] * var_scale,
                cov_xy: c.shape[0][1] * var_scale,
                rho2: c.shape_rho2(),
                std_moments: moments,
            }
        })
        .collect()
}

/// The variance variant that matches the spec's family: closed form for
/// all-Gaussian mixtures, general moments otherwise.
pub fn natural_variant(spec: &MixtureSpec) -> VarianceVariant {
    if spec.is_gaussian() {
        VarianceVariant::GaussianClosedForm
    } else {
        VarianceVariant::GeneralMoments
    }
}

/// Asymptotic variance of the specified measure at the true parameters.
pub fn population_variance_gs(spec: &MixtureSpec) -> Result<f64> {
    component_variance_raw(&population_components(spec), natural_variant(spec)).map(|v| v.max(0.0))
}

pub const MIN_REFERENCE_N: usize = 10_000;

/// Large-sample unspecified estimate used as the population reference.
pub fn population_gu_reference(
    spec: &MixtureSpec,
    big_n: usize,
    k: usize,
    seed: u64,
    config: &KlinesConfig,
) -> Result<GcsEstimate> {
    if big_n < MIN_REFERENCE_N {
        return Err(GpcsError::InvalidArgument(format!(
            "reference sample size must be at least {MIN_REFERENCE_N}"
        )));
    }
    let sample = sample_mixture(spec, big_n, seed, false)?;
    r2_gu(sample.points(), k, &config.with_seed(derive_seed(seed, 1)))
}

/// Monte-Carlo surrogate for the population unspecified measure: the
/// sample measure on one sample of size `big_n`.
pub fn population_rho2_gu_mc(spec: &MixtureSpec, big_n: usize, k: usize, seed: u64, config: &KlinesConfig) -> Result<f64> {
    population_gu_reference(spec, big_n, k, seed, config).map(|e| e.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMethod {
    /// True asymptotic variance.
    Asymp,
    /// Plug-in Gaussian closed form.
    P1,
    /// Plug-in general moments.
    P2,
    Bootstrap,
}

impl CoverageMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CoverageMethod::Asymp => "asymp",
            CoverageMethod::P1 => "p1",
            CoverageMethod::P2 => "p2",
            CoverageMethod::Bootstrap => "bootstrap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asymp" => Some(Self::Asymp),
            "p1" => Some(Self::P1),
            "p2" => Some(Self::P2),
            "bootstrap" | "boot" => Some(Self::Bootstrap),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KChoice {
    /// K of the generating mixture.
    True,
    /// AIC over `1..=k_max` on every replicate.
    Aic { k_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageOptions {
    pub level: f64,
    pub bootstrap_b: usize,
    /// Defaults to parametric for Gaussian mixtures, nonparametric otherwise.
    pub bootstrap_mode: Option<BootstrapMode>,
    pub reference_n: usize,
    pub k_choice: KChoice,
    pub klines: KlinesConfig,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self {
            level: 0.95,
            bootstrap_b: 200,
            bootstrap_mode: None,
            reference_n: MIN_REFERENCE_N,
            k_choice: KChoice::True,
            klines: KlinesConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub setting_id: Option<u32>,
    pub n: usize,
    /// Replicates that produced an interval.
    pub reps: usize,
    pub failures: usize,
    pub scenario: Scenario,
    pub method: CoverageMethod,
    pub covered: usize,
    /// `covered / reps`
    pub coverage: f64,
    pub target: f64,
    pub mean_width: f64,
}

pub const MIN_COVERAGE_REPS: usize = 100;

/// Fraction of intervals containing `target`, with the hit count.
pub fn count_coverage(intervals: &[ConfidenceInterval], target: f64) -> (usize, f64) {
    let covered = intervals.iter().filter(|ci| ci.contains(target)).count();
    let frac = if intervals.is_empty() { 0.0 } else { covered as f64 / intervals.len() as f64 };
    (covered, frac)
}

/// Coverage of the requested interval methods over `reps` simulated samples
/// of size `n`. The unspecified-scenario target is a single large-sample
/// reference shared by all methods.
#[allow(clippy::too_many_arguments)]
pub fn coverage_experiment(
    spec: &MixtureSpec,
    setting_id: Option<u32>,
    n: usize,
    reps: usize,
    scenario: Scenario,
    methods: &[CoverageMethod],
    seed: u64,
    options: &CoverageOptions,
) -> Result<Vec<CoverageReport>> {
    spec.validate()?;
    if reps < MIN_COVERAGE_REPS {
        return Err(GpcsError::InvalidArgument(format!(
            "need at least {MIN_COVERAGE_REPS} replicates, got {reps}"
        )));
    }
    if methods.is_empty() {
        return Err(GpcsError::InvalidArgument("no coverage methods requested".into()));
    }
    let k_true = spec.k();
    let variant = natural_variant(spec);

    // target and true asymptotic variance
    let (target, true_var) = match scenario {
        Scenario::Specified => (population_rho2_gs(spec), population_variance_gs(spec)?),
        Scenario::Unspecified => {
            let reference = population_gu_reference(
                spec,
                options.reference_n,
                k_true,
                derive_seed(seed, u64::MAX),
                &options.klines,
            )?;
            let v = component_variance_raw(&reference.components, variant)?.max(0.0);
            (reference.value, v)
        }
    };
    let boot_mode = options.bootstrap_mode.unwrap_or(if spec.is_gaussian() {
        BootstrapMode::Parametric
    } else {
        BootstrapMode::Nonparametric
    });

    let per_rep: Vec<Option<Vec<ConfidenceInterval>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, rep as u64);
            replicate_intervals(spec, n, scenario, methods, rep_seed, true_var, boot_mode, options).ok()
        })
        .collect();

    let failures = per_rep.iter().filter(|r| r.is_none()).count();
    let ok: Vec<&Vec<ConfidenceInterval>> = per_rep.iter().flatten().collect();
    Ok(methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let cis: Vec<ConfidenceInterval> = ok.iter().map(|v| v[mi].clone()).collect();
            let (covered, coverage) = count_coverage(&cis, target);
            let mean_width = if cis.is_empty() {
                0.0
            } else {
                cis.iter().map(|c| c.width()).sum::<f64>() / cis.len() as f64
            };
            CoverageReport {
                setting_id,
                n,
                reps: cis.len(),
                failures,
                scenario,
                method,
                covered,
                coverage,
                target,
                mean_width,
            }
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn replicate_intervals(
    spec: &MixtureSpec,
    n: usize,
    scenario: Scenario,
    methods: &[CoverageMethod],
    rep_seed: u64,
    true_var: f64,
    boot_mode: BootstrapMode,
    options: &CoverageOptions,
) -> Result<Vec<ConfidenceInterval>> {
    let sample = sample_mixture(spec, n, derive_seed(rep_seed, 0), scenario == Scenario::Specified)?;
    let fit_seed = derive_seed(rep_seed, 1);
    let config = options.klines.with_seed(fit_seed);
    let (estimate, target) = match scenario {
        Scenario::Specified => (r2_gs(&sample)?, BootstrapTarget::Specified),
        Scenario::Unspecified => {
            let k = match options.k_choice {
                KChoice::True => spec.k(),
                KChoice::Aic { k_max } => select_k_aic(sample.points(), k_max, &config)?,
            };
            (r2_gu(sample.points(), k, &config)?, BootstrapTarget::Unspecified { k, config })
        }
    };
    methods
        .iter()
        .map(|m| match m {
            CoverageMethod::Asymp => interval_from_variance(estimate.value, true_var, n, options.level, None),
            CoverageMethod::P1 => plugin_ci(&estimate, n, options.level, VarianceVariant::GaussianClosedForm),
            CoverageMethod::P2 => plugin_ci(&estimate, n, options.level, VarianceVariant::GeneralMoments),
            CoverageMethod::Bootstrap => bootstrap_ci(
                &sample,
                target,
                options.bootstrap_b,
                boot_mode,
                options.level,
                derive_seed(rep_seed, 2),
            ),
        })
        .collect()
}

/// Finite-sample vs. asymptotic agreement of the specified measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub n: usize,
    pub reps: usize,
    pub target: f64,
    pub asymptotic_variance: f64,
    /// `sqrt(n) (R^2 - rho^2) / sqrt(V)` per replicate.
    pub standardized: Vec<f64>,
    pub ks_distance: f64,
}

/// Simulates `reps` specified-scenario samples and measures the
/// Kolmogorov-Smirnov distance of the standardized statistic to N(0, 1).
pub fn asymptotic_agreement(spec: &MixtureSpec, n: usize, reps: usize, seed: u64) -> Result<AgreementReport> {
    spec.validate()?;
    let target = population_rho2_gs(spec);
    let v = population_variance_gs(spec)?;
    if !(v > 0.0) {
        return Err(GpcsError::InvalidArgument("asymptotic variance is zero".into()));
    }
    let sd = v.sqrt();
    let standardized: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let s = sample_mixture(spec, n, derive_seed(seed, rep as u64), true)?;
            let est = r2_gs(&s)?;
            Ok((n as f64).sqrt() * (est.value - target) / sd)
        })
        .collect::<Result<_>>()?;
    let ks = normal::ks_distance(&standardized);
    Ok(AgreementReport { n, reps, target, asymptotic_variance: v, standardized, ks_distance: ks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_settings() {
        let s1 = builtin_setting(1).unwrap();
        assert_eq!(s1.k(), 2);
        assert_eq!(s1.components[0].mean, [0.0, -2.0]);
        assert_eq!(s1.components[1].mean, [0.0, 2.0]);
        assert_eq!(s1.components[0].shape, [[1.0, 0.8], [0.8, 1.0]]);
        assert!(s1.is_gaussian());

        let s5 = builtin_setting(5).unwrap();
        assert_eq!(s5.components[0].family, Family::StudentT);
        assert_eq!(s5.components[1].dof, Some(8.0));
        assert_eq!(s5.components[0].mean, s1.components[0].mean);

        assert_eq!(builtin_setting(9), Err(GpcsError::UnknownSetting(9)));
        assert_eq!(builtin_setting(0), Err(GpcsError::UnknownSetting(0)));
        for id in 1..=8 {
            builtin_setting(id).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn population_gs_values() {
        assert!((population_rho2_gs(&builtin_setting(2).unwrap()) - 0.64).abs() < 1e-15);
        let expected = 0.25 * 0.64 + 0.5 * 0.49 + 0.25 * 0.81;
        assert!((population_rho2_gs(&builtin_setting(4).unwrap()) - expected).abs() < 1e-15);
        let indep = MixtureSpec {
            components: vec![MixtureComponent {
                weight: 1.0,
                mean: [0.0, 0.0],
                shape: corr(0.0),
                family: Family::Gaussian,
                dof: None,
            }],
        };
        assert_eq!(population_rho2_gs(&indep), 0.0);
    }

    #[test]
    fn spec_validation() {
        let mut s = builtin_setting(1).unwrap();
        s.components[0].weight = 0.6;
        assert!(s.validate().is_err());

        let mut s = builtin_setting(1).unwrap();
        s.components[0].shape = [[1.0, 2.0], [2.0, 1.0]];
        assert!(s.validate().is_err());

        let mut s = builtin_setting(5).unwrap();
        s.components[0].dof = None;
        assert!(s.validate().is_err());

        let mut s = builtin_setting(1).unwrap();
        s.components[0].dof = Some(5.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let spec = builtin_setting(7).unwrap();
        let a = sample_mixture(&spec, 500, 3, true).unwrap();
        let b = sample_mixture(&spec, 500, 3, true).unwrap();
        let c = sample_mixture(&spec, 500, 4, true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(sample_mixture(&spec, 0, 3, true).is_err());
    }

    #[test]
    fn labels_identify_components() {
        let spec = builtin_setting(1).unwrap();
        let s = sample_mixture(&spec, 4000, 8, true).unwrap();
        let labels = s.labels().unwrap();
        let mean_y = |k: usize| {
            let v: Vec<f64> = s.points().iter().zip(labels).filter(|(_, &l)| l == k).map(|(p, _)| p.y).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean_y(1) < -1.5 && mean_y(2) > 1.5);
    }

    #[test]
    fn t_kurtosis_factor() {
        let c = &builtin_setting(5).unwrap().components[0];
        assert!((c.kurtosis_factor().unwrap() - 1.5).abs() < 1e-15);
        let pc = population_components(&builtin_setting(5).unwrap());
        assert!((pc[0].moment(4, 0).unwrap() - 4.5).abs() < 1e-15);
        assert!((pc[0].var_x - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_oracle_interval_covers_everything() {
        let ci = ConfidenceInterval {
            lower: 0.0,
            upper: 1.0,
            level: 0.95,
            method: crate::inference::CiMethod::PluginAsymptotic,
            variant: None,
            se: 0.0,
            variance_clamped: false,
            replicates: None,
        };
        let cis = vec![ci; 250];
        assert_eq!(count_coverage(&cis, 0.37), (250, 1.0));
    }

    #[test]
    fn coverage_rejects_few_reps() {
        let spec = builtin_setting(1).unwrap();
        let r = coverage_experiment(
            &spec,
            Some(1),
            50,
            10,
            Scenario::Specified,
            &[CoverageMethod::Asymp],
            1,
            &CoverageOptions::default(),
        );
        assert!(matches!(r, Err(GpcsError::InvalidArgument(_))));
    }
}
