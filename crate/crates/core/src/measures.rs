//! Sample-level generalized Pearson correlation squares.
//!
//! Both measures are `sum_k p_k * rho2_k` over line components. In the
//! specified scenario the components come from observed labels; in the
//! unspecified scenario they come from the nearest-line labels of a K-lines
//! fit.

use serde::{Deserialize, Serialize};

use crate::error::{GpcsError, Result};
use crate::geometry::{class_summaries, remap_labels, BivariatePoint, BivariateSample, ComponentSummary};
use crate::klines::{klines_fit, select_k_aic, FitResult, KlinesConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Specified,
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcsEstimate {
    pub value: f64,
    pub scenario: Scenario,
    pub k: usize,
    pub n: usize,
    pub components: Vec<ComponentSummary>,
    /// The K-lines fit behind an unspecified-scenario estimate.
    pub fit: Option<FitResult>,
}

impl GcsEstimate {
    fn from_components(scenario: Scenario, n: usize, components: Vec<ComponentSummary>, fit: Option<FitResult>) -> Self {
        let value = weighted_value(&components);
        Self { value, scenario, k: components.len(), n, components, fit }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn rho2s(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.rho2).collect()
    }
}

/// `sum_k weight_k * rho2_k`, clamped into `[0, 1]`.
pub fn weighted_value(components: &[ComponentSummary]) -> f64 {
    components
        .iter()
        .map(|c| c.weight * c.rho2)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Measure from a labeled partition with labels in `1..=k`.
pub fn gcs_from_labels(
    points: &[BivariatePoint],
    labels: &[usize],
    k: usize,
    scenario: Scenario,
    fit: Option<FitResult>,
) -> GcsEstimate {
    let components = class_summaries(points, labels, k);
    GcsEstimate::from_components(scenario, points.len(), components, fit)
}

/// Specified-scenario measure. K is the number of distinct labels, and
/// component k is the k-th label value to appear in the sample.
pub fn r2_gs(sample: &BivariateSample) -> Result<GcsEstimate> {
    let labels = sample.labels().ok_or(GpcsError::MissingLabels)?;
    let (compact, distinct) = remap_labels(labels);
    Ok(gcs_from_labels(sample.points(), &compact, distinct.len(), Scenario::Specified, None))
}

/// Unspecified-scenario measure at a fixed K.
pub fn r2_gu(points: &[BivariatePoint], k: usize, config: &KlinesConfig) -> Result<GcsEstimate> {
    let needed = k.max(2);
    if points.len() < needed {
        return Err(GpcsError::InsufficientData { needed, got: points.len() });
    }
    let fit = klines_fit(points, k, config)?;
    let k_fit = fit.k();
    let labels = fit.labels.clone();
    Ok(gcs_from_labels(points, &labels, k_fit, Scenario::Unspecified, Some(fit)))
}

/// Unspecified-scenario measure with K chosen by AIC over `1..=k_max`.
pub fn r2_gu_auto(points: &[BivariatePoint], k_max: usize, config: &KlinesConfig) -> Result<GcsEstimate> {
    let k = select_k_aic(points, k_max, config)?;
    r2_gu(points, k, config)
}
