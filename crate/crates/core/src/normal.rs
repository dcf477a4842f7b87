//! Standard normal helpers on top of `statrs`.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn standard() -> Normal {
    Normal::standard()
}

/// Inverse standard normal CDF. Returns `-inf` / `+inf` at 0 / 1 and NaN
/// outside `[0, 1]`.
pub fn quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    standard().inverse_cdf(p)
}

/// Two-sided critical value `z_{(1 + level) / 2}`.
pub fn two_sided_z(level: f64) -> f64 {
    quantile(0.5 * (1.0 + level))
}

pub fn cdf(z: f64) -> f64 {
    standard().cdf(z)
}

pub fn pdf(z: f64) -> f64 {
    standard().pdf(z)
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `values` and the standard normal.
pub fn ks_distance(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}
