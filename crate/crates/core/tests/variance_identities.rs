use gpcs::geometry::{component_summary, BivariatePoint, ComponentSummary, StdMoment};
use gpcs::inference::{asy_var_gaussian_raw, asy_var_general_raw};
use gpcs::rng::stream;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Standardized moments of a bivariate normal with correlation rho, from
/// Isserlis' theorem.
fn gaussian_component(weight: f64, rho: f64) -> ComponentSummary {
    let moments = [
        (1, 1, rho),
        (4, 0, 3.0),
        (0, 4, 3.0),
        (3, 1, 3.0 * rho),
        (1, 3, 3.0 * rho),
        (2, 2, 1.0 + 2.0 * rho * rho),
    ];
    ComponentSummary {
        weight,
        count: 0,
        mean_x: 0.0,
        mean_y: 0.0,
        var_x: 1.0,
        var_y: 1.0,
        cov_xy: rho,
        rho2: rho * rho,
        std_moments: moments.iter().map(|&(c, d, value)| StdMoment { c, d, value }).collect(),
    }
}

#[test]
fn general_form_reduces_to_gaussian_form() {
    let mut rng = stream(2024, 0);
    for _ in 0..1000 {
        let k = rng.random_range(1..=6);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let rhos: Vec<f64> = (0..k).map(|_| rng.random_range(-0.99..0.99)).collect();
        let comps: Vec<_> = weights.iter().zip(&rhos).map(|(&w, &r)| gaussian_component(w, r)).collect();
        let rho2s: Vec<f64> = rhos.iter().map(|r| r * r).collect();
        let general = asy_var_general_raw(&comps).unwrap();
        let gaussian = asy_var_gaussian_raw(&weights, &rho2s).unwrap();
        assert!((general - gaussian).abs() < 1e-10, "{general} vs {gaussian}");
    }
}

#[test]
fn single_component_reduces_to_pearson_variance() {
    for i in 0..=200 {
        let rho = -1.0 + i as f64 / 100.0;
        let r2: f64 = rho * rho;
        let expected = 4.0 * r2 * (1.0 - r2).powi(2);
        let gaussian = asy_var_gaussian_raw(&[1.0], &[r2]).unwrap();
        let general = asy_var_general_raw(&[gaussian_component(1.0, rho)]).unwrap();
        assert!((gaussian - expected).abs() < 1e-12);
        assert!((general - expected).abs() < 1e-12);
    }
}

#[test]
fn sample_moments_of_gaussian_data_match_isserlis() {
    let mut rng = stream(99, 0);
    let rho: f64 = -0.6;
    let s = (1.0 - rho * rho).sqrt();
    let pts: Vec<BivariatePoint> = (0..200_000)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            BivariatePoint::new(3.0 + 2.0 * z1, -1.0 + 0.5 * (rho * z1 + s * z2))
        })
        .collect();
    let est = component_summary(&pts);
    let oracle = gaussian_component(1.0, rho);
    for m in &oracle.std_moments {
        let got = est.moment(m.c, m.d).unwrap();
        assert!((got - m.value).abs() < 0.06, "({}, {}) {got} vs {}", m.c, m.d, m.value);
    }
    let v_est = asy_var_general_raw(&[est.with_weight(1.0)]).unwrap();
    let v_true = 4.0 * rho * rho * (1.0 - rho * rho).powi(2);
    assert!((v_est - v_true).abs() < 0.02, "{v_est} vs {v_true}");
}
