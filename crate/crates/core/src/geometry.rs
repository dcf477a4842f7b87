//! Planar primitives shared by every other module: points and samples,
//! normalized lines, major-axis regression and per-component moment
//! summaries.
//!
//! All variances and covariances use the divide-by-n convention. This matters
//! at small n: a two-point cluster has `var_x = (x1 - x2)^2 / 4`, not `/ 2`.

use serde::{Deserialize, Serialize};

use crate::error::{GpcsError, Result};

/// Relative gap below which the two covariance eigenvalues count as equal.
pub const EIGEN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariatePoint {
    pub x: f64,
    pub y: f64,
}

impl BivariatePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn swapped(self) -> Self {
        Self { x: self.y, y: self.x }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for BivariatePoint {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Observations with optional line-membership labels in `1..=K`.
///
/// Construction rejects empty input, non-finite coordinates and label
/// vectors that do not line up with the points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BivariateSample {
    points: Vec<BivariatePoint>,
    labels: Option<Vec<usize>>,
}

impl BivariateSample {
    pub fn new(points: Vec<BivariatePoint>) -> Result<Self> {
        validate_points(&points)?;
        Ok(Self { points, labels: None })
    }

    /// Labels may be any positive integers and are stored as given.
    pub fn with_labels(points: Vec<BivariatePoint>, labels: Vec<usize>) -> Result<Self> {
        validate_points(&points)?;
        if labels.len() != points.len() {
            return Err(GpcsError::InvalidSample(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        if labels.contains(&0) {
            return Err(GpcsError::InvalidSample("labels must be >= 1".into()));
        }
        Ok(Self { points, labels: Some(labels) })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().copied().map(BivariatePoint::from).collect())
    }

    pub fn points(&self) -> &[BivariatePoint] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of distinct labels, or `None` for an unlabeled sample.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| remap_labels(l).1.len())
    }

    pub fn swapped(&self) -> Self {
        Self {
            points: self.points.iter().map(|p| p.swapped()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn into_parts(self) -> (Vec<BivariatePoint>, Option<Vec<usize>>) {
        (self.points, self.labels)
    }
}

fn validate_points(points: &[BivariatePoint]) -> Result<()> {
    if points.is_empty() {
        return Err(GpcsError::InvalidSample("sample is empty".into()));
    }
    if let Some(index) = points.iter().position(|p| !p.is_finite()) {
        return Err(GpcsError::NonFinite { index });
    }
    Ok(())
}

/// Maps arbitrary labels onto `1..=K` by order of first appearance.
/// Returns the remapped labels and the original value of each new label.
pub fn remap_labels(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut seen: Vec<usize> = Vec::new();
    let out = labels
        .iter()
        .map(|&l| match seen.iter().position(|&s| s == l) {
            Some(i) => i + 1,
            None => {
                seen.push(l);
                seen.len()
            }
        })
        .collect();
    (out, seen)
}

/// A line `a x + b y + c = 0` stored with `a^2 + b^2 = 1` and the sign fixed
/// so that `a > 0`, or `a == 0` and `b > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    a: f64,
    b: f64,
    c: f64,
}

impl Line {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let norm = a.hypot(b);
        if !(norm > 0.0) || !norm.is_finite() || !c.is_finite() {
            return Err(GpcsError::DegenerateLine);
        }
        let (mut a, mut b, mut c) = (a / norm, b / norm, c / norm);
        if a < 0.0 || (a == 0.0 && b < 0.0) {
            a = -a;
            b = -b;
            c = -c;
        }
        // -0.0 would break bitwise equality between equivalent lines
        if a == 0.0 {
            a = 0.0;
        }
        if b == 0.0 {
            b = 0.0;
        }
        Ok(Self { a, b, c })
    }

    /// The line through `point` running along `direction`.
    pub fn through(point: BivariatePoint, direction: (f64, f64)) -> Result<Self> {
        let (ux, uy) = direction;
        let a = uy;
        let b = -ux;
        Self::new(a, b, -(a * point.x + b * point.y))
    }

    /// The line through two distinct points.
    pub fn through_points(p: BivariatePoint, q: BivariatePoint) -> Result<Self> {
        Self::through(p, (q.x - p.x, q.y - p.y))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Unit direction vector along the line.
    pub fn direction(&self) -> (f64, f64) {
        (-self.b, self.a)
    }

    /// Mirror image under the reflection `(x, y) -> (y, x)`.
    pub fn reflected(&self) -> Self {
        Self::new(self.b, self.a, self.c).expect("reflection of a valid line is valid")
    }

    pub fn renormalized(&self) -> Self {
        Self::new(self.a, self.b, self.c).expect("normalized line stays valid")
    }

    pub fn signed_distance(&self, p: BivariatePoint) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }
}

/// Perpendicular distance from `p` to `line`.
pub fn perp_distance(p: BivariatePoint, line: &Line) -> f64 {
    line.signed_distance(p).abs()
}

/// Second-order moments with the divide-by-n convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments2 {
    pub n: usize,
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
}

impl Moments2 {
    pub fn from_iter<'a, I>(points: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a BivariatePoint> + Clone,
    {
        let mut n = 0usize;
        let (mut sx, mut sy) = (0.0, 0.0);
        for p in points.clone() {
            n += 1;
            sx += p.x;
            sy += p.y;
        }
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        let (mean_x, mean_y) = (sx / nf, sy / nf);
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for p in points {
            let dx = p.x - mean_x;
            let dy = p.y - mean_y;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        Some(Self {
            n,
            mean_x,
            mean_y,
            var_x: sxx / nf,
            var_y: syy / nf,
            cov_xy: sxy / nf,
        })
    }

    pub fn mean(&self) -> BivariatePoint {
        BivariatePoint::new(self.mean_x, self.mean_y)
    }
}

/// Result of a major-axis fit. `eigen_tie` is set when the covariance has
/// two equal eigenvalues and the direction `(1, 0)` was chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorAxisFit {
    pub line: Line,
    pub eigen_tie: bool,
    pub lambda_major: f64,
    pub lambda_minor: f64,
}

/// Leading eigenpair of the symmetric matrix `[[sxx, sxy], [sxy, syy]]`,
/// computed in closed form. Returns `(lambda_major, lambda_minor, direction, tie)`.
pub fn leading_eigen_2x2(sxx: f64, syy: f64, sxy: f64) -> (f64, f64, (f64, f64), bool) {
    let mid = 0.5 * (sxx + syy);
    let half_diff = 0.5 * (sxx - syy);
    let radius = half_diff.hypot(sxy);
    let (l1, l2) = (mid + radius, mid - radius);
    let scale = l1.abs().max(l2.abs());
    if radius <= EIGEN_TIE_TOL * scale {
        return (l1, l2, (1.0, 0.0), true);
    }
    let dir = if half_diff >= 0.0 {
        (radius + half_diff, sxy)
    } else {
        (sxy, radius - half_diff)
    };
    let norm = dir.0.hypot(dir.1);
    (l1, l2, (dir.0 / norm, dir.1 / norm), false)
}

/// Major-axis (orthogonal) regression line: through the mean along the
/// leading eigenvector of the 2x2 covariance matrix.
pub fn major_axis(points: &[BivariatePoint]) -> Result<MajorAxisFit> {
    if points.len() < 2 {
        return Err(GpcsError::InsufficientData { needed: 2, got: points.len() });
    }
    let m = Moments2::from_iter(points.iter()).expect("nonempty");
    if m.var_x == 0.0 && m.var_y == 0.0 {
        return Err(GpcsError::DegenerateCluster { size: points.len() });
    }
    let (l1, l2, dir, tie) = leading_eigen_2x2(m.var_x, m.var_y, m.cov_xy);
    let line = Line::through(m.mean(), dir)?;
    Ok(MajorAxisFit { line, eigen_tie: tie, lambda_major: l1, lambda_minor: l2 })
}

pub fn major_axis_line(points: &[BivariatePoint]) -> Result<Line> {
    major_axis(points).map(|f| f.line)
}

/// Sum of squared perpendicular residuals to `line`.
pub fn sum_sq_perp(points: &[BivariatePoint], line: &Line) -> f64 {
    points.iter().map(|&p| line.signed_distance(p).powi(2)).sum()
}

/// Mixed standardized moment `E[zx^c zy^d]` of one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdMoment {
    pub c: u32,
    pub d: u32,
    pub value: f64,
}

/// Per-component statistics feeding the measures and their variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    /// `n_k / n`; zero until the caller fills it in.
    pub weight: f64,
    pub count: usize,
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
    pub rho2: f64,
    /// Empty when either variance is zero.
    pub std_moments: Vec<StdMoment>,
}

impl ComponentSummary {
    pub fn moment(&self, c: u32, d: u32) -> Option<f64> {
        self.std_moments
            .iter()
            .find(|m| m.c == c && m.d == d)
            .map(|m| m.value)
    }

    /// Signed correlation. Falls back to zero when undefined.
    pub fn correlation(&self) -> f64 {
        self.moment(1, 1).unwrap_or(0.0)
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

/// Summary statistics of one component. The weight is left at zero.
pub fn component_summary(points: &[BivariatePoint]) -> ComponentSummary {
    component_summary_iter(points.iter())
}

pub(crate) fn component_summary_iter<'a, I>(points: I) -> ComponentSummary
where
    I: IntoIterator<Item = &'a BivariatePoint> + Clone,
{
    let m = Moments2::from_iter(points.clone()).expect("component_summary needs at least one point");
    let defined = m.n >= 2 && m.var_x > 0.0 && m.var_y > 0.0;
    let rho2 = if defined {
        (m.cov_xy * m.cov_xy / (m.var_x * m.var_y)).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let std_moments = if defined {
        let (sx, sy) = (m.var_x.sqrt(), m.var_y.sqrt());
        // sums[c][d] accumulates zx^c zy^d for c + d <= 4
        let mut sums = [[0.0f64; 5]; 5];
        for p in points {
            let zx = (p.x - m.mean_x) / sx;
            let zy = (p.y - m.mean_y) / sy;
            let mut px = 1.0;
            for row in sums.iter_mut() {
                let mut py = 1.0;
                for cell in row.iter_mut() {
                    *cell += px * py;
                    py *= zy;
                }
                px *= zx;
            }
        }
        let nf = m.n as f64;
        let mut out = Vec::with_capacity(15);
        for c in 0..=4u32 {
            for d in 0..=(4 - c) {
                out.push(StdMoment { c, d, value: sums[c as usize][d as usize] / nf });
            }
        }
        out
    } else {
        Vec::new()
    };

    ComponentSummary {
        weight: 0.0,
        count: m.n,
        mean_x: m.mean_x,
        mean_y: m.mean_y,
        var_x: m.var_x,
        var_y: m.var_y,
        cov_xy: m.cov_xy,
        rho2,
        std_moments,
    }
}

/// Per-class summaries for labels in `1..=k`, with weights `n_k / n` filled.
/// Empty classes get a zero-weight summary with `rho2 = 0`.
pub fn class_summaries(points: &[BivariatePoint], labels: &[usize], k: usize) -> Vec<ComponentSummary> {
    let n = points.len() as f64;
    let mut groups: Vec<Vec<BivariatePoint>> = vec![Vec::new(); k];
    for (p, &l) in points.iter().zip(labels) {
        groups[l - 1].push(*p);
    }
    groups
        .iter()
        .map(|g| {
            if g.is_empty() {
                ComponentSummary {
                    weight: 0.0,
                    count: 0,
                    mean_x: 0.0,
                    mean_y: 0.0,
                    var_x: 0.0,
                    var_y: 0.0,
                    cov_xy: 0.0,
                    rho2: 0.0,
                    std_moments: Vec::new(),
                }
            } else {
                component_summary(g).with_weight(g.len() as f64 / n)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<BivariatePoint> {
        v.iter().copied().map(BivariatePoint::from).collect()
    }

    #[test]
    fn distance_examples() {
        let diag = Line::new(1.0, -1.0, 0.0).unwrap();
        assert_eq!(perp_distance(BivariatePoint::new(1.0, 1.0), &diag), 0.0);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let anti = Line::new(s, s, -std::f64::consts::SQRT_2).unwrap();
        let d = perp_distance(BivariatePoint::new(0.0, 0.0), &anti);
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-12);

        let vertical = Line::new(1.0, 0.0, -1.0).unwrap();
        assert!((perp_distance(BivariatePoint::new(3.0, 0.0), &vertical) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn line_normalization_and_sign() {
        let l = Line::new(-3.0, 4.0, 10.0).unwrap();
        assert!((l.a().hypot(l.b()) - 1.0).abs() < 1e-12);
        assert!(l.a() > 0.0);
        assert_eq!(l.renormalized(), l);

        let h = Line::new(0.0, -2.0, 4.0).unwrap();
        assert_eq!((h.a(), h.b(), h.c()), (0.0, 1.0, -2.0));

        assert_eq!(Line::new(0.0, 0.0, 1.0), Err(GpcsError::DegenerateLine));
    }

    #[test]
    fn sample_rejects_non_finite() {
        let err = BivariateSample::from_pairs(&[(0.0, 1.0), (f64::NAN, 2.0)]).unwrap_err();
        assert_eq!(err, GpcsError::NonFinite { index: 1 });
        assert!(BivariateSample::from_pairs(&[(f64::INFINITY, 0.0)]).is_err());
        assert!(BivariateSample::new(vec![]).is_err());
    }

    #[test]
    fn labels_are_remapped_by_first_appearance() {
        let s = BivariateSample::with_labels(
            pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]),
            vec![7, 3, 7, 9],
        )
        .unwrap();
        assert_eq!(s.labels().unwrap(), &[7, 3, 7, 9]);
        assert_eq!(s.num_classes(), Some(3));
        assert_eq!(remap_labels(s.labels().unwrap()), (vec![1, 2, 1, 3], vec![7, 3, 9]));
        assert!(BivariateSample::with_labels(pts(&[(0.0, 0.0)]), vec![1, 2]).is_err());
    }

    #[test]
    fn major_axis_on_collinear_points() {
        let p = pts(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (-1.5, -2.0)]);
        let fit = major_axis(&p).unwrap();
        assert!(!fit.eigen_tie);
        let (dx, dy) = fit.line.direction();
        let s5 = 5f64.sqrt();
        assert!((dx.abs() - 1.0 / s5).abs() < 1e-12);
        assert!((dy.abs() - 2.0 / s5).abs() < 1e-12);
        assert!(dx * dy > 0.0);
        for q in &p {
            assert!(perp_distance(*q, &fit.line) < 1e-12);
        }
    }

    #[test]
    fn major_axis_eigen_tie_uses_horizontal_direction() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        let fit = major_axis(&p).unwrap();
        assert!(fit.eigen_tie);
        let (dx, dy) = fit.line.direction();
        assert!((dx.abs() - 1.0).abs() < 1e-15 && dy.abs() < 1e-15);
        // passes through the mean (0.5, 0.5)
        assert!(perp_distance(BivariatePoint::new(0.5, 0.5), &fit.line) < 1e-15);
        assert!((fit.lambda_major - 0.25).abs() < 1e-15);
    }

    #[test]
    fn major_axis_errors() {
        assert_eq!(
            major_axis(&pts(&[(1.0, 2.0), (1.0, 2.0), (1.0, 2.0)])).unwrap_err(),
            GpcsError::DegenerateCluster { size: 3 }
        );
        assert!(matches!(
            major_axis(&pts(&[(1.0, 2.0)])),
            Err(GpcsError::InsufficientData { .. })
        ));
    }

    #[test]
    fn axis_aligned_clouds() {
        let horiz = pts(&[(0.0, 0.0), (4.0, 0.1), (8.0, 0.0), (12.0, -0.1)]);
        let (dx, _) = major_axis_line(&horiz).unwrap().direction();
        assert!(dx.abs() > 0.999);
        let vert = pts(&[(0.0, 0.0), (0.1, 4.0), (0.0, 8.0), (-0.1, 12.0)]);
        let (_, dy) = major_axis_line(&vert).unwrap().direction();
        assert!(dy.abs() > 0.999);
    }

    #[test]
    fn summary_examples() {
        let s = component_summary(&pts(&[(0.0, 0.0), (1.0, 1.0)]));
        assert!((s.rho2 - 1.0).abs() < 1e-15);
        assert_eq!(s.var_x, 0.25);

        let flat = component_summary(&pts(&[(0.0, 2.0), (1.0, 2.0), (5.0, 2.0)]));
        assert_eq!(flat.rho2, 0.0);
        assert!(flat.std_moments.is_empty());

        let single = component_summary(&pts(&[(3.0, 4.0)]));
        assert_eq!(single.rho2, 0.0);
        assert_eq!(single.count, 1);
    }

    #[test]
    fn standardized_moments_basic_identities() {
        let p = pts(&[(0.0, 1.0), (1.0, 0.5), (3.0, 4.0), (-2.0, 1.0), (0.5, -1.0)]);
        let s = component_summary(&p);
        assert!((s.moment(2, 0).unwrap() - 1.0).abs() < 1e-9);
        assert!((s.moment(0, 2).unwrap() - 1.0).abs() < 1e-9);
        assert!(s.moment(1, 0).unwrap().abs() < 1e-12);
        let r = s.cov_xy / (s.var_x * s.var_y).sqrt();
        assert!((s.moment(1, 1).unwrap() - r).abs() < 1e-9);
        assert!((s.moment(1, 1).unwrap().powi(2) - s.rho2).abs() < 1e-12);
        assert_eq!(s.std_moments.len(), 15);
        assert!(s.moment(3, 2).is_none());
    }

    #[test]
    fn class_summaries_fill_weights() {
        let p = pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 5.0)]);
        let cs = class_summaries(&p, &[1, 1, 1, 2], 3);
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0].weight, 0.75);
        assert_eq!(cs[1].weight, 0.25);
        assert_eq!(cs[2].weight, 0.0);
    }
}
