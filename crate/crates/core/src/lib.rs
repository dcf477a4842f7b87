//! Generalized Pearson correlation squares.
//!
//! The squared Pearson correlation measures one linear dependence. These
//! measures extend it to a mixture of K linear dependences:
//! `sum_k p_k * rho2_k`, the component-weighted average of per-line
//! correlation squares. Line memberships are either observed (the
//! *specified* measure, [`measures::r2_gs`]) or inferred by K-lines
//! clustering (the *unspecified* measure, [`measures::r2_gu`]).
//!
//! Modules:
//!
//! - [`geometry`]: points, normalized lines, major-axis regression and
//!   per-component moment summaries.
//! - [`klines`]: K-lines clustering, the scree objective and AIC-based K.
//! - [`measures`]: the two sample measures.
//! - [`inference`]: asymptotic variances, plug-in and bootstrap intervals.
//! - [`simgen`]: mixture generators, population targets and coverage runs.
//! - [`power`]: permutation power harness with Pearson and distance
//!   correlation baselines.
//!
//! ```
//! use gpcs::geometry::BivariatePoint;
//! use gpcs::klines::KlinesConfig;
//! use gpcs::measures::r2_gu;
//!
//! // two noiseless crossing lines: one line explains nothing, two explain all
//! let points: Vec<BivariatePoint> = (1..=20)
//!     .flat_map(|i| {
//!         let t = i as f64 * 0.5;
//!         [BivariatePoint::new(t, t), BivariatePoint::new(t, -t)]
//!     })
//!     .collect();
//! let est = r2_gu(&points, 2, &KlinesConfig::default()).unwrap();
//! assert!((est.value - 1.0).abs() < 1e-9);
//! ```

pub mod error;
pub mod geometry;
pub mod inference;
pub mod klines;
pub mod measures;
pub mod normal;
pub mod power;
pub mod rng;
pub mod simgen;

pub use error::{GpcsError, Result};
pub use geometry::{BivariatePoint, BivariateSample, ComponentSummary, Line};
pub use inference::{ConfidenceInterval, VarianceVariant};
pub use klines::{FitResult, KlinesConfig, LineSet};
pub use measures::{r2_gs, r2_gu, r2_gu_auto, GcsEstimate, Scenario};
