//! Heatmap-based motion forecasting output: probability grids, endpoint
//! samplers that trade miss rate against final displacement error, metrics,
//! trajectory completion, scene rasterization and synthetic scenarios.
//!
//! ```
//! use heatmap_forecast::grid::{GridSpec, ProbabilityGrid};
//! use heatmap_forecast::geometry::Point;
//! use heatmap_forecast::sampling::{sample_mr, SamplerConfig};
//!
//! let spec = GridSpec::centered(32, 32, 0.5).unwrap();
//! let grid = ProbabilityGrid::delta(spec, Point::new(2.0, -1.0), 1.0).unwrap();
//! let cfg = SamplerConfig { k: 2, ..SamplerConfig::default() };
//! let set = sample_mr(&grid, &cfg).unwrap();
//! assert_eq!(set.len(), 2);
//! ```

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod grid;
pub mod metrics;
pub mod oracle;
mod par;
pub mod rasterizer;
pub mod sampling;
pub mod scenario;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::Point;
pub use grid::{GridSpec, ProbabilityGrid};
pub use sampling::{SampleSet, SamplerConfig};

/// True when built with the `parallel` feature.
pub fn is_parallel() -> bool {
    par::is_parallel()
}
