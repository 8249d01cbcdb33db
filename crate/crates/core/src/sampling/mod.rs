//! Endpoint sampling from probability heatmaps.
//!
//! All samplers run on a *working grid*: the input rescaled so its maximum is
//! `2^24` and rounded to integers, then bilinearly upsampled. Rounding to a
//! fixed point relative to the maximum makes every sampler exactly invariant
//! to positive rescaling of the heatmap, and keeps coverage sums exact so
//! their order of evaluation never matters.

mod baseline;
mod fde;
mod kernel;
mod mr;

use std::io::Write;

pub use baseline::{
    kmeans_refine, sample_kmeans, sample_kmeans_from, sample_nms, KMEANS_MAX_ITERS,
};
pub use fde::{refine_centroids, sample_fde};
pub use kernel::{circle_kernel, coverage_map, CircleKernel};
pub use mr::sample_mr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::ProbabilityGrid;
use crate::metrics::assign_probabilities;

/// Fixed-point scale of the working grid maximum.
pub const WORKING_SCALE: f64 = 16_777_216.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of endpoints to extract.
    pub k: usize,
    /// Radius of the coverage disk maximized by MR sampling, and the NMS suppression radius.
    pub mr_radius: f64,
    pub upsample_factor: usize,
    /// Iterations of centroid refinement; 0 keeps the MR-sampled points.
    pub fde_iters: usize,
    /// Neighborhood radius of each centroid during refinement.
    pub fde_neighborhood: f64,
    /// Miss threshold, also the radius used to assign probabilities.
    pub miss_threshold: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            k: 6,
            mr_radius: 1.8,
            upsample_factor: 2,
            fde_iters: 0,
            fde_neighborhood: 3.0,
            miss_threshold: 2.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.upsample_factor == 0 {
            return Err(Error::InvalidConfig(
                "upsample factor must be at least 1".into(),
            ));
        }
        positive("mr_radius", self.mr_radius)?;
        positive("fde_neighborhood", self.fde_neighborhood)?;
        positive("miss_threshold", self.miss_threshold)
    }
}

/// K sampled endpoints with their assigned probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    origin: Point,
    /// Endpoints relative to the frame origin; `points = origin + offsets`.
    offsets: Vec<Point>,
    points: Vec<Point>,
    probabilities: Vec<f64>,
    /// Greedy coverage gain per pick (MR sampling only, otherwise empty).
    covered_mass: Vec<f64>,
}

impl SampleSet {
    pub fn from_offsets(origin: Point, offsets: Vec<Point>) -> Self {
        let points = offsets.iter().map(|&o| origin + o).collect();
        Self {
            origin,
            offsets,
            points,
            probabilities: Vec::new(),
            covered_mass: Vec::new(),
        }
    }

    /// Endpoints given in metric coordinates of a frame with the given origin.
    pub fn from_points(origin: Point, points: Vec<Point>) -> Self {
        let offsets = points.iter().map(|&p| p - origin).collect();
        Self {
            origin,
            offsets,
            points,
            probabilities: Vec::new(),
            covered_mass: Vec::new(),
        }
    }

    pub fn with_probabilities(mut self, probabilities: Vec<f64>) -> Self {
        self.probabilities = probabilities;
        self
    }

    pub(crate) fn with_covered_mass(mut self, covered: Vec<f64>) -> Self {
        self.covered_mass = covered;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn offsets(&self) -> &[Point] {
        &self.offsets
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn covered_mass(&self) -> &[f64] {
        &self.covered_mass
    }

    /// Offsets of these endpoints relative to `origin`, exact when the frames agree.
    pub(crate) fn offsets_in(&self, origin: Point) -> Vec<Point> {
        if origin == self.origin {
            self.offsets.clone()
        } else {
            self.points.iter().map(|&p| p - origin).collect()
        }
    }

    /// Writes `k,x,y,probability,covered_mass` rows; `covered_mass` is blank when absent.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,x,y,probability,covered_mass")?;
        for (k, p) in self.points.iter().enumerate() {
            let prob = self
                .probabilities
                .get(k)
                .map(f64::to_string)
                .unwrap_or_default();
            let cov = self
                .covered_mass
                .get(k)
                .map(f64::to_string)
                .unwrap_or_default();
            writeln!(w, "{k},{},{},{prob},{cov}", p.x, p.y)?;
        }
        Ok(())
    }
}

/// The grid every sampler operates on: fixed-point rescaled and upsampled.
#[derive(Debug, Clone)]
pub struct WorkingGrid {
    pub grid: ProbabilityGrid,
    /// Multiplier converting working-grid mass into input-grid mass.
    pub mass_scale: f64,
}

pub fn working_grid(grid: &ProbabilityGrid, upsample_factor: usize) -> Result<WorkingGrid> {
    let max = grid.max_value();
    if !(max > 0.0) {
        return Err(Error::Degenerate("grid has zero mass".into()));
    }
    let scale = WORKING_SCALE / max;
    let fixed = grid.map_values(|v| (v * scale).round());
    let up = fixed.upsample_bilinear(upsample_factor)?;
    let mass_scale = grid.total_mass() / up.total_mass();
    Ok(WorkingGrid {
        grid: up,
        mass_scale,
    })
}

/// Nonzero pixels of a grid as `(offset from origin, weight)`, row-major.
pub(crate) fn point_cloud(grid: &ProbabilityGrid) -> Vec<(Point, f64)> {
    let spec = grid.spec();
    grid.values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| {
            let (r, c) = spec.row_col(i);
            (spec.offset(r, c), v)
        })
        .collect()
}

/// Attaches probabilities from the circle integral around each endpoint.
pub(crate) fn finish(
    grid: &ProbabilityGrid,
    set: SampleSet,
    cfg: &SamplerConfig,
) -> Result<SampleSet> {
    let assigned = assign_probabilities(grid, set.points(), cfg.miss_threshold)?;
    Ok(set.with_probabilities(assigned.probabilities))
}
