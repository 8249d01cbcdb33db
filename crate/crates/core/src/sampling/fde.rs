//! Iterative centroid refinement towards minimum expected displacement.
//!
//! Each centroid moves to a weighted average of the points within its
//! neighborhood, weighting point `i` by `(p_i / d_ik) * (m_i / d_ik)` where
//! `d_ik` is the distance to centroid `k` and `m_i` the distance to the
//! nearest centroid. The `1 / d` factor targets the l2 norm rather than its
//! square; `m_i / d_ik` is 1 inside the centroid's own partition and decays
//! outside it.

use super::{finish, point_cloud, working_grid, SampleSet, SamplerConfig};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::ProbabilityGrid;
use crate::par;

const CHUNK: usize = 2048;

/// Runs `iters` simultaneous updates of all centroids over a weighted point cloud.
///
/// Distances below `min_distance` are clamped to it. A centroid with no
/// weighted points in its neighborhood stays where it is.
pub fn refine_centroids(
    cloud: &[(Point, f64)],
    init: &[Point],
    iters: usize,
    neighborhood: f64,
    min_distance: f64,
) -> Vec<Point> {
    let k = init.len();
    let mut centroids = init.to_vec();
    for _ in 0..iters {
        let current = &centroids;
        let partial = par::map_chunks(cloud, CHUNK, |_, chunk| {
            let mut acc = vec![[0.0f64; 3]; k];
            let mut d = vec![0.0; k];
            for &(x, p) in chunk {
                let mut nearest = f64::INFINITY;
                for (dk, c) in d.iter_mut().zip(current) {
                    *dk = x.distance(*c).max(min_distance);
                    nearest = nearest.min(*dk);
                }
                for ((a, &dk), c) in acc.iter_mut().zip(&d).zip(current) {
                    if dk <= neighborhood {
                        let w = (p / dk) * (nearest / dk);
                        a[0] += w;
                        a[1] += w * (x.x - c.x);
                        a[2] += w * (x.y - c.y);
                    }
                }
            }
            acc
        });
        let mut total = vec![[0.0f64; 3]; k];
        for acc in partial {
            for (t, a) in total.iter_mut().zip(acc) {
                t[0] += a[0];
                t[1] += a[1];
                t[2] += a[2];
            }
        }
        for (c, t) in centroids.iter_mut().zip(&total) {
            // Accumulated as displacements from the centroid, so balanced
            // neighborhoods leave it exactly in place.
            if t[0] > 0.0 {
                *c = Point::new(c.x + t[1] / t[0], c.y + t[2] / t[0]);
            }
        }
    }
    centroids
}

/// Refines `init` (normally the MR samples) for `cfg.fde_iters` iterations
/// over the same working grid the MR sampler uses.
pub fn sample_fde(
    grid: &ProbabilityGrid,
    init: &SampleSet,
    cfg: &SamplerConfig,
) -> Result<SampleSet> {
    cfg.validate()?;
    if init.len() != cfg.k {
        return Err(Error::InvalidConfig(format!(
            "initialization has {} points, expected k = {}",
            init.len(),
            cfg.k
        )));
    }
    if cfg.fde_iters == 0 {
        return Ok(init.clone());
    }
    let work = working_grid(grid, cfg.upsample_factor)?;
    let spec = *work.grid.spec();
    let cloud = point_cloud(&work.grid);
    let refined = refine_centroids(
        &cloud,
        &init.offsets_in(spec.origin),
        cfg.fde_iters,
        cfg.fde_neighborhood,
        spec.resolution / 2.0,
    );
    finish(grid, SampleSet::from_offsets(spec.origin, refined), cfg)
}
