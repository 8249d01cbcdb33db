//! Baseline samplers: pixel ranking with non-maximum suppression, and
//! probability-weighted KMeans.

use super::{finish, point_cloud, sample_mr, working_grid, SampleSet, SamplerConfig};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::ProbabilityGrid;
use crate::par;

pub const KMEANS_MAX_ITERS: usize = 50;

const CHUNK: usize = 2048;

/// Ranks pixels by value (lowest index first among equals) and accepts them
/// in order, skipping any closer than `mr_radius` to an accepted pick.
pub fn sample_nms(grid: &ProbabilityGrid, cfg: &SamplerConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let work = working_grid(grid, cfg.upsample_factor)?;
    let spec = *work.grid.spec();
    let values = work.grid.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let r2 = cfg.mr_radius * cfg.mr_radius;
    let mut picks: Vec<Point> = Vec::with_capacity(cfg.k);
    for idx in order {
        if picks.len() == cfg.k {
            break;
        }
        let (r, c) = spec.row_col(idx);
        let candidate = spec.offset(r, c);
        if picks.iter().all(|p| p.distance_sq(candidate) >= r2) {
            picks.push(candidate);
        }
    }
    finish(grid, SampleSet::from_offsets(spec.origin, picks), cfg)
}

/// Outcome of weighted Lloyd iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Point>,
    /// Number of centroid updates performed.
    pub updates: usize,
    pub converged: bool,
}

/// Probability-weighted Lloyd iterations with hard nearest-centroid
/// assignment (lowest index on ties). Stops once an assignment repeats or
/// after `max_iters` updates; empty clusters keep their centroid.
pub fn kmeans_refine(cloud: &[(Point, f64)], init: &[Point], max_iters: usize) -> KMeansResult {
    let k = init.len();
    let mut centroids = init.to_vec();
    let mut previous: Option<Vec<u32>> = None;
    let mut updates = 0;
    loop {
        let current = &centroids;
        let partial = par::map_chunks(cloud, CHUNK, |_, chunk| {
            let mut labels = Vec::with_capacity(chunk.len());
            let mut acc = vec![[0.0f64; 3]; k];
            for &(x, p) in chunk {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (j, c) in current.iter().enumerate() {
                    let d = x.distance_sq(*c);
                    if d < best_d {
                        best_d = d;
                        best = j;
                    }
                }
                labels.push(best as u32);
                let a = &mut acc[best];
                a[0] += p;
                a[1] += p * x.x;
                a[2] += p * x.y;
            }
            (labels, acc)
        });
        let mut labels = Vec::with_capacity(cloud.len());
        let mut total = vec![[0.0f64; 3]; k];
        for (l, acc) in partial {
            labels.extend(l);
            for (t, a) in total.iter_mut().zip(acc) {
                t[0] += a[0];
                t[1] += a[1];
                t[2] += a[2];
            }
        }
        if previous.as_ref() == Some(&labels) {
            return KMeansResult {
                centroids,
                updates,
                converged: true,
            };
        }
        if updates == max_iters {
            return KMeansResult {
                centroids,
                updates,
                converged: false,
            };
        }
        for (c, t) in centroids.iter_mut().zip(&total) {
            if t[0] > 0.0 {
                *c = Point::new(t[1] / t[0], t[2] / t[0]);
            }
        }
        updates += 1;
        previous = Some(labels);
    }
}

/// KMeans over the working grid starting from `init`.
pub fn sample_kmeans_from(
    grid: &ProbabilityGrid,
    init: &SampleSet,
    cfg: &SamplerConfig,
) -> Result<SampleSet> {
    cfg.validate()?;
    let work = working_grid(grid, cfg.upsample_factor)?;
    let spec = *work.grid.spec();
    let cloud = point_cloud(&work.grid);
    if cfg.k > cloud.len() {
        return Err(Error::Degenerate(format!(
            "k = {} exceeds the {} nonzero pixels",
            cfg.k,
            cloud.len()
        )));
    }
    let result = kmeans_refine(&cloud, &init.offsets_in(spec.origin), KMEANS_MAX_ITERS);
    finish(
        grid,
        SampleSet::from_offsets(spec.origin, result.centroids),
        cfg,
    )
}

/// KMeans initialized from MR sampling.
pub fn sample_kmeans(grid: &ProbabilityGrid, cfg: &SamplerConfig) -> Result<SampleSet> {
    let init = sample_mr(grid, cfg)?;
    sample_kmeans_from(grid, &init, cfg)
}
