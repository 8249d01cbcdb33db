//! Greedy miss-rate sampling.
//!
//! Picks the pixel whose disk holds the most probability, zeroes that disk,
//! and repeats. Zeroing removes already-covered mass, so the gains add up to
//! the union coverage of the picks.

use super::kernel::{coverage_values, disk_sum, CircleKernel};
use super::{finish, working_grid, SampleSet, SamplerConfig};
use crate::error::Result;
use crate::grid::ProbabilityGrid;
use crate::par;

const ARGMAX_CHUNK: usize = 4096;

/// Index of the largest `coverage`, skipping `excluded`. Equal coverage goes
/// to the larger own value in `values`, then to the lowest index.
pub(crate) fn argmax(coverage: &[f64], values: &[f64], excluded: &[bool]) -> Option<usize> {
    let better = |a: (f64, f64), b: (f64, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 > b.1);
    let partial = par::map_chunks(coverage, ARGMAX_CHUNK, |ci, chunk| {
        let base = ci * ARGMAX_CHUNK;
        let mut best: Option<((f64, f64), usize)> = None;
        for (j, &v) in chunk.iter().enumerate() {
            let i = base + j;
            if excluded[i] {
                continue;
            }
            let key = (v, values[i]);
            if best.is_none_or(|(b, _)| better(key, b)) {
                best = Some((key, i));
            }
        }
        best
    });
    partial
        .into_iter()
        .flatten()
        .fold(
            None,
            |acc: Option<((f64, f64), usize)>, (key, i)| match acc {
                Some((b, _)) if !better(key, b) => acc,
                _ => Some((key, i)),
            },
        )
        .map(|(_, i)| i)
}

pub fn sample_mr(grid: &ProbabilityGrid, cfg: &SamplerConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let work = working_grid(grid, cfg.upsample_factor)?;
    let spec = *work.grid.spec();
    let (w, h) = (spec.width, spec.height);
    let kernel = CircleKernel::new(cfg.mr_radius, spec.resolution)?;
    let reach = kernel.reach();

    let mut values = work.grid.into_values();
    let mut coverage = coverage_values(&values, w, h, &kernel);
    let mut picked = vec![false; values.len()];
    let mut offsets = Vec::with_capacity(cfg.k);
    let mut gains = Vec::with_capacity(cfg.k);

    for _ in 0..cfg.k {
        let Some(best) = argmax(&coverage, &values, &picked) else {
            break;
        };
        let (r, c) = spec.row_col(best);
        picked[best] = true;
        gains.push(coverage[best] * work.mass_scale);
        offsets.push(spec.offset(r, c));

        for &(di, dj) in kernel.offsets() {
            let (rr, cc) = (r as isize + di, c as isize + dj);
            if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                values[rr as usize * w + cc as usize] = 0.0;
            }
        }
        // Only disks overlapping the zeroed one change.
        let r_lo = r.saturating_sub(2 * reach);
        let r_hi = (r + 2 * reach).min(h - 1);
        let c_lo = c.saturating_sub(2 * reach);
        let c_hi = (c + 2 * reach).min(w - 1);
        for rr in r_lo..=r_hi {
            for cc in c_lo..=c_hi {
                coverage[rr * w + cc] = disk_sum(&values, w, h, &kernel, rr, cc);
            }
        }
    }

    let set = SampleSet::from_offsets(spec.origin, offsets).with_covered_mass(gains);
    finish(grid, set, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geometry::Point;
    use crate::grid::GridSpec;

    fn cfg(k: usize) -> SamplerConfig {
        SamplerConfig {
            k,
            upsample_factor: 1,
            ..Default::default()
        }
    }

    #[test]
    fn argmax_ties_take_lowest_index() {
        let v = vec![1.0, 3.0, 3.0, 2.0];
        let flat = [0.0; 4];
        assert_eq!(argmax(&v, &flat, &[false; 4]), Some(1));
        assert_eq!(argmax(&v, &flat, &[false, true, false, false]), Some(2));
        assert_eq!(argmax(&v, &flat, &[true; 4]), None);
        assert_eq!(argmax(&v, &[0.0, 0.1, 0.2, 0.0], &[false; 4]), Some(2));
        let big: Vec<f64> = (0..10_000).map(|i| (i % 977) as f64).collect();
        let zeros = vec![0.0; big.len()];
        assert_eq!(argmax(&big, &zeros, &vec![false; big.len()]), Some(976));
    }

    #[test]
    fn delta_grid_single_pick() {
        let spec = GridSpec::centered(20, 20, 0.5).unwrap();
        let at = spec.pixel_center(4, 13);
        let g = ProbabilityGrid::delta(spec, at, 2.5).unwrap();
        for up in [1, 2] {
            let s = sample_mr(
                &g,
                &SamplerConfig {
                    upsample_factor: up,
                    ..cfg(1)
                },
            )
            .unwrap();
            assert_eq!(s.points(), &[at]);
            assert!((s.covered_mass()[0] - 2.5).abs() < 1e-12);
            assert_eq!(s.probabilities(), &[1.0]);
        }
    }

    #[test]
    fn heavy_mode_first() {
        let spec = GridSpec::centered(40, 20, 0.5).unwrap();
        let heavy = spec.pixel_center(10, 5);
        let light = spec.pixel_center(10, 25);
        let mut v = vec![0.0; spec.len()];
        v[spec.index(10, 5)] = 0.7;
        v[spec.index(10, 25)] = 0.3;
        let g = ProbabilityGrid::new(spec, v).unwrap();
        let s = sample_mr(&g, &cfg(2)).unwrap();
        assert_eq!(s.points(), &[heavy, light]);
        assert!((s.covered_mass()[0] - 0.7).abs() < 1e-6);
        assert!((s.covered_mass()[1] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn exhausted_mass_falls_back_to_index_order() {
        let spec = GridSpec::centered(10, 10, 0.5).unwrap();
        let g = ProbabilityGrid::delta(spec, spec.pixel_center(5, 5), 1.0).unwrap();
        let s = sample_mr(&g, &cfg(3)).unwrap();
        assert_eq!(s.points()[0], spec.pixel_center(5, 5));
        assert_eq!(s.points()[1], spec.pixel_center(0, 0));
        assert_eq!(s.points()[2], spec.pixel_center(0, 1));
        assert_eq!(&s.covered_mass()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn ring_picks_are_spread() {
        let spec = GridSpec::centered(112, 112, 0.5).unwrap();
        let g = ProbabilityGrid::from_fn(spec, |r, c| {
            let d = spec.pixel_center(r, c).distance(Point::ORIGIN);
            if (d - 20.0).abs() <= 0.5 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
        .normalize()
        .unwrap();
        let c = SamplerConfig::default();
        let s = sample_mr(&g, &c).unwrap();
        let min_gap = 2.0 * c.mr_radius - 2.0 * spec.resolution;
        for (i, a) in s.points().iter().enumerate() {
            assert!((a.distance(Point::ORIGIN) - 20.0).abs() < 1.0);
            for b in &s.points()[i + 1..] {
                assert!(a.distance(*b) >= min_gap, "{a:?} {b:?}");
            }
        }
        assert!(s.covered_mass().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn zero_grid_is_degenerate() {
        let spec = GridSpec::centered(4, 4, 0.5).unwrap();
        assert!(matches!(
            sample_mr(&ProbabilityGrid::zeros(spec), &cfg(1)),
            Err(Error::Degenerate(_))
        ));
    }
}
