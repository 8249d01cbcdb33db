use crate::error::{Error, Result};
use crate::grid::ProbabilityGrid;
use crate::par;

/// A discretized disk: every pixel offset whose center lies within `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleKernel {
    radius: f64,
    resolution: f64,
    /// `(d_row, d_col)` offsets in row-major order.
    offsets: Vec<(isize, isize)>,
    /// Half-width of the span of columns covered at each row offset, indexed by `d_row + reach`.
    spans: Vec<isize>,
    reach: isize,
}

impl CircleKernel {
    pub fn new(radius: f64, resolution: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("kernel radius {radius}")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kernel resolution {resolution}"
            )));
        }
        let r = radius / resolution;
        let r2 = r * r;
        let reach = r.floor() as isize;
        let mut offsets = Vec::new();
        let mut spans = Vec::with_capacity(2 * reach as usize + 1);
        for di in -reach..=reach {
            let mut half = -1;
            for dj in -reach..=reach {
                if ((di * di + dj * dj) as f64) <= r2 {
                    offsets.push((di, dj));
                    half = half.max(dj);
                }
            }
            spans.push(half);
        }
        Ok(Self {
            radius,
            resolution,
            offsets,
            spans,
            reach,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Largest row or column offset in the kernel.
    pub fn reach(&self) -> usize {
        self.reach as usize
    }

    /// Row offsets paired with the half-width of their column span.
    pub(crate) fn rows(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        self.spans
            .iter()
            .enumerate()
            .map(move |(i, &h)| (i as isize - self.reach, h))
            .filter(|&(_, h)| h >= 0)
    }

    pub(crate) fn check_resolution(&self, resolution: f64) -> Result<()> {
        if (self.resolution - resolution).abs() > 1e-9 * resolution {
            return Err(Error::InvalidConfig(format!(
                "kernel resolution {} does not match grid resolution {resolution}",
                self.resolution
            )));
        }
        Ok(())
    }
}

pub fn circle_kernel(radius: f64, resolution: f64) -> Result<CircleKernel> {
    CircleKernel::new(radius, resolution)
}

/// Sum of `values` under the kernel centered on `(row, col)`, zero outside the grid.
#[inline]
pub(crate) fn disk_sum(
    values: &[f64],
    width: usize,
    height: usize,
    kernel: &CircleKernel,
    row: usize,
    col: usize,
) -> f64 {
    let mut acc = 0.0;
    for (di, half) in kernel.rows() {
        let r = row as isize + di;
        if r < 0 || r >= height as isize {
            continue;
        }
        let lo = (col as isize - half).max(0) as usize;
        let hi = ((col as isize + half) as usize).min(width - 1);
        let base = r as usize * width;
        for &v in &values[base + lo..=base + hi] {
            acc += v;
        }
    }
    acc
}

/// Circle-integrated mass around every pixel: the probability that the
/// ground truth falls within the kernel radius of that pixel center.
pub fn coverage_map(grid: &ProbabilityGrid, kernel: &CircleKernel) -> Result<ProbabilityGrid> {
    let spec = *grid.spec();
    kernel.check_resolution(spec.resolution)?;
    Ok(ProbabilityGrid::from_parts_unchecked(
        spec,
        coverage_values(grid.values(), spec.width, spec.height, kernel),
    ))
}

pub(crate) fn coverage_values(
    values: &[f64],
    width: usize,
    height: usize,
    kernel: &CircleKernel,
) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    par::for_each_row_mut(&mut out, width, |r, row| {
        for (c, o) in row.iter_mut().enumerate() {
            *o = disk_sum(values, width, height, kernel, r, c);
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::grid::GridSpec;

    /// Independent lattice-point count: integer pairs with `a^2 + b^2 <= n^2`, in integers.
    fn lattice_count(n: i64) -> usize {
        (-n..=n)
            .flat_map(|a| (-n..=n).map(move |b| (a, b)))
            .filter(|(a, b)| a * a + b * b <= n * n)
            .count()
    }

    #[test]
    fn kernel_sizes() {
        assert_eq!(circle_kernel(0.4, 0.5).unwrap().offsets(), &[(0, 0)]);
        // 3.6^2 = 12.96: same lattice as the integer bound a^2 + b^2 <= 12.
        let k = circle_kernel(1.8, 0.5).unwrap();
        let oracle = (-3i64..=3)
            .flat_map(|a| (-3i64..=3).map(move |b| (a, b)))
            .filter(|(a, b)| a * a + b * b <= 12)
            .count();
        assert_eq!(oracle, 37);
        assert_eq!(k.len(), 37);
        assert_eq!(lattice_count(8), 197);
        assert_eq!(circle_kernel(2.0, 0.25).unwrap().len(), 197);
        assert!(circle_kernel(0.0, 0.5).is_err());
    }

    #[test]
    fn kernel_symmetry() {
        let k = circle_kernel(2.3, 0.5).unwrap();
        let set: std::collections::HashSet<_> = k.offsets().iter().copied().collect();
        assert!(set.contains(&(0, 0)));
        for &(a, b) in k.offsets() {
            assert!(set.contains(&(-a, -b)));
            assert!(set.contains(&(b, a)));
        }
    }

    #[test]
    fn coverage_of_delta_is_indicator_disk() {
        let spec = GridSpec::new(15, 15, 0.5, Point::ORIGIN).unwrap();
        let g = ProbabilityGrid::delta(spec, spec.pixel_center(7, 7), 1.0).unwrap();
        let k = circle_kernel(1.8, 0.5).unwrap();
        let cov = coverage_map(&g, &k).unwrap();
        let ones = cov.values().iter().filter(|&&v| v == 1.0).count();
        assert_eq!(ones, 37);
        assert_eq!(cov.total_mass(), 37.0);
        for &(di, dj) in k.offsets() {
            assert_eq!(cov.get((7 + di) as usize, (7 + dj) as usize), 1.0);
        }
    }

    #[test]
    fn coverage_of_uniform_and_zero() {
        let spec = GridSpec::new(20, 20, 0.5, Point::ORIGIN).unwrap();
        let g = ProbabilityGrid::new(spec, vec![1.0 / 400.0; 400]).unwrap();
        let k = circle_kernel(1.8, 0.5).unwrap();
        let cov = coverage_map(&g, &k).unwrap();
        assert!((cov.get(10, 10) - 37.0 / 400.0).abs() < 1e-15);
        assert!(cov.get(0, 0) < cov.get(10, 10));

        let z = ProbabilityGrid::zeros(spec);
        assert!(coverage_map(&z, &k)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));

        let wrong = circle_kernel(1.8, 0.25).unwrap();
        assert!(coverage_map(&g, &wrong).is_err());
    }
}
