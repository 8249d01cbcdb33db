//! Probability grids over an agent-centered metric frame.
//!
//! Pixel `(row, col)` has its center at `origin + (col * resolution, row * resolution)`:
//! columns run along the agent heading (x), rows along y. Pixel `(0, 0)` is the
//! top-left of the row-major buffer.

mod hgrd;
mod target;

pub use hgrd::{read_hgrd, read_hgrd_stack, write_hgrd, write_hgrd_stack, write_pgm};
pub use target::{focal_loss, focal_loss_gradient, render_gaussian_target, TargetGrid, FOCAL_EPS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::par;

/// Default raster / heatmap width and height in pixels.
pub const DEFAULT_SIZE: usize = 224;
/// Default resolution in meters per pixel.
pub const DEFAULT_RESOLUTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Meters per pixel.
    pub resolution: f64,
    /// Metric coordinates of the center of pixel `(0, 0)`.
    pub origin: Point,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, resolution: f64, origin: Point) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidSpec(format!("dimensions {width}x{height}")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidSpec(format!("resolution {resolution}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidSpec("non-finite origin".into()));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
        })
    }

    /// A grid whose geometric center sits on the metric origin.
    pub fn centered(width: usize, height: usize, resolution: f64) -> Result<Self> {
        let origin = Point::new(
            -((width as f64 - 1.0) / 2.0) * resolution,
            -((height as f64 - 1.0) / 2.0) * resolution,
        );
        Self::new(width, height, resolution, origin)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.width, index % self.width)
    }

    /// Offset of a pixel center from the origin, in meters.
    #[inline]
    pub fn offset(&self, row: usize, col: usize) -> Point {
        Point::new(col as f64 * self.resolution, row as f64 * self.resolution)
    }

    #[inline]
    pub fn pixel_center(&self, row: usize, col: usize) -> Point {
        self.origin + self.offset(row, col)
    }

    /// Continuous pixel coordinates `(row, col)` of a metric point.
    pub fn to_pixel_coords(&self, p: Point) -> (f64, f64) {
        (
            (p.y - self.origin.y) / self.resolution,
            (p.x - self.origin.x) / self.resolution,
        )
    }

    /// Nearest pixel center to `p`, or `None` when `p` falls outside the grid.
    pub fn pixel_of(&self, p: Point) -> Option<(usize, usize)> {
        let (r, c) = self.to_pixel_coords(p);
        let (r, c) = (r.round(), c.round());
        let inside = r >= 0.0 && c >= 0.0 && r < self.height as f64 && c < self.width as f64;
        inside.then_some((r as usize, c as usize))
    }

    pub fn require_pixel(&self, p: Point) -> Result<(usize, usize)> {
        self.pixel_of(p)
            .ok_or(Error::OutOfBounds { x: p.x, y: p.y })
    }

    pub fn with_origin(mut self, origin: Point) -> Self {
        self.origin = origin;
        self
    }
}

/// A non-negative scalar field, one value per pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ProbabilityGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::LengthMismatch {
                expected: spec.len(),
                actual: values.len(),
            });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Domain(format!("pixel {i} holds {v}")));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let values = (0..spec.len())
            .map(|i| {
                let (r, c) = spec.row_col(i);
                f(r, c)
            })
            .collect();
        Self::new(spec, values)
    }

    /// A grid with all mass on the pixel nearest to `at`.
    pub fn delta(spec: GridSpec, at: Point, mass: f64) -> Result<Self> {
        let (r, c) = spec.require_pixel(at)?;
        let mut values = vec![0.0; spec.len()];
        values[spec.index(r, c)] = mass;
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.spec.index(row, col)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Rescales so the values sum to one.
    pub fn normalize(&self) -> Result<Self> {
        let mass = self.total_mass();
        if !(mass > 0.0) {
            return Err(Error::Degenerate("grid has zero mass".into()));
        }
        Ok(self.map_values(|v| v / mass))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.spec, self.values.iter().map(|v| v * factor).collect())
    }

    /// Same values, frame origin moved to `origin`.
    pub fn with_origin(&self, origin: Point) -> Self {
        Self {
            spec: self.spec.with_origin(origin),
            values: self.values.clone(),
        }
    }

    pub(crate) fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    /// Bilinear upsampling by an integer factor.
    ///
    /// The output keeps the origin, divides the resolution by `factor` and
    /// multiplies both dimensions by `factor`. Each output pixel takes the
    /// bilinear interpolation of the input at its own metric center; samples
    /// past the last input row or column replicate the edge.
    pub fn upsample_bilinear(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidConfig("upsample factor must be >= 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let src = &self.spec;
        let spec = GridSpec::new(
            src.width * factor,
            src.height * factor,
            src.resolution / factor as f64,
            src.origin,
        )?;
        // Per-axis (lower index, upper index, upper weight) lookup tables.
        let axis = |n_src: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
            (0..n_out)
                .map(|j| {
                    let lo = j / factor;
                    let t = (j % factor) as f64 / factor as f64;
                    if lo + 1 >= n_src {
                        (n_src - 1, n_src - 1, 0.0)
                    } else {
                        (lo, lo + 1, t)
                    }
                })
                .collect()
        };
        let cols = axis(src.width, spec.width);
        let rows = axis(src.height, spec.height);
        let mut values = vec![0.0; spec.len()];
        par::for_each_row_mut(&mut values, spec.width, |r, out| {
            let (r0, r1, ty) = rows[r];
            for (c, o) in out.iter_mut().enumerate() {
                let (c0, c1, tx) = cols[c];
                let top = lerp(self.get(r0, c0), self.get(r0, c1), tx);
                let bottom = lerp(self.get(r1, c0), self.get(r1, c1), tx);
                *o = lerp(top, bottom, ty);
            }
        });
        Ok(Self { spec, values })
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else {
        (1.0 - t) * a + t * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(w: usize, h: usize) -> GridSpec {
        GridSpec::new(w, h, 0.5, Point::ORIGIN).unwrap()
    }

    #[test]
    fn rejects_bad_specs_and_values() {
        assert!(GridSpec::new(0, 3, 0.5, Point::ORIGIN).is_err());
        assert!(GridSpec::new(3, 3, 0.0, Point::ORIGIN).is_err());
        assert!(ProbabilityGrid::new(spec(2, 1), vec![0.0, -1.0]).is_err());
        assert!(ProbabilityGrid::new(spec(2, 1), vec![0.0, f64::NAN]).is_err());
        assert!(ProbabilityGrid::new(spec(2, 1), vec![0.0]).is_err());
    }

    #[test]
    fn centered_frame_puts_origin_mid_grid() {
        let s = GridSpec::centered(DEFAULT_SIZE, DEFAULT_SIZE, DEFAULT_RESOLUTION).unwrap();
        assert_eq!(s.origin, Point::new(-55.75, -55.75));
        assert_eq!(s.pixel_of(Point::new(0.1, -0.1)), Some((111, 112)));
        assert_eq!(s.pixel_of(Point::new(60.0, 0.0)), None);
    }

    #[test]
    fn mass_and_normalize() {
        let zero = ProbabilityGrid::zeros(spec(3, 3));
        assert_eq!(zero.total_mass(), 0.0);
        assert!(matches!(zero.normalize(), Err(Error::Degenerate(_))));

        let delta = ProbabilityGrid::delta(spec(3, 3), Point::new(0.5, 0.5), 5.0).unwrap();
        let n = delta.normalize().unwrap();
        assert_eq!(n.get(1, 1), 1.0);

        let uniform = ProbabilityGrid::new(spec(10, 10), vec![0.02; 100]).unwrap();
        assert!((uniform.total_mass() - 2.0).abs() < 1e-12);
        let n = uniform.normalize().unwrap();
        assert!(n.values().iter().all(|v| (v - 0.01).abs() < 1e-15));
    }

    #[test]
    fn upsample_identity_and_constant() {
        let g = ProbabilityGrid::new(spec(2, 2), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(g.upsample_bilinear(1).unwrap(), g);
        assert!(g.upsample_bilinear(0).is_err());

        let c = ProbabilityGrid::new(spec(3, 2), vec![0.7; 6]).unwrap();
        let up = c.upsample_bilinear(2).unwrap();
        assert_eq!((up.spec().width, up.spec().height), (6, 4));
        assert_eq!(up.spec().resolution, 0.25);
        assert!(up.values().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn upsample_interpolates_midpoint_column() {
        // [[0, 1], [0, 1]]: column 1 of the output sits halfway between the inputs.
        let g = ProbabilityGrid::new(spec(2, 2), vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let up = g.upsample_bilinear(2).unwrap();
        for r in 0..4 {
            assert_eq!(up.get(r, 0), 0.0);
            assert_eq!(up.get(r, 1), 0.5);
            assert_eq!(up.get(r, 2), 1.0);
        }
        // Metric location of an output pixel matches the input location it interpolates.
        assert_eq!(up.spec().pixel_center(0, 2), g.spec().pixel_center(0, 1));
    }

    proptest! {
        #[test]
        fn upsample_stays_within_input_bounds(
            vals in proptest::collection::vec(0.0f64..10.0, 12),
            factor in 1usize..5,
        ) {
            let g = ProbabilityGrid::new(spec(4, 3), vals).unwrap();
            let up = g.upsample_bilinear(factor).unwrap();
            let (lo, hi) = (g.min_value(), g.max_value());
            for &v in up.values() {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
