//! Synthetic multimodal futures: Gaussian mixtures rendered as heatmaps,
//! ground-truth draws, and the MR / FDE trade-off sweep over refinement
//! iterations.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{GridSpec, ProbabilityGrid};
use crate::oracle::monte_carlo_metrics;
use crate::par;
use crate::sampling::{sample_fde, sample_mr, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub mean: Point,
    /// Isotropic standard deviation in meters.
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    #[serde(default)]
    pub name: String,
    pub components: Vec<MixtureComponent>,
    #[serde(default)]
    pub seed: u64,
}

impl GaussianMixture {
    pub fn new(components: Vec<MixtureComponent>, seed: u64) -> Result<Self> {
        let m = Self {
            name: String::new(),
            components,
            seed,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidConfig("mixture has no components".into()));
        }
        for c in &self.components {
            if !(c.weight > 0.0) || !(c.sigma > 0.0) || !c.mean.is_finite() {
                return Err(Error::InvalidConfig(format!("invalid component {c:?}")));
            }
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("weights sum to {total}")));
        }
        Ok(())
    }

    pub fn density(&self, x: Point) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let s2 = c.sigma * c.sigma;
                c.weight / (2.0 * PI * s2) * (-x.distance_sq(c.mean) / (2.0 * s2)).exp()
            })
            .sum()
    }

    /// Draws one endpoint: a component by weight, then a point from its Gaussian.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let comp = &self.components[self.pick_component(rng)];
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        comp.mean + Point::new(dx, dy) * comp.sigma
    }

    /// Chooses a component index with probability equal to its weight.
    pub fn pick_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                return i;
            }
        }
        self.components.len() - 1
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("mixture serializes")
    }
}

/// Mixture density at each pixel center times the pixel area.
pub fn mixture_to_grid(mixture: &GaussianMixture, spec: GridSpec) -> Result<ProbabilityGrid> {
    mixture.validate()?;
    for c in &mixture.components {
        spec.require_pixel(c.mean)?;
    }
    let area = spec.resolution * spec.resolution;
    let mut values = vec![0.0; spec.len()];
    par::for_each_row_mut(&mut values, spec.width, |r, row| {
        for (c, v) in row.iter_mut().enumerate() {
            *v = mixture.density(spec.pixel_center(r, c)) * area;
        }
    });
    ProbabilityGrid::new(spec, values)
}

/// One ground-truth endpoint, fully determined by `seed`.
pub fn draw_ground_truth(mixture: &GaussianMixture, seed: u64) -> Point {
    mixture.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub l: usize,
    pub expected_mr: f64,
    pub expected_fde: f64,
    pub mr_std_err: f64,
    pub fde_std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub rows: Vec<TradeoffRow>,
}

impl TradeoffCurve {
    /// Writes `L,expected_mr,expected_fde`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "L,expected_mr,expected_fde")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.l, r.expected_mr, r.expected_fde)?;
        }
        Ok(())
    }
}

/// Expected MR and FDE of MR sampling refined for each `L` in `l_values`.
///
/// Every row scores against the same ground-truth draws (the stream of
/// `seed`), so differences between rows come from the samples alone.
pub fn sweep_tradeoff(
    mixture: &GaussianMixture,
    spec: GridSpec,
    cfg: &SamplerConfig,
    l_values: &[usize],
    draws: usize,
    seed: u64,
) -> Result<TradeoffCurve> {
    if l_values.is_empty() || l_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "L values must be distinct and ascending".into(),
        ));
    }
    let grid = mixture_to_grid(mixture, spec)?;
    let init = sample_mr(&grid, cfg)?;
    let rows = par::map_range(l_values.len(), |i| -> Result<TradeoffRow> {
        let l = l_values[i];
        let run = SamplerConfig {
            fde_iters: l,
            ..*cfg
        };
        let samples = sample_fde(&grid, &init, &run)?;
        let mc = monte_carlo_metrics(mixture, samples.points(), draws, seed, cfg.miss_threshold)?;
        Ok(TradeoffRow {
            l,
            expected_mr: mc.mr,
            expected_fde: mc.min_fde,
            mr_std_err: mc.mr_std_err,
            fde_std_err: mc.fde_std_err,
        })
    });
    Ok(TradeoffCurve {
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// Seeded family of 3-5 mode mixtures spread ahead of the agent, used as
/// stand-ins for predicted heatmaps.
pub fn synthetic_suite(count: usize, base_seed: u64) -> Vec<GaussianMixture> {
    (0..count as u64)
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes = rng.random_range(3..=5);
            let raw: Vec<(Point, f64, f64)> = (0..modes)
                .map(|_| {
                    let range = rng.random_range(6.0..32.0);
                    let bearing = rng.random_range(-1.0..1.0);
                    let mean = Point::new(range * f64::cos(bearing), range * f64::sin(bearing));
                    (mean, rng.random_range(0.8..2.5), rng.random_range(0.2..1.0))
                })
                .collect();
            let total: f64 = raw.iter().map(|r| r.2).sum();
            let components = raw
                .into_iter()
                .map(|(mean, sigma, w)| MixtureComponent {
                    mean,
                    sigma,
                    weight: w / total,
                })
                .collect();
            GaussianMixture {
                name: format!("suite-{seed}"),
                components,
                seed,
            }
        })
        .collect()
}
