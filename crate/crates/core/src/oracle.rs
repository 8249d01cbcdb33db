//! Independent evaluators for the sampling objectives: exact union coverage,
//! expected displacement, exhaustive coverage search and Monte-Carlo metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{GridSpec, ProbabilityGrid, DEFAULT_RESOLUTION};
use crate::par;
use crate::sampling::{sample_mr, CircleKernel, SampleSet, SamplerConfig};
use crate::scenario::GaussianMixture;

/// Largest grid side the exhaustive search accepts.
pub const BRUTE_FORCE_MAX_SIDE: usize = 24;
/// Largest subset size the exhaustive search accepts.
pub const BRUTE_FORCE_MAX_K: usize = 3;

const MC_CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Mass within `radius` of any point, counted once.
    Coverage { radius: f64 },
    /// Mass-weighted distance to the nearest point.
    ExpectedFde,
}

impl Objective {
    pub fn evaluate(&self, grid: &ProbabilityGrid, points: &[Point]) -> Result<f64> {
        match *self {
            Objective::Coverage { radius } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidConfig(format!("coverage radius {radius}")));
                }
                Ok(objective_coverage(grid, points, radius))
            }
            Objective::ExpectedFde => Ok(objective_fde(grid, points)),
        }
    }
}

/// `sum_i p_i * [min_k |c_k - x_i| <= radius]`.
pub fn objective_coverage(grid: &ProbabilityGrid, points: &[Point], radius: f64) -> f64 {
    let spec = grid.spec();
    let r2 = radius * radius;
    grid.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let (r, c) = spec.row_col(*i);
            let x = spec.pixel_center(r, c);
            points.iter().any(|p| p.distance_sq(x) <= r2)
        })
        .map(|(_, v)| v)
        .sum()
}

/// `sum_i p_i * min_k |c_k - x_i|`.
pub fn objective_fde(grid: &ProbabilityGrid, points: &[Point]) -> f64 {
    let spec = grid.spec();
    grid.values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| {
            let (r, c) = spec.row_col(i);
            let x = spec.pixel_center(r, c);
            let d = points
                .iter()
                .map(|p| p.distance(x))
                .fold(f64::INFINITY, f64::min);
            v * d
        })
        .sum()
}

/// Result of the exhaustive coverage search.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageOptimum {
    /// Row-major pixel indices, ascending.
    pub pixels: Vec<usize>,
    pub coverage: f64,
    pub samples: SampleSet,
}

struct Disks {
    members: Vec<Vec<usize>>,
    values: Vec<f64>,
}

impl Disks {
    fn new(grid: &ProbabilityGrid, kernel: &CircleKernel) -> Self {
        let spec = grid.spec();
        let (w, h) = (spec.width as isize, spec.height as isize);
        let members = (0..spec.len())
            .map(|i| {
                let (r, c) = spec.row_col(i);
                let mut m: Vec<usize> = kernel
                    .offsets()
                    .iter()
                    .map(|&(di, dj)| (r as isize + di, c as isize + dj))
                    .filter(|&(rr, cc)| rr >= 0 && cc >= 0 && rr < h && cc < w)
                    .map(|(rr, cc)| (rr * w + cc) as usize)
                    .collect();
                m.sort_unstable();
                m
            })
            .collect();
        Self {
            members,
            values: grid.values().to_vec(),
        }
    }

    /// Mass of the union of the disks, summed in ascending pixel order.
    fn union(&self, centers: &[usize]) -> f64 {
        let mut all: Vec<usize> = centers
            .iter()
            .flat_map(|&c| self.members[c].iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all.iter().map(|&i| self.values[i]).sum()
    }
}

#[derive(Clone)]
struct Best {
    value: f64,
    subset: Vec<usize>,
}

impl Best {
    fn offer(&mut self, value: f64, mut subset: Vec<usize>) {
        subset.sort_unstable();
        if value > self.value || (value == self.value && subset < self.subset) {
            self.value = value;
            self.subset = subset;
        }
    }
}

/// Exhaustive search for the `k` pixels whose disks cover the most mass.
///
/// Branch-and-bound over pixels ranked by single-disk mass: a branch is cut
/// only when its bound is strictly below the incumbent, so equal-valued
/// subsets are still compared and the lexicographically smallest wins.
pub fn brute_force_coverage(
    grid: &ProbabilityGrid,
    kernel: &CircleKernel,
    k: usize,
) -> Result<CoverageOptimum> {
    let spec = *grid.spec();
    if spec.width > BRUTE_FORCE_MAX_SIDE || spec.height > BRUTE_FORCE_MAX_SIDE {
        return Err(Error::SizeBound(format!(
            "{}x{} grid exceeds {BRUTE_FORCE_MAX_SIDE}x{BRUTE_FORCE_MAX_SIDE}",
            spec.width, spec.height
        )));
    }
    if k == 0 || k > BRUTE_FORCE_MAX_K || k > spec.len() {
        return Err(Error::SizeBound(format!(
            "k = {k} outside 1..={BRUTE_FORCE_MAX_K}"
        )));
    }
    if (kernel.resolution() - spec.resolution).abs() > 1e-9 * spec.resolution {
        return Err(Error::InvalidConfig(
            "kernel resolution does not match grid".into(),
        ));
    }
    let disks = Disks::new(grid, kernel);
    let single: Vec<f64> = (0..spec.len()).map(|i| disks.union(&[i])).collect();
    let mut rank: Vec<usize> = (0..spec.len()).collect();
    rank.sort_unstable_by(|&a, &b| single[b].total_cmp(&single[a]).then(a.cmp(&b)));

    // Incumbent from a plain greedy pass.
    let mut greedy: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut pick = None;
        let mut best = f64::NEG_INFINITY;
        for i in 0..spec.len() {
            if greedy.contains(&i) {
                continue;
            }
            greedy.push(i);
            let v = disks.union(&greedy);
            greedy.pop();
            if v > best {
                best = v;
                pick = Some(i);
            }
        }
        greedy.extend(pick);
    }
    let incumbent = Best {
        value: disks.union(&greedy),
        subset: {
            let mut g = greedy.clone();
            g.sort_unstable();
            g
        },
    };
    let lower = incumbent.value;
    let n = rank.len();
    let bound = |pos: &[usize], next: usize| -> f64 {
        let fixed: f64 = pos.iter().map(|&p| single[rank[p]]).sum();
        let free = k - pos.len();
        fixed
            + (next..(next + free).min(n))
                .map(|p| single[rank[p]])
                .sum::<f64>()
    };

    let branches = par::map_range(n, |a| {
        let mut best = Best {
            value: f64::NEG_INFINITY,
            subset: Vec::new(),
        };
        if bound(&[a], a + 1) < lower {
            return best;
        }
        if k == 1 {
            best.offer(single[rank[a]], vec![rank[a]]);
            return best;
        }
        let floor = |b: &Best| b.value.max(lower);
        for b in a + 1..n {
            if bound(&[a, b], b + 1) < floor(&best) {
                break;
            }
            if k == 2 {
                best.offer(disks.union(&[rank[a], rank[b]]), vec![rank[a], rank[b]]);
                continue;
            }
            for c in b + 1..n {
                if bound(&[a, b, c], n) < floor(&best) {
                    break;
                }
                let subset = [rank[a], rank[b], rank[c]];
                best.offer(disks.union(&subset), subset.to_vec());
            }
        }
        best
    });
    let mut best = incumbent;
    for b in branches {
        if !b.subset.is_empty() {
            best.offer(b.value, b.subset);
        }
    }
    let offsets = best
        .subset
        .iter()
        .map(|&i| {
            let (r, c) = spec.row_col(i);
            spec.offset(r, c)
        })
        .collect();
    Ok(CoverageOptimum {
        samples: SampleSet::from_offsets(spec.origin, offsets),
        coverage: best.value,
        pixels: best.subset,
    })
}

/// Mass of `grid` under the union of kernel disks centered on the pixels of
/// `points`, summed in the same order as [`brute_force_coverage`] so the two
/// can be compared with `==`.
pub fn union_coverage(
    grid: &ProbabilityGrid,
    kernel: &CircleKernel,
    points: &[Point],
) -> Result<f64> {
    let spec = *grid.spec();
    kernel.check_resolution(spec.resolution)?;
    let (w, h) = (spec.width as isize, spec.height as isize);
    let mut all = Vec::new();
    for &p in points {
        let (r, c) = spec.require_pixel(p)?;
        for &(di, dj) in kernel.offsets() {
            let (rr, cc) = (r as isize + di, c as isize + dj);
            if rr >= 0 && cc >= 0 && rr < h && cc < w {
                all.push((rr * w + cc) as usize);
            }
        }
    }
    all.sort_unstable();
    all.dedup();
    Ok(all.iter().map(|&i| grid.values()[i]).sum())
}

/// One greedy-versus-exhaustive comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyInstance {
    pub seed: u64,
    pub side: usize,
    pub k: usize,
    pub greedy: f64,
    pub optimum: f64,
    /// K = 1 must match exactly; larger K must reach `1 - 1/e` of the optimum.
    pub passed: bool,
}

/// Seeded `side x side` grid at 0.5 m with spiky random mass (uniform draws
/// raised to the fourth power), normalized.
pub fn random_grid(side: usize, seed: u64) -> Result<ProbabilityGrid> {
    let spec = GridSpec::centered(side, side, DEFAULT_RESOLUTION)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..spec.len())
        .map(|_| rng.random::<f64>().powi(4))
        .collect();
    ProbabilityGrid::new(spec, values)?.normalize()
}

/// Runs MR sampling without upsampling on [`random_grid`] and scores it
/// against [`brute_force_coverage`] with the default 1.8 m disk.
pub fn verify_greedy(side: usize, k: usize, seed: u64) -> Result<VerifyInstance> {
    let grid = random_grid(side, seed)?;
    let cfg = SamplerConfig {
        k,
        upsample_factor: 1,
        ..SamplerConfig::default()
    };
    let kernel = CircleKernel::new(cfg.mr_radius, DEFAULT_RESOLUTION)?;
    let picks = sample_mr(&grid, &cfg)?;
    let greedy = union_coverage(&grid, &kernel, picks.points())?;
    let optimum = brute_force_coverage(&grid, &kernel, k)?.coverage;
    let passed = if k == 1 {
        greedy == optimum
    } else {
        greedy >= (1.0 - (-1.0f64).exp()) * optimum
    };
    Ok(VerifyInstance {
        seed,
        side,
        k,
        greedy,
        optimum,
        passed,
    })
}

/// Monte-Carlo estimates of miss rate and min FDE against a fixed sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub draws: usize,
    pub mr: f64,
    pub min_fde: f64,
    pub mr_std_err: f64,
    pub fde_std_err: f64,
}

/// Draws ground-truth endpoints from `mixture` and scores `points` against them.
///
/// Draws are generated in fixed blocks, each from its own ChaCha stream of
/// `seed`, so the result does not depend on the thread count.
pub fn monte_carlo_metrics(
    mixture: &GaussianMixture,
    points: &[Point],
    draws: usize,
    seed: u64,
    threshold: f64,
) -> Result<MonteCarloReport> {
    if draws == 0 {
        return Err(Error::InvalidConfig("draws must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let blocks = draws.div_ceil(MC_CHUNK);
    let partial = par::map_range(blocks, |b| {
        let n = MC_CHUNK.min(draws - b * MC_CHUNK);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let (mut misses, mut sum, mut sum_sq) = (0usize, 0.0f64, 0.0f64);
        for _ in 0..n {
            let gt = mixture.sample(&mut rng);
            let d = points
                .iter()
                .map(|p| p.distance(gt))
                .fold(f64::INFINITY, f64::min);
            if d > threshold {
                misses += 1;
            }
            sum += d;
            sum_sq += d * d;
        }
        (misses, sum, sum_sq)
    });
    let (misses, sum, sum_sq) = partial
        .into_iter()
        .fold((0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = draws as f64;
    let mr = misses as f64 / n;
    let min_fde = sum / n;
    let var = (sum_sq / n - min_fde * min_fde).max(0.0);
    Ok(MonteCarloReport {
        draws,
        mr,
        min_fde,
        mr_std_err: (mr * (1.0 - mr) / n).sqrt(),
        fde_std_err: (var / n).sqrt(),
    })
}
