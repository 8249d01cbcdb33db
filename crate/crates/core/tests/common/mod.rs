#![allow(dead_code)]

use heatmap_forecast::geometry::Point;
use heatmap_forecast::grid::{GridSpec, ProbabilityGrid};
use heatmap_forecast::sampling::{
    sample_fde, sample_kmeans, sample_mr, sample_nms, SampleSet, SamplerConfig,
};
use heatmap_forecast::scenario::{mixture_to_grid, GaussianMixture, MixtureComponent};

pub const SAMPLERS: [&str; 4] = ["mr", "fde", "nms", "kmeans"];

pub fn run_sampler(name: &str, grid: &ProbabilityGrid, cfg: &SamplerConfig) -> SampleSet {
    match name {
        "mr" => sample_mr(grid, cfg),
        "fde" => sample_fde(grid, &sample_mr(grid, cfg).unwrap(), cfg),
        "nms" => sample_nms(grid, cfg),
        "kmeans" => sample_kmeans(grid, cfg),
        other => panic!("unknown sampler {other}"),
    }
    .unwrap()
}

pub fn three_modes(seed: u64) -> GaussianMixture {
    GaussianMixture::new(
        vec![
            MixtureComponent {
                mean: Point::new(6.0, 1.0),
                sigma: 1.2,
                weight: 0.5,
            },
            MixtureComponent {
                mean: Point::new(12.0, -4.0),
                sigma: 2.0,
                weight: 0.3,
            },
            MixtureComponent {
                mean: Point::new(15.0, 5.0),
                sigma: 0.9,
                weight: 0.2,
            },
        ],
        seed,
    )
    .unwrap()
}

/// Three-mode heatmap on a compact 96x64 frame.
pub fn three_mode_grid() -> ProbabilityGrid {
    let spec = GridSpec::new(96, 64, 0.5, Point::new(-8.0, -16.0)).unwrap();
    mixture_to_grid(&three_modes(0), spec).unwrap()
}
