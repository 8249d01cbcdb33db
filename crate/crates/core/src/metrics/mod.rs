//! Forecasting metrics: miss rate, min FDE / ADE, their probability-penalized
//! variants, and probability assignment from a heatmap.

mod io;

pub use io::{read_ground_truth_csv, read_predictions_csv, write_report_json, GroundTruth};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::ProbabilityGrid;
use crate::par;

pub const DEFAULT_MISS_THRESHOLD: f64 = 2.0;

fn nearest(preds: &[Point], gt: Point) -> Result<(usize, f64)> {
    preds
        .iter()
        .enumerate()
        .map(|(k, p)| (k, p.distance(gt)))
        .fold(None, |acc: Option<(usize, f64)>, (k, d)| match acc {
            Some((_, best)) if best <= d => acc,
            _ => Some((k, d)),
        })
        .ok_or(Error::EmptyPredictions)
}

/// True when every prediction is strictly farther than `threshold` from `gt`.
pub fn miss(preds: &[Point], gt: Point, threshold: f64) -> Result<bool> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig(format!("miss threshold {threshold}")));
    }
    Ok(nearest(preds, gt)?.1 > threshold)
}

pub fn min_fde(preds: &[Point], gt: Point) -> Result<f64> {
    Ok(nearest(preds, gt)?.1)
}

/// Mean pointwise l2 error between two equal-length trajectories.
pub fn ade(traj: &[Point], gt: &[Point]) -> Result<f64> {
    if traj.len() != gt.len() {
        return Err(Error::LengthMismatch {
            expected: gt.len(),
            actual: traj.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let sum: f64 = traj.iter().zip(gt).map(|(a, b)| a.distance(*b)).sum();
    Ok(sum / gt.len() as f64)
}

pub fn min_ade(trajectories: &[Vec<Point>], gt: &[Point]) -> Result<f64> {
    if trajectories.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    trajectories
        .iter()
        .map(|t| ade(t, gt))
        .try_fold(f64::INFINITY, |best, e| e.map(|e| best.min(e)))
}

/// Adds `-ln(p_best)` to a displacement metric.
pub fn p_metric(base: f64, p_best: f64) -> Result<f64> {
    if !(p_best > 0.0 && p_best <= 1.0) {
        return Err(Error::Domain(format!(
            "probability {p_best} of the best prediction must lie in (0, 1]"
        )));
    }
    Ok(base - p_best.ln())
}

/// Circle integrals around each endpoint and the probabilities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityAssignment {
    /// Normalized-grid mass within `radius` of each endpoint.
    pub raw: Vec<f64>,
    /// `raw` rescaled to sum to one.
    pub probabilities: Vec<f64>,
    /// Set when every integral was zero and probabilities fell back to `1 / K`.
    pub uniform_fallback: bool,
}

/// Probability of each endpoint: heatmap mass within `radius` of it,
/// normalized over the K endpoints.
pub fn assign_probabilities(
    grid: &ProbabilityGrid,
    endpoints: &[Point],
    radius: f64,
) -> Result<ProbabilityAssignment> {
    if endpoints.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig(format!("radius {radius}")));
    }
    let mass = grid.total_mass();
    if !(mass > 0.0) {
        return Err(Error::Degenerate("grid has zero mass".into()));
    }
    let spec = grid.spec();
    let reach = (radius / spec.resolution).ceil() as isize + 1;
    let r2 = radius * radius;
    let raw: Vec<f64> = endpoints
        .iter()
        .map(|&e| {
            let (er, ec) = spec.to_pixel_coords(e);
            let (er, ec) = (er.round() as isize, ec.round() as isize);
            let mut acc = 0.0;
            for r in (er - reach).max(0)..=(er + reach).min(spec.height as isize - 1) {
                for c in (ec - reach).max(0)..=(ec + reach).min(spec.width as isize - 1) {
                    let (r, c) = (r as usize, c as usize);
                    if spec.pixel_center(r, c).distance_sq(e) <= r2 {
                        acc += grid.get(r, c);
                    }
                }
            }
            acc / mass
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        let probabilities = raw.iter().map(|v| v / total).collect();
        Ok(ProbabilityAssignment {
            raw,
            probabilities,
            uniform_fallback: false,
        })
    } else {
        log::warn!("no heatmap mass near any endpoint; assigning uniform probabilities");
        let k = endpoints.len();
        Ok(ProbabilityAssignment {
            raw,
            probabilities: vec![1.0 / k as f64; k],
            uniform_fallback: true,
        })
    }
}

/// K predicted trajectories with probabilities and the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionCase {
    pub id: String,
    pub trajectories: Vec<Vec<Point>>,
    pub probabilities: Vec<f64>,
    pub ground_truth: Vec<Point>,
}

impl PredictionCase {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories.is_empty() {
            return Err(Error::EmptyPredictions);
        }
        if self.probabilities.len() != self.trajectories.len() {
            return Err(Error::LengthMismatch {
                expected: self.trajectories.len(),
                actual: self.probabilities.len(),
            });
        }
        if let Some(p) = self.probabilities.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::Domain(format!(
                "negative probability {p} in case {}",
                self.id
            )));
        }
        for t in &self.trajectories {
            if t.len() != self.ground_truth.len() {
                return Err(Error::LengthMismatch {
                    expected: self.ground_truth.len(),
                    actual: t.len(),
                });
            }
        }
        if self.ground_truth.is_empty() {
            return Err(Error::Degenerate(format!(
                "case {} has no timesteps",
                self.id
            )));
        }
        Ok(())
    }

    pub fn endpoints(&self) -> Vec<Point> {
        self.trajectories.iter().map(|t| t[t.len() - 1]).collect()
    }
}

/// Per-case metric values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub id: String,
    pub miss: bool,
    pub min_fde: f64,
    pub min_ade: f64,
    /// Index of the prediction whose endpoint is closest to the ground truth.
    pub best: usize,
    pub p_min_fde: f64,
    pub p_min_ade: f64,
}

/// Evaluates one case. The "best" prediction, whose probability enters the
/// p-metrics, is the one with the closest endpoint.
pub fn evaluate_case(case: &PredictionCase, threshold: f64) -> Result<CaseMetrics> {
    case.validate()?;
    let gt_end = case.ground_truth[case.ground_truth.len() - 1];
    let ends = case.endpoints();
    let (best, fde) = nearest(&ends, gt_end)?;
    let min_ade = min_ade(&case.trajectories, &case.ground_truth)?;
    let p = case.probabilities[best];
    Ok(CaseMetrics {
        id: case.id.clone(),
        miss: miss(&ends, gt_end, threshold)?,
        min_fde: fde,
        min_ade,
        best,
        p_min_fde: p_metric(fde, p)?,
        p_min_ade: p_metric(min_ade, p)?,
    })
}

/// Dataset-level means of the per-case metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cases: usize,
    /// Largest number of predictions in any case.
    pub k: usize,
    pub miss_threshold: f64,
    pub mr: f64,
    pub min_fde: f64,
    pub min_ade: f64,
    pub p_min_fde: f64,
    pub p_min_ade: f64,
    pub per_case: Vec<CaseMetrics>,
}

pub fn evaluate(cases: &[PredictionCase], threshold: f64) -> Result<MetricsReport> {
    if cases.is_empty() {
        return Err(Error::Degenerate("no cases to evaluate".into()));
    }
    let per_case = par::map_range(cases.len(), |i| evaluate_case(&cases[i], threshold))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = per_case.len() as f64;
    let mean = |f: fn(&CaseMetrics) -> f64| per_case.iter().map(f).sum::<f64>() / n;
    Ok(MetricsReport {
        cases: per_case.len(),
        k: cases
            .iter()
            .map(|c| c.trajectories.len())
            .max()
            .unwrap_or(0),
        miss_threshold: threshold,
        mr: mean(|c| if c.miss { 1.0 } else { 0.0 }),
        min_fde: mean(|c| c.min_fde),
        min_ade: mean(|c| c.min_ade),
        p_min_fde: mean(|c| c.p_min_fde),
        p_min_ade: mean(|c| c.p_min_ade),
        per_case,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn miss_boundaries() {
        let gt = Point::new(1.0, 1.0);
        assert!(!miss(&[gt], gt, 2.0).unwrap());
        assert!(miss(&[Point::new(3.1, 1.0), Point::new(-5.0, 0.0)], gt, 2.0).unwrap());
        assert!(!miss(&[Point::new(3.0, 1.0)], gt, 2.0).unwrap());
        assert!(matches!(miss(&[], gt, 2.0), Err(Error::EmptyPredictions)));
    }

    #[test]
    fn displacement_errors() {
        let gt: Vec<Point> = (1..=5).map(|t| Point::new(t as f64, 0.0)).collect();
        assert_eq!(min_fde(&[gt[4]], gt[4]).unwrap(), 0.0);
        assert_eq!(min_ade(std::slice::from_ref(&gt), &gt).unwrap(), 0.0);
        let shifted: Vec<Point> = gt.iter().map(|p| *p + Point::new(0.0, 1.0)).collect();
        assert_eq!(min_fde(&[shifted[4]], gt[4]).unwrap(), 1.0);
        assert_eq!(min_ade(&[shifted], &gt).unwrap(), 1.0);
        let preds = [
            Point::new(3.0, 0.0),
            Point::new(0.0, 1.5),
            Point::new(0.0, -4.0),
        ];
        assert_eq!(min_fde(&preds, Point::ORIGIN).unwrap(), 1.5);
        assert!(matches!(
            min_ade(&[gt[..3].to_vec()], &gt),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn penalized_metrics() {
        assert_eq!(p_metric(1.3, 1.0).unwrap(), 1.3);
        assert_relative_eq!(
            p_metric(1.0, 0.5).unwrap(),
            1.6931471805599454,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            p_metric(1.0, 1.0 / 6.0).unwrap(),
            2.791759469228055,
            max_relative = 1e-12
        );
        assert!(p_metric(1.0, 0.0).is_err());
    }

    fn two_mode_grid(a: f64, b: f64) -> ProbabilityGrid {
        let spec = GridSpec::centered(40, 10, 0.5).unwrap();
        let mut v = vec![0.0; spec.len()];
        v[spec.index(5, 5)] = a;
        v[spec.index(5, 30)] = b;
        if a + b < 1.0 {
            v[spec.index(0, 18)] = 1.0 - a - b;
        }
        ProbabilityGrid::new(spec, v).unwrap()
    }

    #[test]
    fn probability_assignment() {
        let g = two_mode_grid(0.5, 0.5);
        let s = *g.spec();
        let ends = [s.pixel_center(5, 5), s.pixel_center(5, 30)];
        let a = assign_probabilities(&g, &ends[..1], 2.0).unwrap();
        assert_eq!(a.probabilities, vec![1.0]);
        assert_eq!(a.raw, vec![0.5]);
        let a = assign_probabilities(&g, &ends, 2.0).unwrap();
        assert_eq!(a.probabilities, vec![0.5, 0.5]);

        let g = two_mode_grid(0.6, 0.2);
        let a = assign_probabilities(&g, &ends, 2.0).unwrap();
        assert_relative_eq!(a.raw[0], 0.6, max_relative = 1e-12);
        assert_relative_eq!(a.probabilities[0], 0.75, max_relative = 1e-12);
        assert_relative_eq!(a.probabilities[1], 0.25, max_relative = 1e-12);

        let far = [s.pixel_center(9, 18)];
        let a = assign_probabilities(&g, &far, 1.0).unwrap();
        assert!(a.uniform_fallback);
        assert_eq!(a.probabilities, vec![1.0]);
    }

    #[test]
    fn case_evaluation() {
        let gt = vec![Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        let case = PredictionCase {
            id: "a".into(),
            trajectories: vec![
                vec![Point::new(1.0, 3.0), Point::new(2.0, 3.0)],
                vec![Point::new(1.0, 0.5), Point::new(2.0, 0.5)],
            ],
            probabilities: vec![0.75, 0.25],
            ground_truth: gt,
        };
        let m = evaluate_case(&case, 2.0).unwrap();
        assert_eq!(m.best, 1);
        assert!(!m.miss);
        assert_eq!(m.min_fde, 0.5);
        assert_relative_eq!(m.p_min_fde, 0.5 + 4f64.ln(), max_relative = 1e-12);
        let report = evaluate(&[case], 2.0).unwrap();
        assert_eq!(report.mr, 0.0);
        assert_eq!(report.k, 2);
    }

    proptest! {
        #[test]
        fn appending_predictions_never_hurts(
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..8),
            gt in (-10.0f64..10.0, -10.0f64..10.0),
            thr in 0.1f64..5.0,
        ) {
            let pts: Vec<Point> = pts.into_iter().map(Point::from).collect();
            let gt = Point::from(gt);
            for k in 1..pts.len() {
                prop_assert!(min_fde(&pts[..k + 1], gt).unwrap() <= min_fde(&pts[..k], gt).unwrap());
                prop_assert!(miss(&pts[..k + 1], gt, thr).unwrap() <= miss(&pts[..k], gt, thr).unwrap());
            }
            prop_assert!(miss(&pts, gt, thr * 2.0).unwrap() <= miss(&pts, gt, thr).unwrap());
        }

        #[test]
        fn assignment_sums_to_one_and_ignores_scale(
            vals in proptest::collection::vec(0.0f64..1.0, 64),
            c in 0.01f64..100.0,
        ) {
            let spec = GridSpec::centered(8, 8, 0.5).unwrap();
            let mut vals = vals;
            vals[0] += 0.1;
            let g = ProbabilityGrid::new(spec, vals).unwrap();
            let ends = [spec.pixel_center(1, 1), spec.pixel_center(6, 5), Point::new(0.3, -0.2)];
            let a = assign_probabilities(&g, &ends, 1.0).unwrap();
            let b = assign_probabilities(&g.scaled(c).unwrap(), &ends, 1.0).unwrap();
            prop_assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
