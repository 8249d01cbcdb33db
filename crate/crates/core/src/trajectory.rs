//! Endpoint-conditioned trajectories under a constant-acceleration model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Past positions for `t` in `[-H, 0]`, one per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentHistory {
    pub points: Vec<Point>,
    /// Seconds, strictly increasing.
    pub timestamps: Vec<f64>,
    /// `true` where the step is padding rather than an observation.
    pub padding_mask: Vec<bool>,
}

impl AgentHistory {
    pub fn new(points: Vec<Point>, timestamps: Vec<f64>, padding_mask: Vec<bool>) -> Result<Self> {
        let h = Self {
            points,
            timestamps,
            padding_mask,
        };
        h.validate()?;
        Ok(h)
    }

    /// Fully observed history sampled every `dt` seconds, ending at `t = 0`.
    pub fn observed(points: Vec<Point>, dt: f64) -> Result<Self> {
        let n = points.len();
        let timestamps = (0..n).map(|i| (i as f64 - (n as f64 - 1.0)) * dt).collect();
        Self::new(points, timestamps, vec![false; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.padding_mask.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                actual: self.padding_mask.len(),
            });
        }
        if self.points.len() != self.timestamps.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                actual: self.timestamps.len(),
            });
        }
        if self.timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "history timestamps must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of observed (unpadded) steps.
    pub fn observed_indices(&self) -> impl DoubleEndedIterator<Item = usize> + '_ {
        self.padding_mask
            .iter()
            .enumerate()
            .filter(|(_, &pad)| !pad)
            .map(|(i, _)| i)
    }

    pub fn translated(&self, by: Point) -> Self {
        Self {
            points: self.points.iter().map(|&p| p + by).collect(),
            ..self.clone()
        }
    }
}

/// Future positions for `t` in `[1, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<Point>,
}

impl Trajectory {
    pub fn endpoint(&self) -> Point {
        self.points[self.points.len() - 1]
    }
}

/// Quadratic path from the last observed position to `endpoint` at step `horizon`.
///
/// The initial velocity is the per-step displacement between the last two
/// observed points (zero with a single observation); the acceleration is
/// whatever makes the path land on `endpoint` exactly. If the newest
/// observation is older than `t = 0` the path starts from that step.
pub fn build_trajectory(
    history: &AgentHistory,
    endpoint: Point,
    horizon: usize,
) -> Result<Trajectory> {
    history.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidConfig(
            "horizon must be at least 1 step".into(),
        ));
    }
    let mut observed = history.observed_indices().rev();
    let last = observed
        .next()
        .ok_or_else(|| Error::Degenerate("history has no observed steps".into()))?;
    let velocity = match observed.next() {
        Some(prev) => (history.points[last] - history.points[prev]) * (1.0 / (last - prev) as f64),
        None => Point::ORIGIN,
    };
    let start = history.points[last];
    // Steps from the last observation to t = T.
    let lag = (history.len() - 1 - last) as f64;
    let span = lag + horizon as f64;
    let accel = (endpoint - start - velocity * span) * (2.0 / (span * span));

    let mut points: Vec<Point> = (1..=horizon)
        .map(|t| {
            let s = lag + t as f64;
            start + velocity * s + accel * (0.5 * s * s)
        })
        .collect();
    points[horizon - 1] = endpoint;
    Ok(Trajectory { points })
}
