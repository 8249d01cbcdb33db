//! Vector scene description, read from TOML.
//!
//! ```toml
//! [[drivable]]
//! points = [{ x = -5.0, y = -5.0 }, { x = 5.0, y = -5.0 }, { x = 5.0, y = 5.0 }, { x = -5.0, y = 5.0 }, { x = -5.0, y = -5.0 }]
//!
//! [[boundaries]]
//! points = [{ x = -5.0, y = 5.0 }, { x = 5.0, y = 5.0 }]
//!
//! [[centerlines]]
//! points = [{ x = -5.0, y = 0.0 }, { x = 5.0, y = 0.0 }]
//! headings = [0.0, 0.0]
//!
//! [target]
//! length = 4.0
//! width = 2.0
//! [target.history]
//! points = [{ x = -1.0, y = 0.0 }, { x = 0.0, y = 0.0 }]
//! timestamps = [-0.1, 0.0]
//! padding_mask = [false, false]
//! ```

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::trajectory::AgentHistory;

/// Closed ring: the first vertex is repeated at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Point>,
}

/// Directed lane centerline with one heading (radians, `[0, 2pi)`) per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centerline {
    pub points: Vec<Point>,
    pub headings: Vec<f64>,
}

/// An agent's past and its footprint rectangle in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrack {
    pub history: AgentHistory,
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub drivable: Vec<Polygon>,
    #[serde(default)]
    pub boundaries: Vec<Polyline>,
    #[serde(default)]
    pub centerlines: Vec<Centerline>,
    #[serde(default)]
    pub target: Option<AgentTrack>,
    #[serde(default)]
    pub neighbors: Vec<AgentTrack>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let finite = |pts: &[Point]| pts.iter().all(|p| p.is_finite());
        for (i, poly) in self.drivable.iter().enumerate() {
            if poly.points.len() < 4 || poly.points.first() != poly.points.last() {
                return Err(Error::InvalidConfig(format!(
                    "drivable polygon {i} is not a closed ring"
                )));
            }
            if !finite(&poly.points) {
                return Err(Error::InvalidConfig(format!(
                    "drivable polygon {i} has non-finite vertices"
                )));
            }
        }
        for (i, line) in self.boundaries.iter().enumerate() {
            if !finite(&line.points) {
                return Err(Error::InvalidConfig(format!(
                    "boundary {i} has non-finite vertices"
                )));
            }
        }
        for (i, cl) in self.centerlines.iter().enumerate() {
            if cl.headings.len() != cl.points.len() {
                return Err(Error::LengthMismatch {
                    expected: cl.points.len(),
                    actual: cl.headings.len(),
                });
            }
            if !finite(&cl.points) || cl.headings.iter().any(|h| !(0.0..TAU).contains(h)) {
                return Err(Error::InvalidConfig(format!(
                    "centerline {i} has invalid geometry or headings"
                )));
            }
        }
        for agent in self.target.iter().chain(&self.neighbors) {
            agent.history.validate()?;
            if !(agent.length > 0.0 && agent.width > 0.0) {
                return Err(Error::InvalidConfig(
                    "agent footprint must be positive".into(),
                ));
            }
            if !finite(&agent.history.points) {
                return Err(Error::InvalidConfig(
                    "agent history has non-finite points".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scene: Self = toml::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn translated(&self, by: Point) -> Self {
        let shift = |pts: &[Point]| pts.iter().map(|&p| p + by).collect::<Vec<_>>();
        let agent = |a: &AgentTrack| AgentTrack {
            history: a.history.translated(by),
            ..a.clone()
        };
        Scene {
            drivable: self
                .drivable
                .iter()
                .map(|p| Polygon {
                    points: shift(&p.points),
                })
                .collect(),
            boundaries: self
                .boundaries
                .iter()
                .map(|l| Polyline {
                    points: shift(&l.points),
                })
                .collect(),
            centerlines: self
                .centerlines
                .iter()
                .map(|c| Centerline {
                    points: shift(&c.points),
                    headings: c.headings.clone(),
                })
                .collect(),
            target: self.target.as_ref().map(agent),
            neighbors: self.neighbors.iter().map(agent).collect(),
        }
    }
}
