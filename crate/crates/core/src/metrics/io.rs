//! CSV inputs (`case_id,k,t,x,y,prob` predictions and `case_id,t,x,y` ground
//! truth) and the JSON metrics report.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::Deserialize;

use super::{MetricsReport, PredictionCase};
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Deserialize)]
struct PredictionRow {
    case_id: String,
    k: usize,
    t: i64,
    x: f64,
    y: f64,
    prob: f64,
}

#[derive(Debug, Deserialize)]
struct TruthRow {
    case_id: String,
    t: i64,
    x: f64,
    y: f64,
}

fn rows<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<(usize, T)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = reader.headers()?.clone();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let row = rec.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push((line, row));
    }
    Ok(out)
}

fn check_finite(line: usize, x: f64, y: f64) -> Result<()> {
    if x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::Parse {
            line,
            message: "non-finite coordinate".into(),
        })
    }
}

/// Ground-truth tracks as `(case_id, [(t, point)])`, in file order with ascending `t`.
pub type GroundTruth = Vec<(String, Vec<(i64, Point)>)>;

pub fn read_ground_truth_csv<R: Read>(r: R) -> Result<GroundTruth> {
    let mut order = Vec::new();
    let mut cases: HashMap<String, BTreeMap<i64, Point>> = HashMap::new();
    for (line, row) in rows::<_, TruthRow>(r)? {
        check_finite(line, row.x, row.y)?;
        let steps = cases.entry(row.case_id.clone()).or_insert_with(|| {
            order.push(row.case_id.clone());
            BTreeMap::new()
        });
        if steps.insert(row.t, Point::new(row.x, row.y)).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate t = {} for case {}", row.t, row.case_id),
            });
        }
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let steps = cases.remove(&id).unwrap_or_default();
            (id, steps.into_iter().collect())
        })
        .collect())
}

/// Joins a prediction CSV with its ground truth into evaluation cases.
pub fn read_predictions_csv<R: Read, G: Read>(pred: R, truth: G) -> Result<Vec<PredictionCase>> {
    let truth = read_ground_truth_csv(truth)?;
    let index: HashMap<&str, usize> = truth
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.as_str(), i))
        .collect();

    // case -> k -> (prob, t -> point)
    type Modes = BTreeMap<usize, (f64, BTreeMap<i64, Point>)>;
    let mut preds: Vec<Modes> = vec![BTreeMap::new(); truth.len()];
    for (line, row) in rows::<_, PredictionRow>(pred)? {
        check_finite(line, row.x, row.y)?;
        if !(row.prob >= 0.0 && row.prob.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("invalid probability {}", row.prob),
            });
        }
        let &ci = index
            .get(row.case_id.as_str())
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("case {} has no ground truth", row.case_id),
            })?;
        let (prob, steps) = preds[ci]
            .entry(row.k)
            .or_insert_with(|| (row.prob, BTreeMap::new()));
        if *prob != row.prob {
            return Err(Error::Parse {
                line,
                message: format!(
                    "probability of mode {} changes within case {}",
                    row.k, row.case_id
                ),
            });
        }
        if steps.insert(row.t, Point::new(row.x, row.y)).is_some() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "duplicate t = {} for mode {} of case {}",
                    row.t, row.k, row.case_id
                ),
            });
        }
    }

    truth
        .into_iter()
        .zip(preds)
        .map(|((id, gt), modes)| {
            if modes.is_empty() {
                return Err(Error::Format(format!("case {id} has no predictions")));
            }
            let gt_steps: Vec<i64> = gt.iter().map(|(t, _)| *t).collect();
            let mut trajectories = Vec::with_capacity(modes.len());
            let mut probabilities = Vec::with_capacity(modes.len());
            for (k, (prob, steps)) in modes {
                if !steps.keys().copied().eq(gt_steps.iter().copied()) {
                    return Err(Error::Format(format!(
                        "mode {k} of case {id} does not cover the ground-truth timesteps"
                    )));
                }
                trajectories.push(steps.into_values().collect());
                probabilities.push(prob);
            }
            Ok(PredictionCase {
                id,
                trajectories,
                probabilities,
                ground_truth: gt.into_iter().map(|(_, p)| p).collect(),
            })
        })
        .collect()
}

pub fn write_report_json<W: Write>(mut w: W, report: &MetricsReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    Ok(())
}
