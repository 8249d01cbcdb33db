//! Agent-centered input raster: 45 channels over a 224x224, 0.5 m/px frame.
//!
//! Channel layout:
//!
//! | index   | content                                      |
//! |---------|----------------------------------------------|
//! | 0       | drivable area (binary)                       |
//! | 1       | lane boundaries (binary, 1 px lines)         |
//! | 2..=4   | centerline heading as HSV hue, in RGB        |
//! | 5..=24  | target footprint, oldest step first          |
//! | 25..=44 | union of neighbor footprints, oldest first   |

mod scene;

pub use scene::{AgentTrack, Centerline, Polygon, Polyline, Scene};

use std::f64::consts::TAU;
use std::io::Write;

use crate::error::Result;
use crate::geometry::Point;
use crate::grid::{write_hgrd_stack, GridSpec, ProbabilityGrid, DEFAULT_RESOLUTION, DEFAULT_SIZE};
use crate::par;

pub const CHANNELS: usize = 45;
pub const HISTORY_STEPS: usize = 20;
pub const DRIVABLE: usize = 0;
pub const BOUNDARIES: usize = 1;
pub const HEADING_RGB: usize = 2;
pub const TARGET_HISTORY: usize = 5;
pub const NEIGHBOR_HISTORY: usize = TARGET_HISTORY + HISTORY_STEPS;

/// Frame used for rasters unless another is given.
pub fn default_raster_spec() -> GridSpec {
    GridSpec::centered(DEFAULT_SIZE, DEFAULT_SIZE, DEFAULT_RESOLUTION).expect("valid default spec")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterStack {
    pub spec: GridSpec,
    pub channels: Vec<ProbabilityGrid>,
}

impl RasterStack {
    pub fn write_hgrd<W: Write>(&self, w: W) -> Result<()> {
        write_hgrd_stack(w, &self.channels)
    }

    /// All channels tiled 9 across and 5 down in one 8-bit PGM, values in
    /// `[0, 1]` mapped to `[0, 255]`.
    pub fn write_contact_sheet<W: Write>(&self, mut w: W) -> Result<()> {
        const COLS: usize = 9;
        let rows = CHANNELS.div_ceil(COLS);
        let (tw, th) = (self.spec.width, self.spec.height);
        let (sw, sh) = (tw * COLS, th * rows);
        let mut buf = vec![0u8; sw * sh];
        for (i, ch) in self.channels.iter().enumerate() {
            let (oy, ox) = ((i / COLS) * th, (i % COLS) * tw);
            for r in 0..th {
                for c in 0..tw {
                    buf[(oy + r) * sw + ox + c] =
                        (ch.get(r, c).clamp(0.0, 1.0) * 255.0).round() as u8;
                }
            }
        }
        write!(w, "P5\n{sw} {sh}\n255\n")?;
        w.write_all(&buf)?;
        Ok(())
    }
}

/// Heading hue on the color wheel at full saturation and value.
pub fn hsv_heading_encode(theta: f64) -> [f64; 3] {
    let hue = theta.rem_euclid(TAU) / TAU;
    let h6 = hue * 6.0;
    let sector = (h6.floor() as i64).rem_euclid(6);
    let f = h6 - h6.floor();
    let (q, t) = (1.0 - f, f);
    match sector {
        0 => [1.0, t, 0.0],
        1 => [q, 1.0, 0.0],
        2 => [0.0, 1.0, t],
        3 => [0.0, q, 1.0],
        4 => [t, 0.0, 1.0],
        _ => [1.0, 0.0, q],
    }
}

struct Canvas {
    spec: GridSpec,
    values: Vec<f64>,
}

impl Canvas {
    fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    /// Continuous pixel coordinates `(col, row)` of a metric point.
    fn local(&self, p: Point) -> (f64, f64) {
        let (r, c) = self.spec.to_pixel_coords(p);
        (c, r)
    }

    fn set(&mut self, row: isize, col: isize, v: f64) {
        if row >= 0
            && col >= 0
            && (row as usize) < self.spec.height
            && (col as usize) < self.spec.width
        {
            let i = self.spec.index(row as usize, col as usize);
            self.values[i] = v;
        }
    }

    /// Even-odd fill of pixels whose centers lie inside the ring, half-open
    /// on the right and bottom edges.
    fn fill_polygon(&mut self, ring: &[Point]) {
        let pts: Vec<(f64, f64)> = ring.iter().map(|&p| self.local(p)).collect();
        let (w, h) = (self.spec.width, self.spec.height);
        let mut xs = Vec::new();
        for row in 0..h {
            let y = row as f64;
            xs.clear();
            for e in pts.windows(2) {
                let ((x0, y0), (x1, y1)) = (e[0], e[1]);
                if (y0 <= y && y < y1) || (y1 <= y && y < y0) {
                    xs.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
                }
            }
            xs.sort_unstable_by(f64::total_cmp);
            for span in xs.chunks_exact(2) {
                let lo = span[0].ceil().max(0.0);
                let hi = span[1].ceil().min(w as f64);
                let mut c = lo;
                while c < hi {
                    self.values[row * w + c as usize] = 1.0;
                    c += 1.0;
                }
            }
        }
    }

    /// 1 px Bresenham segment, clipped to a margin around the grid first.
    fn draw_segment(&mut self, a: Point, b: Point, v: f64) {
        let margin = 2.0;
        let (xmax, ymax) = (
            self.spec.width as f64 + margin,
            self.spec.height as f64 + margin,
        );
        let Some(((x0, y0), (x1, y1))) =
            clip(self.local(a), self.local(b), -margin, -margin, xmax, ymax)
        else {
            return;
        };
        let (mut x, mut y) = (x0.round() as isize, y0.round() as isize);
        let (xe, ye) = (x1.round() as isize, y1.round() as isize);
        let dx = (xe - x).abs();
        let dy = -(ye - y).abs();
        let sx = if x < xe { 1 } else { -1 };
        let sy = if y < ye { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.set(y, x, v);
            if x == xe && y == ye {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// Pixels whose centers fall in the oriented rectangle, half-open along both axes.
    fn fill_rect(&mut self, center: Point, heading: f64, length: f64, width: f64) {
        let res = self.spec.resolution;
        let (cx, cy) = self.local(center);
        let (s, c) = heading.sin_cos();
        let (hl, hw) = (length / 2.0 / res, width / 2.0 / res);
        let reach = hl.hypot(hw).ceil() as isize + 1;
        let (pr, pc) = (cy.round() as isize, cx.round() as isize);
        for row in pr - reach..=pr + reach {
            for col in pc - reach..=pc + reach {
                let (dx, dy) = (col as f64 - cx, row as f64 - cy);
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                if -hl <= u && u < hl && -hw <= v && v < hw {
                    self.set(row, col, 1.0);
                }
            }
        }
    }

    fn into_grid(self) -> ProbabilityGrid {
        ProbabilityGrid::new(self.spec, self.values)
            .expect("canvas values are finite and non-negative")
    }
}

/// Liang-Barsky clip of a segment to an axis-aligned box.
fn clip(
    a: (f64, f64),
    b: (f64, f64),
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-dx, a.0 - xmin),
        (dx, xmax - a.0),
        (-dy, a.1 - ymin),
        (dy, ymax - a.1),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((
        (a.0 + t0 * dx, a.1 + t0 * dy),
        (a.0 + t1 * dx, a.1 + t1 * dy),
    ))
}

/// Footprint pose per history slot (`None` for padded or missing steps),
/// oldest slot first. Heading follows the motion between observations.
fn history_poses(agent: &AgentTrack) -> Vec<Option<(Point, f64)>> {
    let h = &agent.history;
    let observed: Vec<usize> = h.observed_indices().collect();
    let mut heading_of = vec![0.0; h.len()];
    let mut last = None;
    for (j, &i) in observed.iter().enumerate() {
        let back = j
            .checked_sub(1)
            .map(|p| h.points[i] - h.points[observed[p]]);
        let fwd = observed.get(j + 1).map(|&n| h.points[n] - h.points[i]);
        let moving = |d: &Point| d.x.hypot(d.y) > 1e-6;
        heading_of[i] = match (back.filter(moving), fwd.filter(moving)) {
            (Some(d), _) | (None, Some(d)) => d.y.atan2(d.x),
            (None, None) => last.unwrap_or(0.0),
        };
        last = Some(heading_of[i]);
    }
    let mut slots = vec![None; HISTORY_STEPS];
    let n = h.len();
    for (i, slot) in (n.saturating_sub(HISTORY_STEPS)..n).zip(HISTORY_STEPS.saturating_sub(n)..) {
        if !h.padding_mask[i] {
            slots[slot] = Some((h.points[i], heading_of[i]));
        }
    }
    slots
}

/// Renders the 45-channel stack for `scene` in the frame `spec`.
pub fn rasterize_scene(scene: &Scene, spec: GridSpec) -> RasterStack {
    let mut drivable = Canvas::new(spec);
    for poly in &scene.drivable {
        drivable.fill_polygon(&poly.points);
    }
    let mut boundaries = Canvas::new(spec);
    for line in &scene.boundaries {
        for seg in line.points.windows(2) {
            boundaries.draw_segment(seg[0], seg[1], 1.0);
        }
    }
    let mut rgb = [Canvas::new(spec), Canvas::new(spec), Canvas::new(spec)];
    for cl in &scene.centerlines {
        for (seg, &heading) in cl.points.windows(2).zip(&cl.headings) {
            let color = hsv_heading_encode(heading);
            for (canvas, v) in rgb.iter_mut().zip(color) {
                canvas.draw_segment(seg[0], seg[1], v);
            }
        }
    }

    let target_poses = scene.target.as_ref().map(history_poses);
    let neighbor_poses: Vec<_> = scene
        .neighbors
        .iter()
        .map(|a| (a, history_poses(a)))
        .collect();
    let history = par::map_range(HISTORY_STEPS, |step| {
        let mut target = Canvas::new(spec);
        if let (Some(agent), Some(poses)) = (&scene.target, &target_poses) {
            if let Some((p, heading)) = poses[step] {
                target.fill_rect(p, heading, agent.length, agent.width);
            }
        }
        let mut others = Canvas::new(spec);
        for (agent, poses) in &neighbor_poses {
            if let Some((p, heading)) = poses[step] {
                others.fill_rect(p, heading, agent.length, agent.width);
            }
        }
        (target.into_grid(), others.into_grid())
    });

    let mut channels = Vec::with_capacity(CHANNELS);
    channels.push(drivable.into_grid());
    channels.push(boundaries.into_grid());
    channels.extend(rgb.map(Canvas::into_grid));
    let (target, others): (Vec<_>, Vec<_>) = history.into_iter().unzip();
    channels.extend(target);
    channels.extend(others);
    debug_assert_eq!(channels.len(), CHANNELS);
    RasterStack { spec, channels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::AgentHistory;

    fn ones(g: &ProbabilityGrid) -> usize {
        g.values().iter().filter(|&&v| v == 1.0).count()
    }

    fn square(half: f64) -> Polygon {
        Polygon {
            points: vec![
                Point::new(-half, -half),
                Point::new(half, -half),
                Point::new(half, half),
                Point::new(-half, half),
                Point::new(-half, -half),
            ],
        }
    }

    #[test]
    fn hsv_primaries() {
        assert_eq!(hsv_heading_encode(0.0), [1.0, 0.0, 0.0]);
        let g = hsv_heading_encode(TAU / 3.0);
        assert!((g[0]).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12 && g[2].abs() < 1e-12);
        let b = hsv_heading_encode(2.0 * TAU / 3.0);
        assert!(b[0].abs() < 1e-12 && b[1].abs() < 1e-12 && (b[2] - 1.0).abs() < 1e-12);
        for theta in [0.3, 1.7, 4.0, -2.0] {
            let (a, w) = (hsv_heading_encode(theta), hsv_heading_encode(theta + TAU));
            for i in 0..3 {
                assert!((a[i] - w[i]).abs() < 1e-12);
            }
            assert_eq!(a.iter().cloned().fold(0.0, f64::max), 1.0);
        }
    }

    #[test]
    fn empty_scene_is_blank() {
        let stack = rasterize_scene(&Scene::default(), default_raster_spec());
        assert_eq!(stack.channels.len(), CHANNELS);
        assert!(stack.channels.iter().all(|c| c.total_mass() == 0.0));
    }

    #[test]
    fn square_fill_area() {
        let scene = Scene {
            drivable: vec![square(5.0)],
            ..Default::default()
        };
        let stack = rasterize_scene(&scene, default_raster_spec());
        let n = ones(&stack.channels[DRIVABLE]);
        assert!((360..=440).contains(&n), "{n}");
    }

    #[test]
    fn lines_are_one_pixel_wide() {
        let scene = Scene {
            boundaries: vec![Polyline {
                points: vec![Point::new(-10.0, 0.25), Point::new(10.0, 0.25)],
            }],
            centerlines: vec![Centerline {
                points: vec![Point::new(0.25, -10.0), Point::new(0.25, 10.0)],
                headings: vec![TAU / 4.0, TAU / 4.0],
            }],
            ..Default::default()
        };
        let stack = rasterize_scene(&scene, default_raster_spec());
        assert_eq!(ones(&stack.channels[BOUNDARIES]), 41);
        let [r, g, b] = hsv_heading_encode(TAU / 4.0);
        let (row, col) = stack.spec.pixel_of(Point::new(0.25, 3.0)).unwrap();
        assert_eq!(stack.channels[HEADING_RGB].get(row, col), r);
        assert_eq!(stack.channels[HEADING_RGB + 1].get(row, col), g);
        assert_eq!(stack.channels[HEADING_RGB + 2].get(row, col), b);
    }

    #[test]
    fn far_away_lines_are_clipped() {
        let scene = Scene {
            boundaries: vec![Polyline {
                points: vec![Point::new(-1e9, 1e9), Point::new(1e9, 1e9)],
            }],
            ..Default::default()
        };
        let stack = rasterize_scene(&scene, default_raster_spec());
        assert_eq!(stack.channels[BOUNDARIES].total_mass(), 0.0);
    }

    #[test]
    fn stationary_agent_footprints() {
        let agent = AgentTrack {
            history: AgentHistory::observed(vec![Point::new(0.25, 0.25); 20], 0.1).unwrap(),
            length: 4.0,
            width: 2.0,
        };
        let scene = Scene {
            target: Some(agent.clone()),
            neighbors: vec![AgentTrack {
                history: agent.history.translated(Point::new(10.0, 0.0)),
                ..agent
            }],
            ..Default::default()
        };
        let stack = rasterize_scene(&scene, default_raster_spec());
        let first = &stack.channels[TARGET_HISTORY];
        for step in 0..HISTORY_STEPS {
            let ch = &stack.channels[TARGET_HISTORY + step];
            assert_eq!(ones(ch), 32);
            assert_eq!(ch, first);
            assert_eq!(ones(&stack.channels[NEIGHBOR_HISTORY + step]), 32);
        }
    }

    #[test]
    fn short_and_padded_histories_leave_empty_slots() {
        let agent = AgentTrack {
            history: AgentHistory::new(
                vec![Point::new(-2.0, 0.0), Point::new(-1.0, 0.0), Point::ORIGIN],
                vec![-0.2, -0.1, 0.0],
                vec![false, true, false],
            )
            .unwrap(),
            length: 4.0,
            width: 2.0,
        };
        let scene = Scene {
            target: Some(agent),
            ..Default::default()
        };
        let stack = rasterize_scene(&scene, default_raster_spec());
        let filled: Vec<usize> = (0..HISTORY_STEPS)
            .filter(|s| stack.channels[TARGET_HISTORY + s].total_mass() > 0.0)
            .collect();
        assert_eq!(filled, vec![17, 19]);
    }

    #[test]
    fn translation_with_frame_is_invariant() {
        let agent = AgentTrack {
            history: AgentHistory::observed(
                (0..20)
                    .map(|i| Point::new(-9.5 + 0.5 * i as f64, 0.25 * i as f64))
                    .collect(),
                0.1,
            )
            .unwrap(),
            length: 4.5,
            width: 1.75,
        };
        let scene = Scene {
            drivable: vec![square(12.0)],
            boundaries: vec![Polyline {
                points: vec![Point::new(-12.0, 3.5), Point::new(12.0, 4.25)],
            }],
            centerlines: vec![Centerline {
                points: vec![
                    Point::new(-12.0, 0.0),
                    Point::new(0.0, 1.5),
                    Point::new(12.0, 0.0),
                ],
                headings: vec![0.25, 6.0, 0.0],
            }],
            target: Some(agent),
            neighbors: vec![],
        };
        let spec = default_raster_spec();
        let t = Point::new(7.5, -3.25);
        let a = rasterize_scene(&scene, spec);
        let b = rasterize_scene(&scene.translated(t), spec.with_origin(spec.origin + t));
        for (x, y) in a.channels.iter().zip(&b.channels) {
            assert_eq!(x.values(), y.values());
        }
    }

    #[test]
    fn contact_sheet_dimensions() {
        let stack = rasterize_scene(&Scene::default(), GridSpec::centered(4, 3, 0.5).unwrap());
        let mut buf = Vec::new();
        stack.write_contact_sheet(&mut buf).unwrap();
        let header = b"P5\n36 15\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(buf.len(), header.len() + 36 * 15);
    }
}
