//! `HGRD v1` grid files and 8-bit PGM previews.
//!
//! An HGRD file is one ASCII header line
//! `HGRD <width> <height> <resolution> <origin_x> <origin_y>\n`
//! followed by `width * height` row-major little-endian `f32` values.
//! A stack is several such grids concatenated.

use std::io::{BufRead, Write};

use super::{GridSpec, ProbabilityGrid};
use crate::error::{Error, Result};
use crate::geometry::Point;

const MAGIC: &str = "HGRD";

pub fn write_hgrd<W: Write>(mut w: W, grid: &ProbabilityGrid) -> Result<()> {
    let s = grid.spec();
    writeln!(
        w,
        "{MAGIC} {} {} {} {} {}",
        s.width, s.height, s.resolution, s.origin.x, s.origin.y
    )?;
    let mut buf = Vec::with_capacity(grid.values().len() * 4);
    for &v in grid.values() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_hgrd_stack<W: Write>(mut w: W, grids: &[ProbabilityGrid]) -> Result<()> {
    for g in grids {
        write_hgrd(&mut w, g)?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<GridSpec> {
    let fields: Vec<&str> = line.split_ascii_whitespace().collect();
    if fields.len() != 6 || fields[0] != MAGIC {
        return Err(Error::Format(format!("bad HGRD header {line:?}")));
    }
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Format(format!("header field {s:?}: {e}")))
    };
    let float = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Format(format!("header field {s:?}: {e}")))
    };
    GridSpec::new(
        int(fields[1])?,
        int(fields[2])?,
        float(fields[3])?,
        Point::new(float(fields[4])?, float(fields[5])?),
    )
}

/// Reads one grid, or `None` at a clean end of input.
fn read_one<R: BufRead>(r: &mut R) -> Result<Option<ProbabilityGrid>> {
    let mut header = Vec::new();
    let n = r.read_until(b'\n', &mut header)?;
    if n == 0 {
        return Ok(None);
    }
    if header.last() != Some(&b'\n') {
        return Err(Error::Format("unterminated HGRD header".into()));
    }
    let line = std::str::from_utf8(&header[..header.len() - 1])
        .map_err(|_| Error::Format("non-ASCII HGRD header".into()))?;
    let spec = parse_header(line)?;
    let mut bytes = vec![0u8; spec.len() * 4];
    r.read_exact(&mut bytes).map_err(|e| {
        Error::Format(format!(
            "expected {} payload bytes for {}x{} grid: {e}",
            bytes.len(),
            spec.width,
            spec.height
        ))
    })?;
    let values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    ProbabilityGrid::new(spec, values).map(Some)
}

pub fn read_hgrd<R: BufRead>(mut r: R) -> Result<ProbabilityGrid> {
    let grid = read_one(&mut r)?.ok_or_else(|| Error::Format("empty HGRD input".into()))?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after HGRD payload".into()));
    }
    Ok(grid)
}

pub fn read_hgrd_stack<R: BufRead>(mut r: R) -> Result<Vec<ProbabilityGrid>> {
    let mut out = Vec::new();
    while let Some(g) = read_one(&mut r)? {
        out.push(g);
    }
    Ok(out)
}

/// Binary PGM (P5), values scaled so the grid maximum maps to 255.
pub fn write_pgm<W: Write>(mut w: W, grid: &ProbabilityGrid) -> Result<()> {
    let s = grid.spec();
    write!(w, "P5\n{} {}\n255\n", s.width, s.height)?;
    let max = grid.max_value();
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let bytes: Vec<u8> = grid
        .values()
        .iter()
        .map(|v| (v * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}
