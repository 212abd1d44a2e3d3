//! 8-bit binary portable graymap (P5) output.
//!
//! Phase maps [0, 2 pi) to a byte as floor(phase / 2 pi * 256) clamped to
//! 255, so re-read values round-trip within 2 pi / 255. Intensity maps
//! [0, max] with the same floor rule.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{IntensityGrid, PhaseGrid};
use crate::error::Result;

fn write_p5(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(bytes)?;
    out.flush()?;
    Ok(())
}

fn quantize(value: f64, full_scale: f64) -> u8 {
    if full_scale <= 0.0 {
        return 0;
    }
    let q = (value / full_scale * 256.0).floor();
    q.clamp(0.0, 255.0) as u8
}

pub fn write_phase_pgm(grid: &PhaseGrid, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = grid
        .values()
        .iter()
        .map(|&v| quantize(v, std::f64::consts::TAU))
        .collect();
    write_p5(path, grid.spec().width_px, grid.spec().height_px, &bytes)
}

pub fn write_intensity_pgm(grid: &IntensityGrid, path: &Path) -> Result<()> {
    let max = grid.values().iter().cloned().fold(0.0f64, f64::max);
    let bytes: Vec<u8> = grid.values().iter().map(|&v| quantize(v, max)).collect();
    write_p5(path, grid.width(), grid.height(), &bytes)
}
