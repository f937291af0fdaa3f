//! `.phases.raw` / `.phases.json` grid files and grayscale slice export.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Phase, PhaseGrid, Provenance, Sampling};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    resolution: usize,
    layer: f64,
    provenance: Provenance,
    sampling: Sampling,
    order: String,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

impl PhaseGrid {
    /// Raw bytes, one phase id per voxel, x-fastest.
    pub fn to_raw(&self) -> Vec<u8> {
        self.labels.iter().map(|p| p.id()).collect()
    }

    pub fn from_raw(resolution: usize, bytes: &[u8]) -> Result<Self> {
        let labels = bytes
            .iter()
            .map(|&b| Phase::from_id(b).ok_or_else(|| Error::Parse(format!("invalid phase id {b}"))))
            .collect::<Result<Vec<_>>>()?;
        PhaseGrid::from_labels(resolution, labels)
    }

    /// Write `<prefix>.phases.raw` and `<prefix>.phases.json`.
    pub fn write(&self, prefix: impl AsRef<Path>) -> Result<()> {
        let prefix = prefix.as_ref();
        fs::write(with_suffix(prefix, ".phases.raw"), self.to_raw())?;
        let header = GridHeader {
            resolution: self.resolution,
            layer: self.layer,
            provenance: self.provenance,
            sampling: self.sampling,
            order: "x-fastest".into(),
        };
        fs::write(
            with_suffix(prefix, ".phases.json"),
            serde_json::to_string_pretty(&header)?,
        )?;
        Ok(())
    }

    /// Read a grid written by [`PhaseGrid::write`]. `prefix` may also name
    /// either of the two files directly.
    pub fn read(prefix: impl AsRef<Path>) -> Result<Self> {
        let p = prefix.as_ref().to_string_lossy();
        let base = p
            .strip_suffix(".phases.json")
            .or_else(|| p.strip_suffix(".phases.raw"))
            .unwrap_or(&p);
        let base = Path::new(base);
        let header: GridHeader =
            serde_json::from_str(&fs::read_to_string(with_suffix(base, ".phases.json"))?)?;
        let bytes = fs::read(with_suffix(base, ".phases.raw"))?;
        let mut grid = PhaseGrid::from_raw(header.resolution, &bytes)?;
        grid.layer = header.layer;
        grid.provenance = header.provenance;
        grid.sampling = header.sampling;
        Ok(grid)
    }

    /// Grayscale section normal to `axis` at `index`: phases 0, 1, 2 map to 0, 128, 255.
    pub fn slice_gray(&self, axis: SliceAxis, index: usize) -> Result<Vec<u8>> {
        let n = self.resolution;
        if index >= n {
            return Err(Error::Domain(format!("slice {index} outside 0..{n}")));
        }
        let mut out = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                let (i, j, k) = match axis {
                    SliceAxis::X => (index, col, row),
                    SliceAxis::Y => (col, index, row),
                    SliceAxis::Z => (col, row, index),
                };
                out.push(gray(self.get(i, j, k)));
            }
        }
        Ok(out)
    }
}

fn gray(p: Phase) -> u8 {
    match p {
        Phase::Matrix => 0,
        Phase::Inclusion => 128,
        Phase::Coating => 255,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for SliceAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(SliceAxis::X),
            "y" | "Y" => Ok(SliceAxis::Y),
            "z" | "Z" => Ok(SliceAxis::Z),
            _ => Err(Error::Parse(format!("unknown axis {s:?}"))),
        }
    }
}

/// Binary PGM (P5).
pub fn write_slice_pgm(grid: &PhaseGrid, axis: SliceAxis, index: usize, path: impl AsRef<Path>) -> Result<()> {
    let n = grid.resolution();
    let pixels = grid.slice_gray(axis, index)?;
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{n} {n}\n255\n")?;
    f.write_all(&pixels)?;
    Ok(())
}

pub fn write_slice_png(grid: &PhaseGrid, axis: SliceAxis, index: usize, path: impl AsRef<Path>) -> Result<()> {
    let n = grid.resolution() as u32;
    let pixels = grid.slice_gray(axis, index)?;
    let img = image::GrayImage::from_raw(n, n, pixels).expect("slice buffer is n*n");
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
