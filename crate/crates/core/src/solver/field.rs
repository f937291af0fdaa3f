//! Per-voxel 3-vector fields and their raw dump format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Three real components on an N³ grid, stored component-major, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    n: usize,
    pub comps: [Vec<f64>; 3],
}

/// Local temperature gradient ∇θ.
pub type GradientField = VectorField;
/// Heat flux φ = −L∇θ.
pub type FluxField = VectorField;
/// Polarization τ.
pub type PolarizationField = VectorField;

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        let len = n * n * n;
        VectorField {
            n,
            comps: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    pub fn constant(n: usize, value: [f64; 3]) -> Self {
        let len = n * n * n;
        VectorField {
            n,
            comps: value.map(|v| vec![v; len]),
        }
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps[0].is_empty()
    }

    pub fn at(&self, v: usize) -> [f64; 3] {
        [self.comps[0][v], self.comps[1][v], self.comps[2][v]]
    }

    /// Arithmetic voxel mean, summed slab by slab in a fixed order.
    pub fn mean(&self) -> [f64; 3] {
        let plane = self.n * self.n;
        let total = self.len() as f64;
        [0, 1, 2].map(|c| {
            let data = &self.comps[c];
            par::sum_blocks(self.n, |k| data[k * plane..(k + 1) * plane].iter().sum()) / total
        })
    }

    /// Interleaved little-endian f64, three components per voxel, x-fastest.
    pub fn to_raw(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len() * 24);
        for v in 0..self.len() {
            for c in 0..3 {
                out.extend_from_slice(&self.comps[c][v].to_le_bytes());
            }
        }
        out
    }

    pub fn from_raw(n: usize, bytes: &[u8]) -> Result<Self> {
        let len = n * n * n;
        if bytes.len() != len * 24 {
            return Err(Error::Parse(format!(
                "{} bytes do not hold a {n}^3 vector field",
                bytes.len()
            )));
        }
        let mut f = VectorField::zeros(n);
        for (i, chunk) in bytes.chunks_exact(8).enumerate() {
            let value = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
            f.comps[i % 3][i / 3] = value;
        }
        Ok(f)
    }

    /// Write `<prefix>.field.raw` and a `<prefix>.field.json` sidecar.
    pub fn write(&self, prefix: impl AsRef<Path>, header: &FieldHeader) -> Result<()> {
        let prefix = prefix.as_ref().to_string_lossy().into_owned();
        fs::write(format!("{prefix}.field.raw"), self.to_raw())?;
        fs::write(format!("{prefix}.field.json"), serde_json::to_string_pretty(header)?)?;
        Ok(())
    }

    pub fn read(prefix: impl AsRef<Path>) -> Result<(Self, FieldHeader)> {
        let prefix = prefix.as_ref().to_string_lossy().into_owned();
        let header: FieldHeader =
            serde_json::from_str(&fs::read_to_string(format!("{prefix}.field.json"))?)?;
        let field = Self::from_raw(header.resolution, &fs::read(format!("{prefix}.field.raw"))?)?;
        Ok((field, header))
    }
}

/// Sidecar metadata for field dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub resolution: usize,
    pub quantity: String,
    pub loading: [f64; 3],
    pub scheme: super::Scheme,
    pub eps_comp: f64,
    pub eps_eq: f64,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Scheme;

    #[test]
    fn dump_round_trip() {
        let mut f = VectorField::zeros(3);
        for v in 0..27 {
            f.comps[0][v] = v as f64;
            f.comps[1][v] = -(v as f64) / 7.0;
            f.comps[2][v] = 1e-300 * v as f64;
        }
        let raw = f.to_raw();
        assert_eq!(&raw[24..32], &1.0f64.to_le_bytes());
        let dir = tempfile::tempdir().unwrap();
        let header = FieldHeader {
            resolution: 3,
            quantity: "gradient".into(),
            loading: [1.0, 0.0, 0.0],
            scheme: Scheme::Accelerated,
            eps_comp: 1e-7,
            eps_eq: 2e-7,
            iterations: 12,
        };
        f.write(dir.path().join("g"), &header).unwrap();
        let (back, h) = VectorField::read(dir.path().join("g")).unwrap();
        assert_eq!(back, f);
        assert_eq!(h, header);
        assert!(VectorField::from_raw(3, &raw[..100]).is_err());
    }

    #[test]
    fn mean_of_constant() {
        let f = VectorField::constant(5, [1.5, -2.0, 0.25]);
        assert_eq!(f.mean(), [1.5, -2.0, 0.25]);
    }
}
