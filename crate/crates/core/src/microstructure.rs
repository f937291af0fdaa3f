//! Periodic equal-sphere packings by random sequential adsorption (RSA).
//!
//! The sphere radius covers inclusion and coating together; the coating is
//! carved inside each sphere at voxelization time.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Largest total sphere volume fraction the generator accepts.
pub const MAX_FRACTION: f64 = 0.4;

/// Default global candidate budget for [`rsa_generate`].
pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000_000;

/// A periodic packing of identical spheres in the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePack {
    pub centers: Vec<Point3>,
    pub radius: f64,
    pub n_sp: usize,
    pub f_sp: f64,
    pub seed: u64,
}

/// Minimum-image offset along one axis of the unit torus, in `[0, 0.5]`.
#[inline]
pub fn wrap_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Euclidean distance between two points of the unit torus.
pub fn periodic_distance(a: &Point3, b: &Point3) -> f64 {
    let dx = wrap_delta(a[0], b[0]);
    let dy = wrap_delta(a[1], b[1]);
    let dz = wrap_delta(a[2], b[2]);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Radius of `n_sp` equal spheres filling a volume fraction `f_sp` of the unit cell.
pub fn radius_from_fraction(n_sp: usize, f_sp: f64) -> Result<f64> {
    if n_sp == 0 {
        return Err(Error::Domain("sphere count must be at least 1".into()));
    }
    if !(f_sp > 0.0 && f_sp <= MAX_FRACTION) {
        return Err(Error::Domain(format!(
            "sphere volume fraction {f_sp} outside (0, {MAX_FRACTION}]"
        )));
    }
    Ok((3.0 * f_sp / (4.0 * PI * n_sp as f64)).cbrt())
}

/// Place `n_sp` non-overlapping spheres one by one, rejecting candidates that
/// intersect an already accepted sphere. `max_attempts` bounds the total
/// number of candidates drawn.
pub fn rsa_generate(n_sp: usize, f_sp: f64, seed: u64, max_attempts: u64) -> Result<SpherePack> {
    let radius = radius_from_fraction(n_sp, f_sp)?;
    if max_attempts < n_sp as u64 {
        return Err(Error::Domain(format!(
            "attempt budget {max_attempts} below sphere count {n_sp}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_gap = 2.0 * radius;
    let mut centers: Vec<Point3> = Vec::with_capacity(n_sp);
    let mut attempts = 0u64;
    while centers.len() < n_sp {
        if attempts == max_attempts {
            return Err(Error::Saturated {
                placed: centers.len(),
                requested: n_sp,
                attempts,
            });
        }
        attempts += 1;
        let c: Point3 = [rng.random(), rng.random(), rng.random()];
        if centers.iter().all(|p| periodic_distance(p, &c) >= min_gap) {
            centers.push(c);
        }
    }
    Ok(SpherePack {
        centers,
        radius,
        n_sp,
        f_sp,
        seed,
    })
}

impl SpherePack {
    /// Smallest pairwise periodic center distance, `None` for fewer than two spheres.
    pub fn min_pair_distance(&self) -> Option<f64> {
        let c = &self.centers;
        let mut best: Option<f64> = None;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                let d = periodic_distance(&c[i], &c[j]);
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        best
    }

    /// Serialize to the sphere-list text format: `#` header lines followed
    /// by one `x y z r` row per sphere.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# n_sp {}", self.n_sp);
        let _ = writeln!(s, "# f_sp {}", self.f_sp);
        let _ = writeln!(s, "# seed {}", self.seed);
        for c in &self.centers {
            let _ = writeln!(s, "{} {} {} {}", c[0], c[1], c[2], self.radius);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_sp = None;
        let mut f_sp = None;
        let mut seed = None;
        let mut radius: Option<f64> = None;
        let mut centers = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
            if let Some(header) = line.strip_prefix('#') {
                let mut parts = header.split_whitespace();
                match (parts.next(), parts.next()) {
                    (Some("n_sp"), Some(v)) => n_sp = Some(v.parse().map_err(|_| bad("n_sp"))?),
                    (Some("f_sp"), Some(v)) => f_sp = Some(v.parse().map_err(|_| bad("f_sp"))?),
                    (Some("seed"), Some(v)) => seed = Some(v.parse().map_err(|_| bad("seed"))?),
                    _ => {}
                }
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("expected four reals"))?;
            if vals.len() != 4 {
                return Err(bad("expected four reals"));
            }
            match radius {
                None => radius = Some(vals[3]),
                Some(r) if r != vals[3] => return Err(bad("spheres must share one radius")),
                _ => {}
            }
            centers.push([vals[0], vals[1], vals[2]]);
        }
        let radius = radius.ok_or_else(|| Error::Parse("no spheres listed".into()))?;
        let n_sp = n_sp.unwrap_or(centers.len());
        if n_sp != centers.len() {
            return Err(Error::Parse(format!(
                "header announces {n_sp} spheres, found {}",
                centers.len()
            )));
        }
        let f_sp = f_sp.unwrap_or(n_sp as f64 * 4.0 / 3.0 * PI * radius.powi(3));
        Ok(SpherePack {
            centers,
            radius,
            n_sp,
            f_sp,
            seed: seed.unwrap_or(0),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
