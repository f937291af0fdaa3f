//! Voxelization of coated-sphere packs into periodic phase-label grids.

mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microstructure::{wrap_delta, SpherePack};
use crate::par;

pub use io::{write_slice_pgm, write_slice_png, SliceAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Phase {
    Matrix = 0,
    Inclusion = 1,
    Coating = 2,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Matrix, Phase::Inclusion, Phase::Coating];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Phase> {
        match id {
            0 => Some(Phase::Matrix),
            1 => Some(Phase::Inclusion),
            2 => Some(Phase::Coating),
            _ => None,
        }
    }
}

/// How a voxel picks its phase.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Sampling {
    /// Phase of the point at the voxel center.
    #[default]
    CellCenter,
    /// Dominant phase over `sub`³ sample points inside the voxel: the voxel
    /// is solid when spheres cover more than half of the samples, and a solid
    /// voxel is coating when coating samples outnumber inclusion samples.
    /// Shells thinner than about half a voxel never win a voxel.
    Dominant { sub: u8 },
}


/// Where a grid came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub n_sp: usize,
    pub f_sp: f64,
}

/// An N³ periodic grid of phase labels, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    resolution: usize,
    labels: Vec<Phase>,
    pub layer: f64,
    pub provenance: Provenance,
    pub sampling: Sampling,
}

impl PhaseGrid {
    /// Grid filled with a single phase.
    pub fn uniform(resolution: usize, phase: Phase) -> Self {
        Self::from_labels(resolution, vec![phase; resolution.pow(3)])
            .expect("length matches by construction")
    }

    pub fn from_labels(resolution: usize, labels: Vec<Phase>) -> Result<Self> {
        if resolution == 0 || labels.len() != resolution.pow(3) {
            return Err(Error::Domain(format!(
                "{} labels cannot fill a {resolution}^3 grid",
                labels.len()
            )));
        }
        Ok(PhaseGrid {
            resolution,
            labels,
            layer: 0.0,
            provenance: Provenance {
                seed: 0,
                n_sp: 0,
                f_sp: 0.0,
            },
            sampling: Sampling::CellCenter,
        })
    }

    /// Build a grid by evaluating `f(i, j, k)` at every voxel.
    pub fn from_fn(resolution: usize, f: impl Fn(usize, usize, usize) -> Phase) -> Self {
        let n = resolution;
        let mut labels = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    labels.push(f(i, j, k));
                }
            }
        }
        Self::from_labels(n, labels).expect("length matches by construction")
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Phase] {
        &self.labels
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution * (j + self.resolution * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Phase {
        self.labels[self.index(i, j, k)]
    }

    /// Voxel counts for matrix, inclusion, coating.
    pub fn phase_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for &p in &self.labels {
            counts[p as usize] += 1;
        }
        counts
    }
}

/// Volume fraction of the coating shell given layer `l` and sphere fraction `f_sp`.
pub fn coating_fraction(layer: f64, f_sp: f64) -> f64 {
    (1.0 - (1.0 - layer).powi(3)) * f_sp
}

/// Coating shell thickness measured in voxels. Unrounded.
pub fn coating_voxel_thickness(layer: f64, resolution: usize, n_sp: usize, f_sp: f64) -> f64 {
    let radius = (3.0 * f_sp / (4.0 * std::f64::consts::PI * n_sp as f64)).cbrt();
    layer * resolution as f64 * radius
}

/// Per-phase voxel fractions (matrix, inclusion, coating).
pub fn phase_volume_fractions(grid: &PhaseGrid) -> [f64; 3] {
    let [_, inc, coat] = grid.phase_counts();
    let total = grid.len() as f64;
    let inc = inc as f64 / total;
    let coat = coat as f64 / total;
    [1.0 - inc - coat, inc, coat]
}

/// Rasterize `pack` with coating layer `layer` onto an N³ grid.
///
/// Voxel (i, j, k) is centered at ((i+½)/N, (j+½)/N, (k+½)/N). A point at
/// periodic distance d from its nearest sphere center is inclusion when
/// d ≤ (1−l)·r, coating when (1−l)·r < d ≤ r, matrix otherwise.
pub fn voxelize(pack: &SpherePack, layer: f64, resolution: usize, sampling: Sampling) -> Result<PhaseGrid> {
    if !(0.0..=1.0).contains(&layer) {
        return Err(Error::Domain(format!("layer {layer} outside [0, 1]")));
    }
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    if let Sampling::Dominant { sub: 0 } = sampling {
        return Err(Error::Domain("dominant sampling needs at least one sample".into()));
    }
    let n = resolution;
    let nf = n as f64;
    let r_out = pack.radius;
    let r_in = (1.0 - layer) * pack.radius;
    // Half voxel diagonal: a voxel lies entirely within this of its center.
    let half_diag = match sampling {
        Sampling::CellCenter => 0.0,
        Sampling::Dominant { .. } => 0.5 * 3f64.sqrt() / nf,
    };
    let reach = r_out + half_diag;

    // Per-axis periodic index windows of every sphere.
    let windows: Vec<[Vec<usize>; 3]> = pack
        .centers
        .iter()
        .map(|c| [0, 1, 2].map(|a| index_window(c[a], reach, n)))
        .collect();

    let mut labels = vec![Phase::Matrix; n * n * n];
    par::for_each_block(&mut labels, n * n, |k, slab| {
        let z = (k as f64 + 0.5) / nf;
        match sampling {
            Sampling::CellCenter => {
                let mut best = vec![f64::INFINITY; n * n];
                for (c, win) in pack.centers.iter().zip(&windows) {
                    if !win[2].contains(&k) {
                        continue;
                    }
                    let dz = wrap_delta(z, c[2]);
                    for &j in &win[1] {
                        let dy = wrap_delta((j as f64 + 0.5) / nf, c[1]);
                        for &i in &win[0] {
                            let dx = wrap_delta((i as f64 + 0.5) / nf, c[0]);
                            let d = (dx * dx + dy * dy + dz * dz).sqrt();
                            let v = i + n * j;
                            if d <= r_out && d < best[v] {
                                best[v] = d;
                                slab[v] = if d <= r_in { Phase::Inclusion } else { Phase::Coating };
                            }
                        }
                    }
                }
            }
            Sampling::Dominant { sub } => {
                let s = sub as usize;
                let total = (s * s * s) as u32;
                // (inclusion, coating) sample counts per voxel of the slab.
                let mut counts = vec![(0u32, 0u32); n * n];
                for (c, win) in pack.centers.iter().zip(&windows) {
                    if !win[2].contains(&k) {
                        continue;
                    }
                    for &j in &win[1] {
                        for &i in &win[0] {
                            let center = [(i as f64 + 0.5) / nf, (j as f64 + 0.5) / nf, z];
                            let d = torus_dist(&center, c);
                            if d - half_diag > r_out {
                                continue;
                            }
                            let cnt = &mut counts[i + n * j];
                            if d + half_diag <= r_in {
                                cnt.0 += total;
                            } else if d - half_diag > r_in && d + half_diag <= r_out {
                                cnt.1 += total;
                            } else {
                                for a in 0..s {
                                    for b in 0..s {
                                        for e in 0..s {
                                            let p = [
                                                (i as f64 + (a as f64 + 0.5) / s as f64) / nf,
                                                (j as f64 + (b as f64 + 0.5) / s as f64) / nf,
                                                (k as f64 + (e as f64 + 0.5) / s as f64) / nf,
                                            ];
                                            let d = torus_dist(&p, c);
                                            if d <= r_in {
                                                cnt.0 += 1;
                                            } else if d <= r_out {
                                                cnt.1 += 1;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                for (v, &(inc, coat)) in counts.iter().enumerate() {
                    let solid = (inc + coat).min(total);
                    if 2 * solid > total {
                        slab[v] = if coat > inc { Phase::Coating } else { Phase::Inclusion };
                    }
                }
            }
        }
    });

    Ok(PhaseGrid {
        resolution: n,
        labels,
        layer,
        provenance: Provenance {
            seed: pack.seed,
            n_sp: pack.n_sp,
            f_sp: pack.f_sp,
        },
        sampling,
    })
}

#[inline]
fn torus_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = wrap_delta(a[0], b[0]);
    let dy = wrap_delta(a[1], b[1]);
    let dz = wrap_delta(a[2], b[2]);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Sorted voxel indices whose centers can lie within `reach` of `c` along one axis.
fn index_window(c: f64, reach: f64, n: usize) -> Vec<usize> {
    let nf = n as f64;
    let lo = ((c - reach) * nf - 0.5).floor() as i64 - 1;
    let hi = ((c + reach) * nf - 0.5).ceil() as i64 + 1;
    if hi - lo + 1 >= n as i64 {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (lo..=hi).map(|i| i.rem_euclid(n as i64) as usize).collect();
    idx.sort_unstable();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::{periodic_distance, rsa_generate, DEFAULT_MAX_ATTEMPTS};
    use std::f64::consts::PI;

    fn centered(radius: f64) -> SpherePack {
        SpherePack {
            centers: vec![[0.5, 0.5, 0.5]],
            radius,
            n_sp: 1,
            f_sp: 4.0 / 3.0 * PI * radius.powi(3),
            seed: 0,
        }
    }

    /// Direct O(N³·n_sp) nearest-sphere labeling, no windowing.
    fn brute_force(pack: &SpherePack, layer: f64, n: usize) -> PhaseGrid {
        PhaseGrid::from_fn(n, |i, j, k| {
            let p = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64, (k as f64 + 0.5) / n as f64];
            let d = pack
                .centers
                .iter()
                .map(|c| periodic_distance(&p, c))
                .fold(f64::INFINITY, f64::min);
            if d <= (1.0 - layer) * pack.radius {
                Phase::Inclusion
            } else if d <= pack.radius {
                Phase::Coating
            } else {
                Phase::Matrix
            }
        })
    }

    #[test]
    fn windowed_center_rule_matches_brute_force() {
        let pack = rsa_generate(25, 0.3, 3, DEFAULT_MAX_ATTEMPTS).unwrap();
        for &(l, n) in &[(0.0, 16), (0.3, 24), (1.0, 17), (0.05, 32)] {
            let fast = voxelize(&pack, l, n, Sampling::CellCenter).unwrap();
            assert_eq!(fast.labels(), brute_force(&pack, l, n).labels(), "l={l} n={n}");
        }
    }

    #[test]
    fn inner_ball_count_close_to_volume() {
        let pack = centered(0.3);
        let g = voxelize(&pack, 0.5, 64, Sampling::CellCenter).unwrap();
        let inc = g.phase_counts()[1] as f64;
        let expected = 4.0 / 3.0 * PI * (0.5f64 * 0.3).powi(3) * 64f64.powi(3);
        assert!((inc / expected - 1.0).abs() < 0.05, "{inc} vs {expected}");
        // concentric: coating voxels sit outside every inclusion voxel
        assert_eq!(g.get(32, 32, 32), Phase::Inclusion);
        assert_eq!(g.get(32, 32, 32 + 16), Phase::Coating);
        assert_eq!(g.get(0, 0, 0), Phase::Matrix);
    }

    #[test]
    fn degenerate_layers() {
        let pack = rsa_generate(10, 0.3, 8, DEFAULT_MAX_ATTEMPTS).unwrap();
        for sampling in [Sampling::CellCenter, Sampling::Dominant { sub: 3 }] {
            let g0 = voxelize(&pack, 0.0, 32, sampling).unwrap();
            assert_eq!(g0.phase_counts()[2], 0);
            assert!(g0.phase_counts()[1] > 0);
            let g1 = voxelize(&pack, 1.0, 32, sampling).unwrap();
            assert_eq!(g1.phase_counts()[1], 0);
            assert!(g1.phase_counts()[2] > 0);
        }
    }

    #[test]
    fn layer_nesting() {
        let pack = rsa_generate(20, 0.3, 21, DEFAULT_MAX_ATTEMPTS).unwrap();
        for sampling in [Sampling::CellCenter, Sampling::Dominant { sub: 4 }] {
            let grids: Vec<_> = [0.0, 0.1, 0.4, 0.8, 1.0]
                .iter()
                .map(|&l| voxelize(&pack, l, 32, sampling).unwrap())
                .collect();
            for w in grids.windows(2) {
                for (a, b) in w[0].labels().iter().zip(w[1].labels()) {
                    assert_eq!(*a == Phase::Matrix, *b == Phase::Matrix);
                    if *a == Phase::Coating {
                        assert_eq!(*b, Phase::Coating);
                    }
                }
            }
        }
    }

    #[test]
    fn table_coating_fraction() {
        let rows = [
            (0.02, 0.0176),
            (0.04, 0.0346),
            (0.06, 0.0508),
            (0.08, 0.0664),
            (0.1, 0.0813),
            (0.2, 0.1464),
            (0.3, 0.1971),
            (0.4, 0.2352),
            (0.5, 0.2625),
            (0.6, 0.2808),
            (0.7, 0.2919),
            (0.8, 0.2976),
            (0.9, 0.2997),
        ];
        for (l, f) in rows {
            assert_eq!(format!("{:.4}", coating_fraction(l, 0.3)), format!("{f:.4}"), "l={l}");
        }
        assert_eq!(coating_fraction(0.0, 0.3), 0.0);
        assert_eq!(coating_fraction(1.0, 0.25), 0.25);
    }

    #[test]
    fn voxel_thickness_examples() {
        assert_eq!(format!("{:.2}", coating_voxel_thickness(0.02, 64, 30, 0.3)), "0.17");
        assert_eq!(format!("{:.2}", coating_voxel_thickness(0.3, 128, 100, 0.3)), "3.44");
        assert_eq!(format!("{:.2}", coating_voxel_thickness(0.04, 256, 50, 0.3)), "1.15");
    }

    #[test]
    fn fractions_partition() {
        assert_eq!(phase_volume_fractions(&PhaseGrid::uniform(8, Phase::Matrix)), [1.0, 0.0, 0.0]);
        for seed in 0..5 {
            let pack = rsa_generate(15, 0.3, seed, DEFAULT_MAX_ATTEMPTS).unwrap();
            let g = voxelize(&pack, 0.37, 20, Sampling::default()).unwrap();
            let f = phase_volume_fractions(&g);
            assert!((f.iter().sum::<f64>() - 1.0).abs() <= f64::EPSILON);
            assert_eq!(g.phase_counts().iter().sum::<usize>(), 20 * 20 * 20);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let pack = centered(0.2);
        assert!(voxelize(&pack, 1.2, 16, Sampling::CellCenter).is_err());
        assert!(voxelize(&pack, 0.5, 0, Sampling::CellCenter).is_err());
        assert!(voxelize(&pack, 0.5, 8, Sampling::Dominant { sub: 0 }).is_err());
        assert!(PhaseGrid::from_labels(4, vec![Phase::Matrix; 10]).is_err());
    }
}
