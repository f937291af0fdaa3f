use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microstructure::DEFAULT_MAX_ATTEMPTS;
use crate::solver::{PhaseConductivities, SolverOptions, DEFAULT_ACC, DEFAULT_MAX_ITER};
use crate::voxelgrid::Sampling;

/// Axes and settings of a sweep over (resolution, sphere count, layer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub resolutions: Vec<usize>,
    pub sphere_counts: Vec<usize>,
    pub layers: Vec<f64>,
    pub samples_per_cell: usize,
    pub f_sp: f64,
    pub phases: PhaseConductivities,
    pub acc: f64,
    pub max_iter: usize,
    pub base_seed: u64,
    pub max_attempts: u64,
    pub sampling: Sampling,
}

impl SweepPlan {
    /// Full protocol: N ∈ {64, 128, 256}, 30 to 100 spheres, thin and thick
    /// layers, ten samples per cell at 30% spheres.
    pub fn full() -> Self {
        let mut layers = vec![0.02, 0.04, 0.06, 0.08];
        layers.extend((1..=9).map(|i| i as f64 / 10.0));
        SweepPlan {
            resolutions: vec![64, 128, 256],
            sphere_counts: (3..=10).map(|i| i * 10).collect(),
            layers,
            samples_per_cell: 10,
            f_sp: 0.3,
            phases: PhaseConductivities::polymer_metal(),
            acc: DEFAULT_ACC,
            max_iter: DEFAULT_MAX_ITER,
            base_seed: 1,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            sampling: Sampling::default(),
        }
    }

    /// Small plan that finishes in a minute or two on one core.
    pub fn desk() -> Self {
        SweepPlan {
            resolutions: vec![16, 32],
            sphere_counts: vec![30, 60],
            layers: vec![0.1, 0.5, 0.9],
            samples_per_cell: 3,
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(m.to_string()));
        if self.resolutions.is_empty() || self.sphere_counts.is_empty() || self.layers.is_empty() {
            return bad("sweep axes must be non-empty");
        }
        if self.samples_per_cell == 0 {
            return bad("samples_per_cell must be at least 1");
        }
        if self.resolutions.contains(&0) || self.sphere_counts.contains(&0) {
            return bad("resolutions and sphere counts must be positive");
        }
        if self.layers.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("layers must lie in [0, 1]");
        }
        if self.acc.is_nan() || self.acc <= 0.0 || self.max_iter == 0 {
            return bad("acc and max_iter must be positive");
        }
        crate::microstructure::radius_from_fraction(1, self.f_sp)?;
        PhaseConductivities::new(self.phases.matrix, self.phases.inclusion, self.phases.coating)?;
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            acc: self.acc,
            max_iter: self.max_iter,
        }
    }

    /// Cells in (resolution, sphere count, layer) lexicographic order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &resolution in &self.resolutions {
            for &n_sp in &self.sphere_counts {
                for &layer in &self.layers {
                    out.push(CellKey {
                        resolution,
                        n_sp,
                        layer,
                    });
                }
            }
        }
        out
    }

    /// Apply a flat key-value config on top of this plan.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.apply(self);
        Ok(())
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub resolution: usize,
    pub n_sp: usize,
    pub layer: f64,
}

impl CellKey {
    /// Layer in thousandths, as used for seed derivation.
    pub fn layer_milli(&self) -> u64 {
        (self.layer * 1000.0).round() as u64
    }
}

/// Config file keys. Every key is optional; present keys override the plan.
///
/// ```toml
/// preset = "desk"            # or "full"
/// resolutions = [64, 128]
/// sphere_counts = [30, 50, 70]
/// layers = [0.1, 0.3, 0.5]
/// samples_per_cell = 10
/// f_sp = 0.3
/// k_matrix = 1.0
/// k_inclusion = 0.2
/// k_coating = 400.0
/// acc = 1e-6
/// max_iter = 5000
/// base_seed = 1
/// max_attempts = 1000000
/// subsamples = 0             # 0: cell center, s > 0: dominant phase over s³ points
/// ```
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub preset: Option<String>,
    pub resolutions: Option<Vec<usize>>,
    pub sphere_counts: Option<Vec<usize>>,
    pub layers: Option<Vec<f64>>,
    pub samples_per_cell: Option<usize>,
    pub f_sp: Option<f64>,
    pub k_matrix: Option<f64>,
    pub k_inclusion: Option<f64>,
    pub k_coating: Option<f64>,
    pub acc: Option<f64>,
    pub max_iter: Option<usize>,
    pub base_seed: Option<u64>,
    pub max_attempts: Option<u64>,
    pub subsamples: Option<u8>,
}

impl SweepConfig {
    pub fn apply(&self, plan: &mut SweepPlan) {
        match self.preset.as_deref() {
            Some("full") => *plan = SweepPlan::full(),
            Some("desk") => *plan = SweepPlan::desk(),
            _ => {}
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    plan.$field = v.clone();
                }
            )*};
        }
        set!(resolutions, sphere_counts, layers, samples_per_cell, f_sp, acc, max_iter, base_seed, max_attempts);
        if let Some(k) = self.k_matrix {
            plan.phases.matrix = k;
        }
        if let Some(k) = self.k_inclusion {
            plan.phases.inclusion = k;
        }
        if let Some(k) = self.k_coating {
            plan.phases.coating = k;
        }
        if let Some(s) = self.subsamples {
            plan.sampling = if s == 0 { Sampling::CellCenter } else { Sampling::Dominant { sub: s } };
        }
    }
}

/// Per-sample seed: splitmix64 folded over
/// (base_seed, resolution, n_sp, round(1000·layer), sample).
pub fn sample_seed(base_seed: u64, cell: &CellKey, sample: usize) -> u64 {
    let mut h = splitmix64(base_seed);
    for part in [cell.resolution as u64, cell.n_sp as u64, cell.layer_milli(), sample as u64] {
        h = splitmix64(h ^ part);
    }
    h
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
