//! Parameter sweeps over resolution, sphere count and layer thickness.

mod plan;
mod table;

pub use plan::{sample_seed, CellKey, SweepConfig, SweepPlan};
pub use table::{emit_csv, parse_aggregates, CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homogenize::homogenize_with;
use crate::microstructure::rsa_generate;
use crate::solver::{Scheme, Solver};
use crate::voxelgrid::{coating_fraction, coating_voxel_thickness, voxelize};

/// Outcome of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    /// RSA ran out of attempts.
    Saturated,
    /// At least one loading hit max_iter.
    NotConverged,
    Error,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::Saturated => "saturated",
            SampleStatus::NotConverged => "not_converged",
            SampleStatus::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ok" => SampleStatus::Ok,
            "saturated" => SampleStatus::Saturated,
            "not_converged" => SampleStatus::NotConverged,
            "error" => SampleStatus::Error,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample: usize,
    pub seed: u64,
    pub status: SampleStatus,
    pub k_iso: Option<f64>,
    pub aniso_index: Option<f64>,
    pub iterations_max: usize,
    pub eps_eq: f64,
    pub coating_frac_empirical: Option<f64>,
    pub coating_voxels: Option<usize>,
    pub message: Option<String>,
}

/// Cell statistics over the successful samples. The k fields are `None` when
/// fewer than 70% of the samples succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub key: CellKey,
    pub k_mean: Option<f64>,
    pub k_std: Option<f64>,
    pub aniso_mean: Option<f64>,
    pub aniso_std: Option<f64>,
    pub iterations_max: usize,
    pub eps_eq_max: f64,
    pub coating_frac_empirical_mean: Option<f64>,
    pub coating_frac_empirical_std: Option<f64>,
    pub coating_frac_analytic: f64,
    pub coating_voxels_mean: Option<f64>,
    pub coating_voxels_std: Option<f64>,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCellResult {
    pub samples: Vec<SampleResult>,
    pub aggregate: CellAggregate,
    /// Analytic coating thickness in voxels, (l·r)·N.
    pub coating_voxel_thickness: f64,
}

impl SweepCellResult {
    pub fn key(&self) -> CellKey {
        self.aggregate.key
    }

    pub fn failed(&self) -> usize {
        self.aggregate.failed
    }
}

/// Mean and sample standard deviation (n − 1); σ = 0 for a single value.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// True when `ok` of `total` samples is at least 70%.
pub fn enough_successes(ok: usize, total: usize) -> bool {
    ok * 10 >= total * 7 && ok > 0
}

fn aggregate(key: CellKey, plan: &SweepPlan, samples: &[SampleResult]) -> CellAggregate {
    let ok: Vec<&SampleResult> = samples.iter().filter(|s| s.status == SampleStatus::Ok).collect();
    let enough = enough_successes(ok.len(), samples.len());
    let stat = |f: &dyn Fn(&SampleResult) -> Option<f64>| -> (Option<f64>, Option<f64>) {
        if !enough {
            return (None, None);
        }
        let v: Vec<f64> = ok.iter().filter_map(|s| f(s)).collect();
        match mean_std(&v) {
            Some((m, s)) => (Some(m), Some(s)),
            None => (None, None),
        }
    };
    let (k_mean, k_std) = stat(&|s| s.k_iso);
    let (aniso_mean, aniso_std) = stat(&|s| s.aniso_index);
    let (cf_mean, cf_std) = stat(&|s| s.coating_frac_empirical);
    let (cv_mean, cv_std) = stat(&|s| s.coating_voxels.map(|c| c as f64));
    CellAggregate {
        key,
        k_mean,
        k_std,
        aniso_mean,
        aniso_std,
        iterations_max: samples.iter().map(|s| s.iterations_max).max().unwrap_or(0),
        eps_eq_max: samples.iter().map(|s| s.eps_eq).fold(0.0, f64::max),
        coating_frac_empirical_mean: cf_mean,
        coating_frac_empirical_std: cf_std,
        coating_frac_analytic: coating_fraction(key.layer, plan.f_sp),
        coating_voxels_mean: cv_mean,
        coating_voxels_std: cv_std,
        failed: samples.len() - ok.len(),
    }
}

/// Generate, voxelize and homogenize one sample of a cell.
pub fn run_sample(plan: &SweepPlan, key: &CellKey, sample: usize) -> SampleResult {
    let seed = sample_seed(plan.base_seed, key, sample);
    let mut out = SampleResult {
        sample,
        seed,
        status: SampleStatus::Error,
        k_iso: None,
        aniso_index: None,
        iterations_max: 0,
        eps_eq: 0.0,
        coating_frac_empirical: None,
        coating_voxels: None,
        message: None,
    };
    let pack = match rsa_generate(key.n_sp, plan.f_sp, seed, plan.max_attempts) {
        Ok(p) => p,
        Err(e) => {
            if matches!(e, Error::Saturated { .. }) {
                out.status = SampleStatus::Saturated;
            }
            out.message = Some(e.to_string());
            return out;
        }
    };
    let grid = match voxelize(&pack, key.layer, key.resolution, plan.sampling) {
        Ok(g) => g,
        Err(e) => {
            out.message = Some(e.to_string());
            return out;
        }
    };
    let coat = grid.phase_counts()[2];
    out.coating_voxels = Some(coat);
    out.coating_frac_empirical = Some(coat as f64 / grid.len() as f64);

    let mut solver = Solver::new(key.resolution);
    match homogenize_with(&mut solver, &grid, &plan.phases, plan.solver_options(), Scheme::Accelerated) {
        Ok(t) => {
            out.status = SampleStatus::Ok;
            out.k_iso = Some(t.isotropic_estimate);
            out.aniso_index = Some(t.anisotropy_index);
            out.iterations_max = t.max_iterations();
            out.eps_eq = t.max_eps_eq();
        }
        Err(Error::NotConverged { reports }) => {
            out.status = SampleStatus::NotConverged;
            out.iterations_max = reports.iter().map(|r| r.iterations).max().unwrap_or(0);
            out.eps_eq = reports.iter().map(|r| r.eps_eq).fold(0.0, f64::max);
            out.message = Some(format!("no convergence within {} iterations", plan.max_iter));
        }
        Err(e) => out.message = Some(e.to_string()),
    }
    out
}

/// Run every (cell, sample) job with at most `parallelism` jobs in flight.
/// Results are in [`SweepPlan::cells`] order and do not depend on
/// `parallelism` or scheduling.
pub fn run_sweep(plan: &SweepPlan, parallelism: usize) -> Result<Vec<SweepCellResult>> {
    run_sweep_with(plan, parallelism, &|_, _| {})
}

/// [`run_sweep`] calling `progress(cell, sample)` as each job finishes.
pub fn run_sweep_with(
    plan: &SweepPlan,
    parallelism: usize,
    progress: &(dyn Fn(&CellKey, &SampleResult) + Sync),
) -> Result<Vec<SweepCellResult>> {
    plan.validate()?;
    if parallelism == 0 {
        return Err(Error::Domain("parallelism must be at least 1".into()));
    }
    let cells = plan.cells();
    let per = plan.samples_per_cell;
    let job = |idx: usize| {
        let key = &cells[idx / per];
        let r = run_sample(plan, key, idx % per);
        progress(key, &r);
        r
    };
    let results = run_jobs(cells.len() * per, parallelism, &job)?;
    Ok(cells
        .iter()
        .zip(results.chunks(per))
        .map(|(key, samples)| SweepCellResult {
            aggregate: aggregate(*key, plan, samples),
            coating_voxel_thickness: coating_voxel_thickness(key.layer, key.resolution, key.n_sp, plan.f_sp),
            samples: samples.to_vec(),
        })
        .collect())
}

#[cfg(feature = "parallel")]
fn run_jobs(n: usize, parallelism: usize, job: &(dyn Fn(usize) -> SampleResult + Sync)) -> Result<Vec<SampleResult>> {
    if parallelism == 1 {
        return Ok((0..n).map(job).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Domain(e.to_string()))?;
    Ok(pool.install(|| crate::par::map_collect(n, job)))
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(n: usize, _parallelism: usize, job: &(dyn Fn(usize) -> SampleResult + Sync)) -> Result<Vec<SampleResult>> {
    Ok((0..n).map(job).collect())
}

/// Smallest layer beyond which every successive relative increment of the
/// series stays below `threshold`. `None` for fewer than four points or when
/// the last increment is still above the threshold.
pub fn plateau_detect(layers: &[f64], estimates: &[f64], threshold: f64) -> Option<f64> {
    let n = layers.len().min(estimates.len());
    if n < 4 {
        return None;
    }
    let small = |i: usize| ((estimates[i + 1] - estimates[i]) / estimates[i].abs()).abs() < threshold;
    let mut p = n - 1;
    while p > 0 && small(p - 1) {
        p -= 1;
    }
    // p is the first point after which all increments are small.
    if p == n - 1 {
        return None;
    }
    Some(layers[p.max(1)])
}
