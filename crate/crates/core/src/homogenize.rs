//! Effective conductivity tensor from three unit loadings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{PhaseConductivities, Scheme, SolveReport, Solver, SolverOptions};
use crate::voxelgrid::PhaseGrid;

pub type Matrix3 = [[f64; 3]; 3];

/// L_hom with the reports of the three solves that produced its columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedTensor {
    pub matrix: Matrix3,
    pub reports: Vec<SolveReport>,
    pub isotropic_estimate: f64,
    pub anisotropy_index: f64,
}

/// Mean of the diagonal.
pub fn isotropic_estimate(m: &Matrix3) -> f64 {
    (m[0][0] + m[1][1] + m[2][2]) / 3.0
}

/// Largest off-diagonal magnitude relative to the isotropic estimate.
pub fn anisotropy_index(m: &Matrix3) -> f64 {
    let mut off: f64 = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                off = off.max(v.abs());
            }
        }
    }
    off / isotropic_estimate(m)
}

impl HomogenizedTensor {
    pub fn from_matrix(matrix: Matrix3, reports: Vec<SolveReport>) -> Self {
        HomogenizedTensor {
            isotropic_estimate: isotropic_estimate(&matrix),
            anisotropy_index: anisotropy_index(&matrix),
            matrix,
            reports,
        }
    }

    /// max |L − Lᵀ| / isotropic estimate.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.matrix;
        let worst = (0..9)
            .map(|v| (m[v / 3][v % 3] - m[v % 3][v / 3]).abs())
            .fold(0.0, f64::max);
        worst / self.isotropic_estimate
    }

    pub fn max_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    pub fn max_eps_eq(&self) -> f64 {
        self.reports.iter().map(|r| r.eps_eq).fold(0.0, f64::max)
    }
}

/// Column j of L_hom is −⟨φ⟩ under the loading ∇Θ = e_j.
pub fn homogenized_tensor(
    grid: &PhaseGrid,
    phases: &PhaseConductivities,
    opts: SolverOptions,
    scheme: Scheme,
) -> Result<HomogenizedTensor> {
    let mut solver = Solver::new(grid.resolution());
    homogenize_with(&mut solver, grid, phases, opts, scheme)
}

/// [`homogenized_tensor`] reusing an existing solver's plans and buffers.
pub fn homogenize_with(
    solver: &mut Solver,
    grid: &PhaseGrid,
    phases: &PhaseConductivities,
    opts: SolverOptions,
    scheme: Scheme,
) -> Result<HomogenizedTensor> {
    let mut matrix = [[0.0; 3]; 3];
    let mut reports = Vec::with_capacity(3);
    for j in 0..3 {
        let mut load = [0.0; 3];
        load[j] = 1.0;
        let sol = solver.solve(grid, phases, load, scheme, opts)?;
        let converged = sol.report.converged;
        reports.push(sol.report);
        if !converged {
            return Err(Error::NotConverged { reports });
        }
        let mean_flux = sol.flux.mean();
        for i in 0..3 {
            matrix[i][j] = -mean_flux[i];
        }
    }
    Ok(HomogenizedTensor::from_matrix(matrix, reports))
}

/// Where a tensor came from, for the JSON result record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorProvenance {
    pub seed: u64,
    pub resolution: usize,
    pub n_sp: usize,
    pub layer: f64,
    pub phases: PhaseConductivities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub matrix: Matrix3,
    pub isotropic_estimate: f64,
    pub anisotropy_index: f64,
    pub loadings: Vec<SolveReport>,
    pub provenance: TensorProvenance,
}

impl TensorRecord {
    pub fn new(tensor: &HomogenizedTensor, grid: &PhaseGrid, phases: &PhaseConductivities) -> Self {
        TensorRecord {
            matrix: tensor.matrix,
            isotropic_estimate: tensor.isotropic_estimate,
            anisotropy_index: tensor.anisotropy_index,
            loadings: tensor.reports.clone(),
            provenance: TensorProvenance {
                seed: grid.provenance.seed,
                resolution: grid.resolution(),
                n_sp: grid.provenance.n_sp,
                layer: grid.layer,
                phases: *phases,
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
