//! Periodic Lippmann–Schwinger solver for steady heat conduction.
//!
//! Two fixed-point iterations share the same FFT machinery:
//!
//! * [`Scheme::Accelerated`]: Eyre–Milton iteration with the negative
//!   reference conductivity k0 = −√(k_min·k_max),
//! * [`Scheme::Basic`]: classical fixed-point iteration with the positive
//!   reference (k_min + k_max)/2, kept as an independent check.
//!
//! Frequencies are integer vectors in DFT layout and the continuous Green
//! operator is evaluated on them directly. For even N the unpaired Nyquist
//! frequencies use [`nyquist_apply`] instead; the continuous operator is not
//! even in ξ there and would break the Hermitian symmetry of real fields.

mod field;

use std::time::Instant;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{frequency, Fft3};
use crate::par;
use crate::voxelgrid::{Phase, PhaseGrid};

pub use field::{FieldHeader, FluxField, GradientField, PolarizationField, VectorField};

pub const DEFAULT_ACC: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 5000;

/// Isotropic conductivity of each phase; the phase tensor is k·I.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseConductivities {
    pub matrix: f64,
    pub inclusion: f64,
    pub coating: f64,
}

impl PhaseConductivities {
    pub fn new(matrix: f64, inclusion: f64, coating: f64) -> Result<Self> {
        let p = PhaseConductivities {
            matrix,
            inclusion,
            coating,
        };
        if p.as_array().iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::Domain(format!(
                "phase conductivities must be positive and finite, got {:?}",
                p.as_array()
            )));
        }
        Ok(p)
    }

    /// Polymer matrix 1, polymer inclusion 0.2, metallic coating 400.
    pub fn polymer_metal() -> Self {
        PhaseConductivities {
            matrix: 1.0,
            inclusion: 0.2,
            coating: 400.0,
        }
    }

    pub fn uniform(k: f64) -> Result<Self> {
        Self::new(k, k, k)
    }

    /// Indexed by phase id.
    pub fn as_array(&self) -> [f64; 3] {
        [self.matrix, self.inclusion, self.coating]
    }

    pub fn of(&self, phase: Phase) -> f64 {
        self.as_array()[phase as usize]
    }

    pub fn min(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.as_array().into_iter().fold(0.0, f64::max)
    }

    pub fn contrast(&self) -> f64 {
        self.max() / self.min()
    }

    /// Extremes over the phases actually present in `grid`.
    pub fn present_range(&self, grid: &PhaseGrid) -> (f64, f64) {
        let counts = grid.phase_counts();
        let ks = self.as_array();
        let present = (0..3).filter(|&p| counts[p] > 0).map(|p| ks[p]);
        present.fold((f64::INFINITY, 0.0), |(lo, hi), k| (lo.min(k), hi.max(k)))
    }
}

/// Scalar reference conductivity k0 (reference tensor k0·I).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConductivity(pub f64);

/// k0 = −√(k_min·k_max) over the three phases.
pub fn reference_conductivity(phases: &PhaseConductivities) -> ReferenceConductivity {
    ReferenceConductivity(-(phases.min() * phases.max()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Accelerated,
    Basic,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accelerated" => Ok(Scheme::Accelerated),
            "basic" => Ok(Scheme::Basic),
            _ => Err(Error::Parse(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub eps_comp: f64,
    pub eps_eq: f64,
    pub converged: bool,
    pub scheme: Scheme,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub acc: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            acc: DEFAULT_ACC,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub gradient: GradientField,
    pub flux: FluxField,
    pub report: SolveReport,
}

/// Γ̂⁰(ξ)τ̂ for the isotropic reference k0·I: (ξ·τ̂)/(k0‖ξ‖²) ξ.
///
/// Panics on ξ = 0; the zero mode carries the macroscopic loading instead.
pub fn green_apply(tau_hat: [Complex64; 3], xi: [f64; 3], k0: f64) -> [Complex64; 3] {
    let xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    assert!(xi2 > 0.0, "Green operator is undefined at the zero frequency");
    let s = (tau_hat[0] * xi[0] + tau_hat[1] * xi[1] + tau_hat[2] * xi[2]) / (k0 * xi2);
    [s * xi[0], s * xi[1], s * xi[2]]
}

/// Bin `m` is the unpaired Nyquist bin of an even-length axis.
#[inline]
pub fn is_nyquist(m: usize, n: usize) -> bool {
    n.is_multiple_of(2) && 2 * m == n
}

/// Operator used in place of Γ̂⁰ on frequencies with a Nyquist component:
/// τ̂/k0. It is even in ξ, which keeps the spectrum Hermitian, and its fixed
/// point forces the flux to vanish on those frequencies.
pub fn nyquist_apply(tau_hat: [Complex64; 3], k0: f64) -> [Complex64; 3] {
    tau_hat.map(|t| t / k0)
}

/// √⟨|ξ·φ̂(ξ)|²⟩ / ‖φ̂(0)‖, the mean taken over all N³ frequencies.
pub fn divergence_residual(flux_hat: &[Vec<Complex64>; 3], n: usize) -> Result<f64> {
    let len = n * n * n;
    assert!(flux_hat.iter().all(|c| c.len() == len), "flux spectrum does not match {n}^3");
    let zero = (flux_hat[0][0].norm_sqr() + flux_hat[1][0].norm_sqr() + flux_hat[2][0].norm_sqr()).sqrt();
    if zero == 0.0 {
        return Err(Error::ZeroMeanFlux);
    }
    let plane = n * n;
    let sum = par::sum_blocks(n, |k| {
        let xz = frequency(k, n);
        let mut acc = 0.0;
        for j in 0..n {
            let xy = frequency(j, n);
            for i in 0..n {
                let v = i + n * j + plane * k;
                let d = flux_hat[0][v] * frequency(i, n) + flux_hat[1][v] * xy + flux_hat[2][v] * xz;
                acc += d.norm_sqr();
            }
        }
        acc
    });
    Ok((sum / len as f64).sqrt() / zero)
}

/// Fourier's law φ = −L∇θ on the grid.
pub fn flux_of(grid: &PhaseGrid, phases: &PhaseConductivities, gradient: &GradientField) -> FluxField {
    let ks = phases.as_array();
    let labels = grid.labels();
    let mut flux = VectorField::zeros(grid.resolution());
    for c in 0..3 {
        for (v, out) in flux.comps[c].iter_mut().enumerate() {
            *out = -ks[labels[v] as usize] * gradient.comps[c][v];
        }
    }
    flux
}

/// Polarization of the accelerated iteration, τ = −(L + L⁰)∇θ.
pub fn polarization(
    grid: &PhaseGrid,
    phases: &PhaseConductivities,
    k0: ReferenceConductivity,
    gradient: &GradientField,
) -> PolarizationField {
    let ks = phases.as_array();
    let labels = grid.labels();
    let mut tau = VectorField::zeros(grid.resolution());
    for c in 0..3 {
        for (v, out) in tau.comps[c].iter_mut().enumerate() {
            *out = -(ks[labels[v] as usize] + k0.0) * gradient.comps[c][v];
        }
    }
    tau
}

/// Reusable FFT plan and work buffers for one grid resolution.
///
/// Two real fields share each complex transform: `packed[0]` carries the x
/// component in its real part and y in its imaginary part, `packed[1]` the z
/// component. Spectra are unpacked pairwise at ξ and −ξ.
pub struct Solver {
    n: usize,
    fft: Fft3,
    packed: [Vec<Complex64>; 2],
}

impl Solver {
    pub fn new(n: usize) -> Self {
        let len = n * n * n;
        Solver {
            n,
            fft: Fft3::new(n),
            packed: [vec![Complex64::default(); len], vec![Complex64::default(); len]],
        }
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn solve(
        &mut self,
        grid: &PhaseGrid,
        phases: &PhaseConductivities,
        macro_gradient: [f64; 3],
        scheme: Scheme,
        opts: SolverOptions,
    ) -> Result<Solution> {
        self.solve_with(grid, phases, macro_gradient, scheme, opts, |_, _| {})
    }

    /// Like [`Solver::solve`], calling `observe(iteration, &gradient)` after
    /// every update.
    pub fn solve_with(
        &mut self,
        grid: &PhaseGrid,
        phases: &PhaseConductivities,
        macro_gradient: [f64; 3],
        scheme: Scheme,
        opts: SolverOptions,
        mut observe: impl FnMut(usize, &GradientField),
    ) -> Result<Solution> {
        let n = self.n;
        if grid.resolution() != n {
            return Err(Error::Domain(format!(
                "grid resolution {} does not match solver resolution {n}",
                grid.resolution()
            )));
        }
        let load_norm = macro_gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(load_norm > 0.0 && load_norm.is_finite()) {
            return Err(Error::Domain("macroscopic gradient must be nonzero".into()));
        }
        if opts.acc.is_nan() || opts.acc <= 0.0 || opts.max_iter == 0 {
            return Err(Error::Domain("acc and max_iter must be positive".into()));
        }
        let start = Instant::now();
        let ks = phases.as_array();

        // Per-phase scalars: polarization factor and update factor.
        let (k0, tau_coef, green_sign, update_coef) = match scheme {
            Scheme::Accelerated => {
                let k0 = reference_conductivity(phases).0;
                assert!(ks.iter().all(|&k| k != k0), "reference coincides with a phase");
                (k0, ks.map(|k| -(k + k0)), -1.0, ks.map(|k| 2.0 * k0 / (k - k0)))
            }
            Scheme::Basic => {
                let k0 = 0.5 * (phases.min() + phases.max());
                (k0, ks.map(|k| -(k - k0)), 1.0, [0.0; 3])
            }
        };

        let labels = grid.labels();
        let plane = n * n;
        let len = plane * n;
        let inv_len = 1.0 / len as f64;
        let mut grad = VectorField::constant(n, macro_gradient);
        let mut eps_comp = f64::INFINITY;
        let mut eps_eq = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;

        loop {
            // 1. equilibrium check once the compatibility residual is small
            if eps_comp < opts.acc {
                self.load(labels, &grad, ks.map(|k| -k));
                self.forward();
                eps_eq = packed_divergence_residual(&self.packed, n)?;
                if eps_eq < opts.acc {
                    converged = true;
                    break;
                }
            }
            if iterations == opts.max_iter {
                break;
            }

            // 2-3. polarization and its spectrum
            self.load(labels, &grad, tau_coef);
            self.forward();

            // 4. Green operator, zero mode pinned to the loading
            let pinned = macro_gradient.map(|g| Complex64::new(g * len as f64, 0.0));
            self.apply_pairwise(|xi_idx, tau| {
                if xi_idx == [0, 0, 0] {
                    return pinned;
                }
                let [i, j, k] = xi_idx;
                let g = if is_nyquist(i, n) || is_nyquist(j, n) || is_nyquist(k, n) {
                    nyquist_apply(tau, k0)
                } else {
                    green_apply(tau, [frequency(i, n), frequency(j, n), frequency(k, n)], k0)
                };
                g.map(|c| c * green_sign)
            });

            // 5. back to real space
            for c in &mut self.packed {
                self.fft.inverse(c);
            }

            // 6-7. compatibility residual, then the pointwise update
            let [pxy, pz] = &self.packed;
            let partial = par::map_block3(&mut grad.comps, plane, |k, [gx, gy, gz]| {
                let base = k * plane;
                let mut acc = 0.0;
                for v in 0..gx.len() {
                    let w = base + v;
                    let comp = [pxy[w].re * inv_len, pxy[w].im * inv_len, pz[w].re * inv_len];
                    let diff = [comp[0] - gx[v], comp[1] - gy[v], comp[2] - gz[v]];
                    acc += diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2];
                    match scheme {
                        Scheme::Accelerated => {
                            let c = update_coef[labels[w] as usize];
                            gx[v] -= c * diff[0];
                            gy[v] -= c * diff[1];
                            gz[v] -= c * diff[2];
                        }
                        Scheme::Basic => {
                            gx[v] = comp[0];
                            gy[v] = comp[1];
                            gz[v] = comp[2];
                        }
                    }
                }
                acc
            });
            eps_comp = (partial.into_iter().sum::<f64>() * inv_len).sqrt() / load_norm;
            iterations += 1;
            observe(iterations, &grad);
        }

        let flux = flux_of(grid, phases, &grad);
        Ok(Solution {
            gradient: grad,
            flux,
            report: SolveReport {
                iterations,
                eps_comp,
                eps_eq,
                converged,
                scheme,
                wall_time: start.elapsed().as_secs_f64(),
            },
        })
    }

    /// packed ← coef(phase)·field, two components per complex buffer.
    fn load(&mut self, labels: &[Phase], field: &VectorField, coef: [f64; 3]) {
        let plane = self.n * self.n;
        let [fx, fy, fz] = &field.comps;
        let [pxy, pz] = &mut self.packed;
        par::for_each_block(pxy, plane, |k, out| {
            let base = k * plane;
            for (v, dst) in out.iter_mut().enumerate() {
                let c = coef[labels[base + v] as usize];
                *dst = Complex64::new(c * fx[base + v], c * fy[base + v]);
            }
        });
        par::for_each_block(pz, plane, |k, out| {
            let base = k * plane;
            for (v, dst) in out.iter_mut().enumerate() {
                *dst = Complex64::new(coef[labels[base + v] as usize] * fz[base + v], 0.0);
            }
        });
    }

    fn forward(&mut self) {
        for c in &mut self.packed {
            self.fft.forward(c);
        }
    }

    /// Replace the packed spectrum of a real 3-vector field by the packed
    /// spectrum of `op(ξ, v̂(ξ))`. `op` must be even in ξ and real-linear so
    /// that the result is again the spectrum of a real field.
    fn apply_pairwise<F>(&mut self, op: F)
    where
        F: Fn([usize; 3], [Complex64; 3]) -> [Complex64; 3] + Sync + Send,
    {
        let n = self.n;
        let plane = n * n;
        let [pxy, pz] = &mut self.packed;
        let mut slabs_xy: Vec<Option<&mut [Complex64]>> = pxy.chunks_mut(plane).map(Some).collect();
        let mut slabs_z: Vec<Option<&mut [Complex64]>> = pz.chunks_mut(plane).map(Some).collect();
        let mut jobs = Vec::with_capacity(n / 2 + 1);
        for k in 0..n {
            let kk = (n - k) % n;
            if kk < k {
                continue;
            }
            let a = (k, slabs_xy[k].take().unwrap(), slabs_z[k].take().unwrap());
            let b = if kk != k {
                Some((kk, slabs_xy[kk].take().unwrap(), slabs_z[kk].take().unwrap()))
            } else {
                None
            };
            jobs.push((a, b));
        }
        par::for_each_owned(jobs, |((k, axy, az), partner)| {
            let mirror = |m: usize| (n - m) % n;
            match partner {
                Some((_, bxy, bz)) => {
                    for j in 0..n {
                        for i in 0..n {
                            let v = i + n * j;
                            let w = mirror(i) + n * mirror(j);
                            let (p, q) = pair_op(&op, [i, j, k], axy[v], bxy[w], az[v], bz[w]);
                            axy[v] = p.0;
                            bxy[w] = p.1;
                            az[v] = q.0;
                            bz[w] = q.1;
                        }
                    }
                }
                None => {
                    for j in 0..n {
                        for i in 0..n {
                            let v = i + n * j;
                            let w = mirror(i) + n * mirror(j);
                            if w < v {
                                continue;
                            }
                            let (p, q) = pair_op(&op, [i, j, k], axy[v], axy[w], az[v], az[w]);
                            axy[v] = p.0;
                            az[v] = q.0;
                            if w != v {
                                axy[w] = p.1;
                                az[w] = q.1;
                            }
                        }
                    }
                }
            }
        });
    }
}

/// Unpack the three spectra at ξ from packed values at ξ and −ξ.
#[inline]
fn unpack(xy: Complex64, xy_m: Complex64, z: Complex64, z_m: Complex64) -> [Complex64; 3] {
    let c = xy_m.conj();
    [
        (xy + c) * 0.5,
        (xy - c) * Complex64::new(0.0, -0.5),
        (z + z_m.conj()) * 0.5,
    ]
}

/// Apply `op` at ξ, returning packed outputs (at ξ, at −ξ) for both buffers.
#[inline]
#[allow(clippy::type_complexity)]
fn pair_op<F>(
    op: &F,
    idx: [usize; 3],
    xy: Complex64,
    xy_m: Complex64,
    z: Complex64,
    z_m: Complex64,
) -> ((Complex64, Complex64), (Complex64, Complex64))
where
    F: Fn([usize; 3], [Complex64; 3]) -> [Complex64; 3],
{
    let g = op(idx, unpack(xy, xy_m, z, z_m));
    let i = Complex64::i();
    (
        (g[0] + i * g[1], g[0].conj() + i * g[1].conj()),
        (g[2], g[2].conj()),
    )
}

/// [`divergence_residual`] evaluated directly on packed spectra.
fn packed_divergence_residual(packed: &[Vec<Complex64>; 2], n: usize) -> Result<f64> {
    let [pxy, pz] = packed;
    let zero = unpack(pxy[0], pxy[0], pz[0], pz[0]);
    let zero = (zero[0].norm_sqr() + zero[1].norm_sqr() + zero[2].norm_sqr()).sqrt();
    if zero == 0.0 {
        return Err(Error::ZeroMeanFlux);
    }
    let plane = n * n;
    let mirror = |m: usize| (n - m) % n;
    let sum = par::sum_blocks(n, |k| {
        let xz = frequency(k, n);
        let mut acc = 0.0;
        for j in 0..n {
            let xy = frequency(j, n);
            for i in 0..n {
                let v = i + n * j + plane * k;
                let w = mirror(i) + n * mirror(j) + plane * mirror(k);
                let f = unpack(pxy[v], pxy[w], pz[v], pz[w]);
                acc += (f[0] * frequency(i, n) + f[1] * xy + f[2] * xz).norm_sqr();
            }
        }
        acc
    });
    Ok((sum / (plane * n) as f64).sqrt() / zero)
}

/// One-shot accelerated solve.
pub fn accelerated_solve(
    grid: &PhaseGrid,
    phases: &PhaseConductivities,
    macro_gradient: [f64; 3],
    opts: SolverOptions,
) -> Result<Solution> {
    Solver::new(grid.resolution()).solve(grid, phases, macro_gradient, Scheme::Accelerated, opts)
}

/// One-shot basic-scheme solve.
pub fn basic_solve(
    grid: &PhaseGrid,
    phases: &PhaseConductivities,
    macro_gradient: [f64; 3],
    opts: SolverOptions,
) -> Result<Solution> {
    Solver::new(grid.resolution()).solve(grid, phases, macro_gradient, Scheme::Basic, opts)
}
