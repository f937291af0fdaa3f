//! Cubic 3D complex FFT on x-fastest buffers, built from rustfft line transforms.
//!
//! Forward transforms are unnormalized; [`Fft3::inverse`] does not scale
//! either, callers divide by N³.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// One placeholder per xz-plane, used to drive the z pass.
    planes: Vec<()>,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            planes: vec![(); n],
        }
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.forward);
        self.transform(&*plan, data);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.inverse);
        self.transform(&*plan, data);
    }

    fn transform(&mut self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.n;
        let plane = n * n;
        assert_eq!(data.len(), plane * n, "buffer does not match {n}^3 grid");
        let scratch_len = plan.get_inplace_scratch_len();
        let init = || (vec![Complex64::default(); scratch_len], vec![Complex64::default(); plane]);

        // x then y, one z-slab at a time.
        par::for_each_block_init(data, plane, init, |(scratch, tile), _, slab| {
            plan.process_with_scratch(slab, scratch);
            transpose_square(slab, tile, n);
            plan.process_with_scratch(tile, scratch);
            transpose_square(tile, slab, n);
        });

        // z, one xz-plane at a time: gather the plane with k fastest,
        // transform its rows, scatter back.
        let cube = SharedCube(data.as_mut_ptr());
        par::for_each_block_init(&mut self.planes[..], 1, init, |(scratch, tile), j, _| {
            let base = n * j;
            // SAFETY: plane j touches exactly the indices i + n*j + n²*k, which
            // are disjoint between planes, and `data` outlives this call.
            unsafe {
                for k in 0..n {
                    let row = cube.at(base + plane * k);
                    for i in 0..n {
                        *tile.get_unchecked_mut(i * n + k) = *row.add(i);
                    }
                }
            }
            plan.process_with_scratch(tile, scratch);
            unsafe {
                for k in 0..n {
                    let row = cube.at(base + plane * k);
                    for i in 0..n {
                        *row.add(i) = *tile.get_unchecked(i * n + k);
                    }
                }
            }
        });
    }
}

#[derive(Clone, Copy)]
struct SharedCube(*mut Complex64);
// SAFETY: only used for the disjoint per-plane accesses in `transform`.
unsafe impl Send for SharedCube {}
unsafe impl Sync for SharedCube {}

impl SharedCube {
    unsafe fn at(self, offset: usize) -> *mut Complex64 {
        self.0.add(offset)
    }
}

/// Blocked transpose of an n×n row-major tile.
fn transpose_square(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 16;
    for r0 in (0..n).step_by(B) {
        for c0 in (0..n).step_by(B) {
            for r in r0..(r0 + B).min(n) {
                for c in c0..(c0 + B).min(n) {
                    dst[c * n + r] = src[r * n + c];
                }
            }
        }
    }
}

/// Signed integer frequency of DFT bin `m` on an `n`-point axis,
/// in `-n/2 ..= (n-1)/2`.
#[inline]
pub fn frequency(m: usize, n: usize) -> f64 {
    if 2 * m < n {
        m as f64
    } else {
        m as f64 - n as f64
    }
}
