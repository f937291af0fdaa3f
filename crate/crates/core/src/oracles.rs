//! Closed-form references for checking the FFT solver.

use serde::{Deserialize, Serialize};

use crate::solver::PhaseConductivities;

/// Effective conductivity bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
}

impl BoundPair {
    pub fn contains(&self, k: f64) -> bool {
        self.lower <= k && k <= self.upper
    }

    /// Widen both ends by a relative margin.
    pub fn widened(&self, rel: f64) -> BoundPair {
        BoundPair {
            lower: self.lower * (1.0 - rel),
            upper: self.upper * (1.0 + rel),
        }
    }
}

/// Exact layered-medium conductivities: (across the layers, along the layers).
pub fn laminate_effective(k_a: f64, k_b: f64, fraction_a: f64) -> (f64, f64) {
    let f = fraction_a;
    let normal = 1.0 / (f / k_a + (1.0 - f) / k_b);
    let transverse = f * k_a + (1.0 - f) * k_b;
    (normal, transverse)
}

/// Wiener bounds as a pair: harmonic and arithmetic means.
pub fn wiener_bounds(k_a: f64, k_b: f64, fraction_a: f64) -> BoundPair {
    let (lower, upper) = laminate_effective(k_a, k_b, fraction_a);
    BoundPair { lower, upper }
}

/// Hashin–Shtrikman bounds for an isotropic two-phase conductor in 3D.
/// The lower bound takes the poorer conductor as the matrix, the upper
/// bound the better one.
pub fn hs_bounds(k_a: f64, k_b: f64, fraction_a: f64) -> BoundPair {
    let (k_lo, f_lo, k_hi, f_hi) = if k_a <= k_b {
        (k_a, fraction_a, k_b, 1.0 - fraction_a)
    } else {
        (k_b, 1.0 - fraction_a, k_a, fraction_a)
    };
    if k_lo == k_hi {
        return BoundPair { lower: k_lo, upper: k_lo };
    }
    let lower = k_lo + f_hi / (1.0 / (k_hi - k_lo) + f_lo / (3.0 * k_lo));
    let upper = k_hi + f_lo / (1.0 / (k_lo - k_hi) + f_hi / (3.0 * k_hi));
    BoundPair { lower, upper }
}

/// First-order effective conductivity of dilute spheres (fraction `f`) in a matrix.
pub fn dilute_spheres(k_matrix: f64, k_sphere: f64, f: f64) -> f64 {
    let beta = (k_sphere - k_matrix) / (k_sphere + 2.0 * k_matrix);
    k_matrix * (1.0 + 3.0 * f * beta)
}

/// Outer bracket for a matrix with two embedded phases. Inclusion and
/// coating are merged into one phase at their combined fraction, taking the
/// smaller of their conductivities for the lower bound and the larger for the
/// upper bound; each end is then the matching Hashin–Shtrikman bound.
pub fn three_phase_bracket(phases: &PhaseConductivities, fractions: [f64; 3]) -> BoundPair {
    let [_, f_i, f_c] = fractions;
    let solid = f_i + f_c;
    let embedded: Vec<f64> = [(f_i, phases.inclusion), (f_c, phases.coating)]
        .iter()
        .filter(|(f, _)| *f > 0.0)
        .map(|&(_, k)| k)
        .collect();
    if embedded.is_empty() {
        return BoundPair { lower: phases.matrix, upper: phases.matrix };
    }
    let k_low = embedded.iter().copied().fold(f64::INFINITY, f64::min);
    let k_high = embedded.iter().copied().fold(0.0, f64::max);
    BoundPair {
        lower: hs_bounds(phases.matrix, k_low, 1.0 - solid).lower,
        upper: hs_bounds(phases.matrix, k_high, 1.0 - solid).upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn laminate_examples() {
        let (n, t) = laminate_effective(1.0, 0.2, 0.5);
        assert!((n - 1.0 / 3.0).abs() < 1e-15);
        assert!((t - 0.6).abs() < 1e-15);
        assert_eq!(laminate_effective(2.0, 2.0, 0.3), (2.0, 2.0));
        assert_eq!(laminate_effective(1.0, 0.2, 1.0), (1.0, 1.0));
    }

    #[test]
    fn hs_degenerate_cases() {
        let b = hs_bounds(400.0, 1.0, 0.0);
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        let b = hs_bounds(3.0, 3.0, 0.4);
        assert_eq!((b.lower, b.upper), (3.0, 3.0));
        let b = hs_bounds(400.0, 1.0, 1.0);
        assert!((b.lower - 400.0).abs() < 1e-12 && (b.upper - 400.0).abs() < 1e-12);
    }

    #[test]
    fn hs_lower_is_maxwell_garnett() {
        // well-conducting spheres in a poor matrix: k_m (1 + 2fβ)/(1 − fβ)
        for &(km, ks, f) in &[(1.0, 400.0, 0.3), (1.0, 5.0, 0.1), (0.2, 1.0, 0.35)] {
            let beta = (ks - km) / (ks + 2.0 * km);
            let mg = km * (1.0 + 2.0 * f * beta) / (1.0 - f * beta);
            let b = hs_bounds(ks, km, f);
            assert!((b.lower - mg).abs() < 1e-12 * mg, "{} vs {mg}", b.lower);
        }
    }

    #[test]
    fn hs_slope_matches_dilute_limit() {
        let f = 1e-7;
        let b = hs_bounds(400.0, 1.0, f);
        let d = dilute_spheres(1.0, 400.0, f);
        assert!((b.lower - d).abs() < 1e-12);
        let d = dilute_spheres(1.0, 0.2, f);
        let b = hs_bounds(0.2, 1.0, f);
        assert!((b.upper - d).abs() < 1e-12);
    }

    #[test]
    fn three_phase_bracket_reduces_to_two_phase() {
        let phases = PhaseConductivities::new(1.0, 400.0, 7.0).unwrap();
        let b = three_phase_bracket(&phases, [0.7, 0.3, 0.0]);
        let hs = hs_bounds(400.0, 1.0, 0.3);
        assert_eq!(b, hs);
        let b = three_phase_bracket(&phases, [0.7, 0.2, 0.1]);
        assert!(b.lower <= hs_bounds(7.0, 1.0, 0.3).lower + 1e-15);
        assert!(b.upper >= hs.upper - 1e-12);
        let only_matrix = three_phase_bracket(&phases, [1.0, 0.0, 0.0]);
        assert_eq!((only_matrix.lower, only_matrix.upper), (1.0, 1.0));
    }

    proptest! {
        #[test]
        fn bounds_are_ordered(ka in 0.01..1000.0f64, kb in 0.01..1000.0f64, f in 0.0..=1.0f64) {
            let w = wiener_bounds(ka, kb, f);
            let hs = hs_bounds(ka, kb, f);
            let tol = 1e-12 * ka.max(kb);
            prop_assert!(w.lower <= hs.lower + tol);
            prop_assert!(hs.lower <= hs.upper + tol);
            prop_assert!(hs.upper <= w.upper + tol);
            prop_assert!(ka.min(kb) - tol <= hs.lower && hs.upper <= ka.max(kb) + tol);
        }
    }
}
