//! Uniform angular-frequency grids with trapezoidal quadrature weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{rc, Real};

/// Uniform discretization of one angular-frequency axis.
///
/// Frequencies are dimensionless (units of the pump bandwidth σ_p) unless the
/// caller decides otherwise; the grid itself is unit-agnostic. Two grids are
/// compatible for inner products iff they are identical in all fields.
///
/// Integrals are approximated by the trapezoidal rule: interior points carry
/// weight `d_omega`, the two endpoints carry `d_omega / 2` — second-order
/// accurate at no extra complexity, and exact enough (≪ 1e-10 relative) for
/// the spectrally decaying fields this crate works with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid<T> {
    omega_min: T,
    omega_max: T,
    n_points: usize,
}

impl<T: Real> FrequencyGrid<T> {
    /// Build a grid over `[omega_min, omega_max]` with `n_points` samples.
    ///
    /// Requires `n_points ≥ 2` and a strictly positive derived spacing.
    pub fn new(omega_min: T, omega_max: T, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidGrid {
                reason: format!("n_points must be at least 2, got {n_points}"),
            });
        }
        if !(omega_min.is_finite() && omega_max.is_finite()) {
            return Err(Error::InvalidGrid {
                reason: "grid bounds must be finite".into(),
            });
        }
        if omega_max <= omega_min {
            return Err(Error::InvalidGrid {
                reason: format!("omega_max ({omega_max}) must exceed omega_min ({omega_min})"),
            });
        }
        Ok(Self { omega_min, omega_max, n_points })
    }

    /// Symmetric grid over `[-half_span, +half_span]`.
    pub fn symmetric(half_span: T, n_points: usize) -> Result<Self> {
        Self::new(-half_span, half_span, n_points)
    }

    /// Lower bound of the axis.
    pub fn omega_min(&self) -> T {
        self.omega_min
    }

    /// Upper bound of the axis.
    pub fn omega_max(&self) -> T {
        self.omega_max
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.n_points
    }

    /// A grid is never empty (`n_points ≥ 2` by construction).
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Derived spacing `(omega_max − omega_min) / (n_points − 1)`.
    pub fn d_omega(&self) -> T {
        (self.omega_max - self.omega_min) / rc::<T>((self.n_points - 1) as f64)
    }

    /// Frequency of sample `j`.
    pub fn omega(&self, j: usize) -> T {
        debug_assert!(j < self.n_points);
        self.omega_min + self.d_omega() * rc::<T>(j as f64)
    }

    /// Trapezoidal weight of sample `j` (1 interior, ½ at the endpoints), not
    /// including the `d_omega` factor.
    pub fn weight(&self, j: usize) -> T {
        debug_assert!(j < self.n_points);
        if j == 0 || j == self.n_points - 1 {
            rc::<T>(0.5)
        } else {
            T::one()
        }
    }

    /// Combined quadrature measure of sample `j`: `weight(j) · d_omega`.
    pub fn measure(&self, j: usize) -> T {
        self.weight(j) * self.d_omega()
    }

    /// Iterator over all sample frequencies.
    pub fn omegas(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n_points).map(move |j| self.omega(j))
    }

    /// Error unless `self` and `other` are identical in all fields.
    pub fn check_compatible(&self, other: &Self, context: &'static str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch { context })
        }
    }

    /// Indices of the samples lying inside `[lo, hi]` (inclusive).
    ///
    /// Errors if the band selects no samples.
    pub fn band_indices(&self, lo: T, hi: T, context: &'static str) -> Result<(usize, usize)> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::EmptyBand { context });
        }
        let mut first = None;
        let mut last = None;
        for j in 0..self.n_points {
            let w = self.omega(j);
            if w >= lo && w <= hi {
                if first.is_none() {
                    first = Some(j);
                }
                last = Some(j);
            }
        }
        match (first, last) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::EmptyBand { context }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_samples() {
        let g = FrequencyGrid::<f64>::new(-2.0, 2.0, 5).unwrap();
        assert_eq!(g.d_omega(), 1.0);
        assert_eq!(g.omega(0), -2.0);
        assert_eq!(g.omega(4), 2.0);
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn trapezoid_weights() {
        let g = FrequencyGrid::<f64>::new(0.0, 3.0, 4).unwrap();
        assert_eq!(g.weight(0), 0.5);
        assert_eq!(g.weight(1), 1.0);
        assert_eq!(g.weight(2), 1.0);
        assert_eq!(g.weight(3), 0.5);
        // Total measure of a constant-1 integrand equals the span.
        let total: f64 = (0..4).map(|j| g.measure(j)).sum();
        assert!((total - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(FrequencyGrid::<f64>::new(0.0, 1.0, 1).is_err());
        assert!(FrequencyGrid::<f64>::new(1.0, 1.0, 8).is_err());
        assert!(FrequencyGrid::<f64>::new(2.0, 1.0, 8).is_err());
        assert!(FrequencyGrid::<f64>::new(f64::NAN, 1.0, 8).is_err());
    }

    #[test]
    fn compatibility_is_exact_equality() {
        let a = FrequencyGrid::<f64>::new(-1.0, 1.0, 33).unwrap();
        let b = FrequencyGrid::<f64>::new(-1.0, 1.0, 33).unwrap();
        let c = FrequencyGrid::<f64>::new(-1.0, 1.0, 32).unwrap();
        assert!(a.check_compatible(&b, "test").is_ok());
        assert!(a.check_compatible(&c, "test").is_err());
    }

    #[test]
    fn band_selection() {
        let g = FrequencyGrid::<f64>::new(0.0, 10.0, 11).unwrap();
        assert_eq!(g.band_indices(2.5, 6.5, "test").unwrap(), (3, 6));
        assert_eq!(g.band_indices(-5.0, 50.0, "test").unwrap(), (0, 10));
        assert!(g.band_indices(10.5, 11.0, "test").is_err());
        assert!(g.band_indices(3.0, 2.0, "test").is_err());
    }
}
