//! Shared inputs for the criterion benches.

use gasket_walk::Complex64;

/// A point on the unit circle away from the real axis.
pub fn sample_z() -> Complex64 {
    Complex64::from_polar(1.0, 0.7)
}
