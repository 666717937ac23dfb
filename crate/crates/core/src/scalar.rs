//! Field scalars used by the recursion: plain complex numbers and first-order
//! jets carrying a radial derivative.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Arithmetic needed by every solver in the crate.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Lift a constant (zero derivative).
    fn constant(c: Complex64) -> Self;
    /// The underlying complex value.
    fn value(&self) -> Complex64;

    fn real(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }

    /// Modulus of the value part, used for pivoting and conditioning.
    fn modulus(&self) -> f64 {
        self.value().norm()
    }

    fn scale(self, s: f64) -> Self {
        self * Self::real(s)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn constant(c: Complex64) -> Self {
        c
    }
    fn value(&self) -> Complex64 {
        *self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// First-order jet `v + d·ε`, ε² = 0.
///
/// Seeded as `Dual::new(z, z)` the derivative part of any rational
/// expression in `z` equals `z·f'(z)`, the derivative with respect to `s`
/// of `f(e^s z)` at `s = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual {
    pub v: Complex64,
    pub d: Complex64,
}

impl Dual {
    pub const fn new(v: Complex64, d: Complex64) -> Self {
        Dual { v, d }
    }

    /// Seed for the radial derivative at `z`.
    pub fn radial_seed(z: Complex64) -> Self {
        Dual { v: z, d: z }
    }

    pub fn conj(self) -> Self {
        Dual { v: self.v.conj(), d: self.d.conj() }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = o.v.inv();
        let q = self.v * inv;
        Dual { v: q, d: (self.d - q * o.d) * inv }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, o: Dual) {
        *self = *self - o;
    }
}

impl MulAssign for Dual {
    fn mul_assign(&mut self, o: Dual) {
        *self = *self * o;
    }
}

impl Scalar for Dual {
    fn zero() -> Self {
        Dual::default()
    }
    fn one() -> Self {
        Dual::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }
    fn constant(c: Complex64) -> Self {
        Dual::new(c, Complex64::new(0.0, 0.0))
    }
    fn value(&self) -> Complex64 {
        self.v
    }
    fn scale(self, s: f64) -> Self {
        Dual { v: self.v * s, d: self.d * s }
    }
}
