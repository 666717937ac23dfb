//! Uniform-coin walk: loop generating functions, the reduced Green triple
//! recursion, and the classical walk and recurrence exponents.

use crate::coin::CoinKind;
use crate::error::{Result, WalkError};
use crate::linalg::M4;
use crate::passage::expected_passage_time;
use crate::quadrature::CircleGrid;
use crate::scalar::{Dual, Scalar};
use crate::theta::theta_at_level;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Denominators smaller than this are treated as vanishing.
const DENOM_EPS: f64 = 1e-300;

/// Exact rationals for long orbits at `z = 1`. Both maps leave their
/// conservation law invariant but push deviations away from it by a factor
/// of about 3 per level, so floating-point orbits drift.
pub type Exact = BigRational;

/// Arithmetic the two rational maps need.
pub trait Field: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self> {
    fn int(i: i64) -> Self;
    fn vanishes(&self) -> bool;
}

impl<T: Scalar> Field for T {
    fn int(i: i64) -> Self {
        T::real(i as f64)
    }
    fn vanishes(&self) -> bool {
        self.modulus() < DENOM_EPS
    }
}

impl Field for f64 {
    fn int(i: i64) -> Self {
        i as f64
    }
    fn vanishes(&self) -> bool {
        self.abs() < DENOM_EPS
    }
}

impl Field for Exact {
    fn int(i: i64) -> Self {
        BigRational::from_integer(i.into())
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
}

/// Nearest `f64` of an exact value.
pub fn to_f64(x: &Exact) -> f64 {
    x.to_f64().expect("finite rational")
}

pub fn exact(num: i64, den: i64) -> Exact {
    BigRational::new(num.into(), den.into())
}

/// One step of the `(Φ0, Φ1)` map.
pub fn phi_step<F: Field>(p0: F, p1: F) -> Result<(F, F)> {
    let k = F::int;
    let d1 = k(1) - p0.clone() + p1.clone();
    let d2 = k(1) - p0.clone() - k(2) * p1.clone();
    let den = d1 * d2;
    if den.vanishes() {
        return Err(WalkError::Singular { factor: "phi", cond: f64::INFINITY });
    }
    let sq = p1.clone() * p1.clone();
    let q0 = p0.clone() + k(4) * sq.clone() * (k(1) - p0.clone()) / den.clone();
    let q1 = sq * (k(1) - p0 + k(2) * p1) / den;
    Ok((q0, q1))
}

/// `(Φ0, Φ1)`: returns to the start and exits through one corner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiPair {
    pub phi0: f64,
    pub phi1: f64,
    pub level: u32,
}

impl PhiPair {
    pub fn new(phi0: f64, phi1: f64) -> Self {
        PhiPair { phi0, phi1, level: 0 }
    }

    /// One renormalisation step.
    pub fn iterate(&self) -> Result<PhiPair> {
        let (phi0, phi1) = phi_step(self.phi0, self.phi1)?;
        Ok(PhiPair { phi0, phi1, level: self.level + 1 })
    }
}

/// Levels `1..=n` starting from `start`, in `f64`.
pub fn phi_orbit(start: PhiPair, n: u32) -> Result<Vec<PhiPair>> {
    let mut out = Vec::with_capacity(n as usize);
    let mut p = start;
    for _ in 0..n {
        p = p.iterate()?;
        out.push(p);
    }
    Ok(out)
}

/// Levels `1..=n` computed exactly from `(p0, p1)`.
pub fn phi_orbit_exact(p0: Exact, p1: Exact, n: u32) -> Result<Vec<(Exact, Exact)>> {
    let mut out = Vec::with_capacity(n as usize);
    let mut p = (p0, p1);
    for _ in 0..n {
        p = phi_step(p.0, p.1)?;
        out.push(p.clone());
    }
    Ok(out)
}

/// Reduced uniform-coin Green values: direct-edge exit, far-edge exit and
/// return.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTriple<T> {
    pub u: [T; 3],
    pub level: u32,
}

/// The rational map `T` on `(u1, u2, u3)`.
pub fn triple_step<F: Field>([u1, u2, u3]: [F; 3]) -> Result<[F; 3]> {
    let k = F::int;
    let c = |x: &F| x.clone();
    let den = k(2) * c(&u1) * c(&u1) + k(4) * c(&u1) * c(&u2) + k(2) * c(&u2) * c(&u2) - k(4) * c(&u1) * c(&u3)
        - k(4) * c(&u2) * c(&u3)
        + c(&u1)
        + c(&u2)
        - k(16) * c(&u3) * c(&u3)
        + k(8) * c(&u3)
        - k(1);
    if den.vanishes() {
        return Err(WalkError::Singular { factor: "triple", cond: f64::INFINITY });
    }
    let s = c(&u1) + c(&u2);
    let n1 = -(c(&s) * (k(2) * c(&u2) * c(&u2) + k(2) * c(&u1) * c(&u2) + c(&u1) - k(4) * c(&u1) * c(&u3)));
    let n2 = -(s * (k(2) * c(&u1) * c(&u1) + k(2) * c(&u1) * c(&u2) + c(&u2) - k(4) * c(&u2) * c(&u3)));
    let n3 = k(6) * c(&u1) * c(&u1) * c(&u3) - c(&u1) * c(&u1) + k(12) * c(&u1) * c(&u2) * c(&u3)
        - k(2) * c(&u1) * c(&u2)
        - k(4) * c(&u1) * c(&u3) * c(&u3)
        + c(&u1) * c(&u3)
        + k(6) * c(&u2) * c(&u2) * c(&u3)
        - c(&u2) * c(&u2)
        - k(4) * c(&u2) * c(&u3) * c(&u3)
        + c(&u2) * c(&u3)
        - k(16) * c(&u3) * c(&u3) * c(&u3)
        + k(8) * c(&u3) * c(&u3)
        - c(&u3);
    Ok([n1 / c(&den), n2 / c(&den), n3 / den])
}

impl<T: Field> ClassicalTriple<T> {
    pub fn iterate(&self) -> Result<Self> {
        Ok(ClassicalTriple { u: triple_step(self.u.clone())?, level: self.level + 1 })
    }
}

impl<T: Scalar> ClassicalTriple<T> {
    /// Level 0: `(z/4, 0, 0)`.
    pub fn initial(z: T) -> Self {
        ClassicalTriple { u: [z.scale(0.25), T::zero(), T::zero()], level: 0 }
    }
}

/// Triple at level `n` from `(z/4, 0, 0)`.
pub fn triple_at_level<T: Scalar>(z: T, n: u32) -> Result<ClassicalTriple<T>> {
    let mut t = ClassicalTriple::initial(z);
    for _ in 0..n {
        t = t.iterate()?;
    }
    Ok(t)
}

/// Exact `z = 1` triples for levels `1..=n`.
pub fn triple_orbit_exact(n: u32) -> Result<Vec<[Exact; 3]>> {
    let mut u = [exact(1, 4), exact(0, 1), exact(0, 1)];
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        u = triple_step(u)?;
        out.push(u.clone());
    }
    Ok(out)
}

/// The `z = 1` specialisation: an affine map.
pub fn affine_iterate<F: Field>([u1, u2, u3]: [F; 3]) -> [F; 3] {
    let q = |a: i64| F::int(a) / F::int(10);
    [q(4) * u1.clone() + q(2) * u2.clone(), q(2) * u1 + q(4) * u2, q(1) + q(6) * u3]
}

/// Level-1 closed form `(u1, u2, u3)`.
pub fn level_one_closed_form(z: Complex64) -> Result<[Complex64; 3]> {
    let q = z * z + 2.0 * z - 8.0;
    if q.norm() < DENOM_EPS {
        return Err(WalkError::Singular { factor: "closed form", cond: f64::INFINITY });
    }
    let u1 = -z * z / (2.0 * q);
    let u2 = -z.powu(3) / (4.0 * q);
    Ok([u1, u2, u1])
}

/// Blocks `g(1)(0, a_1)` (columns `0, 1, 4, 5`) and `g(1)(0, 0)`.
pub fn level_one_blocks(z: Complex64) -> Result<(M4<Complex64>, M4<Complex64>)> {
    let [u1, u2, u3] = level_one_closed_form(z)?;
    let o = Complex64::new(0.0, 0.0);
    Ok((M4([[o, o, u1, u2]; 4]), M4([[u3; 4]; 4])))
}

/// `E(τ(n))` from `|0^0>`: `∂_z` of the total exit probability
/// `4(u1 + u2 + u3)` at `z = 1`.
pub fn expected_exit_time(n: u32) -> Result<f64> {
    let t = triple_at_level(Dual::radial_seed(Complex64::new(1.0, 0.0)), n)?;
    Ok(4.0 * t.u.iter().map(|u| u.d.re).sum::<f64>())
}

/// The same from the coin-agnostic corner recursion.
pub fn expected_exit_time_via_theta(n: u32) -> Result<f64> {
    let t = theta_at_level(Dual::radial_seed(Complex64::new(1.0, 0.0)), CoinKind::Classical.coin(), n)?;
    Ok(4.0 * t.triple().iter().map(|u| u.d.re).sum::<f64>())
}

/// Measured time ratios and the exponents they imply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalExponents {
    /// `E(T(n))` for `n = 1..`.
    pub passage_times: Vec<f64>,
    /// `E(τ(n))` for `n = 0..`.
    pub exit_times: Vec<f64>,
    pub passage_ratios: Vec<f64>,
    pub exit_ratios: Vec<f64>,
    /// `ln(E(T(n+1))/E(T(n)))/ln 2` at the deepest pair.
    pub d_w: f64,
    /// `ln(E(τ(n+1))/E(τ(n)))/ln 2` at the deepest pair.
    pub r_w: f64,
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Passage times up to `passage_levels`, exit times up to `exit_levels`.
pub fn classical_exponents(passage_levels: u32, exit_levels: u32) -> Result<ClassicalExponents> {
    if passage_levels < 2 || exit_levels < 1 {
        return Err(WalkError::Config("classical exponents need at least two levels of each time".into()));
    }
    let grid = CircleGrid::trapezoid(1);
    let passage_times = (1..=passage_levels)
        .map(|n| expected_passage_time(n, &grid, CoinKind::Classical, passage_levels).map(|t| t.expected[0]))
        .collect::<Result<Vec<_>>>()?;
    let exit_times = (0..=exit_levels).map(expected_exit_time).collect::<Result<Vec<_>>>()?;
    let passage_ratios = ratios(&passage_times);
    let exit_ratios = ratios(&exit_times);
    let ln2 = std::f64::consts::LN_2;
    let d_w = passage_ratios.last().expect("two levels").ln() / ln2;
    let r_w = exit_ratios.last().expect("two levels").ln() / ln2;
    Ok(ClassicalExponents { passage_times, exit_times, passage_ratios, exit_ratios, d_w, r_w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn phi_orbit_values() {
        let o = phi_orbit(PhiPair::new(0.0, 0.25), 3).unwrap();
        let want = [(0.4, 0.15), (0.64, 0.09), (0.784, 0.054)];
        for (p, (a, b)) in o.iter().zip(want) {
            assert!((p.phi0 - a).abs() < 1e-12 && (p.phi1 - b).abs() < 1e-12);
        }
        assert_eq!(o[2].level, 3);
    }

    #[test]
    fn phi_conservation_and_ratio() {
        let o = phi_orbit_exact(exact(0, 1), exact(1, 4), 30).unwrap();
        let mut prev = exact(1, 4);
        for (p0, p1) in &o {
            assert_eq!(p0 + exact(4, 1) * p1, exact(1, 1));
            assert_eq!(p1 / &prev, exact(3, 5));
            prev = p1.clone();
        }
    }

    #[test]
    fn float_orbit_drifts_off_the_line() {
        // deviations grow about threefold per level
        let o = phi_orbit(PhiPair::new(0.0, 0.25), 24).unwrap();
        let dev = |p: &PhiPair| (p.phi0 + 4.0 * p.phi1 - 1.0).abs();
        assert!(dev(&o[2]) < 1e-15);
        assert!(dev(&o[23]) > 1e-9);
    }

    #[test]
    fn phi_absorbing_line() {
        let p = PhiPair::new(0.3, 0.0).iterate().unwrap();
        assert_eq!((p.phi0, p.phi1), (0.3, 0.0));
    }

    #[test]
    fn phi_singular() {
        assert!(matches!(PhiPair::new(1.0, 0.0).iterate(), Err(WalkError::Singular { .. })));
    }

    #[test]
    fn triple_orbit_values() {
        let mut t = ClassicalTriple::initial(Complex64::new(1.0, 0.0));
        let want = [[0.1, 0.05, 0.1], [0.05, 0.04, 0.16], [0.028, 0.026, 0.196]];
        for w in want {
            t = t.iterate().unwrap();
            assert!(close(t.u.map(|u| u.re), w, 1e-12), "{:?}", t.u);
        }
    }

    #[test]
    fn affine_reduction_twenty_levels() {
        let mut a = [exact(1, 4), exact(0, 1), exact(0, 1)];
        for u in triple_orbit_exact(20).unwrap() {
            a = affine_iterate(a);
            assert_eq!(u, a);
            assert_eq!(&u[0] + &u[1] + &u[2], exact(1, 4));
        }
    }

    #[test]
    fn float_and_exact_triples_agree_early() {
        let ex = triple_orbit_exact(8).unwrap();
        let mut t = ClassicalTriple::initial(Complex64::new(1.0, 0.0));
        for u in ex {
            t = t.iterate().unwrap();
            assert!(close(t.u.map(|x| x.re), [0, 1, 2].map(|k| to_f64(&u[k])), 1e-13));
        }
    }

    #[test]
    fn level_one_closed_form_matches_engines() {
        for z in CircleGrid::trapezoid(16).points().into_iter().chain([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]) {
            let cf = level_one_closed_form(z).unwrap();
            let th = theta_at_level(z, CoinKind::Classical.coin(), 1).unwrap().triple();
            let tr = triple_at_level(z, 1).unwrap().u;
            for k in 0..3 {
                assert!((cf[k] - th[k]).norm() < 1e-12);
                assert!((cf[k] - tr[k]).norm() < 1e-12);
            }
        }
        let (a, o) = level_one_blocks(Complex64::new(1.0, 0.0)).unwrap();
        assert!((a.0[2][2].re - 0.1).abs() < 1e-15 && (a.0[0][3].re - 0.05).abs() < 1e-15);
        assert!((o.0[3][1].re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn exit_times_are_powers_of_three() {
        for n in 0..=4 {
            let e = expected_exit_time(n).unwrap();
            let f = expected_exit_time_via_theta(n).unwrap();
            assert!((e - 3f64.powi(n as i32)).abs() < 1e-8, "n={n} {e}");
            assert!((e - f).abs() < 1e-8);
        }
    }

    #[test]
    fn exponents() {
        let x = classical_exponents(2, 4).unwrap();
        assert!((x.passage_times[0] - 5.0).abs() < 1e-8);
        assert!((x.passage_ratios[0] - 5.0).abs() < 1e-6);
        assert!((x.d_w - 5f64.ln() / 2f64.ln()).abs() < 1e-6);
        assert!((x.r_w - 3f64.ln() / 2f64.ln()).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn triple_map_matches_theta(re in -0.7f64..0.7, im in -0.7f64..0.7, n in 1u32..5) {
            let z = Complex64::new(re, im);
            let a = triple_at_level(z, n).unwrap().u;
            let b = theta_at_level(z, CoinKind::Classical.coin(), n).unwrap().triple();
            for k in 0..3 {
                prop_assert!((a[k] - b[k]).norm() < 1e-10);
            }
        }
    }
}
