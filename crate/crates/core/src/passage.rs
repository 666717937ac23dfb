//! First passage from the origin to the four outer corners of the doubled
//! cell, with the origin left open.
//!
//! At level `n` the cell `F(1) ∪ F(1)'` is tiled by level-`(n-1)` copies.
//! The unknowns are the blocks `g1(x, y)` for the seven non-target
//! vertices `x` and the four corner targets `y`, and solve
//! `g1(x, y) = rho(x, y) + Σ_w rho(x, w) g1(w, y)`.

use crate::cell::{Cell, CornerKernel};
use crate::coin::CoinKind;
use crate::error::{Result, WalkError};
use crate::linalg::{DenseMatrix, M4};
use crate::quadrature::{evaluate_nodes, integrate_on, CircleGrid};
use crate::scalar::{Dual, Scalar};
use crate::theta::theta_at_level;
use crate::topology::CellLabel;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default level cap for passage observables.
pub const PASSAGE_LEVEL_CAP: u32 = 3;

const fn lab(k: u8) -> CellLabel {
    CellLabel::plain(k)
}

const fn labp(k: u8) -> CellLabel {
    CellLabel::primed(k)
}

/// The seven open vertices, origin first.
pub const OPEN: [CellLabel; 7] = [lab(0), lab(1), lab(2), lab(3), labp(1), labp(2), labp(3)];

/// Corner targets in output order `a, b, a', b'`.
pub const CORNERS: [CellLabel; 4] = [lab(5), lab(4), labp(5), labp(4)];

/// `[I - rho] G = rho(., corners)` over the 28 open directed states.
#[derive(Clone, Debug)]
pub struct PassageSystem<T> {
    pub level: u32,
    pub matrix: DenseMatrix<T>,
    /// One 4-column block per corner, in [`CORNERS`] order.
    pub rhs: DenseMatrix<T>,
}

impl<T: Scalar> PassageSystem<T> {
    /// Assemble from the level-`(level-1)` corner kernel.
    pub fn build<K: CornerKernel<T> + ?Sized>(kernel: &K, level: u32) -> Self {
        let mut matrix = DenseMatrix::identity(28);
        let mut rhs = DenseMatrix::zeros(28, 16);
        for (a, &x) in OPEN.iter().enumerate() {
            for (b, &w) in OPEN.iter().enumerate() {
                let blk = Cell::block(kernel, x, w);
                matrix.add_block(4 * a, 4 * b, &(-blk));
            }
            for (c, &y) in CORNERS.iter().enumerate() {
                rhs.set_block(4 * a, 4 * c, &Cell::block(kernel, x, y));
            }
        }
        PassageSystem { level, matrix, rhs }
    }

    pub fn solve(&self) -> Result<DenseMatrix<T>> {
        self.matrix.solve(&self.rhs, "passage")
    }

    /// Largest entry of `matrix·g - rhs`.
    pub fn residual(&self, g: &DenseMatrix<T>) -> f64 {
        self.matrix.matmul(g).max_abs_diff(&self.rhs)
    }
}

/// `g1(0, y)` for the four corners; rows `out(0)`, columns `out(y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassageGreen<T> {
    pub level: u32,
    pub blocks: [M4<T>; 4],
}

impl<T: Scalar> PassageGreen<T> {
    pub fn from_kernel<K: CornerKernel<T> + ?Sized>(kernel: &K, level: u32) -> Result<Self> {
        let g = PassageSystem::build(kernel, level).solve()?;
        Ok(PassageGreen { level, blocks: [0, 1, 2, 3].map(|c| g.block(0, 4 * c)) })
    }

    pub fn corner(&self, y: CellLabel) -> M4<T> {
        self.blocks[CORNERS.iter().position(|&c| c == y).expect("corner target")]
    }

    /// All 64 entries, corner-major.
    pub fn entries(&self) -> impl Iterator<Item = T> + '_ {
        self.blocks.iter().flat_map(|b| b.0.iter().flatten().copied())
    }
}

fn check_level(n: u32, cap: u32) -> Result<()> {
    if n == 0 {
        return Err(WalkError::Config("passage needs level n >= 1".into()));
    }
    if n > cap {
        return Err(WalkError::LevelCap { level: n, cap });
    }
    Ok(())
}

/// Points per circle and the two radii used at removable singularities.
const LIMIT_POINTS: usize = 32;
const LIMIT_RADII: [f64; 2] = [2e-2, 1e-2];
const LIMIT_AGREEMENT: f64 = 1e-10;

fn circle_mean<T: Scalar>(z: T, radius: f64, eval: &impl Fn(T) -> Result<PassageGreen<T>>) -> Result<PassageGreen<T>> {
    let mut acc: Option<PassageGreen<T>> = None;
    for k in 0..LIMIT_POINTS {
        let w = Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / LIMIT_POINTS as f64);
        let g = eval(z + T::constant(w))?;
        acc = Some(match acc {
            None => g,
            Some(mut a) => {
                a.blocks.iter_mut().zip(&g.blocks).for_each(|(x, y)| *x = *x + *y);
                a
            }
        });
    }
    let mut a = acc.expect("at least one point");
    let inv = 1.0 / LIMIT_POINTS as f64;
    for b in a.blocks.iter_mut() {
        *b = M4::from_fn(|i, j| b.0[i][j].scale(inv));
    }
    Ok(a)
}

/// Direct solve, or at a removable singularity the mean over a small
/// circle around `z` (exact for analytic entries). Two radii must agree.
fn solve_or_limit<T: Scalar>(z: T, eval: impl Fn(T) -> Result<PassageGreen<T>>) -> Result<PassageGreen<T>> {
    match eval(z) {
        Err(WalkError::Singular { factor, cond }) => {
            let a = circle_mean(z, LIMIT_RADII[0], &eval)?;
            let b = circle_mean(z, LIMIT_RADII[1], &eval)?;
            let gap = a.entries().zip(b.entries()).fold(0.0f64, |m, (x, y)| m.max((x - y).modulus()));
            if gap > LIMIT_AGREEMENT {
                return Err(WalkError::Singular { factor, cond });
            }
            Ok(b)
        }
        r => r,
    }
}

/// `g1(n)(z)(0, ·)` built on the level-`(n-1)` Green sextet (quantum) or
/// uniform-coin corner functions (classical).
pub fn passage_green<T: Scalar>(z: T, n: u32, coin: CoinKind) -> Result<PassageGreen<T>> {
    check_level(n, u32::MAX)?;
    solve_or_limit(z, |z| match coin {
        CoinKind::Quantum => {
            let s = crate::green::sextet_at_level(z, 0.5, n - 1)?;
            PassageGreen::from_kernel(&s, n)
        }
        CoinKind::Classical => {
            let t = theta_at_level(z, coin.coin(), n - 1)?;
            PassageGreen::from_kernel(&t, n)
        }
    })
}

/// Same quantity with the quantum kernel taken from the coin-agnostic
/// corner recursion instead of the sextet recursion.
pub fn passage_green_via_theta<T: Scalar>(z: T, n: u32) -> Result<PassageGreen<T>> {
    check_level(n, u32::MAX)?;
    solve_or_limit(z, |z| {
        let t = theta_at_level(z, CoinKind::Quantum.coin(), n - 1)?;
        PassageGreen::from_kernel(&t, n)
    })
}

/// The printed level-1 quantum block `g1(0, a_1)`.
pub fn level_one_closed_form(z: Complex64) -> M4<Complex64> {
    let d = 2.0 * (z.powu(3) - z * z - 4.0);
    let p = z * z * (z * z + z - 2.0) / d;
    let q = z * z * (z * z - z + 2.0) / d;
    let r = z.powu(5) / d;
    let s = -z * z * (z + 2.0) / d;
    let t = -z.powu(3) * (z + 2.0) / d;
    let o = Complex64::new(0.0, 0.0);
    M4([[o, o, p, r], [o, o, q, r], [o, o, s, t], [o, o, s, t]])
}

pub type Block = [[f64; 4]; 4];

/// `P1(n)(0, y)` per corner plus per-start totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassageProbability {
    pub level: u32,
    pub coin: CoinKind,
    /// In [`CORNERS`] order.
    pub blocks: [Block; 4],
    /// `P1(T < ∞)` for each start direction (rows of `out(0)`).
    pub totals: [f64; 4],
    pub excluded_nodes: usize,
}

fn to_blocks(v: &[f64]) -> [Block; 4] {
    let mut b = [[[0.0; 4]; 4]; 4];
    for (k, x) in v.iter().enumerate() {
        b[k / 16][(k / 4) % 4][k % 4] = *x;
    }
    b
}

fn row_totals(b: &[Block; 4]) -> [f64; 4] {
    [0, 1, 2, 3].map(|i| b.iter().map(|blk| blk[i].iter().sum::<f64>()).sum())
}

/// Passage probabilities: Parseval integrals of `|g1|²` (quantum) or
/// `g1` at `z = 1` (classical).
pub fn passage_probability(n: u32, grid: &CircleGrid, coin: CoinKind, cap: u32) -> Result<PassageProbability> {
    check_level(n, cap)?;
    let (values, excluded_nodes) = match coin {
        CoinKind::Quantum => {
            let table = evaluate_nodes(grid, |z| passage_green(z, n, coin))?;
            let r = integrate_on(grid, &table.map(|g| g.entries().map(|x| x.norm_sqr()).collect()))?;
            (r.values, r.excluded.len())
        }
        CoinKind::Classical => {
            let g = passage_green(Complex64::new(1.0, 0.0), n, coin)?;
            (g.entries().map(|x| x.re).collect(), 0)
        }
    };
    let blocks = to_blocks(&values);
    Ok(PassageProbability { level: n, coin, totals: row_totals(&blocks), blocks, excluded_nodes })
}

/// `E(T)` per start direction with its per-channel contributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassageTime {
    pub level: u32,
    pub coin: CoinKind,
    /// Contribution of each `(corner, i, j)` channel, [`CORNERS`] order.
    pub contributions: [Block; 4],
    pub expected: [f64; 4],
    pub probability: [f64; 4],
    /// `E(T | T < ∞)` per start direction.
    pub conditional: [f64; 4],
    /// Largest imaginary part left in the pairing integrals.
    pub imag_residue: f64,
    pub excluded_nodes: usize,
}

/// Expected passage time from the jet-valued Green function.
///
/// Quantum: `(1/2π)∫ (z ∂_z g1) conj(g1) dθ` per channel. Classical:
/// `∂_z g1` at `z = 1`.
pub fn expected_passage_time(n: u32, grid: &CircleGrid, coin: CoinKind, cap: u32) -> Result<PassageTime> {
    check_level(n, cap)?;
    let (contrib, prob, imag, excluded_nodes) = match coin {
        CoinKind::Quantum => {
            let table = evaluate_nodes(grid, |z| passage_green(Dual::radial_seed(z), n, coin))?;
            let r = integrate_on(
                grid,
                &table.map(|g| {
                    let mut row = Vec::with_capacity(192);
                    for x in g.entries() {
                        let p = x.d * x.v.conj();
                        row.extend([p.re, p.im, x.v.norm_sqr()]);
                    }
                    row
                }),
            )?;
            let pick = |k: usize| r.values.iter().skip(k).step_by(3).copied().collect::<Vec<_>>();
            let imag = pick(1).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            (pick(0), pick(2), imag, r.excluded.len())
        }
        CoinKind::Classical => {
            let g = passage_green(Dual::radial_seed(Complex64::new(1.0, 0.0)), n, coin)?;
            let imag = g.entries().fold(0.0f64, |m, x| m.max(x.d.im.abs()));
            (g.entries().map(|x| x.d.re).collect(), g.entries().map(|x| x.v.re).collect(), imag, 0)
        }
    };
    let contributions = to_blocks(&contrib);
    let expected = row_totals(&contributions);
    let probability = row_totals(&to_blocks(&prob));
    let conditional = [0, 1, 2, 3].map(|i| expected[i] / probability[i]);
    Ok(PassageTime { level: n, coin, contributions, expected, probability, conditional, imag_residue: imag, excluded_nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn level_one_matches_closed_form() {
        let g = CircleGrid::trapezoid(64);
        for z in g.points() {
            let got = passage_green(z, 1, CoinKind::Quantum).unwrap().corner(lab(5));
            let want = level_one_closed_form(z);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((got.0[i][j] - want.0[i][j]).norm() < 1e-12, "z={z} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn closed_form_points() {
        let z = Complex64::new(0.3, -0.4);
        let g = passage_green(z, 1, CoinKind::Quantum).unwrap().corner(lab(5));
        let want = z * z * (z * z - z + 2.0) / (2.0 * (z.powu(3) - z * z - 4.0));
        assert!((g.0[1][2] - want).norm() < 1e-14);
        assert_eq!(passage_green(c(0.0), 1, CoinKind::Quantum).unwrap().corner(lab(5)).0[2][2], c(0.0));
        let at1 = passage_green(c(1.0), 1, CoinKind::Quantum).unwrap().corner(lab(5));
        assert!((at1.0[0][3] - c(-0.125)).norm() < 1e-14);
    }

    #[test]
    fn direct_solve_is_singular_at_one() {
        let s = crate::green::GreenSextet::initial(c(1.0), 0.5);
        assert!(matches!(PassageGreen::from_kernel(&s, 1), Err(WalkError::Singular { .. })));
    }

    #[test]
    fn residual_small() {
        let s = crate::green::GreenSextet::initial(Complex64::from_polar(1.0, 0.7), 0.5);
        let sys = PassageSystem::build(&s, 1);
        let g = sys.solve().unwrap();
        assert!(sys.residual(&g) < 1e-10);
    }

    #[test]
    fn sextet_and_theta_kernels_agree() {
        for n in 1..=3 {
            for t in [0.4, 1.3, 2.9] {
                let z = Complex64::from_polar(1.0, t);
                let a = passage_green(z, n, CoinKind::Quantum).unwrap();
                let b = passage_green_via_theta(z, n).unwrap();
                for (x, y) in a.entries().zip(b.entries()) {
                    assert!((x - y).norm() < 1e-10, "n={n}");
                }
            }
        }
    }

    #[test]
    fn level_zero_and_cap() {
        let g = CircleGrid::trapezoid(8);
        assert!(matches!(passage_probability(0, &g, CoinKind::Quantum, 3), Err(WalkError::Config(_))));
        assert_eq!(passage_probability(4, &g, CoinKind::Quantum, 3).unwrap_err(), WalkError::LevelCap { level: 4, cap: 3 });
    }

    #[test]
    fn quantum_level_one_probabilities() {
        let p = passage_probability(1, &CircleGrid::trapezoid(1024), CoinKind::Quantum, 3).unwrap();
        let want = [
            [0.0, 0.0, 17.0 / 132.0, 19.0 / 1056.0],
            [0.0, 0.0, 25.0 / 264.0, 19.0 / 1056.0],
            [0.0, 0.0, 91.0 / 1056.0, 91.0 / 1056.0],
            [0.0, 0.0, 91.0 / 1056.0, 91.0 / 1056.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((p.blocks[0][i][j] - want[i][j]).abs() < 1e-12, "({i},{j})");
            }
        }
        assert!((p.totals[0] - 319.0 / 528.0).abs() < 1e-12);
    }

    #[test]
    fn quantum_level_one_time() {
        let t = expected_passage_time(1, &CircleGrid::trapezoid(1024), CoinKind::Quantum, 3).unwrap();
        assert!((t.expected[0] - 2173.0 / 1152.0).abs() < 1e-10);
        assert!((t.conditional[0] - 2173.0 / 696.0).abs() < 1e-10);
        assert!(t.imag_residue < 1e-9);
    }

    #[test]
    fn classical_level_one() {
        let g = CircleGrid::trapezoid(8);
        let p = passage_probability(1, &g, CoinKind::Classical, 3).unwrap();
        for tot in p.totals {
            assert!((tot - 1.0).abs() < 1e-12);
        }
        let t = expected_passage_time(1, &g, CoinKind::Classical, 3).unwrap();
        assert!((t.expected[0] - 5.0).abs() < 1e-10);
    }
}
