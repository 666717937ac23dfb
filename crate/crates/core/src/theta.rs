//! Coin-agnostic recursion on pre-coin corner functions.
//!
//! `Theta(c, c')^k_j` is the generating function of walks that leave corner
//! `c` already moving along the in-cell direction `k`, stay in the cell and
//! first hit a corner at `c'` arriving with direction `j`. Cell symmetry
//! leaves six independent values. One step solves the 12 interior unknowns
//! of the level-1 cell by dense LU, with the coin applied explicitly at the
//! interior vertices. This is used as a second route for the sextet
//! recursion and as the only route for the uniform coin.

use crate::cell::{cell_slot, Cell, CornerKernel, Role};
use crate::coin::Coin;
use crate::error::Result;
use crate::green::GreenSextet;
use crate::linalg::{DenseMatrix, M4};
use crate::scalar::Scalar;
use crate::topology::{CellLabel, Direction};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theta<T> {
    /// `theta_1..theta_6`.
    pub t: [T; 6],
    pub coin: Coin,
    pub level: u32,
}

impl<T: Scalar> Theta<T> {
    /// Level 0: the only in-cell walk is the direct step, `theta_1 = z`.
    pub fn initial(z: T, coin: Coin) -> Self {
        let o = T::zero();
        Theta { t: [z, o, o, o, o, o], coin, level: 0 }
    }

    /// `Theta(from, to)^k_j` for in-cell directions `k` at `from`, `j` at `to`.
    pub fn pre_coin(&self, from: Role, k: Direction, to: Role, j: Direction) -> T {
        let aim = from.toward(k).expect("k points into the cell");
        let came = to.toward(j).expect("j points into the cell");
        let idx = if from == to {
            if aim == came {
                4
            } else {
                5
            }
        } else {
            match (aim == to, came == from) {
                (true, true) => 0,
                (false, false) => 1,
                (false, true) => 2,
                (true, false) => 3,
            }
        };
        self.t[idx]
    }

    /// Corner value after the coin at `from` (any of its four directions).
    fn with_coin(&self, from: Role, i: Direction, to: Role, j: Direction) -> T {
        let mut s = T::zero();
        for k in from.into_dirs() {
            let w = if k == i { self.coin.diag } else { self.coin.off };
            s += self.pre_coin(from, k, to, j).scale(w);
        }
        s
    }

    /// The six sextet entries read from the coined blocks.
    ///
    /// For a Grover-shaped coin these are the `u1..u6` of the corner-block
    /// pattern; for other coins they are just the same six entries.
    pub fn sextet(&self) -> GreenSextet<T> {
        let d = |k: usize| Direction::ALL[k];
        let oa = |i, j| self.with_coin(Role::O, d(i), Role::A, d(j));
        let oo = |i, j| self.with_coin(Role::O, d(i), Role::O, d(j));
        GreenSextet::new([oa(4, 4), oa(4, 5), oa(0, 5), oa(0, 4), oo(0, 0), oo(4, 0)], self.level)
    }

    /// Uniform-coin reduction `(u1, u2, u3)`: corner exit along the direct
    /// edge, along the far edge, and return to the start.
    pub fn triple(&self) -> [T; 3] {
        let d = |k: usize| Direction::ALL[k];
        [
            self.with_coin(Role::O, d(0), Role::A, d(4)),
            self.with_coin(Role::O, d(0), Role::A, d(5)),
            self.with_coin(Role::O, d(0), Role::O, d(0)),
        ]
    }

    /// Next level from the dense interior solve.
    pub fn step(&self) -> Result<Theta<T>> {
        let l = CellLabel::plain;
        let mut m = DenseMatrix::identity(12);
        for x in 1..=3u8 {
            for y in 1..=3u8 {
                let b = Cell::block(self, l(x), l(y));
                for i in 0..4 {
                    for j in 0..4 {
                        m[(4 * (x as usize - 1) + i, 4 * (y as usize - 1) + j)] -= b.0[i][j];
                    }
                }
            }
        }
        // targets: corner 0 arriving along e0/e1, corner 5 arriving along e4/e5
        let targets = [(0u8, 0u8), (0, 1), (5, 4), (5, 5)];
        let mut rhs = DenseMatrix::zeros(12, targets.len());
        for x in 1..=3u8 {
            for (c, &(y, j)) in targets.iter().enumerate() {
                let b = Cell::block(self, l(x), l(y));
                let slot = cell_slot(l(y), Direction::ALL[j as usize]);
                for i in 0..4 {
                    rhs[(4 * (x as usize - 1) + i, c)] = b.0[i][slot];
                }
            }
        }
        let h = m.solve(&rhs, "interior")?;
        // leave 0 along k inside T0, first corner of T0 reached is 0, 1 or 2
        let big = |k: u8, col: usize| -> T {
            let k = Direction::ALL[k as usize];
            let (y, j) = targets[col];
            let mut s = T::zero();
            if y == 0 {
                s += self.pre_coin(Role::O, k, Role::O, Direction::ALL[j as usize]);
            }
            for (label, role) in [(1u8, Role::A), (2u8, Role::B)] {
                for jl in role.into_dirs() {
                    let w = self.pre_coin(Role::O, k, role, jl);
                    let slot = cell_slot(l(label), jl);
                    s += w * h[(4 * (label as usize - 1) + slot, col)];
                }
            }
            s
        };
        // theta_1 = (0,5)^1_4, theta_2 = (0,5)^0_5, theta_3 = (0,5)^0_4,
        // theta_4 = (0,5)^1_5, theta_5 = (0,0)^0_0, theta_6 = (0,0)^0_1
        let t = [big(1, 2), big(0, 3), big(0, 2), big(1, 3), big(0, 0), big(0, 1)];
        Ok(Theta { t, coin: self.coin, level: self.level + 1 })
    }
}

impl<T: Scalar> CornerKernel<T> for Theta<T> {
    fn half_block(&self, from: Role, to: Role) -> M4<T> {
        let fo = from.canonical_out();
        let to_out = to.canonical_out();
        let into = to.into_dirs();
        M4::from_fn(|i, j| {
            if into.contains(&to_out[j]) {
                self.with_coin(from, fo[i], to, to_out[j])
            } else {
                T::zero()
            }
        })
    }
}

/// `n` steps from level 0 at `z`.
pub fn theta_at_level<T: Scalar>(z: T, coin: Coin, n: u32) -> Result<Theta<T>> {
    let mut t = Theta::initial(z, coin);
    for _ in 0..n {
        t = t.step()?;
    }
    Ok(t)
}
