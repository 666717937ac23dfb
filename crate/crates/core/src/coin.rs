//! Coins, the one-step amplitude `phi`, and the coin-then-shift evolution.
//!
//! Coin rows and columns are indexed by the site's out-set sorted by
//! direction index. Only permutation-invariant coins (`diag` on the
//! diagonal, `off` elsewhere) are supported; the Grover and uniform coins
//! are both of that form.

use crate::error::{Result, WalkError};
use crate::topology::{DirectedState, Gasket, Site};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coin {
    pub diag: f64,
    pub off: f64,
}

/// Which walk a computation concerns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoinKind {
    #[default]
    Quantum,
    Classical,
}

impl CoinKind {
    pub fn coin(self) -> Coin {
        match self {
            CoinKind::Quantum => Coin::GROVER,
            CoinKind::Classical => Coin::UNIFORM,
        }
    }
}

impl Coin {
    /// `G_ij = -1/2` on the diagonal, `1/2` elsewhere.
    pub const GROVER: Coin = Coin { diag: -0.5, off: 0.5 };
    /// All entries `1/4`.
    pub const UNIFORM: Coin = Coin { diag: 0.25, off: 0.25 };

    /// Grover-shaped coin with weight `r` (`r = 1/2` is unitary).
    pub fn grover(r: f64) -> Coin {
        Coin { diag: -r, off: r }
    }

    #[inline]
    pub fn entry(&self, k: usize, i: usize) -> f64 {
        if k == i {
            self.diag
        } else {
            self.off
        }
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.entry(i, j);
            }
        }
        m
    }
}

/// One-step amplitude `phi(x^i, y^j)` of the Grover-shaped coin with weight `r`.
///
/// Nonzero only when `y = x + e_k` and `j = k + 3`; the value is `-r` for the
/// backtracking step `k = i` and `r` otherwise.
pub fn phi(from: DirectedState, to: DirectedState, r: f64) -> Complex64 {
    let x = from.site;
    let y = to.site;
    if x.taxicab(y) != 2 {
        return Complex64::new(0.0, 0.0);
    }
    let k = to.dir.opposite();
    if x.step(k) != y {
        return Complex64::new(0.0, 0.0);
    }
    if k == from.dir {
        Complex64::new(-r, 0.0)
    } else {
        Complex64::new(r, 0.0)
    }
}

/// Dense state vector indexed by [`Gasket::state_index`].
pub type StateVector = Vec<Complex64>;

/// Apply the site coin then the shift to every amplitude.
///
/// Fails if a nonzero amplitude would be shifted off the lattice through an
/// extension direction of an outer corner.
pub fn evolution_step(g: &Gasket, psi: &[Complex64], coin: &Coin) -> Result<StateVector> {
    assert_eq!(psi.len(), g.state_count());
    let mut next = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (s, site) in g.sites().iter().enumerate() {
        let amp = &psi[4 * s..4 * s + 4];
        if amp.iter().all(|a| a.norm_sqr() == 0.0) {
            continue;
        }
        let out = g.out(*site).expect("own site");
        for (k, &dir) in out.iter().enumerate() {
            let mut a = Complex64::new(0.0, 0.0);
            for (i, &ai) in amp.iter().enumerate() {
                a += ai * coin.entry(k, i);
            }
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let target = g.shift(DirectedState::new(*site, dir)).map_err(|_| {
                WalkError::OutOfDomain { x: site.x, y: site.y, dir: dir.index() }
            })?;
            next[g.state_index(target).expect("shift lands on a valid state")] += a;
        }
    }
    Ok(next)
}

/// Unit vector at `state`.
pub fn delta(g: &Gasket, state: DirectedState) -> Result<StateVector> {
    let idx = g.state_index(state).ok_or(WalkError::InvalidState {
        x: state.site.x,
        y: state.site.y,
        dir: state.dir.index(),
    })?;
    let mut v = vec![Complex64::new(0.0, 0.0); g.state_count()];
    v[idx] = Complex64::new(1.0, 0.0);
    Ok(v)
}

pub fn norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Is `s` an outer corner of `g`?
pub fn is_outer_corner(g: &Gasket, s: Site) -> bool {
    g.corners().outer().contains(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Direction, Site};
    use proptest::prelude::*;

    fn ds(x: i64, y: i64, k: u8) -> DirectedState {
        DirectedState::new(Site::new(x, y), Direction::new(k).unwrap())
    }

    #[test]
    fn grover_squares_to_identity() {
        let m = Coin::GROVER.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| m[i][k] * m[k][j]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-15);
                assert_eq!(m[i][j], m[j][i]);
            }
        }
    }

    #[test]
    fn uniform_rows_sum_to_one() {
        for row in Coin::UNIFORM.matrix() {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn phi_cases() {
        assert_eq!(phi(ds(0, 0, 0), ds(2, 0, 3), 0.5), Complex64::new(-0.5, 0.0));
        assert_eq!(phi(ds(0, 0, 0), ds(2, 0, 2), 0.5), Complex64::new(0.0, 0.0));
        assert_eq!(phi(ds(0, 0, 0), ds(1, 1, 4), 0.5), Complex64::new(0.5, 0.0));
        // y != x + e_k for the recorded arrival direction
        assert_eq!(phi(ds(0, 0, 0), ds(1, 1, 3), 0.5), Complex64::new(0.0, 0.0));
        assert_eq!(phi(ds(0, 0, 0), ds(4, 0, 3), 0.5), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn step_from_origin() {
        let g = Gasket::build(1).unwrap();
        let psi = delta(&g, ds(0, 0, 0)).unwrap();
        let next = evolution_step(&g, &psi, &Coin::GROVER).unwrap();
        let at = |s: DirectedState| next[g.state_index(s).unwrap()];
        assert_eq!(at(ds(2, 0, 3)), Complex64::new(-0.5, 0.0));
        assert_eq!(at(ds(1, 1, 4)), Complex64::new(0.5, 0.0));
        assert_eq!(at(ds(-1, -1, 1)), Complex64::new(0.5, 0.0));
        assert_eq!(at(ds(1, -1, 2)), Complex64::new(0.5, 0.0));
        assert!((norm(&next) - 1.0).abs() < 1e-15);
        let zero = vec![Complex64::new(0.0, 0.0); g.state_count()];
        assert_eq!(evolution_step(&g, &zero, &Coin::GROVER).unwrap(), zero);
    }

    #[test]
    fn step_matches_phi() {
        let g = Gasket::build(2).unwrap();
        let c = g.corners();
        for idx in 0..g.state_count() {
            let s = g.state(idx);
            if c.outer().contains(&s.site) {
                continue;
            }
            let next = evolution_step(&g, &delta(&g, s).unwrap(), &Coin::GROVER).unwrap();
            for (j, a) in next.iter().enumerate() {
                assert_eq!(*a, phi(s, g.state(j), 0.5), "{s} -> {}", g.state(j));
            }
        }
    }

    #[test]
    fn corner_extension_leaves_domain() {
        let g = Gasket::build(1).unwrap();
        let psi = delta(&g, ds(2, 2, 4)).unwrap();
        assert!(matches!(
            evolution_step(&g, &psi, &Coin::GROVER),
            Err(WalkError::OutOfDomain { .. })
        ));
    }

    proptest! {
        // Level-6 lattice so that nothing started inside F(3) ∪ F(3)' can
        // reach an outer corner within 50 steps.
        #[test]
        fn unitarity(pick in 0usize..1000, t in 1usize..=50, re in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let g = Gasket::build(6).unwrap();
            let inner: Vec<Site> = g.sites().iter().copied().filter(|s| s.taxicab(Site::ORIGIN) <= 16).collect();
            let site = inner[pick % inner.len()];
            let base = 4 * g.site_index(site).unwrap();
            let mut psi = vec![Complex64::new(0.0, 0.0); g.state_count()];
            for k in 0..4 {
                psi[base + k] = Complex64::new(re[k], re[4 + k]);
            }
            let n0 = norm(&psi);
            prop_assume!(n0 > 1e-3);
            for a in psi.iter_mut() { *a /= n0; }
            for _ in 0..t {
                psi = evolution_step(&g, &psi, &Coin::GROVER).unwrap();
            }
            prop_assert!((norm(&psi) - 1.0).abs() < 1e-10);
        }
    }
}
