//! The level-1 cell `F(1) ∪ F(1)'` seen as a coarse graph whose edges are
//! whole level-n sub-gaskets.
//!
//! Every sub-gasket is a copy of the canonical upright cell with corners
//! `O` (bottom left), `A` (top) and `B` (bottom right), possibly mirrored
//! into the primed copy. A [`CornerKernel`] supplies corner-to-corner
//! amplitude blocks of the canonical cell; [`Cell::block`] transports them
//! onto labelled vertices.

use crate::linalg::M4;
use crate::scalar::Scalar;
use crate::topology::{CellLabel, Direction};

/// Corner of an upright cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    O,
    A,
    B,
}

const fn dir(k: u8) -> Direction {
    Direction::ALL[k as usize]
}

impl Role {
    pub const ALL: [Role; 3] = [Role::O, Role::A, Role::B];

    /// Out-set of the corner in the full gasket, sorted.
    pub fn canonical_out(self) -> [Direction; 4] {
        match self {
            Role::O | Role::A => [dir(0), dir(1), dir(4), dir(5)],
            Role::B => [dir(0), dir(1), dir(2), dir(3)],
        }
    }

    /// The two directions pointing into the cell.
    pub fn into_dirs(self) -> [Direction; 2] {
        match self {
            Role::O => [dir(0), dir(1)],
            Role::A => [dir(4), dir(5)],
            Role::B => [dir(2), dir(3)],
        }
    }

    /// Corner reached from `self` along the in-cell direction `d`.
    pub fn toward(self, d: Direction) -> Option<Role> {
        match (self, d.index()) {
            (Role::O, 0) => Some(Role::B),
            (Role::O, 1) => Some(Role::A),
            (Role::A, 4) => Some(Role::O),
            (Role::A, 5) => Some(Role::B),
            (Role::B, 2) => Some(Role::A),
            (Role::B, 3) => Some(Role::O),
            _ => None,
        }
    }

    pub fn slot(self, d: Direction) -> usize {
        self.canonical_out().iter().position(|&e| e == d).expect("direction in canonical out-set")
    }
}

/// Corner-to-corner amplitudes of one canonical cell.
pub trait CornerKernel<T: Scalar> {
    /// Rows follow `from.canonical_out()` (the start state before the coin),
    /// columns follow `to.canonical_out()` (the arrival state). When
    /// `from == to` only returns through this cell are included, so only the
    /// into-direction columns are nonzero.
    fn half_block(&self, from: Role, to: Role) -> M4<T>;
}

/// One sub-gasket of the cell with its corners listed in role order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubCell {
    pub corners: [CellLabel; 3],
    pub mirrored: bool,
}

impl SubCell {
    pub fn role_of(&self, x: CellLabel) -> Option<Role> {
        self.corners.iter().position(|&c| c == x).map(|i| Role::ALL[i])
    }

    pub fn contains(&self, x: CellLabel) -> bool {
        self.corners.contains(&x)
    }
}

const fn lab(k: u8) -> CellLabel {
    CellLabel::plain(k)
}

const fn labp(k: u8) -> CellLabel {
    CellLabel::primed(k)
}

/// `T0 = (0,1,2)`, `T1 = (1,5,3)`, `T2 = (2,3,4)` and their mirror images.
pub const SUB_CELLS: [SubCell; 6] = [
    SubCell { corners: [lab(0), lab(1), lab(2)], mirrored: false },
    SubCell { corners: [lab(1), lab(5), lab(3)], mirrored: false },
    SubCell { corners: [lab(2), lab(3), lab(4)], mirrored: false },
    SubCell { corners: [lab(0), labp(1), labp(2)], mirrored: true },
    SubCell { corners: [labp(1), labp(5), labp(3)], mirrored: true },
    SubCell { corners: [labp(2), labp(3), labp(4)], mirrored: true },
];

/// Sorted out-set of a cell vertex.
pub fn cell_out(x: CellLabel) -> [Direction; 4] {
    const PLAIN: [[u8; 4]; 6] =
        [[0, 1, 4, 5], [0, 1, 4, 5], [0, 1, 2, 3], [2, 3, 4, 5], [0, 1, 2, 3], [0, 1, 4, 5]];
    let base = PLAIN[x.label as usize].map(dir);
    if x.primed {
        let mut m = base.map(Direction::reflect);
        m.sort();
        m
    } else {
        base
    }
}

pub fn cell_slot(x: CellLabel, d: Direction) -> usize {
    cell_out(x).iter().position(|&e| e == d).expect("direction in cell out-set")
}

/// Actual direction at vertex `x` of sub-cell `t` for canonical direction `c`
/// of role `role`.
fn transport(t: &SubCell, role: Role, x: CellLabel, c: Direction) -> Direction {
    let into = role.into_dirs();
    let orient = |d: Direction| if t.mirrored { d.reflect() } else { d };
    if into.contains(&c) {
        return orient(c);
    }
    let actual_into = into.map(orient);
    let canon_rest: Vec<Direction> =
        role.canonical_out().into_iter().filter(|d| !into.contains(d)).collect();
    let actual_rest: Vec<Direction> =
        cell_out(x).into_iter().filter(|d| !actual_into.contains(d)).collect();
    let pos = canon_rest.iter().position(|&d| d == c).expect("outward direction");
    actual_rest[pos]
}

/// Coarse graph over the eleven labelled vertices.
pub struct Cell;

impl Cell {
    /// Amplitude block `rho(x, y)` (rows `cell_out(x)`, columns `cell_out(y)`),
    /// summed over every sub-cell that contains both vertices.
    pub fn block<T: Scalar, K: CornerKernel<T> + ?Sized>(k: &K, x: CellLabel, y: CellLabel) -> M4<T> {
        let mut out = M4::zero();
        for t in SUB_CELLS.iter().filter(|t| t.contains(x) && t.contains(y)) {
            let rx = t.role_of(x).expect("x in t");
            let ry = t.role_of(y).expect("y in t");
            let half = k.half_block(rx, ry);
            let cx = rx.canonical_out();
            let cy = ry.canonical_out();
            for (a, &da) in cx.iter().enumerate() {
                let i = cell_slot(x, transport(t, rx, x, da));
                for (b, &db) in cy.iter().enumerate() {
                    let j = cell_slot(y, transport(t, ry, y, db));
                    out.0[i][j] += half.0[a][b];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{label_of, Gasket};

    #[test]
    fn out_sets_match_lattice() {
        let g = Gasket::build(1).unwrap();
        for s in g.sites() {
            let l = label_of(*s).unwrap();
            assert_eq!(&cell_out(l), g.out(*s).unwrap(), "{l}");
        }
    }

    #[test]
    fn sub_cell_directions_match_geometry() {
        // every in-cell direction must point at the corner playing the role it names
        for t in &SUB_CELLS {
            for (i, &x) in t.corners.iter().enumerate() {
                let role = Role::ALL[i];
                for c in role.into_dirs() {
                    let d = transport(t, role, x, c);
                    let target = role.toward(c).unwrap();
                    let y = t.corners[Role::ALL.iter().position(|&r| r == target).unwrap()];
                    let step = (y.site().x - x.site().x, y.site().y - x.site().y);
                    assert_eq!(Direction::from_vector(step), Some(d), "{x} in {:?}", t.corners);
                }
            }
        }
    }

    #[test]
    fn toward_is_consistent() {
        for r in Role::ALL {
            for d in r.into_dirs() {
                let s = r.toward(d).unwrap();
                assert_ne!(r, s);
                // the reverse direction from s leads back to r
                assert_eq!(s.toward(d.opposite()), Some(r));
            }
        }
    }
}
