//! Level-to-level recursion on the six reduced Green functions.
//!
//! A level-n gasket is summarised by `u1..u6`; the nine corner-to-corner
//! blocks follow from them by a fixed sign and placement pattern
//! ([`GreenSextet::corner_block`]). One recursion step builds the interior
//! 12×12 system of the level-1 cell from those blocks, inverts it through
//! 4×4 blocks ([`invert_shifted`]), solves the Dirichlet problems for the
//! corner targets and reads off the next sextet from the boundary blocks.

use crate::cell::{cell_out, cell_slot, Cell, CornerKernel, Role};
use crate::error::Result;
use crate::linalg::{DenseMatrix, M4};
use crate::scalar::Scalar;
use crate::topology::{CellLabel, Direction};

/// The six functions `u1..u6` at one point `z` and level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenSextet<T> {
    pub u: [T; 6],
    pub level: u32,
}

const fn d(k: u8) -> Direction {
    Direction::ALL[k as usize]
}

impl<T: Scalar> GreenSextet<T> {
    pub fn new(u: [T; 6], level: u32) -> Self {
        GreenSextet { u, level }
    }

    /// `(rz, 0, 0, rz, 0, 0)`: single steps of a level-0 cell.
    pub fn initial(z: T, r: f64) -> Self {
        let rz = z.scale(r);
        let o = T::zero();
        GreenSextet { u: [rz, o, o, rz, o, o], level: 0 }
    }

    pub fn zero(level: u32) -> Self {
        GreenSextet { u: [T::zero(); 6], level }
    }

    /// `u_k`, one-based.
    pub fn u(&self, k: usize) -> T {
        self.u[k - 1]
    }

    /// Full corner-to-corner block `g(from, to)` in canonical direction order.
    ///
    /// Diagonal blocks include returns through the neighbouring cell on the
    /// other side of the corner.
    pub fn corner_block(&self, from: Role, to: Role) -> M4<T> {
        let [u1, u2, u3, u4, u5, u6] = self.u;
        let o = T::zero();
        let m = |rows: [[T; 4]; 4]| M4(rows);
        match (from, to) {
            (Role::O, Role::A) => m([
                [o, o, u4, u3],
                [o, o, -u4, -u3],
                [o, o, u1, u2],
                [o, o, u1, u2],
            ]),
            (Role::A, Role::O) => m([
                [u2, u1, o, o],
                [u2, u1, o, o],
                [-u3, -u4, o, o],
                [u3, u4, o, o],
            ]),
            (Role::O, Role::B) => m([
                [o, o, -u3, -u4],
                [o, o, u3, u4],
                [o, o, u2, u1],
                [o, o, u2, u1],
            ]),
            (Role::B, Role::O) => m([
                [u1, u2, o, o],
                [u1, u2, o, o],
                [u4, u3, o, o],
                [-u4, -u3, o, o],
            ]),
            (Role::A, Role::B) => m([
                [o, o, u1, u2],
                [o, o, u1, u2],
                [o, o, u4, u3],
                [o, o, -u4, -u3],
            ]),
            (Role::B, Role::A) => m([
                [o, o, u2, u1],
                [o, o, u2, u1],
                [o, o, -u3, -u4],
                [o, o, u3, u4],
            ]),
            _ => m([
                [u5, -u5, u6, u6],
                [-u5, u5, u6, u6],
                [u6, u6, u5, -u5],
                [u6, u6, -u5, u5],
            ]),
        }
    }
}

impl<T: Scalar> CornerKernel<T> for GreenSextet<T> {
    fn half_block(&self, from: Role, to: Role) -> M4<T> {
        let full = self.corner_block(from, to);
        if from != to {
            return full;
        }
        let keep = from.into_dirs().map(|e| from.slot(e));
        M4::from_fn(|i, j| if keep.contains(&j) { full.0[i][j] } else { T::zero() })
    }
}

/// Blocks `A`, `B`, `C` of the reordered interior matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockTriple<T> {
    pub a: M4<T>,
    pub b: M4<T>,
    pub c: M4<T>,
}

/// Interior basis after reordering: `1^(0,1,4,5)`, `2^(2,3,0,1)`, `3^(4,5,2,3)`.
pub const REORDERED_BASIS: [(u8, [u8; 4]); 3] = [(1, [0, 1, 4, 5]), (2, [2, 3, 0, 1]), (3, [4, 5, 2, 3])];

/// Natural (sorted out-set) index of each reordered basis position.
pub fn reorder_permutation() -> [usize; 12] {
    let mut p = [0; 12];
    for (blk, (label, dirs)) in REORDERED_BASIS.iter().enumerate() {
        for (k, &dk) in dirs.iter().enumerate() {
            let x = CellLabel::plain(*label);
            p[4 * blk + k] = 4 * blk + cell_slot(x, d(dk));
        }
    }
    p
}

pub fn assemble_blocks<T: Scalar>(s: &GreenSextet<T>) -> BlockTriple<T> {
    let [u1, u2, u3, u4, u5, u6] = s.u;
    let o = T::zero();
    BlockTriple {
        a: M4([
            [u5, -u5, u6, u6],
            [-u5, u5, u6, u6],
            [u6, u6, u5, -u5],
            [u6, u6, -u5, u5],
        ]),
        b: M4([
            [u1, u2, o, o],
            [u1, u2, o, o],
            [u4, u3, o, o],
            [-u4, -u3, o, o],
        ]),
        c: M4([
            [o, o, -u3, -u4],
            [o, o, u3, u4],
            [o, o, u2, u1],
            [o, o, u2, u1],
        ]),
    }
}

fn circulant<T: Scalar>(x: &M4<T>, y: &M4<T>, z: &M4<T>) -> DenseMatrix<T> {
    let mut m = DenseMatrix::zeros(12, 12);
    let rows = [[x, y, z], [z, x, y], [y, z, x]];
    for (bi, row) in rows.iter().enumerate() {
        for (bj, blk) in row.iter().enumerate() {
            m.set_block(4 * bi, 4 * bj, blk);
        }
    }
    m
}

impl<T: Scalar> BlockTriple<T> {
    /// `(A B C / C A B / B C A)` in the reordered basis.
    pub fn reordered_matrix(&self) -> DenseMatrix<T> {
        circulant(&self.a, &self.b, &self.c)
    }

    /// The same matrix with rows and columns put back in natural order.
    pub fn natural_matrix(&self) -> DenseMatrix<T> {
        let r = self.reordered_matrix();
        let p = reorder_permutation();
        let mut m = DenseMatrix::zeros(12, 12);
        for i in 0..12 {
            for j in 0..12 {
                m[(p[i], p[j])] = r[(i, j)];
            }
        }
        m
    }
}

/// Interior matrix `rho~` in natural order, built vertex by vertex.
pub fn interior_matrix<T: Scalar, K: CornerKernel<T> + ?Sized>(k: &K) -> DenseMatrix<T> {
    let mut m = DenseMatrix::zeros(12, 12);
    for x in 1..=3u8 {
        for y in 1..=3u8 {
            let b = Cell::block(k, CellLabel::plain(x), CellLabel::plain(y));
            m.set_block(4 * (x as usize - 1), 4 * (y as usize - 1), &b);
        }
    }
    m
}

/// Blocks of `-[I - rho~]^{-1} = (X Y Z / Z X Y / Y Z X)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseBlocks<T> {
    pub x: M4<T>,
    pub y: M4<T>,
    pub z: M4<T>,
    pub h: M4<T>,
    pub d: M4<T>,
    pub abar: M4<T>,
}

impl<T: Scalar> InverseBlocks<T> {
    pub fn matrix(&self) -> DenseMatrix<T> {
        circulant(&self.x, &self.y, &self.z)
    }
}

/// Inverse of `rho~ - I` from three 4×4 inversions.
pub fn invert_shifted<T: Scalar>(blk: &BlockTriple<T>) -> Result<InverseBlocks<T>> {
    let i4 = M4::identity();
    let BlockTriple { a, b, c } = *blk;
    let abar = a - i4;
    let ai = abar.inverse("Abar")?;
    let s = abar - b * ai * c;
    let si = s.inverse("Abar - B Abar^-1 C")?;
    let bab = c - b * ai * b;
    let cac = b - c * ai * c;
    let h = abar - c * ai * b - cac * si * bab;
    let d = cac * si * b * ai - c * ai;
    let z = h.inverse("H")? * d;
    let y = -(si * bab * z) - si * b * ai;
    let x = ai * (i4 - b * z - c * y);
    Ok(InverseBlocks { x, y, z, h, d, abar })
}

/// Green blocks `g(x, target)` for the interior vertices `x = 1, 2, 3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirichletSolution<T> {
    pub target: CellLabel,
    /// Rows follow `cell_out(x)`, columns `cell_out(target)`.
    pub blocks: [M4<T>; 3],
}

impl<T: Scalar> DirichletSolution<T> {
    pub fn block(&self, x: CellLabel) -> M4<T> {
        assert!(!x.primed || self.target.primed);
        self.blocks[x.label as usize - 1]
    }

    /// Solution for the mirrored target on the primed copy.
    pub fn mirrored(&self) -> DirichletSolution<T> {
        let target = self.target.mirror();
        let blocks = [1u8, 2, 3].map(|k| {
            let x = CellLabel::plain(k);
            let src = self.blocks[k as usize - 1];
            let (xo, to) = (cell_out(x), cell_out(self.target));
            let mut out = M4::zero();
            for (i, di) in xo.iter().enumerate() {
                for (j, dj) in to.iter().enumerate() {
                    let ii = cell_slot(x.mirror(), di.reflect());
                    let jj = cell_slot(target, dj.reflect());
                    out.0[ii][jj] = src.0[i][j];
                }
            }
            out
        });
        DirichletSolution { target, blocks }
    }
}

/// Solve `[I - rho~] g(., y) = rho(., y)` for a corner target `y`.
///
/// `target` is one of `0`, `4`, `5` or their primes; primed targets are
/// obtained from the unprimed solve by reflection.
pub fn dirichlet_solve<T: Scalar>(
    s: &GreenSextet<T>,
    inv: &InverseBlocks<T>,
    target: CellLabel,
) -> DirichletSolution<T> {
    if target.primed {
        return dirichlet_solve(s, inv, target.mirror()).mirrored();
    }
    let p = reorder_permutation();
    let mut rhs = DenseMatrix::zeros(12, 4);
    for x in 1..=3u8 {
        let b = Cell::block(s, CellLabel::plain(x), target);
        rhs.set_block(4 * (x as usize - 1), 0, &b);
    }
    let mut rhs_r = DenseMatrix::zeros(12, 4);
    for i in 0..12 {
        for j in 0..4 {
            rhs_r[(i, j)] = rhs[(p[i], j)];
        }
    }
    let g_r = inv.matrix().matmul(&rhs_r);
    let mut blocks = [M4::zero(); 3];
    for i in 0..12 {
        for j in 0..4 {
            let n = p[i];
            blocks[n / 4].0[n % 4][j] = -g_r[(i, j)];
        }
    }
    DirichletSolution { target, blocks }
}

/// Boundary blocks of the next level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryBlocks<T> {
    /// `g(0, 5)`: rows `out(0)`, columns `out(5)`.
    pub g05: M4<T>,
    /// `g(0, 0)`: rows and columns `out(0)`.
    pub g00: M4<T>,
}

/// `g(0,5) = rho(0,1) g(1,5) + rho(0,2) g(2,5)`;
/// columns `0, 1` of `g(0,0)` from returns through the unprimed cell and
/// columns `4, 5` from the equivalent returns at corner `5`.
pub fn boundary_green<T: Scalar>(
    s: &GreenSextet<T>,
    to5: &DirichletSolution<T>,
    to0: &DirichletSolution<T>,
) -> BoundaryBlocks<T> {
    let l = CellLabel::plain;
    let rho = |x: u8, y: u8| Cell::block(s, l(x), l(y));
    let g05 = rho(0, 1) * to5.block(l(1)) + rho(0, 2) * to5.block(l(2));
    let low = rho(0, 0) + rho(0, 1) * to0.block(l(1)) + rho(0, 2) * to0.block(l(2));
    let high = rho(5, 5) + rho(5, 1) * to5.block(l(1)) + rho(5, 3) * to5.block(l(3));
    let g00 = M4::from_fn(|i, j| if j < 2 { low.0[i][j] } else { high.0[i][j] });
    BoundaryBlocks { g05, g00 }
}

impl<T: Scalar> BoundaryBlocks<T> {
    /// Read `u1..u6` off the boundary blocks.
    pub fn sextet(&self, level: u32) -> GreenSextet<T> {
        // out(0) = out(5) = (0, 1, 4, 5): slots 0, 1, 2, 3
        let g = &self.g05.0;
        let h = &self.g00.0;
        GreenSextet { u: [g[2][2], g[2][3], g[0][3], g[0][2], h[0][0], h[2][0]], level }
    }
}

/// Full recursion step with the intermediate pieces kept.
#[derive(Clone, Debug)]
pub struct Step<T> {
    pub blocks: BlockTriple<T>,
    pub inverse: InverseBlocks<T>,
    pub to0: DirichletSolution<T>,
    pub to5: DirichletSolution<T>,
    pub boundary: BoundaryBlocks<T>,
    pub next: GreenSextet<T>,
}

pub fn step<T: Scalar>(s: &GreenSextet<T>) -> Result<Step<T>> {
    let blocks = assemble_blocks(s);
    let inverse = invert_shifted(&blocks)?;
    let to0 = dirichlet_solve(s, &inverse, CellLabel::plain(0));
    let to5 = dirichlet_solve(s, &inverse, CellLabel::plain(5));
    let boundary = boundary_green(s, &to5, &to0);
    let next = boundary.sextet(s.level + 1);
    Ok(Step { blocks, inverse, to0, to5, boundary, next })
}

/// `u(n) -> u(n+1)`.
pub fn iterate<T: Scalar>(s: &GreenSextet<T>) -> Result<GreenSextet<T>> {
    step(s).map(|st| st.next)
}

/// `n` iterations from the level-0 sextet at `z`.
pub fn sextet_at_level<T: Scalar>(z: T, r: f64, n: u32) -> Result<GreenSextet<T>> {
    let mut s = GreenSextet::initial(z, r);
    for _ in 0..n {
        s = iterate(&s)?;
    }
    Ok(s)
}

/// Closed forms of `u(1)` for the level-0 start `(rz, 0, 0, rz, 0, 0)`.
pub fn first_iteration_closed_form<T: Scalar>(z: T, r: f64) -> [T; 6] {
    let w = z.scale(r);
    let w2 = w * w;
    let w3 = w2 * w;
    let q = w2 * w2 / (T::one() + w);
    [
        w3 + w2 - q,
        w3.scale(2.0) + q.scale(2.0),
        T::zero(),
        -w3 + w2 - q.scale(3.0),
        w3 + w2 + q.scale(3.0),
        w3 - w2 - q,
    ]
}
