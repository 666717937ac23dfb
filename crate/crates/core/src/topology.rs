//! Doubled gasket `F(n) ∪ F(n)'` on the integer lattice spanned by
//! `e0 = (2,0)` and `e1 = (1,1)`.
//!
//! The primed copy is the image of `F(n)` under the reflection that sends
//! `e_k` to `e_{5-k}`; the two copies share only the origin.

use crate::error::{Result, WalkError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Largest level [`Gasket::build`] accepts. Memory grows like `3^n`.
pub const LEVEL_CAP: u32 = 12;

const VECTORS: [(i64, i64); 6] = [(2, 0), (1, 1), (-1, 1), (-2, 0), (-1, -1), (1, -1)];

/// One of the six lattice directions `e0..e5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Direction(u8);

impl Direction {
    pub const ALL: [Direction; 6] =
        [Direction(0), Direction(1), Direction(2), Direction(3), Direction(4), Direction(5)];

    pub fn new(k: u8) -> Option<Direction> {
        (k < 6).then_some(Direction(k))
    }

    pub const fn index(self) -> u8 {
        self.0
    }

    pub fn vector(self) -> (i64, i64) {
        VECTORS[self.0 as usize]
    }

    pub fn opposite(self) -> Direction {
        Direction((self.0 + 3) % 6)
    }

    /// Image under the copy-swapping reflection.
    pub fn reflect(self) -> Direction {
        Direction(5 - self.0)
    }

    /// Direction whose vector is `v`, if any.
    pub fn from_vector(v: (i64, i64)) -> Option<Direction> {
        VECTORS.iter().position(|&w| w == v).map(|k| Direction(k as u8))
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Site {
        Site { x, y }
    }

    pub fn step(self, d: Direction) -> Site {
        let (dx, dy) = d.vector();
        Site { x: self.x + dx, y: self.y + dy }
    }

    /// Reflection `e_k -> e_{5-k}` extended linearly.
    pub fn reflect(self) -> Site {
        let beta = self.y;
        let alpha = (self.x - self.y) / 2;
        Site { x: alpha - beta, y: -alpha - beta }
    }

    pub fn scaled(self, s: i64) -> Site {
        Site { x: self.x * s, y: self.y * s }
    }

    /// Taxicab distance.
    pub fn taxicab(self, o: Site) -> i64 {
        (self.x - o.x).abs() + (self.y - o.y).abs()
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Basis label `|x^i>`: walker at `site`, coin pointing along `dir`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedState {
    pub site: Site,
    pub dir: Direction,
}

impl DirectedState {
    pub fn new(site: Site, dir: Direction) -> Self {
        DirectedState { site, dir }
    }
}

impl fmt::Display for DirectedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.site, self.dir.index())
    }
}

/// The four outer corners and the origin of a level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Corners {
    pub origin: Site,
    pub a: Site,
    pub b: Site,
    pub a_prime: Site,
    pub b_prime: Site,
}

impl Corners {
    pub fn of_level(n: u32) -> Corners {
        let s = 1i64 << n;
        let a = Site::new(s, s);
        let b = Site::new(2 * s, 0);
        Corners { origin: Site::ORIGIN, a, b, a_prime: a.reflect(), b_prime: b.reflect() }
    }

    pub fn outer(&self) -> [Site; 4] {
        [self.a, self.b, self.a_prime, self.b_prime]
    }

    pub fn all(&self) -> [Site; 5] {
        [self.origin, self.a, self.b, self.a_prime, self.b_prime]
    }
}

/// Immutable lattice graph of `F(n) ∪ F(n)'`.
#[derive(Clone, Debug)]
pub struct Gasket {
    level: u32,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    out: Vec<[Direction; 4]>,
    neighbours: Vec<Vec<Direction>>,
}

/// Sites of the upright gasket of level `n` with bottom-left corner `p`,
/// emitted as elementary triangles `(p, p+e1, p+e0)`.
fn elementary_triangles(p: Site, n: u32, out: &mut Vec<[Site; 3]>) {
    if n == 0 {
        out.push([p, p.step(Direction(1)), p.step(Direction(0))]);
        return;
    }
    let h = 1i64 << (n - 1);
    elementary_triangles(p, n - 1, out);
    elementary_triangles(Site::new(p.x + h, p.y + h), n - 1, out);
    elementary_triangles(Site::new(p.x + 2 * h, p.y), n - 1, out);
}

impl Gasket {
    pub fn build(n: u32) -> Result<Gasket> {
        if n > LEVEL_CAP {
            return Err(WalkError::LevelCap { level: n, cap: LEVEL_CAP });
        }
        let mut tris = Vec::with_capacity(3usize.pow(n));
        elementary_triangles(Site::ORIGIN, n, &mut tris);
        let mut sites = Vec::new();
        let mut index = HashMap::new();
        let mut neighbours: Vec<Vec<Direction>> = Vec::new();
        let mut intern = |s: Site, sites: &mut Vec<Site>, nb: &mut Vec<Vec<Direction>>| -> usize {
            *index.entry(s).or_insert_with(|| {
                sites.push(s);
                nb.push(Vec::new());
                sites.len() - 1
            })
        };
        for reflected in [false, true] {
            for t in &tris {
                let t = if reflected { t.map(Site::reflect) } else { *t };
                let ids = t.map(|s| intern(s, &mut sites, &mut neighbours));
                for (u, &iu) in ids.iter().enumerate() {
                    for v in (0..3).filter(|&v| v != u) {
                        let (a, b) = (t[u], t[v]);
                        let d = Direction::from_vector((b.x - a.x, b.y - a.y))
                            .expect("elementary triangle edges are unit steps");
                        if !neighbours[iu].contains(&d) {
                            neighbours[iu].push(d);
                        }
                    }
                }
            }
        }
        drop(intern);
        let out = sites
            .iter()
            .zip(&neighbours)
            .map(|(s, nb)| {
                let mut dirs = nb.clone();
                if dirs.len() == 2 {
                    // outer corner: two extra directions by the extension convention
                    let ext = if s.y >= 0 { [0u8, 1] } else { [4, 5] };
                    dirs.extend(ext.iter().map(|&k| Direction(k)));
                }
                dirs.sort();
                let mut arr = [Direction(0); 4];
                assert_eq!(dirs.len(), 4, "site {s} has {} directions", dirs.len());
                arr.copy_from_slice(&dirs);
                arr
            })
            .collect();
        let mut g = Gasket { level: n, sites, index: HashMap::new(), out, neighbours };
        g.sort_sites();
        Ok(g)
    }

    // Deterministic order: ascending (x, y).
    fn sort_sites(&mut self) {
        let mut order: Vec<usize> = (0..self.sites.len()).collect();
        order.sort_by_key(|&i| self.sites[i]);
        self.sites = order.iter().map(|&i| self.sites[i]).collect();
        self.out = order.iter().map(|&i| self.out[i]).collect();
        self.neighbours = order.iter().map(|&i| self.neighbours[i].clone()).collect();
        self.index = self.sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn corners(&self) -> Corners {
        Corners::of_level(self.level)
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    /// Sites of the unprimed copy `F(n)` (those with `y >= 0`).
    pub fn upper_count(&self) -> usize {
        self.sites.iter().filter(|s| s.y >= 0).count()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index.contains_key(&s)
    }

    pub fn site_index(&self, s: Site) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn out(&self, s: Site) -> Option<&[Direction; 4]> {
        self.site_index(s).map(|i| &self.out[i])
    }

    /// Directions that lead to an actual lattice neighbour.
    pub fn neighbour_dirs(&self, s: Site) -> Option<&[Direction]> {
        self.site_index(s).map(|i| self.neighbours[i].as_slice())
    }

    pub fn state_count(&self) -> usize {
        4 * self.sites.len()
    }

    /// Position of `dir` inside the sorted out-set of `site`.
    pub fn slot(&self, site: Site, dir: Direction) -> Option<usize> {
        self.out(site)?.iter().position(|&d| d == dir)
    }

    pub fn state_index(&self, s: DirectedState) -> Option<usize> {
        let i = self.site_index(s.site)?;
        let k = self.out[i].iter().position(|&d| d == s.dir)?;
        Some(4 * i + k)
    }

    pub fn state(&self, idx: usize) -> DirectedState {
        DirectedState { site: self.sites[idx / 4], dir: self.out[idx / 4][idx % 4] }
    }

    pub fn validate(&self, s: DirectedState) -> Result<()> {
        match self.state_index(s) {
            Some(_) => Ok(()),
            None => Err(WalkError::InvalidState { x: s.site.x, y: s.site.y, dir: s.dir.index() }),
        }
    }

    /// `S|x^k> = |(x+e_k)^{k+3}>`.
    pub fn shift(&self, s: DirectedState) -> Result<DirectedState> {
        self.validate(s)?;
        let y = s.site.step(s.dir);
        if !self.contains(y) {
            return Err(WalkError::OutOfDomain { x: s.site.x, y: s.site.y, dir: s.dir.index() });
        }
        Ok(DirectedState { site: y, dir: s.dir.opposite() })
    }

    /// One CSV-ready record per site: `x1, x2, out_dirs`.
    pub fn records(&self) -> impl Iterator<Item = (i64, i64, String)> + '_ {
        self.sites.iter().zip(&self.out).map(|(s, o)| {
            let dirs: Vec<String> = o.iter().map(|d| d.index().to_string()).collect();
            (s.x, s.y, dirs.join(" "))
        })
    }
}

/// `|F(n)| = 3(3^n + 1)/2`.
pub fn copy_site_count(n: u32) -> usize {
    3 * (3usize.pow(n) + 1) / 2
}

/// Label of a vertex of the level-1 cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellLabel {
    pub label: u8,
    pub primed: bool,
}

impl CellLabel {
    pub const fn plain(label: u8) -> Self {
        CellLabel { label, primed: false }
    }

    pub const fn primed(label: u8) -> Self {
        CellLabel { label, primed: label != 0 }
    }

    pub fn mirror(self) -> Self {
        CellLabel { label: self.label, primed: self.label != 0 && !self.primed }
    }

    /// Coordinates in `F(1) ∪ F(1)'`.
    pub fn site(self) -> Site {
        const COORDS: [(i64, i64); 6] = [(0, 0), (1, 1), (2, 0), (3, 1), (4, 0), (2, 2)];
        let (x, y) = COORDS[self.label as usize];
        let s = Site::new(x, y);
        if self.primed {
            s.reflect()
        } else {
            s
        }
    }
}

impl fmt::Display for CellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.label, if self.primed { "'" } else { "" })
    }
}

/// Bijection between the eleven vertices of `F(1) ∪ F(1)'` and their labels.
pub fn relabel_cell() -> Vec<(CellLabel, Site)> {
    let mut v: Vec<(CellLabel, Site)> =
        (0..6).map(|k| CellLabel::plain(k)).map(|l| (l, l.site())).collect();
    v.extend((1..6).map(|k| CellLabel::primed(k)).map(|l| (l, l.site())));
    v
}

/// Label of a level-1 cell site, if it is one.
pub fn label_of(s: Site) -> Option<CellLabel> {
    relabel_cell().into_iter().find(|(_, t)| *t == s).map(|(l, _)| l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(k: u8) -> Direction {
        Direction::new(k).unwrap()
    }

    #[test]
    fn opposite_vectors_negate() {
        for dir in Direction::ALL {
            let (x, y) = dir.vector();
            assert_eq!(dir.opposite().vector(), (-x, -y));
        }
    }

    #[test]
    fn site_counts() {
        for n in 0..=6 {
            let g = Gasket::build(n).unwrap();
            assert_eq!(g.upper_count(), copy_site_count(n));
            assert_eq!(g.site_count(), 2 * copy_site_count(n) - 1);
        }
        assert_eq!(copy_site_count(0), 3);
        assert_eq!(copy_site_count(2), 15);
        // explicit level-1 enumeration: six coordinates per copy, origin shared
        let g = Gasket::build(1).unwrap();
        let mut listed: Vec<Site> = relabel_cell().into_iter().map(|(_, s)| s).collect();
        listed.sort();
        assert_eq!(g.sites(), listed.as_slice());
        assert_eq!(g.site_count(), 11);
    }

    #[test]
    fn level_cap_is_enforced() {
        assert_eq!(
            Gasket::build(LEVEL_CAP + 1).unwrap_err(),
            WalkError::LevelCap { level: LEVEL_CAP + 1, cap: LEVEL_CAP }
        );
    }

    #[test]
    fn corner_out_sets() {
        for n in 0..=4 {
            let g = Gasket::build(n).unwrap();
            let c = g.corners();
            let set = |s: Site| g.out(s).unwrap().map(|d| d.index());
            assert_eq!(set(c.origin), [0, 1, 4, 5]);
            assert_eq!(set(c.a), [0, 1, 4, 5]);
            assert_eq!(set(c.b), [0, 1, 2, 3]);
            assert_eq!(set(c.a_prime), [0, 1, 4, 5]);
            assert_eq!(set(c.b_prime), [2, 3, 4, 5]);
            for s in g.sites() {
                let nb = g.neighbour_dirs(*s).unwrap().len();
                if c.outer().contains(s) {
                    assert_eq!(nb, 2);
                } else {
                    assert_eq!(nb, 4, "site {s}");
                }
            }
        }
    }

    #[test]
    fn shift_examples() {
        let g = Gasket::build(0).unwrap();
        let s = g.shift(DirectedState::new(Site::ORIGIN, d(0))).unwrap();
        assert_eq!(s, DirectedState::new(Site::new(2, 0), d(3)));
        let s = g.shift(DirectedState::new(Site::ORIGIN, d(4))).unwrap();
        assert_eq!(s, DirectedState::new(Site::new(-1, -1), d(1)));
        let err = g.shift(DirectedState::new(Site::new(1, 1), d(0))).unwrap_err();
        assert!(matches!(err, WalkError::OutOfDomain { .. }));
    }

    #[test]
    fn cell_labels() {
        assert_eq!(label_of(Site::new(2, 2)), Some(CellLabel::plain(5)));
        assert_eq!(label_of(Site::new(0, 0)), Some(CellLabel::plain(0)));
        assert_eq!(label_of(Site::new(3, 1)), Some(CellLabel::plain(3)));
        assert_eq!(CellLabel::plain(4).site(), Corners::of_level(1).b);
        for (l, s) in relabel_cell() {
            assert_eq!(l.mirror().site(), s.reflect());
        }
        assert_eq!(Corners::of_level(2).a_prime, Site::new(-4, -4));
        assert_eq!(Corners::of_level(2).b_prime, Site::new(4, -4));
    }

    proptest! {
        #[test]
        fn shift_is_an_involution(n in 0u32..5, pick in 0usize..10_000) {
            let g = Gasket::build(n).unwrap();
            let idx = pick % g.state_count();
            let s = g.state(idx);
            if let Ok(t) = g.shift(s) {
                prop_assert!(g.validate(t).is_ok());
                prop_assert_eq!(g.shift(t).unwrap(), s);
            } else {
                // only outer-corner extension directions leave the lattice
                prop_assert!(g.corners().outer().contains(&s.site));
            }
        }

        #[test]
        fn reflection_is_an_involution(x in -50i64..50, y in -50i64..50) {
            let x = if (x + y) % 2 != 0 { x + 1 } else { x };
            let s = Site::new(x, y);
            prop_assert_eq!(s.reflect().reflect(), s);
        }
    }
}
