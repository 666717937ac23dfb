//! Unit-circle evaluation and Parseval integrals.
//!
//! Nodes are evaluated independently (in parallel) and reduced in ascending
//! node order. Nodes where a solve reports a singular factor are excluded
//! and repaired by the policy in [`integrate`].

use crate::coin::CoinKind;
use crate::error::{Result, WalkError};
use crate::green::{sextet_at_level, GreenSextet};
use crate::scalar::{Dual, Scalar};
use crate::theta::theta_at_level;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Fraction of excluded nodes repaired by neighbour averaging.
pub const NEIGHBOUR_LIMIT: f64 = 1e-3;
/// Fraction of excluded nodes above which a run fails.
pub const FAIL_LIMIT: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Scheme {
    Trapezoid,
    MonteCarlo { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleGrid {
    pub nodes: usize,
    pub scheme: Scheme,
}

impl CircleGrid {
    pub fn trapezoid(nodes: usize) -> Self {
        CircleGrid { nodes, scheme: Scheme::Trapezoid }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        CircleGrid { nodes: samples, scheme: Scheme::MonteCarlo { seed } }
    }

    /// Node angles, `2πm/N` for the trapezoid rule, seeded uniform draws
    /// otherwise.
    pub fn angles(&self) -> Vec<f64> {
        match self.scheme {
            Scheme::Trapezoid => (0..self.nodes).map(|m| TAU * m as f64 / self.nodes as f64).collect(),
            Scheme::MonteCarlo { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..self.nodes).map(|_| rng.gen::<f64>() * TAU).collect()
            }
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.angles().into_iter().map(|t| Complex64::from_polar(1.0, t)).collect()
    }
}

/// Angular offset of the two points that stand in for a singular node.
pub const REPAIR_OFFSET: f64 = 1e-5;

/// Value at one node.
#[derive(Clone, Debug, PartialEq)]
pub enum Node<V> {
    Exact(V),
    /// The node itself was singular; values at `θ ± REPAIR_OFFSET`.
    Offset(V, V),
    /// Singular at the node and at both offsets.
    Missing,
}

/// Per-node results in node order; `excluded` lists every node that was
/// not evaluated exactly.
#[derive(Clone, Debug)]
pub struct NodeTable<V> {
    pub values: Vec<Node<V>>,
    pub excluded: Vec<usize>,
}

impl<V> NodeTable<V> {
    pub fn map<W>(&self, f: impl Fn(&V) -> W) -> NodeTable<W> {
        let values = self
            .values
            .iter()
            .map(|v| match v {
                Node::Exact(x) => Node::Exact(f(x)),
                Node::Offset(a, b) => Node::Offset(f(a), f(b)),
                Node::Missing => Node::Missing,
            })
            .collect();
        NodeTable { values, excluded: self.excluded.clone() }
    }

    /// Exactly evaluated values with their node index.
    pub fn exact(&self) -> impl Iterator<Item = (usize, &V)> {
        self.values.iter().enumerate().filter_map(|(m, v)| match v {
            Node::Exact(x) => Some((m, x)),
            _ => None,
        })
    }

    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| matches!(v, Node::Missing)).count()
    }
}

fn singular_to_none<V>(r: Result<V>) -> Result<Option<V>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(WalkError::Singular { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Evaluate `f` at every node. A singular node is re-evaluated at the two
/// nearby angles `θ ± REPAIR_OFFSET`; any non-singular error aborts.
pub fn evaluate_nodes<V, F>(grid: &CircleGrid, f: F) -> Result<NodeTable<V>>
where
    V: Send,
    F: Fn(Complex64) -> Result<V> + Sync,
{
    let eval = |t: f64| -> Result<Node<V>> {
        if let Some(v) = singular_to_none(f(Complex64::from_polar(1.0, t)))? {
            return Ok(Node::Exact(v));
        }
        let lo = singular_to_none(f(Complex64::from_polar(1.0, t - REPAIR_OFFSET)))?;
        let hi = singular_to_none(f(Complex64::from_polar(1.0, t + REPAIR_OFFSET)))?;
        Ok(match (lo, hi) {
            (Some(a), Some(b)) => Node::Offset(a, b),
            _ => Node::Missing,
        })
    };
    let values = grid.angles().into_par_iter().map(eval).collect::<Result<Vec<_>>>()?;
    let excluded = values.iter().enumerate().filter(|(_, v)| !matches!(v, Node::Exact(_))).map(|(m, _)| m).collect();
    Ok(NodeTable { values, excluded })
}

/// Result of a reduction over nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integrals {
    pub values: Vec<f64>,
    /// Standard errors (Monte Carlo only).
    pub std_err: Option<Vec<f64>>,
    pub excluded: Vec<usize>,
    pub total: usize,
}

/// Mean of each integrand component over the grid (`(1/2π)∫ f dθ`).
///
/// Singular nodes use the mean of their two offset values. Nodes where
/// even those fail are repaired from the nearest evaluated grid nodes on
/// either side while they are at most 0.1% of the grid, dropped with the
/// weights renormalised up to 1%, and fail the run beyond that.
pub fn integrate(table: &NodeTable<Vec<f64>>) -> Result<Integrals> {
    let total = table.values.len();
    let nex = table.missing();
    if total == 0 || nex == total || nex as f64 > FAIL_LIMIT * total as f64 {
        return Err(WalkError::QuadratureReliability { excluded: nex, total });
    }
    let resolved: Vec<Option<Vec<f64>>> = table
        .values
        .iter()
        .map(|v| match v {
            Node::Exact(x) => Some(x.clone()),
            Node::Offset(a, b) => Some(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()),
            Node::Missing => None,
        })
        .collect();
    let width = resolved.iter().flatten().map(Vec::len).next().unwrap_or(0);
    let repair = nex as f64 <= NEIGHBOUR_LIMIT * total as f64;
    let nearest = |m: usize, step: isize| -> &Vec<f64> {
        let mut k = m as isize;
        loop {
            k = (k + step).rem_euclid(total as isize);
            if let Some(v) = &resolved[k as usize] {
                return v;
            }
        }
    };
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(total);
    for (m, v) in resolved.iter().enumerate() {
        match v {
            Some(v) => rows.push(v.clone()),
            None if repair => {
                let (l, r) = (nearest(m, -1), nearest(m, 1));
                rows.push(l.iter().zip(r).map(|(a, b)| 0.5 * (a + b)).collect());
            }
            None => {}
        }
    }
    let used = rows.len() as f64;
    let mut mean = vec![0.0; width];
    for r in &rows {
        mean.iter_mut().zip(r).for_each(|(s, x)| *s += x);
    }
    mean.iter_mut().for_each(|s| *s /= used);
    let mut var = vec![0.0; width];
    for r in &rows {
        var.iter_mut().zip(r).zip(&mean).for_each(|((v, x), m)| *v += (x - m).powi(2));
    }
    let std_err = Some(var.into_iter().map(|v| (v / (used - 1.0).max(1.0) / used).sqrt()).collect());
    Ok(Integrals { values: mean, std_err, excluded: table.excluded.clone(), total })
}

/// [`integrate`], keeping standard errors only for Monte Carlo grids.
pub fn integrate_on(grid: &CircleGrid, table: &NodeTable<Vec<f64>>) -> Result<Integrals> {
    let mut r = integrate(table)?;
    if grid.scheme == Scheme::Trapezoid {
        r.std_err = None;
    }
    Ok(r)
}

/// `(1/2π)∫|f|²` for a single complex integrand.
pub fn parseval_integral(samples: &NodeTable<Complex64>) -> Result<f64> {
    integrate(&samples.map(|f| vec![f.norm_sqr()])).map(|r| r.values[0])
}

/// `z·∂_z` of a quantity carried as a jet.
pub fn radial_derivative(q: Dual) -> Complex64 {
    q.d
}

/// `(1/2π)∫ (∂_s f) · conj(f)`, the time-weighted pairing.
pub fn parseval_pairing(samples: &NodeTable<Dual>) -> Result<Complex64> {
    let r = integrate(&samples.map(|f| {
        let p = radial_derivative(*f) * f.v.conj();
        vec![p.re, p.im]
    }))?;
    Ok(Complex64::new(r.values[0], r.values[1]))
}

/// Level-`n` sextet at `z` for either coin. The classical sextet is read
/// off the uniform-coin corner blocks in the same placement.
pub fn sextet_at<T: Scalar>(z: T, n: u32, coin: CoinKind) -> Result<GreenSextet<T>> {
    match coin {
        CoinKind::Quantum => sextet_at_level(z, 0.5, n),
        CoinKind::Classical => theta_at_level(z, coin.coin(), n).map(|t| t.sextet()),
    }
}

pub fn sextet_on_circle(n: u32, grid: &CircleGrid, coin: CoinKind) -> Result<NodeTable<GreenSextet<Complex64>>> {
    evaluate_nodes(grid, |z| sextet_at(z, n, coin))
}

/// Jet-valued sextets seeded for the radial derivative.
pub fn sextet_on_circle_dual(n: u32, grid: &CircleGrid, coin: CoinKind) -> Result<NodeTable<GreenSextet<Dual>>> {
    evaluate_nodes(grid, |z| sextet_at(Dual::radial_seed(z), n, coin))
}

/// `(1/2π)∫|u_k|²` for all six `k` at levels `1..=n_max`, one pass per node.
pub fn sextet_moduli_by_level(n_max: u32, grid: &CircleGrid, coin: CoinKind) -> Result<Vec<Integrals>> {
    let table = evaluate_nodes(grid, |z| {
        let mut s = GreenSextet::initial(z, 0.5);
        let mut th = crate::theta::Theta::initial(z, coin.coin());
        let mut out = Vec::with_capacity(n_max as usize);
        for _ in 0..n_max {
            let cur = match coin {
                CoinKind::Quantum => {
                    s = crate::green::iterate(&s)?;
                    s
                }
                CoinKind::Classical => {
                    th = th.step()?;
                    th.sextet()
                }
            };
            out.push(cur.u.map(|u| u.norm_sqr()));
        }
        Ok(out)
    })?;
    (0..n_max as usize)
        .map(|lv| integrate_on(grid, &table.map(|rows| rows[lv].to_vec())))
        .collect()
}

/// `(1/2π)∫|u_k|²` at one level.
pub fn sextet_moduli(n: u32, grid: &CircleGrid, coin: CoinKind) -> Result<Integrals> {
    let table = sextet_on_circle(n, grid, coin)?;
    integrate_on(grid, &table.map(|s| s.u.iter().map(|u| u.norm_sqr()).collect()))
}
