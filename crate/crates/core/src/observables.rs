//! Exit and return probability matrices and the exponent fits built on
//! their level sequences.

use crate::cell::Role;
use crate::classical::{to_f64, triple_orbit_exact};
use crate::coin::CoinKind;
use crate::error::{Result, WalkError};
use crate::green::GreenSextet;
use crate::quadrature::{sextet_moduli_by_level, CircleGrid, Integrals};
use crate::theta::Theta;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Sequence values below this are treated as unusable by the fits.
pub const NA_FLOOR: f64 = 1e-14;

/// Boundary points of `F(n) ∪ F(n)'` seen from the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Origin,
    A,
    B,
    APrime,
    BPrime,
}

impl Target {
    pub const ALL: [Target; 5] = [Target::Origin, Target::A, Target::B, Target::APrime, Target::BPrime];

    /// Arrival directions (column labels) in sorted order.
    pub fn directions(self) -> [u8; 4] {
        match self {
            Target::Origin | Target::A | Target::APrime => [0, 1, 4, 5],
            Target::B => [0, 1, 2, 3],
            Target::BPrime => [2, 3, 4, 5],
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Target::Origin => "0",
            Target::A => "a",
            Target::B => "b",
            Target::APrime => "a'",
            Target::BPrime => "b'",
        };
        f.write_str(s)
    }
}

pub type Block = [[f64; 4]; 4];

/// `P(n)(0, y)^i_j` for the five boundary targets. Rows are start
/// directions `0, 1, 4, 5`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitDistribution {
    pub level: u32,
    pub coin: CoinKind,
    pub blocks: [Block; 5],
    pub excluded_nodes: usize,
}

fn mirror(b: &Block) -> Block {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = b[3 - i][3 - j];
        }
    }
    m
}

impl ExitDistribution {
    /// Place per-function probabilities `p_k` (the integrals of `|u_k|²`)
    /// on the corner-block pattern. Signs drop under the modulus.
    pub fn from_moduli(level: u32, coin: CoinKind, p: [f64; 6], excluded_nodes: usize) -> Self {
        let s = GreenSextet::new(p.map(|v| Complex64::new(v, 0.0)), level);
        let abs = |from, to| {
            let m = s.corner_block(from, to);
            let mut b = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    b[i][j] = m.0[i][j].norm();
                }
            }
            b
        };
        let a = abs(Role::O, Role::A);
        let b = abs(Role::O, Role::B);
        let o = abs(Role::O, Role::O);
        ExitDistribution { level, coin, blocks: [o, a, b, mirror(&a), mirror(&b)], excluded_nodes }
    }

    /// Uniform-coin probabilities from the reduced triple at `z = 1`.
    pub fn from_classical_triple(level: u32, [u1, u2, u3]: [f64; 3]) -> Self {
        let a = [[0.0, 0.0, u1, u2]; 4];
        let b = [[0.0, 0.0, u2, u1]; 4];
        let o = [[u3; 4]; 4];
        ExitDistribution { level, coin: CoinKind::Classical, blocks: [o, a, b, mirror(&a), mirror(&b)], excluded_nodes: 0 }
    }

    pub fn block(&self, t: Target) -> &Block {
        &self.blocks[Target::ALL.iter().position(|&x| x == t).expect("target")]
    }

    /// Total over all targets and arrival directions for start row `i`.
    pub fn row_total(&self, i: usize) -> f64 {
        self.blocks.iter().map(|b| b[i].iter().sum::<f64>()).sum()
    }

    /// Long-format rows `(target, i, j, value)` with direction labels.
    pub fn rows(&self) -> Vec<(Target, u8, u8, f64)> {
        let starts = [0u8, 1, 4, 5];
        let mut out = Vec::with_capacity(80);
        for (t, b) in Target::ALL.iter().zip(&self.blocks) {
            for (i, row) in b.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    out.push((*t, starts[i], t.directions()[j], v));
                }
            }
        }
        out
    }
}

/// Uniform-coin triple at `z = 1`, levels `1..=n_max`, from the exact
/// orbit.
pub fn classical_triples(n_max: u32) -> Result<Vec<[f64; 3]>> {
    Ok(triple_orbit_exact(n_max)?.iter().map(|u| [0, 1, 2].map(|k| to_f64(&u[k]))).collect())
}

/// The same from the corner recursion in `f64` (drifts at deep levels).
pub fn classical_triples_float(n_max: u32) -> Result<Vec<[f64; 3]>> {
    let mut t = Theta::initial(Complex64::new(1.0, 0.0), CoinKind::Classical.coin());
    let mut out = Vec::with_capacity(n_max as usize);
    for _ in 0..n_max {
        t = t.step()?;
        out.push(t.triple().map(|v| v.re));
    }
    Ok(out)
}

/// Exit distributions for levels `1..=n_max`.
pub fn exit_distributions(n_max: u32, grid: &CircleGrid, coin: CoinKind) -> Result<Vec<ExitDistribution>> {
    match coin {
        CoinKind::Quantum => Ok(sextet_moduli_by_level(n_max, grid, coin)?
            .into_iter()
            .enumerate()
            .map(|(l, r)| {
                let p: [f64; 6] = r.values.try_into().expect("six integrals");
                ExitDistribution::from_moduli(l as u32 + 1, coin, p, r.excluded.len())
            })
            .collect()),
        CoinKind::Classical => Ok(classical_triples(n_max)?
            .into_iter()
            .enumerate()
            .map(|(l, t)| ExitDistribution::from_classical_triple(l as u32 + 1, t))
            .collect()),
    }
}

pub fn exit_distribution(n: u32, grid: &CircleGrid, coin: CoinKind) -> Result<ExitDistribution> {
    if n == 0 {
        return Err(WalkError::Config("exit distributions need level n >= 1".into()));
    }
    Ok(exit_distributions(n, grid, coin)?.pop().expect("n >= 1"))
}

/// The six integrals `(1/2π)∫|u_k(n)|²` for `n = 1..=n_max`.
pub fn recurrence_scan(n_max: u32, grid: &CircleGrid) -> Result<Vec<Integrals>> {
    if n_max == 0 || n_max > 40 {
        return Err(WalkError::Config(format!("recurrence scan needs 1 <= n_max <= 40, got {n_max}")));
    }
    sextet_moduli_by_level(n_max, grid, CoinKind::Quantum)
}

/// Least-squares line through `(n ln2, -ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `(n, -ln y)` points used.
    pub points: Vec<(u32, f64)>,
    pub residuals: Vec<f64>,
}

impl Fit {
    /// Fitted `-ln y` at level `n`.
    pub fn line(&self, n: u32) -> f64 {
        self.intercept + self.slope * n as f64 * std::f64::consts::LN_2
    }
}

/// Fit `-ln y_n = c + s·n ln2` over the points with `y_n > floor`.
pub fn fit_decay(seq: &[(u32, f64)], floor: f64) -> Result<Fit> {
    let pts: Vec<(u32, f64)> = seq.iter().filter(|(_, y)| *y > floor && y.is_finite()).map(|&(n, y)| (n, -y.ln())).collect();
    if pts.len() < 3 {
        return Err(WalkError::Fit { points: pts.len() });
    }
    let m = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|&(n, _)| n as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - intercept - slope * x).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(Fit { slope, intercept, r2, points: pts, residuals })
}

/// Where `P(∞)` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitChoice {
    /// The deepest computed level.
    #[default]
    Deepest,
    /// Return block all `1/4`, every exit block zero.
    Analytic,
}

/// Per-entry fits of a 4×4 family; `None` is NA.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slopes: [[Option<f64>; 4]; 4],
    pub fits: Vec<((usize, usize), Fit)>,
    pub fit_range: (u32, u32),
}

impl ExponentFit {
    pub fn na_mask(&self) -> [[bool; 4]; 4] {
        self.slopes.map(|r| r.map(|s| s.is_none()))
    }
}

/// `P(∞)` blocks for `choice`.
pub fn limit_blocks(dists: &[ExitDistribution], choice: LimitChoice) -> [Block; 5] {
    match choice {
        LimitChoice::Deepest => dists.last().expect("non-empty").blocks,
        LimitChoice::Analytic => {
            let mut b = [[[0.0; 4]; 4]; 5];
            b[0] = [[0.25; 4]; 4];
            b
        }
    }
}

/// Largest entry change between the last two levels, the convergence
/// check on the deepest-level limit.
pub fn limit_gap(dists: &[ExitDistribution]) -> Option<f64> {
    let [.., a, b] = dists else { return None };
    let gap = a.blocks.iter().flatten().flatten().zip(b.blocks.iter().flatten().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Some(gap)
}

fn in_range(d: &ExitDistribution, (lo, hi): (u32, u32)) -> bool {
    d.level >= lo && d.level <= hi
}

fn entry_fits(seq: impl Fn(usize, usize) -> Vec<(u32, f64)>, range: (u32, u32)) -> ExponentFit {
    let mut slopes = [[None; 4]; 4];
    let mut fits = Vec::new();
    for (i, row) in slopes.iter_mut().enumerate() {
        for (j, s) in row.iter_mut().enumerate() {
            if let Ok(f) = fit_decay(&seq(i, j), NA_FLOOR) {
                *s = Some(f.slope);
                fits.push(((i, j), f));
            }
        }
    }
    ExponentFit { slopes, fits, fit_range: range }
}

/// `β_w(0,0)` from `|P(n)(0,0) - P(∞)(0,0)|` and `γ_w(0,a_n)` from
/// `P(n)(0,a_n)`, fitted over levels in `range`.
pub fn exponent_beta_gamma(dists: &[ExitDistribution], range: (u32, u32), choice: LimitChoice) -> Result<(ExponentFit, ExponentFit)> {
    if dists.is_empty() {
        return Err(WalkError::Fit { points: 0 });
    }
    let inf = limit_blocks(dists, choice);
    let sel: Vec<&ExitDistribution> = dists.iter().filter(|d| in_range(d, range)).collect();
    let beta = entry_fits(|i, j| sel.iter().map(|d| (d.level, (d.blocks[0][i][j] - inf[0][i][j]).abs())).collect(), range);
    let gamma = entry_fits(|i, j| sel.iter().map(|d| (d.level, d.blocks[1][i][j])).collect(), range);
    Ok((beta, gamma))
}

/// Total variation distance `d(n)` between the rescaled exit distribution
/// and its limit.
pub fn total_variation(d: &ExitDistribution, inf: &[Block; 5]) -> f64 {
    let mut s = 0.0;
    for (b, l) in d.blocks.iter().zip(inf) {
        for i in 0..4 {
            for j in 0..4 {
                s += (b[i][j] - l[i][j]).abs();
            }
        }
    }
    0.5 * s
}

/// `H(n) = -Σ p(∞) ln p(n)` with `0·ln 0 = 0`.
pub fn cross_entropy(d: &ExitDistribution, inf: &[Block; 5]) -> Result<f64> {
    let mut h = 0.0;
    for (t, (b, l)) in Target::ALL.iter().zip(d.blocks.iter().zip(inf)) {
        for i in 0..4 {
            for j in 0..4 {
                let (p, q) = (b[i][j], l[i][j]);
                if q == 0.0 {
                    continue;
                }
                if p <= 0.0 {
                    let entry = format!("P({})(0,{t}) [{}][{}]", d.level, i, j);
                    return Err(WalkError::EntropyDomain { entry, p_inf: q });
                }
                h -= q * p.ln();
            }
        }
    }
    Ok(h)
}

/// `Σ p(∞) ln(p(∞)/p(n))`, reported alongside `H(n)` as a diagnostic.
pub fn relative_entropy(d: &ExitDistribution, inf: &[Block; 5]) -> Result<f64> {
    let mut h = 0.0;
    for (b, l) in d.blocks.iter().zip(inf) {
        for i in 0..4 {
            for j in 0..4 {
                let (p, q) = (b[i][j], l[i][j]);
                if q > 0.0 {
                    if p <= 0.0 {
                        return Err(WalkError::EntropyDomain { entry: format!("level {} [{i}][{j}]", d.level), p_inf: q });
                    }
                    h += q * (q / p).ln();
                }
            }
        }
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEta {
    pub d: Vec<(u32, f64)>,
    pub h: Vec<(u32, f64)>,
    pub kl: Vec<(u32, f64)>,
    pub delta: Fit,
    pub eta: Fit,
}

/// `δ_w` and `η_w` fitted over `range`; `p(∞)` per `choice`.
pub fn delta_eta(dists: &[ExitDistribution], range: (u32, u32), choice: LimitChoice) -> Result<DeltaEta> {
    if dists.is_empty() {
        return Err(WalkError::Fit { points: 0 });
    }
    let inf = limit_blocks(dists, choice);
    let sel: Vec<&ExitDistribution> = dists.iter().filter(|d| in_range(d, range)).collect();
    let d: Vec<(u32, f64)> = sel.iter().map(|x| (x.level, total_variation(x, &inf))).collect();
    let h = sel.iter().map(|x| Ok((x.level, cross_entropy(x, &inf)?))).collect::<Result<Vec<_>>>()?;
    let kl = sel.iter().map(|x| Ok((x.level, relative_entropy(x, &inf)?))).collect::<Result<Vec<_>>>()?;
    let delta = fit_decay(&d, NA_FLOOR)?;
    let eta = fit_decay(&h, NA_FLOOR)?;
    Ok(DeltaEta { d, h, kl, delta, eta })
}

/// One plot series: `(n, -ln value, fitted line)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub rows: Vec<(u32, f64, Option<f64>)>,
}

pub fn series(name: &str, seq: &[(u32, f64)]) -> Series {
    let fit = fit_decay(seq, NA_FLOOR).ok();
    let rows = seq
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|&(n, y)| (n, -y.ln(), fit.as_ref().map(|f| f.line(n))))
        .collect();
    Series { name: name.to_string(), rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::CircleGrid;

    #[test]
    fn level_one_quantum_matrices() {
        let g = CircleGrid::trapezoid(4096);
        let d = exit_distribution(1, &g, CoinKind::Quantum).unwrap();
        let a = d.block(Target::A);
        let want = [[0.0, 0.0, 1.0 / 8.0, 0.0], [0.0, 0.0, 1.0 / 8.0, 0.0], [0.0, 0.0, 1.0 / 12.0, 1.0 / 12.0], [0.0, 0.0, 1.0 / 12.0, 1.0 / 12.0]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((a[i][j] - want[i][j]).abs() < 1e-10, "a[{i}][{j}] = {}", a[i][j]);
            }
        }
        let o = d.block(Target::Origin);
        for i in 0..4 {
            for j in 0..4 {
                let same_half = (i < 2) == (j < 2);
                let want = if same_half { 0.125 } else { 1.0 / 12.0 };
                assert!((o[i][j] - want).abs() < 1e-10);
            }
        }
        // every start row exits with total probability one at level 1
        for i in 0..4 {
            assert!((d.row_total(i) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn level_one_exit_total_is_one() {
        // every channel, primed ones included
        let d = exit_distribution(1, &CircleGrid::trapezoid(4096), CoinKind::Quantum).unwrap();
        for i in 0..4 {
            assert!((d.row_total(i) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn limit_gap_of_classical_orbit() {
        let d = exit_distributions(12, &CircleGrid::trapezoid(1), CoinKind::Classical).unwrap();
        let g = limit_gap(&d).unwrap();
        // u3 moves by 0.15·0.6^11·0.4 between levels 11 and 12
        assert!((g - 0.15 * 0.6f64.powi(10) * 0.4).abs() < 1e-12, "{g}");
        assert_eq!(limit_gap(&d[..1]), None);
    }

    #[test]
    fn primed_blocks_mirror() {
        let d = ExitDistribution::from_moduli(2, CoinKind::Quantum, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 0);
        let a = d.block(Target::A);
        let ap = d.block(Target::APrime);
        // start e0 -> mirror start e5; arrival e4 at a -> arrival e1 at a'
        assert_eq!(ap[3][1], a[0][2]);
        let bp = d.block(Target::BPrime);
        let b = d.block(Target::B);
        // b arrival directions (0,1,2,3), b' arrival directions (2,3,4,5)
        assert_eq!(bp[0][0], b[3][3]);
    }

    #[test]
    fn classical_level_one() {
        let g = CircleGrid::trapezoid(16);
        let d = exit_distribution(1, &g, CoinKind::Classical).unwrap();
        let a = d.block(Target::A);
        for row in a {
            assert!((row[2] - 0.1).abs() < 1e-14 && (row[3] - 0.05).abs() < 1e-14);
        }
        assert!(d.block(Target::Origin).iter().flatten().all(|v| (v - 0.1).abs() < 1e-14));
        for i in 0..4 {
            assert!((d.row_total(i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn classical_conservation_ten_levels() {
        let g = CircleGrid::trapezoid(16);
        for d in exit_distributions(10, &g, CoinKind::Classical).unwrap() {
            for i in 0..4 {
                assert!((d.row_total(i) - 1.0).abs() < 1e-9, "level {}", d.level);
            }
        }
    }

    #[test]
    fn fit_recovers_geometric_slope() {
        let seq: Vec<(u32, f64)> = (1..=20).map(|n| (n, 0.15 * 0.6f64.powi(n as i32 - 1))).collect();
        let f = fit_decay(&seq, NA_FLOOR).unwrap();
        let want = (5f64.ln() - 3f64.ln()) / 2f64.ln();
        assert!((f.slope - want).abs() < 1e-12);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn fit_needs_three_points() {
        let seq = [(1, 0.5), (2, 0.25), (3, 0.0), (4, 1e-20)];
        assert_eq!(fit_decay(&seq, NA_FLOOR).unwrap_err(), WalkError::Fit { points: 2 });
    }

    #[test]
    fn classical_exponents() {
        let g = CircleGrid::trapezoid(16);
        let dists = exit_distributions(30, &g, CoinKind::Classical).unwrap();
        let want = (5f64.ln() - 3f64.ln()) / 2f64.ln();
        let (beta, gamma) = exponent_beta_gamma(&dists, (2, 20), LimitChoice::Analytic).unwrap();
        for row in beta.slopes {
            for s in row {
                assert!((s.unwrap() - want).abs() < 1e-6);
            }
        }
        let mask = gamma.na_mask();
        for row in mask {
            assert_eq!(row, [true, true, false, false]);
        }
        let de = delta_eta(&dists, (2, 20), LimitChoice::Analytic).unwrap();
        assert!((de.delta.slope - want).abs() < 1e-6);
    }

    #[test]
    fn entropy_domain_error() {
        let d = ExitDistribution::from_moduli(1, CoinKind::Quantum, [0.0; 6], 0);
        let inf = ExitDistribution::from_moduli(2, CoinKind::Quantum, [0.0, 0.0, 0.0, 0.0, 0.25, 0.25], 0).blocks;
        assert!(matches!(cross_entropy(&d, &inf), Err(WalkError::EntropyDomain { .. })));
        // zero p(∞) entries contribute nothing
        assert_eq!(cross_entropy(&inf_dist(), &[[[0.0; 4]; 4]; 5]).unwrap(), 0.0);
    }

    fn inf_dist() -> ExitDistribution {
        ExitDistribution::from_moduli(1, CoinKind::Quantum, [0.1; 6], 0)
    }

    #[test]
    fn series_single_point_has_no_fit() {
        let s = series("x", &[(3, 0.5)]);
        assert_eq!(s.rows.len(), 1);
        assert!(s.rows[0].2.is_none());
    }
}
