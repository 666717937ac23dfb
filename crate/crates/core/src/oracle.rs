//! Brute-force state-vector evolution with absorbing sites, and the
//! Taylor coefficients of the Green functions it must reproduce.

use crate::cell::Role;
use crate::coin::{delta, evolution_step, CoinKind};
use crate::error::{Result, WalkError};
use crate::quadrature::sextet_at;
use crate::theta::theta_at_level;
use crate::topology::{DirectedState, Direction, Gasket, Site};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const ORACLE_LEVEL_CAP: u32 = 4;
pub const ORACLE_TIME_CAP: u32 = 200;

/// Radius and node count for coefficient extraction.
pub const MOMENT_RADIUS: f64 = 0.5;
pub const MOMENT_NODES: usize = 64;
pub const SERIES_TIME_CAP: u32 = 14;

/// Which sites absorb.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Absorb {
    /// Origin and the four outer corners.
    Tau,
    /// The four outer corners only.
    #[serde(rename = "T")]
    Passage,
}

impl Absorb {
    pub fn sites(self, g: &Gasket) -> Vec<Site> {
        let c = g.corners();
        match self {
            Absorb::Tau => c.all().to_vec(),
            Absorb::Passage => c.outer().to_vec(),
        }
    }
}

impl std::str::FromStr for Absorb {
    type Err = WalkError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(Absorb::Tau),
            "T" | "t" | "passage" => Ok(Absorb::Passage),
            _ => Err(WalkError::Config(format!("unknown absorbing set {s:?} (tau|T)"))),
        }
    }
}

/// One recorded arrival.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capture {
    pub t: u32,
    pub state: DirectedState,
    pub amp: Complex64,
}

/// Everything captured up to `t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingEvolution {
    pub level: u32,
    pub start: DirectedState,
    pub coin: CoinKind,
    pub absorb: Absorb,
    pub t_max: u32,
    pub captures: Vec<Capture>,
    /// `‖live‖²` after each step, index `t - 1`.
    pub live_mass: Vec<f64>,
}

/// Evolve `start` with coin-then-shift; any amplitude landing on an
/// absorbing site at time `t >= 1` is recorded and removed before the next
/// step.
pub fn evolve_absorbing(n: u32, start: DirectedState, t_max: u32, absorb: Absorb, coin: CoinKind) -> Result<AbsorbingEvolution> {
    if n > ORACLE_LEVEL_CAP {
        return Err(WalkError::LevelCap { level: n, cap: ORACLE_LEVEL_CAP });
    }
    if t_max > ORACLE_TIME_CAP {
        return Err(WalkError::Config(format!("t_max {t_max} exceeds the cap of {ORACLE_TIME_CAP}")));
    }
    let g = Gasket::build(n)?;
    let sinks: Vec<usize> = absorb
        .sites(&g)
        .into_iter()
        .flat_map(|s| {
            let i = g.site_index(s).expect("corner in lattice");
            4 * i..4 * i + 4
        })
        .collect();
    let c = coin.coin();
    let mut psi = delta(&g, start)?;
    let mut captures = Vec::new();
    let mut live_mass = Vec::with_capacity(t_max as usize);
    for t in 1..=t_max {
        psi = evolution_step(&g, &psi, &c)?;
        for &k in &sinks {
            if psi[k].norm_sqr() > 0.0 {
                captures.push(Capture { t, state: g.state(k), amp: psi[k] });
                psi[k] = Complex64::new(0.0, 0.0);
            }
        }
        live_mass.push(psi.iter().map(|a| a.norm_sqr()).sum());
    }
    Ok(AbsorbingEvolution { level: n, start, coin, absorb, t_max, captures, live_mass })
}

impl AbsorbingEvolution {
    /// Amplitude captured at `state` at time `t` (zero if none).
    pub fn amplitude(&self, t: u32, state: DirectedState) -> Complex64 {
        self.captures.iter().find(|c| c.t == t && c.state == state).map_or(Complex64::new(0.0, 0.0), |c| c.amp)
    }

    /// Time series at one channel, `t = 0..=t_max`.
    pub fn series(&self, state: DirectedState) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.t_max as usize + 1];
        for c in self.captures.iter().filter(|c| c.state == state) {
            v[c.t as usize] = c.amp;
        }
        v
    }

    /// Probability weight of a capture: `|a|²` for the quantum walk, `a`
    /// itself for the uniform coin.
    fn weight(&self, a: Complex64) -> f64 {
        match self.coin {
            CoinKind::Quantum => a.norm_sqr(),
            CoinKind::Classical => a.re,
        }
    }

    /// Captured probability per channel, summed over time.
    pub fn channel_totals(&self) -> Vec<(DirectedState, f64)> {
        let mut out: Vec<(DirectedState, f64)> = Vec::new();
        for c in &self.captures {
            let w = self.weight(c.amp);
            match out.iter_mut().find(|(s, _)| *s == c.state) {
                Some(e) => e.1 += w,
                None => out.push((c.state, w)),
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }

    pub fn captured_total(&self) -> f64 {
        self.captures.iter().map(|c| self.weight(c.amp)).sum()
    }

    /// Truncated `Σ t·P(t)`.
    pub fn truncated_time(&self) -> f64 {
        self.captures.iter().map(|c| c.t as f64 * self.weight(c.amp)).sum()
    }

    /// `|‖live‖² + captured - 1|` after each step (quantum walk).
    pub fn mass_defects(&self) -> Vec<f64> {
        let mut cum = 0.0;
        let mut k = 0;
        self.live_mass
            .iter()
            .enumerate()
            .map(|(i, live)| {
                let t = i as u32 + 1;
                while k < self.captures.len() && self.captures[k].t == t {
                    cum += self.captures[k].amp.norm_sqr();
                    k += 1;
                }
                (live + cum - 1.0).abs()
            })
            .collect()
    }
}

/// Coefficients `c_0..=c_tmax` of `f` from `N` samples on `|z| = ρ`.
pub fn taylor_coefficients(f: impl Fn(Complex64) -> Result<Complex64>, t_max: u32, radius: f64, nodes: usize) -> Result<Vec<Complex64>> {
    let samples = (0..nodes)
        .map(|m| f(Complex64::from_polar(radius, TAU * m as f64 / nodes as f64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(moments(&samples, t_max, radius))
}

/// Trigonometric moments of equispaced samples on `|z| = ρ`.
pub fn moments(samples: &[Complex64], t_max: u32, radius: f64) -> Vec<Complex64> {
    let nodes = samples.len();
    (0..=t_max)
        .map(|t| {
            let s: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::from_polar(1.0, -TAU * ((m * t as usize) % nodes) as f64 / nodes as f64))
                .sum();
            s / (nodes as f64 * radius.powi(t as i32))
        })
        .collect()
}

fn dir(k: u8) -> Direction {
    Direction::ALL[k as usize]
}

/// Green-function entries checked against the oracle: for each start
/// direction in `out(0)`, the corner blocks towards `0`, `a_n` and `b_n`.
fn green_entries(z: Complex64, n: u32, coin: CoinKind) -> Result<Vec<Complex64>> {
    match coin {
        CoinKind::Quantum => {
            let s = sextet_at(z, n, coin)?;
            let mut v = Vec::with_capacity(48);
            for to in [Role::O, Role::A, Role::B] {
                v.extend(s.corner_block(Role::O, to).0.iter().flatten().copied());
            }
            Ok(v)
        }
        CoinKind::Classical => Ok(theta_at_level(z, coin.coin(), n)?.triple().to_vec()),
    }
}

/// `(start, arrival)` pairs matching [`green_entries`].
fn channels(n: u32, coin: CoinKind) -> Vec<(DirectedState, DirectedState)> {
    let c = crate::topology::Corners::of_level(n);
    let o = Site::ORIGIN;
    match coin {
        CoinKind::Quantum => {
            let mut v = Vec::with_capacity(48);
            for (site, role) in [(o, Role::O), (c.a, Role::A), (c.b, Role::B)] {
                for i in Role::O.canonical_out() {
                    for j in role.canonical_out() {
                        v.push((DirectedState::new(o, i), DirectedState::new(site, j)));
                    }
                }
            }
            v
        }
        CoinKind::Classical => {
            let s = DirectedState::new(o, dir(0));
            vec![(s, DirectedState::new(c.a, dir(4))), (s, DirectedState::new(c.a, dir(5))), (s, DirectedState::new(o, dir(0)))]
        }
    }
}

/// Largest gap between oracle amplitudes and the Taylor coefficients of
/// the level-`n` Green functions, over all checked entries and `t <= t_max`.
pub fn series_match(n: u32, t_max: u32, coin: CoinKind) -> Result<f64> {
    if n > 2 || t_max > SERIES_TIME_CAP {
        return Err(WalkError::Config(format!("series match needs n <= 2 and t_max <= {SERIES_TIME_CAP}")));
    }
    let samples = (0..MOMENT_NODES)
        .map(|m| green_entries(Complex64::from_polar(MOMENT_RADIUS, TAU * m as f64 / MOMENT_NODES as f64), n, coin))
        .collect::<Result<Vec<_>>>()?;
    let chans = channels(n, coin);
    let mut runs: Vec<(DirectedState, AbsorbingEvolution)> = Vec::new();
    let mut worst = 0.0f64;
    for (e, &(start, arrive)) in chans.iter().enumerate() {
        if !runs.iter().any(|(s, _)| *s == start) {
            runs.push((start, evolve_absorbing(n, start, t_max, Absorb::Tau, coin)?));
        }
        let ev = &runs.iter().find(|(s, _)| *s == start).expect("run").1;
        let column: Vec<Complex64> = samples.iter().map(|row| row[e]).collect();
        let coef = moments(&column, t_max, MOMENT_RADIUS);
        for (c, a) in coef.iter().zip(ev.series(arrive)) {
            worst = worst.max((c - a).norm());
        }
    }
    Ok(worst)
}
