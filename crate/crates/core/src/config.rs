//! Run configuration and the manifest written next to every result.

use crate::coin::CoinKind;
use crate::error::{Result, WalkError};
use crate::observables::LimitChoice;
use crate::oracle::Absorb;
use crate::quadrature::CircleGrid;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Lattice,
    ExitDist,
    Recurrence,
    Exponents,
    Passage,
    Classical,
    Oracle,
    PlotData,
}

/// `n` or `a..b` (inclusive), levels starting at 1 unless a command allows 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LevelRange {
    pub lo: u32,
    pub hi: u32,
}

impl LevelRange {
    pub fn single(n: u32) -> Self {
        LevelRange { lo: n, hi: n }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }
}

impl FromStr for LevelRange {
    type Err = WalkError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || WalkError::Config(format!("invalid level range {s:?} (expected n or a..b with 1 <= a <= b)"));
        let s = s.trim();
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().trim_start_matches('=').parse().map_err(|_| bad())?),
            None => {
                let n = s.parse().map_err(|_| bad())?;
                (n, n)
            }
        };
        if hi == 0 || lo > hi {
            return Err(bad());
        }
        Ok(LevelRange { lo, hi })
    }
}

impl TryFrom<String> for LevelRange {
    type Error = WalkError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LevelRange> for String {
    fn from(r: LevelRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    Trapezoid,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub scheme: SchemeName,
    pub nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { scheme: SchemeName::Trapezoid, nodes: 4096, mc_samples: 100_000, seed: 1 }
    }
}

impl QuadratureConfig {
    pub fn grid(&self) -> Result<CircleGrid> {
        let g = match self.scheme {
            SchemeName::Trapezoid => CircleGrid::trapezoid(self.nodes),
            SchemeName::Mc => CircleGrid::monte_carlo(self.mc_samples, self.seed),
        };
        if g.nodes < 2 {
            return Err(WalkError::Config("quadrature needs at least 2 nodes".into()));
        }
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Per-start exit totals may exceed 1 by at most this.
    pub conservation: f64,
    /// Last-two-level gap allowed for the deepest-level limit.
    pub limit_gap: f64,
    /// Imaginary part left in passage-time pairings.
    pub imag_residue: f64,
    pub passage_level_cap: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { conservation: 1e-9, limit_gap: 1e-6, imag_residue: 1e-9, passage_level_cap: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    /// Result file; standard output when absent.
    pub path: Option<PathBuf>,
    /// Manifest file; `<path>.manifest.json` when a result path is set.
    pub manifest: Option<PathBuf>,
}

impl OutputConfig {
    pub fn manifest_path(&self) -> Option<PathBuf> {
        self.manifest.clone().or_else(|| {
            self.path.as_ref().map(|p| {
                let mut s = p.clone().into_os_string();
                s.push(".manifest.json");
                PathBuf::from(s)
            })
        })
    }
}

/// Everything that determines a run's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub coin: CoinKind,
    pub levels: Option<LevelRange>,
    pub quadrature: QuadratureConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
    pub fit_range: Option<LevelRange>,
    /// `P(∞)` source; quantum defaults to the deepest level, classical to
    /// the analytic limit.
    pub limit: Option<LimitChoice>,
    /// Command-specific selector (`prob|etime`, `phi|triple|exponents`,
    /// or a plot family).
    pub observable: Option<String>,
    /// Oracle start state `x,y,eK`.
    pub start: String,
    pub t_max: u32,
    pub absorb: Absorb,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            coin: CoinKind::Quantum,
            levels: None,
            quadrature: QuadratureConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
            fit_range: None,
            limit: None,
            observable: None,
            start: "0,0,e0".into(),
            t_max: 40,
            absorb: Absorb::Tau,
        }
    }
}

impl RunConfig {
    pub fn levels(&self) -> Result<LevelRange> {
        self.levels.ok_or_else(|| WalkError::Config("no levels given".into()))
    }

    pub fn limit(&self) -> LimitChoice {
        self.limit.unwrap_or(match self.coin {
            CoinKind::Quantum => LimitChoice::Deepest,
            CoinKind::Classical => LimitChoice::Analytic,
        })
    }

    /// Fit range, defaulting to the level range.
    pub fn fit_range(&self) -> Result<LevelRange> {
        match self.fit_range {
            Some(r) => Ok(r),
            None => self.levels(),
        }
    }
}

/// One named check with its outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

/// Quadrature nodes that were not evaluated exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionEvent {
    pub context: String,
    pub nodes: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: RunConfig,
    pub exclusions: Vec<ExclusionEvent>,
    pub checks: Vec<Check>,
    /// `(stage, seconds)`.
    pub timings: Vec<(String, f64)>,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(config: RunConfig) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            exclusions: Vec::new(),
            checks: Vec::new(),
            timings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!("3".parse::<LevelRange>().unwrap(), LevelRange::single(3));
        assert_eq!("2..20".parse::<LevelRange>().unwrap(), LevelRange { lo: 2, hi: 20 });
        assert_eq!("2..=20".parse::<LevelRange>().unwrap(), LevelRange { lo: 2, hi: 20 });
        for bad in ["", "0", "5..2", "a..b", "..3", "0..0"] {
            assert!(bad.parse::<LevelRange>().is_err(), "{bad}");
        }
        assert_eq!(LevelRange { lo: 2, hi: 20 }.to_string(), "2..20");
    }

    #[test]
    fn manifest_path_defaults_next_to_output() {
        let o = OutputConfig { path: Some("out/x.csv".into()), ..Default::default() };
        assert_eq!(o.manifest_path(), Some(PathBuf::from("out/x.csv.manifest.json")));
        assert_eq!(OutputConfig::default().manifest_path(), None);
    }

    #[test]
    fn grid_from_config() {
        let q = QuadratureConfig { scheme: SchemeName::Mc, mc_samples: 10, seed: 3, ..Default::default() };
        assert_eq!(q.grid().unwrap(), CircleGrid::monte_carlo(10, 3));
        assert!(QuadratureConfig { nodes: 1, ..Default::default() }.grid().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = RunConfig { command: Some(Command::Exponents), levels: Some("2..20".parse().unwrap()), ..Default::default() };
        let v = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&v).unwrap(), c);
    }
}
