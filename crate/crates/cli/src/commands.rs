//! One function per subcommand: config in, table or ledger out.

use crate::table::{golden, Cell, Table};
use gasket_walk::classical::{classical_exponents, exact, phi_orbit_exact, to_f64, triple_orbit_exact};
use gasket_walk::config::{Check, Command, ExclusionEvent, Manifest, RunConfig};
use gasket_walk::observables::{
    delta_eta, exit_distributions, exponent_beta_gamma, limit_blocks, limit_gap, recurrence_scan, series, ExponentFit, LimitChoice, Series,
};
use gasket_walk::oracle::{evolve_absorbing, AbsorbingEvolution};
use gasket_walk::passage::{expected_passage_time, passage_probability, Block};
use gasket_walk::{CoinKind, DirectedState, Direction, Gasket, Site, Target, WalkError};
use serde_json::{json, Value};
use std::time::Instant;

pub enum Output {
    Table(Table),
    Json(Value),
}

/// A math-layer failure with the stage it came from.
#[derive(Debug, thiserror::Error)]
#[error("{context}: {source}")]
pub struct Failure {
    pub context: String,
    #[source]
    pub source: WalkError,
}

type Res<T> = std::result::Result<T, Failure>;

trait Context<T> {
    fn at(self, context: impl FnOnce() -> String) -> Res<T>;
}

impl<T> Context<T> for gasket_walk::Result<T> {
    fn at(self, context: impl FnOnce() -> String) -> Res<T> {
        self.map_err(|source| Failure { context: context(), source })
    }
}

const STARTS: [u8; 4] = [0, 1, 4, 5];
const PASSAGE_TARGETS: [Target; 4] = [Target::A, Target::B, Target::APrime, Target::BPrime];

struct Timer<'a> {
    m: &'a mut Manifest,
}

impl Timer<'_> {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let r = f();
        self.m.timings.push((stage.to_string(), t0.elapsed().as_secs_f64()));
        r
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { context: "configuration".into(), source: WalkError::Config(msg.into()) }
}

fn exclusion(m: &mut Manifest, context: String, nodes: usize, total: usize) {
    if nodes > 0 {
        m.exclusions.push(ExclusionEvent { context, nodes, total });
    }
}

pub fn run(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let cmd = cfg.command.ok_or_else(|| usage("no command"))?;
    match cmd {
        Command::Lattice => lattice(cfg, m),
        Command::ExitDist => exit_dist(cfg, m),
        Command::Recurrence => recurrence(cfg, m),
        Command::Exponents => exponents(cfg, m),
        Command::Passage => passage(cfg, m),
        Command::Classical => classical(cfg, m),
        Command::Oracle => oracle(cfg, m),
        Command::PlotData => plot_data(cfg, m),
    }
}

fn levels(cfg: &RunConfig) -> Res<gasket_walk::config::LevelRange> {
    cfg.levels().at(|| "configuration".into())
}

fn single_level(cfg: &RunConfig) -> Res<u32> {
    let r = levels(cfg)?;
    if r.lo != r.hi {
        return Err(usage(format!("this command takes a single level, got {r}")));
    }
    Ok(r.hi)
}

fn lattice(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let n = single_level(cfg)?;
    let g = Timer { m }.time("build", || Gasket::build(n)).at(|| format!("level {n}"))?;
    let mut t = Table::new(&["x1", "x2", "out_dirs"]);
    for (x, y, dirs) in g.records() {
        t.push(vec![x.into(), y.into(), dirs.into()]);
    }
    let want = 2 * gasket_walk::topology::copy_site_count(n) - 1;
    m.checks.push(Check::at_most("site_count", (g.site_count() as f64 - want as f64).abs(), 0.0));
    Ok(Output::Table(t))
}

fn exit_dist(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let r = levels(cfg)?;
    let grid = cfg.quadrature.grid().at(|| "configuration".into())?;
    let dists = Timer { m }.time("exit_distributions", || exit_distributions(r.hi, &grid, cfg.coin)).at(|| format!("exit distributions up to level {}", r.hi))?;
    let mut t = Table::new(&["n", "target", "i", "j", "value", "exact"]);
    let mut excess = 0.0f64;
    for d in dists.iter().filter(|d| d.level >= r.lo) {
        exclusion(m, format!("exit-dist level {}", d.level), d.excluded_nodes, grid.nodes);
        for (target, i, j, v) in d.rows() {
            t.push(vec![d.level.into(), target.to_string().into(), i.into(), j.into(), v.into(), golden(v)]);
        }
        for i in 0..4 {
            excess = excess.max(d.row_total(i) - 1.0);
        }
    }
    m.checks.push(Check::at_most("exit_total_excess", excess.max(0.0), cfg.tolerances.conservation));
    Ok(Output::Table(t))
}

fn recurrence(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let r = levels(cfg)?;
    let grid = cfg.quadrature.grid().at(|| "configuration".into())?;
    let scan = Timer { m }.time("recurrence_scan", || recurrence_scan(r.hi, &grid)).at(|| format!("recurrence scan up to level {}", r.hi))?;
    let mut t = Table::new(&["n", "k", "value", "std_err"]);
    for (l, ints) in scan.iter().enumerate() {
        let n = l as u32 + 1;
        if n < r.lo {
            continue;
        }
        exclusion(m, format!("recurrence level {n}"), ints.excluded.len(), ints.total);
        for (k, v) in ints.values.iter().enumerate() {
            let se = ints.std_err.as_ref().map(|s| s[k]);
            t.push(vec![n.into(), (k + 1).into(), (*v).into(), se.into()]);
        }
    }
    Ok(Output::Table(t))
}

fn fit_rows(t: &mut Table, name: &str, f: &ExponentFit, cols: [u8; 4]) {
    for (i, row) in f.slopes.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            let fit = f.fits.iter().find(|(ij, _)| *ij == (i, j)).map(|(_, fit)| fit);
            t.push(vec![
                name.into(),
                STARTS[i].into(),
                cols[j].into(),
                (*s).into(),
                fit.map(|x| x.intercept).into(),
                fit.map(|x| x.r2).into(),
                fit.map_or(0, |x| x.points.len()).into(),
                if s.is_none() { "NA" } else { "" }.into(),
            ]);
        }
    }
}

fn exponents(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let r = levels(cfg)?;
    let fr = cfg.fit_range().at(|| "configuration".into())?;
    let grid = cfg.quadrature.grid().at(|| "configuration".into())?;
    let choice = cfg.limit();
    let dists = Timer { m }.time("exit_distributions", || exit_distributions(r.hi, &grid, cfg.coin)).at(|| format!("exit distributions up to level {}", r.hi))?;
    for d in &dists {
        exclusion(m, format!("exponents level {}", d.level), d.excluded_nodes, grid.nodes);
    }
    if choice == LimitChoice::Deepest {
        if let Some(gap) = limit_gap(&dists) {
            m.checks.push(Check::at_most("limit_gap", gap, cfg.tolerances.limit_gap));
        }
    }
    let range = (fr.lo, fr.hi);
    let (beta, gamma) = exponent_beta_gamma(&dists, range, choice).at(|| format!("beta/gamma fit over {fr}"))?;
    let de = delta_eta(&dists, range, choice).at(|| format!("delta/eta fit over {fr}"))?;
    let mut t = Table::new(&["exponent", "i", "j", "slope", "intercept", "r2", "points", "na"]);
    fit_rows(&mut t, "beta", &beta, Target::Origin.directions());
    fit_rows(&mut t, "gamma", &gamma, Target::A.directions());
    for (name, f) in [("delta", &de.delta), ("eta", &de.eta)] {
        t.push(vec![name.into(), Cell::Missing, Cell::Missing, f.slope.into(), f.intercept.into(), f.r2.into(), f.points.len().into(), "".into()]);
    }
    Ok(Output::Table(t))
}

fn corner_rows(t: &mut Table, kind: &str, blocks: &[Block; 4]) {
    for (target, b) in PASSAGE_TARGETS.iter().zip(blocks) {
        for (i, row) in b.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t.push(vec![kind.into(), target.to_string().into(), STARTS[i].into(), target.directions()[j].into(), v.into(), golden(v)]);
            }
        }
    }
}

fn total_rows(t: &mut Table, kind: &str, v: &[f64; 4]) {
    for (i, &x) in v.iter().enumerate() {
        t.push(vec![kind.into(), "all".into(), STARTS[i].into(), Cell::Missing, x.into(), golden(x)]);
    }
}

fn passage(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let n = single_level(cfg)?;
    let grid = cfg.quadrature.grid().at(|| "configuration".into())?;
    let cap = match cfg.coin {
        CoinKind::Quantum => cfg.tolerances.passage_level_cap,
        CoinKind::Classical => n,
    };
    let mut t = Table::new(&["quantity", "target", "i", "j", "value", "exact"]);
    match cfg.observable.as_deref().unwrap_or("prob") {
        "prob" => {
            let p = Timer { m }.time("passage_probability", || passage_probability(n, &grid, cfg.coin, cap)).at(|| format!("passage probability at level {n}"))?;
            exclusion(m, format!("passage level {n}"), p.excluded_nodes, grid.nodes);
            corner_rows(&mut t, "probability", &p.blocks);
            total_rows(&mut t, "total", &p.totals);
            let excess = p.totals.iter().fold(0.0f64, |a, x| a.max(x - 1.0));
            m.checks.push(Check::at_most("passage_total_excess", excess, cfg.tolerances.conservation));
        }
        "etime" => {
            let e = Timer { m }.time("expected_passage_time", || expected_passage_time(n, &grid, cfg.coin, cap)).at(|| format!("passage time at level {n}"))?;
            exclusion(m, format!("passage level {n}"), e.excluded_nodes, grid.nodes);
            corner_rows(&mut t, "contribution", &e.contributions);
            total_rows(&mut t, "expected", &e.expected);
            total_rows(&mut t, "probability", &e.probability);
            total_rows(&mut t, "conditional", &e.conditional);
            m.checks.push(Check::at_most("imag_residue", e.imag_residue, cfg.tolerances.imag_residue));
        }
        other => return Err(usage(format!("unknown passage observable {other:?} (prob|etime)"))),
    }
    Ok(Output::Table(t))
}

fn classical(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let k = single_level(cfg)?;
    let ctx = || format!("classical orbit to level {k}");
    match cfg.observable.as_deref().unwrap_or("triple") {
        "phi" => {
            let orbit = Timer { m }.time("phi_orbit", || phi_orbit_exact(exact(0, 1), exact(1, 4), k)).at(ctx)?;
            let mut t = Table::new(&["n", "phi0", "phi1", "phi0_exact", "phi1_exact"]);
            let mut drift = 0.0f64;
            for (l, (p0, p1)) in orbit.iter().enumerate() {
                let (a, b) = (to_f64(p0), to_f64(p1));
                drift = drift.max((a + 4.0 * b - 1.0).abs());
                t.push(vec![(l + 1).into(), a.into(), b.into(), p0.to_string().into(), p1.to_string().into()]);
            }
            m.checks.push(Check::at_most("phi_conservation", drift, cfg.tolerances.conservation));
            Ok(Output::Table(t))
        }
        "triple" => {
            let orbit = Timer { m }.time("triple_orbit", || triple_orbit_exact(k)).at(ctx)?;
            let mut t = Table::new(&["n", "u1", "u2", "u3", "u1_exact", "u2_exact", "u3_exact"]);
            for (l, u) in orbit.iter().enumerate() {
                let mut row: Vec<Cell> = vec![(l + 1).into()];
                row.extend(u.iter().map(|x| Cell::from(to_f64(x))));
                row.extend(u.iter().map(|x| Cell::from(x.to_string())));
                t.push(row);
            }
            Ok(Output::Table(t))
        }
        "exponents" => {
            if k < 2 {
                return Err(usage("classical exponents need --levels >= 2"));
            }
            let e = Timer { m }.time("classical_exponents", || classical_exponents(k, k)).at(ctx)?;
            let mut t = Table::new(&["quantity", "n", "value", "exact"]);
            let mut push = |q: &str, n: Option<usize>, v: f64| t.push(vec![q.into(), n.map_or(Cell::Missing, Cell::from), v.into(), golden(v)]);
            e.passage_times.iter().enumerate().for_each(|(l, &v)| push("passage_time", Some(l + 1), v));
            e.exit_times.iter().enumerate().for_each(|(l, &v)| push("exit_time", Some(l), v));
            e.passage_ratios.iter().enumerate().for_each(|(l, &v)| push("passage_ratio", Some(l + 1), v));
            e.exit_ratios.iter().enumerate().for_each(|(l, &v)| push("exit_ratio", Some(l), v));
            push("d_w", None, e.d_w);
            push("r_w", None, e.r_w);
            Ok(Output::Table(t))
        }
        other => Err(usage(format!("unknown classical observable {other:?} (phi|triple|exponents)"))),
    }
}

/// `x,y,eK` or `x,y,K`.
pub fn parse_start(s: &str) -> Option<DirectedState> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y, d] = parts.as_slice() else { return None };
    let d: u8 = d.strip_prefix('e').unwrap_or(d).parse().ok()?;
    Some(DirectedState::new(Site::new(x.parse().ok()?, y.parse().ok()?), Direction::new(d)?))
}

fn state_json(s: &DirectedState) -> Value {
    json!({ "x": s.site.x, "y": s.site.y, "dir": s.dir.index() })
}

fn ledger(e: &AbsorbingEvolution, max_defect: Option<f64>) -> Value {
    let captures: Vec<Value> = e
        .captures
        .iter()
        .map(|c| json!({ "t": c.t, "x": c.state.site.x, "y": c.state.site.y, "dir": c.state.dir.index(), "re": c.amp.re, "im": c.amp.im }))
        .collect();
    let channels: Vec<Value> = e
        .channel_totals()
        .iter()
        .map(|(s, p)| {
            let mut v = state_json(s);
            v["probability"] = json!(p);
            v
        })
        .collect();
    json!({
        "level": e.level,
        "coin": e.coin,
        "absorb": e.absorb,
        "start": state_json(&e.start),
        "t_max": e.t_max,
        "captures": captures,
        "channel_totals": channels,
        "captured_total": e.captured_total(),
        "truncated_time": e.truncated_time(),
        "live_mass": e.live_mass,
        "max_mass_defect": max_defect,
    })
}

fn oracle(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let n = single_level(cfg)?;
    let start = parse_start(&cfg.start).ok_or_else(|| usage(format!("invalid start state {:?} (expected x,y,eK)", cfg.start)))?;
    let e = Timer { m }
        .time("evolve", || evolve_absorbing(n, start, cfg.t_max, cfg.absorb, cfg.coin))
        .at(|| format!("absorbing evolution at level {n} from {start}"))?;
    let max_defect = (cfg.coin == CoinKind::Quantum).then(|| e.mass_defects().into_iter().fold(0.0f64, f64::max));
    if let Some(d) = max_defect {
        m.checks.push(Check::at_most("mass_balance", d, cfg.tolerances.conservation));
    }
    match cfg.output.format {
        gasket_walk::config::Format::Json => Ok(Output::Json(ledger(&e, max_defect))),
        gasket_walk::config::Format::Csv => {
            let mut t = Table::new(&["t", "x", "y", "dir", "re", "im"]);
            for c in &e.captures {
                t.push(vec![c.t.into(), c.state.site.x.into(), c.state.site.y.into(), c.state.dir.index().into(), c.amp.re.into(), c.amp.im.into()]);
            }
            Ok(Output::Table(t))
        }
    }
}

fn series_rows(t: &mut Table, s: &Series) {
    for &(n, y, f) in &s.rows {
        t.push(vec![s.name.clone().into(), n.into(), y.into(), f.into()]);
    }
}

fn plot_data(cfg: &RunConfig, m: &mut Manifest) -> Res<Output> {
    let r = levels(cfg)?;
    let mut t = Table::new(&["series", "n", "neg_log_value", "fitted_line"]);
    match cfg.observable.as_deref().unwrap_or("exponents") {
        "phi" => {
            let orbit = Timer { m }.time("phi_orbit", || phi_orbit_exact(exact(0, 1), exact(1, 4), r.hi)).at(|| format!("phi orbit to level {}", r.hi))?;
            let seq: Vec<(u32, f64)> = orbit.iter().enumerate().map(|(l, p)| (l as u32 + 1, to_f64(&p.1))).filter(|(n, _)| *n >= r.lo).collect();
            series_rows(&mut t, &series("phi1", &seq));
        }
        "exponents" => {
            let grid = cfg.quadrature.grid().at(|| "configuration".into())?;
            let choice = cfg.limit();
            let dists = Timer { m }.time("exit_distributions", || exit_distributions(r.hi, &grid, cfg.coin)).at(|| format!("exit distributions up to level {}", r.hi))?;
            for d in &dists {
                exclusion(m, format!("plot-data level {}", d.level), d.excluded_nodes, grid.nodes);
            }
            let inf = limit_blocks(&dists, choice);
            let sel: Vec<_> = dists.iter().filter(|d| d.level >= r.lo).collect();
            for (tag, blk, cols) in [("beta", 0usize, Target::Origin.directions()), ("gamma", 1, Target::A.directions())] {
                for i in 0..4 {
                    for j in 0..4 {
                        let seq: Vec<(u32, f64)> = sel
                            .iter()
                            .map(|d| {
                                let v = d.blocks[blk][i][j];
                                (d.level, if blk == 0 { (v - inf[0][i][j]).abs() } else { v })
                            })
                            .collect();
                        series_rows(&mut t, &series(&format!("{tag}:{}:{}", STARTS[i], cols[j]), &seq));
                    }
                }
            }
            let tv: Vec<(u32, f64)> = sel.iter().map(|d| (d.level, gasket_walk::observables::total_variation(d, &inf))).collect();
            series_rows(&mut t, &series("delta", &tv));
            let h = sel
                .iter()
                .map(|d| Ok((d.level, gasket_walk::observables::cross_entropy(d, &inf)?)))
                .collect::<gasket_walk::Result<Vec<_>>>()
                .at(|| "cross entropy".into())?;
            series_rows(&mut t, &series("eta", &h));
        }
        other => return Err(usage(format!("unknown plot family {other:?} (exponents|phi)"))),
    }
    Ok(Output::Table(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gasket_walk::oracle::Absorb;

    #[test]
    fn start_states() {
        let s = parse_start("0,0,e0").unwrap();
        assert_eq!((s.site, s.dir.index()), (Site::ORIGIN, 0));
        assert_eq!(parse_start(" 2, 2, 4 ").unwrap().dir.index(), 4);
        for bad in ["", "0,0", "0,0,e6", "a,0,e1", "0,0,e0,1"] {
            assert!(parse_start(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn absorb_parses() {
        assert_eq!("T".parse::<Absorb>().unwrap(), Absorb::Passage);
    }
}
