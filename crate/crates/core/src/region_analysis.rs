//! Viability and optimal-design maps over the reward plane `(r_d, r_u)`.

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::best_response::fixed_power_price;
use crate::design_optimizer::{monopoly_objective_scan, optimize_x, x_grid, MonopolySearch};
use crate::error::{Error, Result};
use crate::format::fixed6;
use crate::market_model::{derive_power_stats, per_kwh_regulation, MarketEnv, PowerStats, RewardSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Competition,
    Monopoly,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Competition => "competition",
            Mode::Monopoly => "monopoly",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "competition" | "nash" => Ok(Mode::Competition),
            "monopoly" => Ok(Mode::Monopoly),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// Sign of the `P̄ P_A / P_d²` term in the monopoly viability condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ConditionSign {
    #[default]
    Plus,
    Minus,
}

impl ConditionSign {
    pub fn flipped(self) -> Self {
        match self {
            ConditionSign::Plus => ConditionSign::Minus,
            ConditionSign::Minus => ConditionSign::Plus,
        }
    }
}

impl fmt::Display for ConditionSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionSign::Plus => "plus",
            ConditionSign::Minus => "minus",
        })
    }
}

impl FromStr for ConditionSign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plus" | "+" => Ok(ConditionSign::Plus),
            "minus" | "-" => Ok(ConditionSign::Minus),
            other => Err(format!("unknown sign `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionStatus {
    Infeasible,
    OptXZero,
    OptXOne,
    OptXInterior(f64),
}

impl RegionStatus {
    fn from_x(x: f64) -> Self {
        if x <= 0.0 {
            RegionStatus::OptXZero
        } else if x >= 1.0 {
            RegionStatus::OptXOne
        } else {
            RegionStatus::OptXInterior(x)
        }
    }

    pub fn x_star(&self) -> Option<f64> {
        match *self {
            RegionStatus::Infeasible => None,
            RegionStatus::OptXZero => Some(0.0),
            RegionStatus::OptXOne => Some(1.0),
            RegionStatus::OptXInterior(x) => Some(x),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            RegionStatus::Infeasible => "Infeasible",
            RegionStatus::OptXZero => "OptX_Zero",
            RegionStatus::OptXOne => "OptX_One",
            RegionStatus::OptXInterior(_) => "OptX_Interior",
        }
    }

    pub fn is_viable(&self) -> bool {
        !matches!(self, RegionStatus::Infeasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCell {
    pub r_u: f64,
    pub r_d: f64,
    pub mode: Mode,
    pub status: RegionStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardSample {
    pub r_u: f64,
    pub r_d: f64,
    pub label: String,
}

/// Inclusive range `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter { name: "range step", value: step, rule: "> 0" });
        }
        if !(stop >= start && start.is_finite() && stop.is_finite()) {
            return Err(Error::InvalidParameter { name: "range stop", value: stop, rule: ">= start" });
        }
        Ok(Self { start, stop, step })
    }

    pub fn len(&self) -> usize {
        let n = (self.stop - self.start) / self.step;
        let r = n.round();
        let k = if (n - r).abs() < 1e-9 { r } else { n.floor() };
        k as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for AxisRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Parse { line: 0, message: format!("range `{s}` is not of the form a:b:s") };
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.trim().parse().map_err(|_| bad())?;
        }
        AxisRange::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionGrid {
    pub r_u: AxisRange,
    pub r_d: AxisRange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOptions {
    pub sign: ConditionSign,
    /// Resolution of the monopoly objective scan used for x*.
    pub monopoly_search: MonopolySearch,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self {
            sign: ConditionSign::Plus,
            monopoly_search: MonopolySearch { price_step: 2e-3, x_step: 0.05, refine_tol: None },
        }
    }
}

/// `E_r(x) + (P_A/P_d)·T_s*(x)`; positive iff the equilibrium leaves the
/// regulation station a positive revenue.
pub fn competition_margin(env: &MarketEnv, rw: &RewardSchedule, stats: &PowerStats) -> Result<f64> {
    let e_r = per_kwh_regulation(env, rw, stats)?;
    Ok(e_r - -(stats.p_a / env.p_d) * fixed_power_price(env, stats))
}

pub fn monopoly_margin(env: &MarketEnv, rw: &RewardSchedule, stats: &PowerStats, sign: ConditionSign) -> f64 {
    let x = stats.x;
    let base = env.rho_u * rw.r_u * x - env.rho_d * (1.0 - rw.r_d) * (1.0 - x) - x;
    let term = stats.p_bar * stats.p_a / (env.p_d * env.p_d);
    match sign {
        ConditionSign::Plus => base + term,
        ConditionSign::Minus => base - term,
    }
}

/// First argmax of `margin` over the x grid, and whether it is positive.
fn best_on_x_grid<F: Fn(&PowerStats) -> Option<f64>>(env: &MarketEnv, margin: F) -> (bool, Option<f64>) {
    let mut best: Option<(f64, f64)> = None;
    for x in x_grid() {
        let Ok(stats) = derive_power_stats(env, x) else { continue };
        let Some(m) = margin(&stats) else { continue };
        if best.map_or(true, |(_, b)| m > b) {
            best = Some((x, m));
        }
    }
    match best {
        Some((x, m)) if m > 0.0 => (true, Some(x)),
        _ => (false, None),
    }
}

pub fn competition_viable(env: &MarketEnv, rw: &RewardSchedule) -> (bool, Option<f64>) {
    best_on_x_grid(env, |s| competition_margin(env, rw, s).ok())
}

pub fn monopoly_viable(env: &MarketEnv, rw: &RewardSchedule, sign: ConditionSign) -> (bool, Option<f64>) {
    best_on_x_grid(env, |s| Some(monopoly_margin(env, rw, s, sign)))
}

pub fn classify_cell(env: &MarketEnv, rw: &RewardSchedule, mode: Mode, opts: &RegionOptions) -> Result<RegionStatus> {
    match mode {
        Mode::Competition => match optimize_x(env, rw) {
            Ok(d) => Ok(RegionStatus::from_x(d.x_star)),
            Err(Error::AllInfeasible) => Ok(RegionStatus::Infeasible),
            Err(e) => Err(e),
        },
        Mode::Monopoly => {
            if !monopoly_viable(env, rw, opts.sign).0 {
                return Ok(RegionStatus::Infeasible);
            }
            let scan = monopoly_objective_scan(env, rw, &opts.monopoly_search);
            let mut best: Option<(f64, f64)> = None;
            for (x, _, v) in scan {
                if best.map_or(true, |(_, b)| v >= b) {
                    best = Some((x, v));
                }
            }
            Ok(best.map_or(RegionStatus::Infeasible, |(x, _)| RegionStatus::from_x(x)))
        }
    }
}

/// Classifies every cell, row-major in `(r_d, r_u)`.
pub fn scan_region(
    env: &MarketEnv,
    delta: f64,
    grid: &RegionGrid,
    mode: Mode,
    opts: &RegionOptions,
) -> Result<Vec<RegionCell>> {
    let r_us = grid.r_u.values();
    let r_ds = grid.r_d.values();
    let pairs: Vec<(f64, f64)> = r_ds.iter().flat_map(|&r_d| r_us.iter().map(move |&r_u| (r_u, r_d))).collect();
    pairs
        .into_par_iter()
        .map(|(r_u, r_d)| {
            let rw = RewardSchedule { r_u, r_d, delta };
            rw.validate()?;
            Ok(RegionCell { r_u, r_d, mode, status: classify_cell(env, &rw, mode, opts)? })
        })
        .collect()
}

pub fn load_rewards_csv<R: Read>(reader: R) -> Result<Vec<RewardSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if !(names == ["r_u", "r_d"] || names == ["r_u", "r_d", "label"]) {
        return Err(Error::Parse {
            line: headers.position().map_or(1, |p| p.line()),
            message: format!("expected header `r_u,r_d[,label]`, found `{}`", names.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&e, 0))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() < 2 || rec.len() > 3 {
            return Err(Error::Parse { line, message: format!("expected 2 or 3 fields, found {}", rec.len()) });
        }
        let field = |k: usize, name: &str| -> Result<f64> {
            let v: f64 = rec[k]
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("{name}: `{}` is not a number", &rec[k]) })?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parse { line, message: format!("{name}: {v} must be finite and >= 0") });
            }
            Ok(v)
        };
        out.push(RewardSample {
            r_u: field(0, "r_u")?,
            r_d: field(1, "r_d")?,
            label: rec.get(2).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

fn csv_error(e: &csv::Error, fallback: u64) -> Error {
    Error::Parse { line: e.position().map_or(fallback, |p| p.line()), message: e.to_string() }
}

pub const REGION_HEADER: &str = "r_u,r_d,mode,status,x_star";

/// Writes `# key=value` metadata lines, the header, then one row per cell.
pub fn write_region_csv<W: Write>(mut w: W, cells: &[RegionCell], metadata: &[(&str, String)]) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{REGION_HEADER}")?;
    for c in cells {
        let x = c.status.x_star().map(fixed6).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", fixed6(c.r_u), fixed6(c.r_d), c.mode, c.status.tag(), x)?;
    }
    Ok(())
}

pub fn read_region_csv<R: Read>(reader: R) -> Result<Vec<RegionCell>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != REGION_HEADER {
        return Err(Error::Parse { line: 1, message: format!("expected header `{REGION_HEADER}`") });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&e, 0))?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |m: String| Error::Parse { line, message: m };
        let num = |k: usize| rec[k].parse::<f64>().map_err(|_| err(format!("bad number `{}`", &rec[k])));
        let mode: Mode = rec[2].parse().map_err(err)?;
        let status = match &rec[3] {
            "Infeasible" => RegionStatus::Infeasible,
            "OptX_Zero" => RegionStatus::OptXZero,
            "OptX_One" => RegionStatus::OptXOne,
            "OptX_Interior" => RegionStatus::OptXInterior(num(4)?),
            other => return Err(err(format!("unknown status `{other}`"))),
        };
        out.push(RegionCell { r_u: num(0)?, r_d: num(1)?, mode, status });
    }
    Ok(out)
}
