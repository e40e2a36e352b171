//! Choice of the regulation station's default power and the monopoly benchmark.

use rayon::prelude::*;

use crate::equilibrium::{solve_nash, EquilibriumOutcome, NashCase};
use crate::error::{Error, Result};
use crate::market_model::{
    derive_power_stats, market_shares, per_kwh_regulation, revenues_with_er, user_welfare, MarketEnv, MarketShares,
    PowerStats, PriceProfile, RewardSchedule,
};
use crate::search::golden_section_max;

/// Number of intervals of the x scan grid `{0, 1e−3, …, 1}`.
pub const X_GRID_INTERVALS: usize = 1000;
const X_REFINE_TOL: f64 = 1e-6;

/// The scan grid `{0, 1/n, …, 1}` with `n = X_GRID_INTERVALS`.
pub fn x_grid() -> impl Iterator<Item = f64> {
    (0..=X_GRID_INTERVALS).map(|i| i as f64 / X_GRID_INTERVALS as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub x_star: f64,
    pub outcome: EquilibriumOutcome,
    /// `(x, R_r at equilibrium)` for every feasible grid point.
    pub scan: Vec<(f64, f64)>,
}

pub fn optimize_x(env: &MarketEnv, rw: &RewardSchedule) -> Result<DesignResult> {
    let mut scan = Vec::with_capacity(X_GRID_INTERVALS + 1);
    let mut best: Option<EquilibriumOutcome> = None;
    for x in x_grid() {
        let outcome = match solve_nash(env, rw, x) {
            Ok(o) => o,
            Err(Error::PaInvalid { .. }) => continue,
            Err(e) => return Err(e),
        };
        scan.push((x, outcome.r_r));
        if outcome.case_tag != NashCase::N1 && best.map_or(true, |b| outcome.r_r >= b.r_r) {
            best = Some(outcome);
        }
    }
    let mut best = best.ok_or(Error::AllInfeasible)?;

    let half = 1.0 / X_GRID_INTERVALS as f64;
    let lo = (best.x - half).max(0.0);
    let hi = (best.x + half).min(1.0);
    let r_r_at = |x: f64| solve_nash(env, rw, x).map_or(f64::NEG_INFINITY, |o| o.r_r);
    let (x_ref, r_ref) = golden_section_max(r_r_at, lo, hi, X_REFINE_TOL);
    if r_ref > best.r_r {
        let refined = solve_nash(env, rw, x_ref)?;
        if refined.case_tag != NashCase::N1 {
            best = refined;
        }
    }
    Ok(DesignResult { x_star: best.x, outcome: best, scan })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonopolyResult {
    pub prices: PriceProfile,
    pub x_star: f64,
    pub total_revenue: f64,
    pub r_s: f64,
    pub r_r: f64,
    pub shares: MarketShares,
    pub welfare: f64,
}

/// Resolution of the joint monopoly search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonopolySearch {
    /// Common lattice step of both coarse price grids.
    pub price_step: f64,
    pub x_step: f64,
    /// Final step of the coordinate refinement; `None` skips refinement.
    pub refine_tol: Option<f64>,
}

impl Default for MonopolySearch {
    fn default() -> Self {
        Self { price_step: 5e-4, x_step: 1e-2, refine_tol: Some(1e-6) }
    }
}

impl MonopolySearch {
    pub fn x_values(&self) -> Vec<f64> {
        let n = (1.0 / self.x_step + 1e-9).round().max(1.0) as usize;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }
}

/// Total station revenue under a single owner; `None` where `x` is invalid.
pub fn monopoly_revenue(env: &MarketEnv, rw: &RewardSchedule, x: f64, prices: PriceProfile) -> Option<f64> {
    if prices.t_s < 0.0 {
        return None;
    }
    let stats = derive_power_stats(env, x).ok()?;
    let e_r = per_kwh_regulation(env, rw, &stats).ok()?;
    Some(revenues_with_er(env, &stats, e_r, prices).total())
}

/// Best point of the coarse price lattice for a fixed design.
///
/// Prices are `i·h` and `j·h`, so `T_s − T_r` stays on the lattice and every
/// exponential comes from a one-dimensional table.
pub fn monopoly_lattice_max(env: &MarketEnv, stats: &PowerStats, e_r: f64, h: f64) -> (PriceProfile, f64) {
    let c = env.c_b;
    let th = env.theta_bar;
    let ratio = stats.p_a / env.p_d;
    let ts_top = env.t + 3.0 * th * env.p_d / c;
    let n_s = (ts_top / h).ceil() as i64;
    let j_lo = ((0f64.min(-e_r) - 0.01) / h).floor() as i64;
    let j_hi = n_s;

    let k_s = c / (th * env.p_d);
    let k_r = c / (th * stats.p_a);
    let k_d = c / (th * (env.p_d - stats.p_a));
    let e_s: Vec<f64> = (0..=n_s).map(|i| (-k_s * i as f64 * h).exp()).collect();
    let e_r_tab: Vec<f64> = (0..=j_hi.max(0)).map(|j| (-k_r * j as f64 * h).exp()).collect();
    let m_lo = -j_hi;
    let e_d: Vec<f64> = (m_lo..=n_s - j_lo).map(|m| (-k_d * m as f64 * h).exp()).collect();

    let mut best = (PriceProfile::new(0.0, j_hi as f64 * h), f64::NEG_INFINITY);
    for i in 0..=n_s {
        let t_s = i as f64 * h;
        let simple_margin = c * (t_s - env.t);
        // Regulation price at or above the share boundary: no regulation users.
        let j_edge = ((ratio * t_s) / h).ceil() as i64;
        let alone = simple_margin * e_s[i as usize];
        if alone > best.1 {
            best = (PriceProfile::new(t_s, (j_edge.max(j_lo) as f64) * h), alone);
        }
        for j in j_lo..j_edge.min(j_hi + 1) {
            let t_r = j as f64 * h;
            let b = e_d[(i - j - m_lo) as usize];
            let alpha_r = if j < 0 { 1.0 - b } else { (e_r_tab[j as usize] - b).max(0.0) };
            let value = simple_margin * b + c * (t_r + e_r) * alpha_r;
            if value > best.1 {
                best = (PriceProfile::new(t_s, t_r), value);
            }
        }
    }
    best
}

/// Coarse per-design maxima `(x, prices, total)` over the search's x grid.
pub fn monopoly_objective_scan(
    env: &MarketEnv,
    rw: &RewardSchedule,
    search: &MonopolySearch,
) -> Vec<(f64, PriceProfile, f64)> {
    search
        .x_values()
        .into_par_iter()
        .filter_map(|x| {
            let stats = derive_power_stats(env, x).ok()?;
            let e_r = per_kwh_regulation(env, rw, &stats).ok()?;
            let (p, v) = monopoly_lattice_max(env, &stats, e_r, search.price_step);
            Some((x, p, v))
        })
        .collect()
}

/// Compass search on `(T_s, T_r, x)`; step sizes halve until below `tol`.
fn refine(
    env: &MarketEnv,
    rw: &RewardSchedule,
    start: (f64, f64, f64),
    steps: [f64; 3],
    tol: f64,
) -> ((f64, f64, f64), f64) {
    let eval = |p: [f64; 3]| {
        if !(0.0..=1.0).contains(&p[2]) {
            return f64::NEG_INFINITY;
        }
        monopoly_revenue(env, rw, p[2], PriceProfile::new(p[0], p[1])).unwrap_or(f64::NEG_INFINITY)
    };
    let mut p = [start.0, start.1, start.2];
    let mut v = eval(p);
    let mut steps = steps;
    // x is held fixed when its initial step is zero.
    let active: Vec<usize> = (0..3).filter(|&k| steps[k] > 0.0).collect();
    loop {
        let mut improved = false;
        let mut moves: Vec<[f64; 3]> = active
            .iter()
            .map(|&k| {
                let mut d = [0.0; 3];
                d[k] = steps[k];
                d
            })
            .collect();
        // Along the share boundary T_r = (P_A/P_d)·T_s, where axis moves stall.
        if let Ok(stats) = derive_power_stats(env, p[2]) {
            moves.push([steps[0], steps[0] * stats.p_a / env.p_d, 0.0]);
        }
        for d in moves {
            for dir in [1.0, -1.0] {
                let q = [p[0] + dir * d[0], p[1] + dir * d[1], p[2] + dir * d[2]];
                let w = eval(q);
                if w > v {
                    p = q;
                    v = w;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            if active.iter().all(|&k| steps[k] < tol) {
                break;
            }
            for &k in &active {
                steps[k] *= 0.5;
            }
        }
    }
    ((p[0], p[1], p[2]), v)
}

pub fn solve_monopoly(env: &MarketEnv, rw: &RewardSchedule) -> Result<MonopolyResult> {
    solve_monopoly_with(env, rw, &MonopolySearch::default())
}

pub fn solve_monopoly_with(env: &MarketEnv, rw: &RewardSchedule, search: &MonopolySearch) -> Result<MonopolyResult> {
    let scan = monopoly_objective_scan(env, rw, search);
    let (x0, p0, v0) = scan
        .iter()
        .copied()
        .fold(None, |acc: Option<(f64, PriceProfile, f64)>, cand| match acc {
            Some(a) if a.2 > cand.2 => Some(a),
            _ => Some(cand),
        })
        .ok_or(Error::AllInfeasible)?;

    let ((t_s, t_r, x), _) = match search.refine_tol {
        Some(tol) => refine(env, rw, (p0.t_s, p0.t_r, x0), [search.price_step, search.price_step, search.x_step], tol),
        None => ((p0.t_s, p0.t_r, x0), v0),
    };
    let stats = derive_power_stats(env, x)?;
    let e_r = per_kwh_regulation(env, rw, &stats)?;
    let prices = PriceProfile::new(t_s, t_r);
    let rev = revenues_with_er(env, &stats, e_r, prices);
    Ok(MonopolyResult {
        prices,
        x_star: x,
        total_revenue: rev.total(),
        r_s: rev.r_s,
        r_r: rev.r_r,
        shares: market_shares(env, &stats, prices),
        welfare: user_welfare(env, &stats, prices),
    })
}
