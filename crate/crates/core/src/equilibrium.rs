//! Nash equilibrium classification, construction and certification.

use std::fmt;

use crate::best_response::{er_thresholds, fixed_power_price, reg_best_response};
use crate::error::{Error, Result};
use crate::market_model::{
    derive_power_stats, market_shares, per_kwh_regulation, revenues_with_er, user_welfare, MarketEnv, MarketShares,
    PowerStats, PriceProfile, RewardSchedule,
};
use crate::oracle::{PriceGrid, Station};

pub const CERTIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NashCase {
    /// Regulation margin too low: both stations sit on the share boundary.
    N1,
    /// Positive regulation price.
    N2,
    /// Regulation price exactly zero.
    N3,
    /// Negative regulation price.
    N4,
}

impl fmt::Display for NashCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOutcome {
    pub case_tag: NashCase,
    pub x: f64,
    pub prices: PriceProfile,
    pub shares: MarketShares,
    pub r_s: f64,
    pub r_r: f64,
    pub welfare: f64,
    pub e_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificationReport {
    pub max_improvement_simple: f64,
    pub max_improvement_reg: f64,
    pub deviations_checked: usize,
}

impl CertificationReport {
    pub fn max_improvement(&self) -> f64 {
        self.max_improvement_simple.max(self.max_improvement_reg)
    }
}

/// `−(P_A/P_d)·T_s*`: at or below this E_r the equilibrium is N1.
pub fn n1_threshold(env: &MarketEnv, stats: &PowerStats) -> f64 {
    -(stats.p_a / env.p_d) * fixed_power_price(env, stats)
}

pub fn classify_case(env: &MarketEnv, stats: &PowerStats, e_r: f64) -> NashCase {
    if e_r <= n1_threshold(env, stats) {
        return NashCase::N1;
    }
    let (e_r1, e_r2) = er_thresholds(env, stats, fixed_power_price(env, stats));
    if e_r < e_r1 {
        NashCase::N2
    } else if e_r <= e_r2 {
        NashCase::N3
    } else {
        NashCase::N4
    }
}

pub fn solve_nash(env: &MarketEnv, rw: &RewardSchedule, x: f64) -> Result<EquilibriumOutcome> {
    let stats = derive_power_stats(env, x)?;
    let e_r = per_kwh_regulation(env, rw, &stats)?;
    solve_nash_with(env, &stats, e_r)
}

/// [`solve_nash`] for precomputed power statistics and E_r.
pub fn solve_nash_with(env: &MarketEnv, stats: &PowerStats, e_r: f64) -> Result<EquilibriumOutcome> {
    let case_tag = classify_case(env, stats, e_r);
    let prices = match case_tag {
        // Continuum on the share boundary; pick the fixed-power station's
        // favourite point, which is capped at its unconstrained optimum.
        NashCase::N1 => {
            let matched = -e_r * env.p_d / stats.p_a;
            let capped = env.t + env.p_d * env.theta_bar / env.c_b;
            if matched <= capped {
                PriceProfile::new(matched, -e_r)
            } else {
                PriceProfile::new(capped, stats.p_a / env.p_d * capped)
            }
        }
        NashCase::N3 => PriceProfile::new(fixed_power_price(env, stats), 0.0),
        NashCase::N2 | NashCase::N4 => {
            let t_s = fixed_power_price(env, stats);
            PriceProfile::new(t_s, reg_best_response(env, stats, e_r, t_s)?.t_r)
        }
    };
    Ok(outcome_at(env, stats, e_r, case_tag, prices))
}

pub(crate) fn outcome_at(
    env: &MarketEnv,
    stats: &PowerStats,
    e_r: f64,
    case_tag: NashCase,
    prices: PriceProfile,
) -> EquilibriumOutcome {
    let rev = revenues_with_er(env, stats, e_r, prices);
    EquilibriumOutcome {
        case_tag,
        x: stats.x,
        prices,
        shares: market_shares(env, stats, prices),
        r_s: rev.r_s,
        r_r: rev.r_r,
        welfare: user_welfare(env, stats, prices),
        e_r,
    }
}

/// Scans unilateral deviations of both stations over
/// `[t − 0.05, t + 3θ̄P_d/C_B]` and fails on any gain above 1e−6.
pub fn verify_nash(
    env: &MarketEnv,
    rw: &RewardSchedule,
    stats: &PowerStats,
    outcome: &EquilibriumOutcome,
    grid_step: f64,
) -> Result<CertificationReport> {
    let e_r = per_kwh_regulation(env, rw, stats)?;
    let grid = PriceGrid::new(env.t - 0.05, env.t + 3.0 * env.theta_bar * env.p_d / env.c_b, grid_step);
    let p = outcome.prices;
    let base = revenues_with_er(env, stats, e_r, p);

    let mut worst = [(0.0, f64::NEG_INFINITY); 2];
    let mut checked = 0;
    for dev in grid.points() {
        if dev >= 0.0 {
            let gain = revenues_with_er(env, stats, e_r, PriceProfile::new(dev, p.t_r)).r_s - base.r_s;
            if gain > worst[0].1 {
                worst[0] = (dev, gain);
            }
            checked += 1;
        }
        let gain = revenues_with_er(env, stats, e_r, PriceProfile::new(p.t_s, dev)).r_r - base.r_r;
        if gain > worst[1].1 {
            worst[1] = (dev, gain);
        }
        checked += 1;
    }
    for (station, (price, improvement)) in [Station::Simple, Station::Reg].into_iter().zip(worst) {
        if improvement > CERTIFY_TOL {
            return Err(Error::CertificationFailure { station, price, improvement });
        }
    }
    Ok(CertificationReport {
        max_improvement_simple: worst[0].1,
        max_improvement_reg: worst[1].1,
        deviations_checked: checked,
    })
}
