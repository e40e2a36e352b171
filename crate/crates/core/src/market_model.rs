//! Model parameters and the closed-form quantities of the two-station market.

use crate::error::{Error, Result};

/// Immutable economic and physical parameters shared by both stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketEnv {
    /// Wholesale energy price (€/kWh).
    pub t: f64,
    /// Mean user sensitivity θ̄.
    pub theta_bar: f64,
    /// Energy demanded per EV (kWh).
    pub c_b: f64,
    /// Reluctance to power variation.
    pub gamma: f64,
    /// Per-slot probability of a regulation-up signal.
    pub rho_u: f64,
    /// Per-slot probability of a regulation-down signal.
    pub rho_d: f64,
    /// Maximum charging power (kW).
    pub p_d: f64,
}

impl MarketEnv {
    pub fn validate(&self) -> Result<()> {
        positive("t", self.t)?;
        positive("theta_bar", self.theta_bar)?;
        positive("c_b", self.c_b)?;
        non_negative("gamma", self.gamma)?;
        non_negative("rho_u", self.rho_u)?;
        non_negative("rho_d", self.rho_d)?;
        positive("p_d", self.p_d)?;
        let sum = self.rho_u + self.rho_d;
        if sum > 1.0 {
            return Err(Error::InvalidParameter { name: "rho_u + rho_d", value: sum, rule: "<= 1" });
        }
        Ok(())
    }

    /// Probability of a slot without regulation signal.
    pub fn rho_null(&self) -> f64 {
        1.0 - self.rho_u - self.rho_d
    }
}

/// Regulation remuneration ratios and slot length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSchedule {
    pub r_u: f64,
    pub r_d: f64,
    /// Slot duration (hours).
    pub delta: f64,
}

impl RewardSchedule {
    pub fn validate(&self) -> Result<()> {
        non_negative("r_u", self.r_u)?;
        non_negative("r_d", self.r_d)?;
        positive("delta", self.delta)
    }

    /// `r_d > 1` is accepted but lies outside the usual range.
    pub fn discount_above_unity(&self) -> bool {
        self.r_d > 1.0
    }
}

/// Power statistics of the regulation station for a design `x = P_n / P_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerStats {
    pub x: f64,
    pub p_n: f64,
    pub p_bar: f64,
    pub delta_p: f64,
    pub p_a: f64,
}

/// Retail prices of the fixed-power (`t_s`) and regulation (`t_r`) stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceProfile {
    pub t_s: f64,
    pub t_r: f64,
}

impl PriceProfile {
    pub fn new(t_s: f64, t_r: f64) -> Self {
        Self { t_s, t_r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketShares {
    pub alpha_s: f64,
    pub alpha_r: f64,
    pub alpha_none: f64,
}

/// Expected revenue per EV of each station (€).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Revenues {
    pub r_s: f64,
    pub r_r: f64,
}

impl Revenues {
    pub fn total(&self) -> f64 {
        self.r_s + self.r_r
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, rule: "> 0" })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, rule: ">= 0" })
    }
}

pub fn derive_power_stats(env: &MarketEnv, x: f64) -> Result<PowerStats> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter { name: "x", value: x, rule: "in [0, 1]" });
    }
    let p_d = env.p_d;
    let p_n = x * p_d;
    let rho_0 = env.rho_null();
    let p_bar = env.rho_d * p_d + rho_0 * p_n;
    let var =
        env.rho_u * p_bar * p_bar + env.rho_d * (p_d - p_bar) * (p_d - p_bar) + rho_0 * (p_n - p_bar) * (p_n - p_bar);
    let delta_p = var.max(0.0).sqrt();
    let p_a = p_bar - env.gamma * delta_p;
    if !(p_a > 0.0 && p_a < p_d) {
        return Err(Error::PaInvalid { p_a, p_d });
    }
    Ok(PowerStats { x, p_n, p_bar, delta_p, p_a })
}

/// Expected net revenue of one regulation slot, E_Δ (€).
pub fn slot_revenue(env: &MarketEnv, rw: &RewardSchedule, stats: &PowerStats) -> f64 {
    let p_n = stats.p_n;
    env.t * rw.delta * (env.rho_u * rw.r_u * p_n - env.rho_d * (1.0 - rw.r_d) * (env.p_d - p_n) - p_n)
}

/// Net regulation remuneration per delivered kWh, E_r (€/kWh).
pub fn per_kwh_regulation(env: &MarketEnv, rw: &RewardSchedule, stats: &PowerStats) -> Result<f64> {
    if stats.p_bar <= 0.0 {
        return Err(Error::ZeroMeanPower);
    }
    let x = stats.x;
    let margin = env.rho_u * rw.r_u * x - env.rho_d * (1.0 - rw.r_d) * (1.0 - x) - x;
    Ok(env.t * margin * env.p_d / stats.p_bar)
}

/// Per-(env, stats) constants of the share formulas.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ShareModel {
    /// C_B / (θ̄ P_d)
    k_s: f64,
    /// C_B / (θ̄ P_A)
    k_r: f64,
    /// C_B / (θ̄ (P_d − P_A))
    k_d: f64,
    /// P_A / P_d
    ratio: f64,
}

impl ShareModel {
    pub(crate) fn new(env: &MarketEnv, stats: &PowerStats) -> Self {
        let scale = env.c_b / env.theta_bar;
        Self {
            k_s: scale / env.p_d,
            k_r: scale / stats.p_a,
            k_d: scale / (env.p_d - stats.p_a),
            ratio: stats.p_a / env.p_d,
        }
    }

    /// (α_s, α_r)
    #[inline]
    pub(crate) fn shares(&self, t_s: f64, t_r: f64) -> (f64, f64) {
        if t_r >= self.ratio * t_s {
            // The regulation station attracts nobody.
            return ((-self.k_s * t_s).exp(), 0.0);
        }
        let b = (-self.k_d * (t_s - t_r)).exp();
        let alpha_r =
            if t_r < 0.0 { -(-self.k_d * (t_s - t_r)).exp_m1() } else { ((-self.k_r * t_r).exp() - b).max(0.0) };
        (b, alpha_r)
    }
}

pub fn market_shares(env: &MarketEnv, stats: &PowerStats, prices: PriceProfile) -> MarketShares {
    let (alpha_s, alpha_r) = ShareModel::new(env, stats).shares(prices.t_s, prices.t_r);
    MarketShares { alpha_s, alpha_r, alpha_none: (1.0 - alpha_s - alpha_r).max(0.0) }
}

/// Station revenues given an already computed E_r.
pub fn revenues_with_er(env: &MarketEnv, stats: &PowerStats, e_r: f64, prices: PriceProfile) -> Revenues {
    let sh = market_shares(env, stats, prices);
    Revenues { r_s: env.c_b * (prices.t_s - env.t) * sh.alpha_s, r_r: env.c_b * (prices.t_r + e_r) * sh.alpha_r }
}

pub fn station_revenues(
    env: &MarketEnv,
    stats: &PowerStats,
    rw: &RewardSchedule,
    prices: PriceProfile,
) -> Result<Revenues> {
    let e_r = per_kwh_regulation(env, rw, stats)?;
    Ok(revenues_with_er(env, stats, e_r, prices))
}

/// Average user utility per EV (€).
///
/// For `t_r < 0` every user with positive sensitivity prefers the regulation
/// station to abstaining, so the population integral starts at θ = 0.
pub fn user_welfare(env: &MarketEnv, stats: &PowerStats, prices: PriceProfile) -> f64 {
    let sh = market_shares(env, stats, prices);
    let base = sh.alpha_r * env.theta_bar * stats.p_a + sh.alpha_s * env.theta_bar * env.p_d;
    if prices.t_r < 0.0 {
        base - prices.t_r * env.c_b
    } else {
        base
    }
}
