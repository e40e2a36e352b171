//! Best-response prices of both stations.

use std::fmt;

use crate::error::Result;
use crate::market_model::{MarketEnv, PowerStats, PriceProfile};
use crate::search::bisect;

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimpleBranch {
    /// Undercut: `t + (P_d − P_A) θ̄ / C_B`.
    Interior,
    /// Unconstrained optimum `t + P_d θ̄ / C_B`.
    Capped,
    /// Match the regulation offer: `T_r P_d / P_A`.
    Matching,
}

impl fmt::Display for SimpleBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimpleBranch::Interior => "Interior_5a",
            SimpleBranch::Capped => "Capped_5b",
            SimpleBranch::Matching => "Matching_5c",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleBestResponse {
    pub t_s: f64,
    pub branch: SimpleBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegBranch {
    /// No positive-margin price exists; price at the share boundary.
    Exit,
    Zero,
    InteriorRoot,
}

impl fmt::Display for RegBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegBranch::Exit => "Exit_7a",
            RegBranch::Zero => "Zero_7b",
            RegBranch::InteriorRoot => "InteriorRoot_7c",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegBestResponse {
    pub t_r: f64,
    pub branch: RegBranch,
    /// ∂R_r/∂T_r at `t_r`, only for the interior branch.
    pub foc_residual: Option<f64>,
}

/// Which one-sided limit to take at `T_r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `t + (P_d − P_A) θ̄ / C_B`, the fixed-power price whenever it undercuts.
pub fn fixed_power_price(env: &MarketEnv, stats: &PowerStats) -> f64 {
    env.t + (env.p_d - stats.p_a) * env.theta_bar / env.c_b
}

pub fn simple_best_response(env: &MarketEnv, stats: &PowerStats, t_r: f64) -> SimpleBestResponse {
    let ratio = stats.p_a / env.p_d;
    let undercut = fixed_power_price(env, stats);
    let capped = env.t + env.p_d * env.theta_bar / env.c_b;
    if t_r < undercut * ratio {
        SimpleBestResponse { t_s: undercut, branch: SimpleBranch::Interior }
    } else if t_r > capped * ratio {
        SimpleBestResponse { t_s: capped, branch: SimpleBranch::Capped }
    } else {
        SimpleBestResponse { t_s: t_r * env.p_d / stats.p_a, branch: SimpleBranch::Matching }
    }
}

/// Thresholds `(E_{r,1}, E_{r,2})` on E_r at which ∂R_r/∂T_r vanishes at
/// `T_r = 0⁺` and `T_r = 0⁻` respectively.
pub fn er_thresholds(env: &MarketEnv, stats: &PowerStats, t_s: f64) -> (f64, f64) {
    let gap = env.p_d - stats.p_a;
    let scale = env.theta_bar * gap / env.c_b;
    let k = t_s / scale;
    let q = env.p_d / stats.p_a - 1.0;
    let e_r1 = scale * -(-k).exp_m1() / (q + (-k).exp());
    let e_r2 = scale * k.exp_m1();
    (e_r1, e_r2)
}

pub fn reg_revenue_derivative(env: &MarketEnv, stats: &PowerStats, e_r: f64, prices: PriceProfile, side: Side) -> f64 {
    let PriceProfile { t_s, t_r } = prices;
    let c = env.c_b;
    let th = env.theta_bar;
    let gap = env.p_d - stats.p_a;
    let margin = t_r + e_r;
    let b = (-c * (t_s - t_r) / (th * gap)).exp();
    let lower = b * (1.0 + c * margin / (th * gap));
    let left = t_r < 0.0 || (t_r == 0.0 && side == Side::Left);
    if left {
        c * (1.0 - lower)
    } else if t_r > stats.p_a / env.p_d * t_s {
        0.0
    } else {
        let a = (-c * t_r / (th * stats.p_a)).exp();
        c * (a * (1.0 - c * margin / (th * stats.p_a)) - lower)
    }
}

pub fn reg_best_response(env: &MarketEnv, stats: &PowerStats, e_r: f64, t_s: f64) -> Result<RegBestResponse> {
    let ratio = stats.p_a / env.p_d;
    if t_s <= -e_r * env.p_d / stats.p_a {
        return Ok(RegBestResponse { t_r: ratio * t_s, branch: RegBranch::Exit, foc_residual: None });
    }
    let (e_r1, e_r2) = er_thresholds(env, stats, t_s);
    if e_r1 <= e_r && e_r <= e_r2 {
        return Ok(RegBestResponse { t_r: 0.0, branch: RegBranch::Zero, foc_residual: None });
    }

    let lo = 0f64.min(-e_r);
    let hi = 0f64.max((env.theta_bar * stats.p_a / env.c_b - e_r).min(ratio * t_s));
    let shrink = 1e-15 * lo.abs().max(hi.abs());
    let deriv = |t_r: f64| reg_revenue_derivative(env, stats, e_r, PriceProfile::new(t_s, t_r), Side::Right);
    let t_r = bisect(deriv, lo + shrink, hi - shrink, ROOT_TOL, ROOT_MAX_ITER)?;
    Ok(RegBestResponse { t_r, branch: RegBranch::InteriorRoot, foc_residual: Some(deriv(t_r)) })
}
