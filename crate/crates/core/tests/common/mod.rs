#![allow(dead_code)]

use evcharge_core::{MarketEnv, RewardSchedule};

/// Baseline environment with the given mean sensitivity.
pub fn env_with_theta(theta_bar: f64) -> MarketEnv {
    MarketEnv { t: 0.03, theta_bar, c_b: 50.0, gamma: 0.05, rho_u: 0.48, rho_d: 0.48, p_d: 20.0 }
}

pub fn e0() -> MarketEnv {
    env_with_theta(0.3)
}

pub fn rewards(r_u: f64, r_d: f64) -> RewardSchedule {
    RewardSchedule { r_u, r_d, delta: 0.1 }
}

pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!((actual - expected).abs() <= tol, "{what}: got {actual}, expected {expected} (tol {tol})");
}

pub fn assert_rel(actual: f64, expected: f64, rel: f64, what: &str) {
    let scale = expected.abs().max(1e-300);
    assert!((actual - expected).abs() <= rel * scale, "{what}: got {actual}, expected {expected} (rel {rel})");
}

use evcharge_core::{derive_power_stats, per_kwh_regulation, PowerStats};
use proptest::prelude::*;

/// A random valid scenario with its derived statistics and E_r.
#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub env: MarketEnv,
    pub rw: RewardSchedule,
    pub x: f64,
    pub stats: PowerStats,
    pub e_r: f64,
}

pub fn scenario() -> impl Strategy<Value = Scenario> {
    (
        (0.01f64..0.08, 0.05f64..0.5, 20.0f64..80.0, 0.0f64..0.5),
        (0.05f64..0.5, 0.05f64..0.5, 10.0f64..40.0),
        (0.0f64..4.0, 0.0f64..1.0, 0.0f64..=1.0),
    )
        .prop_filter_map("invalid scenario", |((t, theta_bar, c_b, gamma), (rho_u, rho_d, p_d), (r_u, r_d, x))| {
            let env = MarketEnv { t, theta_bar, c_b, gamma, rho_u, rho_d, p_d };
            let rw = RewardSchedule { r_u, r_d, delta: 0.1 };
            let stats = derive_power_stats(&env, x).ok()?;
            let e_r = per_kwh_regulation(&env, &rw, &stats).ok()?;
            Some(Scenario { env, rw, x, stats, e_r })
        })
}
