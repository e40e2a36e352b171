//! `key = value` scenario files.

use evcharge_core::{MarketEnv, RewardSchedule};

use crate::CliError;

pub const KEYS: [&str; 11] = ["t", "theta_bar", "c_b", "gamma", "rho_u", "rho_d", "p_d", "r_u", "r_d", "delta", "x"];

/// A parsed scenario. Every key except `x` is required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub env: MarketEnv,
    pub rewards: RewardSchedule,
    pub x: Option<f64>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values: [Option<f64>; 11] = [None; 11];
        for (i, raw) in text.lines().enumerate() {
            let line = i as u64 + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let bad = |message: String| CliError::Config { line, message };
            let (key, value) =
                content.split_once('=').ok_or_else(|| bad(format!("expected `key = value`, found `{content}`")))?;
            let key = key.trim();
            let slot = KEYS.iter().position(|k| *k == key).ok_or_else(|| bad(format!("unknown key `{key}`")))?;
            if values[slot].is_some() {
                return Err(bad(format!("duplicate key `{key}`")));
            }
            let value = value.trim();
            let v: f64 = value.parse().map_err(|_| bad(format!("`{key}`: `{value}` is not a number")))?;
            if !v.is_finite() {
                return Err(bad(format!("`{key}` must be finite")));
            }
            values[slot] = Some(v);
        }
        let get = |k: usize| values[k].ok_or(CliError::Missing(KEYS[k]));
        let cfg = ScenarioConfig {
            env: MarketEnv {
                t: get(0)?,
                theta_bar: get(1)?,
                c_b: get(2)?,
                gamma: get(3)?,
                rho_u: get(4)?,
                rho_d: get(5)?,
                p_d: get(6)?,
            },
            rewards: RewardSchedule { r_u: get(7)?, r_d: get(8)?, delta: get(9)? },
            x: values[10],
        };
        cfg.env.validate()?;
        cfg.rewards.validate()?;
        if let Some(x) = cfg.x {
            check_x(x)?;
        }
        Ok(cfg)
    }
}

pub(crate) fn check_x(x: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(evcharge_core::Error::InvalidParameter { name: "x", value: x, rule: "0 <= x <= 1" }.into())
    }
}
