//! Pricing game between a fixed-power EV charging station and one that
//! provides frequency regulation by varying its charging power.
//!
//! Both stations sell the same energy demand `C_B` per EV to users whose
//! sensitivity θ is exponentially distributed. The crate evaluates market
//! shares and revenues, best responses and Nash equilibria, the optimal default
//! power of the regulation station, a monopoly benchmark, viability maps over
//! the reward plane, and a Monte Carlo charging simulator.

pub mod best_response;
pub mod charge_sim;
pub mod design_optimizer;
pub mod equilibrium;
pub mod error;
pub mod format;
pub mod market_model;
pub mod oracle;
pub mod region_analysis;
pub mod search;

pub use best_response::{
    er_thresholds, fixed_power_price, reg_best_response, reg_revenue_derivative, simple_best_response, RegBestResponse,
    RegBranch, Side, SimpleBestResponse, SimpleBranch,
};
pub use charge_sim::{
    empirical_slot_revenue, simulate_charge, write_trace_csv, ChargeTrace, Signal, SlotRecord, SlotRevenueStats,
};
pub use design_optimizer::{
    monopoly_revenue, optimize_x, solve_monopoly, solve_monopoly_with, DesignResult, MonopolyResult, MonopolySearch,
};
pub use equilibrium::{
    classify_case, n1_threshold, solve_nash, solve_nash_with, verify_nash, CertificationReport, EquilibriumOutcome,
    NashCase,
};
pub use error::{Error, Result};
pub use market_model::{
    derive_power_stats, market_shares, per_kwh_regulation, revenues_with_er, slot_revenue, station_revenues,
    user_welfare, MarketEnv, MarketShares, PowerStats, PriceProfile, Revenues, RewardSchedule,
};
pub use oracle::{
    best_response_iteration, grid_best_response, grid_nash, welfare_quadrature, NashGrid, PriceGrid, Station,
};
pub use region_analysis::{
    classify_cell, competition_margin, competition_viable, load_rewards_csv, monopoly_margin, monopoly_viable,
    read_region_csv, scan_region, write_region_csv, AxisRange, ConditionSign, Mode, RegionCell, RegionGrid,
    RegionOptions, RegionStatus, RewardSample,
};
