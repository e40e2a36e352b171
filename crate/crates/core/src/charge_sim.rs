//! Monte Carlo charging of a single EV under i.i.d. regulation signals.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fixed6;
use crate::market_model::{MarketEnv, PowerStats, RewardSchedule};
use crate::search::CompensatedSum;

pub const GENERATOR: &str = "ChaCha8Rng";
pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signal {
    Up,
    Down,
    Null,
}

impl Signal {
    pub fn code(&self) -> char {
        match self {
            Signal::Up => 'U',
            Signal::Down => 'D',
            Signal::Null => 'N',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    /// 1-based slot number.
    pub index: usize,
    pub signal: Signal,
    pub power_kw: f64,
    pub cum_energy_kwh: f64,
    /// Net cost paid by the station for this slot (prorated in the final slot).
    pub cost_eur: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeTrace {
    pub slots: Vec<SlotRecord>,
    pub total_cost: f64,
    pub n_slots: usize,
    pub seed: u64,
    pub generator: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRevenueStats {
    /// Mean net station revenue per slot (€).
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub total_slots: u64,
    pub mean_slots: f64,
}

struct SlotModel {
    rho_u: f64,
    rho_ud: f64,
    delta: f64,
    c_b: f64,
    p_d: f64,
    p_n: f64,
    cost_up: f64,
    cost_down: f64,
    cost_null: f64,
}

impl SlotModel {
    fn new(env: &MarketEnv, rw: &RewardSchedule, stats: &PowerStats) -> Result<Self> {
        if stats.p_bar <= 0.0 {
            return Err(Error::NeverCompletes);
        }
        rw.validate()?;
        let (t, d, p_n, p_d) = (env.t, rw.delta, stats.p_n, env.p_d);
        Ok(Self {
            rho_u: env.rho_u,
            rho_ud: env.rho_u + env.rho_d,
            delta: d,
            c_b: env.c_b,
            p_d,
            p_n,
            cost_up: d * t * (1.0 - rw.r_u) * p_n,
            cost_down: d * (p_n * t + (p_d - p_n) * t * (1.0 - rw.r_d)),
            cost_null: d * t * p_n,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Signal {
        let u: f64 = rng.gen();
        if u < self.rho_u {
            Signal::Up
        } else if u < self.rho_ud {
            Signal::Down
        } else {
            Signal::Null
        }
    }

    fn slot(&self, s: Signal) -> (f64, f64) {
        match s {
            Signal::Up => (0.0, self.cost_up),
            Signal::Down => (self.p_d, self.cost_down),
            Signal::Null => (self.p_n, self.cost_null),
        }
    }

    /// Runs one charge; `on_slot` sees each record and the unprorated cost.
    fn run<F: FnMut(SlotRecord, f64)>(&self, seed: u64, mut on_slot: F) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut energy = 0.0;
        let mut index = 0;
        while energy < self.c_b {
            index += 1;
            let signal = self.draw(&mut rng);
            let (power, full_cost) = self.slot(signal);
            let step = power * self.delta;
            let (cum, cost) = if energy + step >= self.c_b {
                (self.c_b, full_cost * (self.c_b - energy) / step)
            } else {
                (energy + step, full_cost)
            };
            energy = cum;
            on_slot(SlotRecord { index, signal, power_kw: power, cum_energy_kwh: cum, cost_eur: cost }, full_cost);
        }
    }
}

pub fn simulate_charge(env: &MarketEnv, rw: &RewardSchedule, stats: &PowerStats, seed: u64) -> Result<ChargeTrace> {
    let model = SlotModel::new(env, rw, stats)?;
    let mut slots = Vec::new();
    let mut total = CompensatedSum::default();
    model.run(seed, |rec, _| {
        total.add(rec.cost_eur);
        slots.push(rec);
    });
    Ok(ChargeTrace { n_slots: slots.len(), slots, total_cost: total.value(), seed, generator: GENERATOR })
}

/// Per-slot net revenue statistics over `trials` charges seeded
/// `seed, seed + 1, …`. Every slot enters at its full-slot value, including
/// the one in which the battery fills.
pub fn empirical_slot_revenue(
    env: &MarketEnv,
    rw: &RewardSchedule,
    stats: &PowerStats,
    trials: usize,
    seed: u64,
) -> Result<SlotRevenueStats> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter { name: "trials", value: trials as f64, rule: ">= 100" });
    }
    let model = SlotModel::new(env, rw, stats)?;
    let per_trial: Vec<(u64, CompensatedSum, CompensatedSum)> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let (mut n, mut s, mut s2) = (0u64, CompensatedSum::default(), CompensatedSum::default());
            model.run(seed.wrapping_add(k), |_, full_cost| {
                n += 1;
                s.add(-full_cost);
                s2.add(full_cost * full_cost);
            });
            (n, s, s2)
        })
        .collect();

    let (mut n, mut s, mut s2) = (0u64, CompensatedSum::default(), CompensatedSum::default());
    for (k, a, b) in per_trial {
        n += k;
        s.add(a.value());
        s2.add(b.value());
    }
    let nf = n as f64;
    let mean = s.value() / nf;
    let var = ((s2.value() - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(SlotRevenueStats { mean, std_error: (var / nf).sqrt(), trials, total_slots: n, mean_slots: nf / trials as f64 })
}

pub const TRACE_HEADER: &str = "slot,signal,power_kw,cum_energy_kwh,cost_eur";

pub fn write_trace_csv<W: Write>(mut w: W, trace: &ChargeTrace) -> io::Result<()> {
    writeln!(w, "# generator={} seed={}", trace.generator, trace.seed)?;
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.slots {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.index,
            r.signal.code(),
            fixed6(r.power_kw),
            fixed6(r.cum_energy_kwh),
            fixed6(r.cost_eur)
        )?;
    }
    Ok(())
}
