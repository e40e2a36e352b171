//! Brute-force cross-checks: grid best responses, grid ε-equilibria, and
//! welfare by quadrature. Slow by design and independent of the analytic paths.

use std::fmt;

use crate::best_response::{reg_best_response, simple_best_response};
use crate::error::Result;
use crate::market_model::{
    derive_power_stats, per_kwh_regulation, revenues_with_er, MarketEnv, PowerStats, PriceProfile, RewardSchedule,
};

pub const GRID_NASH_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Station {
    Simple,
    Reg,
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Station::Simple => "fixed-power",
            Station::Reg => "regulation",
        })
    }
}

/// Inclusive price grid `lo, lo + step, …` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl PriceGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        assert!(lo < hi && step > 0.0, "invalid grid [{lo}, {hi}] step {step}");
        Self { lo, hi, step }
    }

    /// Grid of `2 * half_steps + 1` points centred on `center`.
    pub fn centered(center: f64, half_steps: usize, step: f64) -> Self {
        let half = half_steps as f64 * step;
        Self::new(center - half, center + half, step)
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Grid argmax of one station's revenue against a fixed opponent price; ties
/// go to the smaller price. Negative fixed-power prices are skipped.
pub fn grid_best_response(
    env: &MarketEnv,
    stats: &PowerStats,
    rw: &RewardSchedule,
    station: Station,
    opponent_price: f64,
    grid: PriceGrid,
) -> Result<f64> {
    let e_r = per_kwh_regulation(env, rw, stats)?;
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for p in grid.points() {
        let value = match station {
            Station::Simple if p < 0.0 => continue,
            Station::Simple => revenues_with_er(env, stats, e_r, PriceProfile::new(p, opponent_price)).r_s,
            Station::Reg => revenues_with_er(env, stats, e_r, PriceProfile::new(opponent_price, p)).r_r,
        };
        if value > best.1 {
            best = (p, value);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NashGrid {
    pub t_s: PriceGrid,
    pub t_r: PriceGrid,
}

/// All grid points from which neither station gains more than
/// [`GRID_NASH_EPS`] by a unilateral move to another grid price.
pub fn grid_nash(env: &MarketEnv, rw: &RewardSchedule, x: f64, grid: NashGrid) -> Result<Vec<PriceProfile>> {
    let stats = derive_power_stats(env, x)?;
    let e_r = per_kwh_regulation(env, rw, &stats)?;
    let ts: Vec<f64> = grid.t_s.points().filter(|p| *p >= 0.0).collect();
    let tr: Vec<f64> = grid.t_r.points().collect();
    let (ns, nr) = (ts.len(), tr.len());
    let mut r_s = vec![0.0; ns * nr];
    let mut r_r = vec![0.0; ns * nr];
    for (i, &a) in ts.iter().enumerate() {
        for (j, &b) in tr.iter().enumerate() {
            let rev = revenues_with_er(env, &stats, e_r, PriceProfile::new(a, b));
            r_s[i * nr + j] = rev.r_s;
            r_r[i * nr + j] = rev.r_r;
        }
    }
    let best_s: Vec<f64> =
        (0..nr).map(|j| (0..ns).map(|i| r_s[i * nr + j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let best_r: Vec<f64> =
        (0..ns).map(|i| r_r[i * nr..(i + 1) * nr].iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut out = Vec::new();
    for i in 0..ns {
        for j in 0..nr {
            let k = i * nr + j;
            if r_s[k] >= best_s[j] - GRID_NASH_EPS && r_r[k] >= best_r[i] - GRID_NASH_EPS {
                out.push(PriceProfile::new(ts[i], tr[j]));
            }
        }
    }
    Ok(out)
}

/// Alternating best responses from `start`; `None` if no fixed point within
/// `tol` after `max_iter` rounds. No convergence guarantee is implied.
pub fn best_response_iteration(
    env: &MarketEnv,
    rw: &RewardSchedule,
    x: f64,
    start: PriceProfile,
    max_iter: usize,
    tol: f64,
) -> Result<Option<PriceProfile>> {
    let stats = derive_power_stats(env, x)?;
    let e_r = per_kwh_regulation(env, rw, &stats)?;
    let mut p = start;
    for _ in 0..max_iter {
        let t_s = simple_best_response(env, &stats, p.t_r).t_s;
        let t_r = reg_best_response(env, &stats, e_r, t_s)?.t_r;
        let moved = (t_s - p.t_s).abs().max((t_r - p.t_r).abs());
        p = PriceProfile::new(t_s, t_r);
        if moved <= tol {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Average user utility by integrating `max(0, θP_A − T_r C_B, θP_d − T_s C_B)`
/// against the exponential density of θ: composite Simpson on `[0, 20θ̄]`
/// split at the choice kinks, closed-form exponential moments beyond.
pub fn welfare_quadrature(env: &MarketEnv, stats: &PowerStats, prices: PriceProfile, n_points: usize) -> f64 {
    let th = env.theta_bar;
    let c = env.c_b;
    let (p_a, p_d) = (stats.p_a, env.p_d);
    let (t_s, t_r) = (prices.t_s, prices.t_r);
    let options = [(0.0, 0.0), (p_a, t_r * c), (p_d, t_s * c)];
    let utility = |theta: f64| options.iter().map(|&(slope, cost)| slope * theta - cost).fold(0.0, f64::max);
    let best_option = |theta: f64| {
        let mut best = 0;
        for (k, &(slope, cost)) in options.iter().enumerate() {
            let (bs, bc) = options[best];
            if slope * theta - cost > bs * theta - bc {
                best = k;
            }
        }
        options[best]
    };

    let cut = 20.0 * th;
    let mut kinks: Vec<f64> = [t_r * c / p_a, (t_s - t_r) * c / (p_d - p_a), t_s * c / p_d]
        .into_iter()
        .filter(|k| k.is_finite() && *k > 0.0)
        .collect();
    kinks.sort_by(f64::total_cmp);

    let mut edges = vec![0.0];
    edges.extend(kinks.iter().copied().filter(|k| *k < cut));
    edges.push(cut);
    let density = |theta: f64| (-theta / th).exp() / th;
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let share = ((b - a) / cut * n_points as f64).ceil() as usize;
        let n = (share.max(2) + 1) & !1;
        let h = (b - a) / n as f64;
        let mut s = utility(a) * density(a) + utility(b) * density(b);
        for i in 1..n {
            let theta = a + i as f64 * h;
            let wgt = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += wgt * utility(theta) * density(theta);
        }
        total += s * h / 3.0;
    }

    // ∫_u^v (slope θ − cost) f(θ) dθ in closed form.
    let moment = |slope: f64, cost: f64, u: f64, v: f64| {
        let eu = (-u / th).exp();
        let ev = if v.is_finite() { (-v / th).exp() } else { 0.0 };
        let mv = if v.is_finite() { (v + th) * ev } else { 0.0 };
        slope * ((u + th) * eu - mv) - cost * (eu - ev)
    };
    let mut tail_edges = vec![cut];
    tail_edges.extend(kinks.iter().copied().filter(|k| *k > cut));
    tail_edges.push(f64::INFINITY);
    for w in tail_edges.windows(2) {
        let (u, v) = (w[0], w[1]);
        let probe = if v.is_finite() { 0.5 * (u + v) } else { u + 1.0 + u };
        let (slope, cost) = best_option(probe);
        total += moment(slope, cost, u, v);
    }
    total
}
