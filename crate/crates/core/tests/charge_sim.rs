mod common;

use common::*;
use evcharge_core::*;

fn high_signal_case() -> (MarketEnv, RewardSchedule, PowerStats) {
    let env = MarketEnv { rho_u: 0.45, rho_d: 0.45, ..e0() };
    let stats = derive_power_stats(&env, 0.8).unwrap();
    (env, rewards(1.6, 0.4), stats)
}

#[test]
fn constant_power_without_signals() {
    let env = MarketEnv { rho_u: 0.0, rho_d: 0.0, ..e0() };
    let stats = derive_power_stats(&env, 0.8).unwrap();
    let rw = rewards(1.6, 0.4);
    let tr = simulate_charge(&env, &rw, &stats, 7).unwrap();
    assert_eq!(tr.n_slots, (env.c_b / (rw.delta * stats.p_n)).ceil() as usize);
    assert!(tr.slots.iter().all(|s| s.signal == Signal::Null && s.power_kw == stats.p_n));

    let st = empirical_slot_revenue(&env, &rw, &stats, 100, 1).unwrap();
    assert_close(st.mean, -rw.delta * env.t * stats.p_n, 1e-15, "mean");
    assert!(st.std_error <= 1e-12);
}

#[test]
fn high_signal_statistics_match_closed_forms() {
    let (env, rw, stats) = high_signal_case();
    assert_close(stats.p_bar, 10.6, 1e-12, "P_bar");
    let st = empirical_slot_revenue(&env, &rw, &stats, 10_000, 2015).unwrap();
    let expected_slots = env.c_b / (rw.delta * stats.p_bar);
    assert!((st.mean_slots / expected_slots - 1.0).abs() <= 0.02, "slots {} vs {}", st.mean_slots, expected_slots);
    let e_delta = slot_revenue(&env, &rw, &stats);
    assert!((st.mean - e_delta).abs() <= 3.0 * st.std_error, "mean {} vs {} (se {})", st.mean, e_delta, st.std_error);
}

#[test]
fn full_regulation_rewards_audit() {
    let (env, _, stats) = high_signal_case();
    let rw = rewards(1.0, 1.0);
    let null_cost = rw.delta * env.t * stats.p_n;
    for seed in 0..200 {
        let tr = simulate_charge(&env, &rw, &stats, seed).unwrap();
        let last = tr.slots.len() - 1;
        for (k, s) in tr.slots.iter().enumerate() {
            let full = match s.signal {
                Signal::Up => 0.0,
                Signal::Down | Signal::Null => null_cost,
            };
            if k < last {
                assert_close(s.cost_eur, full, 1e-15, "slot cost");
            } else {
                assert!(s.cost_eur <= full + 1e-15);
            }
        }
        let fixed_cost = env.t * env.c_b;
        assert!(tr.total_cost <= fixed_cost + 1e-12);
        if tr.slots.iter().any(|s| s.signal == Signal::Down) {
            assert!(tr.total_cost < fixed_cost - 1e-9, "seed {seed}: {} vs {fixed_cost}", tr.total_cost);
        }
    }
}

#[test]
fn traces_are_deterministic() {
    let (env, rw, stats) = high_signal_case();
    let a = simulate_charge(&env, &rw, &stats, 42).unwrap();
    let b = simulate_charge(&env, &rw, &stats, 42).unwrap();
    assert_eq!(a, b);
    let mut ba = Vec::new();
    let mut bb = Vec::new();
    write_trace_csv(&mut ba, &a).unwrap();
    write_trace_csv(&mut bb, &b).unwrap();
    assert_eq!(ba, bb);
    let c = simulate_charge(&env, &rw, &stats, 43).unwrap();
    assert_ne!(a.slots, c.slots);
    assert_eq!(a.generator, "ChaCha8Rng");
    assert_eq!(a.seed, 42);

    let text = String::from_utf8(ba).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# generator=ChaCha8Rng seed=42"));
    assert_eq!(lines.next(), Some("slot,signal,power_kw,cum_energy_kwh,cost_eur"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("1,"));
    assert!(["U", "D", "N"].contains(&first.split(',').nth(1).unwrap()));
}

#[test]
fn energy_is_conserved() {
    let (env, rw, stats) = high_signal_case();
    for seed in 0..500 {
        let tr = simulate_charge(&env, &rw, &stats, seed).unwrap();
        let mut prev = 0.0;
        let mut total = 0.0;
        for s in &tr.slots {
            let expected = match s.signal {
                Signal::Up => 0.0,
                Signal::Down => env.p_d,
                Signal::Null => stats.p_n,
            };
            assert_eq!(s.power_kw, expected);
            assert!(s.cum_energy_kwh >= prev);
            total += s.cum_energy_kwh - prev;
            prev = s.cum_energy_kwh;
        }
        assert_eq!(prev, env.c_b);
        assert!((total - env.c_b).abs() <= 1e-9);
        let clipped: f64 = tr.slots[..tr.n_slots - 1].iter().map(|s| s.power_kw * rw.delta).sum();
        assert!(clipped < env.c_b);
    }
}

#[test]
fn signal_frequencies_within_binomial_bands() {
    let (env, rw, stats) = high_signal_case();
    let (mut n, mut up, mut down) = (0usize, 0usize, 0usize);
    let mut seed = 0;
    while n < 100_000 {
        let tr = simulate_charge(&env, &rw, &stats, seed).unwrap();
        for s in &tr.slots {
            n += 1;
            match s.signal {
                Signal::Up => up += 1,
                Signal::Down => down += 1,
                Signal::Null => {}
            }
        }
        seed += 1;
    }
    for (count, p) in [(up, env.rho_u), (down, env.rho_d)] {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((count as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{count} of {n} vs p={p}");
    }
}

#[test]
fn degenerate_inputs_rejected() {
    let env = MarketEnv { rho_u: 1.0, rho_d: 0.0, ..e0() };
    let stats = PowerStats { x: 0.5, p_n: 10.0, p_bar: 0.0, delta_p: 0.0, p_a: 0.0 };
    assert_eq!(simulate_charge(&env, &rewards(1.0, 0.0), &stats, 1).unwrap_err(), Error::NeverCompletes);
    let (env, rw, stats) = high_signal_case();
    assert!(matches!(
        empirical_slot_revenue(&env, &rw, &stats, 99, 1),
        Err(Error::InvalidParameter { name: "trials", .. })
    ));
}
