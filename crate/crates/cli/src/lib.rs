//! Command-line front end of the evcharge solver.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use evcharge_core::charge_sim::MIN_TRIALS;
use evcharge_core::format::{fixed6, sci6};
use evcharge_core::*;

pub use config::ScenarioConfig;

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("config line {line}: {message}")]
    Config { line: u64, message: String },
    #[error("{flag}: {message}")]
    Argument { flag: &'static str, message: String },
    #[error("missing required parameter `{0}`")]
    Missing(&'static str),
    #[error("cannot read {path}: {source}")]
    Input { path: PathBuf, source: io::Error },
    #[error("cannot write output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Config { .. } => "config_error",
            CliError::Argument { .. } => "invalid_argument",
            CliError::Missing(_) => "missing_parameter",
            CliError::Input { .. } => "input_error",
            CliError::Output(_) => "output_error",
        }
    }

    /// 2 for bad inputs, 1 for failed computations.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => 1,
            CliError::Output(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "evcharge",
    version,
    about = "Pricing game between a fixed-power and a regulation-providing EV charging station"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StationArg {
    Simple,
    Reg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Power statistics and per-kWh remuneration of a design x.
    Derive {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        x: Option<f64>,
    },
    /// Best response of one station to the other's price.
    BestResponse {
        station: StationArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        opponent: f64,
    },
    /// Nash equilibrium at a given or optimized design.
    Nash {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, conflicts_with = "optimize_x")]
        x: Option<f64>,
        #[arg(long)]
        optimize_x: bool,
    },
    /// Revenue-maximizing design x of the regulation station.
    OptimizeX {
        #[arg(long)]
        config: PathBuf,
        /// Also print R_r at equilibrium along the x grid.
        #[arg(long)]
        scan: bool,
    },
    /// Joint optimum when one owner runs both stations.
    Monopoly {
        #[arg(long)]
        config: PathBuf,
    },
    /// Competition vs monopoly over a range of theta_bar.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        theta_range: String,
    },
    /// Viability map over the (r_u, r_d) reward plane.
    Region {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        ru: String,
        #[arg(long)]
        rd: String,
        #[arg(long)]
        rewards_csv: Option<PathBuf>,
        #[arg(long, default_value = "plus")]
        monopoly_condition_sign: String,
    },
    /// Monte Carlo charging: one trace, or slot statistics with --trials.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
    },
}

/// Runs one command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                return 2;
            }
            let _ = out.write_all(text.as_bytes());
            return 0;
        }
    };
    let mut buf = String::new();
    let mut warnings = String::new();
    match execute(cli.command, &mut buf, &mut warnings) {
        Ok(()) => {
            let _ = err.write_all(warnings.as_bytes());
            match out.write_all(buf.as_bytes()).and_then(|_| out.flush()) {
                Ok(()) => 0,
                Err(e) => report(err, &CliError::Output(e)),
            }
        }
        Err(e) => {
            let _ = err.write_all(warnings.as_bytes());
            report(err, &e)
        }
    }
}

fn report(err: &mut dyn Write, e: &CliError) -> u8 {
    let _ = writeln!(err, "error[{}]: {e}", e.kind());
    e.exit_code()
}

fn load(path: &PathBuf) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Input { path: path.clone(), source })?;
    ScenarioConfig::parse(&text)
}

fn arg_error(flag: &'static str) -> impl Fn(String) -> CliError {
    move |message| CliError::Argument { flag, message }
}

fn parse_range(flag: &'static str, text: &str) -> CliResult<AxisRange> {
    text.parse::<AxisRange>().map_err(|e| match e {
        Error::Parse { message, .. } => CliError::Argument { flag, message },
        other => other.into(),
    })
}

fn design(cfg: &ScenarioConfig, flag: Option<f64>) -> CliResult<f64> {
    let x = flag.or(cfg.x).ok_or(CliError::Missing("x"))?;
    config::check_x(x)?;
    Ok(x)
}

fn warn_discount(warnings: &mut String, r_d: f64, what: &str) {
    if r_d > 1.0 {
        let _ = writeln!(warnings, "warning: {what} has r_d = {} > 1, outside the usual range", fixed6(r_d));
    }
}

const OUTCOME_HEADER: &str = "case,Ts,Tr,alpha_s,alpha_r,Rs,Rr,U,x,E_r";

fn outcome_row(o: &EquilibriumOutcome) -> String {
    [o.prices.t_s, o.prices.t_r, o.shares.alpha_s, o.shares.alpha_r, o.r_s, o.r_r, o.welfare, o.x, o.e_r].iter().fold(
        o.case_tag.to_string(),
        |mut row, v| {
            row.push(',');
            row.push_str(&fixed6(*v));
            row
        },
    )
}

fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| fixed6(*v)).collect::<Vec<_>>().join(",")
}

fn execute(command: Command, out: &mut String, warnings: &mut String) -> CliResult<()> {
    match command {
        Command::Derive { config, x } => {
            let cfg = load(&config)?;
            let x = design(&cfg, x)?;
            warn_discount(warnings, cfg.rewards.r_d, "config");
            let stats = derive_power_stats(&cfg.env, x)?;
            let e_r = per_kwh_regulation(&cfg.env, &cfg.rewards, &stats)?;
            let e_delta = slot_revenue(&cfg.env, &cfg.rewards, &stats);
            for (k, v) in [
                ("x", x),
                ("P_n", stats.p_n),
                ("P_bar", stats.p_bar),
                ("delta_P", stats.delta_p),
                ("P_A", stats.p_a),
                ("E_r", e_r),
                ("E_delta", e_delta),
            ] {
                let _ = writeln!(out, "{k}={}", fixed6(v));
            }
        }
        Command::BestResponse { station, config, x, opponent } => {
            let cfg = load(&config)?;
            let x = design(&cfg, x)?;
            let stats = derive_power_stats(&cfg.env, x)?;
            let _ = writeln!(out, "station,opponent,branch,price");
            match station {
                StationArg::Simple => {
                    let br = simple_best_response(&cfg.env, &stats, opponent);
                    let _ = writeln!(out, "{},{},{},{}", Station::Simple, fixed6(opponent), br.branch, fixed6(br.t_s));
                }
                StationArg::Reg => {
                    let e_r = per_kwh_regulation(&cfg.env, &cfg.rewards, &stats)?;
                    let br = reg_best_response(&cfg.env, &stats, e_r, opponent)?;
                    let _ = writeln!(out, "{},{},{},{}", Station::Reg, fixed6(opponent), br.branch, fixed6(br.t_r));
                }
            }
        }
        Command::Nash { config, x, optimize_x: opt } => {
            let cfg = load(&config)?;
            warn_discount(warnings, cfg.rewards.r_d, "config");
            let outcome = if opt {
                optimize_x(&cfg.env, &cfg.rewards)?.outcome
            } else {
                solve_nash(&cfg.env, &cfg.rewards, design(&cfg, x)?)?
            };
            let _ = writeln!(out, "{OUTCOME_HEADER}\n{}", outcome_row(&outcome));
        }
        Command::OptimizeX { config, scan } => {
            let cfg = load(&config)?;
            warn_discount(warnings, cfg.rewards.r_d, "config");
            let d = optimize_x(&cfg.env, &cfg.rewards)?;
            let _ = writeln!(out, "{OUTCOME_HEADER}\n{}", outcome_row(&d.outcome));
            if scan {
                let _ = writeln!(out, "\nx,Rr");
                for (x, r_r) in &d.scan {
                    let _ = writeln!(out, "{}", csv_row(&[*x, *r_r]));
                }
            }
        }
        Command::Monopoly { config } => {
            let cfg = load(&config)?;
            warn_discount(warnings, cfg.rewards.r_d, "config");
            let m = solve_monopoly(&cfg.env, &cfg.rewards)?;
            let _ = writeln!(out, "x,Ts,Tr,alpha_s,alpha_r,Rs,Rr,R_total,U");
            let _ = writeln!(
                out,
                "{}",
                csv_row(&[
                    m.x_star,
                    m.prices.t_s,
                    m.prices.t_r,
                    m.shares.alpha_s,
                    m.shares.alpha_r,
                    m.r_s,
                    m.r_r,
                    m.total_revenue,
                    m.welfare
                ])
            );
        }
        Command::Compare { config, theta_range } => {
            let cfg = load(&config)?;
            let range = parse_range("--theta-range", &theta_range)?;
            warn_discount(warnings, cfg.rewards.r_d, "config");
            let _ = writeln!(
                out,
                "theta_bar,Ts_E,Tr_E,alpha_s_E,alpha_r_E,Rs_E,Rr_E,U_E,Ts_M,Tr_M,alpha_s_M,alpha_r_M,Rs_M,Rr_M,U_M"
            );
            for theta_bar in range.values() {
                let env = MarketEnv { theta_bar, ..cfg.env };
                env.validate()?;
                let e = optimize_x(&env, &cfg.rewards)?.outcome;
                let m = solve_monopoly(&env, &cfg.rewards)?;
                let _ = writeln!(
                    out,
                    "{}",
                    csv_row(&[
                        theta_bar,
                        e.prices.t_s,
                        e.prices.t_r,
                        e.shares.alpha_s,
                        e.shares.alpha_r,
                        e.r_s,
                        e.r_r,
                        e.welfare,
                        m.prices.t_s,
                        m.prices.t_r,
                        m.shares.alpha_s,
                        m.shares.alpha_r,
                        m.r_s,
                        m.r_r,
                        m.welfare,
                    ])
                );
            }
        }
        Command::Region { config, mode, ru, rd, rewards_csv, monopoly_condition_sign } => {
            let cfg = load(&config)?;
            let mode: Mode = mode.parse().map_err(arg_error("--mode"))?;
            let sign: ConditionSign =
                monopoly_condition_sign.parse().map_err(arg_error("--monopoly-condition-sign"))?;
            let grid = RegionGrid { r_u: parse_range("--ru", &ru)?, r_d: parse_range("--rd", &rd)? };
            let samples = match &rewards_csv {
                Some(path) => {
                    let file = fs::File::open(path).map_err(|source| CliError::Input { path: path.clone(), source })?;
                    load_rewards_csv(file)?
                }
                None => Vec::new(),
            };
            if let Some(max) = grid.r_d.values().last() {
                warn_discount(warnings, *max, "--rd grid");
            }
            for s in &samples {
                warn_discount(warnings, s.r_d, &format!("reward sample `{}`", s.label));
            }

            let opts = RegionOptions { sign, ..RegionOptions::default() };
            let cells = scan_region(&cfg.env, cfg.rewards.delta, &grid, mode, &opts)?;
            let viable = cells.iter().filter(|c| c.status.is_viable()).count();
            let mut meta = vec![
                ("mode", mode.to_string()),
                ("theta_bar", fixed6(cfg.env.theta_bar)),
                ("gamma", fixed6(cfg.env.gamma)),
                ("viable_cells", format!("{viable}/{}", cells.len())),
            ];
            if mode == Mode::Monopoly {
                let other = sign.flipped();
                let flipped = cells
                    .iter()
                    .filter(|c| {
                        let rw = RewardSchedule { r_u: c.r_u, r_d: c.r_d, delta: cfg.rewards.delta };
                        monopoly_viable(&cfg.env, &rw, other).0
                    })
                    .count();
                meta.push(("monopoly_condition_sign", sign.to_string()));
                meta.push(("viable_cells_other_sign", format!("{other}:{flipped}/{}", cells.len())));
            }
            let mut bytes = Vec::new();
            write_region_csv(&mut bytes, &cells, &meta)?;

            if !samples.is_empty() {
                bytes.push(b'\n');
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut bytes);
                w.write_record(["label", "r_u", "r_d", "mode", "status", "x_star"]).map_err(io::Error::from)?;
                for s in &samples {
                    let rw = RewardSchedule { r_u: s.r_u, r_d: s.r_d, delta: cfg.rewards.delta };
                    let status = classify_cell(&cfg.env, &rw, mode, &opts)?;
                    let x = status.x_star().map(fixed6).unwrap_or_default();
                    w.write_record([
                        s.label.as_str(),
                        &fixed6(s.r_u),
                        &fixed6(s.r_d),
                        &mode.to_string(),
                        status.tag(),
                        &x,
                    ])
                    .map_err(io::Error::from)?;
                }
                w.flush()?;
            }
            out.push_str(&String::from_utf8(bytes).expect("CSV output is UTF-8"));
        }
        Command::Simulate { config, x, seed, trials } => {
            let cfg = load(&config)?;
            let x = design(&cfg, x)?;
            warn_discount(warnings, cfg.rewards.r_d, "config");
            let stats = derive_power_stats(&cfg.env, x)?;
            match trials {
                None => {
                    let trace = simulate_charge(&cfg.env, &cfg.rewards, &stats, seed)?;
                    let mut bytes = Vec::new();
                    write_trace_csv(&mut bytes, &trace)?;
                    out.push_str(&String::from_utf8(bytes).expect("CSV output is UTF-8"));
                }
                Some(n) => {
                    if n < MIN_TRIALS {
                        return Err(Error::InvalidParameter { name: "trials", value: n as f64, rule: ">= 100" }.into());
                    }
                    let st = empirical_slot_revenue(&cfg.env, &cfg.rewards, &stats, n, seed)?;
                    let expected = slot_revenue(&cfg.env, &cfg.rewards, &stats);
                    let expected_slots = cfg.env.c_b / (cfg.rewards.delta * stats.p_bar);
                    let z = if st.std_error > 0.0 { (st.mean - expected) / st.std_error } else { 0.0 };
                    let _ = writeln!(out, "# generator={} seed={seed}", charge_sim::GENERATOR);
                    let _ = writeln!(
                        out,
                        "trials,mean_slot_revenue,std_error,expected_slot_revenue,z,mean_slots,expected_slots"
                    );
                    let _ = writeln!(
                        out,
                        "{n},{},{},{},{},{},{}",
                        sci6(st.mean),
                        sci6(st.std_error),
                        sci6(expected),
                        fixed6(z),
                        fixed6(st.mean_slots),
                        fixed6(expected_slots)
                    );
                }
            }
        }
    }
    Ok(())
}
