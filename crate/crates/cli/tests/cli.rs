use std::fs;
use std::path::{Path, PathBuf};

use evcharge_cli::{run, ScenarioConfig};
use evcharge_core::{read_region_csv, scan_region, AxisRange, Mode, RegionGrid, RegionOptions};
use tempfile::TempDir;

const BASE: &str = "\
# two-station baseline
t = 0.03
theta_bar = 0.1
c_b = 50
gamma = 0.05
rho_u = 0.48
rho_d = 0.48   # symmetric signals
p_d = 20
r_u = 1
r_d = 0
delta = 0.1
";

struct Out {
    code: u8,
    stdout: String,
    stderr: String,
}

fn evcharge(args: &[&str]) -> Out {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("evcharge").chain(args.iter().copied());
    let code = run(argv, &mut stdout, &mut stderr);
    Out { code, stdout: String::from_utf8(stdout).unwrap(), stderr: String::from_utf8(stderr).unwrap() }
}

fn config(dir: &TempDir, name: &str, overrides: &[(&str, &str)]) -> PathBuf {
    let mut text = String::new();
    for line in BASE.lines() {
        let key = line.split('=').next().unwrap().trim();
        match overrides.iter().find(|(k, _)| *k == key) {
            Some((k, v)) => text.push_str(&format!("{k} = {v}\n")),
            None => {
                text.push_str(line);
                text.push('\n');
            }
        }
    }
    for (k, v) in overrides {
        if !BASE.lines().any(|l| l.split('=').next().unwrap().trim() == *k) {
            text.push_str(&format!("{k} = {v}\n"));
        }
    }
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Column `name` of a single-header CSV.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.take_while(|l| !l.is_empty()).map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn nash_row_for_low_sensitivity_example() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.cfg", &[("x", "0.5")]);
    let out = evcharge(&["nash", "--config", p(&cfg)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("N1,0.063091,0.030000"), "{}", out.stdout);
}

#[test]
fn derive_without_regulation_signals() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.cfg", &[("rho_u", "0"), ("rho_d", "0")]);
    let out = evcharge(&["derive", "--config", p(&cfg), "--x", "0.5"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.lines().any(|l| l == "P_A=10.000000"), "{}", out.stdout);
}

#[test]
fn compare_reproduces_price_line_and_is_increasing() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.cfg", &[("r_u", "1.6"), ("r_d", "0.4")]);
    let out = evcharge(&["compare", "--config", p(&cfg), "--theta-range", "0.1:0.5:0.1"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let header = out.stdout.lines().next().unwrap();
    assert_eq!(
        header,
        "theta_bar,Ts_E,Tr_E,alpha_s_E,alpha_r_E,Rs_E,Rr_E,U_E,Ts_M,Tr_M,alpha_s_M,alpha_r_M,Rs_M,Rr_M,U_M"
    );
    let thetas: Vec<f64> = column(&out.stdout, "theta_bar").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(thetas.len(), 5);
    assert!(thetas.windows(2).all(|w| w[0] < w[1]));
    let ts = column(&out.stdout, "Ts_E");
    assert_eq!(ts[2], "0.090598");
}

#[test]
fn region_csv_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg_path = config(&dir, "a.cfg", &[("theta_bar", "0.3")]);
    let out =
        evcharge(&["region", "--config", p(&cfg_path), "--mode", "nash", "--ru", "0:2.5:0.25", "--rd", "0:1:0.2"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let parsed = read_region_csv(out.stdout.as_bytes()).unwrap();

    let cfg = ScenarioConfig::parse(&fs::read_to_string(&cfg_path).unwrap()).unwrap();
    let grid = RegionGrid { r_u: AxisRange::new(0.0, 2.5, 0.25).unwrap(), r_d: AxisRange::new(0.0, 1.0, 0.2).unwrap() };
    let cells = scan_region(&cfg.env, cfg.rewards.delta, &grid, Mode::Competition, &RegionOptions::default()).unwrap();
    assert_eq!(parsed.len(), cells.len());
    for (a, b) in parsed.iter().zip(&cells) {
        assert!((a.r_u - b.r_u).abs() < 1e-12 && (a.r_d - b.r_d).abs() < 1e-12);
        assert_eq!(a.mode, b.mode);
        assert_eq!(a.status.tag(), b.status.tag());
        match (a.status.x_star(), b.status.x_star()) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= 5e-7),
            (None, None) => {}
            other => panic!("x_star mismatch {other:?}"),
        }
    }
}

#[test]
fn region_overlay_and_sign_metadata() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.cfg", &[("theta_bar", "0.3")]);
    let rewards = dir.path().join("rewards.csv");
    fs::write(&rewards, "r_u,r_d,label\n1.6628,0.3759,daily-avg\n2.0,1.2,\"high, discount\"\n").unwrap();
    let out = evcharge(&[
        "region",
        "--config",
        p(&cfg),
        "--mode",
        "monopoly",
        "--ru",
        "1.5:2:0.25",
        "--rd",
        "0:1:0.5",
        "--rewards-csv",
        p(&rewards),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("# monopoly_condition_sign=plus\n"));
    assert!(out.stdout.contains("# viable_cells_other_sign=minus:"));
    let overlay = out.stdout.split("\n\n").nth(1).expect("overlay block");
    let mut lines = overlay.lines();
    assert_eq!(lines.next(), Some("label,r_u,r_d,mode,status,x_star"));
    assert!(lines.next().unwrap().starts_with("daily-avg,1.662800,0.375900,monopoly,"));
    assert!(lines.next().unwrap().starts_with("\"high, discount\",2.000000,1.200000,monopoly,"));
    assert!(out.stderr.contains("warning: reward sample `high, discount` has r_d = 1.200000 > 1"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.cfg", &[("r_u", "1.6"), ("r_d", "0.4"), ("theta_bar", "0.3")]);
    let runs: [&[&str]; 4] = [
        &["simulate", "--config", p(&cfg), "--x", "0.8", "--seed", "42"],
        &["simulate", "--config", p(&cfg), "--x", "0.8", "--seed", "42", "--trials", "200"],
        &["region", "--config", p(&cfg), "--mode", "monopoly", "--ru", "0:2.5:0.5", "--rd", "0:1:0.25"],
        &["nash", "--config", p(&cfg), "--optimize-x"],
    ];
    for args in runs {
        let a = evcharge(args);
        let b = evcharge(args);
        assert_eq!(a.code, 0, "{}", a.stderr);
        assert_eq!(a.stdout, b.stdout);
    }
    let trace = evcharge(runs[0]).stdout;
    assert!(trace.starts_with("# generator=ChaCha8Rng seed=42\nslot,signal,power_kw,cum_energy_kwh,cost_eur\n"));
}

#[test]
fn best_response_reports_branch() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.cfg", &[("theta_bar", "0.3"), ("r_u", "5"), ("r_d", "0.8"), ("x", "0.5")]);
    let out = evcharge(&["best-response", "simple", "--config", p(&cfg), "--opponent", "0"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout.lines().nth(1), Some("fixed-power,0.000000,Interior_5a,0.092939"));
    let out = evcharge(&["best-response", "reg", "--config", p(&cfg), "--opponent", "0.092939"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout.lines().nth(1), Some("regulation,0.092939,Zero_7b,0.000000"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let unknown = dir.path().join("unknown.cfg");
    fs::write(&unknown, format!("{BASE}colour = 3\n")).unwrap();
    let missing = dir.path().join("missing.cfg");
    fs::write(&missing, BASE.replace("c_b = 50\n", "")).unwrap();
    let dup = dir.path().join("dup.cfg");
    fs::write(&dup, format!("{BASE}t = 0.04\n")).unwrap();
    let rho = config(&dir, "rho.cfg", &[("rho_u", "0.6"), ("rho_d", "0.6")]);
    let absent = dir.path().join("absent.cfg");
    let cases: [(Vec<&str>, &str); 7] = [
        (vec!["derive", "--config", p(&unknown), "--x", "0.5"], "unknown key `colour`"),
        (vec!["derive", "--config", p(&missing), "--x", "0.5"], "`c_b`"),
        (vec!["derive", "--config", p(&dup), "--x", "0.5"], "duplicate key `t`"),
        (vec!["derive", "--config", p(&rho), "--x", "0.5"], "rho_u + rho_d"),
        (vec!["derive", "--config", p(&absent), "--x", "0.5"], "input_error"),
        (vec!["nash", "--config", p(&unknown)], "error"),
        (vec!["frobnicate"], "unrecognized subcommand"),
    ];
    for (args, needle) in cases {
        let out = evcharge(&args);
        assert_eq!(out.code, 2, "{args:?}: {}", out.stderr);
        assert!(out.stderr.contains(needle), "{args:?}: {}", out.stderr);
        assert!(out.stdout.is_empty());
    }
    let cfg = config(&dir, "a.cfg", &[]);
    let out = evcharge(&["derive", "--config", p(&cfg), "--x", "1.5"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.starts_with("error[invalid_parameter]: invalid parameter `x`"));
    let out = evcharge(&["simulate", "--config", p(&cfg), "--x", "0.5", "--seed", "1", "--trials", "10"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("`trials`"));
}

#[test]
fn computation_errors_exit_1_with_reason() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "a.cfg", &[("r_u", "0")]);
    let out = evcharge(&["optimize-x", "--config", p(&cfg)]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.starts_with("error[all_infeasible]:"), "{}", out.stderr);
    assert!(out.stdout.is_empty());
}

#[test]
fn help_exits_zero() {
    let out = evcharge(&["--help"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("simulate"));
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_evcharge");
    let ok = config(&dir, "ok.cfg", &[("x", "0.5")]);
    let infeasible = config(&dir, "inf.cfg", &[("r_u", "0")]);
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap();
    let out = status(&["nash", "--config", p(&ok)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("N1,0.063091,0.030000"));
    assert_eq!(status(&["optimize-x", "--config", p(&infeasible)]).status.code(), Some(1));
    assert_eq!(status(&["nash", "--config", p(&ok), "--x", "2"]).status.code(), Some(2));
    assert_eq!(status(&["nash"]).status.code(), Some(2));
}
