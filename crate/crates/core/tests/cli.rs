use std::fs;
use std::process::Command;

use memchannel::capacity::memoryless_quantum_capacity;
use memchannel::cli::main_with_args;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("memchannel").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn memoryless_endpoints_and_header() {
    let r = run(&["memoryless", "--eta-grid", "0.5,0.8,1.0"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert!(lines.next().unwrap().starts_with("# memchannel memoryless"));
    assert_eq!(lines.next().unwrap(), "eta,q,p_opt");
    let rows = data_rows(&r.stdout);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], 0.0);
    assert!((rows[1][1] - memoryless_quantum_capacity(0.8).unwrap().q).abs() < 1e-10);
    assert_eq!(rows[2][1], 1.0);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = [
        "sweep-tau",
        "--eta",
        "0.95",
        "--tau-grid",
        "1,10,100",
        "--r-check",
    ];
    let first = run(&args);
    assert_eq!(first.code, 0, "{}", first.stderr);
    assert_eq!(first.stdout, run(&args).stdout);
}

#[test]
fn steady_state_writes_trajectory_and_populations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trajectory.csv");
    let r = run(&[
        "steady-state",
        "--eta",
        "0.8",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.is_empty());

    let main = fs::read_to_string(&out).unwrap();
    assert!(main.starts_with("# memchannel steady-state eta=0.8"));
    let rows = data_rows(&main);
    assert_eq!(rows.len(), 200);
    assert_eq!(rows[0][0], 1.0);
    // First use sees the vacuum: plain amplitude damping at p = 1/2.
    let h2 = |x: f64| -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
    assert!((rows[0][2] - (h2(0.4) - h2(0.1))).abs() < 1e-10);
    assert!((rows[199][1] - 0.844_158_949_8).abs() < 1e-9);

    let pops = fs::read_to_string(dir.path().join("trajectory_populations.csv")).unwrap();
    assert!(pops
        .lines()
        .any(|l| l.contains("steady state reached at k=")));
    let w = data_rows(&pops);
    assert!((w.iter().map(|r| r[1]).sum::<f64>() - 1.0).abs() < 1e-10);
    assert!(w.windows(2).all(|p| p[1][1] <= p[0][1]));
}

#[test]
fn sweep_tau_rates_favor_short_intervals() {
    let r = run(&["sweep-tau", "--eta", "0.95", "--tau-grid", "1:100:log6"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r
        .stdout
        .contains("lambda_tau,mu,p_opt,i_c_opt,rate,private_rate\n"));
    let rows = data_rows(&r.stdout);
    assert_eq!(rows.len(), 6);
    assert!(rows.windows(2).all(|w| w[1][3] >= w[0][3] - 1e-9));
    assert!(rows.windows(2).all(|w| w[1][4] < w[0][4]));
    assert!(rows.iter().all(|row| row[4] == row[5]));
}

#[test]
fn sweep_mu_is_keyed_by_memory() {
    let r = run(&["sweep-mu", "--eta", "0.95", "--mu-grid", "0.9,0.1,0.5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = data_rows(&r.stdout);
    let mus: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(mus.len(), 3);
    assert!(mus.windows(2).all(|w| w[1] > w[0]));
    assert!((rows[1][1] - 20.0).abs() < 1e-9);
    assert!(rows[2][4] > rows[1][4] && rows[1][4] > rows[0][4]);
}

#[test]
fn forgetfulness_writes_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("forget.csv");
    let r = run(&[
        "forgetfulness",
        "--eta",
        "0.8",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(data_rows(&fs::read_to_string(&out).unwrap()).len(), 21);
    let fit = data_rows(&fs::read_to_string(dir.path().join("forget_fit.csv")).unwrap());
    let (c, r2, expected) = (fit[0][0], fit[0][2], fit[0][3]);
    assert!(r2 > 0.99);
    assert!(c > 1.0 && c < expected);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# settings\neta = 0.9\nlambda_tau = 5\nk = 3\n").unwrap();
    let r = run(&[
        "steady-state",
        "--config",
        cfg.to_str().unwrap(),
        "--k",
        "4",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.lines().next().unwrap().contains("eta=0.9"));
    let trajectory: Vec<&str> = r.stdout.split("\n\n").next().unwrap().lines().collect();
    assert_eq!(data_rows(&trajectory.join("\n")).len(), 4);
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    for (args, key) in [
        (vec!["steady-state"], "eta"),
        (vec!["steady-state", "--eta", "1.5"], "eta"),
        (
            vec!["steady-state", "--eta", "0.8", "--theta", "0.3"],
            "eta",
        ),
        (vec!["steady-state", "--eta", "0.8", "--p", "abc"], "p"),
        (
            vec!["sweep-tau", "--eta", "0.8", "--tau-grid", "3,2,1"],
            "tau-grid",
        ),
        (
            vec!["sweep-mu", "--eta", "0.8", "--mu-grid", "0.5,1.0"],
            "mu-grid",
        ),
        (
            vec!["forgetfulness", "--eta", "0.8", "--l-max", "2"],
            "l-max",
        ),
    ] {
        let r = run(&args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
        assert!(
            r.stderr.contains(&format!("`{key}`")),
            "{args:?}: {}",
            r.stderr
        );
        assert!(r.stdout.is_empty());
    }

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "eta = 0.8\nbogus = 1\n").unwrap();
    let r = run(&["steady-state", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("`bogus`"));
}

#[test]
fn non_convergence_exits_1() {
    let r = run(&["steady-state", "--eta", "0.8", "--max-iter", "5"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("converge"), "{}", r.stderr);
}

#[test]
fn validate_passes() {
    let r = run(&["validate", "--seed", "11"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let checks: Vec<&str> = r.stdout.lines().skip(2).collect();
    assert_eq!(checks.len(), 8);
    assert!(checks.iter().all(|l| l.ends_with(",true")));
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_memchannel");
    let ok = Command::new(bin)
        .args(["memoryless", "--eta", "0.8"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("eta,q,p_opt"));
    let bad = Command::new(bin)
        .args(["steady-state", "--eta", "2"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn log_grid_sweep_peaks_at_shortest_interval() {
    let r = run(&[
        "sweep-tau",
        "--eta",
        "0.95",
        "--lambda-tau-d",
        "20",
        "--tau-grid",
        "0.5:40:log",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = data_rows(&r.stdout);
    assert_eq!(rows.len(), 24);
    assert!(rows.windows(2).all(|w| w[1][3] >= w[0][3] - 1e-9));
    let best = rows.iter().map(|r| r[4]).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best, rows[0][4]);
}
