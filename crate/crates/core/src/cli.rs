//! Command-line front end.
//!
//! Each experiment resolves a [`RunConfig`] from flags and an optional
//! `key = value` config file (flags win), computes one or more tables and
//! writes them as CSV. Numbers are printed with 12 significant digits so
//! repeated runs are byte-identical.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::capacity::{
    forgetfulness_probe, memoryless_quantum_capacity, private_rate_report, sweep_optima,
    OptimizeOptions,
};
use crate::cavity::{
    mean_photon_number, steady_state, theta_from_eta, trajectory, CavityPopulations, ChannelParams,
    DEFAULT_MAX_ITER, DEFAULT_STEADY_TOL,
};
use crate::channel::coherent_information_single_use;
use crate::quantum::QubitInput;
use crate::validate::run_oracle_suite;
use crate::Error;

/// Points of a `start:stop:log` grid when no count is given.
pub const DEFAULT_LOG_POINTS: usize = 24;

#[derive(Debug, Parser)]
#[command(
    name = "memchannel",
    version,
    about = "Coherent information and transmission rates of a damped Jaynes-Cummings memory channel"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Memoryless capacity Q(eta) over a grid of eta: columns eta, q, p_opt.
    Memoryless(RawArgs),
    /// Per-use trajectory from the vacuum and the final cavity populations.
    SteadyState(RawArgs),
    /// Optimized coherent information and rate over a grid of lambda*tau.
    SweepTau(RawArgs),
    /// Same as sweep-tau, keyed by the memory parameter mu.
    SweepMu(RawArgs),
    /// Cavity distance decay through idle intervals, with an exponential fit.
    Forgetfulness(RawArgs),
    /// Runs the built-in oracle suite and reports pass/fail per check.
    Validate(RawArgs),
}

/// Flags shared by every experiment. Values are parsed by [`RunConfig`] so
/// that flags and config-file entries go through the same checks.
#[derive(Debug, Clone, Default, Args)]
pub struct RawArgs {
    /// Plain `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path (stdout when absent). Extra tables go next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Memoryless retention cos^2(lambda*tau_p).
    #[arg(long)]
    pub eta: Option<String>,
    /// Transit angle lambda*tau_p (alternative to --eta).
    #[arg(long)]
    pub theta: Option<String>,
    /// Grid of eta for `memoryless`.
    #[arg(long)]
    pub eta_grid: Option<String>,
    #[arg(long)]
    pub lambda_tau_d: Option<String>,
    #[arg(long)]
    pub lambda_tau: Option<String>,
    /// Grid of lambda*tau: `a:b:step`, `a:b:log`, `a:b:logN` or `x,y,z`.
    #[arg(long)]
    pub tau_grid: Option<String>,
    /// Grid of mu in (0, 1), same syntax as --tau-grid.
    #[arg(long)]
    pub mu_grid: Option<String>,
    /// Excited population of the input qubit.
    #[arg(long)]
    pub p: Option<String>,
    /// Number of channel uses.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub l_max: Option<String>,
    /// Steady-state L1 tolerance.
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub max_iter: Option<String>,
    /// Coarse grid spacing of the input optimization.
    #[arg(long)]
    pub p_step: Option<String>,
    /// Check that coherent inputs do not beat r = 0 at the optimum.
    #[arg(long)]
    pub r_check: bool,
    #[arg(long)]
    pub seed: Option<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "output",
    "eta",
    "theta",
    "eta-grid",
    "lambda-tau-d",
    "lambda-tau",
    "tau-grid",
    "mu-grid",
    "p",
    "k",
    "l-max",
    "tol",
    "max-iter",
    "p-step",
    "r-check",
    "seed",
];

impl RawArgs {
    fn flag_entries(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |key: &str, value: &Option<String>| {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        };
        put(
            "output",
            &self.output.as_ref().map(|p| p.display().to_string()),
        );
        put("eta", &self.eta);
        put("theta", &self.theta);
        put("eta-grid", &self.eta_grid);
        put("lambda-tau-d", &self.lambda_tau_d);
        put("lambda-tau", &self.lambda_tau);
        put("tau-grid", &self.tau_grid);
        put("mu-grid", &self.mu_grid);
        put("p", &self.p);
        put("k", &self.k);
        put("l-max", &self.l_max);
        put("tol", &self.tol);
        put("max-iter", &self.max_iter);
        put("p-step", &self.p_step);
        put("seed", &self.seed);
        if self.r_check {
            map.insert("r-check".into(), "true".into());
        }
        map
    }
}

/// Configuration problem, reported with exit code 2.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error in `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Compute { context: String, source: Error },
    #[error("{failed} oracle check(s) failed")]
    Validation { failed: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Parses a `key = value` config file. Blank lines and `#` comments are
/// skipped; keys may use `-` or `_`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::new(line, format!("line {} is not `key = value`", i + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(&key, "unknown key"));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Parses a grid: `a:b:step` (inclusive, linear), `a:b:log` or `a:b:logN`
/// (geometric, N points), or a comma-separated list.
pub fn parse_grid(key: &str, spec: &str) -> Result<Vec<f64>, ConfigError> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| ConfigError::new(key, format!("`{s}` is not a number")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [a, b, mode] => {
            let (a, b) = (number(a)?, number(b)?);
            if !(b > a) {
                return Err(ConfigError::new(key, "grid end must exceed its start"));
            }
            let mode = mode.trim();
            if let Some(count) = mode.strip_prefix("log") {
                let count = if count.is_empty() {
                    DEFAULT_LOG_POINTS
                } else {
                    count
                        .parse::<usize>()
                        .map_err(|_| ConfigError::new(key, format!("bad point count `{count}`")))?
                };
                if a <= 0.0 || count < 2 {
                    return Err(ConfigError::new(
                        key,
                        "log grid needs a positive start and at least 2 points",
                    ));
                }
                let ratio = (b / a).ln() / (count - 1) as f64;
                (0..count)
                    .map(|i| {
                        if i + 1 == count {
                            b
                        } else {
                            a * (ratio * i as f64).exp()
                        }
                    })
                    .collect()
            } else {
                let step = number(mode)?;
                if !(step > 0.0) {
                    return Err(ConfigError::new(key, "grid step must be positive"));
                }
                crate::optimize::grid(a, b, step)
            }
        }
        [_] => spec.split(',').map(number).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(ConfigError::new(key, format!("cannot parse grid `{spec}`"))),
    };
    if grid.is_empty() {
        return Err(ConfigError::new(key, "grid is empty"));
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Memoryless,
    SteadyState,
    SweepTau,
    SweepMu,
    Forgetfulness,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Memoryless => "memoryless",
            Experiment::SteadyState => "steady-state",
            Experiment::SweepTau => "sweep-tau",
            Experiment::SweepMu => "sweep-mu",
            Experiment::Forgetfulness => "forgetfulness",
            Experiment::Validate => "validate",
        }
    }
}

/// Transit strength, given either way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Eta(f64),
    Theta(f64),
}

impl Coupling {
    pub fn theta(self) -> f64 {
        match self {
            Coupling::Eta(eta) => theta_from_eta(eta),
            Coupling::Theta(theta) => theta,
        }
    }

    pub fn eta(self) -> f64 {
        match self {
            Coupling::Eta(eta) => eta,
            Coupling::Theta(theta) => theta.cos().powi(2),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub coupling: Option<Coupling>,
    pub eta_grid: Vec<f64>,
    pub lambda_tau_d: f64,
    pub lambda_tau: f64,
    pub tau_grid: Vec<f64>,
    pub mu_grid: Vec<f64>,
    pub p: f64,
    pub k: usize,
    pub l_max: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub p_step: f64,
    pub r_check: bool,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Resolves a configuration from merged `key -> value` entries.
    pub fn resolve(
        experiment: Experiment,
        entries: &BTreeMap<String, String>,
    ) -> Result<Self, ConfigError> {
        let get = |key: &str| entries.get(key).map(String::as_str);
        let real = |key: &str, default: Option<f64>| -> Result<Option<f64>, ConfigError> {
            match get(key) {
                Some(s) => s
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(Some)
                    .ok_or_else(|| ConfigError::new(key, format!("`{s}` is not a number"))),
                None => Ok(default),
            }
        };
        let count = |key: &str, default: usize| -> Result<usize, ConfigError> {
            match get(key) {
                Some(s) => s.trim().parse::<usize>().map_err(|_| {
                    ConfigError::new(key, format!("`{s}` is not a non-negative integer"))
                }),
                None => Ok(default),
            }
        };
        let positive = |key: &str, value: f64| {
            if value > 0.0 {
                Ok(value)
            } else {
                Err(ConfigError::new(key, "must be positive"))
            }
        };

        let coupling = match (real("eta", None)?, real("theta", None)?) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new("eta", "give exactly one of eta and theta"))
            }
            (Some(eta), None) => {
                if !(0.0..=1.0).contains(&eta) {
                    return Err(ConfigError::new("eta", "must lie in [0, 1]"));
                }
                Some(Coupling::Eta(eta))
            }
            (None, Some(theta)) => {
                if theta < 0.0 {
                    return Err(ConfigError::new("theta", "must be non-negative"));
                }
                Some(Coupling::Theta(theta))
            }
            (None, None) => None,
        };
        let needs_coupling = !matches!(experiment, Experiment::Memoryless | Experiment::Validate);
        if needs_coupling && coupling.is_none() {
            return Err(ConfigError::new("eta", "missing; give eta or theta"));
        }

        let grid = |key: &str, default: Option<&str>| -> Result<Vec<f64>, ConfigError> {
            match get(key).or(default) {
                Some(spec) => parse_grid(key, spec),
                None => Err(ConfigError::new(key, "missing")),
            }
        };
        let eta_grid = match experiment {
            Experiment::Memoryless => match (get("eta-grid"), coupling) {
                (None, Some(c)) => vec![c.eta()],
                _ => grid("eta-grid", Some("0.5:1.0:0.01"))?,
            },
            _ => Vec::new(),
        };
        if eta_grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(ConfigError::new("eta-grid", "values must lie in [0, 1]"));
        }
        let tau_grid = match experiment {
            Experiment::SweepTau => grid("tau-grid", None)?,
            _ => Vec::new(),
        };
        if tau_grid.iter().any(|t| *t <= 0.0) {
            return Err(ConfigError::new("tau-grid", "values must be positive"));
        }
        if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new(
                "tau-grid",
                "values must be strictly ascending",
            ));
        }
        let mu_grid = match experiment {
            Experiment::SweepMu => grid("mu-grid", None)?,
            _ => Vec::new(),
        };
        if mu_grid.iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
            return Err(ConfigError::new("mu-grid", "values must lie in (0, 1)"));
        }

        let p = real("p", Some(0.5))?.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&p) {
            return Err(ConfigError::new("p", "must lie in [0, 1]"));
        }
        let lambda_tau = real("lambda-tau", Some(2.0))?.unwrap_or(2.0);
        if lambda_tau < 0.0 {
            return Err(ConfigError::new("lambda-tau", "must be non-negative"));
        }
        let k = count("k", 200)?;
        if k == 0 {
            return Err(ConfigError::new("k", "must be at least 1"));
        }
        let l_max = count("l-max", 20)?;
        if l_max < 3 {
            return Err(ConfigError::new("l-max", "must be at least 3"));
        }
        let r_check = match get("r-check") {
            None => false,
            Some(s) => s
                .trim()
                .parse::<bool>()
                .map_err(|_| ConfigError::new("r-check", format!("`{s}` is not true/false")))?,
        };
        let seed = match get("seed") {
            None => 7,
            Some(s) => s
                .trim()
                .parse::<u64>()
                .map_err(|_| ConfigError::new("seed", format!("`{s}` is not an integer")))?,
        };

        Ok(Self {
            experiment,
            coupling,
            eta_grid,
            lambda_tau_d: positive(
                "lambda-tau-d",
                real("lambda-tau-d", Some(20.0))?.unwrap_or(20.0),
            )?,
            lambda_tau,
            tau_grid,
            mu_grid,
            p,
            k,
            l_max,
            tol: positive(
                "tol",
                real("tol", Some(DEFAULT_STEADY_TOL))?.unwrap_or(DEFAULT_STEADY_TOL),
            )?,
            max_iter: count("max-iter", DEFAULT_MAX_ITER)?,
            p_step: positive("p-step", real("p-step", Some(0.01))?.unwrap_or(0.01))?,
            r_check,
            seed,
            output: get("output").map(PathBuf::from),
        })
    }

    /// One comment line recording every resolved setting.
    pub fn comment_line(&self) -> String {
        let mut line = format!("# memchannel {}", self.experiment.name());
        match self.coupling {
            Some(Coupling::Eta(eta)) => {
                let _ = write!(line, " eta={eta} theta={}", theta_from_eta(eta));
            }
            Some(Coupling::Theta(theta)) => {
                let _ = write!(line, " theta={theta} eta={}", theta.cos().powi(2));
            }
            None => {}
        }
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        match self.experiment {
            Experiment::Memoryless => {
                let _ = write!(line, " eta_grid={}", list(&self.eta_grid));
            }
            Experiment::SteadyState => {
                let _ = write!(
                    line,
                    " lambda_tau_d={} lambda_tau={} p={} k={} tol={} max_iter={}",
                    self.lambda_tau_d, self.lambda_tau, self.p, self.k, self.tol, self.max_iter
                );
            }
            Experiment::SweepTau | Experiment::SweepMu => {
                let (name, grid) = if self.experiment == Experiment::SweepTau {
                    ("tau_grid", &self.tau_grid)
                } else {
                    ("mu_grid", &self.mu_grid)
                };
                let _ = write!(
                    line,
                    " lambda_tau_d={} {name}={} p_step={} tol={} max_iter={} r_check={}",
                    self.lambda_tau_d,
                    list(grid),
                    self.p_step,
                    self.tol,
                    self.max_iter,
                    self.r_check
                );
            }
            Experiment::Forgetfulness => {
                let _ = write!(
                    line,
                    " lambda_tau_d={} lambda_tau={} p={} l_max={}",
                    self.lambda_tau_d, self.lambda_tau, self.p, self.l_max
                );
            }
            Experiment::Validate => {
                let _ = write!(line, " seed={}", self.seed);
            }
        }
        line
    }

    fn params(&self, lambda_tau: f64) -> Result<ChannelParams, RunError> {
        let theta = self.coupling.map(Coupling::theta).unwrap_or(0.0);
        ChannelParams::new(theta, lambda_tau, self.lambda_tau_d)
            .map_err(|e| self.compute_error(format!("lambda_tau={lambda_tau}"), e))
    }

    fn options(&self) -> OptimizeOptions {
        OptimizeOptions {
            p_step: self.p_step,
            steady_tol: self.tol,
            max_iter: self.max_iter,
            r_check: self.r_check,
            ..OptimizeOptions::default()
        }
    }

    fn compute_error(&self, detail: String, source: Error) -> RunError {
        RunError::Compute {
            context: format!("{} failed for {detail}", self.experiment.name()),
            source,
        }
    }
}

/// Formats a value with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// One CSV table. `suffix` names the side file it is written to when the
/// primary output is a path.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub suffix: Option<&'static str>,
    pub comments: Vec<String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(suffix: Option<&'static str>, comment: String, header: Vec<&'static str>) -> Self {
        Self {
            suffix,
            comments: vec![comment],
            header,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str(c);
            s.push('\n');
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Runs the configured experiment and returns its tables.
pub fn execute(config: &RunConfig) -> Result<Vec<Table>, RunError> {
    match config.experiment {
        Experiment::Memoryless => memoryless_tables(config),
        Experiment::SteadyState => steady_state_tables(config),
        Experiment::SweepTau => sweep_tables(config, &config.tau_grid, false),
        Experiment::SweepMu => {
            let mut taus: Vec<f64> = config
                .mu_grid
                .iter()
                .map(|mu| config.lambda_tau_d * (1.0 - mu) / mu)
                .collect();
            taus.sort_by(f64::total_cmp);
            taus.dedup();
            sweep_tables(config, &taus, true)
        }
        Experiment::Forgetfulness => forgetfulness_tables(config),
        Experiment::Validate => validate_tables(config),
    }
}

fn memoryless_tables(config: &RunConfig) -> Result<Vec<Table>, RunError> {
    let mut table = Table::new(None, config.comment_line(), vec!["eta", "q", "p_opt"]);
    for &eta in &config.eta_grid {
        let cap = memoryless_quantum_capacity(eta)
            .map_err(|e| config.compute_error(format!("eta={eta}"), e))?;
        table
            .rows
            .push(vec![fmt_num(eta), fmt_num(cap.q), fmt_num(cap.p_opt)]);
    }
    Ok(vec![table])
}

fn steady_state_tables(config: &RunConfig) -> Result<Vec<Table>, RunError> {
    let params = config.params(config.lambda_tau)?;
    let fail = |e| {
        config.compute_error(
            format!("p={} lambda_tau={}", config.p, config.lambda_tau),
            e,
        )
    };
    let input = QubitInput::classical(config.p).map_err(fail)?;

    let mut uses = Table::new(
        None,
        config.comment_line(),
        vec!["k", "mean_photon", "i_c_k"],
    );
    let mut before = CavityPopulations::vacuum();
    for (k, after) in (1..=config.k).zip(trajectory(config.p, &params).map_err(fail)?) {
        let after = after.map_err(fail)?;
        let ic = coherent_information_single_use(&input, &before, params.theta()).map_err(fail)?;
        uses.rows.push(vec![
            k.to_string(),
            fmt_num(mean_photon_number(&after)),
            fmt_num(ic),
        ]);
        before = after;
    }

    let steady = steady_state(config.p, &params, config.tol, config.max_iter).map_err(fail)?;
    let mut populations = Table::new(Some("populations"), config.comment_line(), vec!["n", "w_n"]);
    populations.comments.push(format!(
        "# populations after k={} uses; steady state reached at k={}",
        config.k, steady.iterations
    ));
    let end = before.support_end().max(1);
    for (n, w) in before.as_slice()[..end].iter().enumerate() {
        populations.rows.push(vec![n.to_string(), fmt_num(*w)]);
    }
    Ok(vec![uses, populations])
}

fn sweep_tables(config: &RunConfig, taus: &[f64], by_mu: bool) -> Result<Vec<Table>, RunError> {
    let base = config.params(0.0)?;
    let optima = sweep_optima(&base, taus, &config.options())
        .map_err(|e| config.compute_error(format!("lambda_tau in {taus:?}"), e))?;

    let mut header = if by_mu {
        vec!["mu", "lambda_tau"]
    } else {
        vec!["lambda_tau", "mu"]
    };
    header.extend(["p_opt", "i_c_opt", "rate", "private_rate"]);
    if config.r_check {
        header.push("r_check_max_excess");
    }
    let mut table = Table::new(None, config.comment_line(), header);

    let mut rows: Vec<_> = optima.iter().collect();
    if by_mu {
        rows.sort_by(|a, b| a.0.mu.total_cmp(&b.0.mu));
    }
    for (point, opt) in rows {
        let report = private_rate_report(*point);
        let mut row = if by_mu {
            vec![fmt_num(point.mu), fmt_num(point.lambda_tau)]
        } else {
            vec![fmt_num(point.lambda_tau), fmt_num(point.mu)]
        };
        row.extend([
            fmt_num(point.p_opt),
            fmt_num(point.i_c_opt),
            fmt_num(point.rate),
            fmt_num(report.private_rate),
        ]);
        if let Some(check) = &opt.r_check {
            row.push(fmt_num(check.max_excess));
        }
        table.rows.push(row);
    }
    Ok(vec![table])
}

fn forgetfulness_tables(config: &RunConfig) -> Result<Vec<Table>, RunError> {
    let params = config.params(config.lambda_tau)?;
    let fit = forgetfulness_probe(&params, config.p, config.l_max).map_err(|e| {
        config.compute_error(
            format!(
                "p={} lambda_tau={} l_max={}",
                config.p, config.lambda_tau, config.l_max
            ),
            e,
        )
    })?;
    let mut distances = Table::new(None, config.comment_line(), vec!["L", "distance"]);
    for (l, d) in &fit.distances {
        distances.rows.push(vec![l.to_string(), fmt_num(*d)]);
    }
    let mut summary = Table::new(
        Some("fit"),
        config.comment_line(),
        vec!["c", "h", "r_squared", "exp_gamma_tau"],
    );
    summary.rows.push(vec![
        fmt_num(fit.c),
        fmt_num(fit.h),
        fmt_num(fit.r_squared),
        fmt_num(params.damping_exponent().exp()),
    ]);
    Ok(vec![distances, summary])
}

fn validate_tables(config: &RunConfig) -> Result<Vec<Table>, RunError> {
    let checks = run_oracle_suite(config.seed)
        .map_err(|e| config.compute_error(format!("seed={}", config.seed), e))?;
    let mut table = Table::new(
        None,
        config.comment_line(),
        vec!["check", "cases", "max_error", "tolerance", "pass"],
    );
    for check in &checks {
        table.rows.push(vec![
            check.name.to_string(),
            check.cases.to_string(),
            fmt_num(check.max_error),
            fmt_num(check.tolerance),
            check.passed().to_string(),
        ]);
    }
    Ok(vec![table])
}

/// Path of a side table next to the primary output.
pub fn side_path(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    primary.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Writes the tables: to `config.output` and its side files, or one after
/// another (blank-line separated) to `stdout`.
pub fn write_tables(
    config: &RunConfig,
    tables: &[Table],
    stdout: &mut dyn Write,
) -> Result<(), RunError> {
    match &config.output {
        Some(path) => {
            for table in tables {
                let target = match table.suffix {
                    Some(suffix) => side_path(path, suffix),
                    None => path.clone(),
                };
                fs::write(target, table.to_csv())?;
            }
        }
        None => {
            for (i, table) in tables.iter().enumerate() {
                if i > 0 {
                    stdout.write_all(b"\n")?;
                }
                stdout.write_all(table.to_csv().as_bytes())?;
            }
        }
    }
    Ok(())
}

fn resolve(command: &Command) -> Result<RunConfig, RunError> {
    let (experiment, raw) = match command {
        Command::Memoryless(a) => (Experiment::Memoryless, a),
        Command::SteadyState(a) => (Experiment::SteadyState, a),
        Command::SweepTau(a) => (Experiment::SweepTau, a),
        Command::SweepMu(a) => (Experiment::SweepMu, a),
        Command::Forgetfulness(a) => (Experiment::Forgetfulness, a),
        Command::Validate(a) => (Experiment::Validate, a),
    };
    let mut entries = match &raw.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                ConfigError::new("config", format!("cannot read {}: {e}", path.display()))
            })?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    entries.extend(raw.flag_entries());
    Ok(RunConfig::resolve(experiment, &entries)?)
}

/// Full CLI entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    let result = resolve(&cli.command).and_then(|config| {
        let tables = execute(&config);
        let failed_checks = match (&tables, config.experiment) {
            (Ok(t), Experiment::Validate) => t[0]
                .rows
                .iter()
                .filter(|row| row.last().map(String::as_str) == Some("false"))
                .count(),
            _ => 0,
        };
        write_tables(&config, &tables?, stdout)?;
        if failed_checks > 0 {
            return Err(RunError::Validation {
                failed: failed_checks,
            });
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn grid_specs() {
        assert_eq!(
            parse_grid("g", "0.5:1.0:0.25").unwrap(),
            vec![0.5, 0.75, 1.0]
        );
        assert_eq!(parse_grid("g", "1,2,3.5").unwrap(), vec![1.0, 2.0, 3.5]);
        let log = parse_grid("g", "0.5:40:log").unwrap();
        assert_eq!(log.len(), DEFAULT_LOG_POINTS);
        assert_eq!((log[0], log[DEFAULT_LOG_POINTS - 1]), (0.5, 40.0));
        assert!(log.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(parse_grid("g", "1:100:log3").unwrap().len(), 3);
        for bad in ["", "a:b:c", "1:0:0.1", "0:1:log", "1:2:-1", "1:2:3:4"] {
            let err = parse_grid("tau-grid", bad).unwrap_err();
            assert_eq!(err.key, "tau-grid", "{bad}");
        }
    }

    #[test]
    fn config_file_parsing() {
        let map = parse_config_file("# comment\neta = 0.8\nlambda_tau_d=20\n\n").unwrap();
        assert_eq!(map["eta"], "0.8");
        assert_eq!(map["lambda-tau-d"], "20");
        assert_eq!(parse_config_file("bogus = 1").unwrap_err().key, "bogus");
        assert!(parse_config_file("eta 0.8").is_err());
    }

    #[test]
    fn resolution_errors_name_the_key() {
        let err = RunConfig::resolve(Experiment::SteadyState, &entries(&[])).unwrap_err();
        assert_eq!(err.key, "eta");
        let err = RunConfig::resolve(
            Experiment::SteadyState,
            &entries(&[("eta", "0.8"), ("theta", "0.4")]),
        )
        .unwrap_err();
        assert_eq!(err.key, "eta");
        let err = RunConfig::resolve(
            Experiment::SteadyState,
            &entries(&[("eta", "0.8"), ("p", "x")]),
        )
        .unwrap_err();
        assert_eq!(err.key, "p");
        let err =
            RunConfig::resolve(Experiment::SweepTau, &entries(&[("eta", "0.9")])).unwrap_err();
        assert_eq!(err.key, "tau-grid");
        let err = RunConfig::resolve(
            Experiment::SweepMu,
            &entries(&[("eta", "0.9"), ("mu-grid", "0.5,1.0")]),
        )
        .unwrap_err();
        assert_eq!(err.key, "mu-grid");
        let err = RunConfig::resolve(
            Experiment::Forgetfulness,
            &entries(&[("eta", "0.9"), ("lambda-tau-d", "0")]),
        )
        .unwrap_err();
        assert_eq!(err.key, "lambda-tau-d");
    }

    #[test]
    fn resolution_defaults() {
        let config =
            RunConfig::resolve(Experiment::SteadyState, &entries(&[("eta", "0.8")])).unwrap();
        assert_eq!(config.lambda_tau_d, 20.0);
        assert_eq!(config.lambda_tau, 2.0);
        assert_eq!(config.p, 0.5);
        assert_eq!(config.k, 200);
        let memoryless = RunConfig::resolve(Experiment::Memoryless, &entries(&[])).unwrap();
        assert_eq!(memoryless.eta_grid.len(), 51);
    }

    #[test]
    fn number_format_has_twelve_digits() {
        assert_eq!(fmt_num(0.5), "5.00000000000e-1");
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_num(0.0), "0.00000000000e0");
    }

    #[test]
    fn side_paths() {
        assert_eq!(
            side_path(Path::new("/tmp/run.csv"), "fit"),
            PathBuf::from("/tmp/run_fit.csv")
        );
    }
}
