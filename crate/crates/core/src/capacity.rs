//! Capacities and transmission rates.
//!
//! The memoryless channel is amplitude damping with retention `η`, whose
//! quantum capacity is a one-dimensional maximization. With memory, the
//! per-use coherent information is evaluated at the cavity steady state
//! driven by the chosen input and maximized over the input population.

use rayon::prelude::*;

use crate::cavity::{
    steady_state, CavityPopulations, ChannelParams, DampingPropagator, SteadyState,
    DEFAULT_MAX_ITER, DEFAULT_STEADY_TOL,
};
use crate::channel::coherent_information_single_use;
use crate::error::check_unit_interval;
use crate::optimize::grid_then_golden;
use crate::quantum::QubitInput;
use crate::{Error, Result, C64};

/// Threshold of the coherence check.
pub const R_CHECK_TOL: f64 = 1e-9;
/// Distances at or below this are treated as numerically zero by the
/// forgetfulness fit.
pub const FIT_FLOOR: f64 = 1e-14;

/// `H₂(x) = −x log₂ x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_unit_interval("x", x)?;
    let term = |y: f64| if y > 0.0 { -y * y.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemorylessCapacity {
    pub q: f64,
    pub p_opt: f64,
}

/// `Q(η) = max_p [H₂(ηp) − H₂((1−η)p)]` for `η > ½`, zero otherwise.
pub fn memoryless_quantum_capacity(eta: f64) -> Result<MemorylessCapacity> {
    check_unit_interval("eta", eta)?;
    if eta <= 0.5 {
        return Ok(MemorylessCapacity { q: 0.0, p_opt: 0.0 });
    }
    let best = grid_then_golden(
        |p| Ok(binary_entropy(eta * p)? - binary_entropy((1.0 - eta) * p)?),
        0.0,
        1.0,
        0.01,
        1e-9,
    )?;
    Ok(MemorylessCapacity {
        q: best.value.max(0.0),
        p_opt: best.x,
    })
}

/// Knobs of the steady-state input optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Coarse grid spacing over `p`.
    pub p_step: f64,
    /// Golden-section bracket width at which refinement stops.
    pub p_tol: f64,
    pub steady_tol: f64,
    pub max_iter: usize,
    /// Also check that no coherent input beats `r = 0` at the optimum.
    pub r_check: bool,
    /// Number of nonzero `r` values tried by the check.
    pub r_steps: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            p_step: 0.01,
            p_tol: 1e-9,
            steady_tol: DEFAULT_STEADY_TOL,
            max_iter: DEFAULT_MAX_ITER,
            r_check: false,
            r_steps: 10,
        }
    }
}

/// Outcome of the coherence check at the optimal population.
#[derive(Debug, Clone, PartialEq)]
pub struct RCheck {
    /// `(r, I_c(p_opt, r) − I_c(p_opt, 0))` for each tried `r`.
    pub excess: Vec<(f64, f64)>,
    pub max_excess: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateOptimum {
    pub p_opt: f64,
    pub i_c_opt: f64,
    pub steady: SteadyState,
    pub r_check: Option<RCheck>,
}

/// Stationary per-use coherent information for input population `p`
/// (`r = 0`), together with the steady state that input drives.
pub fn steady_state_coherent_information(
    p: f64,
    params: &ChannelParams,
    options: &OptimizeOptions,
) -> Result<(f64, SteadyState)> {
    let steady = steady_state(p, params, options.steady_tol, options.max_iter)?;
    let input = QubitInput::classical(p)?;
    let ic = coherent_information_single_use(&input, &steady.populations, params.theta())?;
    Ok((ic, steady))
}

/// Maximizes the stationary coherent information over classical inputs.
/// Each candidate `p` drives its own steady state.
pub fn optimize_steady_state_input(
    params: &ChannelParams,
    options: &OptimizeOptions,
) -> Result<SteadyStateOptimum> {
    let objective =
        |p: f64| steady_state_coherent_information(p, params, options).map(|(ic, _)| ic);
    let best = grid_then_golden(objective, 0.0, 1.0, options.p_step, options.p_tol)?;
    let (i_c_opt, steady) = steady_state_coherent_information(best.x, params, options)?;
    let r_check = if options.r_check {
        Some(coherence_check(
            best.x,
            i_c_opt,
            &steady.populations,
            params,
            options.r_steps,
        )?)
    } else {
        None
    };
    Ok(SteadyStateOptimum {
        p_opt: best.x,
        i_c_opt,
        steady,
        r_check,
    })
}

fn coherence_check(
    p: f64,
    baseline: f64,
    w: &CavityPopulations,
    params: &ChannelParams,
    steps: usize,
) -> Result<RCheck> {
    let bound = (p * (1.0 - p)).sqrt();
    let excess = (1..=steps)
        .map(|i| {
            let r = bound * i as f64 / steps as f64;
            let input = QubitInput::new(p, C64::new(r, 0.0))?;
            let ic = coherent_information_single_use(&input, w, params.theta())?;
            Ok((r, ic - baseline))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_excess = excess.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(RCheck {
        passed: max_excess <= R_CHECK_TOL,
        excess,
        max_excess,
    })
}

/// One point of a transmission-rate sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub lambda_tau: f64,
    pub mu: f64,
    pub p_opt: f64,
    pub i_c_opt: f64,
    /// `I_c / λτ`, qubits per unit `λt`.
    pub rate: f64,
}

impl RatePoint {
    pub fn new(lambda_tau: f64, lambda_tau_d: f64, p_opt: f64, i_c_opt: f64) -> Self {
        Self {
            lambda_tau,
            mu: lambda_tau_d / (lambda_tau + lambda_tau_d),
            p_opt,
            i_c_opt,
            rate: i_c_opt / lambda_tau,
        }
    }
}

fn check_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::Domain {
            name: "tau_grid",
            value: f64::NAN,
            domain: "non-empty",
        });
    }
    if let Some(&bad) = tau_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Domain {
            name: "tau_grid",
            value: bad,
            domain: "(0, inf)",
        });
    }
    if let Some(w) = tau_grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Domain {
            name: "tau_grid",
            value: w[1],
            domain: "strictly ascending",
        });
    }
    Ok(())
}

/// Optimized steady state at each `λτ` of an ascending grid, keeping the
/// transit angle and lifetime of `base`. Points run in parallel; the result
/// follows grid order.
pub fn sweep_optima(
    base: &ChannelParams,
    tau_grid: &[f64],
    options: &OptimizeOptions,
) -> Result<Vec<(RatePoint, SteadyStateOptimum)>> {
    check_tau_grid(tau_grid)?;
    tau_grid
        .par_iter()
        .map(|&lambda_tau| {
            let params = base.with_lambda_tau(lambda_tau)?;
            let opt = optimize_steady_state_input(&params, options)?;
            Ok((
                RatePoint::new(lambda_tau, base.lambda_tau_d(), opt.p_opt, opt.i_c_opt),
                opt,
            ))
        })
        .collect()
}

/// Optimized rate `I_c / λτ` along an ascending grid of `λτ`.
pub fn rate_sweep(
    eta: f64,
    lambda_tau_d: f64,
    tau_grid: &[f64],
    options: &OptimizeOptions,
) -> Result<Vec<RatePoint>> {
    let base = ChannelParams::from_eta(eta, 0.0, lambda_tau_d)?;
    Ok(sweep_optima(&base, tau_grid, options)?
        .into_iter()
        .map(|(point, _)| point)
        .collect())
}

/// Exponential fit `d(L) ≈ h c^(−L)` of cavity distances under idle damping.
#[derive(Debug, Clone, PartialEq)]
pub struct ForgetfulnessFit {
    pub distances: Vec<(usize, f64)>,
    pub c: f64,
    pub h: f64,
    pub r_squared: f64,
}

/// Tracks the trace distance between two cavity states through `l_max` idle
/// intervals of damping `Γτ` each, and fits `ln d` linearly in `L`.
pub fn forgetfulness_between(
    a: &CavityPopulations,
    b: &CavityPopulations,
    gamma_t: f64,
    l_max: usize,
) -> Result<ForgetfulnessFit> {
    if l_max < 3 {
        return Err(Error::Domain {
            name: "l_max",
            value: l_max as f64,
            domain: "[3, inf)",
        });
    }
    let mut damping = DampingPropagator::new(gamma_t)?;
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut distances = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        if l > 0 {
            a = damping.apply(&a)?;
            b = damping.apply(&b)?;
        }
        let d = a.trace_distance(&b);
        if d <= FIT_FLOOR {
            return Err(Error::FitDegenerate(format!(
                "distance {d:e} at L = {l} is below the numerical floor before L = {l_max}"
            )));
        }
        distances.push((l, d));
    }

    let n = distances.len() as f64;
    let xs: Vec<f64> = distances.iter().map(|&(l, _)| l as f64).collect();
    let ys: Vec<f64> = distances.iter().map(|&(_, d)| d.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let syy: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    if !(slope < 0.0) || syy == 0.0 {
        return Err(Error::FitDegenerate(format!(
            "distances do not decay (slope {slope:e})"
        )));
    }
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(ForgetfulnessFit {
        distances,
        c: (-slope).exp(),
        h: intercept.exp(),
        r_squared: 1.0 - ss_res / syy,
    })
}

/// Forgetfulness probe between the vacuum and the steady state driven by
/// input population `p`.
pub fn forgetfulness_probe(
    params: &ChannelParams,
    p: f64,
    l_max: usize,
) -> Result<ForgetfulnessFit> {
    let steady = steady_state(p, params, DEFAULT_STEADY_TOL, DEFAULT_MAX_ITER)?;
    forgetfulness_between(
        &CavityPopulations::vacuum(),
        &steady.populations,
        params.damping_exponent(),
        l_max,
    )
}

/// Rate point annotated with the private classical rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivateRatePoint {
    pub point: RatePoint,
    /// Lower bound on `C_p / τ`; the coherent information bounds the private
    /// capacity from below, with equality for the degradable memoryless limit.
    pub private_rate: f64,
}

pub fn private_rate_report(point: RatePoint) -> PrivateRatePoint {
    PrivateRatePoint {
        point,
        private_rate: point.rate,
    }
}
