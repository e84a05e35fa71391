//! Fock-population dynamics of the cavity.
//!
//! In the strongly dephased regime the cavity is diagonal in the Fock basis
//! and one channel use maps populations `w` to `damp(kick(w))`: a resonant
//! Jaynes-Cummings exchange with the crossing qubit, then free relaxation for
//! the time separating two qubits.

use crate::error::check_unit_interval;
use crate::{Error, Result};

/// Fock truncation used for fresh population vectors.
pub const INITIAL_N_MAX: usize = 64;
/// Hard ceiling on the Fock truncation.
pub const MAX_N_MAX: usize = 4096;
/// Mass allowed at or above the truncation level.
pub const TAIL_TOL: f64 = 1e-12;
/// Negative populations above this are floating-point dust.
pub const NEGATIVE_TOL: f64 = 1e-14;
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Default L1 convergence threshold for [`steady_state`].
pub const DEFAULT_STEADY_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Diagonal cavity state `{w_n}`, `n = 0..=n_max`.
///
/// Invariants: entries are non-negative, sum to one and the top level
/// `w[n_max]` holds less than [`TAIL_TOL`]. `n_max` starts at
/// [`INITIAL_N_MAX`] and doubles whenever the tail fills up.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityPopulations {
    w: Vec<f64>,
}

impl CavityPopulations {
    /// The vacuum `δ₀`.
    pub fn vacuum() -> Self {
        let mut w = vec![0.0; INITIAL_N_MAX + 1];
        w[0] = 1.0;
        Self { w }
    }

    /// The Fock state `δ_n`.
    pub fn fock(n: usize) -> Result<Self> {
        let mut w = vec![0.0; n + 1];
        w[n] = 1.0;
        Self::new(w)
    }

    /// Validates a population vector and pads it to a safe truncation.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(bad) = weights
            .iter()
            .find(|x| !x.is_finite() || **x < -NEGATIVE_TOL)
        {
            return Err(Error::InvalidPopulations(format!(
                "entry {bad} is negative or not finite"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidPopulations(format!(
                "populations sum to {total}"
            )));
        }
        Self::settle(weights, INITIAL_N_MAX)
    }

    /// Clamps dust, grows the truncation until the tail is empty enough,
    /// drops whatever sits beyond it and renormalizes.
    fn settle(mut w: Vec<f64>, n_max: usize) -> Result<Self> {
        for x in w.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let mut n_max = n_max.max(INITIAL_N_MAX);
        loop {
            let tail: f64 = w.iter().skip(n_max).sum();
            if tail < TAIL_TOL {
                break;
            }
            if 2 * n_max > MAX_N_MAX {
                return Err(Error::TruncationOverflow {
                    n_max,
                    tail_mass: tail,
                });
            }
            n_max *= 2;
        }
        w.resize(n_max + 1, 0.0);
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidPopulations("zero total mass".into()));
        }
        if total != 1.0 {
            w.iter_mut().for_each(|x| *x /= total);
        }
        Ok(Self { w })
    }

    pub fn n_max(&self) -> usize {
        self.w.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// `w_n`, zero beyond the truncation.
    pub fn get(&self, n: usize) -> f64 {
        self.w.get(n).copied().unwrap_or(0.0)
    }

    /// One past the highest occupied level.
    pub fn support_end(&self) -> usize {
        self.w.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1)
    }

    /// `Σ |a_n − b_n|` over the union of both supports.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let len = self.w.len().max(other.w.len());
        (0..len).map(|n| (self.get(n) - other.get(n)).abs()).sum()
    }

    /// Trace distance between the two diagonal cavity states.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        0.5 * self.l1_distance(other)
    }
}

/// `⟨a†a⟩ = Σ n w_n`.
pub fn mean_photon_number(w: &CavityPopulations) -> f64 {
    w.as_slice()
        .iter()
        .enumerate()
        .map(|(n, &x)| n as f64 * x)
        .sum()
}

/// Dimensionless timing of the channel, in units where the coupling is one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    theta: f64,
    lambda_tau: f64,
    lambda_tau_d: f64,
}

impl ChannelParams {
    /// `theta = λτ_p` (transit), `lambda_tau = λτ` (separation between
    /// qubits), `lambda_tau_d = λτ_d` (cavity lifetime).
    pub fn new(theta: f64, lambda_tau: f64, lambda_tau_d: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::Domain {
                name: "theta",
                value: theta,
                domain: "[0, inf)",
            });
        }
        if !(lambda_tau.is_finite() && lambda_tau >= 0.0) {
            return Err(Error::Domain {
                name: "lambda_tau",
                value: lambda_tau,
                domain: "[0, inf)",
            });
        }
        if !(lambda_tau_d.is_finite() && lambda_tau_d > 0.0) {
            return Err(Error::Domain {
                name: "lambda_tau_d",
                value: lambda_tau_d,
                domain: "(0, inf)",
            });
        }
        Ok(Self {
            theta,
            lambda_tau,
            lambda_tau_d,
        })
    }

    /// Parametrizes the transit by the memoryless retention `eta = cos²(λτ_p)`,
    /// taking the smallest positive angle.
    pub fn from_eta(eta: f64, lambda_tau: f64, lambda_tau_d: f64) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        Self::new(theta_from_eta(eta), lambda_tau, lambda_tau_d)
    }

    pub fn with_lambda_tau(&self, lambda_tau: f64) -> Result<Self> {
        Self::new(self.theta, lambda_tau, self.lambda_tau_d)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eta(&self) -> f64 {
        self.theta.cos().powi(2)
    }

    pub fn lambda_tau(&self) -> f64 {
        self.lambda_tau
    }

    pub fn lambda_tau_d(&self) -> f64 {
        self.lambda_tau_d
    }

    /// `Γτ = λτ / λτ_d`.
    pub fn damping_exponent(&self) -> f64 {
        self.lambda_tau / self.lambda_tau_d
    }

    /// Memory parameter `μ = τ_d / (τ + τ_d)`.
    pub fn memory(&self) -> f64 {
        self.lambda_tau_d / (self.lambda_tau + self.lambda_tau_d)
    }
}

/// `arccos(√eta)`.
pub fn theta_from_eta(eta: f64) -> f64 {
    eta.sqrt().clamp(0.0, 1.0).acos()
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "theta",
            value: theta,
            domain: "[0, inf)",
        })
    }
}

/// Population kick of one qubit crossing: precomputed `sin²(θ√n)` and
/// `cos²(θ√n)` for a fixed input population `p`.
#[derive(Debug, Clone)]
pub struct PopulationKick {
    p: f64,
    theta: f64,
    sin2: Vec<f64>,
    cos2: Vec<f64>,
}

impl PopulationKick {
    pub fn new(p: f64, theta: f64) -> Result<Self> {
        check_unit_interval("p", p)?;
        check_theta(theta)?;
        let mut kick = Self {
            p,
            theta,
            sin2: Vec::new(),
            cos2: Vec::new(),
        };
        kick.reserve(INITIAL_N_MAX + 1);
        Ok(kick)
    }

    fn reserve(&mut self, levels: usize) {
        for n in self.sin2.len()..=levels {
            let (s, c) = (self.theta * (n as f64).sqrt()).sin_cos();
            self.sin2.push(s * s);
            self.cos2.push(c * c);
        }
    }

    pub fn apply(&mut self, w: &CavityPopulations) -> Result<CavityPopulations> {
        let n_max = w.n_max();
        self.reserve(n_max + 1);
        let (p, q) = (self.p, 1.0 - self.p);
        let mut out = vec![0.0; n_max + 2];
        for (n, &wn) in w.as_slice()[..w.support_end()].iter().enumerate() {
            if wn == 0.0 {
                continue;
            }
            // |g,n⟩ stays or moves to |e,n-1⟩; |e,n⟩ stays or moves to |g,n+1⟩.
            out[n] += wn * (q * self.cos2[n] + p * self.cos2[n + 1]);
            if n > 0 {
                out[n - 1] += wn * q * self.sin2[n];
            }
            out[n + 1] += wn * p * self.sin2[n + 1];
        }
        CavityPopulations::settle(out, n_max)
    }
}

/// Cavity populations after the Jaynes-Cummings exchange with one qubit of
/// excited population `p`. The qubit coherence does not enter.
pub fn jc_population_update(
    w: &CavityPopulations,
    p: f64,
    theta: f64,
) -> Result<CavityPopulations> {
    PopulationKick::new(p, theta)?.apply(w)
}

/// Zero-temperature relaxation over an interval `Γt`: each photon survives
/// independently with probability `s = exp(-Γt)`, so level `m` spreads into
/// the binomial distribution `B(m, s)`.
#[derive(Debug, Clone)]
pub struct DampingPropagator {
    gamma_t: f64,
    /// `columns[m][n] = C(m,n) sⁿ (1-s)^(m-n)`.
    columns: Vec<Vec<f64>>,
    ln_factorial: Vec<f64>,
}

impl DampingPropagator {
    pub fn new(gamma_t: f64) -> Result<Self> {
        if !(gamma_t >= 0.0) {
            return Err(Error::Domain {
                name: "gamma_t",
                value: gamma_t,
                domain: "[0, inf]",
            });
        }
        let mut prop = Self {
            gamma_t,
            columns: Vec::new(),
            ln_factorial: vec![0.0],
        };
        prop.reserve(INITIAL_N_MAX);
        Ok(prop)
    }

    pub fn survival(&self) -> f64 {
        (-self.gamma_t).exp()
    }

    fn reserve(&mut self, n_max: usize) {
        for k in self.ln_factorial.len()..=n_max {
            let prev = self.ln_factorial[k - 1];
            self.ln_factorial.push(prev + (k as f64).ln());
        }
        let ln_s = -self.gamma_t;
        let ln_loss = (-(-self.gamma_t).exp_m1()).ln();
        for m in self.columns.len()..=n_max {
            let mut column = vec![0.0; m + 1];
            if self.gamma_t == 0.0 || ln_s == 0.0 {
                column[m] = 1.0;
            } else if ln_loss == 0.0 || ln_s == f64::NEG_INFINITY {
                column[0] = 1.0;
            } else {
                let lf = &self.ln_factorial;
                for (n, c) in column.iter_mut().enumerate() {
                    let ln_pmf =
                        lf[m] - lf[n] - lf[m - n] + n as f64 * ln_s + (m - n) as f64 * ln_loss;
                    *c = ln_pmf.exp();
                }
                let total: f64 = column.iter().sum();
                column.iter_mut().for_each(|c| *c /= total);
            }
            self.columns.push(column);
        }
    }

    pub fn apply(&mut self, w: &CavityPopulations) -> Result<CavityPopulations> {
        let n_max = w.n_max();
        let support = w.support_end();
        self.reserve(support.saturating_sub(1));
        let mut out = vec![0.0; n_max + 1];
        for (m, &wm) in w.as_slice()[..support].iter().enumerate() {
            if wm == 0.0 {
                continue;
            }
            for (o, &c) in out.iter_mut().zip(&self.columns[m]) {
                *o += c * wm;
            }
        }
        CavityPopulations::settle(out, n_max)
    }
}

/// Applies the binomial pure-loss propagator for `Γt = gamma_t`.
pub fn damp_populations(w: &CavityPopulations, gamma_t: f64) -> Result<CavityPopulations> {
    DampingPropagator::new(gamma_t)?.apply(w)
}

/// Integrates `dw_n/d(Γt) = (n+1) w_{n+1} − n w_n` with classical RK4.
///
/// Independent check of [`damp_populations`]. The truncated system is exact
/// because population only flows downwards.
pub fn damp_populations_ode_oracle(
    w: &CavityPopulations,
    gamma_t: f64,
    steps: usize,
) -> Result<CavityPopulations> {
    if !(gamma_t.is_finite() && gamma_t >= 0.0) {
        return Err(Error::Domain {
            name: "gamma_t",
            value: gamma_t,
            domain: "[0, inf)",
        });
    }
    let steps = steps.max(1);
    let h = gamma_t / steps as f64;
    let len = w.support_end().max(1);
    let rhs = |y: &[f64], out: &mut [f64]| {
        for n in 0..y.len() {
            let inflow = if n + 1 < y.len() {
                (n + 1) as f64 * y[n + 1]
            } else {
                0.0
            };
            out[n] = inflow - n as f64 * y[n];
        }
    };
    let mut y = w.as_slice()[..len].to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
    );
    let mut tmp = vec![0.0; len];
    for _ in 0..steps {
        rhs(&y, &mut k1);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..len {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y.resize(w.n_max() + 1, 0.0);
    CavityPopulations::settle(y, w.n_max())
}

/// One full channel use for a fixed input population `p`: kick then damp.
#[derive(Debug, Clone)]
pub struct ChannelUse {
    kick: PopulationKick,
    damping: DampingPropagator,
}

impl ChannelUse {
    pub fn new(p: f64, params: &ChannelParams) -> Result<Self> {
        Ok(Self {
            kick: PopulationKick::new(p, params.theta())?,
            damping: DampingPropagator::new(params.damping_exponent())?,
        })
    }

    pub fn apply(&mut self, w: &CavityPopulations) -> Result<CavityPopulations> {
        let kicked = self.kick.apply(w)?;
        self.damping.apply(&kicked)
    }
}

/// `{w^(k-1)} → {w^(k)}`.
pub fn channel_use_populations(
    w: &CavityPopulations,
    p: f64,
    params: &ChannelParams,
) -> Result<CavityPopulations> {
    ChannelUse::new(p, params)?.apply(w)
}

/// Successive cavity states `w^(1), w^(2), …` starting from the vacuum.
#[derive(Debug, Clone)]
pub struct Trajectory {
    step: ChannelUse,
    current: CavityPopulations,
    failed: bool,
}

impl Iterator for Trajectory {
    type Item = Result<CavityPopulations>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.step.apply(&self.current) {
            Ok(next) => {
                self.current = next.clone();
                Some(Ok(next))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

pub fn trajectory(p: f64, params: &ChannelParams) -> Result<Trajectory> {
    Ok(Trajectory {
        step: ChannelUse::new(p, params)?,
        current: CavityPopulations::vacuum(),
        failed: false,
    })
}

/// Fixed point of the channel-use map together with the number of uses it
/// took to get there.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub populations: CavityPopulations,
    pub iterations: usize,
}

/// Iterates the channel-use map from the vacuum until two successive states
/// are within `tol` in L1.
pub fn steady_state(
    p: f64,
    params: &ChannelParams,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyState> {
    if !(tol > 0.0) {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            domain: "(0, inf)",
        });
    }
    let mut step = ChannelUse::new(p, params)?;
    let mut w = CavityPopulations::vacuum();
    let mut distance = f64::INFINITY;
    for k in 1..=max_iter {
        let next = step.apply(&w)?;
        distance = next.l1_distance(&w);
        w = next;
        if distance <= tol {
            return Ok(SteadyState {
                populations: w,
                iterations: k,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        distance,
    })
}
