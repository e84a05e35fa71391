//! Built-in oracle suite behind `memchannel validate`.
//!
//! Every check compares two independent routes to the same quantity on
//! seeded random cases and reports the worst disagreement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::{binary_entropy, memoryless_quantum_capacity};
use crate::cavity::{
    damp_populations, damp_populations_ode_oracle, jc_population_update, theta_from_eta,
    CavityPopulations,
};
use crate::channel::{
    amplitude_damping_output, cavity_populations_after_crossing, joint_output_with_purification,
    qubit_marginal, single_use_output, Purification,
};
use crate::quantum::{trace_distance, von_neumann_entropy, QubitInput};
use crate::{Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

pub fn random_populations(rng: &mut impl Rng, max_levels: usize) -> CavityPopulations {
    let levels = rng.gen_range(1..=max_levels);
    let raw: Vec<f64> = (0..levels).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    CavityPopulations::new(raw.into_iter().map(|x| x / total).collect())
        .expect("normalized random populations")
}

pub fn random_qubit_input(rng: &mut impl Rng) -> QubitInput {
    let p: f64 = rng.gen();
    let magnitude = (p * (1.0 - p)).sqrt() * rng.gen::<f64>();
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    QubitInput::new(p, C64::from_polar(magnitude, phase)).expect("admissible coherence")
}

fn check(
    name: &'static str,
    cases: usize,
    tolerance: f64,
    mut error: impl FnMut() -> Result<f64>,
) -> Result<OracleCheck> {
    let mut max_error = 0.0f64;
    for _ in 0..cases {
        max_error = max_error.max(error()?);
    }
    Ok(OracleCheck {
        name,
        cases,
        max_error,
        tolerance,
    })
}

pub fn run_oracle_suite(seed: u64) -> Result<Vec<OracleCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    checks.push(check("binomial_vs_ode_damping", 1000, 1e-8, || {
        let w = random_populations(&mut rng, 12);
        let gamma_t = rng.gen_range(0.0..5.0);
        let exact = damp_populations(&w, gamma_t)?;
        let ode = damp_populations_ode_oracle(&w, gamma_t, 4000)?;
        Ok(exact.l1_distance(&ode))
    })?);

    checks.push(check("damping_semigroup", 1000, 1e-10, || {
        let w = random_populations(&mut rng, 20);
        let (a, b) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
        let split = damp_populations(&damp_populations(&w, a)?, b)?;
        Ok(split.l1_distance(&damp_populations(&w, a + b)?))
    })?);

    checks.push(check("kraus_vs_dilation", 1000, 1e-12, || {
        let input = random_qubit_input(&mut rng);
        let eta: f64 = rng.gen();
        let kraus = amplitude_damping_output(&input, eta)?;
        let dilation =
            single_use_output(&input, &CavityPopulations::vacuum(), theta_from_eta(eta))?;
        Ok((kraus.matrix() - dilation.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    })?);

    checks.push(check("purification_independence", 1000, 1e-10, || {
        let input = random_qubit_input(&mut rng);
        let w = random_populations(&mut rng, 10);
        let theta = rng.gen_range(0.0..3.0);
        let a = joint_output_with_purification(&input, &w, theta, Purification::Spectral)?;
        let b = joint_output_with_purification(&input, &w, theta, Purification::SquareRoot)?;
        Ok((von_neumann_entropy(&a) - von_neumann_entropy(&b)).abs())
    })?);

    checks.push(check("population_map_consistency", 1000, 1e-12, || {
        let input = random_qubit_input(&mut rng);
        let w = random_populations(&mut rng, 10);
        let theta = rng.gen_range(0.0..3.0);
        let full = cavity_populations_after_crossing(&input, &w, theta);
        let kicked = jc_population_update(&w, input.p(), theta)?;
        Ok(full
            .iter()
            .enumerate()
            .map(|(n, x)| (x - kicked.get(n)).abs())
            .fold(0.0, f64::max))
    })?);

    checks.push(check("marginal_vs_closed_form", 1000, 1e-12, || {
        let input = random_qubit_input(&mut rng);
        let w = random_populations(&mut rng, 10);
        let theta = rng.gen_range(0.0..3.0);
        let joint = joint_output_with_purification(&input, &w, theta, Purification::Spectral)?;
        trace_distance(
            &qubit_marginal(&joint)?,
            &single_use_output(&input, &w, theta)?,
        )
    })?);

    checks.push(check("kick_and_damp_normalization", 1000, 1e-10, || {
        let w = random_populations(&mut rng, 30);
        let kicked = jc_population_update(&w, rng.gen(), rng.gen_range(0.0..3.0))?;
        let damped = damp_populations(&kicked, rng.gen_range(0.0..5.0))?;
        Ok((kicked.as_slice().iter().sum::<f64>() - 1.0)
            .abs()
            .max((damped.as_slice().iter().sum::<f64>() - 1.0).abs()))
    })?);

    let etas: Vec<f64> = (11..=20).map(|i| i as f64 * 0.05).collect();
    let mut eta_iter = etas.iter();
    checks.push(check(
        "memoryless_capacity_vs_grid",
        etas.len(),
        1e-6,
        || {
            let eta = *eta_iter.next().expect("one eta per case");
            let brute = (0..=100_000)
                .map(|i| {
                    let p = i as f64 * 1e-5;
                    Ok(binary_entropy(eta * p)? - binary_entropy((1.0 - eta) * p)?)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((memoryless_quantum_capacity(eta)?.q - brute).abs())
        },
    )?);

    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for check in run_oracle_suite(7).unwrap() {
            assert!(check.passed(), "{check:?}");
        }
    }
}
