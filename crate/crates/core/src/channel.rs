//! The single-use qubit map for a diagonal cavity state.
//!
//! At resonance the Jaynes-Cummings unitary splits into 2×2 rotations on the
//! sectors `{|e,n-1⟩, |g,n⟩}`, `n ≥ 1`, with angle `θ√n`; `|g,0⟩` is left
//! alone. For a cavity prepared in `|n⟩` the qubit therefore sees three
//! branches, one per output Fock level:
//!
//! ```text
//! |n⟩   : diag(cos θ√n, cos θ√(n+1))
//! |n-1⟩ : -i sin θ√n     |e⟩⟨g|
//! |n+1⟩ : -i sin θ√(n+1) |g⟩⟨e|
//! ```
//!
//! A diagonal cavity state mixes these with weights `w_n`, so every output
//! here is a `w_n`-weighted sum of small per-level pieces.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};

use crate::cavity::CavityPopulations;
use crate::error::check_unit_interval;
use crate::quantum::{von_neumann_entropy, DensityMatrix, QubitInput};
use crate::{Result, C64};

/// Rotation of the JC unitary on the sector `{|e,n-1⟩, |g,n⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcBlockRotation {
    pub n: usize,
    pub cos_term: f64,
    pub sin_term: f64,
}

impl JcBlockRotation {
    pub fn new(theta: f64, n: usize) -> Self {
        let (sin_term, cos_term) = (theta * (n as f64).sqrt()).sin_cos();
        Self {
            n,
            cos_term,
            sin_term,
        }
    }
}

/// One rotation per sector `n = 1..=n_max+1`.
pub fn jc_unitary_blocks(theta: f64, n_max: usize) -> Vec<JcBlockRotation> {
    (1..=n_max + 1)
        .map(|n| JcBlockRotation::new(theta, n))
        .collect()
}

/// Qubit operators for a cavity entering in `|n⟩`, tagged by the Fock level
/// the cavity leaves in.
fn level_branches(theta: f64, n: usize) -> impl Iterator<Item = (usize, Matrix2<C64>)> {
    let zero = C64::new(0.0, 0.0);
    let here = JcBlockRotation::new(theta, n);
    let above = JcBlockRotation::new(theta, n + 1);
    let stay = Matrix2::new(
        C64::new(here.cos_term, 0.0),
        zero,
        zero,
        C64::new(above.cos_term, 0.0),
    );
    let down = (n > 0).then(|| {
        (
            n - 1,
            Matrix2::new(zero, zero, C64::new(0.0, -here.sin_term), zero),
        )
    });
    let up = Matrix2::new(zero, C64::new(0.0, -above.sin_term), zero, zero);
    std::iter::once((n, stay))
        .chain(down)
        .chain(std::iter::once((n + 1, up)))
}

/// Qubit output `ρ₁^(k)` for a cavity entering in the diagonal state `w`.
///
/// Closed form: diagonal `(1-p)C_n² + pS_{n+1}²` and `(1-p)S_n² + pC_{n+1}²`,
/// coherence `r C_n C_{n+1}`, averaged over `w_n`.
pub fn single_use_output(
    input: &QubitInput,
    w: &CavityPopulations,
    theta: f64,
) -> Result<DensityMatrix> {
    let (p, q) = (input.p(), 1.0 - input.p());
    let mut ground = 0.0;
    let mut excited = 0.0;
    let mut overlap = 0.0;
    for (n, &wn) in w.as_slice()[..w.support_end()].iter().enumerate() {
        if wn == 0.0 {
            continue;
        }
        let here = JcBlockRotation::new(theta, n);
        let above = JcBlockRotation::new(theta, n + 1);
        ground += wn * (q * here.cos_term.powi(2) + p * above.sin_term.powi(2));
        excited += wn * (q * here.sin_term.powi(2) + p * above.cos_term.powi(2));
        overlap += wn * here.cos_term * above.cos_term;
    }
    let r = input.r() * overlap;
    DensityMatrix::new(DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(ground, 0.0), r, r.conj(), C64::new(excited, 0.0)],
    ))
}

/// How the input qubit is purified on a two-dimensional reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Purification {
    /// `Σ_k √λ_k |k⟩_R |v_k⟩` from the eigendecomposition of the input.
    #[default]
    Spectral,
    /// `Σ_j |j⟩_R ⊗ √ρ |j⟩`.
    SquareRoot,
}

/// Purified input as amplitudes `psi[(reference, qubit)]`.
fn purify(input: &QubitInput, purification: Purification) -> Matrix2<C64> {
    let rho = input.density_matrix();
    let rho = Matrix2::from_fn(|i, j| rho.matrix()[(i, j)]);
    let eigen = rho.symmetric_eigen();
    match purification {
        Purification::Spectral => Matrix2::from_fn(|k, s| {
            eigen.eigenvectors[(s, k)] * eigen.eigenvalues[k].max(0.0).sqrt()
        }),
        Purification::SquareRoot => {
            let sqrt_diag = Matrix2::from_diagonal(
                &eigen.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)),
            );
            let sqrt_rho = eigen.eigenvectors * sqrt_diag * eigen.eigenvectors.adjoint();
            sqrt_rho.transpose()
        }
    }
}

/// Applies `I_R ⊗ K` to a purified state and flattens it as `2·reference + qubit`.
fn apply_on_qubit(psi: &Matrix2<C64>, k: &Matrix2<C64>) -> Vector4<C64> {
    let out = psi * k.transpose();
    Vector4::new(out[(0, 0)], out[(0, 1)], out[(1, 0)], out[(1, 1)])
}

/// Joint reference ⊗ qubit output for a given purification.
pub fn joint_output_with_purification(
    input: &QubitInput,
    w: &CavityPopulations,
    theta: f64,
    purification: Purification,
) -> Result<DensityMatrix> {
    let psi = purify(input, purification);
    let mut joint = Matrix4::<C64>::zeros();
    for (n, &wn) in w.as_slice()[..w.support_end()].iter().enumerate() {
        if wn == 0.0 {
            continue;
        }
        for (_, k) in level_branches(theta, n) {
            let phi = apply_on_qubit(&psi, &k);
            joint += (phi * phi.adjoint()).scale(wn);
        }
    }
    DensityMatrix::new(DMatrix::from_fn(4, 4, |i, j| joint[(i, j)]))
}

/// Joint output of the qubit and a reference purifying its input, with the
/// cavity traced out. Index order is `2·reference + qubit`.
pub fn joint_output_with_reference(
    input: &QubitInput,
    w: &CavityPopulations,
    theta: f64,
) -> Result<DensityMatrix> {
    joint_output_with_purification(input, w, theta, Purification::default())
}

/// Traces the reference out of a joint 4×4 output.
pub fn qubit_marginal(joint: &DensityMatrix) -> Result<DensityMatrix> {
    let m = joint.matrix();
    DensityMatrix::new(DMatrix::from_fn(2, 2, |s, t| m[(s, t)] + m[(2 + s, 2 + t)]))
}

/// Cavity populations after the crossing, read off the full per-level
/// evolution before the cavity is traced out.
pub fn cavity_populations_after_crossing(
    input: &QubitInput,
    w: &CavityPopulations,
    theta: f64,
) -> Vec<f64> {
    let psi = purify(input, Purification::default());
    let mut out = vec![0.0; w.n_max() + 2];
    for (n, &wn) in w.as_slice()[..w.support_end()].iter().enumerate() {
        if wn == 0.0 {
            continue;
        }
        for (m, k) in level_branches(theta, n) {
            out[m] += wn * apply_on_qubit(&psi, &k).norm_squared();
        }
    }
    out
}

/// `S_e`: entropy of the joint qubit+reference output, in bits.
pub fn entropy_exchange(input: &QubitInput, w: &CavityPopulations, theta: f64) -> Result<f64> {
    Ok(von_neumann_entropy(&joint_output_with_reference(
        input, w, theta,
    )?))
}

/// `I_c = S(ρ₁^(k)) − S_e` for one use with the cavity entering in `w`.
pub fn coherent_information_single_use(
    input: &QubitInput,
    w: &CavityPopulations,
    theta: f64,
) -> Result<f64> {
    let output = single_use_output(input, w, theta)?;
    Ok(von_neumann_entropy(&output) - entropy_exchange(input, w, theta)?)
}

/// Kraus operators `E₀ = |g⟩⟨g| + √η|e⟩⟨e|`, `E₁ = √(1-η)|g⟩⟨e|`.
pub fn amplitude_damping_kraus(eta: f64) -> Result<[Matrix2<C64>; 2]> {
    check_unit_interval("eta", eta)?;
    let zero = C64::new(0.0, 0.0);
    Ok([
        Matrix2::new(C64::new(1.0, 0.0), zero, zero, C64::new(eta.sqrt(), 0.0)),
        Matrix2::new(zero, C64::new((1.0 - eta).sqrt(), 0.0), zero, zero),
    ])
}

/// Memoryless channel `Σ_k E_k ρ E_k†`.
pub fn amplitude_damping_output(input: &QubitInput, eta: f64) -> Result<DensityMatrix> {
    let rho = input.density_matrix();
    let rho = Matrix2::from_fn(|i, j| rho.matrix()[(i, j)]);
    let out = amplitude_damping_kraus(eta)?
        .iter()
        .fold(Matrix2::zeros(), |acc, e| acc + e * rho * e.adjoint());
    DensityMatrix::new(DMatrix::from_fn(2, 2, |i, j| out[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{jc_population_update, theta_from_eta};
    use crate::quantum::trace_distance;
    use std::f64::consts::FRAC_PI_2;

    fn pops(w: &[f64]) -> CavityPopulations {
        CavityPopulations::new(w.to_vec()).unwrap()
    }

    fn h2(x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
        }
    }

    fn max_entry_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        (a.matrix() - b.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn block_rotations() {
        assert!(jc_unitary_blocks(0.0, 10)
            .iter()
            .all(|b| b.cos_term == 1.0 && b.sin_term == 0.0));
        let blocks = jc_unitary_blocks(FRAC_PI_2, 3);
        assert_eq!(blocks.len(), 4);
        assert_eq!(blocks[0].n, 1);
        assert!(blocks[0].cos_term.abs() < 1e-16 && blocks[0].sin_term == 1.0);
        let b2 = JcBlockRotation::new(0.46, 2);
        assert!((b2.sin_term.powi(2) - 0.36678).abs() < 1e-4);
        for b in jc_unitary_blocks(0.731, 50) {
            assert!((b.cos_term.powi(2) + b.sin_term.powi(2) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn vacuum_output_is_amplitude_damping() {
        let theta = 0.7;
        let input = QubitInput::new(0.3, C64::new(0.2, -0.3)).unwrap();
        let out = single_use_output(&input, &CavityPopulations::vacuum(), theta).unwrap();
        let c = theta.cos();
        let m = out.matrix();
        assert!((m[(0, 0)].re - (1.0 - 0.3 * c * c)).abs() < 1e-15);
        assert!((m[(1, 1)].re - 0.3 * c * c).abs() < 1e-15);
        assert!((m[(0, 1)] - input.r() * c).norm() < 1e-15);
    }

    #[test]
    fn no_interaction_returns_input() {
        let input = QubitInput::new(0.4, C64::new(0.1, 0.3)).unwrap();
        let w = pops(&[0.3, 0.3, 0.4]);
        let out = single_use_output(&input, &w, 0.0).unwrap();
        assert!(max_entry_diff(&out, &input.density_matrix()) < 1e-15);
    }

    #[test]
    fn one_photon_ground_input() {
        let input = QubitInput::classical(0.0).unwrap();
        let out = single_use_output(&input, &pops(&[0.0, 1.0]), 0.46).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.8029).abs() < 1e-4);
        assert!((out.matrix()[(1, 1)].re - 0.1971).abs() < 1e-4);
    }

    #[test]
    fn joint_output_trivial_cases() {
        let input = QubitInput::new(0.35, C64::new(0.2, 0.1)).unwrap();
        let w = pops(&[0.2, 0.5, 0.3]);
        let joint = joint_output_with_reference(&input, &w, 0.0).unwrap();
        assert!(von_neumann_entropy(&joint) < 1e-12);
        assert_eq!(
            entropy_exchange(&input, &w, 0.0).unwrap(),
            von_neumann_entropy(&joint)
        );
    }

    #[test]
    fn entropy_exchange_at_vacuum_matches_kraus_weight() {
        let eta: f64 = 0.8;
        let theta = theta_from_eta(eta);
        for p in [0.1, 0.45, 0.9] {
            let input = QubitInput::classical(p).unwrap();
            let se = entropy_exchange(&input, &CavityPopulations::vacuum(), theta).unwrap();
            assert!((se - h2((1.0 - eta) * p)).abs() < 1e-12, "p = {p}");
        }
        let se = entropy_exchange(
            &QubitInput::classical(0.45).unwrap(),
            &CavityPopulations::vacuum(),
            theta,
        )
        .unwrap();
        assert!((se - 0.4365).abs() < 1e-3);
        let ground = QubitInput::classical(0.0).unwrap();
        assert!(entropy_exchange(&ground, &CavityPopulations::vacuum(), theta).unwrap() < 1e-15);
    }

    #[test]
    fn coherent_information_values() {
        let vac = CavityPopulations::vacuum();
        let half = QubitInput::classical(0.5).unwrap();
        assert!((coherent_information_single_use(&half, &vac, 0.0).unwrap() - 1.0).abs() < 1e-12);

        let theta = theta_from_eta(0.8);
        let input = QubitInput::classical(0.45).unwrap();
        let ic = coherent_information_single_use(&input, &vac, theta).unwrap();
        assert!((ic - (h2(0.36) - h2(0.09))).abs() < 1e-12);
        assert!((ic - 0.5062).abs() < 1e-3);

        let ground = QubitInput::classical(0.0).unwrap();
        assert_eq!(
            coherent_information_single_use(&ground, &vac, theta).unwrap(),
            0.0
        );
    }

    #[test]
    fn purifications_agree() {
        let input = QubitInput::new(0.3, C64::new(0.15, -0.2)).unwrap();
        let w = pops(&[0.4, 0.3, 0.2, 0.1]);
        let a = joint_output_with_purification(&input, &w, 0.6, Purification::Spectral).unwrap();
        let b = joint_output_with_purification(&input, &w, 0.6, Purification::SquareRoot).unwrap();
        assert!(max_entry_diff(&a, &b) > 1e-3, "purifications should differ");
        assert!((von_neumann_entropy(&a) - von_neumann_entropy(&b)).abs() < 1e-10);
    }

    #[test]
    fn marginal_and_population_consistency() {
        let w = pops(&[0.4, 0.3, 0.2, 0.1]);
        for r in [C64::new(0.0, 0.0), C64::new(0.3, 0.2)] {
            let input = QubitInput::new(0.4, r).unwrap();
            let joint = joint_output_with_reference(&input, &w, 0.9).unwrap();
            let marginal = qubit_marginal(&joint).unwrap();
            let direct = single_use_output(&input, &w, 0.9).unwrap();
            assert!(trace_distance(&marginal, &direct).unwrap() < 1e-12);

            let flow = cavity_populations_after_crossing(&input, &w, 0.9);
            let kicked = jc_population_update(&w, 0.4, 0.9).unwrap();
            for (n, x) in flow.iter().enumerate() {
                assert!((x - kicked.get(n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn amplitude_damping_values() {
        let input = QubitInput::new(0.3, C64::new(0.2, 0.3)).unwrap();
        let same = amplitude_damping_output(&input, 1.0).unwrap();
        assert!(max_entry_diff(&same, &input.density_matrix()) < 1e-15);

        let dead = amplitude_damping_output(&input, 0.0).unwrap();
        assert!((dead.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);

        let excited = QubitInput::classical(1.0).unwrap();
        let out = amplitude_damping_output(&excited, 0.8).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.2).abs() < 1e-15);
        assert!((out.matrix()[(1, 1)].re - 0.8).abs() < 1e-15);

        assert!(amplitude_damping_output(&input, 1.5).is_err());
    }

    #[test]
    fn kraus_matches_dilation_at_vacuum() {
        for eta in [0.0, 0.3, 0.8, 1.0] {
            let input = QubitInput::new(0.6, C64::new(-0.2, 0.25)).unwrap();
            let kraus = amplitude_damping_output(&input, eta).unwrap();
            let dilation =
                single_use_output(&input, &CavityPopulations::vacuum(), theta_from_eta(eta))
                    .unwrap();
            assert!(max_entry_diff(&kraus, &dilation) < 1e-12, "eta = {eta}");
        }
    }
}
