//! Numeric verification, in small truncated Fock spaces, that the virtual
//! two-qubit state of a round has deterministic X-basis parity: +1 for even
//! photon number k, -1 for odd k, independent of the phase difference — hence
//! zero phase error.
//!
//! For each k the joint state is the equal superposition of a parity-matched
//! Bell pair with the two k-photon mode states
//! |±delta⟩^{⊗k} = (a† ± e^{i·delta} b†)^k |00⟩ / sqrt(2^k k!); the two mode
//! states are orthogonal for every k >= 1, which is what pins the reduced
//! qubit state inside a single X-parity eigenspace.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntangleError {
    #[error("phase count must be even so photon-number parity is preserved per class, got {0}")]
    OddPhaseCount(usize),
}

/// The photon-number parity argument covers all pseudo photon-number classes
/// only when m is even; reject odd m.
pub fn validate_phase_count(m: usize) -> Result<(), EntangleError> {
    if !m.is_multiple_of(2) {
        return Err(EntangleError::OddPhaseCount(m));
    }
    Ok(())
}

/// Sign of the mode superposition (a† ± e^{i delta} b†).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSign {
    Plus,
    Minus,
}

/// Joint state of qubits A, B and a k-photon two-mode field, expressed over
/// the basis |q_A⟩|q_B⟩|j, k-j⟩ with j photons in mode a.
#[derive(Debug, Clone)]
pub struct JointState {
    pub k: usize,
    pub delta_theta: f64,
    /// Index layout: (q_a * 2 + q_b) * (k+1) + j.
    pub amplitudes: Vec<Complex64>,
}

fn binomial(k: usize, j: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..j {
        v = v * (k - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Coefficients of |±delta⟩^{⊗k} over {|j, k-j⟩}:
/// c_j = sqrt(C(k,j)/2^k) (± e^{i delta})^{k-j}. Unit norm for every k.
pub fn kphoton_mode_state(k: usize, sign: ModeSign, delta_theta: f64) -> Vec<Complex64> {
    let s = match sign {
        ModeSign::Plus => 1.0,
        ModeSign::Minus => -1.0,
    };
    (0..=k)
        .map(|j| {
            let mag = (binomial(k, j) / 2f64.powi(k as i32)).sqrt();
            let phase = Complex64::from_polar(1.0, delta_theta * (k - j) as f64);
            let sgn = if (k - j).is_multiple_of(2) { 1.0 } else { s };
            phase * mag * sgn
        })
        .collect()
}

/// Build the pure k-photon branch: for odd k
/// (|φ⁻⟩|+delta⟩^{⊗k} + |ψ⁻⟩|−delta⟩^{⊗k})/√2, for even k the same with the
/// (φ⁺, ψ⁺) pair. At k = 0 the two mode states coincide and the qubit part
/// collapses to (|φ⁺⟩+|ψ⁺⟩)/√2 = |+x⟩|+x⟩, still unit norm.
pub fn build_rho_k_state(k: usize, delta_theta: f64) -> JointState {
    let s = if k % 2 == 1 { -1.0 } else { 1.0 };
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    // bell_phi[qa*2+qb], bell_psi likewise
    let mut bell_phi = [Complex64::ZERO; 4];
    bell_phi[0b00] = inv_sqrt2.into();
    bell_phi[0b11] = (s * inv_sqrt2).into();
    let mut bell_psi = [Complex64::ZERO; 4];
    bell_psi[0b01] = inv_sqrt2.into();
    bell_psi[0b10] = (s * inv_sqrt2).into();

    let plus = kphoton_mode_state(k, ModeSign::Plus, delta_theta);
    let minus = kphoton_mode_state(k, ModeSign::Minus, delta_theta);

    let mut amplitudes = vec![Complex64::ZERO; 4 * (k + 1)];
    for q in 0..4 {
        for j in 0..=k {
            amplitudes[q * (k + 1) + j] =
                (bell_phi[q] * plus[j] + bell_psi[q] * minus[j]) * inv_sqrt2;
        }
    }
    let state = JointState {
        k,
        delta_theta,
        amplitudes,
    };
    debug_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    state
}

impl JointState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Reduced two-qubit density matrix (partial trace over the modes),
    /// row-major over the basis |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn reduced_qubit_state(&self) -> [[Complex64; 4]; 4] {
        let dim = self.k + 1;
        let mut rho = [[Complex64::ZERO; 4]; 4];
        for (q, row) in rho.iter_mut().enumerate() {
            for (q2, entry) in row.iter_mut().enumerate() {
                for j in 0..dim {
                    *entry += self.amplitudes[q * dim + j] * self.amplitudes[q2 * dim + j].conj();
                }
            }
        }
        rho
    }
}

/// Expectation of X⊗X on the reduced two-qubit state.
pub fn x_basis_parity(state: &JointState) -> f64 {
    let rho = state.reduced_qubit_state();
    let mut tr = Complex64::ZERO;
    for q in 0..4 {
        tr += rho[q][q ^ 0b11]; // X⊗X flips both qubits
    }
    debug_assert!(tr.im.abs() < 1e-12);
    tr.re
}

/// One grid point of the parity scan.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ParityRecord {
    pub k: usize,
    pub delta_theta: f64,
    pub parity: f64,
}

/// Evaluate the X-parity over a (k, delta_theta) grid.
pub fn parity_grid(k_list: &[usize], delta_theta_list: &[f64]) -> Vec<ParityRecord> {
    let points: Vec<(usize, f64)> = k_list
        .iter()
        .flat_map(|&k| delta_theta_list.iter().map(move |&d| (k, d)))
        .collect();
    let eval = |&(k, delta_theta): &(usize, f64)| ParityRecord {
        k,
        delta_theta,
        parity: x_basis_parity(&build_rho_k_state(k, delta_theta)),
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    points.iter().map(eval).collect()
}

/// Worst-case phase error rate over the grid: max of (1 - |parity|)/2.
/// Zero (to numeric precision) for every k and delta_theta.
pub fn phase_error_rate(k_list: &[usize], delta_theta_list: &[f64]) -> f64 {
    assert!(
        !k_list.is_empty() && !delta_theta_list.is_empty(),
        "empty verification grid"
    );
    parity_grid(k_list, delta_theta_list)
        .iter()
        .map(|r| (1.0 - r.parity.abs()) / 2.0)
        .fold(0.0, f64::max)
}
