//! Single-qubit superoperators for the averaged noise, measurement and
//! feedback channels, closed-form fidelity and classical steady-state
//! analytics, and the order-parameter to noise-amplitude inverter.
//!
//! Density matrices are vectorized row-major in the spin basis
//! `{|↑⟩⟨↑|, |↑⟩⟨↓|, |↓⟩⟨↑|, |↓⟩⟨↓|}`, where `|↑⟩` is the charged state `|1⟩`
//! and the Pauli matrices take their textbook form with `|↑⟩` first. With
//! this ordering the map `ρ ↦ AρB` is the matrix `A ⊗ Bᵀ`.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{rotation_gate, Axis};
use crate::numeric::{sinc, versinc};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Index of `ρ[r][c]` in the vectorized density matrix.
pub const fn vec_index(r: usize, c: usize) -> usize {
    2 * r + c
}

/// Linear map on vectorized single-qubit density matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperOp {
    pub matrix: Matrix4<Complex64>,
}

impl SuperOp {
    pub fn identity() -> Self {
        Self { matrix: Matrix4::identity() }
    }

    /// `ρ ↦ A ρ B`
    pub fn sandwich(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Self {
        Self { matrix: a.kronecker(&b.transpose()) }
    }

    /// `ρ ↦ U ρ U†`
    pub fn conjugation(u: &Matrix2<Complex64>) -> Self {
        Self::sandwich(u, &u.adjoint())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SuperOp) -> SuperOp {
        SuperOp { matrix: self.matrix * other.matrix }
    }

    pub fn apply(&self, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let v = self.matrix * vectorize(rho);
        Matrix2::new(v[0], v[1], v[2], v[3])
    }

    pub fn max_abs_diff(&self, other: &SuperOp) -> f64 {
        (self.matrix - other.matrix).iter().fold(0.0_f64, |m, e| m.max(e.norm()))
    }

    /// Rows for `ρ↑↑` and `ρ↓↓` sum to the trace functional `(1, 0, 0, 1)`.
    pub fn trace_defect(&self) -> f64 {
        let target = [1.0, 0.0, 0.0, 1.0];
        (0..4)
            .map(|c| (self.matrix[(0, c)] + self.matrix[(3, c)] - re(target[c])).norm())
            .fold(0.0, f64::max)
    }

    /// `|Φ·vec(1) - vec(1)|_max`
    pub fn unitality_defect(&self) -> f64 {
        let one = Vector4::new(re(1.0), re(0.0), re(0.0), re(1.0));
        (self.matrix * one - one).iter().fold(0.0, |m, e| m.max(e.norm()))
    }

    /// Deviation from `Φ[s(i), s(j)] = conj(Φ[i, j])`, with `s` the
    /// transposition `ρ[r][c] ↔ ρ[c][r]` of vectorized indices.
    pub fn hermiticity_defect(&self) -> f64 {
        const SWAP: [usize; 4] = [0, 2, 1, 3];
        let mut worst = 0.0_f64;
        for (i, &si) in SWAP.iter().enumerate() {
            for (j, &sj) in SWAP.iter().enumerate() {
                let d = self.matrix[(si, sj)] - self.matrix[(i, j)].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Largest entry linking the diagonal `{ρ↑↑, ρ↓↓}` and off-diagonal
    /// `{ρ↑↓, ρ↓↑}` sectors, in either direction.
    pub fn diagonal_coupling(&self) -> f64 {
        let mut worst = 0.0_f64;
        for d in [0, 3] {
            for o in [1, 2] {
                worst = worst.max(self.matrix[(d, o)].norm()).max(self.matrix[(o, d)].norm());
            }
        }
        worst
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
    pub fn choi(&self) -> Matrix4<Complex64> {
        Matrix4::from_fn(|row, col| {
            let (i, k) = (row / 2, row % 2);
            let (j, l) = (col / 2, col % 2);
            self.matrix[(vec_index(k, l), vec_index(i, j))]
        })
    }

    /// Smallest eigenvalue of the (Hermitian part of the) Choi matrix.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let c = self.choi();
        let h = (c + c.adjoint()) * re(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl Add for SuperOp {
    type Output = SuperOp;
    fn add(self, rhs: SuperOp) -> SuperOp {
        SuperOp { matrix: self.matrix + rhs.matrix }
    }
}

impl Mul<f64> for SuperOp {
    type Output = SuperOp;
    fn mul(self, rhs: f64) -> SuperOp {
        SuperOp { matrix: self.matrix * re(rhs) }
    }
}

pub fn vectorize(rho: &Matrix2<Complex64>) -> Vector4<Complex64> {
    Vector4::new(rho[(0, 0)], rho[(0, 1)], rho[(1, 0)], rho[(1, 1)])
}

fn pauli_sandwich(axis: Axis) -> SuperOp {
    let s = axis.pauli();
    SuperOp::sandwich(&s, &s)
}

/// `ρ ↦ [σ_axis, ρ]`
pub fn commutator_superop(axis: Axis) -> SuperOp {
    let s = axis.pauli();
    let one = Matrix2::identity();
    SuperOp { matrix: s.kronecker(&one) - one.kronecker(&s.transpose()) }
}

/// Noise channel averaged over axis `α ∈ {x, y, z}` and angle
/// `θ ∈ [0, θ_max]`:
/// `⅓ Σ_α [(½ + sinθ_max/2θ_max) ρ + (½ - sinθ_max/2θ_max) σρσ + i (1 - cosθ_max)/2θ_max [σ, ρ]]`.
pub fn error_channel(theta_max: f64) -> SuperOp {
    let s = 0.5 * sinc(theta_max);
    let keep = 0.5 + s;
    let flip = 0.5 - s;
    let coh = 0.5 * versinc(theta_max);
    let mut acc = SuperOp::identity() * keep;
    for axis in Axis::ALL {
        let term = pauli_sandwich(axis) * (flip / 3.0);
        let comm = SuperOp { matrix: commutator_superop(axis).matrix * Complex64::new(0.0, coh / 3.0) };
        acc = acc + term + comm;
    }
    acc
}

/// `ρ ↦ R_axis(φ) ρ R_axis(φ)†`
pub fn coherent_channel(axis: Axis, phi: f64) -> SuperOp {
    SuperOp::conjugation(&rotation_gate(axis, phi))
}

/// `ρ ↦ (1 - η) ρ + η σ_axis ρ σ_axis`
pub fn incoherent_channel(axis: Axis, eta: f64) -> SuperOp {
    SuperOp::identity() * (1.0 - eta) + pauli_sandwich(axis) * eta
}

/// `γ·Φ + (1 - γ)·id`
pub fn noisy_channel(error: &SuperOp, gamma: f64) -> SuperOp {
    *error * gamma + SuperOp::identity() * (1.0 - gamma)
}

/// Coherent angle and dephasing rate reproducing [`error_channel`] as
/// `⅓ Σ_α incoherent(α, η) ∘ coherent(α, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub phi: f64,
    pub eta: f64,
}

impl ErrorDecomposition {
    /// Pauli weight `X = η cos²(φ/2) + (1 - η) sin²(φ/2)`.
    pub fn pauli_weight(&self) -> f64 {
        let (s, c) = (0.5 * self.phi).sin_cos();
        self.eta * c * c + (1.0 - self.eta) * s * s
    }

    /// Commutator weight `Y = (½ - η) sin φ`.
    pub fn commutator_weight(&self) -> f64 {
        (0.5 - self.eta) * self.phi.sin()
    }

    pub fn channel(&self) -> SuperOp {
        Axis::ALL
            .iter()
            .map(|&a| incoherent_channel(a, self.eta).compose(&coherent_channel(a, self.phi)) * (1.0 / 3.0))
            .fold(SuperOp { matrix: Matrix4::zeros() }, |acc, t| acc + t)
    }
}

/// `φ = θ_max/2`, `η = ½ - sin(θ_max/2)/θ_max`.
pub fn decompose_error_channel(theta_max: f64) -> ErrorDecomposition {
    ErrorDecomposition { phi: 0.5 * theta_max, eta: 0.5 - 0.5 * sinc(0.5 * theta_max) }
}

/// Pauli and commutator weights read directly off [`error_channel`]:
/// `(½ - sinθ_max/2θ_max, (1 - cosθ_max)/2θ_max)`.
pub fn error_channel_weights(theta_max: f64) -> (f64, f64) {
    (0.5 - 0.5 * sinc(theta_max), 0.5 * versinc(theta_max))
}

fn projector(up: bool) -> Matrix2<Complex64> {
    if up {
        Matrix2::new(re(1.0), re(0.0), re(0.0), re(0.0))
    } else {
        Matrix2::new(re(0.0), re(0.0), re(0.0), re(1.0))
    }
}

/// `(1 - p) ρ + p (Π↑ ρ Π↑ + X Π↓ ρ Π↓ X)`: measurement with the `|↓⟩`
/// outcome flipped back to `|↑⟩`.
pub fn measurement_feedback_channel(p_m: f64) -> SuperOp {
    let up = projector(true);
    let flip_down = Axis::X.pauli() * projector(false);
    SuperOp::identity() * (1.0 - p_m)
        + (SuperOp::conjugation(&up) + SuperOp::conjugation(&flip_down)) * p_m
}

/// `(1 - p) ρ + p (Π↑ ρ Π↑ + Π↓ ρ Π↓)`
pub fn measurement_channel(p_m: f64) -> SuperOp {
    SuperOp::identity() * (1.0 - p_m)
        + (SuperOp::conjugation(&projector(true)) + SuperOp::conjugation(&projector(false))) * p_m
}

/// Average single-qubit gate fidelity `1 - (γ/3)(1 - sin(πΘ)/(πΘ))`.
pub fn avg_gate_fidelity(theta_amp: f64, gamma: f64) -> f64 {
    1.0 - gamma / 3.0 * (1.0 - sinc(PI * theta_amp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Monte Carlo estimate of `∫dψ ⟨ψ|ℰ(|ψ⟩⟨ψ|)|ψ⟩` with `ψ` uniform on the
/// Bloch sphere and `ℰ` the noisy-gate ensemble: with probability `γ` a
/// rotation about a uniform axis by `θ ~ U[0, πΘ]`, otherwise identity.
pub fn mc_gate_fidelity<R: Rng + ?Sized>(
    theta_amp: f64,
    gamma: f64,
    n_samples: u64,
    rng: &mut R,
) -> FidelityEstimate {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..n_samples {
        let cos_polar = 2.0 * rng.random::<f64>() - 1.0;
        let azimuth = 2.0 * PI * rng.random::<f64>();
        let half = 0.5 * cos_polar.acos();
        let psi = nalgebra::Vector2::new(re(half.cos()), Complex64::from_polar(half.sin(), azimuth));
        let hit = rng.random::<f64>() < gamma;
        let axis = Axis::ALL[rng.random_range(0..3)];
        let theta = PI * theta_amp * rng.random::<f64>();
        let r = if hit { rotation_gate(axis, theta) } else { Matrix2::identity() };
        let amp = psi.dotc(&(r * psi));
        let norm = psi.dotc(&psi).norm_sqr();
        let f = amp.norm_sqr() / norm;
        let delta = f - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (f - mean);
    }
    let var = if n_samples > 1 { m2 / (n_samples - 1) as f64 } else { 0.0 };
    FidelityEstimate { mean, std_error: (var / n_samples as f64).sqrt(), samples: n_samples }
}

/// Commutator-free approximation of the noisy channel,
/// `(1 - ν') ρ + (ν'/3) Σ_α σ_α ρ σ_α`, restricted to populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalErrorChannel {
    /// `ν = ½ (1 - sinθ_max/θ_max)`
    pub nu: f64,
    /// `ν' = γ ν`
    pub nu_prime: f64,
    /// Column-stochastic action on `(ρ↑↑, ρ↓↓)`.
    pub transfer: [[f64; 2]; 2],
}

pub fn classical_error_channel(theta_amp: f64, gamma: f64) -> ClassicalErrorChannel {
    let nu = 0.5 * (1.0 - sinc(PI * theta_amp));
    let nu_prime = gamma * nu;
    let flip = 2.0 * nu_prime / 3.0;
    ClassicalErrorChannel {
        nu,
        nu_prime,
        transfer: [[1.0 - flip, flip], [flip, 1.0 - flip]],
    }
}

/// `ξ = (γ/3)(1 - p_m)(1 - sinθ_max/θ_max)`
pub fn classical_xi(p_m: f64, theta_amp: f64, gamma: f64) -> f64 {
    gamma / 3.0 * (1.0 - p_m) * (1.0 - sinc(PI * theta_amp))
}

/// Population transfer of measurement-with-feedback after the classical
/// noise channel: `[[1-ξ, p_m+ξ], [ξ, 1-p_m-ξ]]` acting on `(ρ↑↑, ρ↓↓)`.
pub fn classical_combined_transfer(p_m: f64, theta_amp: f64, gamma: f64) -> [[f64; 2]; 2] {
    let xi = classical_xi(p_m, theta_amp, gamma);
    [[1.0 - xi, p_m + xi], [xi, (1.0 - p_m) - xi]]
}

/// Closed-form steady order parameter of the classical model,
/// `p_m / √(p_m² + 2ξ(p_m + ξ))`.
///
/// Returns 0 at `p_m = 0` (nothing steers the populations).
pub fn classical_steady_n(p_m: f64, theta_amp: f64, gamma: f64) -> f64 {
    if p_m <= 0.0 {
        return 0.0;
    }
    let xi = classical_xi(p_m, theta_amp, gamma);
    p_m / (p_m * p_m + 2.0 * xi * (p_m + xi)).sqrt()
}

/// Exact fixed point `ρ↑↑ - ρ↓↓ = p_m / (p_m + 2ξ)` of
/// [`classical_combined_transfer`]. This sits below
/// [`classical_steady_n`] whenever `ξ > 0`.
pub fn classical_fixed_point_n(p_m: f64, theta_amp: f64, gamma: f64) -> f64 {
    if p_m <= 0.0 {
        return 0.0;
    }
    let xi = classical_xi(p_m, theta_amp, gamma);
    p_m / (p_m + 2.0 * xi)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InversionError {
    #[error("order parameter {n_bar} outside the invertible range ({floor}, 1]")]
    OutOfRange { n_bar: f64, floor: f64 },
    #[error("order parameter does not depend on noise at p_m = {p_m}, gamma = {gamma}")]
    Unidentifiable { p_m: f64, gamma: f64 },
    #[error("classical order parameter is not decreasing in theta at p_m = {p_m}, gamma = {gamma}")]
    NotMonotone { p_m: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub theta_amp: f64,
    pub fidelity: f64,
}

/// Bisection tolerance on `Θ`.
pub const INVERSION_TOLERANCE: f64 = 1e-10;

/// Inverts [`classical_steady_n`] for the noise amplitude `Θ` at known
/// `p_m` and `γ`, and reports the implied average gate fidelity.
pub fn infer_noise_amplitude(n_bar: f64, p_m: f64, gamma: f64) -> Result<NoiseEstimate, InversionError> {
    let f = |t: f64| classical_steady_n(p_m, t, gamma);
    let floor = f(1.0);
    if p_m.is_nan() || p_m <= 0.0 || floor >= 1.0 {
        return Err(InversionError::Unidentifiable { p_m, gamma });
    }
    let grid: Vec<f64> = (0..=20).map(|k| f(k as f64 / 20.0)).collect();
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(InversionError::NotMonotone { p_m, gamma });
    }
    if !(n_bar > floor && n_bar <= 1.0) {
        return Err(InversionError::OutOfRange { n_bar, floor });
    }
    if n_bar == 1.0 {
        return Ok(NoiseEstimate { theta_amp: 0.0, fidelity: 1.0 });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // tighter than INVERSION_TOLERANCE so round trips land well inside it
    while hi - lo > 1e-3 * INVERSION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid) > n_bar {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    let theta_amp = 0.5 * (lo + hi);
    Ok(NoiseEstimate { theta_amp, fidelity: avg_gate_fidelity(theta_amp, gamma) })
}
