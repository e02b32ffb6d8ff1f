//! Symmetry-constrained random two-qubit unitaries, noise rotations and
//! symmetry validators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which symmetry a two-qubit gate is constructed to respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryClass {
    /// Leaves `|11⟩` invariant up to a phase.
    Absorbing,
    /// Conserves the pair charge.
    ChargeConserving,
    Unconstrained,
}

/// A 4×4 unitary in the ordered basis `{|00⟩, |01⟩, |10⟩, |11⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitUnitary {
    pub matrix: Matrix4<Complex64>,
    pub class: SymmetryClass,
}

impl TwoQubitUnitary {
    pub fn unconstrained(matrix: Matrix4<Complex64>) -> Self {
        Self { matrix, class: SymmetryClass::Unconstrained }
    }

    /// `max |U†U - 1|`
    pub fn unitarity_defect(&self) -> f64 {
        max_abs(&(self.matrix.adjoint() * self.matrix - Matrix4::identity()))
    }
}

/// Diagonal symmetry generator acting on a qubit pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryOperator {
    pub diag: [f64; 4],
}

impl SymmetryOperator {
    /// `diag(1, 1, 1, 0)`
    pub const ABSORBING: SymmetryOperator = SymmetryOperator { diag: [1.0, 1.0, 1.0, 0.0] };
    /// `diag(0, 1, 1, 2)`
    pub const CHARGE: SymmetryOperator = SymmetryOperator { diag: [0.0, 1.0, 1.0, 2.0] };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Matrix2<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
            Axis::Y => Matrix2::new(ZERO, -i, i, ZERO),
            Axis::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        }
    }
}

/// A single noisy rotation `R_axis(angle)` on one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEvent {
    pub qubit: usize,
    pub axis: Axis,
    pub angle: f64,
}

impl NoiseEvent {
    pub fn gate(&self) -> Matrix2<Complex64> {
        rotation_gate(self.axis, self.angle)
    }
}

/// `R_axis(θ) = exp(iθσ/2) = cos(θ/2)·1 + i·sin(θ/2)·σ`.
pub fn rotation_gate(axis: Axis, theta: f64) -> Matrix2<Complex64> {
    let (s, c) = (0.5 * theta).sin_cos();
    Matrix2::identity() * Complex64::new(c, 0.0) + axis.pauli() * Complex64::new(0.0, s)
}

/// Haar-random `U(n)` from the QR decomposition of a complex Ginibre
/// matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let ginibre = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = ginibre.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { ONE };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())
}

/// `diag(U(3), e^{iφ})`: Haar on the `{|00⟩, |01⟩, |10⟩}` block and a uniform
/// phase on `|11⟩`.
pub fn sample_absorbing_unitary<R: Rng + ?Sized>(rng: &mut R) -> TwoQubitUnitary {
    let block = haar_unitary(3, rng);
    let phase = random_phase(rng);
    let mut m = Matrix4::zeros();
    for r in 0..3 {
        for c in 0..3 {
            m[(r, c)] = block[(r, c)];
        }
    }
    m[(3, 3)] = phase;
    TwoQubitUnitary { matrix: m, class: SymmetryClass::Absorbing }
}

/// `diag(e^{iφ00}, U(2), e^{iφ11})` with Haar `U(2)` on `{|01⟩, |10⟩}`.
pub fn sample_u1_unitary<R: Rng + ?Sized>(rng: &mut R) -> TwoQubitUnitary {
    let block = haar_unitary(2, rng);
    let p00 = random_phase(rng);
    let p11 = random_phase(rng);
    let mut m = Matrix4::zeros();
    m[(0, 0)] = p00;
    for r in 0..2 {
        for c in 0..2 {
            m[(r + 1, c + 1)] = block[(r, c)];
        }
    }
    m[(3, 3)] = p11;
    TwoQubitUnitary { matrix: m, class: SymmetryClass::ChargeConserving }
}

/// Draws the noise decision for one qubit.
///
/// Always consumes three uniforms (inclusion, axis, angle) so that streams
/// stay aligned across different `gamma` and `theta_amp` values.
pub fn sample_qubit_noise<R: Rng + ?Sized>(
    qubit: usize,
    gamma: f64,
    theta_amp: f64,
    rng: &mut R,
) -> Option<NoiseEvent> {
    let include: f64 = rng.random();
    let axis = Axis::ALL[rng.random_range(0..3)];
    let angle = PI * theta_amp * rng.random::<f64>();
    (include < gamma).then_some(NoiseEvent { qubit, axis, angle })
}

/// Independent noise on every qubit of an `L`-qubit register.
pub fn sample_noise_layer<R: Rng + ?Sized>(
    num_qubits: usize,
    gamma: f64,
    theta_amp: f64,
    rng: &mut R,
) -> Vec<NoiseEvent> {
    (0..num_qubits).filter_map(|q| sample_qubit_noise(q, gamma, theta_amp, rng)).collect()
}

/// `max |[U, diag(Π)]|`
pub fn symmetry_residual(u: &Matrix4<Complex64>, op: &SymmetryOperator) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..4 {
        for c in 0..4 {
            worst = worst.max((u[(r, c)] * (op.diag[c] - op.diag[r])).norm());
        }
    }
    worst
}

fn max_abs(m: &Matrix4<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |a, e| a.max(e.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_from_seed;
    use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

    fn commutator_residual_dense(u: &Matrix4<Complex64>, op: &SymmetryOperator) -> f64 {
        let p = Matrix4::from_diagonal(&nalgebra::Vector4::from_iterator(
            op.diag.iter().map(|&d| Complex64::new(d, 0.0)),
        ));
        (u * p - p * u).iter().fold(0.0_f64, |a, e| a.max(e.norm()))
    }

    #[test]
    fn absorbing_samples_respect_block_structure() {
        let mut rng = rng_from_seed(11);
        for _ in 0..200 {
            let u = sample_absorbing_unitary(&mut rng);
            assert_eq!(u.class, SymmetryClass::Absorbing);
            assert!(u.unitarity_defect() < 1e-12);
            assert!(symmetry_residual(&u.matrix, &SymmetryOperator::ABSORBING) < 1e-12);
            assert!(commutator_residual_dense(&u.matrix, &SymmetryOperator::ABSORBING) < 1e-12);
            assert!((u.matrix[(3, 3)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn u1_samples_respect_charge() {
        let mut rng = rng_from_seed(12);
        for _ in 0..200 {
            let u = sample_u1_unitary(&mut rng);
            assert!(u.unitarity_defect() < 1e-12);
            assert!(symmetry_residual(&u.matrix, &SymmetryOperator::CHARGE) < 1e-12);
            // |01⟩ stays in the one-excitation block
            assert_eq!(u.matrix[(0, 1)], ZERO);
            assert_eq!(u.matrix[(3, 1)], ZERO);
        }
    }

    #[test]
    fn haar_first_moments() {
        let mut rng = rng_from_seed(13);
        let n = 100_000;
        let mut abs3 = 0.0;
        let mut abs2 = 0.0;
        for _ in 0..n {
            abs3 += sample_absorbing_unitary(&mut rng).matrix[(0, 0)].norm_sqr();
            abs2 += sample_u1_unitary(&mut rng).matrix[(1, 1)].norm_sqr();
        }
        assert!((abs3 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        assert!((abs2 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn haar_second_moments() {
        // E|U_ij|^4 = 2/(n(n+1)) for Haar U(n)
        let mut rng = rng_from_seed(14);
        let n = 100_000;
        for dim in [2usize, 3] {
            let mut m4 = 0.0;
            for _ in 0..n {
                m4 += haar_unitary(dim, &mut rng)[(dim - 1, 0)].norm_sqr().powi(2);
            }
            let expected = 2.0 / (dim * (dim + 1)) as f64;
            assert!((m4 / n as f64 - expected).abs() < 0.01, "dim {dim}");
        }
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_gate(Axis::Y, 0.0), Matrix2::identity());
        let rx = rotation_gate(Axis::X, PI);
        let ix = Axis::X.pauli() * Complex64::new(0.0, 1.0);
        assert!((rx - ix).iter().all(|e| e.norm() < 1e-15));
        let rz = rotation_gate(Axis::Z, PI / 2.0);
        let e = Complex64::from_polar(1.0, PI / 4.0);
        assert!((rz[(0, 0)] - e).norm() < 1e-15);
        assert!((rz[(1, 1)] - e.conj()).norm() < 1e-15);
        assert_eq!(rz[(0, 1)], ZERO);
    }

    #[test]
    fn rotation_inverse() {
        for axis in Axis::ALL {
            for k in 0..20 {
                let t = -3.0 + 0.37 * k as f64;
                let p = rotation_gate(axis, t) * rotation_gate(axis, -t);
                assert!((p - Matrix2::identity()).iter().all(|e| e.norm() < 1e-14));
            }
        }
    }

    #[test]
    fn noise_layer_edge_cases() {
        let mut rng = rng_from_seed(15);
        for _ in 0..100 {
            assert!(sample_noise_layer(12, 0.0, 1.0, &mut rng).is_empty());
            for ev in sample_noise_layer(12, 1.0, 0.0, &mut rng) {
                assert_eq!(ev.angle, 0.0);
            }
            for ev in sample_noise_layer(12, 1.0, 0.3, &mut rng) {
                assert!(ev.angle >= 0.0 && ev.angle <= 0.3 * PI);
            }
        }
    }

    #[test]
    fn noise_counts_are_binomial() {
        let mut rng = rng_from_seed(16);
        let layers = 100_000;
        let mut hist = [0u64; 13];
        let mut total = 0u64;
        for _ in 0..layers {
            let k = sample_noise_layer(12, 0.5, 1.0, &mut rng).len();
            hist[k] += 1;
            total += k as u64;
        }
        let mean = total as f64 / layers as f64;
        let sigma = (12.0 * 0.25 / layers as f64).sqrt();
        assert!((mean - 6.0).abs() < 3.0 * sigma);

        // chi-square against Binomial(12, 1/2), tails merged until expected >= 5
        let binom = Binomial::new(0.5, 12).unwrap();
        let mut cells: Vec<(f64, f64)> = Vec::new();
        let (mut obs, mut exp) = (0.0, 0.0);
        for k in 0..=12u64 {
            obs += hist[k as usize] as f64;
            exp += binom.pmf(k) * layers as f64;
            if exp >= 5.0 {
                cells.push((obs, exp));
                obs = 0.0;
                exp = 0.0;
            }
        }
        if exp > 0.0 {
            let last = cells.last_mut().unwrap();
            last.0 += obs;
            last.1 += exp;
        }
        let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        let crit = ChiSquared::new((cells.len() - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < crit, "chi2 {stat} >= {crit}");
    }

    #[test]
    fn residual_examples() {
        assert_eq!(symmetry_residual(&Matrix4::identity(), &SymmetryOperator::ABSORBING), 0.0);
        assert_eq!(symmetry_residual(&Matrix4::identity(), &SymmetryOperator::CHARGE), 0.0);
        let mut rng = rng_from_seed(17);
        let rx = rotation_gate(Axis::X, PI / 2.0);
        let v = rx.kronecker(&Matrix2::identity());
        for _ in 0..100 {
            let u = sample_absorbing_unitary(&mut rng);
            let noisy = u.matrix * v;
            assert!(symmetry_residual(&noisy, &SymmetryOperator::ABSORBING) > 0.1);
        }
    }
}
