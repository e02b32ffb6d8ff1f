//! Dense statevector engine.
//!
//! Qubit `j` addresses bit `j` of the basis index, with bit value 1 meaning
//! the qubit is in `|1⟩`. A two-qubit gate on the pair `(j, j+1)` acts in the
//! ordered local basis `{|00⟩, |01⟩, |10⟩, |11⟩}` where the left symbol is
//! qubit `j`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::compensated_sum;

/// Projections onto outcomes with Born probability below this are refused
/// by [`StateVector::force_outcome`].
pub const ZERO_BRANCH_THRESHOLD: f64 = 1e-12;

/// Born sampling reports a degenerate branch below this probability.
pub const DEGENERATE_BRANCH_THRESHOLD: f64 = 1e-14;

/// Tolerance used by validation mode when checking gate unitarity.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("qubit {target} out of range for {num_qubits} qubits")]
    TargetOutOfRange { target: usize, num_qubits: usize },
    #[error("gate is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("amplitude vector of length {0} is not a power of two")]
    BadLength(usize),
    #[error("amplitude vector has zero norm")]
    ZeroNorm,
    #[error("outcome {outcome} on qubit {target} has probability {prob:.3e}")]
    ZeroBranch { target: usize, outcome: u8, prob: f64 },
    #[error("sampled outcome {outcome} on qubit {target} is degenerate (probability {prob:.3e})")]
    DegenerateBranch { target: usize, outcome: u8, prob: f64 },
}

/// First and second moments of the total charge `Q = Σ_j (1 + Z_j)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeMoments {
    /// `⟨Q⟩`
    pub q1: f64,
    /// `⟨Q²⟩`
    pub q2: f64,
}

impl ChargeMoments {
    pub fn variance(&self) -> f64 {
        self.q2 - self.q1 * self.q1
    }

    /// Absorbing-state order parameter `2⟨Q⟩/L - 1`.
    pub fn order_parameter(&self, num_qubits: usize) -> f64 {
        2.0 * self.q1 / num_qubits as f64 - 1.0
    }
}

/// Normalized pure state of `L` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
    validate: bool,
}

impl StateVector {
    /// `|0…0⟩`
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    /// Computational basis state whose index bits are given by `bits`.
    pub fn basis(num_qubits: usize, bits: usize) -> Self {
        let dim = 1usize << num_qubits;
        assert!(bits < dim, "basis index {bits} out of range for {num_qubits} qubits");
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[bits] = Complex64::new(1.0, 0.0);
        Self { num_qubits, amps, validate: false }
    }

    /// `⊗_j (|0⟩ + |1⟩)/√2`
    pub fn plus_product(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Self { num_qubits, amps: vec![a; dim], validate: false }
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(mut amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(StateError::BadLength(len));
        }
        let norm = compensated_sum(amps.iter().map(|a| a.norm_sqr())).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::ZeroNorm);
        }
        let inv = norm.recip();
        amps.iter_mut().for_each(|a| *a *= inv);
        Ok(Self { num_qubits: len.trailing_zeros() as usize, amps, validate: false })
    }

    /// Enables unitarity checks on every applied gate.
    pub fn with_validation(mut self, on: bool) -> Self {
        self.validate = on;
        self
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amps.iter().map(|a| a.norm_sqr()))
    }

    fn check_target(&self, target: usize) -> Result<(), StateError> {
        if target >= self.num_qubits {
            Err(StateError::TargetOutOfRange { target, num_qubits: self.num_qubits })
        } else {
            Ok(())
        }
    }

    pub fn apply_single_qubit(
        &mut self,
        gate: &Matrix2<Complex64>,
        target: usize,
    ) -> Result<(), StateError> {
        self.check_target(target)?;
        if self.validate {
            check_unitary2(gate)?;
        }
        let (g00, g01, g10, g11) = (gate[(0, 0)], gate[(0, 1)], gate[(1, 0)], gate[(1, 1)]);
        let bit = 1usize << target;
        let blocks = self.amps.len() >> (target + 1);
        for high in 0..blocks {
            let base = high << (target + 1);
            for low in 0..bit {
                let i0 = base | low;
                let i1 = i0 | bit;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = g00 * a0 + g01 * a1;
                self.amps[i1] = g10 * a0 + g11 * a1;
            }
        }
        Ok(())
    }

    /// Applies a 4×4 gate to the adjacent pair `(j, j+1)`.
    pub fn apply_two_qubit(&mut self, gate: &Matrix4<Complex64>, j: usize) -> Result<(), StateError> {
        self.check_target(j + 1)?;
        if self.validate {
            check_unitary4(gate)?;
        }
        let mut g = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (r, row) in g.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                *e = gate[(r, c)];
            }
        }
        // local index 2*b_j + b_{j+1}
        let bj = 1usize << j;
        let bk = 1usize << (j + 1);
        let blocks = self.amps.len() >> (j + 2);
        for high in 0..blocks {
            let base = high << (j + 2);
            for low in 0..bj {
                let i00 = base | low;
                let idx = [i00, i00 | bk, i00 | bj, i00 | bj | bk];
                let v = [self.amps[idx[0]], self.amps[idx[1]], self.amps[idx[2]], self.amps[idx[3]]];
                for (r, &i) in idx.iter().enumerate() {
                    let row = &g[r];
                    self.amps[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
                }
            }
        }
        Ok(())
    }

    /// Born probability of finding `target` in `|1⟩`.
    pub fn prob_one(&self, target: usize) -> Result<f64, StateError> {
        self.check_target(target)?;
        let bit = 1usize << target;
        Ok(compensated_sum(
            self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()),
        ))
    }

    fn outcome_prob(&self, target: usize, outcome: u8) -> Result<f64, StateError> {
        let p1 = self.prob_one(target)?;
        Ok(if outcome == 1 { p1 } else { (1.0 - p1).max(0.0) })
    }

    fn project(&mut self, target: usize, outcome: u8, prob: f64) {
        let bit = 1usize << target;
        let keep = if outcome == 1 { bit } else { 0 };
        let inv = prob.sqrt().recip();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit == keep {
                *a *= inv;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Born-rule measurement: the outcome is 1 iff `uniform_draw < P(|1⟩)`.
    ///
    /// The state is left untouched when the selected branch is degenerate.
    pub fn measure_qubit(&mut self, target: usize, uniform_draw: f64) -> Result<u8, StateError> {
        let p1 = self.prob_one(target)?;
        let outcome = u8::from(uniform_draw < p1);
        let prob = if outcome == 1 { p1 } else { (1.0 - p1).max(0.0) };
        if prob < DEGENERATE_BRANCH_THRESHOLD {
            return Err(StateError::DegenerateBranch { target, outcome, prob });
        }
        self.project(target, outcome, prob);
        Ok(outcome)
    }

    /// Projects onto a prescribed outcome, returning its Born probability.
    pub fn force_outcome(&mut self, target: usize, outcome: u8) -> Result<f64, StateError> {
        let prob = self.outcome_prob(target, outcome)?;
        if prob < ZERO_BRANCH_THRESHOLD {
            return Err(StateError::ZeroBranch { target, outcome, prob });
        }
        self.project(target, outcome, prob);
        Ok(prob)
    }

    pub fn charge_moments(&self) -> ChargeMoments {
        let mut q1 = 0.0;
        let mut q2 = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            let n = i.count_ones() as f64;
            q1 += p * n;
            q2 += p * n * n;
        }
        ChargeMoments { q1, q2 }
    }

    /// `⟨self|other⟩`
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64, StateError> {
        if self.num_qubits != other.num_qubits {
            return Err(StateError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

fn check_unitary2(g: &Matrix2<Complex64>) -> Result<(), StateError> {
    let dev = (g.adjoint() * g - Matrix2::identity()).iter().fold(0.0_f64, |m, e| m.max(e.norm()));
    if dev > UNITARITY_TOLERANCE {
        Err(StateError::NonUnitary { deviation: dev })
    } else {
        Ok(())
    }
}

fn check_unitary4(g: &Matrix4<Complex64>) -> Result<(), StateError> {
    let dev = (g.adjoint() * g - Matrix4::identity()).iter().fold(0.0_f64, |m, e| m.max(e.norm()));
    if dev > UNITARITY_TOLERANCE {
        Err(StateError::NonUnitary { deviation: dev })
    } else {
        Ok(())
    }
}
