//! Trajectory execution for the adaptive and U(1) circuit families.
//!
//! One time step is one brickwork layer: layer `k` (0-based) acts on the
//! pairs `(j, j+1)` with `j ≡ k (mod 2)`, open boundaries. Each gate is
//! followed by independent noise on its two qubits; after the gates every
//! qubit is measured with probability `p_m`. In the adaptive model an
//! outcome 0 is corrected by `σ_x`.
//!
//! Randomness is split into per-trajectory streams (gates, measurements,
//! noise) so that changing the noise amplitude leaves the sampled unitaries
//! and measurement sites untouched.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{
    sample_absorbing_unitary, sample_qubit_noise, sample_u1_unitary, TwoQubitUnitary,
};
use crate::qstate::{ChargeMoments, StateError, StateVector};
use crate::seeds::{rng_from_seed, stream_seed, StreamRng, StreamTag};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// Absorbing-class gates with `σ_x` feedback on outcome 0.
    Adaptive,
    /// Charge-conserving gates, no feedback.
    U1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    /// `⊗|+⟩`
    PlusProduct,
    /// Computational basis state with the given index bits.
    Basis(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("need at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("{0} qubits exceeds the supported maximum of 26")]
    TooManyQubits(usize),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("{name} = {value} is outside [0, 1]")]
    RateOutOfRange { name: &'static str, value: f64 },
    #[error("initial basis index {0} out of range")]
    BadInitialState(usize),
    #[error("operation requires the {expected:?} model")]
    WrongModel { expected: Model },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub model: Model,
    pub num_qubits: usize,
    pub depth: usize,
    pub measure_rate: f64,
    /// `Θ`: noise angles are drawn from `[0, πΘ]`.
    pub noise_amplitude: f64,
    /// `γ`: per-qubit probability of a noise rotation after a gate.
    pub noise_rate: f64,
    pub master_seed: u64,
    pub initial: InitialState,
}

impl CircuitConfig {
    /// Adaptive circuit with depth `4L` and `γ = 1/2`.
    pub fn adaptive(num_qubits: usize) -> Self {
        Self {
            model: Model::Adaptive,
            num_qubits,
            depth: 4 * num_qubits,
            measure_rate: 0.0,
            noise_amplitude: 0.0,
            noise_rate: 0.5,
            master_seed: 0,
            initial: InitialState::PlusProduct,
        }
    }

    /// U(1) circuit with depth `2L` and `γ = 1/2`.
    pub fn u1(num_qubits: usize) -> Self {
        Self { model: Model::U1, depth: 2 * num_qubits, ..Self::adaptive(num_qubits) }
    }

    pub fn for_model(model: Model, num_qubits: usize) -> Self {
        match model {
            Model::Adaptive => Self::adaptive(num_qubits),
            Model::U1 => Self::u1(num_qubits),
        }
    }

    pub fn with_measure_rate(mut self, p_m: f64) -> Self {
        self.measure_rate = p_m;
        self
    }

    pub fn with_noise(mut self, theta_amp: f64) -> Self {
        self.noise_amplitude = theta_amp;
        self
    }

    pub fn with_noise_rate(mut self, gamma: f64) -> Self {
        self.noise_rate = gamma;
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_qubits < 2 {
            return Err(ConfigError::TooFewQubits(self.num_qubits));
        }
        if self.num_qubits > 26 {
            return Err(ConfigError::TooManyQubits(self.num_qubits));
        }
        if self.depth == 0 {
            return Err(ConfigError::ZeroDepth);
        }
        for (name, value) in [
            ("p_m", self.measure_rate),
            ("theta", self.noise_amplitude),
            ("gamma", self.noise_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::RateOutOfRange { name, value });
            }
        }
        if let InitialState::Basis(bits) = self.initial {
            if bits >> self.num_qubits != 0 {
                return Err(ConfigError::BadInitialState(bits));
            }
        }
        Ok(())
    }

    fn initial_state(&self) -> StateVector {
        match self.initial {
            InitialState::PlusProduct => StateVector::plus_product(self.num_qubits),
            InitialState::Basis(bits) => StateVector::basis(self.num_qubits, bits),
        }
    }

    fn require(&self, model: Model) -> Result<(), ConfigError> {
        self.validate()?;
        if self.model != model {
            return Err(ConfigError::WrongModel { expected: model });
        }
        Ok(())
    }
}

/// Left qubits of the gates in brickwork layer `layer` (0-based).
pub fn brickwork_pairs(num_qubits: usize, layer: usize) -> impl Iterator<Item = usize> {
    (layer % 2..num_qubits.saturating_sub(1)).step_by(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectorySeeds {
    pub gates: u64,
    pub measurements: u64,
    pub noise: u64,
}

impl TrajectorySeeds {
    pub fn derive(master: u64, index: u64) -> Self {
        Self {
            gates: stream_seed(master, index, StreamTag::Gates),
            measurements: stream_seed(master, index, StreamTag::Measurements),
            noise: stream_seed(master, index, StreamTag::Noise),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrajectoryOptions {
    /// Keep the final pure state in the record.
    pub retain_state: bool,
}

/// Charge-moment time series of one trajectory, `t = 0..=T`.
///
/// A discarded record stops at the layer whose forced outcome had zero
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub final_state: Option<StateVector>,
    pub discarded: bool,
    pub seeds: TrajectorySeeds,
}

impl TrajectoryRecord {
    pub fn moments(&self, t: usize) -> ChargeMoments {
        ChargeMoments { q1: self.q1[t], q2: self.q2[t] }
    }

    pub fn order_parameter(&self, num_qubits: usize) -> Vec<f64> {
        self.q1.iter().map(|q| 2.0 * q / num_qubits as f64 - 1.0).collect()
    }
}

/// First time from which the order parameter stays at or above
/// `threshold` until the end of the record.
pub fn absorbing_time(record: &TrajectoryRecord, num_qubits: usize, threshold: f64) -> Option<usize> {
    let n = record.order_parameter(num_qubits);
    let tail = n.iter().rev().take_while(|&&v| v >= threshold).count();
    (tail > 0).then(|| n.len() - tail)
}

fn pauli_x() -> Matrix2<Complex64> {
    let o = Complex64::new(0.0, 0.0);
    let i = Complex64::new(1.0, 0.0);
    Matrix2::new(o, i, i, o)
}

struct Evolution {
    state: StateVector,
    q1: Vec<f64>,
    q2: Vec<f64>,
}

impl Evolution {
    fn new(state: StateVector, depth: usize) -> Self {
        let mut e = Self { state, q1: Vec::with_capacity(depth + 1), q2: Vec::with_capacity(depth + 1) };
        e.snapshot();
        e
    }

    fn snapshot(&mut self) {
        let m = self.state.charge_moments();
        self.q1.push(m.q1);
        self.q2.push(m.q2);
    }

    /// Gate on `(j, j+1)` followed by independent noise on both qubits.
    fn gate_with_noise(
        &mut self,
        gate: &TwoQubitUnitary,
        j: usize,
        gamma: f64,
        theta_amp: f64,
        noise: &mut StreamRng,
    ) {
        self.state.apply_two_qubit(&gate.matrix, j).expect("brickwork pair in range");
        for q in [j, j + 1] {
            if let Some(ev) = sample_qubit_noise(q, gamma, theta_amp, noise) {
                if ev.angle != 0.0 {
                    self.state.apply_single_qubit(&ev.gate(), q).expect("qubit in range");
                }
            }
        }
    }

    /// Born-rule measurement. A sampled branch below the degeneracy
    /// threshold is replaced by its complement, whose probability is 1 to
    /// within 1e-14.
    fn born_measure(&mut self, q: usize, draw: f64) -> u8 {
        match self.state.measure_qubit(q, draw) {
            Ok(m) => m,
            Err(StateError::DegenerateBranch { outcome, .. }) => {
                let m = 1 - outcome;
                self.state.force_outcome(q, m).expect("complement of a degenerate branch");
                m
            }
            Err(e) => panic!("measurement failed: {e}"),
        }
    }

    fn finish(self, seeds: TrajectorySeeds, discarded: bool, opts: TrajectoryOptions) -> TrajectoryRecord {
        TrajectoryRecord {
            q1: self.q1,
            q2: self.q2,
            final_state: opts.retain_state.then_some(self.state),
            discarded,
            seeds,
        }
    }
}

pub fn run_adaptive_trajectory(
    config: &CircuitConfig,
    index: u64,
) -> Result<TrajectoryRecord, ConfigError> {
    run_adaptive_trajectory_with(config, index, TrajectoryOptions::default())
}

/// One adaptive trajectory: absorbing-class gates, noise, Born measurements
/// and `σ_x` correction of outcome 0.
pub fn run_adaptive_trajectory_with(
    config: &CircuitConfig,
    index: u64,
    opts: TrajectoryOptions,
) -> Result<TrajectoryRecord, ConfigError> {
    config.require(Model::Adaptive)?;
    let seeds = TrajectorySeeds::derive(config.master_seed, index);
    let mut gates = rng_from_seed(seeds.gates);
    let mut meas = rng_from_seed(seeds.measurements);
    let mut noise = rng_from_seed(seeds.noise);
    let l = config.num_qubits;
    let flip = pauli_x();

    let mut evo = Evolution::new(config.initial_state(), config.depth);
    for layer in 0..config.depth {
        for j in brickwork_pairs(l, layer) {
            let u = sample_absorbing_unitary(&mut gates);
            evo.gate_with_noise(&u, j, config.noise_rate, config.noise_amplitude, &mut noise);
        }
        for q in 0..l {
            let site: f64 = meas.random();
            let draw: f64 = meas.random();
            if site < config.measure_rate && evo.born_measure(q, draw) == 0 {
                evo.state.apply_single_qubit(&flip, q).expect("qubit in range");
            }
        }
        evo.snapshot();
    }
    Ok(evo.finish(seeds, false, opts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptLayer {
    pub gates: Vec<(usize, TwoQubitUnitary)>,
    /// Measured qubits with their recorded outcomes, in qubit order.
    pub measurements: Vec<(usize, u8)>,
}

/// Frozen unitaries, measurement sites and outcomes of one U(1) circuit
/// realization, replayable under fresh noise.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitScript {
    pub num_qubits: usize,
    pub initial: InitialState,
    pub layers: Vec<ScriptLayer>,
    /// Noise parameters and seed of the reference run.
    pub noise_amplitude: f64,
    pub noise_rate: f64,
    pub seeds: TrajectorySeeds,
}

impl CircuitScript {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn measurement_count(&self) -> usize {
        self.layers.iter().map(|l| l.measurements.len()).sum()
    }
}

pub fn build_circuit_script(
    config: &CircuitConfig,
    index: u64,
) -> Result<(CircuitScript, TrajectoryRecord), ConfigError> {
    build_circuit_script_with(config, index, TrajectoryOptions::default())
}

/// Runs the reference U(1) trajectory with Born-sampled outcomes and
/// freezes its unitaries, sites and outcomes.
pub fn build_circuit_script_with(
    config: &CircuitConfig,
    index: u64,
    opts: TrajectoryOptions,
) -> Result<(CircuitScript, TrajectoryRecord), ConfigError> {
    config.require(Model::U1)?;
    let seeds = TrajectorySeeds::derive(config.master_seed, index);
    let mut gates = rng_from_seed(seeds.gates);
    let mut meas = rng_from_seed(seeds.measurements);
    let mut noise = rng_from_seed(seeds.noise);
    let l = config.num_qubits;

    let mut evo = Evolution::new(config.initial_state(), config.depth);
    let mut layers = Vec::with_capacity(config.depth);
    for layer in 0..config.depth {
        let mut frozen = ScriptLayer { gates: Vec::new(), measurements: Vec::new() };
        for j in brickwork_pairs(l, layer) {
            let u = sample_u1_unitary(&mut gates);
            evo.gate_with_noise(&u, j, config.noise_rate, config.noise_amplitude, &mut noise);
            frozen.gates.push((j, u));
        }
        for q in 0..l {
            let site: f64 = meas.random();
            let draw: f64 = meas.random();
            if site < config.measure_rate {
                frozen.measurements.push((q, evo.born_measure(q, draw)));
            }
        }
        evo.snapshot();
        layers.push(frozen);
    }
    let script = CircuitScript {
        num_qubits: l,
        initial: config.initial,
        layers,
        noise_amplitude: config.noise_amplitude,
        noise_rate: config.noise_rate,
        seeds,
    };
    Ok((script, evo.finish(seeds, false, opts)))
}

/// Replays `script` with fresh noise drawn from `noise_seed`, forcing every
/// measurement to its recorded outcome. A zero-probability forced branch
/// marks the record discarded.
pub fn replay_with_noise(
    script: &CircuitScript,
    theta_amp: f64,
    gamma: f64,
    noise_seed: u64,
    opts: TrajectoryOptions,
) -> TrajectoryRecord {
    let mut noise = rng_from_seed(noise_seed);
    let initial = match script.initial {
        InitialState::PlusProduct => StateVector::plus_product(script.num_qubits),
        InitialState::Basis(bits) => StateVector::basis(script.num_qubits, bits),
    };
    let seeds = TrajectorySeeds { noise: noise_seed, ..script.seeds };
    let mut evo = Evolution::new(initial, script.depth());
    for layer in &script.layers {
        for (j, u) in &layer.gates {
            evo.gate_with_noise(u, *j, gamma, theta_amp, &mut noise);
        }
        for &(q, m) in &layer.measurements {
            match evo.state.force_outcome(q, m) {
                Ok(_) => {}
                Err(StateError::ZeroBranch { .. }) => return evo.finish(seeds, true, opts),
                Err(e) => panic!("replay failed: {e}"),
            }
        }
        evo.snapshot();
    }
    evo.finish(seeds, false, opts)
}
