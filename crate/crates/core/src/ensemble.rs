//! Ensemble averages over trajectories.
//!
//! Adaptive ensembles average every trajectory into one mixed state, so the
//! mixed-state charge moments are plain means of per-trajectory moments.
//! U(1) ensembles first average noise replays of a frozen circuit script,
//! evaluate observables per script, and then average over scripts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{
    build_circuit_script_with, replay_with_noise, run_adaptive_trajectory_with, CircuitConfig,
    ConfigError, Model, TrajectoryOptions, TrajectoryRecord,
};
use crate::numeric::compensated_sum;
use crate::qstate::{StateError, StateVector};
use crate::seeds::{stream_seed, StreamTag};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("need at least {min} {what}, got {got}")]
    TooFew { what: &'static str, min: usize, got: usize },
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("every script was dropped")]
    AllScriptsDropped,
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnsembleOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Keep the final pure state of every trajectory or replay.
    pub retain_states: bool,
}

/// Normalized bin masses on `[0, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub upper: f64,
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.upper / self.mass.len() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width()
    }

    /// Index of the heaviest bin; ties go to the lowest index.
    pub fn peak_bin(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.mass.iter().enumerate() {
            if m > self.mass[best] {
                best = i;
            }
        }
        best
    }

    /// Mass in the lowest `fraction` of the range, rounded to whole bins.
    pub fn mass_in_lowest(&self, fraction: f64) -> f64 {
        let bins = (fraction * self.mass.len() as f64).round() as usize;
        self.mass[..bins.min(self.mass.len())].iter().sum()
    }
}

/// Histogram of `values` on `[0, max(nominal_upper, 1.01·max(values))]`.
pub fn fluctuation_histogram(values: &[f64], n_bins: usize, nominal_upper: f64) -> Histogram {
    assert!(n_bins > 0, "histogram needs at least one bin");
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    let mut upper = nominal_upper.max(1.01 * max);
    if upper <= 0.0 {
        upper = 1.0;
    }
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let b = ((v.max(0.0) / upper) * n_bins as f64) as usize;
        counts[b.min(n_bins - 1)] += 1;
    }
    let total = values.len().max(1) as f64;
    Histogram { upper, mass: counts.into_iter().map(|c| c as f64 / total).collect() }
}

/// `Tr ρ²` of the uniform mixture of `states`.
pub fn purity_from_overlaps(states: &[StateVector]) -> Result<f64, StateError> {
    let n = states.len();
    if n == 0 {
        return Err(StateError::BadLength(0));
    }
    let mut off = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            off.push(states[i].overlap(&states[j])?.norm_sqr());
        }
    }
    let diag: f64 = compensated_sum(states.iter().map(|s| s.norm_sqr() * s.norm_sqr()));
    Ok((diag + 2.0 * compensated_sum(off)) / (n * n) as f64)
}

/// Per-script observables at the final layer of a U(1) ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptSummary {
    pub index: u64,
    pub kept_replays: usize,
    pub n_bar: f64,
    pub fluct: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub config: CircuitConfig,
    /// Trajectories (adaptive) or scripts (U(1)) requested.
    pub runs: usize,
    /// Noise replays per script; 1 for adaptive ensembles.
    pub noise_reps: usize,
    pub n_bar: Vec<f64>,
    pub fluct: Vec<f64>,
    /// Mean pure-state charge variance of the underlying trajectories.
    pub mean_variance: Vec<f64>,
    pub purity: Option<f64>,
    pub histogram: Option<Histogram>,
    pub steady_n: f64,
    pub steady_fluct: f64,
    pub discarded: usize,
    pub dropped_scripts: usize,
    pub scripts: Vec<ScriptSummary>,
    /// Final states grouped per script (one group for adaptive), if retained.
    pub final_states: Vec<Vec<StateVector>>,
}

/// Time steps averaged for the steady state: `3T/4 < t < T`, which is
/// `3L < t < 4L` at the default adaptive depth. Falls back to `t = T`.
pub fn steady_window(depth: usize) -> std::ops::Range<usize> {
    let start = 3 * depth / 4 + 1;
    if start < depth {
        start..depth
    } else {
        depth..depth + 1
    }
}

fn window_mean(series: &[f64], window: std::ops::Range<usize>) -> f64 {
    let len = window.len() as f64;
    compensated_sum(series[window].iter().copied()) / len
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, EnsembleError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| EnsembleError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

struct Moments {
    q1: Vec<f64>,
    q2: Vec<f64>,
    var: Vec<f64>,
}

/// Means over records at every time step, summed in record order.
fn mean_moments<'a>(records: impl Iterator<Item = &'a TrajectoryRecord> + Clone, len: usize) -> Moments {
    let n = records.clone().count() as f64;
    let col = |f: &dyn Fn(&TrajectoryRecord, usize) -> f64| -> Vec<f64> {
        (0..len).map(|t| compensated_sum(records.clone().map(|r| f(r, t))) / n).collect()
    };
    Moments {
        q1: col(&|r, t| r.q1[t]),
        q2: col(&|r, t| r.q2[t]),
        var: col(&|r, t| r.q2[t] - r.q1[t] * r.q1[t]),
    }
}

pub fn adaptive_ensemble(config: &CircuitConfig, n_runs: usize) -> Result<EnsembleResult, EnsembleError> {
    adaptive_ensemble_with(config, n_runs, EnsembleOptions::default())
}

/// Mixed state over `n_runs` adaptive trajectories, without postselection.
pub fn adaptive_ensemble_with(
    config: &CircuitConfig,
    n_runs: usize,
    opts: EnsembleOptions,
) -> Result<EnsembleResult, EnsembleError> {
    if config.model != Model::Adaptive {
        return Err(ConfigError::WrongModel { expected: Model::Adaptive }.into());
    }
    config.validate()?;
    if n_runs < 2 {
        return Err(EnsembleError::TooFew { what: "runs", min: 2, got: n_runs });
    }
    let topts = TrajectoryOptions { retain_state: opts.retain_states };
    let records: Vec<TrajectoryRecord> = with_pool(opts.workers, || {
        (0..n_runs as u64)
            .into_par_iter()
            .map(|i| run_adaptive_trajectory_with(config, i, topts).expect("validated config"))
            .collect()
    })?;

    let l = config.num_qubits as f64;
    let m = mean_moments(records.iter(), config.depth + 1);
    let n_bar: Vec<f64> = m.q1.iter().map(|q| 2.0 * q / l - 1.0).collect();
    let fluct: Vec<f64> = m.q1.iter().zip(&m.q2).map(|(a, b)| b - a * a).collect();
    let window = steady_window(config.depth);

    let final_states: Vec<StateVector> = records.into_iter().filter_map(|r| r.final_state).collect();
    let purity = if opts.retain_states { Some(purity_from_overlaps(&final_states).expect("equal sizes")) } else { None };

    Ok(EnsembleResult {
        config: config.clone(),
        runs: n_runs,
        noise_reps: 1,
        steady_n: window_mean(&n_bar, window.clone()),
        steady_fluct: window_mean(&fluct, window),
        n_bar,
        fluct,
        mean_variance: m.var,
        purity,
        histogram: None,
        discarded: 0,
        dropped_scripts: 0,
        scripts: Vec::new(),
        final_states: if opts.retain_states { vec![final_states] } else { Vec::new() },
    })
}

struct ScriptOutcome {
    index: u64,
    replays: Vec<TrajectoryRecord>,
    discarded: usize,
}

pub fn u1_ensemble(config: &CircuitConfig, n_scripts: usize, n_noise: usize) -> Result<EnsembleResult, EnsembleError> {
    u1_ensemble_with(config, n_scripts, n_noise, EnsembleOptions::default())
}

/// Postselected U(1) ensemble: `n_noise` noise replays of each of
/// `n_scripts` frozen circuit scripts. Observables are taken at `t = T`
/// per script, then averaged over scripts.
pub fn u1_ensemble_with(
    config: &CircuitConfig,
    n_scripts: usize,
    n_noise: usize,
    opts: EnsembleOptions,
) -> Result<EnsembleResult, EnsembleError> {
    if config.model != Model::U1 {
        return Err(ConfigError::WrongModel { expected: Model::U1 }.into());
    }
    config.validate()?;
    if n_scripts < 1 {
        return Err(EnsembleError::TooFew { what: "scripts", min: 1, got: n_scripts });
    }
    if n_noise < 2 {
        return Err(EnsembleError::TooFew { what: "noise replays", min: 2, got: n_noise });
    }
    let keep = TrajectoryOptions { retain_state: true };
    let outcomes: Vec<ScriptOutcome> = with_pool(opts.workers, || {
        (0..n_scripts as u64)
            .into_par_iter()
            .map(|s| {
                let (script, _) = build_circuit_script_with(config, s, TrajectoryOptions::default())
                    .expect("validated config");
                let all: Vec<TrajectoryRecord> = (0..n_noise as u32)
                    .map(|r| {
                        let seed = stream_seed(config.master_seed, s, StreamTag::Replay(r));
                        replay_with_noise(&script, config.noise_amplitude, config.noise_rate, seed, keep)
                    })
                    .collect();
                let total = all.len();
                let replays: Vec<TrajectoryRecord> = all.into_iter().filter(|r| !r.discarded).collect();
                ScriptOutcome { index: s, discarded: total - replays.len(), replays }
            })
            .collect()
    })?;

    let l = config.num_qubits as f64;
    let len = config.depth + 1;
    let discarded = outcomes.iter().map(|o| o.discarded).sum();
    let kept: Vec<&ScriptOutcome> = outcomes.iter().filter(|o| !o.replays.is_empty()).collect();
    if kept.is_empty() {
        return Err(EnsembleError::AllScriptsDropped);
    }
    let n_kept = kept.len() as f64;

    let mut n_bar_rows = Vec::with_capacity(kept.len());
    let mut fluct_rows = Vec::with_capacity(kept.len());
    let mut var_rows = Vec::with_capacity(kept.len());
    let mut scripts = Vec::with_capacity(kept.len());
    let mut final_states = Vec::new();
    for o in &kept {
        let m = mean_moments(o.replays.iter(), len);
        let nb: Vec<f64> = m.q1.iter().map(|q| 2.0 * q / l - 1.0).collect();
        let fl: Vec<f64> = m.q1.iter().zip(&m.q2).map(|(a, b)| b - a * a).collect();
        let states: Vec<StateVector> =
            o.replays.iter().map(|r| r.final_state.clone().expect("retained")).collect();
        let purity = purity_from_overlaps(&states).expect("equal sizes");
        scripts.push(ScriptSummary {
            index: o.index,
            kept_replays: o.replays.len(),
            n_bar: nb[len - 1],
            fluct: fl[len - 1],
            purity,
        });
        n_bar_rows.push(nb);
        fluct_rows.push(fl);
        var_rows.push(m.var);
        if opts.retain_states {
            final_states.push(states);
        }
    }
    let avg = |rows: &[Vec<f64>]| -> Vec<f64> {
        (0..len).map(|t| compensated_sum(rows.iter().map(|r| r[t])) / n_kept).collect()
    };
    let n_bar = avg(&n_bar_rows);
    let fluct = avg(&fluct_rows);
    let script_fluct: Vec<f64> = scripts.iter().map(|s| s.fluct).collect();
    let purity = compensated_sum(scripts.iter().map(|s| s.purity)) / n_kept;

    Ok(EnsembleResult {
        config: config.clone(),
        runs: n_scripts,
        noise_reps: n_noise,
        steady_n: n_bar[len - 1],
        steady_fluct: fluct[len - 1],
        mean_variance: avg(&var_rows),
        n_bar,
        fluct,
        purity: Some(purity),
        histogram: Some(fluctuation_histogram(&script_fluct, HISTOGRAM_BINS, l / 4.0)),
        discarded,
        dropped_scripts: n_scripts - kept.len(),
        scripts,
        final_states,
    })
}

/// Ensemble sizes for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepCounts {
    /// Trajectories per cell (adaptive) or scripts per cell (U(1)).
    pub runs: usize,
    /// Noise replays per script; ignored for adaptive sweeps.
    pub noise_reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub measure_rate: f64,
    pub noise_amplitude: f64,
    pub result: EnsembleResult,
}

/// One ensemble per `(p_m, Θ)` cell of `template`'s model and size.
///
/// Every cell uses the template's master seed, so cells share gate,
/// measurement-site and noise-inclusion draws and differ only through the
/// swept parameters.
pub fn sweep_grid(
    template: &CircuitConfig,
    measure_rates: &[f64],
    noise_amplitudes: &[f64],
    counts: SweepCounts,
    opts: EnsembleOptions,
) -> Result<Vec<SweepCell>, EnsembleError> {
    if measure_rates.is_empty() || noise_amplitudes.is_empty() {
        return Err(EnsembleError::EmptyGrid);
    }
    let mut cells = Vec::with_capacity(measure_rates.len() * noise_amplitudes.len());
    for &p in measure_rates {
        for &theta in noise_amplitudes {
            let cfg = template.clone().with_measure_rate(p).with_noise(theta);
            let result = match cfg.model {
                Model::Adaptive => adaptive_ensemble_with(&cfg, counts.runs, opts)?,
                Model::U1 => u1_ensemble_with(&cfg, counts.runs, counts.noise_reps, opts)?,
            };
            cells.push(SweepCell { measure_rate: p, noise_amplitude: theta, result });
        }
    }
    Ok(cells)
}
