use std::f64::consts::PI;

use mcl_core::channels::{
    avg_gate_fidelity, classical_fixed_point_n, classical_steady_n, commutator_superop,
    decompose_error_channel, error_channel, infer_noise_amplitude, mc_gate_fidelity,
    measurement_channel, measurement_feedback_channel, noisy_channel, SuperOp,
};
use mcl_core::circuits::{CircuitConfig, Model};
use mcl_core::ensemble::{
    adaptive_ensemble_with, fluctuation_histogram, u1_ensemble_with, EnsembleError, EnsembleOptions,
};
use mcl_core::gates::Axis;
use mcl_core::seeds::rng_from_seed;

use crate::args::{
    AdaptiveSweepArgs, AnalyticsArgs, BenchmarkArgs, CircuitArgs, Command, CompareArgs,
    DynamicsArgs, Table as TableKind, U1HistArgs, U1SweepArgs,
};
use crate::output::{Cell, Table};

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Runtime(e)
    }
}

impl From<EnsembleError> for RunError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::Config(_) | EnsembleError::TooFew { .. } | EnsembleError::EmptyGrid => {
                RunError::Usage(e.to_string())
            }
            other => RunError::Runtime(other.into()),
        }
    }
}

fn config(model: Model, c: &CircuitArgs) -> Result<CircuitConfig, RunError> {
    let mut cfg = CircuitConfig::for_model(model, c.size).with_noise_rate(c.gamma).with_seed(c.seed.value());
    if let Some(d) = c.depth {
        cfg = cfg.with_depth(d);
    }
    cfg.validate().map_err(|e| RunError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn in_unit(name: &str, values: &[f64]) -> Result<(), RunError> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(RunError::Usage(format!("{name} value {v} is outside [0, 1]"))),
        None => Ok(()),
    }
}

fn progress(done: usize, total: usize, p: f64, theta: f64) {
    eprintln!("[{done}/{total}] p_m={p} theta={theta}");
}

pub fn run(command: &Command, workers: Option<usize>) -> Result<Table, RunError> {
    let opts = EnsembleOptions { workers, retain_states: false };
    match command {
        Command::AdaptiveSweep(a) => adaptive_sweep(a, opts),
        Command::AdaptiveDynamics(a) => adaptive_dynamics(a, opts),
        Command::U1Sweep(a) => u1_sweep(a, opts),
        Command::U1Hist(a) => u1_hist(a, opts),
        Command::ClassicalCompare(a) => classical_compare(a, opts),
        Command::Analytics(a) => analytics(a),
        Command::BenchmarkNoise(a) => benchmark(a),
        Command::RerunFromMeta(_) => Err(RunError::Usage("rerun-from-meta cannot be nested".into())),
    }
}

fn adaptive_sweep(a: &AdaptiveSweepArgs, opts: EnsembleOptions) -> Result<Table, RunError> {
    let cfg = config(Model::Adaptive, &a.circuit)?;
    in_unit("pm", a.pm.values())?;
    in_unit("theta", a.theta.values())?;
    let quarter = cfg.num_qubits as f64 / 4.0;
    let mut t = Table::new(&["pm", "theta", "gamma", "L", "steady_n", "steady_fluct_scaled", "discarded", "runs"]);
    let total = a.pm.values().len() * a.theta.values().len();
    for &p in a.pm.values() {
        for &theta in a.theta.values() {
            let r = adaptive_ensemble_with(&cfg.clone().with_measure_rate(p).with_noise(theta), a.runs, opts)?;
            t.push(vec![
                p.into(),
                theta.into(),
                cfg.noise_rate.into(),
                cfg.num_qubits.into(),
                r.steady_n.into(),
                (r.steady_fluct / quarter).into(),
                r.discarded.into(),
                r.runs.into(),
            ]);
            progress(t.rows.len(), total, p, theta);
        }
    }
    Ok(t)
}

fn adaptive_dynamics(a: &DynamicsArgs, opts: EnsembleOptions) -> Result<Table, RunError> {
    let cfg = config(Model::Adaptive, &a.circuit)?;
    in_unit("pm", a.pm.values())?;
    in_unit("theta", a.theta.values())?;
    let quarter = cfg.num_qubits as f64 / 4.0;
    let mut t = Table::new(&["pm", "theta", "gamma", "L", "t", "n_bar", "fluct_scaled", "runs"]);
    let total = a.pm.values().len() * a.theta.values().len();
    let mut done = 0;
    for &p in a.pm.values() {
        for &theta in a.theta.values() {
            let r = adaptive_ensemble_with(&cfg.clone().with_measure_rate(p).with_noise(theta), a.runs, opts)?;
            for (step, (n, f)) in r.n_bar.iter().zip(&r.fluct).enumerate() {
                t.push(vec![
                    p.into(),
                    theta.into(),
                    cfg.noise_rate.into(),
                    cfg.num_qubits.into(),
                    step.into(),
                    (*n).into(),
                    (f / quarter).into(),
                    r.runs.into(),
                ]);
            }
            done += 1;
            progress(done, total, p, theta);
        }
    }
    Ok(t)
}

fn u1_sweep(a: &U1SweepArgs, opts: EnsembleOptions) -> Result<Table, RunError> {
    let cfg = config(Model::U1, &a.circuit)?;
    in_unit("pm", a.pm.values())?;
    in_unit("theta", a.theta.values())?;
    let quarter = cfg.num_qubits as f64 / 4.0;
    let mut t = Table::new(&[
        "pm",
        "theta",
        "gamma",
        "L",
        "T",
        "n_bar",
        "fluct_scaled",
        "purity",
        "discarded",
        "dropped_scripts",
        "scripts",
        "noise_reps",
    ]);
    let total = a.pm.values().len() * a.theta.values().len();
    for &p in a.pm.values() {
        for &theta in a.theta.values() {
            let r = u1_ensemble_with(&cfg.clone().with_measure_rate(p).with_noise(theta), a.scripts, a.noise_reps, opts)?;
            t.push(vec![
                p.into(),
                theta.into(),
                cfg.noise_rate.into(),
                cfg.num_qubits.into(),
                cfg.depth.into(),
                r.steady_n.into(),
                (r.steady_fluct / quarter).into(),
                r.purity.into(),
                r.discarded.into(),
                r.dropped_scripts.into(),
                r.runs.into(),
                r.noise_reps.into(),
            ]);
            progress(t.rows.len(), total, p, theta);
        }
    }
    Ok(t)
}

fn u1_hist(a: &U1HistArgs, opts: EnsembleOptions) -> Result<Table, RunError> {
    let cfg = config(Model::U1, &a.circuit)?;
    in_unit("pm", a.pm.values())?;
    in_unit("theta", a.theta.values())?;
    if a.bins == 0 {
        return Err(RunError::Usage("bins must be positive".into()));
    }
    let quarter = cfg.num_qubits as f64 / 4.0;
    let mut t = Table::new(&["pm", "theta", "gamma", "L", "bin", "bin_left", "bin_right", "mass", "scripts"]);
    let total = a.pm.values().len() * a.theta.values().len();
    let mut done = 0;
    for &p in a.pm.values() {
        for &theta in a.theta.values() {
            let r = u1_ensemble_with(&cfg.clone().with_measure_rate(p).with_noise(theta), a.scripts, a.noise_reps, opts)?;
            let values: Vec<f64> = r.scripts.iter().map(|s| s.fluct).collect();
            let h = fluctuation_histogram(&values, a.bins, quarter);
            let w = h.bin_width();
            for (i, m) in h.mass.iter().enumerate() {
                t.push(vec![
                    p.into(),
                    theta.into(),
                    cfg.noise_rate.into(),
                    cfg.num_qubits.into(),
                    i.into(),
                    (i as f64 * w).into(),
                    ((i + 1) as f64 * w).into(),
                    (*m).into(),
                    values.len().into(),
                ]);
            }
            done += 1;
            progress(done, total, p, theta);
        }
    }
    Ok(t)
}

fn classical_compare(a: &CompareArgs, opts: EnsembleOptions) -> Result<Table, RunError> {
    let cfg = config(Model::Adaptive, &a.circuit)?;
    in_unit("pm", a.pm.values())?;
    in_unit("theta", a.theta.values())?;
    let gamma = cfg.noise_rate;
    let mut t = Table::new(&[
        "pm",
        "theta",
        "gamma",
        "L",
        "steady_n_sim",
        "steady_n_classical",
        "steady_n_fixed_point",
        "runs",
    ]);
    let total = a.pm.values().len() * a.theta.values().len();
    for &p in a.pm.values() {
        for &theta in a.theta.values() {
            let (sim, runs) = if a.analytic_only {
                (Cell::Empty, Cell::Int(0))
            } else {
                let r = adaptive_ensemble_with(&cfg.clone().with_measure_rate(p).with_noise(theta), a.runs, opts)?;
                (r.steady_n.into(), r.runs.into())
            };
            t.push(vec![
                p.into(),
                theta.into(),
                gamma.into(),
                cfg.num_qubits.into(),
                sim,
                classical_steady_n(p, theta, gamma).into(),
                classical_fixed_point_n(p, theta, gamma).into(),
                runs,
            ]);
            if !a.analytic_only {
                progress(t.rows.len(), total, p, theta);
            }
        }
    }
    Ok(t)
}

fn superop_rows(t: &mut Table, name: &str, pm: Option<f64>, theta: Option<f64>, gamma: Option<f64>, op: &SuperOp) {
    for r in 0..4 {
        for c in 0..4 {
            let e = op.matrix[(r, c)];
            t.push(vec![
                name.into(),
                pm.into(),
                theta.into(),
                gamma.into(),
                r.into(),
                c.into(),
                e.re.into(),
                e.im.into(),
            ]);
        }
    }
}

fn analytics(a: &AnalyticsArgs) -> Result<Table, RunError> {
    in_unit("theta", a.theta.values())?;
    in_unit("gamma", a.gamma.values())?;
    in_unit("pm", a.pm.values())?;
    match a.table {
        TableKind::Fidelity => {
            let mut t = Table::new(&["theta", "gamma", "fidelity", "mc_fidelity", "mc_std_error", "mc_samples"]);
            let mut rng = rng_from_seed(a.seed.value());
            for &theta in a.theta.values() {
                for &gamma in a.gamma.values() {
                    let (mean, err) = if a.mc_samples > 0 {
                        let est = mc_gate_fidelity(theta, gamma, a.mc_samples, &mut rng);
                        (Some(est.mean), Some(est.std_error))
                    } else {
                        (None, None)
                    };
                    t.push(vec![
                        theta.into(),
                        gamma.into(),
                        avg_gate_fidelity(theta, gamma).into(),
                        mean.into(),
                        err.into(),
                        a.mc_samples.into(),
                    ]);
                }
            }
            Ok(t)
        }
        TableKind::Decomposition => {
            let mut t = Table::new(&[
                "theta",
                "theta_max",
                "phi",
                "eta",
                "pauli_weight",
                "commutator_weight",
                "reconstruction_error",
                "choi_min_eigenvalue",
            ]);
            for &theta in a.theta.values() {
                let theta_max = PI * theta;
                let d = decompose_error_channel(theta_max);
                let phi = error_channel(theta_max);
                t.push(vec![
                    theta.into(),
                    theta_max.into(),
                    d.phi.into(),
                    d.eta.into(),
                    d.pauli_weight().into(),
                    d.commutator_weight().into(),
                    phi.max_abs_diff(&d.channel()).into(),
                    phi.choi_min_eigenvalue().into(),
                ]);
            }
            Ok(t)
        }
        TableKind::Superops => {
            let mut t = Table::new(&["channel", "pm", "theta", "gamma", "row", "col", "re", "im"]);
            for (name, axis) in [("commutator_x", Axis::X), ("commutator_y", Axis::Y), ("commutator_z", Axis::Z)] {
                superop_rows(&mut t, name, None, None, None, &commutator_superop(axis));
            }
            for &p in a.pm.values() {
                superop_rows(&mut t, "measurement_feedback", Some(p), None, None, &measurement_feedback_channel(p));
                superop_rows(&mut t, "measurement", Some(p), None, None, &measurement_channel(p));
            }
            for &theta in a.theta.values() {
                let err = error_channel(PI * theta);
                superop_rows(&mut t, "error", None, Some(theta), None, &err);
                for &gamma in a.gamma.values() {
                    superop_rows(&mut t, "noisy", None, Some(theta), Some(gamma), &noisy_channel(&err, gamma));
                }
            }
            Ok(t)
        }
    }
}

fn benchmark(a: &BenchmarkArgs) -> Result<Table, RunError> {
    in_unit("pm", &[a.pm])?;
    in_unit("gamma", &[a.gamma])?;
    let est = infer_noise_amplitude(a.n_bar, a.pm, a.gamma).map_err(|e| RunError::Runtime(e.into()))?;
    let mut t = Table::new(&["n_bar", "pm", "gamma", "theta", "fidelity"]);
    t.push(vec![a.n_bar.into(), a.pm.into(), a.gamma.into(), est.theta_amp.into(), est.fidelity.into()]);
    Ok(t)
}
