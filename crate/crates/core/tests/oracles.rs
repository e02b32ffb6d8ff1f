//! Ensemble statistics against independently computed references.
//!
//! Without noise, the gate-averaged diagonal of the adaptive density matrix
//! is a classical Markov chain: a Haar `U(3) ⊕ 1` gate spreads the pair
//! populations of `{00, 01, 10}` uniformly and leaves `11` fixed, while
//! measurement with feedback moves a qubit's `0` population to `1` with
//! probability `p_m`. The reference values below come from evolving that
//! chain exactly on all `2^6` configurations.

use mcl_core::circuits::{run_adaptive_trajectory, CircuitConfig};
use mcl_core::ensemble::{adaptive_ensemble, u1_ensemble};

const L: usize = 6;
const RUNS: usize = 4000;

/// `(t, n̄(t), δ²Q(t))` of the exact chain at depth 24.
const CHAIN_P010: [(usize, f64, f64); 4] = [
    (1, 0.1, 1.485),
    (4, 0.258919246738, 1.603628209321),
    (12, 0.445757531876, 1.865197205661),
    (24, 0.612216575634, 1.865128551808),
];
const CHAIN_P025: [(usize, f64, f64); 4] = [
    (1, 0.25, 1.40625),
    (4, 0.580861210823, 1.252424062731),
    (12, 0.86747721047, 0.6590128241),
    (24, 0.974686708993, 0.149787264481),
];

fn check_chain(p: f64, reference: &[(usize, f64, f64)]) {
    let cfg = CircuitConfig::adaptive(L).with_measure_rate(p).with_depth(24).with_seed(41);
    let r = adaptive_ensemble(&cfg, RUNS).unwrap();
    let records: Vec<_> = (0..RUNS as u64).map(|i| run_adaptive_trajectory(&cfg, i).unwrap()).collect();
    for &(t, n_exact, fluct_exact) in reference {
        let n: Vec<f64> = records.iter().map(|rec| 2.0 * rec.q1[t] / L as f64 - 1.0).collect();
        let mean = n.iter().sum::<f64>() / RUNS as f64;
        let sd = (n.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (RUNS - 1) as f64).sqrt();
        let se = sd / (RUNS as f64).sqrt();
        assert!((r.n_bar[t] - n_exact).abs() < 5.0 * se + 1e-12, "p={p} t={t}: {} vs {n_exact}", r.n_bar[t]);
        assert!((r.fluct[t] - fluct_exact).abs() < 0.08, "p={p} t={t}: {} vs {fluct_exact}", r.fluct[t]);
    }
}

#[test]
fn adaptive_ensemble_matches_exact_markov_chain_at_low_rate() {
    check_chain(0.1, &CHAIN_P010);
}

#[test]
fn adaptive_ensemble_matches_exact_markov_chain_at_high_rate() {
    check_chain(0.25, &CHAIN_P025);
}

/// Mean pure-state charge variance at `t = 2L`, `L = 8`, `p_m = 0.1`, from a
/// separate dense-tensor implementation over 3000 trajectories:
/// 0.4845 with standard error 0.0048.
#[test]
fn u1_sharpening_matches_independent_engine() {
    let cfg = CircuitConfig::u1(8).with_measure_rate(0.1).with_seed(19);
    let r = u1_ensemble(&cfg, 3000, 2).unwrap();
    assert!((r.steady_fluct - 0.4845).abs() < 0.035, "{}", r.steady_fluct);
}
