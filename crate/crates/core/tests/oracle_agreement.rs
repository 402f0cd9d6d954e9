//! Sector solvers against the dense brute-force oracle.

use proptest::prelude::*;

use trilinear::fock::{default_cutoff, PumpWeights, TrimodalState};
use trilinear::full::{evolve_state, Integrator};
use trilinear::info::von_neumann_entropy;
use trilinear::shorttime;
use trilinear::C64;
use trilinear_oracle::{
    dense_evolve, dense_partial_trace, dense_trace_out_pump, entropy, DenseState, Mode,
};

const DIM: usize = 6;
const DIMS: (usize, usize, usize) = (DIM, DIM, DIM);
const INTERNAL_STEP: f64 = 5e-4;
const REDUCTION_TOL: f64 = 1e-12;
const ENTROPY_TOL: f64 = 1e-8;
const STATE_TOL: f64 = 1e-8;

fn pump_from(parts: &[(f64, f64)]) -> PumpWeights {
    let amps: Vec<C64> = parts.iter().map(|&(re, im)| C64::new(re, im)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    PumpWeights::from_amplitudes(amps.iter().map(|a| a / norm).collect()).unwrap()
}

fn evolve_both(pump: &PumpWeights, taus: &[f64]) -> (Vec<DenseState>, Vec<TrimodalState>) {
    let dense = dense_evolve(
        &DenseState::pump_product(DIMS, pump.amplitudes()),
        taus,
        INTERNAL_STEP,
    )
    .unwrap();
    let sector = evolve_state(pump, taus, Integrator::Eigen).unwrap();
    (dense, sector)
}

fn max_state_gap(dense: &DenseState, st: &TrimodalState) -> f64 {
    let mut gap = 0.0f64;
    for na in 0..DIM {
        for nb in 0..DIM {
            for nc in 0..DIM {
                let sector = if nb == nc && na + nb <= st.s_max() {
                    st.amplitude(na + nb, nb)
                } else {
                    C64::new(0.0, 0.0)
                };
                gap = gap.max((dense.amp(na, nb, nc) - sector).norm());
            }
        }
    }
    gap
}

fn matrix_gap(a: &nalgebra::DMatrix<C64>, b: &nalgebra::DMatrix<C64>) -> f64 {
    let mut gap = 0.0f64;
    for i in 0..a.nrows().max(b.nrows()) {
        for j in 0..a.ncols().max(b.ncols()) {
            let x = a.get((i, j)).copied().unwrap_or_default();
            let y = b.get((i, j)).copied().unwrap_or_default();
            gap = gap.max((x - y).norm());
        }
    }
    gap
}

#[test]
fn fixed_superposition_matches_dense_state() {
    let pump = pump_from(&[(0.3, 0.0), (0.5, 0.1), (0.0, 0.4), (0.6, -0.2), (0.2, 0.2)]);
    let taus = [0.0, 0.25, 0.7, 1.5, 3.0];
    let (dense, sector) = evolve_both(&pump, &taus);
    for (d, s) in dense.iter().zip(&sector) {
        assert!(max_state_gap(d, s) < STATE_TOL);
    }
}

#[test]
fn reductions_match_partial_traces() {
    let pump = pump_from(&[(0.1, 0.0), (0.4, 0.0), (0.3, 0.5), (0.5, 0.0), (0.0, 0.3)]);
    let taus = [0.4, 1.1, 2.3];
    let (dense, sector) = evolve_both(&pump, &taus);
    for (d, s) in dense.iter().zip(&sector) {
        let pump_gap = matrix_gap(
            s.reduced_pump().elements(),
            &dense_partial_trace(d, Mode::Pump),
        );
        assert!(pump_gap < REDUCTION_TOL, "pump reduction gap {pump_gap:e}");

        let rho_b = dense_partial_trace(d, Mode::Signal);
        let rho_c = dense_partial_trace(d, Mode::Idler);
        let signal = s.reduced_signal();
        let idler = s.reduced_idler();
        for n in 0..DIM {
            let p = signal.probs().get(n).copied().unwrap_or(0.0);
            let q = idler.probs().get(n).copied().unwrap_or(0.0);
            assert!((rho_b[(n, n)].re - p).abs() < REDUCTION_TOL);
            assert!((rho_c[(n, n)].re - q).abs() < REDUCTION_TOL);
            for m in 0..DIM {
                if m != n {
                    assert!(
                        rho_b[(n, m)].norm() < REDUCTION_TOL,
                        "signal coherence at ({n},{m})"
                    );
                }
            }
        }
    }
}

#[test]
fn pump_entropy_equals_pair_entropy() {
    let pump = PumpWeights::coherent_with_tolerance(1.5, 4, 1.0).unwrap();
    let taus = [0.3, 0.9, 1.8];
    let (dense, sector) = evolve_both(&pump, &taus);
    for (d, s) in dense.iter().zip(&sector) {
        let s_a = von_neumann_entropy(&s.reduced_pump()).unwrap();
        let s_bc = entropy(&dense_trace_out_pump(d));
        assert!((s_a - s_bc).abs() < ENTROPY_TOL, "S_a {s_a} vs S_bc {s_bc}");
    }
}

#[test]
fn dense_number_expectations_match_sector_state() {
    let pump = PumpWeights::coherent_with_tolerance(2.0, 4, 1.0).unwrap();
    let taus = [0.5, 1.0, 2.0];
    let (dense, sector) = evolve_both(&pump, &taus);
    for (d, s) in dense.iter().zip(&sector) {
        let occ = s.occupations();
        assert!((d.expect_number(Mode::Pump) - occ.pump).abs() < STATE_TOL);
        assert!((d.expect_number(Mode::Signal) - occ.signal).abs() < STATE_TOL);
        assert!((d.expect_number(Mode::Idler) - occ.idler).abs() < STATE_TOL);
    }
}

#[test]
fn shorttime_and_full_share_leading_order_only() {
    // coherent n̄ = 9: both give 9τ², the τ⁴ terms are E[s(s−2)] = 72 for the
    // truncated solution and E[s(s−2)]/3 = 24 for the exact dynamics
    let pump = PumpWeights::coherent(9.0, default_cutoff(9.0)).unwrap();
    let tau: f64 = 0.002;
    let quartic = |nb: f64| (nb - 9.0 * tau * tau) / tau.powi(4);
    let short = shorttime::state(&pump, tau).unwrap().occupations().signal;
    let exact = evolve_state(&pump, &[tau], Integrator::Eigen).unwrap()[0]
        .occupations()
        .signal;
    assert!(
        (quartic(short) - 72.0).abs() < 0.01,
        "short-time τ⁴ coefficient {}",
        quartic(short)
    );
    assert!(
        (quartic(exact) - 24.0).abs() < 0.01,
        "exact τ⁴ coefficient {}",
        quartic(exact)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_pumps_match_dense_state(
        parts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=5),
        tau in 0.0f64..2.5,
    ) {
        let norm: f64 = parts.iter().map(|(a, b)| a * a + b * b).sum();
        prop_assume!(norm > 1e-3);
        let pump = pump_from(&parts);
        let (dense, sector) = evolve_both(&pump, &[tau]);
        prop_assert!(max_state_gap(&dense[0], &sector[0]) < STATE_TOL);
        prop_assert!(dense[0].leakage_population() < 1e-14);
    }
}
