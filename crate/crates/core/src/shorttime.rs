//! Short-time quantum solution from the second-order BCH factorization.
//!
//! Sector `M` evolves to `Σ_n f_n τⁿ |M−n⟩|k, n⟩ / √N_M(τ)` with
//! `f_n = [M! Γ(2k+n) / (n! (M−n)! Γ(2k))]^{1/2}` and normalization
//! `N_M(τ) = Σ_n f_n² τ²ⁿ`. Everything is evaluated as logarithms so that
//! `M ≈ 40`, `τ ≈ 100` stays finite. The `e^{τ⁻²} τ^{2M} Γ(M+1, τ⁻²)` form of
//! the normalization is used only as a cross-check.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, NumberDistribution, PumpWeights, TrimodalState};
use crate::special::{ln_factorial, log_sum_exp, log_upper_gamma};
use crate::C64;

/// Bargmann index `k` stored as the positive integer `2k = |M_bc| + 1`.
/// Vacuum signal and idler give `2k = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bargmann(u32);

impl Bargmann {
    pub const VACUUM: Bargmann = Bargmann(1);

    pub fn from_twice_k(twice_k: u32) -> Result<Self> {
        if twice_k == 0 {
            return Err(Error::Domain("2k must be a positive integer".into()));
        }
        Ok(Self(twice_k))
    }

    pub fn k(self) -> f64 {
        0.5 * self.0 as f64
    }

    pub fn twice_k(self) -> u32 {
        self.0
    }
}

/// `ln f_n(k, M)`.
pub fn ln_f_coeff(k: Bargmann, m: u32, n: u32) -> Result<f64> {
    if n > m {
        return Err(Error::Domain(format!(
            "coefficient index {n} exceeds M = {m}"
        )));
    }
    let tk = k.twice_k() as u64;
    let (m, n) = (m as u64, n as u64);
    // Γ(2k + n) = (2k + n − 1)!, Γ(2k) = (2k − 1)!
    Ok(0.5
        * (ln_factorial(m) + ln_factorial(tk + n - 1)
            - ln_factorial(n)
            - ln_factorial(m - n)
            - ln_factorial(tk - 1)))
}

pub fn f_coeff(k: Bargmann, m: u32, n: u32) -> Result<f64> {
    ln_f_coeff(k, m, n).map(f64::exp)
}

/// `ln N_M(τ)` as a log-sum of `f_n² τ²ⁿ`; zero at `τ = 0`.
pub fn ln_normalization(k: Bargmann, m: u32, tau: f64) -> Result<f64> {
    if tau == 0.0 {
        return Ok(0.0);
    }
    let lt = tau.ln();
    let terms = (0..=m)
        .map(|n| ln_f_coeff(k, m, n).map(|lf| 2.0 * lf + 2.0 * n as f64 * lt))
        .collect::<Result<Vec<_>>>()?;
    Ok(log_sum_exp(terms))
}

/// `ln N_M(τ)` through `τ⁻² + 2M ln τ + ln Γ(M+1, τ⁻²)` (vacuum `k` only).
pub fn ln_normalization_gamma(m: u32, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
    }
    let x = tau.powi(-2);
    Ok(x + 2.0 * m as f64 * tau.ln() + log_upper_gamma(m + 1, x)?)
}

/// Unit-norm sector amplitudes `f_n τⁿ / √N_M(τ)`, `n = 0..=M`.
pub fn sector_amplitudes_k(k: Bargmann, m: u32, tau: f64) -> Result<Vec<f64>> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("tau must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        let mut v = vec![0.0; m as usize + 1];
        v[0] = 1.0;
        return Ok(v);
    }
    let lt = tau.ln();
    let half_norm = 0.5 * ln_normalization(k, m, tau)?;
    (0..=m)
        .map(|n| Ok((ln_f_coeff(k, m, n)? + n as f64 * lt - half_norm).exp()))
        .collect()
}

/// Sector amplitudes for vacuum signal and idler.
pub fn sector_amplitudes(m: u32, tau: f64) -> Result<Vec<f64>> {
    sector_amplitudes_k(Bargmann::VACUUM, m, tau)
}

/// Short-time formal validity horizon `τ* = 1/√(kM)`; infinite for `M = 0`.
pub fn validity_horizon(k: Bargmann, m: u32) -> f64 {
    if m == 0 {
        return f64::INFINITY;
    }
    1.0 / (k.k() * m as f64).sqrt()
}

/// Horizon of the largest sector that carries weight.
pub fn pump_horizon(pump: &PumpWeights) -> f64 {
    let probs = pump.probabilities();
    let top = probs.probs().iter().rposition(|&p| p > 1e-12).unwrap_or(0);
    validity_horizon(Bargmann::VACUUM, top as u32)
}

/// Whether `τ` is inside the pump horizon; the solver is evaluated past it
/// on purpose.
pub fn within_horizon(pump: &PumpWeights, tau: f64) -> bool {
    tau <= pump_horizon(pump)
}

/// Full short-time state for an arbitrary pure pump.
pub fn state(pump: &PumpWeights, tau: f64) -> Result<TrimodalState> {
    let sectors = (0..=pump.s_max() as u32)
        .map(|s| {
            sector_amplitudes(s, tau).map(|v| v.into_iter().map(|x| C64::new(x, 0.0)).collect())
        })
        .collect::<Result<Vec<Vec<C64>>>>()?;
    TrimodalState::new(pump.amplitudes().to_vec(), sectors)
}

/// Signal distribution `Σ_{s≥i} P_s f_i²(s) τ²ⁱ / N_s(τ)`.
pub fn rho_signal(p_s: &NumberDistribution, tau: f64) -> Result<NumberDistribution> {
    let mut probs = vec![0.0; p_s.cutoff() + 1];
    for (s, &weight) in p_s.probs().iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        for (i, amp) in sector_amplitudes(s as u32, tau)?.into_iter().enumerate() {
            probs[i] += weight * amp * amp;
        }
    }
    NumberDistribution::new(probs)
}

/// Pump density matrix, accumulating `a_s a_r* amp_s[i] amp_r[i]` into
/// `⟨s−i|ρ_a|r−i⟩`.
pub fn rho_pump(pump: &PumpWeights, tau: f64) -> Result<DensityMatrix> {
    let a = pump.amplitudes();
    let d = a.len();
    let amps = (0..d as u32)
        .map(|s| sector_amplitudes(s, tau))
        .collect::<Result<Vec<_>>>()?;
    let mut rho = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    for s in 0..d {
        for r in 0..d {
            let w = a[s] * a[r].conj();
            for i in 0..=s.min(r) {
                rho[(s - i, r - i)] += w * (amps[s][i] * amps[r][i]);
            }
        }
    }
    DensityMatrix::new(rho)
}

/// Late-time signal distribution: the initial pump statistics themselves.
pub fn longtime_limit(p_s: &NumberDistribution) -> NumberDistribution {
    p_s.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::default_cutoff;
    use crate::info::von_neumann_entropy;

    const K: Bargmann = Bargmann::VACUUM;

    #[test]
    fn f_coeff_examples() {
        for m in [0, 3, 40] {
            assert!((f_coeff(K, m, 0).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((f_coeff(Bargmann::from_twice_k(3).unwrap(), 5, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((f_coeff(K, 2, 1).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!((f_coeff(K, 9, 9).unwrap() - 602.395_219_104_534_4).abs() < 1e-9);
        assert!(f_coeff(K, 2, 3).is_err());
    }

    #[test]
    fn general_k_coefficient() {
        // 2k = 3, M = 2, n = 1: [2!·Γ(4) / (1!·1!·Γ(3))]^{1/2} = √6
        let k = Bargmann::from_twice_k(3).unwrap();
        assert!((f_coeff(k, 2, 1).unwrap() - 6f64.sqrt()).abs() < 1e-14);
        assert!(Bargmann::from_twice_k(0).is_err());
    }

    #[test]
    fn single_quantum_amplitudes() {
        let v = sector_amplitudes(1, 1.0).unwrap();
        let h = 0.5f64.sqrt();
        assert!((v[0] - h).abs() < 1e-15 && (v[1] - h).abs() < 1e-15);
        let t = 0.37;
        let v = sector_amplitudes(1, t).unwrap();
        let n = (1.0f64 + t * t).sqrt();
        assert!((v[0] - 1.0 / n).abs() < 1e-15 && (v[1] - t / n).abs() < 1e-15);
        assert_eq!(
            sector_amplitudes(5, 0.0).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn amplitudes_have_unit_norm_everywhere() {
        for m in [0u32, 1, 7, 20, 40] {
            for tau in [1e-3, 0.1, 1.0, 10.0, 100.0] {
                let v = sector_amplitudes(m, tau).unwrap();
                let norm: f64 = v.iter().map(|x| x * x).sum();
                assert!((norm - 1.0).abs() < 1e-12, "m={m} tau={tau}");
                assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0));
            }
        }
    }

    #[test]
    fn normalization_matches_incomplete_gamma() {
        for m in 0..=20u32 {
            for tau in [0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0] {
                let a = ln_normalization(K, m, tau).unwrap();
                let b = ln_normalization_gamma(m, tau).unwrap();
                let rel = ((a - b).exp() - 1.0).abs();
                assert!(rel < 1e-8, "m={m} tau={tau} rel={rel:e}");
            }
        }
    }

    #[test]
    fn rho_signal_examples() {
        let p = NumberDistribution::delta(1, 1);
        assert_eq!(rho_signal(&p, 0.0).unwrap().probs(), &[1.0, 0.0]);
        let r = rho_signal(&p, 1.0).unwrap();
        assert!((r.probs()[1] - 0.5).abs() < 1e-15);
        let t = 0.6;
        let r = rho_signal(&p, t).unwrap();
        assert!((r.probs()[1] - t * t / (1.0 + t * t)).abs() < 1e-15);
    }

    #[test]
    fn rho_signal_agrees_with_state_reduction() {
        let pump = PumpWeights::coherent(4.0, default_cutoff(4.0)).unwrap();
        for tau in [0.0, 0.2, 0.9, 3.0] {
            let direct = rho_signal(&pump.probabilities(), tau).unwrap();
            let via_state = state(&pump, tau).unwrap().reduced_signal();
            assert!(direct.total_variation(&via_state) < 1e-14);
            let rho_a = rho_pump(&pump, tau).unwrap();
            let via = state(&pump, tau).unwrap().reduced_pump();
            let gap = (rho_a.elements() - via.elements()).norm();
            assert!(gap < 1e-13, "tau={tau} gap={gap:e}");
        }
    }

    #[test]
    fn rho_pump_examples() {
        let pump = PumpWeights::coherent(3.0, default_cutoff(3.0)).unwrap();
        let r0 = rho_pump(&pump, 0.0).unwrap();
        assert!((r0.purity() - 1.0).abs() < 1e-12);

        let fock = PumpWeights::fock(1);
        let r = rho_pump(&fock, 1.0).unwrap();
        assert!((r.elements()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((r.elements()[(1, 1)].re - 0.5).abs() < 1e-15);
        let s = von_neumann_entropy(&r).unwrap();
        assert!((s - std::f64::consts::LN_2).abs() < 1e-12);

        let late = rho_pump(&pump, 1e4).unwrap();
        assert!((late.elements()[(0, 0)].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn longtime_limit_examples() {
        let pump = PumpWeights::coherent(9.0, default_cutoff(9.0)).unwrap();
        let p = pump.probabilities();
        let lim = longtime_limit(&p);
        assert!((lim.probs()[9] - 0.131_755_640_009_327_5).abs() < 1e-12);
        assert_eq!(
            longtime_limit(&NumberDistribution::delta(4, 6)).probs()[4],
            1.0
        );
        let late = rho_signal(&p, 50.0).unwrap();
        assert!(late.total_variation(&lim) < 1e-3);
    }

    #[test]
    fn signal_mean_is_monotone() {
        let p = PumpWeights::coherent(6.0, default_cutoff(6.0))
            .unwrap()
            .probabilities();
        let mut prev = 0.0;
        for k in 0..=200 {
            let mean = rho_signal(&p, 0.05 * k as f64).unwrap().mean();
            assert!(mean >= prev - 1e-12);
            prev = mean;
        }
    }

    #[test]
    fn horizon_examples() {
        assert!((validity_horizon(K, 9) - 0.471_404_520_791_031_7).abs() < 1e-15);
        assert!((validity_horizon(K, 1) - 2f64.sqrt()).abs() < 1e-15);
        assert!(validity_horizon(K, 0).is_infinite());
        assert!(within_horizon(&PumpWeights::fock(9), 0.4));
        assert!(!within_horizon(&PumpWeights::fock(9), 0.5));
    }
    #[test]
    fn graded_pump_matrix_has_finite_entropy() {
        // this point once produced NaN eigenvalues in the QR path
        let pump = PumpWeights::coherent(9.0, default_cutoff(9.0)).unwrap();
        let rho = state(&pump, 3.9).unwrap().reduced_pump();
        let s = von_neumann_entropy(&rho).unwrap();
        assert!(s.is_finite() && s >= 0.0);
    }
}
