//! Fixed-amplitude (undepleted) pump: the signal/idler pair is a two-mode
//! squeezed vacuum with squeeze parameter `Aτ`.

use crate::error::{Error, Result};
use crate::fock::{NumberDistribution, TAIL_TOL};

/// Largest automatic cutoff we are willing to allocate.
const MAX_AUTO_CUTOFF: usize = 10_000_000;

fn check_input(amplitude: f64, tau: f64) -> Result<()> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::Domain(format!(
            "pump amplitude must be > 0, got {amplitude}"
        )));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("tau must be >= 0, got {tau}")));
    }
    Ok(())
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln coth x` for `x > 0`, stable for both small and large `x`.
pub fn ln_coth(x: f64) -> f64 {
    let e = (-2.0 * x).exp();
    if x < 1.0 {
        e.ln_1p() - (-(-2.0 * x).exp_m1()).ln()
    } else {
        e.ln_1p() - (-e).ln_1p()
    }
}

/// Signal (= idler) occupation `sinh²(Aτ)`.
pub fn occupation(amplitude: f64, tau: f64) -> f64 {
    (amplitude * tau).sinh().powi(2)
}

/// Signal distribution of the two-mode squeezed vacuum, with the
/// disentangling parameters `Γ = tanh(Aτ)` and `g = ln cosh(Aτ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SqueezedVacuum {
    pub distribution: NumberDistribution,
    pub gamma: f64,
    pub g: f64,
}

/// Smallest cutoff keeping both the discarded mass and its contribution to
/// the mean of `(1 − x) xⁿ` below 1e-12.
fn geometric_cutoff(x: f64) -> Result<usize> {
    if x <= 0.0 {
        return Ok(0);
    }
    let lx = x.ln();
    let mut n = ((TAIL_TOL.ln() / lx).ceil() as usize).max(1);
    loop {
        // Σ_{k>n} k (1−x) x^k = x^{n+1} (n + 1/(1−x))
        let m = (n + 1) as f64;
        let tail_mean = (m * lx).exp() * (n as f64 + 1.0 / (1.0 - x));
        if tail_mean < TAIL_TOL {
            return Ok(n);
        }
        if n > MAX_AUTO_CUTOFF {
            return Err(Error::Domain(format!(
                "squeezed distribution needs more than {MAX_AUTO_CUTOFF} levels"
            )));
        }
        n += n / 8 + 1;
    }
}

/// `P_n = sech²(Aτ) tanh²ⁿ(Aτ)`. With `cutoff = None` the cutoff is chosen
/// automatically; an explicit cutoff whose tail is ≥ 1e-12 is rejected.
pub fn squeezed_distribution(
    amplitude: f64,
    tau: f64,
    cutoff: Option<usize>,
) -> Result<SqueezedVacuum> {
    check_input(amplitude, tau)?;
    let r = amplitude * tau;
    let gamma = r.tanh();
    let g = ln_cosh(r);
    Ok(SqueezedVacuum {
        distribution: geometric_in_squeeze(r, cutoff)?,
        gamma,
        g,
    })
}

/// Geometric distribution `sech² r · tanh²ⁿ r` for squeeze parameter `r ≥ 0`.
pub(crate) fn geometric_in_squeeze(r: f64, cutoff: Option<usize>) -> Result<NumberDistribution> {
    let x = r.tanh().powi(2);
    let cutoff = match cutoff {
        Some(c) => {
            let tail = x.powf(c as f64 + 1.0);
            if tail >= TAIL_TOL {
                return Err(Error::CutoffTooSmall {
                    tail,
                    tol: TAIL_TOL,
                });
            }
            c
        }
        None => geometric_cutoff(x)?,
    };
    if r == 0.0 {
        return Ok(NumberDistribution::delta(0, cutoff));
    }
    let ln_head = -2.0 * ln_cosh(r);
    let ln_ratio = -2.0 * ln_coth(r);
    let probs = (0..=cutoff)
        .map(|n| (ln_head + n as f64 * ln_ratio).exp())
        .collect();
    NumberDistribution::new(probs)
}

/// Temperature `ω_b / (2 ln coth(Aτ))` that makes the signal thermal; zero
/// at `τ = 0`.
pub fn temperature(amplitude: f64, tau: f64, omega_b: f64) -> Result<f64> {
    check_input(amplitude, tau)?;
    if tau == 0.0 {
        return Ok(0.0);
    }
    Ok(omega_b / (2.0 * ln_coth(amplitude * tau)))
}
