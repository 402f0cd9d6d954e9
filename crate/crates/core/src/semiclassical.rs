//! Classical pump with backreaction: the pump occupation follows a Jacobi
//! `dn` orbit between `N_a(0)` and the lower turning point `β₋`, and the
//! signal is squeezed by the accumulated amplitude `θ(τ) = ∫₀^τ √N_a`.

use crate::error::{Error, Result};
use crate::fock::NumberDistribution;
use crate::parametric::geometric_in_squeeze;
use crate::special::{integrate, jacobi_dn};

/// Absolute tolerance for the θ quadrature.
pub const THETA_TOL: f64 = 1e-10;

/// Turning points `(β₊, β₋)` of the pump orbit for initial occupation `na0`.
pub fn beta_pm(na0: f64) -> (f64, f64) {
    let root = (1.0 + 12.0 * na0 + 4.0 * na0 * na0).sqrt();
    let base = 1.0 + 2.0 * na0;
    (0.25 * (base + root), 0.25 * (base - root))
}

/// Parameters of the semiclassical pump orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemiclassicalParams {
    na0: f64,
    beta_plus: f64,
    beta_minus: f64,
    m: f64,
    scale: f64,
}

impl SemiclassicalParams {
    pub fn new(na0: f64) -> Result<Self> {
        if !(na0 > 0.0) || !na0.is_finite() {
            return Err(Error::Domain(format!(
                "initial pump occupation must be > 0, got {na0}"
            )));
        }
        let (beta_plus, beta_minus) = beta_pm(na0);
        let width = beta_plus - beta_minus;
        let m = (na0 - beta_minus) / width;
        if !(beta_minus < 0.0 && beta_plus > na0 && m > 0.0 && m < 1.0) {
            return Err(Error::Numerical(format!(
                "degenerate orbit for na0={na0}: beta=({beta_plus}, {beta_minus}), m={m}"
            )));
        }
        Ok(Self {
            na0,
            beta_plus,
            beta_minus,
            m,
            scale: width.sqrt(),
        })
    }

    pub fn na0(&self) -> f64 {
        self.na0
    }

    pub fn beta_plus(&self) -> f64 {
        self.beta_plus
    }

    pub fn beta_minus(&self) -> f64 {
        self.beta_minus
    }

    /// Elliptic parameter `m = (N_a(0) − β₋)/(β₊ − β₋)`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Argument scale `√(β₊ − β₋)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `N_a(τ) = β₊ + (N_a(0) − β₊) / dn²(√(β₊−β₋) τ | m)`.
    pub fn pump_occupation(&self, tau: f64) -> Result<f64> {
        let dn = jacobi_dn(self.scale * tau, self.m)?;
        Ok(self.beta_plus + (self.na0 - self.beta_plus) / (dn * dn))
    }

    /// `θ(τ) = ∫₀^τ √max(N_a, 0)`. The orbit dips below zero near depletion,
    /// where the semiclassical picture no longer holds; clamping keeps θ real.
    pub fn theta(&self, tau: f64) -> Result<f64> {
        self.theta_between(0.0, tau)
    }

    fn theta_between(&self, from: f64, to: f64) -> Result<f64> {
        let mut failure = None;
        let value = integrate(
            |t| match self.pump_occupation(t) {
                Ok(n) => n.max(0.0).sqrt(),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            from,
            to,
            THETA_TOL,
        );
        match failure {
            Some(e) => Err(e),
            None => value,
        }
    }

    /// θ on a nondecreasing grid starting at or after 0, accumulated interval
    /// by interval.
    pub fn theta_grid(&self, taus: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(taus.len());
        let (mut prev, mut acc) = (0.0, 0.0);
        for &t in taus {
            if t < prev {
                return Err(Error::Domain("tau grid must be nondecreasing".into()));
            }
            acc += self.theta_between(prev, t)?;
            out.push(acc);
            prev = t;
        }
        Ok(out)
    }

    /// `sinh²θ(τ)`.
    pub fn signal_occupation(&self, tau: f64) -> Result<f64> {
        Ok(self.theta(tau)?.sinh().powi(2))
    }

    /// Thermal signal distribution `sech²θ · tanh²ⁿθ`.
    pub fn signal_distribution(
        &self,
        tau: f64,
        cutoff: Option<usize>,
    ) -> Result<NumberDistribution> {
        geometric_in_squeeze(self.theta(tau)?, cutoff)
    }

    /// The squeeze argument `√N_a(τ)·τ`, which agrees with θ only when the
    /// pump is constant. Kept for comparison against θ.
    pub fn literal_squeeze_argument(&self, tau: f64) -> Result<f64> {
        Ok(self.pump_occupation(tau)?.max(0.0).sqrt() * tau)
    }
}
