//! Entropies, fidelity to a thermal reference, information content,
//! effective subspace dimensions, mutual informations and pump squeezing.
//! All entropies are in nats.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, NumberDistribution, EPS_PSD, TAIL_TOL};
use crate::C64;

/// Largest thermal cutoff materialized as a vector.
const MAX_THERMAL_CUTOFF: usize = 10_000_000;

/// Population allowed in the top two Fock levels before `a²` is unreliable.
pub const SQUEEZING_MARGIN_TOL: f64 = 1e-10;

/// Anything with a probability spectrum.
pub trait Spectrum {
    fn spectrum(&self) -> Vec<f64>;
}

impl Spectrum for NumberDistribution {
    fn spectrum(&self) -> Vec<f64> {
        self.probs().to_vec()
    }
}

impl Spectrum for DensityMatrix {
    fn spectrum(&self) -> Vec<f64> {
        self.eigenvalues()
    }
}

fn entropy_of_spectrum(values: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in values {
        if l < -EPS_PSD {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:e}")));
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// `−Tr ρ ln ρ`, with `0 ln 0 = 0`.
pub fn von_neumann_entropy<S: Spectrum + ?Sized>(state: &S) -> Result<f64> {
    entropy_of_spectrum(&state.spectrum())
}

/// Entropy of a thermal oscillator with mean occupation `nbar`:
/// `(n̄+1) ln(n̄+1) − n̄ ln n̄`.
pub fn thermal_entropy(nbar: f64) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    nbar.ln_1p() + nbar * (1.0 / nbar).ln_1p()
}

/// The same entropy written in terms of `ω/T`.
pub fn thermal_entropy_at(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let y = omega / temperature;
    -(-(-y).exp_m1()).ln() + y / y.exp_m1()
}

/// Bose–Einstein occupation `1/(e^{ω/T} − 1)`.
pub fn bose_mean(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (omega / temperature).exp_m1()
}

/// Temperature whose Bose–Einstein mean is `nbar`; zero for an empty mode.
pub fn effective_temperature(nbar: f64, omega: f64) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    omega / (1.0 / nbar).ln_1p()
}

/// Geometric (thermal) distribution with a given mean, truncated at
/// `cutoff` and renormalized there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalReference {
    nbar: f64,
    cutoff: usize,
}

impl ThermalReference {
    pub fn new(nbar: f64, cutoff: usize) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(Error::Domain(format!(
                "thermal mean must be >= 0, got {nbar}"
            )));
        }
        let reference = Self { nbar, cutoff };
        let tail = reference.tail_mass();
        if tail >= TAIL_TOL {
            return Err(Error::CutoffTooSmall {
                tail,
                tol: TAIL_TOL,
            });
        }
        Ok(reference)
    }

    /// Smallest cutoff ≥ `min_cutoff` whose discarded tail is below 1e-12.
    pub fn covering(nbar: f64, min_cutoff: usize) -> Result<Self> {
        let cutoff = thermal_cutoff(nbar)?.max(min_cutoff);
        Self::new(nbar, cutoff)
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn ratio(&self) -> f64 {
        self.nbar / (1.0 + self.nbar)
    }

    /// Thermal mass above the cutoff, `x^{cutoff+1}`.
    pub fn tail_mass(&self) -> f64 {
        self.ratio().powf(self.cutoff as f64 + 1.0)
    }

    pub fn distribution(&self) -> NumberDistribution {
        let x = self.ratio();
        let kept = 1.0 - self.tail_mass();
        let probs = (0..=self.cutoff)
            .map(|n| (1.0 - x) * x.powi(n as i32) / kept)
            .collect();
        NumberDistribution::new(probs).expect("geometric weights are a distribution")
    }

    /// `Tr σ²` in closed form, `1/(2n̄+1)`.
    pub fn purity(&self) -> f64 {
        1.0 / (2.0 * self.nbar + 1.0)
    }
}

/// Cutoff at which a thermal state of mean `nbar` drops below 1e-12 tail mass.
pub fn thermal_cutoff(nbar: f64) -> Result<usize> {
    if nbar <= 0.0 {
        return Ok(0);
    }
    let x = nbar / (1.0 + nbar);
    let n = (TAIL_TOL.ln() / x.ln()).ceil() as usize;
    if n > MAX_THERMAL_CUTOFF {
        return Err(Error::Domain(format!(
            "thermal mean {nbar} needs a cutoff of {n} levels"
        )));
    }
    Ok(n)
}

/// Thermal distribution at temperature `T` for frequency `ω`,
/// `(1 − e^{−ω/T}) e^{−nω/T}`, without renormalization.
pub fn thermal_distribution_at(
    omega: f64,
    temperature: f64,
    cutoff: usize,
) -> Result<NumberDistribution> {
    if temperature <= 0.0 {
        return Ok(NumberDistribution::delta(0, cutoff));
    }
    let y = omega / temperature;
    let head = -(-y).exp_m1();
    let probs = (0..=cutoff)
        .map(|n| head * (-(n as f64) * y).exp())
        .collect();
    NumberDistribution::new(probs)
}

/// Bhattacharyya overlap `Σ √(p_n q_n)`, the fidelity of two commuting states.
pub fn fidelity_distributions(p: &NumberDistribution, q: &NumberDistribution) -> Result<f64> {
    if p.probs().len() != q.probs().len() {
        return Err(Error::DimensionMismatch {
            left: p.probs().len(),
            right: q.probs().len(),
        });
    }
    let f: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    Ok(f.min(1.0))
}

/// Fidelity of a diagonal state against a thermal reference on the same
/// cutoff.
pub fn fidelity(rho: &NumberDistribution, sigma: &ThermalReference) -> Result<f64> {
    fidelity_distributions(rho, &sigma.distribution())
}

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = m.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Uhlmann fidelity `Tr √(√ρ σ √ρ)` for general density matrices.
pub fn fidelity_matrices(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let root = hermitian_sqrt(rho.elements());
    let inner = &root * sigma.elements() * &root;
    // symmetrize against roundoff before the eigen solve
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let f: f64 = inner
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    Ok(f.min(1.0))
}

/// Fidelity of a signal distribution against the thermal state with the same
/// mean. The distribution is zero-padded to the thermal cutoff so the
/// reference is not distorted by truncation.
pub fn thermal_fidelity(rho: &NumberDistribution) -> Result<f64> {
    let sigma = ThermalReference::covering(rho.mean(), rho.cutoff())?;
    fidelity(&rho.padded(sigma.cutoff()), &sigma)
}

/// Entropy deficit relative to the thermal state of mean `nbar`.
pub fn information(rho: &NumberDistribution, nbar: f64) -> Result<f64> {
    Ok(thermal_entropy(nbar) - von_neumann_entropy(rho)?)
}

/// `1/Tr σ²` of the thermal state with mean `nbar`, which is `2n̄ + 1`.
pub fn effective_dimension(nbar: f64) -> f64 {
    2.0 * nbar + 1.0
}

/// Signal ⊗ idler dimension from the single-mode one (the modes are
/// symmetric, so it is the square).
pub fn pair_dimension(single_mode: f64) -> f64 {
    single_mode * single_mode
}

/// `1/Σ q_n²` computed directly from a distribution.
pub fn inverse_participation(dist: &NumberDistribution) -> f64 {
    1.0 / dist.probs().iter().map(|p| p * p).sum::<f64>()
}

/// Signal occupation at which `d_a = d_bc` when the pump holds the rest of
/// `pump_quanta`: the positive root of `2(N − x) + 1 = (2x + 1)²`.
pub fn crossing_signal_occupation(pump_quanta: f64) -> f64 {
    (-6.0 + (36.0 + 32.0 * pump_quanta).sqrt()) / 8.0
}

/// Pump vs signal-idler mutual information of a globally pure state, `2 S_a`.
pub fn mutual_information_a_bc(pump_entropy: f64) -> f64 {
    2.0 * pump_entropy
}

/// Signal–idler mutual information of a globally pure state, `2 S_b − S_a`.
pub fn mutual_information_b_c(signal_entropy: f64, pump_entropy: f64) -> f64 {
    2.0 * signal_entropy - pump_entropy
}

/// Quadrature squeezing `q = 4⟨ΔX²⟩ − 1`; negative means below vacuum noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Squeezing {
    /// Along `X₊ = (a + a⁺)/2`.
    pub q_plus: f64,
    /// Along `X₋ = (a − a⁺)/2i`.
    pub q_minus: f64,
}

pub fn squeezing(rho: &DensityMatrix) -> Result<Squeezing> {
    let d = rho.dim();
    let m = rho.elements();
    let top: f64 = (d.saturating_sub(2)..d).map(|i| m[(i, i)].re).sum();
    if d < 3 || top > SQUEEZING_MARGIN_TOL {
        return Err(Error::CutoffTooSmall {
            tail: if d < 3 { 1.0 } else { top },
            tol: SQUEEZING_MARGIN_TOL,
        });
    }
    let mut a = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    let mut n = 0.0;
    for p in 0..d {
        n += p as f64 * m[(p, p)].re;
        if p >= 1 {
            a += m[(p, p - 1)] * (p as f64).sqrt();
        }
        if p >= 2 {
            a2 += m[(p, p - 2)] * ((p * (p - 1)) as f64).sqrt();
        }
    }
    let var_plus = 0.25 * (2.0 * a2.re + 2.0 * n + 1.0) - a.re * a.re;
    let var_minus = 0.25 * (2.0 * n + 1.0 - 2.0 * a2.re) - a.im * a.im;
    Ok(Squeezing {
        q_plus: 4.0 * var_plus - 1.0,
        q_minus: 4.0 * var_minus - 1.0,
    })
}
