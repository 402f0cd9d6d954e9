//! Sector representation of pump ⊗ signal ⊗ idler pure states.
//!
//! With signal and idler starting in vacuum the dynamics never leave the span
//! of `|s−n⟩_a |n⟩_b |n⟩_c`, so a state is stored as a pump weight `a_s` per
//! sector and a length-`s+1` amplitude vector `c⁽ˢ⁾` inside each sector. The
//! amplitude of `|s−n, n, n⟩` is `a_s c⁽ˢ⁾_n`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::special::ln_factorial;
use crate::C64;

/// Allowed deviation of total probability from one.
pub const NORM_TOL: f64 = 1e-9;
/// Eigenvalues above `-EPS_PSD` count as nonnegative.
pub const EPS_PSD: f64 = 1e-10;
/// Largest probability mass a Fock truncation may discard.
pub const TAIL_TOL: f64 = 1e-12;

/// Diagonal single-mode state: occupation probabilities `probs[n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberDistribution {
    probs: Vec<f64>,
}

impl NumberDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidState("empty number distribution".into()));
        }
        if let Some((n, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidState(format!("probability {p} at n={n}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Point mass on `|n⟩` in a space truncated at `cutoff`.
    pub fn delta(n: usize, cutoff: usize) -> Self {
        assert!(n <= cutoff);
        let mut probs = vec![0.0; cutoff + 1];
        probs[n] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Highest occupation number represented.
    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - mean).powi(2) * p)
            .sum()
    }

    /// Same distribution with zeros appended up to `cutoff`.
    pub fn padded(&self, cutoff: usize) -> Self {
        let mut probs = self.probs.clone();
        if cutoff + 1 > probs.len() {
            probs.resize(cutoff + 1, 0.0);
        }
        Self { probs }
    }

    /// Total-variation distance, treating missing entries as zero.
    pub fn total_variation(&self, other: &NumberDistribution) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        0.5 * (0..len)
            .map(|i| (get(&self.probs, i) - get(&other.probs, i)).abs())
            .sum::<f64>()
    }
}

/// Hermitian, unit-trace single-mode density matrix in the Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(elements: DMatrix<C64>) -> Result<Self> {
        if !elements.is_square() || elements.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square and nonempty, got {}x{}",
                elements.nrows(),
                elements.ncols()
            )));
        }
        let d = elements.nrows();
        let scale = elements.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..d {
            for j in i..d {
                let gap = (elements[(i, j)] - elements[(j, i)].conj()).norm();
                if gap > 1e-12 * scale {
                    return Err(Error::InvalidState(format!(
                        "not Hermitian at ({i}, {j}): mismatch {gap:e}"
                    )));
                }
            }
        }
        let trace = elements.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        Ok(Self { elements })
    }

    pub fn from_distribution(dist: &NumberDistribution) -> Self {
        let d = dist.probs().len();
        let diag =
            nalgebra::DVector::from_iterator(d, dist.probs().iter().map(|&p| C64::new(p, 0.0)));
        Self {
            elements: DMatrix::from_diagonal(&diag),
        }
    }

    pub fn elements(&self) -> &DMatrix<C64> {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.elements.trace().re
    }

    /// `Tr ρ²`, computed as the Frobenius norm squared.
    pub fn purity(&self) -> f64 {
        self.elements.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.elements[(i, i)].re).collect()
    }

    pub fn is_real(&self) -> bool {
        self.elements.iter().all(|z| z.im == 0.0)
    }

    /// Embeds the matrix in a larger Fock space with empty extra levels.
    pub fn padded(&self, dim: usize) -> Self {
        let d = self.dim();
        if dim <= d {
            return self.clone();
        }
        let mut elements = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        elements.view_mut((0, 0), (d, d)).copy_from(&self.elements);
        Self { elements }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = if self.is_real() {
            let real = self.elements.map(|z| z.re);
            let vals: Vec<f64> = real
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
            if vals.iter().all(|v| v.is_finite()) {
                vals
            } else {
                jacobi_eigenvalues(real)
            }
        } else {
            let vals: Vec<f64> = self
                .elements
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
            if vals.iter().all(|v| v.is_finite()) {
                vals
            } else {
                // [[Re, −Im], [Im, Re]] has each eigenvalue twice
                let d = self.dim();
                let mut emb = DMatrix::zeros(2 * d, 2 * d);
                for i in 0..d {
                    for j in 0..d {
                        let z = self.elements[(i, j)];
                        emb[(i, j)] = z.re;
                        emb[(i + d, j + d)] = z.re;
                        emb[(i, j + d)] = -z.im;
                        emb[(i + d, j)] = z.im;
                    }
                }
                let mut all = jacobi_eigenvalues(emb);
                all.sort_by(|a, b| a.total_cmp(b));
                all.into_iter().step_by(2).collect()
            }
        };
        vals.sort_by(|a, b| a.total_cmp(b));
        vals
    }
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix. Used when the QR
/// path of `nalgebra` breaks down, which happens on some strongly graded
/// density matrices; Jacobi keeps small eigenvalues to high relative accuracy.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off == 0.0 {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                // skip rotations below roundoff of both diagonal entries
                if apq.abs() <= 1e-18 * app.abs() && apq.abs() <= 1e-18 * aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

/// Initial pump amplitudes `a_s` over sectors `0..=s_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct PumpWeights {
    amplitudes: Vec<C64>,
    truncated_mass: f64,
}

/// Default sector cutoff for a coherent pump of mean `nbar`.
pub fn default_cutoff(nbar: f64) -> usize {
    (nbar + 10.0 * nbar.sqrt() + 10.0).ceil() as usize
}

fn ln_poisson(nbar: f64, s: usize) -> f64 {
    if nbar == 0.0 {
        return if s == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -nbar + s as f64 * nbar.ln() - ln_factorial(s as u64)
}

impl PumpWeights {
    /// Coherent pump `α = √nbar` (real, positive) truncated at `s_max`.
    pub fn coherent(nbar: f64, s_max: usize) -> Result<Self> {
        Self::coherent_with_tolerance(nbar, s_max, TAIL_TOL)
    }

    /// As [`PumpWeights::coherent`] but with an explicit bound on the
    /// discarded Poisson tail.
    pub fn coherent_with_tolerance(nbar: f64, s_max: usize, tail_tol: f64) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(Error::Domain(format!(
                "coherent mean must be >= 0, got {nbar}"
            )));
        }
        let probs: Vec<f64> = (0..=s_max).map(|s| ln_poisson(nbar, s).exp()).collect();

        // sum the tail directly rather than 1 − Σ kept
        let mut tail = 0.0;
        let mut s = s_max + 1;
        loop {
            let p = ln_poisson(nbar, s).exp();
            tail += p;
            if p <= 1e-30 * tail.max(1e-300) && s as f64 > nbar || p == 0.0 {
                break;
            }
            s += 1;
        }
        if tail >= tail_tol {
            return Err(Error::CutoffTooSmall {
                tail,
                tol: tail_tol,
            });
        }

        let kept: f64 = probs.iter().sum();
        let amplitudes = probs
            .iter()
            .map(|p| C64::new((p / kept).sqrt(), 0.0))
            .collect();
        Ok(Self {
            amplitudes,
            truncated_mass: tail,
        })
    }

    /// Pump in the Fock state `|m⟩`.
    pub fn fock(m: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); m + 1];
        amplitudes[m] = C64::new(1.0, 0.0);
        Self {
            amplitudes,
            truncated_mass: 0.0,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let total: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if amplitudes.is_empty() || (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "pump weights have norm² {total}, not 1"
            )));
        }
        Ok(Self {
            amplitudes,
            truncated_mass: 0.0,
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn s_max(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// Probability discarded by the truncation before renormalizing.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// `P_s = |a_s|²`.
    pub fn probabilities(&self) -> NumberDistribution {
        NumberDistribution {
            probs: self.amplitudes.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.probabilities().mean()
    }
}

/// Expectation values of the three number operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeOccupations {
    pub pump: f64,
    pub signal: f64,
    pub idler: f64,
}

/// Pure pump ⊗ signal ⊗ idler state in the sector basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TrimodalState {
    weights: Vec<C64>,
    sectors: Vec<Vec<C64>>,
}

impl TrimodalState {
    pub fn new(weights: Vec<C64>, sectors: Vec<Vec<C64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != sectors.len() {
            return Err(Error::InvalidState(format!(
                "{} pump weights for {} sectors",
                weights.len(),
                sectors.len()
            )));
        }
        if let Some((s, v)) = sectors.iter().enumerate().find(|(s, v)| v.len() != s + 1) {
            return Err(Error::InvalidState(format!(
                "sector {s} has {} amplitudes, expected {}",
                v.len(),
                s + 1
            )));
        }
        let st = Self { weights, sectors };
        let norm = st.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm² {norm} is not 1")));
        }
        Ok(st)
    }

    /// Pump weights with signal and idler in vacuum: `c⁽ˢ⁾ = δ_{n,0}`.
    pub fn initial(pump: &PumpWeights) -> Self {
        let sectors = (0..=pump.s_max())
            .map(|s| {
                let mut v = vec![C64::new(0.0, 0.0); s + 1];
                v[0] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        Self {
            weights: pump.amplitudes().to_vec(),
            sectors,
        }
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn sectors(&self) -> &[Vec<C64>] {
        &self.sectors
    }

    pub fn s_max(&self) -> usize {
        self.weights.len() - 1
    }

    /// Amplitude of `|s−n, n, n⟩`.
    pub fn amplitude(&self, s: usize, n: usize) -> C64 {
        self.weights[s] * self.sectors[s][n]
    }

    fn sector_probability(&self, s: usize) -> f64 {
        self.weights[s].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        (0..self.weights.len())
            .map(|s| {
                self.sector_probability(s)
                    * self.sectors[s].iter().map(|c| c.norm_sqr()).sum::<f64>()
            })
            .sum()
    }

    /// Norm of each sector's amplitude vector (1 for unitary evolution).
    pub fn sector_norms(&self) -> Vec<f64> {
        self.sectors
            .iter()
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// `⟨self|other⟩` over the shared sectors.
    pub fn overlap(&self, other: &TrimodalState) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..=self.s_max().min(other.s_max()) {
            for n in 0..=s {
                acc += self.amplitude(s, n).conj() * other.amplitude(s, n);
            }
        }
        acc
    }

    /// Signal-mode distribution. The signal reduction is diagonal because
    /// tracing pump and idler forces equal signal and sector indices.
    pub fn reduced_signal(&self) -> NumberDistribution {
        let mut probs = vec![0.0; self.s_max() + 1];
        for (s, sector) in self.sectors.iter().enumerate() {
            let w = self.sector_probability(s);
            for (n, c) in sector.iter().enumerate() {
                probs[n] += w * c.norm_sqr();
            }
        }
        NumberDistribution { probs }
    }

    /// Idler distribution; identical to the signal's since `n_b = n_c` in
    /// every basis state.
    pub fn reduced_idler(&self) -> NumberDistribution {
        self.reduced_signal()
    }

    /// Pump reduced density matrix. Off-diagonal `⟨s−i|ρ_a|r−i⟩` survives
    /// whenever the idler/signal index `i` is shared by sectors `s` and `r`.
    pub fn reduced_pump(&self) -> DensityMatrix {
        let d = self.s_max() + 1;
        let mut rho = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for s in 0..d {
            for r in 0..=s {
                let ws = self.weights[s] * self.weights[r].conj();
                if ws == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..=r {
                    let z = ws * self.sectors[s][i] * self.sectors[r][i].conj();
                    rho[(s - i, r - i)] += z;
                    if s != r {
                        rho[(r - i, s - i)] += z.conj();
                    }
                }
            }
        }
        DensityMatrix { elements: rho }
    }

    pub fn occupations(&self) -> ModeOccupations {
        let (mut pump, mut signal, mut idler) = (0.0, 0.0, 0.0);
        for (s, sector) in self.sectors.iter().enumerate() {
            let w = self.sector_probability(s);
            for (n, c) in sector.iter().enumerate() {
                let p = w * c.norm_sqr();
                pump += (s - n) as f64 * p;
                signal += n as f64 * p;
                idler += n as f64 * p;
            }
        }
        ModeOccupations {
            pump,
            signal,
            idler,
        }
    }

    /// `⟨N_a²⟩ − ⟨N_a⟩²`.
    pub fn pump_number_variance(&self) -> f64 {
        let (mut m1, mut m2) = (0.0, 0.0);
        for (s, sector) in self.sectors.iter().enumerate() {
            let w = self.sector_probability(s);
            for (n, c) in sector.iter().enumerate() {
                let p = w * c.norm_sqr();
                let na = (s - n) as f64;
                m1 += na * p;
                m2 += na * na * p;
            }
        }
        m2 - m1 * m1
    }

    /// `⟨aK₊ − a⁺K₋⟩` with `K₊ = b⁺c⁺`. Proportional to `⟨H_int⟩`, which is a
    /// constant of motion equal to zero for vacuum signal and idler.
    pub fn interaction_expectation(&self) -> C64 {
        let mut raise = C64::new(0.0, 0.0);
        for (s, sector) in self.sectors.iter().enumerate() {
            let w = self.sector_probability(s);
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..s {
                // ⟨s−n−1, n+1, n+1| aK₊ |s−n, n, n⟩ = (n+1)√(s−n)
                let g = (n + 1) as f64 * ((s - n) as f64).sqrt();
                acc += sector[n + 1].conj() * sector[n] * g;
            }
            raise += acc * w;
        }
        raise - raise.conj()
    }
}
