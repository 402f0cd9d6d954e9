//! Exact sector-by-sector evolution.
//!
//! Inside sector `s` the amplitudes of `|s−n, n, n⟩` obey
//! `ċ_n = g_{n−1} c_{n−1} − g_n c_{n+1}` with `g_n = (n+1)√(s−n)`. The
//! generator is real and skew-symmetric, so with `c_n = iⁿ d_n` it becomes
//! `ḋ = −i T d` for the real symmetric tridiagonal `T` with off-diagonal
//! `g_n`. The default propagator diagonalizes `T` once per sector; an
//! adaptive Dormand–Prince integrator of the original real system is kept
//! as an independent cross-check.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{PumpWeights, TrimodalState};
use crate::C64;

/// Largest imaginary part tolerated in the eigen propagator output, whose
/// exact value is real.
pub const REALITY_TOL: f64 = 1e-12;

/// Step budget for the adaptive integrator, per sector.
const MAX_STEPS: usize = 5_000_000;

/// Tridiagonal sector generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorGenerator {
    couplings: Vec<f64>,
}

impl SectorGenerator {
    pub fn new(s: usize) -> Self {
        let couplings = (0..s)
            .map(|n| (n + 1) as f64 * ((s - n) as f64).sqrt())
            .collect();
        Self { couplings }
    }

    pub fn sector(&self) -> usize {
        self.couplings.len()
    }

    pub fn dim(&self) -> usize {
        self.couplings.len() + 1
    }

    /// `g_n = ⟨s−n−1, n+1, n+1| a b⁺c⁺ |s−n, n, n⟩`.
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// `out = G c`.
    pub fn apply(&self, c: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for n in 0..d {
            let mut v = 0.0;
            if n > 0 {
                v += self.couplings[n - 1] * c[n - 1];
            }
            if n + 1 < d {
                v -= self.couplings[n] * c[n + 1];
            }
            out[n] = v;
        }
    }

    /// The symmetric matrix `T` of the phase-rotated system.
    pub fn symmetric_form(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut t = DMatrix::zeros(d, d);
        for (n, &g) in self.couplings.iter().enumerate() {
            t[(n, n + 1)] = g;
            t[(n + 1, n)] = g;
        }
        t
    }
}

/// Spectral propagator for one sector started in `|s, 0, 0⟩`.
#[derive(Clone, Debug)]
pub struct EigenPropagator {
    eigenvalues: Vec<f64>,
    /// `V_nk V_0k`, row-major in `n`.
    weights: Vec<f64>,
    dim: usize,
}

impl EigenPropagator {
    pub fn new(s: usize) -> Result<Self> {
        let generator = SectorGenerator::new(s);
        let dim = generator.dim();
        if dim == 1 {
            return Ok(Self {
                eigenvalues: vec![0.0],
                weights: vec![1.0],
                dim,
            });
        }
        let eig = SymmetricEigen::new(generator.symmetric_form());
        let v = &eig.eigenvectors;
        let mut weights = Vec::with_capacity(dim * dim);
        for n in 0..dim {
            for k in 0..dim {
                weights.push(v[(n, k)] * v[(0, k)]);
            }
        }
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite spectrum in sector {s}"
            )));
        }
        // T has zero diagonal, so its spectrum is symmetric about 0. Restoring
        // the exact ±λ pairing stops the imaginary residue from growing with τ.
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
        for i in 0..dim / 2 {
            let (lo, hi) = (order[i], order[dim - 1 - i]);
            let m = 0.5 * (eigenvalues[hi] - eigenvalues[lo]);
            eigenvalues[lo] = -m;
            eigenvalues[hi] = m;
        }
        if dim % 2 == 1 {
            eigenvalues[order[dim / 2]] = 0.0;
        }
        Ok(Self {
            eigenvalues,
            weights,
            dim,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `c_n(τ) = iⁿ Σ_k V_nk e^{−iλ_k τ} V_0k`.
    pub fn amplitudes(&self, tau: f64) -> Vec<C64> {
        let phases: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|&l| C64::from_polar(1.0, -l * tau))
            .collect();
        let mut rot = C64::new(1.0, 0.0);
        (0..self.dim)
            .map(|n| {
                let row = &self.weights[n * self.dim..(n + 1) * self.dim];
                let d: C64 = row.iter().zip(&phases).map(|(w, p)| p * *w).sum();
                let c = rot * d;
                rot *= C64::i();
                c
            })
            .collect()
    }
}

/// Largest `|Im c_n|`.
pub fn reality_residue(amps: &[C64]) -> f64 {
    amps.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
}

/// Time propagation method.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Integrator {
    #[default]
    Eigen,
    /// Dormand–Prince 5(4) with mixed absolute/relative tolerance `tol`.
    Adaptive { tol: f64 },
}

// Dormand–Prince tableau; the generator has no explicit time dependence, so
// the stage nodes are not needed
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct DormandPrince<'a> {
    generator: &'a SectorGenerator,
    tol: f64,
    h: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    next: Vec<f64>,
    steps: usize,
}

impl<'a> DormandPrince<'a> {
    fn new(generator: &'a SectorGenerator, tol: f64) -> Self {
        let d = generator.dim();
        // the spectral radius of the generator bounds the useful step
        let radius = generator.couplings().iter().fold(0.0f64, |m, g| m.max(*g)) * 2.0;
        Self {
            generator,
            tol,
            h: 0.1 / radius.max(1.0),
            k: std::array::from_fn(|_| vec![0.0; d]),
            tmp: vec![0.0; d],
            next: vec![0.0; d],
            steps: 0,
        }
    }

    fn stage(&mut self, y: &[f64], h: f64, coeffs: &[(usize, f64)], out: usize) {
        for (i, (t, &yi)) in self.tmp.iter_mut().zip(y).enumerate() {
            *t = yi + coeffs.iter().map(|&(j, a)| h * a * self.k[j][i]).sum::<f64>();
        }
        let (tmp, k) = (&self.tmp, &mut self.k[out]);
        self.generator.apply(tmp, k);
    }

    /// Advance `y` from `t` to exactly `t_end`.
    #[allow(clippy::needless_range_loop)]
    fn advance(&mut self, y: &mut Vec<f64>, mut t: f64, t_end: f64) -> Result<()> {
        if t_end <= t {
            return Ok(());
        }
        self.generator.apply(y, &mut self.k[0]);
        while t < t_end {
            if self.steps >= MAX_STEPS {
                return Err(Error::Numerical(format!(
                    "adaptive integrator exceeded {MAX_STEPS} steps at tau={t}"
                )));
            }
            let last = t + self.h >= t_end;
            let h = if last { t_end - t } else { self.h };
            if h < 1e-14 * t_end.max(1.0) && !last {
                return Err(Error::Numerical(format!("step size underflow at tau={t}")));
            }
            self.stage(y, h, &[(0, A21)], 1);
            self.stage(y, h, &[(0, A31), (1, A32)], 2);
            self.stage(y, h, &[(0, A41), (1, A42), (2, A43)], 3);
            self.stage(y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4);
            self.stage(y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5);
            for i in 0..y.len() {
                self.next[i] = y[i]
                    + h * (B1 * self.k[0][i]
                        + B3 * self.k[2][i]
                        + B4 * self.k[3][i]
                        + B5 * self.k[4][i]
                        + B6 * self.k[5][i]);
            }
            let (next, k6) = (&self.next, &mut self.k[6]);
            self.generator.apply(next, k6);
            let mut err = 0.0f64;
            for i in 0..y.len() {
                let e = h
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                let scale = self.tol * (1.0 + y[i].abs().max(self.next[i].abs()));
                err = err.max((e / scale).abs());
            }
            self.steps += 1;
            if !err.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite error estimate at tau={t}"
                )));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t_end } else { t + h };
                std::mem::swap(y, &mut self.next);
                self.k.swap(0, 6);
                if !last {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }
}

fn check_grid(taus: &[f64]) -> Result<()> {
    if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("tau values must be finite and >= 0".into()));
    }
    if taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("tau grid must be nondecreasing".into()));
    }
    Ok(())
}

/// Amplitudes of sector `s` at each grid time, starting from `|s, 0, 0⟩`.
pub fn evolve_sector(s: usize, taus: &[f64], integrator: Integrator) -> Result<Vec<Vec<C64>>> {
    check_grid(taus)?;
    match integrator {
        Integrator::Eigen => {
            let prop = EigenPropagator::new(s)?;
            taus.iter()
                .map(|&t| {
                    let amps = prop.amplitudes(t);
                    let residue = reality_residue(&amps);
                    if residue > REALITY_TOL {
                        return Err(Error::Numerical(format!(
                            "sector {s} amplitudes have imaginary residue {residue:e} at tau={t}"
                        )));
                    }
                    Ok(amps)
                })
                .collect()
        }
        Integrator::Adaptive { tol } => {
            if !(tol > 0.0) {
                return Err(Error::Domain(format!(
                    "integrator tolerance must be > 0, got {tol}"
                )));
            }
            let generator = SectorGenerator::new(s);
            let mut y = vec![0.0; generator.dim()];
            y[0] = 1.0;
            let mut dp = DormandPrince::new(&generator, tol);
            let mut t = 0.0;
            let mut out = Vec::with_capacity(taus.len());
            for &target in taus {
                dp.advance(&mut y, t, target)?;
                t = target;
                out.push(y.iter().map(|&x| C64::new(x, 0.0)).collect());
            }
            Ok(out)
        }
    }
}

/// Full state at every grid time. Sectors are propagated in parallel; the
/// result is independent of the thread count.
pub fn evolve_state(
    pump: &PumpWeights,
    taus: &[f64],
    integrator: Integrator,
) -> Result<Vec<TrimodalState>> {
    check_grid(taus)?;
    let per_sector: Vec<Vec<Vec<C64>>> = (0..=pump.s_max())
        .into_par_iter()
        .map(|s| {
            if pump.amplitudes()[s] == C64::new(0.0, 0.0) {
                // unoccupied sector: keep it at the initial vector
                let mut v = vec![C64::new(0.0, 0.0); s + 1];
                v[0] = C64::new(1.0, 0.0);
                Ok(vec![v; taus.len()])
            } else {
                evolve_sector(s, taus, integrator)
            }
        })
        .collect::<Result<_>>()?;
    let weights = pump.amplitudes().to_vec();
    (0..taus.len())
        .map(|i| {
            let sectors = per_sector.iter().map(|traj| traj[i].clone()).collect();
            TrimodalState::new(weights.clone(), sectors)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::default_cutoff;
    use proptest::prelude::*;

    fn max_gap(a: &[C64], b: &[C64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn single_quantum_rotates() {
        for tau in [0.0, 0.3, 1.0, std::f64::consts::FRAC_PI_2, 7.0] {
            let c = &evolve_sector(1, &[tau], Integrator::Eigen).unwrap()[0];
            assert!((c[0].re - tau.cos()).abs() < 1e-14);
            assert!((c[1].re - tau.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_sector_is_frozen() {
        let c = evolve_sector(0, &[0.0, 5.0], Integrator::Eigen).unwrap();
        assert_eq!(c[1], vec![C64::new(1.0, 0.0)]);
        let c = evolve_sector(0, &[5.0], Integrator::Adaptive { tol: 1e-10 }).unwrap();
        assert_eq!(c[0], vec![C64::new(1.0, 0.0)]);
    }

    #[test]
    fn two_quanta_short_time() {
        let tau = 1e-3;
        let c = &evolve_sector(2, &[tau], Integrator::Eigen).unwrap()[0];
        let nb = c[1].norm_sqr() + 2.0 * c[2].norm_sqr();
        assert!((nb - 2.0 * tau * tau).abs() < 1e-9);
    }

    #[test]
    fn generator_couplings() {
        let g = SectorGenerator::new(3);
        let expect = [3f64.sqrt(), 2.0 * 2f64.sqrt(), 3.0];
        for (a, b) in g.couplings().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let t = g.symmetric_form();
        assert_eq!(t.transpose(), t);
    }

    #[test]
    fn eigen_and_adaptive_agree() {
        let taus: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
        for s in [2, 5, 12, 30] {
            let a = evolve_sector(s, &taus, Integrator::Eigen).unwrap();
            let b = evolve_sector(s, &taus, Integrator::Adaptive { tol: 1e-12 }).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!(max_gap(x, y) < 1e-8, "s={s} gap={:e}", max_gap(x, y));
            }
        }
    }

    #[test]
    fn reality_residue_is_tiny() {
        let taus: Vec<f64> = (0..=100).map(|k| 0.5 * k as f64).collect();
        for s in [3, 25, 60] {
            let prop = EigenPropagator::new(s).unwrap();
            for &t in &taus {
                assert!(reality_residue(&prop.amplitudes(t)) < REALITY_TOL);
            }
        }
    }

    #[test]
    fn state_norm_and_invariants() {
        let pump = PumpWeights::coherent(6.0, default_cutoff(6.0)).unwrap();
        let taus = [0.0, 0.5, 2.0, 10.0];
        for st in evolve_state(&pump, &taus, Integrator::Eigen).unwrap() {
            assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
            let occ = st.occupations();
            assert!((occ.pump + occ.signal - pump.mean()).abs() < 1e-10);
            assert!(st.interaction_expectation().norm() < 1e-10);
        }
    }

    #[test]
    fn adaptive_reports_bad_tolerance() {
        assert!(evolve_sector(3, &[1.0], Integrator::Adaptive { tol: 0.0 }).is_err());
        assert!(evolve_sector(3, &[1.0, 0.5], Integrator::Eigen).is_err());
    }

    proptest! {
        #[test]
        fn sector_norm_is_conserved(s in 0usize..40, tau in 0.0f64..20.0) {
            let c = &evolve_sector(s, &[tau], Integrator::Eigen).unwrap()[0];
            let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
