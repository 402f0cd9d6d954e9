//! Brute-force reference for the trilinear interaction `ab⁺c⁺ − a⁺bc`.
//!
//! Everything here works on the full pump ⊗ signal ⊗ idler tensor with no use
//! of conserved quantities, and integrates with plain fixed-step RK4. It is
//! slow on purpose and only meant to cross-check the sector solvers on small
//! instances.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

/// Which mode to keep in a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Pump,
    Signal,
    Idler,
}

/// Dense three-mode state with per-mode Fock dimensions `dims = (da, db, dc)`.
/// Index layout is `(na * db + nb) * dc + nc`.
#[derive(Clone, Debug)]
pub struct DenseState {
    dims: (usize, usize, usize),
    amps: Vec<C64>,
}

impl DenseState {
    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        let (da, db, dc) = dims;
        assert!(da > 0 && db > 0 && dc > 0);
        Self {
            dims,
            amps: vec![C64::new(0.0, 0.0); da * db * dc],
        }
    }

    /// Builds a state from a closure over occupation numbers.
    pub fn from_fn(
        dims: (usize, usize, usize),
        mut f: impl FnMut(usize, usize, usize) -> C64,
    ) -> Self {
        let mut st = Self::zeros(dims);
        for na in 0..dims.0 {
            for nb in 0..dims.1 {
                for nc in 0..dims.2 {
                    let k = st.index(na, nb, nc);
                    st.amps[k] = f(na, nb, nc);
                }
            }
        }
        st
    }

    /// Product of a pump amplitude vector with signal and idler vacua.
    pub fn pump_product(dims: (usize, usize, usize), pump: &[C64]) -> Self {
        assert!(pump.len() <= dims.0, "pump vector longer than pump cutoff");
        Self::from_fn(dims, |na, nb, nc| {
            if nb == 0 && nc == 0 && na < pump.len() {
                pump[na]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn index(&self, na: usize, nb: usize, nc: usize) -> usize {
        (na * self.dims.1 + nb) * self.dims.2 + nc
    }

    pub fn amp(&self, na: usize, nb: usize, nc: usize) -> C64 {
        self.amps[self.index(na, nb, nc)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &DenseState) -> C64 {
        assert_eq!(self.dims, other.dims);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    pub fn expect_number(&self, mode: Mode) -> f64 {
        let mut acc = 0.0;
        for na in 0..self.dims.0 {
            for nb in 0..self.dims.1 {
                for nc in 0..self.dims.2 {
                    let n = match mode {
                        Mode::Pump => na,
                        Mode::Signal => nb,
                        Mode::Idler => nc,
                    };
                    acc += n as f64 * self.amp(na, nb, nc).norm_sqr();
                }
            }
        }
        acc
    }

    /// Population on basis states that the untruncated generator would couple
    /// out of the box. When this is zero the truncated dynamics are exact.
    pub fn leakage_population(&self) -> f64 {
        let (da, db, dc) = self.dims;
        let mut acc = 0.0;
        for na in 0..da {
            for nb in 0..db {
                for nc in 0..dc {
                    let raises_bc = na > 0 && (nb + 1 == db || nc + 1 == dc);
                    let raises_a = nb > 0 && nc > 0 && na + 1 == da;
                    if raises_bc || raises_a {
                        acc += self.amp(na, nb, nc).norm_sqr();
                    }
                }
            }
        }
        acc
    }

    /// `(a b⁺ c⁺ − a⁺ b c) |self⟩`, truncated to the box.
    pub fn apply_generator(&self) -> DenseState {
        let (da, db, dc) = self.dims;
        let mut out = DenseState::zeros(self.dims);
        for na in 0..da {
            for nb in 0..db {
                for nc in 0..dc {
                    let z = self.amp(na, nb, nc);
                    if z == C64::new(0.0, 0.0) {
                        continue;
                    }
                    // a b⁺ c⁺ |na, nb, nc⟩ = √na √(nb+1) √(nc+1) |na−1, nb+1, nc+1⟩
                    if na > 0 && nb + 1 < db && nc + 1 < dc {
                        let coef = ((na * (nb + 1) * (nc + 1)) as f64).sqrt();
                        let k = out.index(na - 1, nb + 1, nc + 1);
                        out.amps[k] += z * coef;
                    }
                    // a⁺ b c |na, nb, nc⟩ = √(na+1) √nb √nc |na+1, nb−1, nc−1⟩
                    if nb > 0 && nc > 0 && na + 1 < da {
                        let coef = (((na + 1) * nb * nc) as f64).sqrt();
                        let k = out.index(na + 1, nb - 1, nc - 1);
                        out.amps[k] -= z * coef;
                    }
                }
            }
        }
        out
    }

    fn axpy(&self, h: f64, k: &DenseState) -> DenseState {
        DenseState {
            dims: self.dims,
            amps: self
                .amps
                .iter()
                .zip(&k.amps)
                .map(|(x, y)| x + y * h)
                .collect(),
        }
    }

    fn rk4_step(&self, h: f64) -> DenseState {
        let k1 = self.apply_generator();
        let k2 = self.axpy(0.5 * h, &k1).apply_generator();
        let k3 = self.axpy(0.5 * h, &k2).apply_generator();
        let k4 = self.axpy(h, &k3).apply_generator();
        let amps = (0..self.amps.len())
            .map(|i| {
                self.amps[i]
                    + (k1.amps[i] + 2.0 * k2.amps[i] + 2.0 * k3.amps[i] + k4.amps[i]) * (h / 6.0)
            })
            .collect();
        DenseState {
            dims: self.dims,
            amps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// Leakage population exceeded the allowed bound; the comparison is void.
    CutoffExceeded { tau: f64, leakage: f64 },
}

impl std::fmt::Display for OracleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleError::CutoffExceeded { tau, leakage } => {
                write!(
                    f,
                    "oracle cutoff exceeded at tau={tau}: leakage {leakage:e}"
                )
            }
        }
    }
}

impl std::error::Error for OracleError {}

pub const LEAKAGE_LIMIT: f64 = 1e-10;

/// Fixed-step RK4 propagation of `dψ/dτ = (ab⁺c⁺ − a⁺bc)ψ`, sampled at every
/// point of `taus` (which must be nondecreasing and start at or after 0).
/// The internal step is the largest value ≤ `d_tau_internal` that lands on
/// each grid point exactly.
pub fn dense_evolve(
    initial: &DenseState,
    taus: &[f64],
    d_tau_internal: f64,
) -> Result<Vec<DenseState>, OracleError> {
    assert!(d_tau_internal > 0.0);
    let mut out = Vec::with_capacity(taus.len());
    let mut psi = initial.clone();
    let mut t = 0.0;
    for &target in taus {
        assert!(target >= t, "tau grid must be nondecreasing from 0");
        let span = target - t;
        let steps = (span / d_tau_internal).ceil() as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                psi = psi.rk4_step(h);
            }
        }
        t = target;
        let leakage = psi.leakage_population();
        if leakage > LEAKAGE_LIMIT {
            return Err(OracleError::CutoffExceeded { tau: t, leakage });
        }
        out.push(psi.clone());
    }
    Ok(out)
}

/// Reduced density matrix of a single mode, by direct triple loop.
pub fn dense_partial_trace(state: &DenseState, keep: Mode) -> DMatrix<C64> {
    let (da, db, dc) = state.dims;
    let d = match keep {
        Mode::Pump => da,
        Mode::Signal => db,
        Mode::Idler => dc,
    };
    let mut rho = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    match keep {
        Mode::Pump => {
            for p in 0..da {
                for q in 0..da {
                    let mut acc = C64::new(0.0, 0.0);
                    for nb in 0..db {
                        for nc in 0..dc {
                            acc += state.amp(p, nb, nc) * state.amp(q, nb, nc).conj();
                        }
                    }
                    rho[(p, q)] = acc;
                }
            }
        }
        Mode::Signal => {
            for p in 0..db {
                for q in 0..db {
                    let mut acc = C64::new(0.0, 0.0);
                    for na in 0..da {
                        for nc in 0..dc {
                            acc += state.amp(na, p, nc) * state.amp(na, q, nc).conj();
                        }
                    }
                    rho[(p, q)] = acc;
                }
            }
        }
        Mode::Idler => {
            for p in 0..dc {
                for q in 0..dc {
                    let mut acc = C64::new(0.0, 0.0);
                    for na in 0..da {
                        for nb in 0..db {
                            acc += state.amp(na, nb, p) * state.amp(na, nb, q).conj();
                        }
                    }
                    rho[(p, q)] = acc;
                }
            }
        }
    }
    rho
}

/// Reduced density matrix of signal ⊗ idler (pump traced out), indexed by
/// `nb * dc + nc`.
pub fn dense_trace_out_pump(state: &DenseState) -> DMatrix<C64> {
    let (da, db, dc) = state.dims;
    let d = db * dc;
    let mut rho = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    for i in 0..d {
        for j in 0..d {
            let (bi, ci) = (i / dc, i % dc);
            let (bj, cj) = (j / dc, j % dc);
            let mut acc = C64::new(0.0, 0.0);
            for na in 0..da {
                acc += state.amp(na, bi, ci) * state.amp(na, bj, cj).conj();
            }
            rho[(i, j)] = acc;
        }
    }
    rho
}

/// −Tr ρ ln ρ via a Hermitian eigendecomposition.
pub fn entropy(rho: &DMatrix<C64>) -> f64 {
    let eig = rho.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Mean-field pump occupation from its second-order equation of motion with
/// vacuum signal and idler, `N'' = 2[3N² − N(4N₀ + 1) + N₀²]`, `N(0) = N₀`,
/// `N'(0) = 0`. Fixed-step RK4 on `(N, N')`, sampled at every `taus` point.
pub fn classical_pump_orbit(n0: f64, taus: &[f64], d_tau_internal: f64) -> Vec<f64> {
    assert!(d_tau_internal > 0.0);
    let accel = |n: f64| 2.0 * (3.0 * n * n - n * (4.0 * n0 + 1.0) + n0 * n0);
    let mut y = (n0, 0.0);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(taus.len());
    for &target in taus {
        assert!(target >= t, "tau grid must be nondecreasing from 0");
        let span = target - t;
        let steps = (span / d_tau_internal).ceil() as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                let (n, v) = y;
                let (k1n, k1v) = (v, accel(n));
                let (k2n, k2v) = (v + 0.5 * h * k1v, accel(n + 0.5 * h * k1n));
                let (k3n, k3v) = (v + 0.5 * h * k2v, accel(n + 0.5 * h * k2n));
                let (k4n, k4v) = (v + h * k3v, accel(n + h * k3n));
                y = (
                    n + h / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n),
                    v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
                );
            }
        }
        t = target;
        out.push(y.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn single_quantum_swaps_into_pair() {
        let psi0 = DenseState::pump_product((3, 3, 3), &[c(0.0), c(1.0)]);
        let out = dense_evolve(&psi0, &[FRAC_PI_2], 1e-3).unwrap();
        let nb = out[0].expect_number(Mode::Signal);
        assert!((nb - 1.0).abs() < 1e-6, "nb = {nb}");
        assert!((out[0].norm_sqr() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn vacuum_is_frozen() {
        let psi0 = DenseState::pump_product((2, 2, 2), &[c(1.0)]);
        let out = dense_evolve(&psi0, &[0.5, 3.0], 1e-2).unwrap();
        for st in out {
            assert!((st.amp(0, 0, 0) - c(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn product_state_traces_to_pure_state() {
        let s = 1.0 / 2f64.sqrt();
        let psi = DenseState::pump_product((3, 2, 2), &[c(s), c(0.0), c(s)]);
        let rho = dense_partial_trace(&psi, Mode::Pump);
        let purity = (&rho * &rho).trace().re;
        assert!((purity - 1.0).abs() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_mode_squeezed_pair_traces_to_geometric() {
        // sech r Σ tanhⁿ r |n, n⟩ with the pump frozen in |0⟩
        let r: f64 = 0.7;
        let d = 40;
        let psi = DenseState::from_fn((1, d, d), |_, nb, nc| {
            if nb == nc {
                c(r.tanh().powi(nb as i32) / r.cosh())
            } else {
                c(0.0)
            }
        });
        let rho = dense_partial_trace(&psi, Mode::Signal);
        let x = r.tanh().powi(2);
        for n in 0..10 {
            let want = (1.0 - x) * x.powi(n as i32);
            assert!((rho[(n, n)].re - want).abs() < 1e-12);
            if n > 0 {
                assert!(rho[(n, n - 1)].norm() < 1e-15);
            }
        }
        let idler = dense_partial_trace(&psi, Mode::Idler);
        assert!((idler.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn leakage_detects_boundary() {
        // |1,1,1⟩ in a box of 2 can be raised by a⁺bc to |2,0,0⟩: outside
        let psi = DenseState::from_fn((2, 2, 2), |a, b, cc| {
            if (a, b, cc) == (1, 1, 1) {
                c(1.0)
            } else {
                c(0.0)
            }
        });
        assert!((psi.leakage_population() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classical_orbit_starts_at_rest() {
        // N''(0) = −2N₀, so N ≈ N₀ − N₀τ²
        let n = classical_pump_orbit(9.0, &[0.0, 1e-3], 1e-5);
        assert_eq!(n[0], 9.0);
        assert!((n[1] - (9.0 - 9.0e-6)).abs() < 1e-9);
    }
}
