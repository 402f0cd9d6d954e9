//! Special functions needed by the closed-form solvers.
//!
//! Only the cases the solvers actually hit are covered: real Jacobi functions
//! with parameter `m ∈ [0, 1]`, upper incomplete gamma of integer order, and
//! `ln n!`. Everything that can overflow is evaluated in log space.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Size of the exactly-summed `ln n!` table.
const LN_FACTORIAL_TABLE: usize = 10_000;

/// Switch-over tolerance for the Gauss transformation; the next AGM step after
/// this has relative error ~1e-16.
const AGM_CA: f64 = 1e-8;
const AGM_MAX_ITER: usize = 40;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // compensated (Neumaier) running sum of ln k
        let mut table = Vec::with_capacity(LN_FACTORIAL_TABLE + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        table.push(0.0);
        for k in 1..=LN_FACTORIAL_TABLE {
            let term = (k as f64).ln();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            table.push(sum + comp);
        }
        table
    })
}

/// `ln(n!)`: exact table up to 10⁴, Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) <= LN_FACTORIAL_TABLE {
        return ln_factorial_table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln Σ exp(xᵢ)` without overflow. Empty input gives `-∞`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln Γ(a, x)` for integer `a ≥ 1` and `x > 0`, using
/// `Γ(a, x) = (a−1)! e^{−x} Σ_{j<a} xʲ/j!`.
pub fn log_upper_gamma(a: u32, x: f64) -> Result<f64> {
    if a == 0 {
        return Err(Error::Domain("incomplete gamma order must be >= 1".into()));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "incomplete gamma argument must be positive and finite, got {x}"
        )));
    }
    let lx = x.ln();
    let series = log_sum_exp((0..a as u64).map(|j| j as f64 * lx - ln_factorial(j)));
    Ok(ln_factorial(a as u64 - 1) - x + series)
}

fn check_parameter(m: f64) -> Result<()> {
    if (0.0..=1.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "elliptic parameter m must lie in [0, 1], got {m}"
        )))
    }
}

/// Complete elliptic integral `K(m)` by the arithmetic-geometric mean.
pub fn elliptic_k(m: f64) -> Result<f64> {
    check_parameter(m)?;
    if m == 1.0 {
        return Ok(f64::INFINITY);
    }
    let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Ok(PI / (a + b))
}

/// Jacobi `(sn, cn, dn)(u | m)` by the descending Gauss (Landen)
/// transformation, with `m` the parameter (modulus squared).
pub fn jacobi_sncndn(u: f64, m: f64) -> Result<(f64, f64, f64)> {
    check_parameter(m)?;
    if !u.is_finite() {
        return Err(Error::Domain(format!("non-finite elliptic argument {u}")));
    }
    let mut emc = 1.0 - m;
    if emc == 0.0 {
        let sech = 1.0 / u.cosh();
        return Ok((u.tanh(), sech, sech));
    }

    let mut em = [0.0f64; AGM_MAX_ITER];
    let mut en = [0.0f64; AGM_MAX_ITER];
    let mut a = 1.0f64;
    let mut c = 1.0f64;
    let mut levels = 0;
    for i in 0..AGM_MAX_ITER {
        levels = i + 1;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= AGM_CA * a {
            break;
        }
        emc *= a;
        a = c;
    }

    let v = u * c;
    let mut sn = v.sin();
    let mut cn = v.cos();
    let mut dn = 1.0;
    if sn != 0.0 {
        let mut a = cn / sn;
        c *= a;
        for ii in (0..levels).rev() {
            let b = em[ii];
            a *= c;
            c *= dn;
            dn = (en[ii] + a) / (b + a);
            a = c / b;
        }
        let a = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { a } else { -a };
        cn = c * sn;
    }
    Ok((sn, cn, dn))
}

/// Jacobi `dn(u | m)`. Lies in `[√(1−m), 1]` and has period `2K(m)`.
pub fn jacobi_dn(u: f64, m: f64) -> Result<f64> {
    jacobi_sncndn(u, m).map(|(_, _, dn)| dn)
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const QUAD_MAX_INTERVALS: usize = 4000;

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &w)) in GK_NODES.iter().zip(&GK_WEIGHTS).enumerate() {
        let pts: &[f64] = if x == 0.0 { &[0.0] } else { &[-x, x] };
        for &p in pts {
            let y = f(centre + half * p);
            if !y.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite integrand {y} at {}",
                    centre + half * p
                )));
            }
            kronrod += w * y;
            if i % 2 == 1 {
                gauss += GAUSS_WEIGHTS[i / 2] * y;
            }
        }
    }
    Ok((kronrod * half, (kronrod - gauss).abs() * half))
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` with absolute error
/// target `tol`. The interval with the largest error estimate is bisected
/// until the summed estimate meets the target.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b)?;
    // (lo, hi, value, error)
    let mut parts = vec![(a, b, v, e)];
    for _ in 0..QUAD_MAX_INTERVALS {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol {
            return Ok(parts.iter().map(|p| p.2).sum());
        }
        let (i, &(lo, hi, _, _)) = parts
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.1 - p.0).abs() > 64.0 * f64::EPSILON * p.0.abs().max(p.1.abs()))
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .ok_or_else(|| stalled(tol, total_err))?;
        let mid = 0.5 * (lo + hi);
        let (lv, le) = gk15(&mut f, lo, mid)?;
        let (rv, re) = gk15(&mut f, mid, hi)?;
        parts[i] = (lo, mid, lv, le);
        parts.push((mid, hi, rv, re));
    }
    let total_err: f64 = parts.iter().map(|p| p.3).sum();
    Err(stalled(tol, total_err))
}

fn stalled(tol: f64, err: f64) -> Error {
    Error::Numerical(format!(
        "quadrature did not reach tolerance {tol:e} (error estimate {err:e})"
    ))
}

/// `∫₀^τ f` with absolute error ≤ 1e-10.
pub fn quadrature(f: impl FnMut(f64) -> f64, tau: f64) -> Result<f64> {
    integrate(f, 0.0, tau, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent (sn, cn, dn) from RK4 on the defining ODE system.
    fn sncndn_ode(u: f64, m: f64) -> (f64, f64, f64) {
        let steps = 20_000;
        let h = u / steps as f64;
        let rhs = |y: [f64; 3]| [y[1] * y[2], -y[0] * y[2], -m * y[0] * y[1]];
        let mut y = [0.0, 1.0, 1.0];
        for _ in 0..steps {
            let add = |y: [f64; 3], k: [f64; 3], s: f64| {
                [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]]
            };
            let k1 = rhs(y);
            let k2 = rhs(add(y, k1, 0.5 * h));
            let k3 = rhs(add(y, k2, 0.5 * h));
            let k4 = rhs(add(y, k3, h));
            for i in 0..3 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (y[0], y[1], y[2])
    }

    #[test]
    fn dn_trivial_values() {
        for m in [0.0, 0.3, 0.9, 1.0] {
            assert_eq!(jacobi_dn(0.0, m).unwrap(), 1.0);
        }
        for u in [-3.0, 0.5, 17.0] {
            assert!((jacobi_dn(u, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
        let sech1 = 1.0 / 1f64.cosh();
        assert!((jacobi_dn(1.0, 1.0).unwrap() - sech1).abs() < 1e-15);
        assert!((sech1 - 0.648054).abs() < 1e-6);
    }

    #[test]
    fn dn_identity_against_ode_sn() {
        for &m in &[0.1, 0.5, 0.908_483, 0.99] {
            for k in 0..=12 {
                let u = 0.25 * k as f64;
                let (sn_ode, _, _) = sncndn_ode(u, m);
                let dn = jacobi_dn(u, m).unwrap();
                let residual = dn * dn + m * sn_ode * sn_ode - 1.0;
                assert!(residual.abs() < 1e-10, "m={m} u={u} residual={residual:e}");
            }
        }
    }

    #[test]
    fn sncndn_matches_ode_oracle() {
        let (sn, cn, dn) = jacobi_sncndn(2.3, 0.7).unwrap();
        let (so, co, d_o) = sncndn_ode(2.3, 0.7);
        assert!((sn - so).abs() < 1e-11);
        assert!((cn - co).abs() < 1e-11);
        assert!((dn - d_o).abs() < 1e-11);
    }

    #[test]
    fn dn_has_period_two_k() {
        let m = 0.908_483;
        let k = elliptic_k(m).unwrap();
        for u in [0.1, 0.77, 1.9] {
            let a = jacobi_dn(u, m).unwrap();
            let b = jacobi_dn(u + 2.0 * k, m).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        // minimum √(1−m) at u = K
        assert!((jacobi_dn(k, m).unwrap() - (1.0 - m).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dn_rejects_bad_parameter() {
        assert!(matches!(jacobi_dn(0.3, 1.2), Err(Error::Domain(_))));
        assert!(matches!(jacobi_dn(0.3, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn ln_factorial_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(9) - 362_880f64.ln()).abs() < 1e-12 * 12.8);
        assert!((ln_factorial(9) - 12.80183).abs() < 1e-5);
        // table/Stirling seam
        let below = ln_factorial(10_000);
        let above = ln_factorial(10_001);
        let rel = (above - below - 10_001f64.ln()).abs() / above;
        assert!(rel < 1e-13, "rel {rel:e}");
    }

    #[test]
    fn ln_factorial_exact_for_small_integers() {
        let mut fact = 1.0f64;
        for n in 1..=25u64 {
            fact *= n as f64;
            let rel = (ln_factorial(n) - fact.ln()).abs() / fact.ln().max(1.0);
            assert!(rel < 1e-14, "n={n}");
        }
    }

    #[test]
    fn upper_gamma_closed_forms() {
        for x in [0.1, 1.0, 7.5] {
            assert!((log_upper_gamma(1, x).unwrap() + x).abs() < 1e-14);
        }
        let g21 = log_upper_gamma(2, 1.0).unwrap().exp();
        assert!((g21 - 2.0 / std::f64::consts::E).abs() < 1e-14);
        assert!((g21 - 0.735759).abs() < 1e-6);
        // Γ(a, 0⁺) → (a − 1)!
        let near_zero = log_upper_gamma(6, 1e-14).unwrap();
        assert!((near_zero - 120f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn upper_gamma_rejects_nonpositive_argument() {
        assert!(log_upper_gamma(3, 0.0).is_err());
        assert!(log_upper_gamma(3, -1.0).is_err());
        assert!(log_upper_gamma(0, 1.0).is_err());
    }

    #[test]
    fn upper_gamma_recurrence() {
        for a in 1..30u32 {
            for &x in &[0.01, 0.3, 1.0, 4.0, 25.0, 300.0] {
                let lhs = log_upper_gamma(a + 1, x).unwrap();
                // Γ(a+1,x) = a·Γ(a,x) + xᵃ e^{−x}
                let rhs = log_sum_exp([
                    (a as f64).ln() + log_upper_gamma(a, x).unwrap(),
                    a as f64 * x.ln() - x,
                ]);
                let rel = ((lhs - rhs).exp() - 1.0).abs();
                assert!(rel < 1e-10, "a={a} x={x} rel={rel:e}");
            }
        }
    }

    #[test]
    fn quadrature_examples() {
        assert!((quadrature(|_| 2.5, 3.0).unwrap() - 7.5).abs() < 1e-12);
        assert!((quadrature(|_| 9f64.sqrt(), 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((quadrature(|t| t, 1.0).unwrap() - 0.5).abs() < 1e-10);
        let kinked = quadrature(|t| (t - 0.3).abs().sqrt(), 1.0).unwrap();
        let exact = (2.0 / 3.0) * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert!((kinked - exact).abs() < 1e-10);
    }

    #[test]
    fn quadrature_reports_non_finite() {
        let r = quadrature(|t| if t > 0.5 { f64::NAN } else { 1.0 }, 1.0);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    proptest! {
        #[test]
        fn dn_stays_in_range(u in -50.0f64..50.0, m in 0.0f64..=1.0) {
            let dn = jacobi_dn(u, m).unwrap();
            let lo = (1.0 - m).sqrt();
            prop_assert!(dn >= lo - 1e-12 && dn <= 1.0 + 1e-12, "dn={} lo={}", dn, lo);
        }

        #[test]
        fn sn_cn_dn_are_consistent(u in -20.0f64..20.0, m in 0.0f64..0.999) {
            let (sn, cn, dn) = jacobi_sncndn(u, m).unwrap();
            prop_assert!((sn * sn + cn * cn - 1.0).abs() < 1e-12);
            prop_assert!((dn * dn + m * sn * sn - 1.0).abs() < 1e-12);
        }
    }
}
