//! Log-gamma and the saddle-point helpers used to evaluate discrete
//! probability mass functions without cancellation.
//!
//! The pmf routines follow Loader's formulation: the log pmf is written as a
//! Stirling remainder plus a deviance term `bd0`, each of which is small and
//! well conditioned, instead of a difference of three large log-factorials.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln(sqrt(2 pi))`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of |Γ(x)| via the Lanczos series (g = 7, nine terms).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`, the error of Stirling's formula.
pub fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 0.0 {
        return 0.0;
    }
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / m) + m - x`, evaluated by series near `x = m`.
pub fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Log pmf of Poisson(`lambda`) at `n`. Caller guarantees `lambda >= 0`.
pub(crate) fn ln_poisson(n: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if n == 0 {
        return -lambda;
    }
    let x = n as f64;
    -stirlerr(x) - bd0(x, lambda) - 0.5 * (2.0 * PI * x).ln()
}

/// Log pmf of Binomial(`n`, `p`) at `k`. Caller guarantees `k <= n`, `p` in [0, 1].
pub(crate) fn ln_binomial(k: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        return nf * (-p).ln_1p();
    }
    if k == n {
        return nf * p.ln();
    }
    let kf = k as f64;
    let rest = nf - kf;
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(rest) - bd0(kf, nf * p) - bd0(rest, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// Log pmf of the negative binomial with `r` failures and success odds
/// `x = m / (1 + m)`, i.e. `C(n + r - 1, n) x^n (1 - x)^r`, for mean `r m`.
pub(crate) fn ln_negative_binomial(n: u64, r: u64, per_mode_mean: f64) -> f64 {
    if per_mode_mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    // r / (r + n) * Binomial(r; n + r, 1 / (1 + m))
    let p = 1.0 / (1.0 + per_mode_mean);
    let rf = r as f64;
    (rf / (rf + n as f64)).ln() + ln_binomial(r, n + r, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial_exact(n: u64) -> f64 {
        (1..=n).map(|i| (i as f64).ln()).sum()
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        for n in 0..60u64 {
            let exact = ln_factorial_exact(n);
            let got = ln_gamma(n as f64 + 1.0);
            assert!((got - exact).abs() <= 1e-13 * exact.abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn ln_gamma_half_integer() {
        // Γ(1/2) = sqrt(pi)
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
        // Γ(-1/2) = -2 sqrt(pi)
        assert!((ln_gamma(-0.5) - (2.0 * PI.sqrt()).ln()).abs() < 1e-13);
    }

    #[test]
    fn stirlerr_branches_agree_with_ln_gamma() {
        for &n in &[16.0, 20.0, 36.0, 50.0, 81.0, 200.0, 501.0, 1000.0] {
            let direct = ln_gamma(n + 1.0) - (n + 0.5) * f64::ln(n) + n - LN_SQRT_2PI;
            assert!((stirlerr(n) - direct).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn bd0_series_and_direct_agree() {
        let direct = |x: f64, m: f64| x * (x / m).ln() + m - x;
        assert!((bd0(10.0, 10.5) - direct(10.0, 10.5)).abs() < 1e-13);
        assert_eq!(bd0(7.0, 7.0), 0.0);
    }

    #[test]
    fn small_pmfs_against_direct_formulas() {
        let lam: f64 = 3.7;
        for n in 0..30u64 {
            let direct = n as f64 * lam.ln() - lam - ln_factorial_exact(n);
            assert!((ln_poisson(n, lam) - direct).abs() < 1e-12);
        }
        let p: f64 = 0.3;
        for k in 0..=20u64 {
            let direct = ln_factorial_exact(20) - ln_factorial_exact(k) - ln_factorial_exact(20 - k)
                + k as f64 * p.ln()
                + (20 - k) as f64 * (1.0 - p).ln();
            assert!((ln_binomial(k, 20, p) - direct).abs() < 1e-12);
        }
    }
}
