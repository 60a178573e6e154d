//! Exact binomial statistics: log-gamma, the regularized incomplete beta
//! function, tail probabilities, and the two-sided exact test.

use crate::error::{Error, Result};

/// Lanczos approximation (g = 7) to ln Gamma(x), x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
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
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// ln of the binomial coefficient C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and
/// x in [0, 1].
pub fn beta_inc_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

/// Upper tail P(X >= k) for X ~ Binomial(n, p).
pub fn binom_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    // P(X >= k) = I_p(k, n - k + 1)
    beta_inc_reg(k as f64, (n - k) as f64 + 1.0, p.clamp(0.0, 1.0))
}

/// log PMF of Binomial(n, p) at k, for p strictly inside (0, 1).
pub fn binom_ln_pmf(k: u64, n: u64, p: f64) -> f64 {
    ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
}

/// Two-sided exact binomial test of H0: success probability = p.
///
/// The p-value sums the PMF over every outcome whose probability does not
/// exceed the observed one (with a small tolerance for ties lost to
/// rounding). For p = 1/2 the distribution is symmetric and the sum
/// collapses to a doubled tail.
pub fn binom_p_value(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n || n == 0 {
        return Err(Error::OutOfRange(format!(
            "need 0 <= k <= n with n >= 1, got k={k}, n={n}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange(format!(
            "null probability must lie in (0,1), got {p}"
        )));
    }
    if p == 0.5 {
        let tail_start = k.max(n - k);
        return Ok((2.0 * binom_upper_tail(tail_start, n, 0.5)).min(1.0));
    }
    const REL_TOL: f64 = 1e-7;
    let ln_observed = binom_ln_pmf(k, n, p);
    let cutoff = ln_observed + REL_TOL.ln_1p();
    let mut total = 0.0;
    for i in 0..=n {
        let ln_pi = binom_ln_pmf(i, n, p);
        if ln_pi <= cutoff {
            total += ln_pi.exp();
        }
    }
    Ok(total.min(1.0))
}

/// One-sided Clopper-Pearson lower confidence bound for a binomial
/// proportion: the infimum of p such that P(X >= k | n, p) >= 1 - confidence,
/// found by bisection on the regularized incomplete beta function.
///
/// The true proportion is >= the returned bound with probability at least
/// `confidence`.
pub fn lower_conf_bound(k: u64, n: u64, confidence: f64) -> Result<f64> {
    if k > n || n == 0 {
        return Err(Error::OutOfRange(format!(
            "need 0 <= k <= n with n >= 1, got k={k}, n={n}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::OutOfRange(format!(
            "confidence must lie in (0,1), got {confidence}"
        )));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let alpha = 1.0 - confidence;
    // binom_upper_tail(k, n, p) increases monotonically in p from 0 to 1.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binom_upper_tail(k, n, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force tail oracle: direct PMF summation with incremental ratios.
    fn tail_oracle(k: u64, n: u64, p: f64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let mut terms = Vec::with_capacity((n - k + 1) as usize);
        let mut ln_pmf = n as f64 * (1.0 - p).ln(); // pmf(0)
        let lr = p.ln() - (1.0 - p).ln();
        for i in 0..n {
            let next = ln_pmf + ((n - i) as f64).ln() - ((i + 1) as f64).ln() + lr;
            if i + 1 >= k {
                terms.push(next);
            }
            ln_pmf = next;
        }
        // Smallest terms first keeps the summation well conditioned.
        let mut sum = 0.0;
        for t in terms.iter().rev() {
            sum += t.exp();
        }
        sum.min(1.0)
    }

    /// Independent Clopper-Pearson oracle: bisection on the summation tail.
    fn lower_bound_oracle(k: u64, n: u64, confidence: f64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let alpha = 1.0 - confidence;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if tail_oracle(k, n, mid) < alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ln_gamma_on_integers() {
        // Gamma(n) = (n-1)!
        let mut fact = 1.0f64;
        for n in 1..20u64 {
            assert!(
                (ln_gamma(n as f64) - fact.ln()).abs() < 1e-12,
                "ln_gamma({n})"
            );
            fact *= n as f64;
        }
    }

    #[test]
    fn beta_inc_reg_against_tail_sums() {
        for &(k, n) in &[(1u64, 5u64), (3, 10), (7, 12), (50, 100), (999, 1000)] {
            for &p in &[0.01, 0.3, 0.5, 0.77, 0.99] {
                let via_beta = binom_upper_tail(k, n, p);
                let via_sum = tail_oracle(k, n, p);
                assert!(
                    (via_beta - via_sum).abs() < 1e-12,
                    "k={k} n={n} p={p}: {via_beta} vs {via_sum}"
                );
            }
        }
    }

    #[test]
    fn lower_bound_edge_cases() {
        assert_eq!(lower_conf_bound(0, 50, 0.999).unwrap(), 0.0);

        // k = n has the closed form alpha^(1/n).
        let b = lower_conf_bound(100, 100, 0.999).unwrap();
        let closed = 0.001f64.powf(1.0 / 100.0);
        assert!((b - closed).abs() < 1e-5, "b={b}, closed={closed}");
        assert!((b - 0.93325).abs() < 1e-5);
        assert!((b - lower_bound_oracle(100, 100, 0.999)).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_mid_range() {
        let b = lower_conf_bound(900, 1000, 0.999).unwrap();
        assert!(b > 0.86 && b < 0.90, "b={b}");
        assert!((b - lower_bound_oracle(900, 1000, 0.999)).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_rejects_bad_input() {
        assert!(lower_conf_bound(5, 4, 0.9).is_err());
        assert!(lower_conf_bound(1, 10, 0.0).is_err());
        assert!(lower_conf_bound(1, 10, 1.0).is_err());
    }

    #[test]
    fn p_value_examples() {
        assert_eq!(binom_p_value(50, 100, 0.5).unwrap(), 1.0);

        let pv = binom_p_value(60, 100, 0.5).unwrap();
        assert!((pv - 0.05688793).abs() < 1e-6, "pv={pv}");

        let pv = binom_p_value(100, 100, 0.5).unwrap();
        let expect = 2.0 * 0.5f64.powi(100);
        assert!((pv - expect).abs() < 1e-35, "pv={pv}");
    }

    #[test]
    fn p_value_symmetric_shortcut_matches_summation() {
        // Evaluate the generic summation at p = 0.5 via a nearby call and
        // exact small-n enumeration.
        for n in [5u64, 12, 33] {
            for k in 0..=n {
                let fast = binom_p_value(k, n, 0.5).unwrap();
                // direct enumeration with exact binomial coefficients
                let pmf = |i: u64| -> f64 {
                    let mut c = 1.0f64;
                    for j in 0..i {
                        c = c * (n - j) as f64 / (j + 1) as f64;
                    }
                    c * 0.5f64.powi(n as i32)
                };
                let observed = pmf(k);
                let total: f64 = (0..=n)
                    .map(pmf)
                    .filter(|v| *v <= observed * (1.0 + 1e-7))
                    .sum();
                assert!(
                    (fast - total.min(1.0)).abs() < 1e-12,
                    "k={k} n={n}: {fast} vs {total}"
                );
            }
        }
    }

    #[test]
    fn p_value_asymmetric_null() {
        // Against an enumeration oracle for p != 1/2.
        let n = 40u64;
        let p = 0.3f64;
        for k in 0..=n {
            let got = binom_p_value(k, n, p).unwrap();
            let pmf = |i: u64| -> f64 {
                let mut c = 1.0f64;
                for j in 0..i {
                    c = c * (n - j) as f64 / (j + 1) as f64;
                }
                c * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32)
            };
            let observed = pmf(k);
            let total: f64 = (0..=n)
                .map(pmf)
                .filter(|v| *v <= observed * (1.0 + 1e-7))
                .sum();
            assert!(
                (got - total.min(1.0)).abs() < 1e-10,
                "k={k}: {got} vs {total}"
            );
        }
    }

    #[test]
    fn p_value_rejects_bad_input() {
        assert!(binom_p_value(5, 4, 0.5).is_err());
        assert!(binom_p_value(1, 10, 0.0).is_err());
        assert!(binom_p_value(1, 10, 1.0).is_err());
    }
}
