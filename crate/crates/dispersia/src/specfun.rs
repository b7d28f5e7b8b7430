//! Modified Bessel functions of the second kind, K0 and K1.
//!
//! These are the radial factors of the capacitor eigenfunction series, and
//! their derivatives (via K0' = -K1, K1' = -K0 - K1/x) drive every capacitor
//! tensor entry, so their accuracy bounds every capacitor result. Target:
//! relative error at or below 1e-13 across x in [1e-8, 700].
//!
//! # Implementation notes
//!
//! Three regimes, switched on the argument:
//!
//! * `x <= 2`: ascending series about the origin,
//!   K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} H_k (x^2/4)^k / (k!)^2, and the
//!   analogous series for K1. The log term and the correction sum cancel to
//!   about one digit at x = 2, which is why the cutover sits there.
//! * `2 < x < 20`: the integral representation
//!   K_nu(x) = e^-x Int_0^inf exp(-2x sinh^2(t/2)) cosh(nu t) dt evaluated by
//!   the trapezoid rule. The integrand is analytic and even in t, so the
//!   trapezoid error decays like exp(-pi^2/h) with a prefactor near e^x;
//!   the step h = pi^2/(x + 45) keeps that product below 1e-17.
//! * `x >= 20`: the divergent asymptotic series
//!   K_nu ~ sqrt(pi/2x) e^-x sum_k a_k(nu)/x^k truncated at its smallest
//!   term, whose size is about e^-2x/sqrt(pi x), far below target here.
//!
//! Once e^-x underflows to zero the functions return exactly 0.0; the
//! shielding physics makes that the correct limit, not an error.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Modified Bessel function of the second kind, order zero.
///
/// # Panics
///
/// Panics if `x <= 0` (including NaN); K0 has a logarithmic singularity at
/// the origin and is not real for negative arguments.
pub fn bessel_k0(x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k0 requires x > 0, got {x}");
    if x <= 2.0 {
        k0_ascending(x)
    } else if x < 20.0 {
        k_bridge(0, x)
    } else {
        k_asymptotic(0, x)
    }
}

/// Modified Bessel function of the second kind, order one.
///
/// # Panics
///
/// Panics if `x <= 0` (including NaN).
pub fn bessel_k1(x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k1 requires x > 0, got {x}");
    if x <= 2.0 {
        k1_ascending(x)
    } else if x < 20.0 {
        k_bridge(1, x)
    } else {
        k_asymptotic(1, x)
    }
}

/// K2 through the stable upward recurrence K2 = K0 + 2 K1 / x, needed for
/// K0'' = (K0 + K2)/2 when differentiating the capacitor series twice.
///
/// # Panics
///
/// Panics if `x <= 0` (including NaN).
pub fn bessel_k2(x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k2 requires x > 0, got {x}");
    bessel_k0(x) + 2.0 * bessel_k1(x) / x
}

/// Ascending-series K0 for x <= 2.
fn k0_ascending(x: f64) -> f64 {
    let t = 0.25 * x * x;
    let log_half_x = (0.5 * x).ln();
    // a_k = t^k/(k!)^2 feeds both I0 and the harmonic-weighted correction.
    let mut a = 1.0;
    let mut i0 = 1.0;
    let mut corr = 0.0;
    let mut h = 0.0;
    for k in 1..64 {
        a *= t / ((k * k) as f64);
        h += 1.0 / k as f64;
        i0 += a;
        corr += h * a;
        if a * h < 1e-18 * corr.max(1.0) {
            break;
        }
    }
    -(log_half_x + EULER_GAMMA) * i0 + corr
}

/// Ascending-series K1 for x <= 2.
fn k1_ascending(x: f64) -> f64 {
    let t = 0.25 * x * x;
    let log_half_x = (0.5 * x).ln();
    // b_k = t^k/(k!(k+1)!); I1 = (x/2) sum b_k; the correction weights are
    // psi(k+1) + psi(k+2) = H_k + H_{k+1} - 2 gamma.
    let mut b = 1.0;
    let mut i1_sum = 1.0;
    let mut h_k = 0.0;
    let mut h_k1 = 1.0;
    let mut corr = h_k + h_k1 - 2.0 * EULER_GAMMA;
    for k in 1..64 {
        b *= t / ((k * (k + 1)) as f64);
        h_k += 1.0 / k as f64;
        h_k1 += 1.0 / (k + 1) as f64;
        i1_sum += b;
        corr += (h_k + h_k1 - 2.0 * EULER_GAMMA) * b;
        if b * (h_k + h_k1) < 1e-18 * i1_sum {
            break;
        }
    }
    let i1 = 0.5 * x * i1_sum;
    1.0 / x + log_half_x * i1 - 0.25 * x * corr
}

/// Trapezoid evaluation of K_nu(x) = e^-x Int exp(-2x sinh^2(t/2)) cosh(nu t) dt
/// for the bridge regime. Valid for any nu >= 0 and x of order unity and up;
/// used for nu in {0, 1} with 2 < x < 20.
fn k_bridge(nu: u32, x: f64) -> f64 {
    let h = PI * PI / (x + 45.0);
    let nuf = nu as f64;
    // t = 0 contributes f(0)/2 = 1/2.
    let mut sum = 0.5;
    let mut j = 1u32;
    loop {
        let t = h * j as f64;
        let sh = (0.5 * t).sinh();
        let u = 2.0 * x * sh * sh;
        if u > 60.0 {
            break;
        }
        sum += (-u).exp() * (nuf * t).cosh();
        j += 1;
    }
    (-x).exp() * h * sum
}

/// Optimally truncated asymptotic series for x >= 20.
fn k_asymptotic(nu: u32, x: f64) -> f64 {
    let scale = (PI / (2.0 * x)).sqrt() * (-x).exp();
    if scale == 0.0 {
        return 0.0;
    }
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0u32..40 {
        let f = (2 * k + 1) as f64;
        let next = term * (mu - f * f) / (8.0 * (k + 1) as f64 * x);
        if next.abs() >= term.abs() && k > 0 {
            break; // past the smallest term; stop before divergence
        }
        sum += next;
        term = next;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    scale * sum
}

/// Ascending-series I0, exposed for the Wronskian test only. Monotone
/// positive terms, so no cancellation at any argument that fits in f64.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn bessel_i0(x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i0 requires x >= 0, got {x}");
    let t = 0.25 * x * x;
    let mut a = 1.0;
    let mut sum = 1.0;
    for k in 1..4000u64 {
        a *= t / ((k * k) as f64);
        sum += a;
        if a < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Ascending-series I1, companion to [`bessel_i0`].
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn bessel_i1(x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i1 requires x >= 0, got {x}");
    let t = 0.25 * x * x;
    let mut b = 1.0;
    let mut sum = 1.0;
    for k in 1..4000u64 {
        b *= t / ((k * (k + 1)) as f64);
        sum += b;
        if b < 1e-17 * sum {
            break;
        }
    }
    0.5 * x * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ref_k0, ref_k1};
    use approx::assert_relative_eq;

    #[test]
    fn frozen_values_at_one() {
        // Reference digits from the extended-precision oracle, cross-checked
        // against standard tables.
        assert_relative_eq!(bessel_k0(1.0), 0.421_024_438_240_708_33, max_relative = 1e-14);
        assert_relative_eq!(bessel_k1(1.0), 0.601_907_230_197_234_6, max_relative = 1e-14);
        assert_relative_eq!(bessel_k2(1.0), 1.624_838_898_635_177, max_relative = 1e-13);
    }

    #[test]
    fn frozen_values_across_regimes() {
        // One pin per regime: series, bridge, asymptotic.
        assert_relative_eq!(bessel_k0(0.1), 2.427_069_024_702_016_6, max_relative = 1e-13);
        assert_relative_eq!(bessel_k1(0.1), 9.853_844_780_870_606, max_relative = 1e-13);
        assert_relative_eq!(bessel_k0(5.0), 3.691_098_334_042_594_3e-3, max_relative = 1e-13);
        assert_relative_eq!(bessel_k1(5.0), 4.044_613_445_452_164_2e-3, max_relative = 1e-13);
        assert_relative_eq!(bessel_k0(25.0), 3.464_161_562_213_114_4e-12, max_relative = 1e-13);
        assert_relative_eq!(bessel_k1(25.0), 3.532_778_073_199_933_8e-12, max_relative = 1e-13);
    }

    #[test]
    fn regime_boundaries_agree() {
        // Both algorithms evaluated at the cutover points themselves.
        assert_relative_eq!(k0_ascending(2.0), k_bridge(0, 2.0), max_relative = 3e-14);
        assert_relative_eq!(k1_ascending(2.0), k_bridge(1, 2.0), max_relative = 3e-14);
        assert_relative_eq!(k_bridge(0, 20.0), k_asymptotic(0, 20.0), max_relative = 3e-14);
        assert_relative_eq!(k_bridge(1, 20.0), k_asymptotic(1, 20.0), max_relative = 3e-14);
    }

    #[test]
    fn oracle_agreement_on_log_grid() {
        // Smaller sibling of the acceptance grid; 200 points over the full
        // working range against the double-double reference.
        let n = 200;
        let (lo, hi) = (1e-8f64, 700.0f64);
        let mut worst = 0.0f64;
        for i in 0..n {
            let f = i as f64 / (n - 1) as f64;
            let x = lo * (hi / lo).powf(f);
            let e0 = (bessel_k0(x) - ref_k0(x)).abs() / ref_k0(x);
            let e1 = (bessel_k1(x) - ref_k1(x)).abs() / ref_k1(x);
            worst = worst.max(e0).max(e1);
        }
        assert!(worst <= 1e-13, "max relative error {worst:.3e} exceeds 1e-13");
    }

    #[test]
    fn wronskian_identity() {
        // K0(x) I1(x) + K1(x) I0(x) = 1/x; all four factors positive, so the
        // identity is well conditioned everywhere it fits in f64.
        for &x in &[0.1, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0] {
            let w = bessel_k0(x) * bessel_i1(x) + bessel_k1(x) * bessel_i0(x);
            assert_relative_eq!(w, 1.0 / x, max_relative = 5e-13);
        }
    }

    #[test]
    fn strictly_decreasing() {
        let mut prev_k0 = f64::INFINITY;
        let mut prev_k1 = f64::INFINITY;
        for i in 0..400 {
            let x = 1e-6 * (600.0f64 / 1e-6).powf(i as f64 / 399.0);
            let (k0, k1) = (bessel_k0(x), bessel_k1(x));
            assert!(k0 < prev_k0, "K0 not decreasing at x = {x}");
            assert!(k1 < prev_k1, "K1 not decreasing at x = {x}");
            prev_k0 = k0;
            prev_k1 = k1;
        }
    }

    #[test]
    fn recurrence_residual() {
        // K2 - (K0 + 2 K1/x) vanishes by construction; pin the value of K2
        // against the oracle recurrence instead so the test has teeth.
        for i in 0..60 {
            let x = 0.1 * (50.0f64 / 0.1).powf(i as f64 / 59.0);
            let k2_ref = ref_k0(x) + 2.0 * ref_k1(x) / x;
            assert_relative_eq!(bessel_k2(x), k2_ref, max_relative = 1e-12);
        }
    }

    #[test]
    fn small_argument_leading_behavior() {
        // K0 -> -ln(x/2) - gamma and x K1 -> 1 as x -> 0+.
        let x = 1e-8;
        assert_relative_eq!(
            bessel_k0(x),
            -(0.5 * x).ln() - EULER_GAMMA,
            max_relative = 1e-14
        );
        assert_relative_eq!(x * bessel_k1(x), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn large_argument_normalization() {
        // K0 * sqrt(2x/pi) * e^x -> 1 from above.
        for &x in &[50.0, 200.0, 600.0] {
            let norm = bessel_k0(x) * (2.0 * x / PI).sqrt() * x.exp();
            assert!((norm - 1.0).abs() < 0.01, "normalization {norm} at x = {x}");
            assert!(norm > 0.9);
        }
    }

    #[test]
    fn underflow_returns_zero() {
        assert_eq!(bessel_k0(800.0), 0.0);
        assert_eq!(bessel_k1(800.0), 0.0);
    }

    #[test]
    #[should_panic(expected = "requires x > 0")]
    fn zero_argument_panics() {
        bessel_k0(0.0);
    }

    #[test]
    #[should_panic(expected = "requires x > 0")]
    fn negative_argument_panics() {
        bessel_k1(-1.0);
    }
}
