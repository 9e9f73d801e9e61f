//! Real gamma function via the Lanczos approximation (g = 7, 9 terms).
//!
//! Accurate to better than 1e-13 relative error over the range used by the
//! spectral constants (arguments in `(0, 2)`), and to close to machine
//! precision elsewhere on the positive axis away from the poles.

use crate::scalar::Scalar;

/// Lanczos coefficients for g = 7, n = 9 (Godfrey's table).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// The gamma function for real arguments that are not non-positive integers.
///
/// Uses the reflection formula for `x < 0.5` and the Lanczos sum otherwise.
/// Returns `NaN` at the poles `x = 0, -1, -2, ...`.
pub fn gamma<S: Scalar>(x: S) -> S {
    let half = S::of(0.5);
    if x < half {
        // Reflection: Γ(x) Γ(1-x) = π / sin(πx).
        let pi = S::of(std::f64::consts::PI);
        let sin_pi_x = (pi * x).sin();
        if sin_pi_x == S::zero() {
            return S::nan();
        }
        return pi / (sin_pi_x * gamma(S::one() - x));
    }

    let z = x - S::one();
    let mut acc = S::of(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += S::of(c) / (z + S::of(i as f64));
    }
    let t = z + S::of(LANCZOS_G) + S::of(0.5);
    let sqrt_two_pi = S::of((2.0 * std::f64::consts::PI).sqrt());
    sqrt_two_pi * t.powf(z + S::of(0.5)) * (-t).exp() * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    /// High-precision reference values (25 significant digits, truncated to
    /// f64) on the unit interval and beyond.
    const REFERENCE: [(f64, f64); 10] = [
        (0.1, 9.513507698668731836292),
        (0.25, 3.625609908221908311931),
        (1.0 / 3.0, 2.678938534707747633656),
        (0.5, 1.772453850905516027298),
        (2.0 / 3.0, 1.354117939426400416945),
        (0.75, 1.225416702465177645129),
        (0.9, 1.068628702119319354897),
        (1.5, 0.8862269254527580136491),
        (3.7, 4.170651783796603165394),
        (12.3, 83385367.8999698547129),
    ];

    #[test]
    fn matches_reference_to_1e12_relative() {
        for &(x, want) in &REFERENCE {
            let got = gamma(x);
            let rel = ((got - want) / want).abs();
            assert!(rel <= 1e-12, "gamma({x}) = {got}, want {want}, rel {rel:.2e}");
        }
    }

    #[test]
    fn small_integers_are_factorials() {
        assert!((gamma(1.0f64) - 1.0).abs() < 1e-14);
        assert!((gamma(2.0f64) - 1.0).abs() < 1e-14);
        assert!((gamma(5.0f64) - 24.0).abs() < 24.0 * 1e-14);
        assert!((gamma(8.0f64) - 5040.0).abs() < 5040.0 * 1e-13);
    }

    #[test]
    fn reflection_consistency_off_grid() {
        // Γ(x)Γ(1-x) sin(πx) = π for a few awkward x.
        for &x in &[0.123f64, 0.377, 0.499, 0.868] {
            let lhs = gamma(x) * gamma(1.0 - x) * (std::f64::consts::PI * x).sin();
            let rel = (lhs - std::f64::consts::PI).abs() / std::f64::consts::PI;
            assert!(rel < 1e-13, "x={x}: {lhs} vs pi, rel {rel:.2e}");
        }
    }

    #[test]
    fn works_in_single_precision_too() {
        let got: f32 = gamma(0.5f32);
        assert!((got - 1.7724539f32).abs() < 1e-5);
    }
}
