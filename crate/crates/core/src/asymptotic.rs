//! Closed-form approximations of the output amplitudes at the 50:50 splitter:
//! the Stirling form for balanced input, the analytic amplitude for small
//! imbalance and its large-N limit, and the arcsine envelope.
//!
//! Output points alternate between two families. With `N` even,
//! `N(1+x)/4 = m_a/2`, so even `m_a` sit on the integer branch and odd `m_a`
//! on the half-integer branch; each branch traces its own slowly oscillating
//! envelope. Inside the phase, `tan⁻¹(x/√(1-x²))` is evaluated as `sin⁻¹ x`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::exact::{normalized_imbalance, DistributionSeries};
use crate::numerics::{log_binomial, log_factorial, signed_log_sum, sine_ratio, SignedLogValue};

/// Which integrality condition a grid point satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchTag {
    /// `N(1+x)/4` is an integer.
    Integer,
    /// `N(1+x)/4 + 1/2` is an integer.
    HalfInteger,
    /// Neither; only reachable off the output grid.
    Vanishing,
}

impl BranchTag {
    /// Branch of the output point `m_a`, for which `N(1+x)/4 = m_a/2`.
    pub fn of_point(m_a: u32) -> Self {
        if m_a.is_multiple_of(2) {
            BranchTag::Integer
        } else {
            BranchTag::HalfInteger
        }
    }

    /// Branch of an arbitrary real `x`.
    pub fn of_x(n_total: u32, x: f64) -> Self {
        let q = f64::from(n_total) * (1.0 + x) / 4.0;
        let is_int = |v: f64| (v - v.round()).abs() < 1e-9;
        if is_int(q) {
            BranchTag::Integer
        } else if is_int(q + 0.5) {
            BranchTag::HalfInteger
        } else {
            BranchTag::Vanishing
        }
    }
}

/// `φ = π/2 + sin⁻¹ x`.
pub fn phase_angle(x: f64) -> f64 {
    FRAC_PI_2 + x.clamp(-1.0, 1.0).asin()
}

/// `ln(1 - x²)` on the output grid, computed from integers as
/// `ln(4 m_a m_b / N²)`.
fn ln_one_minus_x2(n_total: u32, m_a: u32) -> f64 {
    let (m, n) = (f64::from(m_a), f64::from(n_total));
    (4.0 * m * (n - m)).ln() - 2.0 * n.ln()
}

fn check_even_grid(n_total: u32, m_a: u32) -> Result<()> {
    if !n_total.is_multiple_of(2) {
        return domain(format!("closed forms need even N, got {n_total}"));
    }
    if m_a > n_total {
        return domain(format!("m_a = {m_a} exceeds N = {n_total}"));
    }
    Ok(())
}

fn check_imbalance(n_total: u32, ny: i64) -> Result<()> {
    if ny < 0 || ny % 2 != 0 || ny > i64::from(n_total) {
        return domain(format!(
            "imbalance Ny = {ny} must be even and in 0..=N; use the reflection rule for Ny < 0"
        ));
    }
    Ok(())
}

/// Engineering cutoff for `Ny ≪ N`: `|Ny| ≤ N/4`.
pub fn within_imbalance_validity(n_total: u32, ny: i64) -> bool {
    4 * ny.abs() <= i64::from(n_total)
}

/// Stirling form of the balanced amplitude,
/// `(-1)^{m_a/2} · 2 / (√(πN) (1-x²)^{1/4})` on even `m_a`, zero on odd.
pub fn balanced_asymptotic(n_total: u32, m_a: u32) -> Result<SignedLogValue> {
    check_even_grid(n_total, m_a)?;
    if !m_a.is_multiple_of(2) {
        return Ok(SignedLogValue::ZERO);
    }
    if m_a == 0 || m_a == n_total {
        return domain("Stirling form diverges at |x| = 1");
    }
    let log_mag =
        LN_2 - 0.5 * (PI * f64::from(n_total)).ln() - 0.25 * ln_one_minus_x2(n_total, m_a);
    Ok(SignedLogValue::from_log(log_mag).alternate(i64::from(m_a / 2)))
}

/// Analytic amplitude for input imbalance `0 ≤ Ny ≪ N`:
///
/// ```text
/// A ≈ -2^{-N/2} sqrt(m_a! m_b! / (n_a! n_b!)) e^{Ny²/4}
///     × { sin(nφ)/sin φ · [2 (-1)^{-N(1+x)/4-1/2} C(N/2-1, N(1+x)/4-1/2) + x (-1)^{N(1+x)/4} C(N/2, N(1+x)/4)]
///       + sin((n-1)φ)/sin φ · (-1)^{N(1+x)/4} C(N/2, N(1+x)/4) }
/// ```
///
/// with `n = Ny/2`, `sin φ = √(1-x²)`. Each binomial is present only on its
/// own branch, where its sign exponent is an integer.
pub fn imbalanced_amplitude_eq17(n_total: u32, ny: i64, m_a: u32) -> Result<SignedLogValue> {
    check_even_grid(n_total, m_a)?;
    check_imbalance(n_total, ny)?;
    let n = u64::from(n_total);
    let (n_a, n_b) = ((n as i64 + ny) as u64 / 2, (n as i64 - ny) as u64 / 2);
    let m = u64::from(m_a);
    let x = normalized_imbalance(n_total, m_a);
    let phi = phase_angle(x);
    let half_n = ny / 2;

    let log_prefactor = -0.5 * n as f64 * LN_2
        + 0.5 * (log_factorial(m) + log_factorial(n - m) - log_factorial(n_a) - log_factorial(n_b))
        + (ny * ny) as f64 / (4.0 * n as f64);

    let brace = match BranchTag::of_point(m_a) {
        BranchTag::Integer => {
            let k = (m / 2) as i64;
            let binom = log_binomial(n / 2, k).alternate(k);
            signed_log_sum([
                binom * SignedLogValue::from_real(x * sine_ratio(half_n, phi)),
                binom * SignedLogValue::from_real(sine_ratio(half_n - 1, phi)),
            ])
        }
        BranchTag::HalfInteger => {
            let k = ((m - 1) / 2) as i64;
            log_binomial(n / 2 - 1, k).alternate((m as i64 + 1) / 2)
                * SignedLogValue::from_real(2.0 * sine_ratio(half_n, phi))
        }
        BranchTag::Vanishing => SignedLogValue::ZERO,
    };
    Ok(-brace.scale_log(log_prefactor))
}

/// Slowly varying factor of the large-N amplitude on one branch, as a
/// function of a continuous `x`:
/// `cos(nφ) (1-x²)^{-1/4}` on the integer branch (divergent at `|x| = 1`)
/// and `sin(nφ)/sin φ · (1-x²)^{1/4}` on the half-integer branch (zero there).
pub fn large_n_branch_envelope(half_n: i64, x: f64, branch: BranchTag) -> f64 {
    let phi = phase_angle(x);
    let one_minus_x2 = (1.0 - x) * (1.0 + x);
    match branch {
        BranchTag::Integer => {
            let c = (half_n as f64 * phi).cos();
            if one_minus_x2 <= 0.0 {
                f64::INFINITY.copysign(c)
            } else {
                c / one_minus_x2.powf(0.25)
            }
        }
        BranchTag::HalfInteger => sine_ratio(half_n, phi) * one_minus_x2.max(0.0).powf(0.25),
        BranchTag::Vanishing => 0.0,
    }
}

/// Natural log of `2/√(πN) · e^{Ny²/4} / [(1+y)^{N(1+y)/4} (1-y)^{N(1-y)/4} (1-y²)^{1/4}]`.
fn large_n_log_prefactor(n_total: u32, ny: i64) -> f64 {
    let n = f64::from(n_total);
    let y = ny as f64 / n;
    let xlogx = |a: f64| if a == 0.0 { 0.0 } else { a * a.ln() };
    LN_2 - 0.5 * (PI * n).ln() + (ny * ny) as f64 / (4.0 * n)
        - n / 4.0 * (xlogx(1.0 + y) + xlogx(1.0 - y))
        - 0.25 * ((1.0 - y) * (1.0 + y)).ln()
}

/// Large-N form of [`imbalanced_amplitude_eq17`]. At `|x| = 1` the
/// integer-branch value is returned as a signed infinity.
pub fn large_n_amplitude_eq18(n_total: u32, ny: i64, m_a: u32) -> Result<SignedLogValue> {
    check_even_grid(n_total, m_a)?;
    check_imbalance(n_total, ny)?;
    if n_total < 100 {
        return Err(Error::Regime(format!(
            "large-N form needs N ≥ 100, got {n_total}"
        )));
    }
    let x = normalized_imbalance(n_total, m_a);
    let half_n = ny / 2;
    let base = SignedLogValue::from_log(large_n_log_prefactor(n_total, ny));
    let branch = BranchTag::of_point(m_a);
    let envelope = large_n_branch_envelope(half_n, x, branch);
    let envelope = if envelope.is_infinite() {
        SignedLogValue::new(if envelope > 0.0 { 1 } else { -1 }, f64::INFINITY)
    } else {
        SignedLogValue::from_real(envelope)
    };
    let m = i64::from(m_a);
    Ok(match branch {
        BranchTag::Integer => (base * envelope).alternate(m / 2),
        BranchTag::HalfInteger => -(base * envelope).alternate((m + 1) / 2),
        BranchTag::Vanishing => SignedLogValue::ZERO,
    })
}

/// Arcsine law `P(x) = 1/(π√(1-x²))`.
pub fn arcsine_envelope(x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() >= 1.0 {
        return domain(format!("arcsine envelope undefined at x = {x}"));
    }
    Ok(1.0 / (PI * ((1.0 - x) * (1.0 + x)).sqrt()))
}

/// Upper envelope of the balanced density, `2 P(x)`.
pub fn balanced_upper_envelope(x: f64) -> Result<f64> {
    Ok(2.0 * arcsine_envelope(x)?)
}

/// Number of constant-sign runs of the slowly varying factor on the
/// half-integer branch of a series, after the point-by-point sign
/// `(-1)^{(m_a+1)/2}` is divided out. This is the number of oscillations of
/// the half-integer envelope across `(-1, 1)`.
pub fn half_branch_lobes(series: &DistributionSeries) -> usize {
    let mut lobes = 0;
    let mut last = 0i8;
    for p in series.points.iter().filter(|p| p.m_a % 2 == 1) {
        let s = p.amplitude.alternate((i64::from(p.m_a) + 1) / 2).sign();
        if s != 0 && s != last {
            lobes += 1;
            last = s;
        }
    }
    lobes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{balanced_amplitude, distribution, Engine, FockInput};

    #[test]
    fn branch_tags() {
        assert_eq!(BranchTag::of_point(300), BranchTag::Integer);
        assert_eq!(BranchTag::of_point(301), BranchTag::HalfInteger);
        assert_eq!(BranchTag::of_x(8, 0.0), BranchTag::Integer);
        assert_eq!(BranchTag::of_x(8, 0.25), BranchTag::HalfInteger);
        assert_eq!(BranchTag::of_x(8, 0.1), BranchTag::Vanishing);
    }

    #[test]
    fn stirling_balanced_examples() {
        let centre = balanced_asymptotic(600, 300).unwrap();
        assert!((centre.to_real() - 0.046_065_886).abs() < 1e-8);
        let upper = 300.0 * centre.square().to_real();
        assert!((upper - 2.0 / PI).abs() < 1e-12);
        assert!(balanced_asymptotic(600, 301).unwrap().is_zero());
        assert!(balanced_asymptotic(600, 0).is_err());

        let tiny = balanced_asymptotic(4, 2).unwrap().to_real().abs();
        let rel = (tiny - 0.5).abs() / 0.5;
        assert!((rel - 0.128).abs() < 1e-3, "rel = {rel}");
    }

    #[test]
    fn imbalanced_form_reduces_to_balanced_closed_form() {
        for m in (0..=600).step_by(2) {
            let a = imbalanced_amplitude_eq17(600, 0, m).unwrap();
            let b = balanced_amplitude(600, m).unwrap();
            assert!(a.relative_difference(b) < 1e-12, "m={m}: {a} vs {b}");
        }
        assert!(imbalanced_amplitude_eq17(600, 0, 301).unwrap().is_zero());
    }

    #[test]
    fn imbalanced_form_argument_checks() {
        assert!(imbalanced_amplitude_eq17(600, 3, 300).is_err());
        assert!(imbalanced_amplitude_eq17(600, -2, 300).is_err());
        assert!(imbalanced_amplitude_eq17(601, 2, 300).is_err());
        assert!(within_imbalance_validity(600, 150));
        assert!(!within_imbalance_validity(600, 152));
    }

    #[test]
    fn large_n_form_reduces_to_stirling_form() {
        for m in [2, 100, 300, 302, 598] {
            let a = large_n_amplitude_eq18(600, 0, m).unwrap();
            let b = balanced_asymptotic(600, m).unwrap();
            assert!(a.relative_difference(b) < 1e-12, "m={m}");
        }
        assert!(matches!(
            large_n_amplitude_eq18(40, 0, 20),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn large_n_form_tracks_imbalanced_form() {
        for m in 0..=600u32 {
            let x = normalized_imbalance(600, m);
            if x.abs() > 0.8 {
                continue;
            }
            let a = imbalanced_amplitude_eq17(600, 12, m).unwrap();
            let b = large_n_amplitude_eq18(600, 12, m).unwrap();
            if a.is_zero() || b.is_zero() {
                continue;
            }
            assert_eq!(a.sign(), b.sign(), "m={m}");
        }
    }

    #[test]
    fn large_n_form_edge_behaviour() {
        let near = [0.999, 0.999_99, 0.999_999_9, 1.0];
        let half: Vec<f64> = near
            .iter()
            .map(|&x| large_n_branch_envelope(6, x, BranchTag::HalfInteger).abs())
            .collect();
        assert!(half.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(half[3], 0.0);
        let int: Vec<f64> = near
            .iter()
            .map(|&x| large_n_branch_envelope(6, x, BranchTag::Integer).abs())
            .collect();
        assert!(int.windows(2).all(|w| w[1] > w[0]));
        assert!(int[3].is_infinite());
        // growth rate (1-x²)^{-1/4}
        let ratio = int[2] / int[1];
        let want = ((1.0 - near[1] * near[1]) / (1.0 - near[2] * near[2])).powf(0.25);
        assert!((ratio / want - 1.0).abs() < 1e-3);
        assert!(large_n_amplitude_eq18(600, 12, 600).unwrap().is_infinite());
    }

    #[test]
    fn arcsine_values() {
        assert!((arcsine_envelope(0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((arcsine_envelope(0.6).unwrap() - 0.397_887_357_729_738).abs() < 1e-12);
        assert!(arcsine_envelope(1.0).is_err());
        assert!(arcsine_envelope(-1.5).is_err());
    }

    #[test]
    fn arcsine_is_normalized() {
        // x = sin t maps the integrable edge singularity onto a constant.
        let n = 20_000;
        let h = PI / n as f64;
        let integral: f64 = (0..n)
            .map(|k| {
                let t = -PI / 2.0 + (k as f64 + 0.5) * h;
                arcsine_envelope(t.sin()).unwrap() * t.cos() * h
            })
            .sum();
        assert!((integral - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lobe_count_follows_imbalance() {
        for ny in (2..=24).step_by(2) {
            let series = distribution(
                &FockInput::from_imbalance(600, ny).unwrap(),
                Engine::ImbalancedEq17,
            )
            .unwrap();
            assert_eq!(half_branch_lobes(&series), (ny / 2) as usize, "Ny={ny}");
        }
    }
}
