//! Exact output amplitudes of a two-mode beam splitter fed with Fock states.
//!
//! The amplitude `<m_a, N-m_a| U |n_a, N-n_a>` is the `m_a`-fold derivative
//! of `α^{n_a} (1+αβ)^{N-n_a}` at `α = sin ξ cos ξ`, `β = -tan ξ`, times
//! factorial prefactors. Expanding the derivative with the product rule
//! gives a finite alternating sum over `j`:
//!
//! ```text
//! A = sqrt(m_a! m_b! / (n_a! n_b!)) * Σ_j (-1)^(m_a-j) C(n_a, j) C(n_b, m_a-j)
//!                                         * sin^(n_a+m_a-2j) ξ * cos^(n_b-m_a+2j) ξ
//! ```
//!
//! where `α^{n_a-j} β^{m_a-j} (1+αβ)^{n_b-m_a+j}` with `1+αβ = cos² ξ` has
//! been collected into powers of `sin ξ` and `cos ξ`. The terms reach
//! `2^{N/2}` times the result, so the accumulation is never done in `f64`:
//! at `ξ = π/4` every term is an integer multiple of `2^{-N/2}` and the sum
//! is carried in big integers; for other angles it is carried in an
//! [`ExtFloat`] with `N + 128` mantissa bits.

use std::f64::consts::{FRAC_PI_4, LN_2};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotic;
use crate::error::{domain, Error, Result};
use crate::numerics::{bigint_to_signed_log, log_factorial, ExtFloat, SignedLogValue};
use crate::oracle;

/// Mixing angle of a 50:50 beam splitter.
pub const BALANCED_XI: f64 = FRAC_PI_4;

/// Product Fock state `|n_a, N - n_a>` entering a beam splitter of angle `xi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FockInput {
    n_total: u32,
    n_a: u32,
    xi: f64,
}

impl FockInput {
    pub fn new(n_total: u32, n_a: u32) -> Result<Self> {
        if n_a > n_total {
            return domain(format!("n_a = {n_a} exceeds N = {n_total}"));
        }
        Ok(Self {
            n_total,
            n_a,
            xi: BALANCED_XI,
        })
    }

    /// Input with imbalance `Ny = n_a - n_b`, which must share the parity of `N`.
    pub fn from_imbalance(n_total: u32, ny: i64) -> Result<Self> {
        let n = i64::from(n_total);
        if ny.abs() > n || (n + ny) % 2 != 0 {
            return domain(format!(
                "imbalance Ny = {ny} is not reachable with N = {n_total} photons"
            ));
        }
        Self::new(n_total, ((n + ny) / 2) as u32)
    }

    pub fn with_xi(mut self, xi: f64) -> Result<Self> {
        if !xi.is_finite() {
            return domain(format!("mixing angle {xi} is not finite"));
        }
        self.xi = xi;
        Ok(self)
    }

    pub fn n_total(&self) -> u32 {
        self.n_total
    }

    pub fn n_a(&self) -> u32 {
        self.n_a
    }

    pub fn n_b(&self) -> u32 {
        self.n_total - self.n_a
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `Ny = n_a - n_b`.
    pub fn ny(&self) -> i64 {
        i64::from(self.n_a) - i64::from(self.n_b())
    }

    /// Normalized input imbalance `y = Ny / N` (zero for the empty input).
    pub fn y(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.ny() as f64 / f64::from(self.n_total)
        }
    }

    pub fn is_balanced_splitter(&self) -> bool {
        self.xi == BALANCED_XI
    }

    /// The input with the two ports exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            n_a: self.n_b(),
            ..*self
        }
    }
}

/// One output configuration `|m_a, m_b>` with its amplitude and density
/// `P_N(x) = (N/2) |A|²`. The probability mass of the point is `density * 2/N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutputPoint {
    pub m_a: u32,
    pub m_b: u32,
    pub x: f64,
    pub amplitude: SignedLogValue,
    pub density: f64,
}

impl OutputPoint {
    fn new(n_total: u32, m_a: u32, amplitude: SignedLogValue) -> Self {
        let density = if n_total == 0 {
            0.0
        } else {
            amplitude
                .square()
                .scale_log((f64::from(n_total) / 2.0).ln())
                .to_real()
        };
        Self {
            m_a,
            m_b: n_total - m_a,
            x: normalized_imbalance(n_total, m_a),
            amplitude,
            density,
        }
    }

    pub fn probability(&self) -> f64 {
        self.amplitude.square().to_real()
    }
}

/// `x = (2 m_a - N) / N`.
pub fn normalized_imbalance(n_total: u32, m_a: u32) -> f64 {
    if n_total == 0 {
        return 0.0;
    }
    (2.0 * f64::from(m_a) - f64::from(n_total)) / f64::from(n_total)
}

/// Which formula filled a [`DistributionSeries`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// The finite derivative sum, evaluated exactly.
    Exact,
    /// Closed form for `n_a = n_b`.
    #[value(name = "balanced")]
    BalancedClosed,
    /// Stirling form of the balanced closed form.
    #[value(name = "eq7")]
    BalancedStirling,
    /// Analytic amplitude for small input imbalance.
    #[value(name = "eq17")]
    ImbalancedEq17,
    /// Large-N form of the imbalanced amplitude.
    #[value(name = "eq18")]
    LargeNEq18,
    /// Matrix exponential of the two-mode generator.
    Oracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::BalancedClosed => "balanced",
            Engine::BalancedStirling => "eq7",
            Engine::ImbalancedEq17 => "eq17",
            Engine::LargeNEq18 => "eq18",
            Engine::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All `N + 1` output points for one input, ordered by `m_a`.
#[derive(Clone, Debug, Serialize)]
pub struct DistributionSeries {
    pub input: FockInput,
    pub engine: Engine,
    pub points: Vec<OutputPoint>,
    /// False when an approximate engine was evaluated outside the imbalance
    /// range it was derived for.
    pub within_validity: bool,
}

impl DistributionSeries {
    /// `Σ |A|²`; one for a unitary engine.
    pub fn total_probability(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| !p.amplitude.is_infinite())
            .map(OutputPoint::probability)
            .sum()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.density).collect()
    }
}

fn big_binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Range of `j` with non-vanishing product-rule terms.
fn term_range(n_a: u64, n_b: u64, m_a: u64) -> (u64, u64) {
    (m_a.saturating_sub(n_b), n_a.min(m_a))
}

/// Integer part of the `ξ = π/4` sum: `Σ_j (-1)^(m_a-j) C(n_a, j) C(n_b, m_a-j)`.
/// Consecutive magnitudes differ by the exact ratio
/// `(n_a-j)(m_a-j) / ((j+1)(n_b-m_a+j+1))`.
fn balanced_splitter_sum(n_a: u64, n_b: u64, m_a: u64) -> BigInt {
    let (lo, hi) = term_range(n_a, n_b, m_a);
    if lo > hi {
        return BigInt::zero();
    }
    let mut term = big_binomial(n_a, lo) * big_binomial(n_b, m_a - lo);
    let mut sum = BigInt::zero();
    for j in lo..=hi {
        if (m_a - j).is_multiple_of(2) {
            sum += BigInt::from(term.clone());
        } else {
            sum -= BigInt::from(term.clone());
        }
        if j < hi {
            term *= (n_a - j) * (m_a - j);
            term /= (j + 1) * (n_b + j + 1 - m_a);
        }
    }
    sum
}

/// `½ ln(m_a! m_b! / (n_a! n_b!))`.
fn factorial_prefactor(n_a: u64, n_b: u64, m_a: u64, m_b: u64) -> f64 {
    0.5 * (log_factorial(m_a) + log_factorial(m_b) - log_factorial(n_a) - log_factorial(n_b))
}

fn from_balanced_sum(input: &FockInput, m_a: u64, sum: &BigInt) -> SignedLogValue {
    let n = u64::from(input.n_total);
    let (n_a, n_b) = (u64::from(input.n_a), u64::from(input.n_b()));
    bigint_to_signed_log(sum)
        .scale_log(factorial_prefactor(n_a, n_b, m_a, n - m_a) - 0.5 * n as f64 * LN_2)
}

/// Powers of `sin ξ` and `cos ξ` at a fixed working precision, shared by
/// every amplitude of one `(N, ξ)`.
struct AngleTables {
    sin_pow: Vec<ExtFloat>,
    cos_pow: Vec<ExtFloat>,
    prec: u64,
}

impl AngleTables {
    fn new(n_total: u32, xi: f64) -> Self {
        let prec = u64::from(n_total) + 128;
        let table = |base: f64| {
            let base = ExtFloat::from_f64(base);
            let mut pows = Vec::with_capacity(n_total as usize + 1);
            pows.push(ExtFloat::one());
            for k in 1..=n_total as usize {
                let next = pows[k - 1].mul(&base, prec);
                pows.push(next);
            }
            pows
        };
        Self {
            sin_pow: table(xi.sin()),
            cos_pow: table(xi.cos()),
            prec,
        }
    }

    fn amplitude(&self, input: &FockInput, m_a: u64) -> SignedLogValue {
        let n = u64::from(input.n_total);
        let (n_a, n_b) = (u64::from(input.n_a), u64::from(input.n_b()));
        let (lo, hi) = term_range(n_a, n_b, m_a);
        let mut coefficient = big_binomial(n_a, lo) * big_binomial(n_b, m_a - lo);
        let mut sum = ExtFloat::zero();
        for j in lo..=hi {
            let sin_exp = (n_a + m_a - 2 * j) as usize;
            let cos_exp = (n_b + 2 * j - m_a) as usize;
            let term = ExtFloat::from_biguint(&coefficient)
                .mul(&self.sin_pow[sin_exp], self.prec)
                .mul(&self.cos_pow[cos_exp], self.prec);
            sum = if (m_a - j).is_multiple_of(2) {
                sum.add(&term, self.prec)
            } else {
                sum.add(&term.neg(), self.prec)
            };
            if j < hi {
                coefficient *= (n_a - j) * (m_a - j);
                coefficient /= (j + 1) * (n_b + j + 1 - m_a);
            }
        }
        sum.to_signed_log()
            .scale_log(factorial_prefactor(n_a, n_b, m_a, n - m_a))
    }
}

fn check_output(input: &FockInput, m_a: u32) -> Result<()> {
    if m_a > input.n_total {
        return domain(format!("m_a = {m_a} exceeds N = {}", input.n_total));
    }
    Ok(())
}

/// Exact amplitude `<m_a, N-m_a| U(ξ) |n_a, N-n_a>`.
pub fn exact_amplitude(input: &FockInput, m_a: u32) -> Result<SignedLogValue> {
    check_output(input, m_a)?;
    let m = u64::from(m_a);
    if input.is_balanced_splitter() {
        let sum = balanced_splitter_sum(u64::from(input.n_a), u64::from(input.n_b()), m);
        Ok(from_balanced_sum(input, m, &sum))
    } else {
        Ok(AngleTables::new(input.n_total, input.xi).amplitude(input, m))
    }
}

/// Every `ξ = π/4` sum for one input at once. The sums are the coefficients
/// of `(1+t)^{n_a} (1-t)^{n_b}`, which obey the three-term recurrence
/// `(m+1) S_{m+1} = (n_a - n_b) S_m - (N - m + 1) S_{m-1}` with exact
/// integer division.
fn balanced_splitter_column(n_a: u64, n_b: u64) -> Vec<BigInt> {
    let n = n_a + n_b;
    let mut column = Vec::with_capacity(n as usize + 1);
    column.push(BigInt::one());
    if n == 0 {
        return column;
    }
    let drift = BigInt::from(n_a as i64 - n_b as i64);
    column.push(drift.clone());
    for m in 1..n {
        let next = (&drift * &column[m as usize]
            - &column[m as usize - 1] * BigInt::from(n - m + 1))
            / BigInt::from(m + 1);
        column.push(next);
    }
    column
}

/// Closed form for the balanced input `n_a = n_b = N/2`; exactly zero for odd `m_a`.
pub fn balanced_amplitude(n_total: u32, m_a: u32) -> Result<SignedLogValue> {
    if !n_total.is_multiple_of(2) {
        return domain(format!("balanced input needs even N, got {n_total}"));
    }
    if m_a > n_total {
        return domain(format!("m_a = {m_a} exceeds N = {n_total}"));
    }
    if !m_a.is_multiple_of(2) {
        return Ok(SignedLogValue::ZERO);
    }
    let (m, n) = (u64::from(m_a), u64::from(n_total));
    let log_mag = 0.5 * (log_factorial(m) + log_factorial(n - m))
        - 0.5 * n as f64 * LN_2
        - log_factorial(m / 2)
        - log_factorial((n - m) / 2);
    Ok(SignedLogValue::from_log(log_mag).alternate(i64::from(m_a / 2)))
}

/// Amplitude for a negative input imbalance through the port-reflection
/// rule: evaluate the mirrored input and multiply by `(-1)^{m_a}`.
pub fn negative_y_amplitude(input: &FockInput, m_a: u32) -> Result<SignedLogValue> {
    if input.ny() >= 0 {
        return domain(format!(
            "reflection rule applies to negative imbalance, got Ny = {}",
            input.ny()
        ));
    }
    Ok(exact_amplitude(&input.mirrored(), m_a)?.alternate(i64::from(m_a)))
}

fn require_balanced_splitter(input: &FockInput, engine: Engine) -> Result<()> {
    if !input.is_balanced_splitter() {
        return Err(Error::Usage(format!(
            "engine {engine} is only defined for the 50:50 splitter"
        )));
    }
    Ok(())
}

/// Approximate engines diverge at `|x| = 1`; keep the tagged infinity.
fn edge_tolerant(value: Result<SignedLogValue>, sign: i8) -> Result<SignedLogValue> {
    match value {
        Err(Error::Domain(_)) => Ok(SignedLogValue::new(sign, f64::INFINITY)),
        other => other,
    }
}

/// Fills all `N + 1` output points with the selected engine.
pub fn distribution(input: &FockInput, engine: Engine) -> Result<DistributionSeries> {
    let n = input.n_total;
    let amplitudes: Vec<SignedLogValue> = match engine {
        Engine::Exact => {
            if input.is_balanced_splitter() {
                let column = balanced_splitter_column(u64::from(input.n_a), u64::from(input.n_b()));
                column
                    .par_iter()
                    .enumerate()
                    .map(|(m, s)| from_balanced_sum(input, m as u64, s))
                    .collect()
            } else {
                let tables = AngleTables::new(n, input.xi);
                (0..=u64::from(n))
                    .into_par_iter()
                    .map(|m| tables.amplitude(input, m))
                    .collect()
            }
        }
        Engine::BalancedClosed | Engine::BalancedStirling => {
            require_balanced_splitter(input, engine)?;
            if input.ny() != 0 {
                return Err(Error::Usage(format!(
                    "engine {engine} needs a balanced input, got Ny = {}",
                    input.ny()
                )));
            }
            (0..=n)
                .map(|m| match engine {
                    Engine::BalancedClosed => balanced_amplitude(n, m),
                    _ => edge_tolerant(
                        asymptotic::balanced_asymptotic(n, m),
                        if m % 4 == 0 { 1 } else { -1 },
                    ),
                })
                .collect::<Result<_>>()?
        }
        Engine::ImbalancedEq17 | Engine::LargeNEq18 => {
            require_balanced_splitter(input, engine)?;
            let ny = input.ny();
            (0..=n)
                .into_par_iter()
                .map(|m| {
                    let value = if engine == Engine::ImbalancedEq17 {
                        asymptotic::imbalanced_amplitude_eq17(n, ny.abs(), m)?
                    } else {
                        asymptotic::large_n_amplitude_eq18(n, ny.abs(), m)?
                    };
                    Ok(if ny < 0 {
                        value.alternate(i64::from(m))
                    } else {
                        value
                    })
                })
                .collect::<Result<_>>()?
        }
        Engine::Oracle => oracle::oracle_evolve(n, input.n_a, input.xi)?
            .into_iter()
            .map(SignedLogValue::from_real)
            .collect(),
    };
    let within_validity = match engine {
        Engine::ImbalancedEq17 | Engine::LargeNEq18 => {
            asymptotic::within_imbalance_validity(n, input.ny())
        }
        _ => true,
    };
    Ok(DistributionSeries {
        input: *input,
        engine,
        points: amplitudes
            .into_iter()
            .enumerate()
            .map(|(m, a)| OutputPoint::new(n, m as u32, a))
            .collect(),
        within_validity,
    })
}
