//! Overflow-safe arithmetic: signed log-domain values, log-factorials and
//! log-binomials, compensated accumulation, and an extended-precision binary
//! float used where a signed sum cancels too many digits for `f64`.
//!
//! Amplitudes at a few hundred photons are ratios of numbers near `10^600`,
//! so nothing in this crate multiplies raw factorials.

use std::cmp::Ordering;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::ops::{Div, Mul, Neg};
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Float, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// Complex scalar used for the contour-integral family and its roots.
pub type ComplexValue = num_complex::Complex64;

/// A real number stored as a sign in `{-1, 0, +1}` and the natural log of
/// its magnitude. The magnitude is meaningless when the sign is zero.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SignedLogValue {
    sign: i8,
    log_mag: f64,
}

impl SignedLogValue {
    pub const ZERO: Self = Self {
        sign: 0,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: Self = Self {
        sign: 1,
        log_mag: 0.0,
    };

    /// Builds a value from its parts. A zero sign or a `-inf` magnitude both
    /// collapse to [`SignedLogValue::ZERO`].
    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                sign: sign.signum(),
                log_mag,
            }
        }
    }

    /// Positive value `e^log_mag`.
    pub fn from_log(log_mag: f64) -> Self {
        Self::new(1, log_mag)
    }

    pub fn from_real(value: f64) -> Self {
        if value == 0.0 {
            Self::ZERO
        } else {
            Self::new(if value > 0.0 { 1 } else { -1 }, value.abs().ln())
        }
    }

    pub fn to_real(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_mag.exp(),
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn log_mag(self) -> f64 {
        self.log_mag
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// True for the tagged divergent values produced at formula edges.
    pub fn is_infinite(self) -> bool {
        self.sign != 0 && self.log_mag == f64::INFINITY
    }

    pub fn abs(self) -> Self {
        Self::new(self.sign.abs(), self.log_mag)
    }

    /// Square, always non-negative.
    pub fn square(self) -> Self {
        Self::new(self.sign.abs(), 2.0 * self.log_mag)
    }

    /// Square root of the magnitude; the sign is dropped.
    pub fn sqrt_abs(self) -> Self {
        Self::new(self.sign.abs(), 0.5 * self.log_mag)
    }

    /// Integer power with the convention `0^0 = 1`.
    pub fn powi(self, k: u64) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && k % 2 == 1 { -1 } else { 1 };
        Self::new(sign, k as f64 * self.log_mag)
    }

    /// Multiplies by the positive factor `e^log_factor`.
    pub fn scale_log(self, log_factor: f64) -> Self {
        Self::new(self.sign, self.log_mag + log_factor)
    }

    /// Multiplies by `(-1)^k`.
    pub fn alternate(self, k: i64) -> Self {
        if k.rem_euclid(2) == 1 {
            -self
        } else {
            self
        }
    }

    /// `|a - b| / max(|a|, |b|)` evaluated without leaving the log domain
    /// when the signs agree. Zero when both are zero.
    pub fn relative_difference(self, other: Self) -> f64 {
        match (self.sign, other.sign) {
            (0, 0) => 0.0,
            (0, _) | (_, 0) => 1.0,
            (a, b) if a != b => 2.0,
            _ => {
                let (hi, lo) = if self.log_mag >= other.log_mag {
                    (self.log_mag, other.log_mag)
                } else {
                    (other.log_mag, self.log_mag)
                };
                -(lo - hi).exp_m1()
            }
        }
    }
}

impl Default for SignedLogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Mul for SignedLogValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.sign * rhs.sign, self.log_mag + rhs.log_mag)
    }
}

impl Div for SignedLogValue {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return Self::ZERO;
        }
        if rhs.sign == 0 {
            return Self::new(self.sign, f64::INFINITY);
        }
        Self::new(self.sign * rhs.sign, self.log_mag - rhs.log_mag)
    }
}

impl Neg for SignedLogValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.sign, self.log_mag)
    }
}

impl fmt::Display for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            1 => write!(f, "+e^{}", self.log_mag),
            _ => write!(f, "-e^{}", self.log_mag),
        }
    }
}

const LOG_FACTORIAL_TABLE_LEN: usize = 1 << 15;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Box<[f64]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LOG_FACTORIAL_TABLE_LEN);
        let mut acc = NeumaierSum::default();
        table.push(0.0);
        for k in 1..LOG_FACTORIAL_TABLE_LEN {
            acc.add((k as f64).ln());
            table.push(acc.total());
        }
        table[1] = 0.0;
        table.into_boxed_slice()
    })
}

/// `ln(k!)`, tabulated for small `k` and from the Stirling series beyond.
pub fn log_factorial(k: u64) -> f64 {
    let table = log_factorial_table();
    if (k as usize) < table.len() {
        return table[k as usize];
    }
    // ln Γ(z) with z = k + 1; the truncated tail is below 1e-30 here.
    let z = k as f64 + 1.0;
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series
}

/// [`log_factorial`] for a signed argument, rejecting negatives.
pub fn log_factorial_checked(k: i64) -> Result<f64> {
    if k < 0 {
        return domain(format!("factorial of negative integer {k}"));
    }
    Ok(log_factorial(k as u64))
}

/// `C(n, k)`; zero when `k` falls outside `0..=n`.
pub fn log_binomial(n: u64, k: i64) -> SignedLogValue {
    if k < 0 || k as u64 > n {
        return SignedLogValue::ZERO;
    }
    let k = k as u64;
    SignedLogValue::from_log(log_factorial(n) - log_factorial(k) - log_factorial(n - k))
}

/// Neumaier's variant of compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Signed sum of log-domain terms: every term is rescaled by the largest
/// magnitude and the rescaled reals are accumulated with compensation.
pub fn signed_log_sum<I>(terms: I) -> SignedLogValue
where
    I: IntoIterator<Item = SignedLogValue>,
{
    let terms: Vec<SignedLogValue> = terms.into_iter().filter(|t| !t.is_zero()).collect();
    let Some(max) = terms
        .iter()
        .map(|t| t.log_mag)
        .max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
    else {
        return SignedLogValue::ZERO;
    };
    if max.is_infinite() {
        let signs: i32 = terms
            .iter()
            .filter(|t| t.log_mag == max)
            .map(|t| i32::from(t.sign))
            .sum();
        return SignedLogValue::new(signs.signum() as i8, max);
    }
    let mut acc = NeumaierSum::default();
    for t in &terms {
        acc.add(f64::from(t.sign) * (t.log_mag - max).exp());
    }
    SignedLogValue::from_real(acc.total()).scale_log(max)
}

/// `ln |m|` for an arbitrary-size integer, with its sign.
pub fn bigint_to_signed_log(value: &BigInt) -> SignedLogValue {
    let sign = match value.sign() {
        Sign::NoSign => return SignedLogValue::ZERO,
        Sign::Plus => 1,
        Sign::Minus => -1,
    };
    SignedLogValue::new(sign, biguint_ln(value.magnitude()))
}

fn biguint_ln(m: &BigUint) -> f64 {
    let bits = m.bits();
    if bits <= 64 {
        return (m.to_u64().unwrap_or(0) as f64).ln();
    }
    let shift = bits - 64;
    let top = (m >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).ln() + shift as f64 * LN_2
}

/// Binary floating point with an arbitrary-length mantissa: the value is
/// `mant * 2^exp`. Every operation that can lengthen the mantissa takes the
/// number of bits to keep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtFloat {
    mant: BigInt,
    exp: i64,
}

impl ExtFloat {
    pub fn zero() -> Self {
        Self {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            mant: BigInt::from(1u8),
            exp: 0,
        }
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(value: f64) -> Self {
        assert!(
            value.is_finite(),
            "ExtFloat::from_f64 on non-finite {value}"
        );
        if value == 0.0 {
            return Self::zero();
        }
        let (mantissa, exponent, sign) = value.integer_decode();
        let mut mant = BigInt::from(mantissa);
        if sign < 0 {
            mant = -mant;
        }
        Self {
            mant,
            exp: i64::from(exponent),
        }
    }

    pub fn from_biguint(value: &BigUint) -> Self {
        Self {
            mant: BigInt::from(value.clone()),
            exp: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    fn rounded(mut self, prec: u64) -> Self {
        let bits = self.mant.bits();
        if bits > prec {
            let shift = bits - prec;
            self.mant >>= shift;
            self.exp += shift as i64;
        }
        self
    }

    /// Position just above the most significant bit.
    fn top(&self) -> i64 {
        self.exp + self.mant.bits() as i64
    }

    pub fn mul(&self, other: &Self, prec: u64) -> Self {
        Self {
            mant: &self.mant * &other.mant,
            exp: self.exp + other.exp,
        }
        .rounded(prec)
    }

    pub fn add(&self, other: &Self, prec: u64) -> Self {
        if self.is_zero() {
            return other.clone().rounded(prec);
        }
        if other.is_zero() {
            return self.clone().rounded(prec);
        }
        let (hi, lo) = if self.top() >= other.top() {
            (self, other)
        } else {
            (other, self)
        };
        if lo.top() < hi.top() - prec as i64 - 64 {
            return hi.clone().rounded(prec);
        }
        let (big, small) = if hi.exp >= lo.exp { (hi, lo) } else { (lo, hi) };
        let shift = (big.exp - small.exp) as u64;
        Self {
            mant: (&big.mant << shift) + &small.mant,
            exp: small.exp,
        }
        .rounded(prec)
    }

    pub fn neg(&self) -> Self {
        Self {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    /// Integer power by repeated squaring, `0^0 = 1`.
    pub fn powi(&self, mut k: u64, prec: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base, prec);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base, prec);
            }
        }
        acc
    }

    pub fn to_signed_log(&self) -> SignedLogValue {
        let shift = self.mant.bits().saturating_sub(64);
        let top = (self.mant.magnitude() >> shift).to_f64().unwrap_or(0.0);
        let e = self.exp + shift as i64;
        let signed = |v: f64| {
            if self.mant.sign() == Sign::Minus {
                -v
            } else {
                v
            }
        };
        if (-1000..=950).contains(&e) {
            // 2^e in two steps stays inside the normal range
            let half = e / 2;
            let value = top * 2f64.powi(half as i32) * 2f64.powi((e - half) as i32);
            if value.is_normal() || value == 0.0 {
                return SignedLogValue::from_real(signed(value));
            }
        }
        SignedLogValue::from_real(signed(1.0)).scale_log(top.ln() + e as f64 * LN_2)
    }
}

/// `sin(k θ) / sin θ`, with the removable singularity at `θ ∈ πℤ` replaced
/// by its limit `k cos(θ)^(k-1)`.
pub fn sine_ratio(k: i64, theta: f64) -> f64 {
    let turns = theta / PI;
    let nearest = turns.round();
    if (turns - nearest).abs() < 1e-13 {
        let cos_sign = if (nearest as i64).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let parity = if (k - 1).rem_euclid(2) == 0 {
            1.0
        } else {
            cos_sign
        };
        return k as f64 * parity;
    }
    (k as f64 * theta).sin() / theta.sin()
}
