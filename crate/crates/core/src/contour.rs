//! The contour-integral family
//!
//! ```text
//! I_n = 2^N ∫_0^{2π} dθ (sin θ/2)^{N/2-n} (cos θ/2)^{N/2+n} e^{-i(Nx/2)θ}
//! ```
//!
//! which generates the output amplitudes for input imbalance `Ny = 2n`.
//! The integral carries no `1/2π`; the closed forms of `I_0` and `I_1`
//! include the `2π` explicitly.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numerics::{log_binomial, ComplexValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InMethod {
    Quadrature,
    Recursion,
    ApproxOrder0,
    ApproxCorrected,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InEvaluation {
    pub n_total: u32,
    pub n_index: i64,
    pub x: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub value: ComplexValue,
    /// `∫|integrand|` for quadrature results, zero otherwise. Absolute
    /// rounding error scales with it.
    pub abs_integral: f64,
    pub method: InMethod,
    /// `Nx/2` is not an integer, so the integrand is not periodic and the
    /// trapezoid rule loses its spectral accuracy.
    pub off_grid: bool,
    /// `|x| = 1`, where the two characteristic roots coincide.
    pub confluent: bool,
}

fn serialize_complex<S: serde::Serializer>(
    z: &ComplexValue,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

const MIN_NODES: usize = 256;
const CONVERGENCE: f64 = 1e-10;

fn require_even(n_total: u32) -> Result<()> {
    if !n_total.is_multiple_of(2) {
        return domain(format!("I_n needs even N, got {n_total}"));
    }
    Ok(())
}

fn near_integer(v: f64) -> Option<i64> {
    let r = v.round();
    ((v - r).abs() < 1e-9).then_some(r as i64)
}

fn i_pow(k: i64) -> ComplexValue {
    match k.rem_euclid(4) {
        0 => ComplexValue::new(1.0, 0.0),
        1 => ComplexValue::new(0.0, 1.0),
        2 => ComplexValue::new(-1.0, 0.0),
        _ => ComplexValue::new(0.0, -1.0),
    }
}

fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(-1)^{lower} C(upper, lower)` when `lower` is an integer, else zero.
fn signed_binomial(upper: u64, lower: f64) -> f64 {
    match near_integer(lower) {
        Some(k) => parity(k) * log_binomial(upper, k).to_real(),
        None => 0.0,
    }
}

/// `I_0 = 2π i^{N/2} (-1)^{N(1+x)/4} C(N/2, N(1+x)/4)`, zero off the
/// integer branch.
pub fn i0_closed(n_total: u32, x: f64) -> Result<ComplexValue> {
    require_even(n_total)?;
    let half = u64::from(n_total / 2);
    let n = f64::from(n_total);
    Ok(i_pow(half as i64) * (TAU * signed_binomial(half, n * (1.0 + x) / 4.0)))
}

/// `I_1 = 2π i^{1-N/2} [2 (-1)^{N(1-x)/4-1/2} C(N/2-1, N(1+x)/4-1/2)
///                      + x (-1)^{N(1-x)/4} C(N/2, N(1+x)/4)]`.
pub fn i1_closed(n_total: u32, x: f64) -> Result<ComplexValue> {
    require_even(n_total)?;
    if n_total == 0 {
        return Ok(ComplexValue::new(0.0, 0.0));
    }
    let half = i64::from(n_total / 2);
    let n = f64::from(n_total);
    let first = match near_integer(n * (1.0 + x) / 4.0 - 0.5) {
        Some(k) => {
            let e = near_integer(n * (1.0 - x) / 4.0 - 0.5).unwrap_or(0);
            2.0 * parity(e) * log_binomial(half as u64 - 1, k).to_real()
        }
        None => 0.0,
    };
    let second = match near_integer(n * (1.0 + x) / 4.0) {
        Some(k) => {
            let e = near_integer(n * (1.0 - x) / 4.0).unwrap_or(0);
            x * parity(e) * log_binomial(half as u64, k).to_real()
        }
        None => 0.0,
    };
    Ok(i_pow(1 - half) * (TAU * (first + second)))
}

/// Double-double number: an unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };

    fn new(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Self {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Self {
            hi: s,
            lo: b - (s - a),
        }
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Self {
            hi: p,
            lo: a.mul_add(b, -p),
        }
    }

    fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let r = self - Self::two_prod(q1, d);
        let q2 = r.hi / d;
        let r = r - Self::two_prod(q2, d);
        Self::quick_two_sum(q1, q2) + Self::new(r.hi / d)
    }

    /// Exact multiplication by `2^k`.
    fn ldexp(self, k: i64) -> Self {
        let mut v = self;
        let mut k = k;
        while k != 0 {
            let step = k.clamp(-1000, 1000);
            let f = 2f64.powi(step as i32);
            v = Self {
                hi: v.hi * f,
                lo: v.lo * f,
            };
            k -= step;
        }
        v
    }

    /// Binary exponent `e` with `|hi| · 2^-e ∈ [0.5, 1)`.
    fn exponent(self) -> i64 {
        if self.hi == 0.0 || !self.hi.is_finite() {
            return 0;
        }
        let bits = ((self.hi.to_bits() >> 52) & 0x7ff) as i64;
        if bits == 0 {
            Self::new(self.hi * 2f64.powi(64)).exponent() - 64
        } else {
            bits - 1022
        }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let r = Dd::quick_two_sum(s.hi, s.lo + t.hi);
        Dd::quick_two_sum(r.hi, r.lo + t.lo)
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = Dd::two_prod(self.hi, o.hi);
        Dd::quick_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }
}

/// `m · 2^e` with `m` normalized, so long products neither overflow nor
/// underflow.
#[derive(Clone, Copy, Debug)]
struct Scaled {
    m: Dd,
    e: i64,
}

impl Scaled {
    fn from_dd(v: Dd) -> Self {
        let e = v.exponent();
        Self { m: v.ldexp(-e), e }
    }

    fn mul(self, o: Scaled) -> Self {
        let p = Self::from_dd(self.m * o.m);
        Self {
            m: p.m,
            e: p.e + self.e + o.e,
        }
    }

    fn powu(base: Dd, mut k: u64) -> Self {
        let mut acc = Self::from_dd(Dd::new(1.0));
        let mut b = Self::from_dd(base);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(b);
            }
            b = b.mul(b);
            k >>= 1;
        }
        acc
    }
}

/// `(cos r, sin r)` by Taylor series, `|r| ≤ π/4`.
fn sincos_small(r: Dd) -> (Dd, Dd) {
    let r2 = r * r;
    let (mut s_term, mut c_term) = (r, Dd::new(1.0));
    let (mut s, mut c) = (r, Dd::new(1.0));
    for i in 1..=15 {
        let k = 2.0 * f64::from(i);
        s_term = -(s_term * r2).div_f64(k * (k + 1.0));
        c_term = -(c_term * r2).div_f64((k - 1.0) * k);
        s = s + s_term;
        c = c + c_term;
    }
    (c, s)
}

/// `e^{iπj/m}` for even `m`, reduced to the first octant by symmetry.
fn unit_root(j: i64, m: i64) -> (Dd, Dd) {
    let j = j.rem_euclid(2 * m);
    if j >= m {
        let (c, s) = unit_root(j - m, m);
        return (-c, -s);
    }
    if 2 * j > m {
        let (c, s) = unit_root(m - j, m);
        return (-c, s);
    }
    if 4 * j > m {
        let (c, s) = unit_root(m / 2 - j, m);
        return (s, c);
    }
    sincos_small((Dd::PI * Dd::new(j as f64)).div_f64(m as f64))
}

type RootTable = Arc<Vec<(Dd, Dd)>>;

/// Roots `e^{iπj/m}` for `j = 0..2m`, cached per `m`.
fn root_table(m: usize) -> RootTable {
    static CACHE: OnceLock<Mutex<HashMap<usize, RootTable>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("root cache").get(&m) {
        return t.clone();
    }
    let table: Arc<Vec<(Dd, Dd)>> =
        Arc::new((0..2 * m as i64).map(|j| unit_root(j, m as i64)).collect());
    cache.lock().expect("root cache").insert(m, table.clone());
    table
}

struct Integrand {
    n_total: u32,
    a: u64,
    b: u64,
    /// `Nx/2` when it is an integer.
    frequency: Option<i64>,
    nx_half: f64,
}

struct TrapezoidSum {
    value: ComplexValue,
    /// `h Σ |f(θ_k)|`, the size of the largest possible rounding error.
    abs_sum: f64,
}

impl Integrand {
    /// Trapezoid rule on `m` nodes; nodes `θ_k = 2πk/m` put the half angle
    /// at `πk/m`, an entry of the root table.
    fn trapezoid(&self, m: usize) -> TrapezoidSum {
        let table = root_table(m);
        let terms: Vec<(Scaled, Dd, Dd)> = (0..m)
            .map(|k| {
                let (cos, sin) = table[k];
                let mag = Scaled::powu(sin, self.a).mul(Scaled::powu(cos, self.b));
                let (pc, ps) = match self.frequency {
                    Some(f) => {
                        let (c, s) = table[(2 * f * k as i64).rem_euclid(2 * m as i64) as usize];
                        (c, -s)
                    }
                    None => {
                        let (s, c) = (-self.nx_half * TAU * k as f64 / m as f64).sin_cos();
                        (Dd::new(c), Dd::new(s))
                    }
                };
                (mag, pc, ps)
            })
            .collect();
        let top = terms
            .iter()
            .filter(|t| t.0.m.hi != 0.0)
            .map(|t| t.0.e)
            .max()
            .unwrap_or(0);
        let (mut re, mut im, mut abs) = (Dd::default(), Dd::default(), 0.0);
        for (mag, pc, ps) in &terms {
            let v = mag.m.ldexp(mag.e - top);
            re = re + v * *pc;
            im = im + v * *ps;
            abs += v.hi.abs();
        }
        let h = TAU / m as f64;
        let shift = top + i64::from(self.n_total);
        let scale = |d: Dd| d.ldexp(shift).to_f64() * h;
        TrapezoidSum {
            value: ComplexValue::new(scale(re), scale(im)),
            abs_sum: scale(Dd::new(abs)),
        }
    }
}

/// Periodic trapezoid rule with `max(4N, 256)` nodes and one doubling,
/// accumulated in double-double arithmetic so that the cancellation between
/// nodes of size `2^{N/2}` leaves the result accurate to near `f64` precision.
pub fn in_quadrature(n_total: u32, n: i64, x: f64) -> Result<InEvaluation> {
    require_even(n_total)?;
    let half = i64::from(n_total / 2);
    if n.abs() > half {
        return domain(format!("|n| = {} exceeds N/2 = {half}", n.abs()));
    }
    let nx_half = f64::from(n_total) * x / 2.0;
    let frequency = near_integer(nx_half);
    let integrand = Integrand {
        n_total,
        a: (half - n) as u64,
        b: (half + n) as u64,
        frequency,
        nx_half,
    };
    let m = (4 * n_total as usize).max(MIN_NODES);
    let coarse = integrand.trapezoid(m);
    let fine = integrand.trapezoid(2 * m);
    let diff = (fine.value - coarse.value).norm();
    let floor = 1e-24 * fine.abs_sum;
    if frequency.is_some() && diff > CONVERGENCE * fine.value.norm() && diff > floor {
        return Err(Error::Numerical(format!(
            "I_{n} quadrature did not converge at N = {n_total}, x = {x}: change {diff:e}"
        )));
    }
    Ok(InEvaluation {
        n_total,
        n_index: n,
        x,
        value: fine.value,
        abs_integral: fine.abs_sum,
        method: InMethod::Quadrature,
        off_grid: frequency.is_none(),
        confluent: x.abs() == 1.0,
    })
}

/// `I_0..=I_{n_max}` from the forward recursion
/// `I_{n+2} = [(N/2+n+1) I_n + iNx I_{n+1}] / (N/2-n-1)`.
///
/// The step producing `I_{N/2+1}` would divide by zero; `n_max` above `N/2`
/// is a range error.
pub fn in_recursion(
    n_total: u32,
    x: f64,
    i0: ComplexValue,
    i1: ComplexValue,
    n_max: usize,
) -> Result<Vec<ComplexValue>> {
    require_even(n_total)?;
    let half = f64::from(n_total / 2);
    if n_max as f64 > half {
        return Err(Error::Range(format!(
            "recursion reaches a zero denominator beyond n = {half}, requested {n_max}"
        )));
    }
    let mut out = vec![i0];
    if n_max >= 1 {
        out.push(i1);
    }
    let inx = ComplexValue::new(0.0, f64::from(n_total) * x);
    while out.len() <= n_max {
        let n = (out.len() - 2) as f64;
        let next =
            ((half + n + 1.0) * out[out.len() - 2] + inx * out[out.len() - 1]) / (half - n - 1.0);
        out.push(next);
    }
    Ok(out)
}

/// `U_n = (pⁿ - qⁿ)/(p - q)` for the roots `p, q = ix ± √(1-x²)`, with
/// `U_n = n p^{n-1}` when they coincide.
fn chebyshev_like(n: i64, x: f64) -> ComplexValue {
    let root = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let p = ComplexValue::new(root, x);
    if root == 0.0 {
        return n as f64 * p.powi(n as i32 - 1);
    }
    let q = ComplexValue::new(-root, x);
    (p.powi(n as i32) - q.powi(n as i32)) / (p - q)
}

/// Solution of the large-N recursion, `I_n ≈ U_n I_1 + U_{n-1} I_0`,
/// optionally multiplied by `e^{n²/N}`.
pub fn in_approx(n_total: u32, n: i64, x: f64, corrected: bool) -> Result<InEvaluation> {
    require_even(n_total)?;
    if n < 0 {
        return domain(format!("approximation needs n ≥ 0, got {n}"));
    }
    if x.abs() > 1.0 {
        return domain(format!("|x| = {} exceeds 1", x.abs()));
    }
    let (i0, i1) = (i0_closed(n_total, x)?, i1_closed(n_total, x)?);
    let mut value = match n {
        0 => i0,
        1 => i1,
        _ => chebyshev_like(n, x) * i1 + chebyshev_like(n - 1, x) * i0,
    };
    if corrected && n_total > 0 {
        value *= ((n * n) as f64 / f64::from(n_total)).exp();
    }
    Ok(InEvaluation {
        n_total,
        n_index: n,
        x,
        value,
        abs_integral: 0.0,
        method: if corrected {
            InMethod::ApproxCorrected
        } else {
            InMethod::ApproxOrder0
        },
        off_grid: near_integer(f64::from(n_total) * x / 2.0).is_none(),
        confluent: x.abs() == 1.0,
    })
}

/// Residual of `(N/2-n-1) I_{n+2} - (N/2+n+1) I_n - iNx I_{n+1}` relative to
/// the largest of its three terms. Terms below the rounding floor of their
/// quadratures (`1e-20 ∫|integrand|`) count as exact zeros.
pub fn recursion_residual(n_total: u32, x: f64, n: i64, values: &[InEvaluation; 3]) -> f64 {
    let half = f64::from(n_total / 2);
    let nf = n as f64;
    let coefficients = [
        ComplexValue::new(-(half + nf + 1.0), 0.0),
        ComplexValue::new(0.0, -f64::from(n_total) * x),
        ComplexValue::new(half - nf - 1.0, 0.0),
    ];
    let terms: Vec<ComplexValue> = coefficients
        .iter()
        .zip(values)
        .map(|(c, v)| c * v.value)
        .collect();
    let largest = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let floor = coefficients
        .iter()
        .zip(values)
        .map(|(c, v)| c.norm() * v.abs_integral * 1e-20)
        .fold(0.0, f64::max);
    let scale = largest.max(floor);
    if scale == 0.0 {
        return 0.0;
    }
    terms.iter().sum::<ComplexValue>().norm() / scale
}
