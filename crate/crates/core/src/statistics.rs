//! Averages over an ensemble of input imbalances, the two-point correlation
//! of the output density, and the variance of diagonal observables.
//!
//! Densities use `P_N(x) = (N/2)|A|²` unless [`Normalization::HalfDensity`]
//! is selected, which reproduces the `N/4` prefactor of the literal ensemble
//! average. Under the default the branch-averaged result tends to the
//! arcsine law and each ensemble member carries unit mass on the grid.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotic::{phase_angle, BranchTag};
use crate::error::{domain, Error, Result};
use crate::exact::{distribution, normalized_imbalance, Engine, FockInput};
use crate::numerics::{sine_ratio, NeumaierSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    GaussianPoissonian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `(N/2)|A|²`, unit mass per member.
    #[default]
    Density,
    /// `(N/4)|A|²`.
    HalfDensity,
}

impl Normalization {
    fn scale(self) -> f64 {
        match self {
            Normalization::Density => 1.0,
            Normalization::HalfDensity => 0.5,
        }
    }
}

/// Ensemble of even imbalances `|Ny| ≤ n_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AveragingWindow {
    pub n_bound: u32,
    pub weighting: Weighting,
}

impl AveragingWindow {
    pub fn new(n_bound: u32, weighting: Weighting) -> Result<Self> {
        if !n_bound.is_multiple_of(2) {
            return domain(format!("n_bound must be even, got {n_bound}"));
        }
        Ok(Self { n_bound, weighting })
    }

    pub fn uniform(n_bound: u32) -> Result<Self> {
        Self::new(n_bound, Weighting::Uniform)
    }

    /// Members `(Ny, weight)` with weights summing to one. Gaussian weights
    /// are `∝ exp(-(Ny)²/(4N))`, truncated at `|Ny| ≤ 6√N`.
    pub fn members(&self, n_total: u32) -> Result<Vec<(i64, f64)>> {
        if !n_total.is_multiple_of(2) {
            return domain(format!("ensemble averages need even N, got {n_total}"));
        }
        if self.n_bound >= n_total && n_total > 0 {
            return domain(format!(
                "n_bound = {} must be below N = {n_total}",
                self.n_bound
            ));
        }
        let bound = i64::from(self.n_bound);
        let n = f64::from(n_total);
        let mut members: Vec<(i64, f64)> = (-bound..=bound)
            .step_by(2)
            .filter_map(|ny| match self.weighting {
                Weighting::Uniform => Some((ny, 1.0)),
                Weighting::GaussianPoissonian => ((ny.abs() as f64) <= 6.0 * n.sqrt())
                    .then(|| (ny, (-((ny * ny) as f64) / (4.0 * n)).exp())),
            })
            .collect();
        let total: f64 = members.iter().map(|m| m.1).sum();
        for m in &mut members {
            m.1 /= total;
        }
        Ok(members)
    }
}

fn check_sub_poissonian(n_total: u32, n_bound: u32) -> Result<()> {
    if !n_bound.is_multiple_of(2) {
        return domain(format!("n_bound must be even, got {n_bound}"));
    }
    let limit = f64::from(n_total).sqrt().floor() as u32;
    if n_bound > limit {
        return Err(Error::Regime(format!(
            "closed form needs n_bound ≤ ⌊√N⌋ = {limit}, got {n_bound}"
        )));
    }
    Ok(())
}

fn grid_x(n_total: u32, m_a: u32) -> Result<f64> {
    if !n_total.is_multiple_of(2) || m_a > n_total {
        return domain(format!(
            "point m_a = {m_a} is not on the even-N grid of N = {n_total}"
        ));
    }
    if m_a == 0 || m_a == n_total {
        return domain("closed form diverges at |x| = 1");
    }
    Ok(normalized_imbalance(n_total, m_a))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AveragedPoint {
    pub m_a: u32,
    pub x: f64,
    pub density: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragedDistribution {
    pub n_total: u32,
    pub window: AveragingWindow,
    pub normalization: Normalization,
    pub points: Vec<AveragedPoint>,
    /// `Σ density · 2/N`.
    pub total_mass: f64,
}

fn member_densities(n_total: u32, ny: i64) -> Result<Vec<f64>> {
    // The 50:50 output density is even in Ny, so one sign suffices.
    let input = FockInput::from_imbalance(n_total, ny.abs())?;
    Ok(distribution(&input, Engine::Exact)?.densities())
}

fn ensemble(n_total: u32, window: &AveragingWindow) -> Result<Vec<(f64, Vec<f64>)>> {
    let members = window.members(n_total)?;
    let mut distinct: Vec<i64> = members.iter().map(|m| m.0.abs()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let tables: Vec<(i64, Vec<f64>)> = distinct
        .par_iter()
        .map(|&ny| Ok((ny, member_densities(n_total, ny)?)))
        .collect::<Result<_>>()?;
    Ok(members
        .iter()
        .map(|&(ny, w)| {
            let table = &tables.iter().find(|t| t.0 == ny.abs()).unwrap().1;
            (w, table.clone())
        })
        .collect())
}

/// Weighted ensemble average of exact densities.
pub fn averaged_distribution_direct(
    n_total: u32,
    window: &AveragingWindow,
    normalization: Normalization,
) -> Result<AveragedDistribution> {
    let members = ensemble(n_total, window)?;
    let mut values = vec![0.0; n_total as usize + 1];
    for (w, densities) in &members {
        for (v, d) in values.iter_mut().zip(densities) {
            *v += w * d * normalization.scale();
        }
    }
    let points: Vec<AveragedPoint> = values
        .iter()
        .enumerate()
        .map(|(m, &density)| AveragedPoint {
            m_a: m as u32,
            x: normalized_imbalance(n_total, m as u32),
            density,
        })
        .collect();
    let mut mass = NeumaierSum::default();
    for p in &points {
        mass.add(p.density * 2.0 / f64::from(n_total));
    }
    Ok(AveragedDistribution {
        n_total,
        window: *window,
        normalization,
        points,
        total_mass: mass.total(),
    })
}

/// `sin((n+1)φ) / ((n+1) sin φ)`.
fn oscillation(n_bound: u32, phi: f64) -> f64 {
    let k = i64::from(n_bound) + 1;
    sine_ratio(k, phi) / k as f64
}

/// Branch-resolved closed form of the uniform ensemble average:
/// `(1/π)(1 ∓ sin((n+1)φ)/((n+1) sin φ)) / √(1-x²)`, minus on the
/// half-integer branch. Halved under [`Normalization::HalfDensity`].
pub fn averaged_distribution_closed(
    n_total: u32,
    n_bound: u32,
    m_a: u32,
    normalization: Normalization,
) -> Result<f64> {
    check_sub_poissonian(n_total, n_bound)?;
    let x = grid_x(n_total, m_a)?;
    let s = oscillation(n_bound, phase_angle(x));
    let branch = match BranchTag::of_point(m_a) {
        BranchTag::HalfInteger => 1.0 - s,
        _ => 1.0 + s,
    };
    Ok(normalization.scale() * branch / (PI * ((1.0 - x) * (1.0 + x)).sqrt()))
}

/// Uniform averages over `k = -n/2..=n/2` of `sin²(kφ)/sin²φ` and
/// `cos²(kφ)`, in closed form:
/// `(1 - D)/(2 sin²φ)` and `(1 + D)/2` with `D = sin((n+1)φ)/((n+1) sin φ)`.
/// At `sin φ = 0` the first is its limit `n(n+2)/12`.
pub fn trig_average_identities(n_bound: u32, phi: f64) -> Result<(f64, f64)> {
    if !n_bound.is_multiple_of(2) {
        return domain(format!("n_bound must be even, got {n_bound}"));
    }
    let d = oscillation(n_bound, phi);
    // For even n both averages are π-periodic and even in φ.
    let r = phi.rem_euclid(PI);
    let delta = r.min(PI - r);
    let sin_avg = if delta == 0.0 {
        let n = f64::from(n_bound);
        n * (n + 2.0) / 12.0
    } else {
        let k = f64::from(n_bound) + 1.0;
        let sin = delta.sin();
        let one_minus_d = (x_minus_sin(k * delta) - k * x_minus_sin(delta)) / (k * sin);
        one_minus_d / (2.0 * sin * sin)
    };
    Ok((sin_avg, (1.0 + d) / 2.0))
}

/// `x - sin x` without cancellation for small `x`.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return x - x.sin();
    }
    let x2 = x * x;
    let mut term = x * x2 / 6.0;
    let mut sum = 0.0f64;
    let mut k = 3.0;
    while term.abs() > 1e-18 * sum.abs() {
        sum += term;
        term *= -x2 / ((k + 1.0) * (k + 2.0));
        k += 2.0;
    }
    sum
}

/// `+1` when both points lie on the same branch, `-1` when on opposite
/// branches. With `N` even every grid point lies on a branch, so `0` does
/// not occur here; see [`epsilon_from_x`] for off-grid arguments.
pub fn epsilon_parity(n_total: u32, m_a: u32, m_a_prime: u32) -> Result<i8> {
    if !n_total.is_multiple_of(2) {
        return domain(format!("parity mask needs even N, got {n_total}"));
    }
    Ok(if (m_a + m_a_prime).is_multiple_of(2) {
        1
    } else {
        -1
    })
}

/// Parity mask for arbitrary real `x, x'`; zero when either lies on neither
/// branch.
pub fn epsilon_from_x(n_total: u32, x: f64, x_prime: f64) -> i8 {
    match (
        BranchTag::of_x(n_total, x),
        BranchTag::of_x(n_total, x_prime),
    ) {
        (BranchTag::Vanishing, _) | (_, BranchTag::Vanishing) => 0,
        (a, b) if a == b => 1,
        _ => -1,
    }
}

fn closed_correlation_value(n_bound: u32, x: f64, xp: f64, eps: i8, scale: f64) -> f64 {
    if eps == 0 {
        return 0.0;
    }
    let k = i64::from(n_bound) + 1;
    let (phi, phip) = (phase_angle(x), phase_angle(xp));
    let kf = k as f64;
    let bracket = sine_ratio(k, phi + phip) + sine_ratio(k, (phi - phip).abs())
        - 2.0 / kf * (sine_ratio(k, phi) * sine_ratio(k, phip));
    let root = (((1.0 - x) * (1.0 + x)) * ((1.0 - xp) * (1.0 + xp))).sqrt();
    scale * f64::from(eps) / (PI * PI * root) / (8.0 * kf) * bracket
}

/// Closed-form covariance `⟨P(x)P(x')⟩ - ⟨P(x)⟩⟨P(x')⟩` over the uniform
/// ensemble `|Ny| ≤ n_bound`.
pub fn correlation(
    n_total: u32,
    n_bound: u32,
    m_a: u32,
    m_a_prime: u32,
    normalization: Normalization,
) -> Result<f64> {
    check_sub_poissonian(n_total, n_bound)?;
    let (x, xp) = (grid_x(n_total, m_a)?, grid_x(n_total, m_a_prime)?);
    let eps = epsilon_parity(n_total, m_a, m_a_prime)?;
    let s = normalization.scale();
    Ok(closed_correlation_value(n_bound, x, xp, eps, 4.0 * s * s))
}

/// Where correlation values come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationSource {
    Closed,
    Direct,
}

/// Correlation over a set of grid points, stored row-major.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationGrid {
    pub n_total: u32,
    pub n_bound: u32,
    pub source: CorrelationSource,
    pub m_values: Vec<u32>,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub epsilon_mask: Vec<i8>,
}

impl CorrelationGrid {
    pub fn size(&self) -> usize {
        self.m_values.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    /// `Σ_{ij} f_i f_j C_ij Δx²` with `Δx = 2/N`.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let dx = 2.0 / f64::from(self.n_total);
        let mut acc = NeumaierSum::default();
        for i in 0..self.size() {
            for j in 0..self.size() {
                acc.add(f[i] * f[j] * self.at(i, j));
            }
        }
        acc.total() * dx * dx
    }

    /// `||A - B||_F / ||B||_F` over entries where `keep(x, x')` holds.
    pub fn relative_frobenius(
        &self,
        reference: &CorrelationGrid,
        keep: impl Fn(f64, f64) -> bool,
    ) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.size() {
            for j in 0..self.size() {
                if keep(self.xs[i], self.xs[j]) {
                    let (a, b) = (self.at(i, j), reference.at(i, j));
                    num += (a - b) * (a - b);
                    den += b * b;
                }
            }
        }
        (num / den).sqrt()
    }
}

/// Closed-form grid over interior points `m_values`.
pub fn correlation_grid_closed(
    n_total: u32,
    n_bound: u32,
    m_values: &[u32],
    normalization: Normalization,
) -> Result<CorrelationGrid> {
    let rows: Vec<Vec<f64>> = m_values
        .par_iter()
        .map(|&m| {
            m_values
                .iter()
                .map(|&mp| correlation(n_total, n_bound, m, mp, normalization))
                .collect()
        })
        .collect::<Result<_>>()?;
    finish_grid(n_total, n_bound, CorrelationSource::Closed, m_values, rows)
}

/// Covariance of exact densities across the ensemble.
pub fn correlation_grid_direct(
    n_total: u32,
    window: &AveragingWindow,
    m_values: &[u32],
    normalization: Normalization,
) -> Result<CorrelationGrid> {
    let members = ensemble(n_total, window)?;
    let s = normalization.scale();
    let pick = |d: &Vec<f64>| -> Vec<f64> { m_values.iter().map(|&m| s * d[m as usize]).collect() };
    let picked: Vec<(f64, Vec<f64>)> = members.iter().map(|(w, d)| (*w, pick(d))).collect();
    let k = m_values.len();
    let mut mean = vec![0.0; k];
    for (w, d) in &picked {
        for i in 0..k {
            mean[i] += w * d[i];
        }
    }
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| {
            (0..k)
                .map(|j| {
                    picked
                        .iter()
                        .map(|(w, d)| w * (d[i] - mean[i]) * (d[j] - mean[j]))
                        .sum()
                })
                .collect()
        })
        .collect();
    finish_grid(
        n_total,
        window.n_bound,
        CorrelationSource::Direct,
        m_values,
        rows,
    )
}

fn finish_grid(
    n_total: u32,
    n_bound: u32,
    source: CorrelationSource,
    m_values: &[u32],
    rows: Vec<Vec<f64>>,
) -> Result<CorrelationGrid> {
    let mut epsilon_mask = Vec::with_capacity(m_values.len() * m_values.len());
    for &m in m_values {
        for &mp in m_values {
            epsilon_mask.push(epsilon_parity(n_total, m, mp)?);
        }
    }
    Ok(CorrelationGrid {
        n_total,
        n_bound,
        source,
        m_values: m_values.to_vec(),
        xs: m_values
            .iter()
            .map(|&m| normalized_imbalance(n_total, m))
            .collect(),
        values: rows.into_iter().flatten().collect(),
        epsilon_mask,
    })
}

/// `δ²f = Σ_{x,x'} f(x) f(x') C(x,x') Δx Δx'` for `f` tabulated on
/// `m_a = 0..=N`. The closed source omits the two edge points where it
/// diverges.
pub fn variance_functional(
    f: &[f64],
    n_total: u32,
    window: &AveragingWindow,
    source: CorrelationSource,
    normalization: Normalization,
) -> Result<f64> {
    if f.len() != n_total as usize + 1 {
        return Err(Error::Usage(format!(
            "observable has {} values, grid has {}",
            f.len(),
            n_total + 1
        )));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return domain("observable must be finite on the grid");
    }
    let (grid, picked): (CorrelationGrid, Vec<f64>) = match source {
        CorrelationSource::Direct => {
            let ms: Vec<u32> = (0..=n_total).collect();
            (
                correlation_grid_direct(n_total, window, &ms, normalization)?,
                f.to_vec(),
            )
        }
        CorrelationSource::Closed => {
            if window.weighting != Weighting::Uniform {
                return Err(Error::Usage(
                    "closed correlation assumes uniform weighting".into(),
                ));
            }
            let ms: Vec<u32> = (1..n_total).collect();
            let picked = ms.iter().map(|&m| f[m as usize]).collect();
            (
                correlation_grid_closed(n_total, window.n_bound, &ms, normalization)?,
                picked,
            )
        }
    };
    Ok(grid.quadratic_form(&picked))
}
