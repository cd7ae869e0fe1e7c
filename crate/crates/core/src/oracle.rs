//! Brute-force ground truth. The two-mode generator `a†b - b†a` is built as a
//! dense matrix in the `|k, N-k>` basis and exponentiated numerically. Nothing
//! here touches the combinatorial sums of [`crate::exact`].
//!
//! The generator is `G = i S⁻¹ T S` with `S = diag(iᵏ)` and `T` real
//! symmetric tridiagonal, so `exp(-ξG)` follows from the eigenpairs of `T`:
//! `U_jk = Re[i^{k-j} Σ_l Q_jl Q_kl e^{-iξλ_l}]`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::exact::{distribution, Engine, FockInput, BALANCED_XI};

/// Largest photon number the dense oracle accepts.
pub const MAX_DIMENSION_N: u32 = 2000;

/// Tridiagonal generator with `G[k+1][k] = √((k+1)(N-k))` and
/// `G[k][k+1] = -G[k+1][k]`.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    n_total: u32,
    coupling: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn new(n_total: u32) -> Result<Self> {
        if n_total > MAX_DIMENSION_N {
            return Err(Error::Resource(format!(
                "dense oracle limited to N ≤ {MAX_DIMENSION_N}, got {n_total}"
            )));
        }
        let n = f64::from(n_total);
        let coupling = (0..n_total)
            .map(|k| ((f64::from(k) + 1.0) * (n - f64::from(k))).sqrt())
            .collect();
        Ok(Self { n_total, coupling })
    }

    pub fn dimension(&self) -> usize {
        self.n_total as usize + 1
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let d = self.dimension();
        let mut g = DMatrix::zeros(d, d);
        for (k, &c) in self.coupling.iter().enumerate() {
            g[(k + 1, k)] = c;
            g[(k, k + 1)] = -c;
        }
        g
    }

    fn symmetrized(&self) -> DMatrix<f64> {
        let d = self.dimension();
        let mut t = DMatrix::zeros(d, d);
        for (k, &c) in self.coupling.iter().enumerate() {
            t[(k + 1, k)] = c;
            t[(k, k + 1)] = c;
        }
        t
    }

    fn spectrum(&self) -> Option<Spectrum> {
        SymmetricEigen::try_new(self.symmetrized(), 1e-15, 10_000).map(|e| Spectrum {
            vectors: e.eigenvectors,
            values: e.eigenvalues.iter().copied().collect(),
        })
    }

    /// `exp(-ξG)` by eigen-decomposition, or by scaling and squaring when the
    /// eigen-solver does not converge.
    pub fn propagator(&self, xi: f64) -> DMatrix<f64> {
        match self.spectrum() {
            Some(s) => {
                let d = self.dimension();
                DMatrix::from_fn(d, d, |j, k| s.entry(j, k, xi))
            }
            None => self.propagator_taylor(xi),
        }
    }

    /// `exp(-ξG)` by Taylor series with scaling and squaring.
    pub fn propagator_taylor(&self, xi: f64) -> DMatrix<f64> {
        let a = self.dense() * (-xi);
        let norm = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) * 3.0;
        let squarings = if norm > 0.25 {
            (norm / 0.25).log2().ceil() as u32
        } else {
            0
        };
        let a = a / f64::from(2u32).powi(squarings as i32);
        let d = self.dimension();
        let mut result = DMatrix::identity(d, d);
        let mut term = DMatrix::identity(d, d);
        for k in 1..=30 {
            term = &term * &a / f64::from(k);
            result += &term;
            if term.amax() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            result = &result * &result;
        }
        result
    }
}

struct Spectrum {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
}

impl Spectrum {
    fn entry(&self, j: usize, k: usize, xi: f64) -> f64 {
        let (mut c, mut s) = (0.0, 0.0);
        for (l, &lambda) in self.values.iter().enumerate() {
            let w = self.vectors[(j, l)] * self.vectors[(k, l)];
            let (sin, cos) = (xi * lambda).sin_cos();
            c += w * cos;
            s += w * sin;
        }
        match (k + 4 - j % 4) % 4 {
            0 => c,
            1 => s,
            2 => -c,
            _ => -s,
        }
    }

    fn column(&self, n_a: usize, xi: f64) -> Vec<f64> {
        (0..self.values.len())
            .map(|j| self.entry(j, n_a, xi))
            .collect()
    }
}

/// `exp(-ξG) e_{n_a}`, indexed by `m_a = 0..=N`.
pub fn oracle_evolve(n_total: u32, n_a: u32, xi: f64) -> Result<Vec<f64>> {
    if n_a > n_total {
        return domain(format!("n_a = {n_a} exceeds N = {n_total}"));
    }
    let generator = GeneratorMatrix::new(n_total)?;
    Ok(match generator.spectrum() {
        Some(s) => s.column(n_a as usize, xi),
        None => generator
            .propagator_taylor(xi)
            .column(n_a as usize)
            .iter()
            .copied()
            .collect(),
    })
}

/// Largest entrywise `||A_oracle| - |A_exact||` over a family of inputs.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub xi: f64,
    pub sizes: Vec<u32>,
    pub max_deviation: f64,
    /// `(N, n_a, m_a)` where the deviation peaks.
    pub worst: (u32, u32, u32),
    pub comparisons: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Compares oracle and exact magnitudes for every `N ≤ n_max` and every
/// `n_a` at the 50:50 splitter.
pub fn oracle_check(n_max: u32) -> Result<OracleReport> {
    oracle_check_sizes(&(0..=n_max).collect::<Vec<_>>(), BALANCED_XI)
}

/// Same comparison at an arbitrary angle over the listed sizes.
pub fn oracle_check_sizes(sizes: &[u32], xi: f64) -> Result<OracleReport> {
    if let Some(&n) = sizes.iter().find(|&&n| n > MAX_DIMENSION_N) {
        return Err(Error::Resource(format!(
            "dense oracle limited to N ≤ {MAX_DIMENSION_N}, got {n}"
        )));
    }
    let per_input: Vec<(f64, (u32, u32, u32), usize)> = sizes
        .par_iter()
        .map(|&n| -> Result<Vec<_>> {
            let generator = GeneratorMatrix::new(n)?;
            let spectrum = generator.spectrum();
            let taylor = spectrum.is_none().then(|| generator.propagator_taylor(xi));
            (0..=n)
                .into_par_iter()
                .map(|n_a| -> Result<_> {
                    let oracle: Vec<f64> = match (&spectrum, &taylor) {
                        (Some(s), _) => s.column(n_a as usize, xi),
                        (None, Some(u)) => u.column(n_a as usize).iter().copied().collect(),
                        (None, None) => unreachable!(),
                    };
                    let input = FockInput::new(n, n_a)?.with_xi(xi)?;
                    let exact = distribution(&input, Engine::Exact)?;
                    let mut worst = (0.0, (n, n_a, 0));
                    for (p, o) in exact.points.iter().zip(&oracle) {
                        let dev = (p.amplitude.abs().to_real() - o.abs()).abs();
                        if dev > worst.0 {
                            worst = (dev, (n, n_a, p.m_a));
                        }
                    }
                    Ok((worst.0, worst.1, oracle.len()))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut report = OracleReport {
        xi,
        sizes: sizes.to_vec(),
        max_deviation: 0.0,
        worst: (0, 0, 0),
        comparisons: 0,
        tolerance: ORACLE_TOLERANCE,
        passed: true,
    };
    for (dev, at, count) in per_input {
        report.comparisons += count;
        if dev > report.max_deviation {
            report.max_deviation = dev;
            report.worst = at;
        }
    }
    report.passed = report.max_deviation <= ORACLE_TOLERANCE;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    use super::*;
    use crate::exact::exact_amplitude;

    #[test]
    fn identity_at_zero_angle() {
        let v = oracle_evolve(7, 3, 0.0).unwrap();
        for (m, a) in v.iter().enumerate() {
            let want = if m == 3 { 1.0 } else { 0.0 };
            assert!((a - want).abs() < 1e-14);
        }
    }

    #[test]
    fn hom_triple() {
        let v = oracle_evolve(2, 1, FRAC_PI_4).unwrap();
        assert!((v[0].abs() - FRAC_1_SQRT_2).abs() < 1e-13);
        assert!(v[1].abs() < 1e-12);
        assert!((v[2].abs() - FRAC_1_SQRT_2).abs() < 1e-13);
        assert!((v[0] + v[2]).abs() < 1e-13);
    }

    #[test]
    fn four_photon_probabilities() {
        let v = oracle_evolve(4, 2, FRAC_PI_4).unwrap();
        let want = [0.375, 0.0, 0.25, 0.0, 0.375];
        for (a, w) in v.iter().zip(want) {
            assert!((a * a - w).abs() < 1e-13);
        }
    }

    #[test]
    fn unitarity() {
        for &(n, n_a, xi) in &[
            (10, 3, 0.3),
            (100, 50, FRAC_PI_4),
            (301, 7, 1.2),
            (600, 300, 2.9),
        ] {
            let v = oracle_evolve(n, n_a, xi).unwrap();
            let norm: f64 = v.iter().map(|a| a * a).sum();
            assert!((norm - 1.0).abs() < 1e-12, "N={n}: {norm}");
        }
    }

    #[test]
    fn taylor_fallback_agrees() {
        let g = GeneratorMatrix::new(30).unwrap();
        let a = g.propagator(0.7);
        let b = g.propagator_taylor(0.7);
        assert!((a - b).amax() < 1e-11);
    }

    #[test]
    fn composition() {
        let g = GeneratorMatrix::new(40).unwrap();
        let (x1, x2) = (0.37, 1.1);
        let lhs = g.propagator(x2) * g.propagator(x1);
        let rhs = g.propagator(x1 + x2);
        assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn dimension_bound() {
        assert!(matches!(
            oracle_evolve(2001, 0, 0.1),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            oracle_check_sizes(&[3, 2001], 0.1),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn signs_match_exact_after_calibration() {
        for n in 1..=60 {
            for n_a in [0, n / 3, n / 2, n] {
                for xi in [FRAC_PI_4, 0.3] {
                    let oracle = oracle_evolve(n, n_a, xi).unwrap();
                    let input = FockInput::new(n, n_a).unwrap().with_xi(xi).unwrap();
                    let exact: Vec<f64> = (0..=n)
                        .map(|m| exact_amplitude(&input, m).unwrap().to_real())
                        .collect();
                    let r = (0..=n as usize)
                        .max_by(|&a, &b| exact[a].abs().total_cmp(&exact[b].abs()))
                        .unwrap();
                    let phase = (oracle[r] / exact[r]).signum();
                    for m in 0..=n as usize {
                        if exact[m].abs() > 1e-9 {
                            assert_eq!(
                                (phase * oracle[m]).signum(),
                                exact[m].signum(),
                                "N={n} n_a={n_a} m={m}"
                            );
                        }
                        assert!((phase * oracle[m] - exact[m]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn small_check_passes() {
        let report = oracle_check(20).unwrap();
        assert!(report.passed, "{report:?}");
        let report = oracle_check(2).unwrap();
        assert!(report.max_deviation < 1e-13);
    }
}
