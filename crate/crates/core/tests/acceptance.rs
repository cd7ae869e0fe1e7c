//! Acceptance suite. Each criterion prints one PASS/FAIL line followed by
//! the measured quantities; the process exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use beamsplit::asymptotic::{arcsine_envelope, balanced_asymptotic, half_branch_lobes};
use beamsplit::contour::{i0_closed, i1_closed, in_approx, in_quadrature, in_recursion};
use beamsplit::exact::{balanced_amplitude, normalized_imbalance};
use beamsplit::oracle::{oracle_check, oracle_check_sizes, ORACLE_TOLERANCE};
use beamsplit::statistics::{
    averaged_distribution_closed, averaged_distribution_direct, correlation_grid_closed,
    correlation_grid_direct, trig_average_identities, variance_functional, AveragingWindow,
    CorrelationSource, Normalization,
};
use beamsplit::{distribution, exact_amplitude, Engine, FockInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.passed &= ok;
        self.details
            .push(format!("{} {detail}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, detail: String) {
        self.details.push(format!("     {detail}"));
    }
}

type Criterion = fn() -> beamsplit::Result<Outcome>;

fn unitarity() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    for n in [2u32, 4, 10, 100, 600, 2000] {
        let mut worst: f64 = 0.0;
        let mut cases = vec![
            (0, FRAC_PI_4),
            (n / 3, FRAC_PI_4),
            (n / 2, FRAC_PI_4),
            (n, FRAC_PI_4),
        ];
        if n <= 600 {
            cases.extend([(n / 2, 0.3), (n / 5, 1.2)]);
        }
        for (n_a, xi) in cases {
            let input = FockInput::new(n, n_a)?.with_xi(xi)?;
            let total = distribution(&input, Engine::Exact)?.total_probability();
            worst = worst.max((total - 1.0).abs());
        }
        out.check(
            worst <= 1e-9,
            format!("N={n}: max |Σ|A|² - 1| = {worst:.3e}"),
        );
    }
    Ok(out)
}

fn hom() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let input = FockInput::new(2, 1)?;
    let a = exact_amplitude(&input, 1)?;
    let point = distribution(&input, Engine::Exact)?.points[1];
    out.check(a.sign() == 0, format!("sign of A(1,1) = {}", a.sign()));
    out.check(
        point.density == 0.0,
        format!("density at x=0 = {}", point.density),
    );
    Ok(out)
}

fn oracle() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let start = Instant::now();
    let report = oracle_check(200)?;
    out.check(
        report.passed,
        format!(
            "ξ=π/4, all N ≤ 200, all n_a: max dev {:.3e} at (N, n_a, m_a) = {:?} over {} entries",
            report.max_deviation, report.worst, report.comparisons
        ),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    let mut comparisons = 0;
    for _ in 0..20 {
        let xi = rng.random_range(0.0..PI);
        let sizes: Vec<u32> = (0..3)
            .map(|_| rng.random_range(1..200))
            .chain([200])
            .collect();
        let r = oracle_check_sizes(&sizes, xi)?;
        worst = worst.max(r.max_deviation);
        comparisons += r.comparisons;
    }
    out.check(
        worst <= ORACLE_TOLERANCE,
        format!("20 random ξ, N=200 plus 3 random N each: max dev {worst:.3e} over {comparisons} entries"),
    );
    let elapsed = start.elapsed();
    out.check(
        elapsed < Duration::from_secs(120),
        format!("runtime {elapsed:.1?}"),
    );
    Ok(out)
}

fn balanced_identity() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let mut worst: f64 = 0.0;
    let mut zero_mismatch = 0;
    let mut points = 0;
    for n in (2..=600u32).step_by(2) {
        let series = distribution(&FockInput::new(n, n / 2)?, Engine::Exact)?;
        for p in &series.points {
            let closed = balanced_amplitude(n, p.m_a)?;
            points += 1;
            if p.amplitude.is_zero() != closed.is_zero() {
                zero_mismatch += 1;
            } else if !closed.is_zero() {
                worst = worst.max(p.amplitude.relative_difference(closed));
            }
        }
    }
    out.check(
        worst <= 1e-10,
        format!("even N ≤ 600, {points} points: max relative difference {worst:.3e}"),
    );
    out.check(
        zero_mismatch == 0,
        format!("zero-set mismatches: {zero_mismatch}"),
    );
    out.note(
        "parity: nonzero amplitudes sit at even m_a (N(1+x)/4 integer); the odd-m_a points \
         vanish identically at the 50:50 splitter"
            .into(),
    );
    let a300 = balanced_amplitude(600, 300)?;
    let a301 = balanced_amplitude(600, 301)?;
    out.note(format!(
        "N=600: A(300) = {:.9}, A(301) = {} (zero), so x=0 lies on the nonvanishing branch",
        a300.to_real(),
        a301.to_real()
    ));
    Ok(out)
}

fn stirling() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let n = 600;
    let (mut amp, mut dens): (f64, f64) = (0.0, 0.0);
    for m in (0..=n).step_by(2) {
        if normalized_imbalance(n, m).abs() > 0.9 {
            continue;
        }
        let exact = balanced_amplitude(n, m)?.to_real();
        let approx = balanced_asymptotic(n, m)?.to_real();
        amp = amp.max(((approx - exact) / exact).abs());
        dens = dens.max(((approx * approx - exact * exact) / (exact * exact)).abs());
    }
    out.check(
        amp <= 0.01,
        format!("N=600, |x| ≤ 0.9: max relative amplitude error {amp:.4e}"),
    );
    out.check(
        dens <= 0.01,
        format!("same points: max relative density error {dens:.4e}"),
    );
    Ok(out)
}

fn imbalanced_series() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let start = Instant::now();
    let n = 600;
    for ny in [0i64, 12, 24] {
        let input = FockInput::from_imbalance(n, ny)?;
        let exact = distribution(&input, Engine::Exact)?;
        let approx = distribution(&input, Engine::ImbalancedEq17)?;
        let (mut pointwise, mut scaled_inner, mut scaled_outer): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut worst_x = 0.0;
        let mut over = 0;
        let mut considered = 0;
        for (e, a) in exact.points.iter().zip(&approx.points) {
            if e.x.abs() >= 1.0 || a.amplitude.is_infinite() {
                continue;
            }
            let envelope = 2.0 * arcsine_envelope(e.x)?;
            let scaled = (a.density - e.density).abs() / envelope;
            if e.x.abs() <= 0.8 {
                scaled_inner = scaled_inner.max(scaled);
                if e.density > 0.0 {
                    considered += 1;
                    let rel = (a.density - e.density).abs() / e.density;
                    if rel > 0.05 {
                        over += 1;
                    }
                    if rel > pointwise {
                        pointwise = rel;
                        worst_x = e.x;
                    }
                }
            } else {
                scaled_outer = scaled_outer.max(scaled);
            }
        }
        out.check(
            pointwise <= 0.05,
            format!(
                "Ny={ny}, |x| ≤ 0.8: max pointwise relative density error {pointwise:.3e} at x={worst_x:.4}, \
                 {over}/{considered} nonzero points above 5%"
            ),
        );
        out.note(format!(
            "Ny={ny}: error relative to the envelope 2P(x): {scaled_inner:.3e} on |x| ≤ 0.8, \
             {scaled_outer:.3e} on |x| > 0.8"
        ));
        let lobes = half_branch_lobes(&exact);
        let lobes_approx = half_branch_lobes(&approx);
        out.check(
            lobes as i64 == ny / 2 && lobes_approx as i64 == ny / 2,
            format!("Ny={ny}: half-branch oscillations exact {lobes}, approximation {lobes_approx}, expected {}", ny / 2),
        );
        if ny == 0 {
            out.note("Ny=0: the approximation coincides with the exact balanced form".into());
            continue;
        }
        out.check(
            scaled_outer > scaled_inner,
            format!("Ny={ny}: error concentrates toward |x| → 1 ({scaled_outer:.3e} > {scaled_inner:.3e})"),
        );
    }
    let elapsed = start.elapsed();
    out.check(
        elapsed < Duration::from_secs(60),
        format!("runtime {elapsed:.1?}"),
    );
    Ok(out)
}

fn contour() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let (mut rec_worst, mut closed_worst): (f64, f64) = (0.0, 0.0);
    let mut rec_count = 0;
    for n in (2..=60u32).step_by(2) {
        let n_max = (n / 4) as usize;
        for m in 0..=n {
            let x = normalized_imbalance(n, m);
            let quad: Vec<_> = (0..=n_max.max(1) as i64)
                .map(|k| in_quadrature(n, k, x))
                .collect::<Result<_, _>>()?;
            for (q, c) in quad.iter().zip([i0_closed(n, x)?, i1_closed(n, x)?]) {
                let scale = c.norm().max(1e-20 * q.abs_integral);
                if scale > 0.0 {
                    closed_worst = closed_worst.max((q.value - c).norm() / scale);
                }
            }
            let rec = in_recursion(n, x, quad[0].value, quad[1].value, n_max)?;
            for (k, r) in rec.iter().enumerate() {
                let q = &quad[k];
                // A structural zero is judged against the largest value the
                // recursion carried on the way to it.
                let scale = if q.value.norm() > 1e-20 * q.abs_integral {
                    q.value.norm()
                } else {
                    rec[..=k].iter().map(|v| v.norm()).fold(0.0, f64::max)
                };
                if scale > 0.0 {
                    rec_worst = rec_worst.max((r - q.value).norm() / scale);
                    rec_count += 1;
                }
            }
        }
    }
    out.check(
        rec_worst <= 1e-8,
        format!("even N ≤ 60, n ≤ N/4, all grid x: recursion vs quadrature max relative {rec_worst:.3e} ({rec_count} values)"),
    );
    out.check(
        closed_worst <= 1e-10,
        format!("closed I_0, I_1 vs quadrature max relative {closed_worst:.3e}"),
    );
    for n in [100u32, 400] {
        let k = (f64::from(n).sqrt().floor()) as i64;
        let k = if k % 2 == 0 { k } else { k - 1 };
        let reference = in_quadrature(n, k, 0.0)?.value;
        let plain = (in_approx(n, k, 0.0, false)?.value - reference).norm() / reference.norm();
        let corrected = (in_approx(n, k, 0.0, true)?.value - reference).norm() / reference.norm();
        out.check(
            corrected < plain,
            format!("N={n}, n={k}, x=0: corrected error {corrected:.3e} < uncorrected {plain:.3e}"),
        );
    }
    Ok(out)
}

fn universality() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let n = 10_000u32;
    let inner: Vec<u32> = (1..n)
        .filter(|&m| normalized_imbalance(n, m).abs() <= 0.8)
        .collect();
    let mut scaled_amplitudes = Vec::new();
    for n_bound in [4u32, 8, 16, 32] {
        let (mut branch_avg, mut amplitude): (f64, f64) = (0.0, 0.0);
        for &m in &inner {
            let x = normalized_imbalance(n, m);
            let p = arcsine_envelope(x)?;
            let here = averaged_distribution_closed(n, n_bound, m, Normalization::Density)?;
            let next = averaged_distribution_closed(n, n_bound, m + 1, Normalization::Density)?;
            let x_next = normalized_imbalance(n, m + 1);
            let mean = 0.5 * (here / p + next / arcsine_envelope(x_next)?);
            branch_avg = branch_avg.max((mean - 1.0).abs());
            if m + 1 == n {
                break;
            }
            amplitude = amplitude.max((here / p - 1.0).abs());
        }
        let scaled = amplitude * f64::from(n_bound + 1);
        scaled_amplitudes.push(scaled);
        // Adjacent points sit on opposite branches but 2/N apart, so the pair
        // mean carries the grid-step variation of P and of the oscillation.
        let step = 10.0 * 2.0 / f64::from(n);
        out.check(
            branch_avg <= step,
            format!("n={n_bound}: adjacent-branch mean of closed form / P(x) deviates by {branch_avg:.3e} (grid bound {step:.1e})"),
        );
        out.check(
            scaled <= 1.0 / 0.6,
            format!("n={n_bound}: oscillation amplitude {amplitude:.4e}, times (n+1) = {scaled:.4} (bound 1/√(1-0.8²))"),
        );
        let direct = averaged_distribution_direct(
            n,
            &AveragingWindow::uniform(n_bound)?,
            Normalization::Density,
        )?;
        let mut closed_vs_direct: f64 = 0.0;
        for &m in &inner {
            let c = averaged_distribution_closed(n, n_bound, m, Normalization::Density)?;
            closed_vs_direct =
                closed_vs_direct.max((direct.points[m as usize].density - c).abs() / c);
        }
        out.note(format!("n={n_bound}: exact ensemble average vs closed form max relative {closed_vs_direct:.3e}"));
    }
    let (lo, hi) = scaled_amplitudes
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
    out.check(
        hi / lo <= 1.5,
        format!(
            "(n+1) × amplitude stays within a factor {:.3} across n ∈ {{4, 8, 16, 32}}",
            hi / lo
        ),
    );
    Ok(out)
}

fn correlation() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let (n, n_bound) = (200u32, 8u32);
    let window = AveragingWindow::uniform(n_bound)?;
    let interior: Vec<u32> = (1..n).collect();
    let closed = correlation_grid_closed(n, n_bound, &interior, Normalization::Density)?;
    let direct = correlation_grid_direct(n, &window, &interior, Normalization::Density)?;
    let inner = |x: f64, xp: f64| x.abs() <= 0.8 && xp.abs() <= 0.8;
    let frob = closed.relative_frobenius(&direct, inner);
    out.check(
        frob <= 0.1,
        format!("N={n}, n={n_bound}, |x|,|x'| ≤ 0.8: relative Frobenius {frob:.4e}"),
    );
    let everywhere = closed.relative_frobenius(&direct, |x, xp| x.abs() < 1.0 && xp.abs() < 1.0);
    out.note(format!(
        "all interior points: relative Frobenius {everywhere:.4e}"
    ));
    let ones = vec![1.0; n as usize + 1];
    let direct_var = variance_functional(
        &ones,
        n,
        &window,
        CorrelationSource::Direct,
        Normalization::Density,
    )?;
    out.check(
        direct_var.abs() <= 1e-9,
        format!("constant observable, ensemble covariance: {direct_var:.3e}"),
    );
    let closed_var = variance_functional(
        &ones,
        n,
        &window,
        CorrelationSource::Closed,
        Normalization::Density,
    )?;
    out.note(format!(
        "constant observable, closed form over interior points: {closed_var:.3e}"
    ));
    Ok(out)
}

fn trig_identities() -> beamsplit::Result<Outcome> {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let phi = rng.random_range(0.0..PI);
        for n_bound in (0..=40u32).step_by(2) {
            let (sin_closed, cos_closed) = trig_average_identities(n_bound, phi)?;
            let half = i64::from(n_bound / 2);
            let count = f64::from(n_bound + 1);
            let (mut s, mut c) = (0.0, 0.0);
            for k in -half..=half {
                let kp = k as f64 * phi;
                s += (kp.sin() / phi.sin()).powi(2);
                c += kp.cos().powi(2);
            }
            let (s, c) = (s / count, c / count);
            worst = worst.max((s - sin_closed).abs() / s.abs().max(1.0));
            worst = worst.max((c - cos_closed).abs());
        }
    }
    out.check(
        worst <= 1e-12,
        format!("100 random φ, even n ≤ 40: max deviation {worst:.3e}"),
    );
    Ok(out)
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("unitarity", unitarity),
        ("HOM suppression", hom),
        ("oracle equivalence", oracle),
        ("balanced closed form", balanced_identity),
        ("Stirling accuracy", stirling),
        ("imbalanced distribution at N=600", imbalanced_series),
        ("contour integrals", contour),
        ("arcsine universality", universality),
        ("correlation", correlation),
        ("trigonometric averages", trig_identities),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| {
            let mut o = Outcome::new();
            o.check(false, format!("error: {e}"));
            o
        });
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2}: {verdict}  {name}  ({:.1?})",
            i + 1,
            start.elapsed()
        );
        for d in &outcome.details {
            println!("      {d}");
        }
        failures += usize::from(!outcome.passed);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
