//! Two-point correlation of the output density across an ensemble of input
//! imbalances, and the variance it implies for an observable.

use beamsplit::statistics::{
    correlation_grid_closed, correlation_grid_direct, variance_functional, AveragingWindow,
    CorrelationSource, Normalization,
};

fn main() -> beamsplit::Result<()> {
    let (n, n_bound) = (200u32, 8u32);
    let window = AveragingWindow::uniform(n_bound)?;
    let ms: Vec<u32> = (1..n).collect();
    let closed = correlation_grid_closed(n, n_bound, &ms, Normalization::Density)?;
    let direct = correlation_grid_direct(n, &window, &ms, Normalization::Density)?;
    let inner = |x: f64, xp: f64| x.abs() <= 0.8 && xp.abs() <= 0.8;
    println!(
        "N = {n}, n = {n_bound}: closed vs ensemble covariance, relative Frobenius {:.3e}",
        closed.relative_frobenius(&direct, inner)
    );
    for (i, j) in [(99, 99), (99, 100), (49, 149), (49, 120)] {
        println!(
            "  C({:+.2}, {:+.2}) closed {:+.5e}  ensemble {:+.5e}",
            closed.xs[i],
            closed.xs[j],
            closed.at(i, j),
            direct.at(i, j)
        );
    }

    let x2: Vec<f64> = (0..=n)
        .map(|m| {
            let x = (2.0 * f64::from(m) - f64::from(n)) / f64::from(n);
            if x.abs() <= 0.8 {
                x * x
            } else {
                0.0
            }
        })
        .collect();
    for source in [CorrelationSource::Closed, CorrelationSource::Direct] {
        let v = variance_functional(&x2, n, &window, source, Normalization::Density)?;
        println!("  variance of x² on |x| ≤ 0.8 ({source:?}): {v:.4e}");
    }
    Ok(())
}
