//! Averaging the balanced comb over a window of input imbalances washes out
//! the branch structure and leaves the arcsine law.

use beamsplit::asymptotic::arcsine_envelope;
use beamsplit::statistics::{
    averaged_distribution_closed, averaged_distribution_direct, AveragingWindow, Normalization,
    Weighting,
};

fn main() -> beamsplit::Result<()> {
    let n = 2500;
    for n_bound in [4u32, 16, 50] {
        let avg = averaged_distribution_direct(
            n,
            &AveragingWindow::uniform(n_bound)?,
            Normalization::Density,
        )?;
        println!(
            "uniform window n = {n_bound}, total mass {:.12}",
            avg.total_mass
        );
        for m in [250usize, 251, 1250, 1251, 2000] {
            let p = avg.points[m];
            let closed = averaged_distribution_closed(n, n_bound, p.m_a, Normalization::Density)?;
            println!(
                "  x = {:+.4}: direct {:.6}  closed {:.6}  arcsine {:.6}",
                p.x,
                p.density,
                closed,
                arcsine_envelope(p.x)?
            );
        }
    }
    let gaussian = AveragingWindow::new(300, Weighting::GaussianPoissonian)?;
    let avg = averaged_distribution_direct(n, &gaussian, Normalization::Density)?;
    let worst = avg
        .points
        .iter()
        .filter(|p| p.x.abs() <= 0.8)
        .map(|p| (p.density / arcsine_envelope(p.x).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    println!("Gaussian window: max relative deviation from arcsine on |x| ≤ 0.8 = {worst:.3e}");
    Ok(())
}
