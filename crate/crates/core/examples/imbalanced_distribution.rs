//! Small input imbalance splits the comb into two branches. The
//! half-integer branch oscillates Ny/2 times across (-1, 1).

use beamsplit::asymptotic::{arcsine_envelope, half_branch_lobes};
use beamsplit::{distribution, Engine, FockInput};

fn main() -> beamsplit::Result<()> {
    let n = 600;
    for ny in [0i64, 12, 24] {
        let input = FockInput::from_imbalance(n, ny)?;
        let exact = distribution(&input, Engine::Exact)?;
        let approx = distribution(&input, Engine::ImbalancedEq17)?;
        let mut worst: f64 = 0.0;
        for (e, a) in exact.points.iter().zip(&approx.points) {
            if e.x.abs() <= 0.8 {
                worst = worst.max((a.density - e.density).abs() / (2.0 * arcsine_envelope(e.x)?));
            }
        }
        println!(
            "Ny = {ny:>2}: half-branch oscillations {:>2}, max |error| / 2P(x) on |x| ≤ 0.8 = {worst:.3e}",
            half_branch_lobes(&exact)
        );
    }

    let input = FockInput::from_imbalance(2000, 10)?;
    let exact = distribution(&input, Engine::Exact)?;
    let large_n = distribution(&input, Engine::LargeNEq18)?;
    println!("N = 2000, Ny = 10, large-N form:");
    for m in [700usize, 701, 1000, 1001, 1300, 1301] {
        println!(
            "  m_a = {m}: exact {:.6}  large-N {:.6}",
            exact.points[m].density, large_n.points[m].density
        );
    }
    Ok(())
}
