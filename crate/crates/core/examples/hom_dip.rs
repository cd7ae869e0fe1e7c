//! Two photons, one per port, never leave through separate ports. Larger
//! balanced inputs keep every odd `m_a` dark.

use beamsplit::{distribution, Engine, FockInput};

fn main() -> beamsplit::Result<()> {
    for n in [2u32, 4, 10] {
        let series = distribution(&FockInput::new(n, n / 2)?, Engine::Exact)?;
        println!("N = {n}, input |{0},{0}>", n / 2);
        for p in &series.points {
            println!(
                "  |{:>2},{:>2}>  amplitude {:+.6}  probability {:.6}",
                p.m_a,
                p.m_b,
                p.amplitude.to_real(),
                p.probability()
            );
        }
        println!("  total {:.15}", series.total_probability());
    }
    Ok(())
}
