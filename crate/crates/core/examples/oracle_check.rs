//! The exact amplitudes against a brute-force matrix exponential of the
//! two-mode generator.

use beamsplit::oracle::{oracle_check, oracle_check_sizes};

fn main() -> beamsplit::Result<()> {
    let n_max = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(60);
    let report = oracle_check(n_max)?;
    println!(
        "50:50, N ≤ {n_max}: {} entries, max deviation {:.3e} at {:?}, passed {}",
        report.comparisons, report.max_deviation, report.worst, report.passed
    );
    for xi in [0.1, 0.6, 1.3, 2.9] {
        let report = oracle_check_sizes(&[7, 31, 120], xi)?;
        println!("ξ = {xi}: max deviation {:.3e}", report.max_deviation);
    }
    Ok(())
}
