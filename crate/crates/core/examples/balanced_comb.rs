//! Balanced input at N = 600: the exact sum, its closed form and the
//! Stirling form against the upper envelope 2/(π√(1-x²)).

use beamsplit::asymptotic::{balanced_asymptotic, balanced_upper_envelope};
use beamsplit::exact::{balanced_amplitude, normalized_imbalance};
use beamsplit::{distribution, Engine, FockInput};

fn main() -> beamsplit::Result<()> {
    let n = 600;
    let exact = distribution(&FockInput::new(n, n / 2)?, Engine::Exact)?;
    println!(
        "{:>5} {:>8} {:>14} {:>14} {:>14} {:>10}",
        "m_a", "x", "exact", "closed", "stirling", "envelope"
    );
    for m in (0..=n).step_by(30).chain([301]) {
        let x = normalized_imbalance(n, m);
        let closed = balanced_amplitude(n, m)?.to_real();
        let stirling = balanced_asymptotic(n, m).map(|a| format!("{:+.6e}", a.to_real()));
        let envelope = balanced_upper_envelope(x).map(|v| format!("{v:.6}"));
        println!(
            "{m:>5} {x:>8.4} {:>+14.6e} {closed:>+14.6e} {:>14} {:>10}",
            exact.points[m as usize].amplitude.to_real(),
            stirling.unwrap_or_else(|_| "edge".into()),
            envelope.unwrap_or_else(|_| "edge".into()),
        );
    }
    let dark = exact
        .points
        .iter()
        .filter(|p| p.amplitude.is_zero())
        .count();
    println!("{dark} of {} outputs vanish exactly, all at odd m_a", n + 1);
    Ok(())
}
