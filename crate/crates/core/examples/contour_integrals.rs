//! The contour integrals I_n by quadrature, by the three-term recursion and
//! by their large-N approximation with and without the e^{n²/N} factor.

use beamsplit::contour::{i0_closed, i1_closed, in_approx, in_quadrature, in_recursion};

fn main() -> beamsplit::Result<()> {
    let (n, x) = (40u32, 0.2);
    let rec = in_recursion(n, x, i0_closed(n, x)?, i1_closed(n, x)?, 10)?;
    println!("N = {n}, x = {x}");
    for (k, r) in rec.iter().enumerate() {
        let q = in_quadrature(n, k as i64, x)?.value;
        println!("  I_{k:<2} quadrature {q:+.10e}  recursion {r:+.10e}");
    }

    for n in [100u32, 400, 1600] {
        let k = (f64::from(n).sqrt() as i64) & !1;
        let q = in_quadrature(n, k, 0.0)?.value;
        let plain = in_approx(n, k, 0.0, false)?.value;
        let corrected = in_approx(n, k, 0.0, true)?.value;
        println!(
            "N = {n:>4}, n = {k:>2}: relative error uncorrected {:.3e}, corrected {:.3e}",
            (plain - q).norm() / q.norm(),
            (corrected - q).norm() / q.norm()
        );
    }
    Ok(())
}
