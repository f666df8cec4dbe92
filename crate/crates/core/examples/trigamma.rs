//! Trigamma values, closed-form identities, and the recurrence.
//!
//! ```bash
//! cargo run --example trigamma
//! ```

use robust_bc::numerics::trigamma;

fn main() -> robust_bc::Result<()> {
    let pi2 = std::f64::consts::PI.powi(2);
    println!("{:>8}  {:>22}  {:>22}", "x", "trigamma(x)", "closed form");
    for (x, exact) in [(0.5, pi2 / 2.0), (1.0, pi2 / 6.0), (2.0, pi2 / 6.0 - 1.0)] {
        println!("{x:>8}  {:>22.17}  {exact:>22.17}", trigamma(x)?);
    }

    println!("\nrecurrence psi1(x) - psi1(x+1) - 1/x^2:");
    for x in [0.01, 0.3, 3.7, 11.5, 250.0] {
        let r = trigamma(x)? - trigamma(x + 1.0)? - 1.0 / (x * x);
        println!("  x = {x:>6}: {r:+.3e}");
    }

    // psi1(d/2) is the variance of log chi-square(d); it anchors the DoF estimator
    println!("\nvariance of log chi2(d):");
    for d in [1usize, 2, 10, 100, 10_000] {
        println!("  d = {d:>6}: {:.6e}", trigamma(d as f64 / 2.0)?);
    }

    if let Err(e) = trigamma(0.0) {
        println!("\ntrigamma(0) -> {e}");
    }
    Ok(())
}
