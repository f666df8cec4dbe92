//! Degrees-of-freedom estimation, batch and online.
//!
//! The batch reference recovers nu from Student-t samples. The online
//! estimator, fed squared distances of a Gaussian stream, settles at a large
//! scale factor k; a heavy-tailed stream pulls k down.
//!
//! ```bash
//! cargo run --release --example dof_estimation
//! ```

use robust_bc::dof::{batch_dof_reference, BatchDofSample, DofState};
use robust_bc::numerics::{sample_student_t, Rng};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn main() -> robust_bc::Result<()> {
    let mut rng = Rng::new(7);

    println!("batch estimate from 100000 one-dimensional t samples:");
    for nu in [2.0, 3.0, 5.0, 10.0] {
        let points = (0..100_000)
            .map(|_| sample_student_t(&mut rng, nu, 1))
            .collect::<robust_bc::Result<Vec<_>>>()?;
        let est = batch_dof_reference(&BatchDofSample::new(points)?)?;
        println!("  nu = {nu:>4}: estimate {est:.3}");
    }

    let dim = 100;
    println!("\nonline estimator, d = {dim}, lambda = 0.9, 2000 steps:");
    for (label, nu) in [("gaussian", f64::INFINITY), ("t(3)", 3.0), ("t(1)", 1.0)] {
        let mut dof = DofState::new(dim, 0.9)?;
        let mut ks = Vec::new();
        for _ in 0..2000 {
            let x: Vec<f64> = if nu.is_infinite() {
                (0..dim).map(|_| rng.standard_normal()).collect()
            } else {
                sample_student_t(&mut rng, nu, dim)?
            };
            let distance: f64 = x.iter().map(|v| v * v).sum();
            ks.push(dof.update(distance).k);
        }
        println!("  {label:>8}: median k {:.3}", median(ks));
    }
    Ok(())
}
