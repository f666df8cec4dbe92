//! Numeric building blocks shared by the optimizers, the policy network and
//! the experiment harness: the trigamma function, a seeded generator with
//! Gaussian and Student-t samplers, and central finite differences.

mod random;
mod special;

pub use random::{sample_gaussian, sample_student_t, Rng};
pub use special::trigamma;

/// Default step for [`finite_difference_gradient`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference gradient of `f` at `x`.
///
/// Each coordinate costs two evaluations of `f`.
pub fn finite_difference_gradient<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(h > 0.0, "finite difference step must be positive, got {h}");
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let fp = f(&probe);
            probe[i] = orig - h;
            let fm = f(&probe);
            probe[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}
