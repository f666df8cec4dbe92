//! Backpropagation through the policy network against central differences.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use robust_bc::nn::{Architecture, PolicyNet};
use robust_bc::numerics::{finite_difference_gradient, Rng, DEFAULT_FD_STEP};

fn main() -> robust_bc::Result<()> {
    let mut rng = Rng::new(3);
    let arch = Architecture::with_hidden(4, 2, vec![8, 8]);
    println!("{} parameters in {:?}", arch.parameter_count(), arch.hidden);

    let net = PolicyNet::new(arch, &mut rng)?;
    let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..8)
        .map(|_| {
            let s = (0..4).map(|_| rng.standard_normal()).collect();
            let a = (0..2).map(|_| rng.standard_normal()).collect();
            (s, a)
        })
        .collect();
    let view: Vec<(&[f64], &[f64])> = batch.iter().map(|(s, a)| (s.as_slice(), a.as_slice())).collect();

    let (loss, grads) = net.backward(&view)?;
    println!("batch NLL {loss:.6}");

    let mut probe = net.clone();
    let numeric = finite_difference_gradient(
        |p| {
            probe.set_flat_params(p).unwrap();
            probe.backward(&view).unwrap().0
        },
        &net.flat_params(),
        DEFAULT_FD_STEP,
    );

    let mut offset = 0;
    for (name, g) in grads.names.iter().zip(&grads.values) {
        let fd = &numeric[offset..offset + g.len()];
        offset += g.len();
        let err: f64 = g.iter().zip(fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        println!("{name:<18} |g| {norm:>10.4e}  rel err {:.2e}", err / norm.max(1e-12));
    }
    Ok(())
}
