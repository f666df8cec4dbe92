//! A Student-t moving average next to a plain EMA on a stream with outliers.
//!
//! The stream is N(1, 0.1²) with a 1000 spike every 25 samples. The EMA jumps
//! with every spike; the t-momentum down-weights them through `w`.
//!
//! ```bash
//! cargo run --example t_momentum_outliers
//! ```

use robust_bc::moments::{EmaState, TMomentState, DEFAULT_EPS};
use robust_bc::numerics::Rng;

fn main() -> robust_bc::Result<()> {
    let mut rng = Rng::new(42);
    let beta = 0.9;
    let mut ema = EmaState::new(1, beta);
    let mut t_mom = TMomentState::new(1, beta, DEFAULT_EPS).with_warmup(10);

    println!("{:>4} {:>10} {:>10} {:>10} {:>8}", "step", "sample", "ema", "t-mom", "w");
    for step in 1..=100 {
        let g = if step % 25 == 0 { 1000.0 } else { 1.0 + 0.1 * rng.standard_normal() };
        ema.update(&[g])?;
        // k = 1 in one dimension: nu = 1
        let info = t_mom.update(&[g], 1.0)?;
        t_mom.update_variance(&[g], 0.999)?;
        if step % 25 == 0 || step % 25 == 1 || step <= 3 {
            println!(
                "{step:>4} {g:>10.3} {:>10.3} {:>10.3} {:>8.2e}",
                ema.bias_corrected()[0],
                t_mom.bias_corrected()[0],
                info.w
            );
        }
    }
    Ok(())
}
