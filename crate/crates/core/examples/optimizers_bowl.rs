//! Adam, t-Adam and At-Adam on a quadratic bowl with contaminated gradients.
//!
//! Loss ½θ², gradient θ. With probability 0.3 each gradient also carries
//! 100 × Cauchy noise. The reported loss is the mean of ½θ² over the last
//! 1000 steps, per seed and as a median over seeds.
//!
//! ```bash
//! cargo run --release --example optimizers_bowl
//! ```

use robust_bc::numerics::{sample_student_t, Rng};
use robust_bc::optim::{OptimConfig, Optimizer};

fn final_loss(cfg: OptimConfig, seed: u64, steps: usize) -> robust_bc::Result<f64> {
    let mut rng = Rng::new(seed);
    let mut opt = Optimizer::new(cfg, [("theta", vec![1.0])])?;
    let mut tail = 0.0;
    for step in 0..steps {
        let theta = opt.slots()[0].value[0];
        let mut g = theta;
        if rng.bernoulli(0.3) {
            g += 100.0 * sample_student_t(&mut rng, 1.0, 1)?[0];
        }
        opt.slots_mut()[0].set_grad(vec![g])?;
        opt.step()?;
        if step >= steps - 1000 {
            let theta = opt.slots()[0].value[0];
            tail += 0.5 * theta * theta;
        }
    }
    Ok(tail / 1000.0)
}

fn main() -> robust_bc::Result<()> {
    let arms = [
        ("adam", OptimConfig::adam()),
        ("t_adam k=1", OptimConfig::t_adam(1.0)),
        ("at_adam 0.9", OptimConfig::at_adam(0.9)),
        ("at_adam 0.999", OptimConfig::at_adam(0.999)),
    ];
    let seeds = 1..=5;
    println!("{:<14} {}", "optimizer", "trailing loss per seed         median");
    for (name, cfg) in arms {
        let mut losses = Vec::new();
        for seed in seeds.clone() {
            losses.push(final_loss(cfg.clone().with_lr(0.1), seed, 20_000)?);
        }
        let row: Vec<String> = losses.iter().map(|l| format!("{l:.1e}")).collect();
        losses.sort_by(f64::total_cmp);
        println!("{name:<14} {}  {:.2e}", row.join(" "), losses[losses.len() / 2]);
    }
    Ok(())
}
