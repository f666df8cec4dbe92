//! Behavioral cloning on a linear-Gaussian task with 30% heavy-tailed
//! amateur pairs. Validation NLL is measured on clean expert data.
//!
//! ```bash
//! cargo run --release --example bc_contamination
//! ```

use robust_bc::bc::{mix_demos, train, TrainConfig};
use robust_bc::envs::{
    record_demos, Corruption, HeavyTail, LinGaussConfig, LinGaussEnv, ScriptedDemonstrator,
};
use robust_bc::nn::{Architecture, PolicyNet};
use robust_bc::numerics::Rng;
use robust_bc::optim::OptimConfig;

fn main() -> robust_bc::Result<()> {
    let mut rng = Rng::new(0);
    let mut env = LinGaussEnv::new(LinGaussConfig::identity(2, 0.1))?;
    let expert = ScriptedDemonstrator::expert();
    let amateur = ScriptedDemonstrator::amateur(Corruption {
        heavy_tail: Some(HeavyTail {
            nu: 1.0,
            scale: 10.0,
            prob: 1.0,
        }),
        hesitation: None,
    })?;

    let clean = record_demos(&mut env, &expert, 1400, false, &mut rng)?;
    let noisy = record_demos(&mut env, &amateur, 600, false, &mut rng)?;
    let validation = record_demos(&mut env, &expert, 500, false, &mut rng)?;
    let demos = mix_demos(&clean, &noisy, noisy.len())?;
    println!("{} pairs, alpha = {:.2}", demos.pair_count(), demos.alpha());
    println!("NLL floor per dim {:.3}", LinGaussEnv::nll_floor_per_dim(0.1));

    let net = PolicyNet::new(Architecture::with_hidden(2, 2, vec![32, 32]), &mut rng)?;
    let cfg = TrainConfig {
        epochs: 50,
        batch_size: 32,
        eta: 0.0,
        diag_every: 1,
    };
    for (name, optim) in [
        ("adam", OptimConfig::adam()),
        ("t_adam", OptimConfig::t_adam(1.0)),
        ("at_adam", OptimConfig::at_adam(0.9)),
    ] {
        let (_, metrics) = train(net.clone(), &demos, &validation, &optim, &cfg, &mut rng.derive(1))?;
        let curve: Vec<String> = metrics
            .epochs
            .iter()
            .step_by(10)
            .map(|e| format!("{:.2}", e.val_nll / 2.0))
            .collect();
        println!(
            "{name:<8} val NLL/dim by epoch: {}  final {:.3}",
            curve.join(" "),
            metrics.final_val_nll().unwrap() / 2.0
        );
    }
    Ok(())
}
