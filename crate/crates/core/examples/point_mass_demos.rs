//! Recording expert and amateur demonstrations on the point-mass task and
//! writing them in the demonstration CSV format.
//!
//! ```bash
//! cargo run --example point_mass_demos -- /tmp/demos.csv
//! ```

use robust_bc::bc::{evaluate_success, save_demos, FnPolicy};
use robust_bc::envs::{record_demos, Corruption, PointMassConfig, PointMassEnv, ScriptedDemonstrator};
use robust_bc::numerics::Rng;

fn main() -> robust_bc::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "point_mass_demos.csv".into());
    let cfg = PointMassConfig::default();
    let mut env = PointMassEnv::new(cfg.clone());
    let mut rng = Rng::new(1);

    let controller = FnPolicy(|s: &[f64]| PointMassEnv::expert_controller(s, cfg.max_step));
    let rate = evaluate_success(&controller, &mut env, 100, cfg.budget, &mut rng)?;
    println!("scripted controller success over 100 episodes: {rate}");

    let expert = record_demos(&mut env, &ScriptedDemonstrator::expert(), 10, false, &mut rng)?;
    let corruption = Corruption::amateur_default(cfg.max_step);
    let amateur = record_demos(&mut env, &ScriptedDemonstrator::amateur(corruption)?, 10, false, &mut rng)?;

    for (label, trajs) in [("expert", &expert), ("amateur", &amateur)] {
        let steps: usize = trajs.iter().map(|t| t.len()).sum();
        let ok = trajs.iter().filter(|t| t.success).count();
        let off: usize = trajs
            .iter()
            .flat_map(|t| &t.pairs)
            .filter(|(s, a)| *a != PointMassEnv::expert_controller(s, cfg.max_step))
            .count();
        println!("{label:<8} {} trajectories, {steps} steps, {ok} successful, {off} steps off-controller", trajs.len());
    }

    let mut all = expert;
    all.extend(amateur);
    save_demos(std::path::Path::new(&path), &all)?;
    println!("wrote {path}");
    Ok(())
}
