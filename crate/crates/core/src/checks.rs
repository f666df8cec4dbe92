//! Self-contained invariant and oracle checks, runnable from the command line.

use crate::bc::{self, FnPolicy};
use crate::envs::{Env, LinGaussConfig, LinGaussEnv, PointMassConfig, PointMassEnv, ScriptedDemonstrator};
use crate::error::Result;
use crate::nn::{Architecture, PolicyNet};
use crate::numerics::{finite_difference_gradient, trigamma, Rng, DEFAULT_FD_STEP};
use crate::optim::{OptimConfig, Optimizer};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

type Check = (&'static str, fn(&mut Rng) -> Result<(bool, String)>);

const CHECKS: &[Check] = &[
    ("trigamma-identities", trigamma_identities),
    ("trigamma-recurrence", trigamma_recurrence),
    ("policy-gradient", policy_gradient),
    ("gaussian-limit", gaussian_limit),
    ("point-mass-expert", point_mass_expert),
    ("lingauss-expert", lingauss_expert),
    ("demo-file-roundtrip", demo_roundtrip),
];

pub fn names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Runs the named checks (all when `only` is empty) with a fixed seed.
pub fn run(only: &[String], seed: u64) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .filter(|(n, _)| only.is_empty() || only.iter().any(|o| o == n))
        .map(|(name, f)| CheckOutcome::from_result(name, f(&mut Rng::new(seed))))
        .collect()
}

fn trigamma_identities(_: &mut Rng) -> Result<(bool, String)> {
    let pi2 = std::f64::consts::PI.powi(2);
    let cases = [(0.5, pi2 / 2.0), (1.0, pi2 / 6.0), (2.0, pi2 / 6.0 - 1.0)];
    let mut worst: f64 = 0.0;
    for (x, expect) in cases {
        worst = worst.max((trigamma(x)? - expect).abs());
    }
    Ok((worst <= 1e-10, format!("max error {worst:.3e}")))
}

fn trigamma_recurrence(rng: &mut Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = 10f64.powf(rng.uniform_range(-2.0, 3.0));
        // scaled by the largest term, ψ₁(x) > 1/x²
        let big = trigamma(x)?;
        let residual = (big - trigamma(x + 1.0)? - 1.0 / (x * x)).abs() / big;
        worst = worst.max(residual);
    }
    Ok((worst <= 1e-12, format!("max residual {worst:.3e}")))
}

fn policy_gradient(rng: &mut Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let arch = Architecture::with_hidden(3, 2, vec![5, 4]);
        let net = PolicyNet::new(arch.clone(), rng)?;
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..4)
            .map(|_| {
                (
                    (0..3).map(|_| rng.standard_normal()).collect(),
                    (0..2).map(|_| rng.standard_normal()).collect(),
                )
            })
            .collect();
        let view: Vec<(&[f64], &[f64])> = batch.iter().map(|(s, a)| (s.as_slice(), a.as_slice())).collect();
        let (_, grads) = net.backward(&view)?;
        let analytic: Vec<f64> = grads.values.concat();
        let mut probe = net.clone();
        let numeric = finite_difference_gradient(
            |p| {
                probe.set_flat_params(p).expect("same layout");
                probe.backward(&view).expect("valid batch").0
            },
            &net.flat_params(),
            DEFAULT_FD_STEP,
        );
        let num: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(num / den);
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.3e}")))
}

fn gaussian_limit(rng: &mut Rng) -> Result<(bool, String)> {
    let dim = 8;
    let init: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let noise: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..dim).map(|_| 0.1 * rng.standard_normal()).collect())
        .collect();
    let t = OptimConfig::t_adam(1e12);
    let at = OptimConfig {
        frozen_k: Some(1e12),
        ..OptimConfig::at_adam(0.9)
    };
    let mut opts = [OptimConfig::adam(), t, at].map(|c| Optimizer::new(c, [("x", init.clone())]).expect("valid"));
    let mut worst: f64 = 0.0;
    for g_noise in &noise {
        let mut params = Vec::new();
        for opt in &mut opts {
            let x = opt.slots()[0].value.clone();
            let g: Vec<f64> = x.iter().zip(g_noise).map(|(x, n)| x + n).collect();
            opt.slots_mut()[0].set_grad(g)?;
            opt.step()?;
            params.push(opt.slots()[0].value.clone());
        }
        for p in &params[1..] {
            let d = p.iter().zip(&params[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    Ok((worst <= 1e-9, format!("max deviation from Adam {worst:.3e} over 200 steps")))
}

fn point_mass_expert(rng: &mut Rng) -> Result<(bool, String)> {
    let cfg = PointMassConfig::default();
    let mut env = PointMassEnv::new(cfg.clone());
    let expert = FnPolicy(|s: &[f64]| PointMassEnv::expert_controller(s, cfg.max_step));
    let rate = bc::evaluate_success(&expert, &mut env, 100, cfg.budget, rng)?;
    Ok((rate == 1.0, format!("success rate {rate}")))
}

fn lingauss_expert(rng: &mut Rng) -> Result<(bool, String)> {
    let mut env = LinGaussEnv::new(LinGaussConfig::identity(1, 0.1))?;
    let n = 10_000;
    let mut hits = 0;
    for _ in 0..n {
        env.reset(rng);
        let a = env.expert_action(rng);
        if env.step(&a)?.success {
            hits += 1;
        }
    }
    let rate = hits as f64 / n as f64;
    // P(|Z| < 3) = 0.99730
    Ok(((rate - 0.9973).abs() < 0.0025, format!("success rate {rate}")))
}

fn demo_roundtrip(rng: &mut Rng) -> Result<(bool, String)> {
    let mut env = PointMassEnv::new(PointMassConfig::default());
    let trajs = crate::envs::record_demos(&mut env, &ScriptedDemonstrator::expert(), 5, false, rng)?;
    let mut buf = Vec::new();
    bc::write_demos(&mut buf, &trajs)?;
    let back = bc::read_demos(buf.as_slice())?;
    Ok((back == trajs, format!("{} trajectories, {} bytes", trajs.len(), buf.len())))
}
