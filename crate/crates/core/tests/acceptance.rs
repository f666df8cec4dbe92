//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! ```bash
//! cargo test --release --test acceptance
//! ```

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use robust_bc::dof::{at_momentum_step, batch_dof_reference, BatchDofSample, DofState};
use robust_bc::experiment::{run_experiment, summarize, ExperimentConfig, RunRecord, SummaryRow};
use robust_bc::moments::TMomentState;
use robust_bc::nn::{Architecture, PolicyNet};
use robust_bc::numerics::{finite_difference_gradient, sample_student_t, trigamma, Rng, DEFAULT_FD_STEP};
use robust_bc::optim::{OptimConfig, Optimizer};
use statrs::function::gamma::ln_gamma;

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run_config(name: &str) -> Result<(Vec<RunRecord>, Vec<SummaryRow>), String> {
    let cfg = ExperimentConfig::load(&config_path(name)).and_then(|c| c.resolve()).map_err(err)?;
    let result = run_experiment(&cfg).map_err(err)?;
    if let Some(f) = result.failures.first() {
        return Err(format!("seed {} arm {} failed: {}", f.seed, f.arm, f.error));
    }
    let rows = summarize(&result);
    Ok((result.runs, rows))
}

fn by_seed<'a>(runs: &'a [RunRecord], arm: &str, amateur: usize) -> Vec<&'a RunRecord> {
    let mut v: Vec<&RunRecord> = runs
        .iter()
        .filter(|r| r.arm == arm && r.amateur_count == amateur)
        .collect();
    v.sort_by_key(|r| r.seed);
    v
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn gradient_correctness() -> Outcome {
    let mut rng = Rng::new(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let sd = 1 + (rng.uniform() * 4.0) as usize;
        let ad = 1 + (rng.uniform() * 3.0) as usize;
        let depth = 1 + (rng.uniform() * 3.0) as usize;
        let hidden: Vec<usize> = (0..depth).map(|_| 2 + (rng.uniform() * 6.0) as usize).collect();
        let net = PolicyNet::new(Architecture::with_hidden(sd, ad, hidden), &mut rng).map_err(err)?;
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..5)
            .map(|_| {
                (
                    (0..sd).map(|_| rng.standard_normal()).collect(),
                    (0..ad).map(|_| rng.standard_normal()).collect(),
                )
            })
            .collect();
        let view: Vec<(&[f64], &[f64])> = batch.iter().map(|(s, a)| (s.as_slice(), a.as_slice())).collect();
        let (_, grads) = net.backward(&view).map_err(err)?;
        let analytic = grads.values.concat();
        let mut probe = net.clone();
        let numeric = finite_difference_gradient(
            |p| {
                probe.set_flat_params(p).expect("same layout");
                probe.backward(&view).expect("valid batch").0
            },
            &net.flat_params(),
            DEFAULT_FD_STEP,
        );
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / norm);
    }
    Ok((worst <= 1e-5, format!("20 nets, max relative error {worst:.2e}")))
}

fn gaussian_limit() -> Outcome {
    let mut rng = Rng::new(7);
    let shapes = [("w", 6), ("b", 3)];
    let init: Vec<(&str, Vec<f64>)> = shapes
        .iter()
        .map(|&(n, d)| (n, (0..d).map(|_| rng.standard_normal()).collect()))
        .collect();
    let frozen_at = OptimConfig {
        frozen_k: Some(1e12),
        ..OptimConfig::at_adam(0.9)
    };
    let configs = [OptimConfig::adam(), OptimConfig::t_adam(1e12), frozen_at];
    let mut opts = Vec::new();
    for c in configs {
        opts.push(Optimizer::new(c.with_lr(1e-2), init.clone()).map_err(err)?);
    }
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let noise: Vec<Vec<f64>> = shapes
            .iter()
            .map(|&(_, d)| (0..d).map(|_| 0.5 * rng.standard_normal()).collect())
            .collect();
        for opt in &mut opts {
            for (slot, n) in opt.slots_mut().iter_mut().zip(&noise) {
                let g: Vec<f64> = slot.value.iter().zip(n).map(|(x, n)| x + n).collect();
                slot.set_grad(g).map_err(err)?;
            }
            opt.step().map_err(err)?;
        }
        for other in &opts[1..] {
            for (a, b) in other.slots().iter().zip(opts[0].slots()) {
                for (x, y) in a.value.iter().zip(&b.value) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    Ok((worst <= 1e-9, format!("1000 steps, max deviation from Adam {worst:.2e}")))
}

// Independent 40-digit evaluation of the same three steps.
// Per step: m, W, z_bar, z_tilde, k, w, beta_w.
const TRACE: [[f64; 7]; 3] = [
    [
        0.050000000168749998601,
        9.0000000033749999733,
        -0.13862943711198905688,
        4.6142850679960937379,
        200000001.99999998,
        1.0000000037499999703,
        0.8999999996625000028,
    ],
    [
        -0.10499999881756878911,
        8.9999999967262502206,
        -0.03711550819278490233,
        4.2456022610780034662,
        200000001.99999998,
        0.99999999298750027187,
        0.90000000066487497551,
    ],
    [
        -0.10012766406392247335,
        8.1007877377906310994,
        0.74942020232383221718,
        9.388787850231120654,
        1.1984175861976369086,
        0.00087526748556211199561,
        0.99990275751414506939,
    ],
];

fn hand_trace() -> Outcome {
    let mut moment = TMomentState::new(1, 0.9, 1e-8);
    moment.sigma2 = vec![1.0];
    let mut dof = DofState::new(1, 0.9).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (g, expect) in [0.5, -1.5, 50.0].into_iter().zip(TRACE) {
        let d = at_momentum_step(&mut moment, &mut dof, &[g]).map_err(err)?;
        let got = [moment.m[0], moment.w_sum, dof.z_bar, dof.z_tilde, d.k, d.w, d.beta_w];
        for (a, b) in got.iter().zip(expect) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    Ok((worst <= 1e-12, format!("3 steps, max error {worst:.2e}")))
}

fn t_log_likelihood(xs: &[f64], nu: f64) -> f64 {
    let c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln();
    xs.iter().map(|x| c - (nu + 1.0) / 2.0 * (x * x / nu).ln_1p()).sum()
}

fn grid_mle(xs: &[f64]) -> f64 {
    let grid = |lo: f64, hi: f64, n: usize| -> f64 {
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .max_by(|a, b| t_log_likelihood(xs, *a).total_cmp(&t_log_likelihood(xs, *b)))
            .expect("non-empty grid")
    };
    let coarse = grid(0.5, 30.0, 118);
    grid((coarse - 0.25).max(0.5), coarse + 0.25, 50)
}

fn dof_recovery() -> Outcome {
    let mut rng = Rng::new(11);
    let mut ok = true;
    let mut detail = Vec::new();
    for (nu, lo, hi) in [(3.0, 2.4, 3.6), (5.0, 4.0, 6.0)] {
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_student_t(&mut rng, nu, 1).map(|v| v[0]))
            .collect::<robust_bc::Result<_>>()
            .map_err(err)?;
        let sample = BatchDofSample::new(xs.iter().map(|&x| vec![x]).collect()).map_err(err)?;
        let est = batch_dof_reference(&sample).map_err(err)?;
        let mle = grid_mle(&xs);
        let agree = (est - mle).abs() / mle;
        ok &= est >= lo && est <= hi && agree <= 0.2;
        detail.push(format!("nu {nu}: estimate {est:.3}, mle {mle:.3}, gap {:.0}%", 100.0 * agree));
    }
    Ok((ok, detail.join("; ")))
}

fn bowl_loss(cfg: &OptimConfig, seed: u64) -> Result<f64, String> {
    let steps = 20_000;
    let window = 1000;
    let mut rng = Rng::new(seed);
    let mut opt = Optimizer::new(cfg.clone(), [("theta", vec![1.0])]).map_err(err)?;
    let mut tail = 0.0;
    for step in 0..steps {
        let theta = opt.slots()[0].value[0];
        let mut g = theta;
        if rng.bernoulli(0.3) {
            g += 100.0 * sample_student_t(&mut rng, 1.0, 1).map_err(err)?[0];
        }
        opt.slots_mut()[0].set_grad(vec![g]).map_err(err)?;
        opt.step().map_err(err)?;
        if step >= steps - window {
            let theta = opt.slots()[0].value[0];
            tail += 0.5 * theta * theta;
        }
    }
    Ok(tail / window as f64)
}

fn outlier_suppression() -> Outcome {
    let med = |cfg: OptimConfig| -> Result<f64, String> {
        let cfg = cfg.with_lr(0.1);
        let losses = (1..=5).map(|s| bowl_loss(&cfg, s)).collect::<Result<Vec<_>, _>>()?;
        Ok(median(losses))
    };
    let adam = med(OptimConfig::adam())?;
    let t = med(OptimConfig::t_adam(1.0))?;
    let at = med(OptimConfig::at_adam(0.9))?;
    let (rt, rat) = (t / adam, at / adam);
    Ok((
        rt <= 0.1 && rat <= 0.1,
        format!("median loss adam {adam:.3}, t {t:.3} ({rt:.3}x), at {at:.3} ({rat:.3}x)"),
    ))
}

fn bc_robustness() -> Outcome {
    let (runs, _) = run_config("contamination.toml")?;
    let adam = by_seed(&runs, "adam", 600);
    let t = by_seed(&runs, "t_adam", 600);
    let at = by_seed(&runs, "at_adam_0.9", 600);
    let nll = |v: &[&RunRecord]| v.iter().map(|r| r.final_val_nll).collect::<Vec<f64>>();
    let ordered = (0..adam.len())
        .filter(|&i| t[i].final_val_nll < adam[i].final_val_nll && at[i].final_val_nll < adam[i].final_val_nll)
        .count();
    let (ma, mt, mat) = (median(nll(&adam)), median(nll(&t)), median(nll(&at)));
    let alpha = adam[0].alpha;
    Ok((
        ordered >= 4 && mt < ma && mat < ma && adam.len() == 5,
        format!("alpha {alpha:.2}, median nll adam {ma:.3}, t {mt:.3}, at {mat:.3}, ordered in {ordered}/5 seeds"),
    ))
}

fn amateur_utility() -> Outcome {
    let (runs, _) = run_config("amateur_utility.toml")?;
    let base = by_seed(&runs, "at_adam_0.9", 0);
    let more = by_seed(&runs, "at_adam_0.9", 10);
    let pairs: Vec<(f64, f64)> = base.iter().zip(&more).map(|(a, b)| (a.success_rate, b.success_rate)).collect();
    let up = pairs.iter().filter(|(a, b)| b > a).count();
    let down = pairs.iter().filter(|(a, b)| b < a).count();
    let mean = |v: &[&RunRecord]| v.iter().map(|r| r.success_rate).sum::<f64>() / v.len() as f64;
    Ok((
        down == 0 && up >= 3 && pairs.len() == 5,
        format!(
            "success 5 expert {:.2}, +10 amateur {:.2}; {up} up, {down} down",
            mean(&base),
            mean(&more)
        ),
    ))
}

fn adaptivity() -> Outcome {
    let (runs, rows) = run_config("adaptivity.toml")?;
    let row = |arm: &str| rows.iter().find(|r| r.arm == arm).cloned().ok_or(format!("no row for {arm}"));
    let t = row("t_adam")?;
    let at = row("at_adam_0.9")?;
    let k = median(by_seed(&runs, "at_adam_0.9", 0).iter().map(|r| r.median_k_overall).collect());
    Ok((
        at.mean_success >= t.mean_success && k > 1.0,
        format!(
            "success at {:.3} vs t {:.3}, median k over final third {k:.2}",
            at.mean_success, t.mean_success
        ),
    ))
}

fn trigamma_accuracy() -> Outcome {
    let pi2 = std::f64::consts::PI.powi(2);
    let mut ident: f64 = 0.0;
    for (x, expect) in [(0.5, pi2 / 2.0), (1.0, pi2 / 6.0), (2.0, pi2 / 6.0 - 1.0)] {
        ident = ident.max((trigamma(x).map_err(err)? - expect).abs());
    }
    let mut rng = Rng::new(3);
    let mut rec: f64 = 0.0;
    for _ in 0..1000 {
        let x = 10f64.powf(rng.uniform_range(-2.0, 3.0));
        let a = trigamma(x).map_err(err)?;
        let b = trigamma(x + 1.0).map_err(err)?;
        rec = rec.max((a - b - 1.0 / (x * x)).abs() / a);
    }
    Ok((
        ident <= 1e-10 && rec <= 1e-12,
        format!("identity error {ident:.2e}, recurrence residual {rec:.2e}"),
    ))
}

fn sweep(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_robust-bc"))
        .arg("sweep")
        .args(args)
        .env_remove("ROBUST_BC_OUTPUT_DIR")
        .output()
        .map_err(err)?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let cfg = config_path("quick.toml");
    sweep(&["--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()])?;
    let manifest = first.join("manifest.json");
    sweep(&["--manifest", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()])?;
    let a = std::fs::read(first.join("summary.csv")).map_err(err)?;
    let b = std::fs::read(second.join("summary.csv")).map_err(err)?;
    Ok((a == b && !a.is_empty(), format!("summary.csv {} bytes, identical: {}", a.len(), a == b)))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gradient correctness", gradient_correctness),
        ("gaussian limit", gaussian_limit),
        ("hand trace", hand_trace),
        ("dof recovery", dof_recovery),
        ("outlier suppression", outlier_suppression),
        ("bc robustness", bc_robustness),
        ("amateur utility", amateur_utility),
        ("adaptivity", adaptivity),
        ("trigamma accuracy", trigamma_accuracy),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} {:>2} {name:<21} {detail} [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
