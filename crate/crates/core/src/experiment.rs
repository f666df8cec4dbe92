//! Declarative experiments: config parsing, the seed × arm × amateur-count
//! sweep, and table output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bc::{self, DemoSet, EpochMetrics, TrainConfig, Trajectory};
use crate::envs::{
    record_demos, Corruption, Env, LinGaussConfig, LinGaussEnv, PointMassConfig, PointMassEnv,
    ScriptedDemonstrator, POINT_MASS_ACTION_DIM, POINT_MASS_STATE_DIM,
};
use crate::error::{Error, Result};
use crate::nn::{Architecture, PolicyNet};
use crate::numerics::Rng;
use crate::optim::{DofRecord, OptimConfig, OptimizerKind};

/// Overrides `output_dir` from the config when set.
pub const OUTPUT_DIR_ENV: &str = "ROBUST_BC_OUTPUT_DIR";

pub const MANIFEST_FORMAT: &str = "robust-bc/manifest";
pub const MANIFEST_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    PointMass(PointMassConfig),
    LinGauss(LinGaussSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinGaussSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub noise_std: f64,
    /// Row-major `action_dim × state_dim`; identity when absent.
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec::PointMass(PointMassConfig::default())
    }
}

impl EnvSpec {
    pub fn state_dim(&self) -> usize {
        match self {
            EnvSpec::PointMass(_) => POINT_MASS_STATE_DIM,
            EnvSpec::LinGauss(s) => s.state_dim,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            EnvSpec::PointMass(_) => POINT_MASS_ACTION_DIM,
            EnvSpec::LinGauss(s) => s.action_dim,
        }
    }

    /// A fresh environment. The config must have been resolved.
    pub fn build(&self) -> Result<Box<dyn Env>> {
        Ok(match self {
            EnvSpec::PointMass(c) => Box::new(PointMassEnv::new(c.clone())),
            EnvSpec::LinGauss(s) => {
                let matrix = s
                    .matrix
                    .clone()
                    .ok_or_else(|| Error::config("env.matrix", "unresolved"))?;
                Box::new(LinGaussEnv::new(LinGaussConfig {
                    matrix,
                    noise_std: s.noise_std,
                })?)
            }
        })
    }

    /// Action scale used by the default amateur corruption.
    fn action_scale(&self) -> f64 {
        match self {
            EnvSpec::PointMass(c) => c.max_step,
            EnvSpec::LinGauss(s) => s.noise_std.max(1e-3) * 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSpec {
    /// Expert trajectories used for training.
    pub expert: usize,
    /// Amateur counts to sweep; each run takes a prefix of one shared pool.
    pub amateur: Vec<usize>,
    /// Held-out expert trajectories for validation NLL.
    pub validation: usize,
    pub successful_only: bool,
    /// Permit a pair-level amateur fraction of one half or more.
    pub allow_amateur_majority: bool,
    /// Defaults to [`Corruption::amateur_default`] for the env's action scale.
    pub corruption: Option<Corruption>,
    /// Read `expert.csv`, `amateur.csv` and `validation.csv` from here
    /// instead of generating demonstrations.
    pub load_dir: Option<PathBuf>,
}

impl Default for DemoSpec {
    fn default() -> Self {
        Self {
            expert: 36,
            amateur: vec![0],
            validation: 20,
            successful_only: false,
            allow_amateur_majority: false,
            corruption: None,
            load_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden: Vec<usize>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hidden: vec![100; 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSpec {
    pub n_runs: usize,
    pub budget: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self { n_runs: 20, budget: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    pub name: String,
    #[serde(default)]
    pub optimizer: OptimConfig,
}

impl ArmSpec {
    pub fn new(name: impl Into<String>, optimizer: OptimConfig) -> Self {
        Self {
            name: name.into(),
            optimizer,
        }
    }
}

fn default_arms() -> Vec<ArmSpec> {
    vec![
        ArmSpec::new("adam", OptimConfig::adam()),
        ArmSpec::new("t_adam", OptimConfig::t_adam(1.0)),
        ArmSpec::new("at_adam_0.9", OptimConfig::at_adam(0.9)),
        ArmSpec::new("at_adam_0.999", OptimConfig::at_adam(0.999)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub env: EnvSpec,
    pub demos: DemoSpec,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub eval: EvalSpec,
    pub arms: Vec<ArmSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seeds: (0..5).collect(),
            output_dir: PathBuf::from("runs"),
            env: EnvSpec::default(),
            demos: DemoSpec::default(),
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            eval: EvalSpec::default(),
            arms: default_arms(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            Error::Parse {
                what: "experiment config",
                line,
                reason: e.message().to_string(),
            }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills every implicit default so the config stands on its own, then
    /// validates it.
    pub fn resolve(mut self) -> Result<Self> {
        if let EnvSpec::LinGauss(s) = &mut self.env {
            if s.matrix.is_none() {
                if s.state_dim != s.action_dim {
                    return Err(Error::config(
                        "env.matrix",
                        "required when state_dim != action_dim",
                    ));
                }
                s.matrix = Some(LinGaussConfig::identity(s.state_dim, s.noise_std).matrix);
            }
        }
        if self.demos.corruption.is_none() {
            self.demos.corruption = Some(Corruption::amateur_default(self.env.action_scale()));
        }
        self.demos.amateur.sort_unstable();
        self.demos.amateur.dedup();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.seeds {
            if !seen.insert(s) {
                return Err(Error::config("seeds", format!("duplicate seed {s}")));
            }
        }
        if self.arms.is_empty() {
            return Err(Error::config("arms", "at least one arm is required"));
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, arm) in self.arms.iter().enumerate() {
            if arm.name.is_empty() || arm.name.contains([',', '"', '\n']) {
                return Err(Error::config(format!("arms[{i}].name"), "must be non-empty plain text"));
            }
            if !names.insert(arm.name.as_str()) {
                return Err(Error::config(format!("arms[{i}].name"), format!("duplicate arm `{}`", arm.name)));
            }
            arm.optimizer.validate().map_err(|e| match e {
                Error::Config { field, reason } => Error::config(format!("arms[{i}].optimizer.{field}"), reason),
                other => other,
            })?;
        }
        if self.demos.amateur.is_empty() {
            return Err(Error::config("demos.amateur", "list at least one amateur count"));
        }
        if self.demos.expert == 0 && self.demos.amateur.contains(&0) {
            return Err(Error::config("demos", "a run with no expert and no amateur data"));
        }
        if let Some(c) = &self.demos.corruption {
            c.validate()?;
        }
        match &self.env {
            EnvSpec::PointMass(c) => {
                let ok = c.arena > 0.0 && c.r_pick >= 0.0 && c.r_drop >= 0.0 && c.max_step > 0.0 && c.budget > 0;
                if !ok {
                    return Err(Error::config("env", format!("invalid point-mass geometry {c:?}")));
                }
            }
            EnvSpec::LinGauss(s) => {
                if s.state_dim == 0 || s.action_dim == 0 {
                    return Err(Error::config("env", "dimensions must be >= 1"));
                }
                if !(s.noise_std >= 0.0) {
                    return Err(Error::config("env.noise_std", "must be >= 0"));
                }
                if let Some(m) = &s.matrix {
                    if m.len() != s.action_dim || m.iter().any(|r| r.len() != s.state_dim) {
                        return Err(Error::config("env.matrix", "must be action_dim × state_dim"));
                    }
                }
            }
        }
        Architecture::with_hidden(self.env.state_dim(), self.env.action_dim(), self.model.hidden.clone())
            .validate()
            .map_err(|e| Error::config("model.hidden", e.to_string()))?;
        self.train.validate()?;
        if self.eval.n_runs == 0 {
            return Err(Error::config("eval.n_runs", "must be >= 1"));
        }
        if self.eval.budget == 0 {
            return Err(Error::config("eval.budget", "must be >= 1"));
        }
        Ok(())
    }

    /// The output directory after the environment override.
    pub fn effective_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    pub fn arm(&self, name: &str) -> Result<&ArmSpec> {
        self.arms
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::config("arm", format!("no arm named `{name}`")))
    }

    /// Number of training runs the sweep performs.
    pub fn run_count(&self) -> usize {
        self.seeds.len() * self.arms.len() * self.demos.amateur.len()
    }
}

// ---------------------------------------------------------------------------
// data

/// Demonstrations for one seed, shared by every arm and amateur count.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedData {
    pub expert: Vec<Trajectory>,
    pub amateur: Vec<Trajectory>,
    pub validation: Vec<Trajectory>,
}

const TAG_DEMOS: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_TRAIN: u64 = 3;
const TAG_EVAL: u64 = 4;

/// Generates (or loads) the demonstrations for `seed`.
pub fn seed_data(cfg: &ExperimentConfig, seed: u64) -> Result<SeedData> {
    if let Some(dir) = &cfg.demos.load_dir {
        let load = |name: &str| bc::load_demos(&dir.join(name));
        let data = SeedData {
            expert: load("expert.csv")?,
            amateur: load("amateur.csv")?,
            validation: load("validation.csv")?,
        };
        let max_am = cfg.demos.amateur.iter().copied().max().unwrap_or(0);
        if data.expert.len() < cfg.demos.expert || data.amateur.len() < max_am {
            return Err(Error::config(
                "demos.load_dir",
                format!(
                    "files hold {} expert and {} amateur trajectories, config needs {} and {max_am}",
                    data.expert.len(),
                    data.amateur.len(),
                    cfg.demos.expert
                ),
            ));
        }
        return Ok(SeedData {
            expert: data.expert[..cfg.demos.expert].to_vec(),
            amateur: data.amateur,
            validation: data.validation,
        });
    }
    let mut rng = Rng::new(seed).derive(TAG_DEMOS);
    let mut env = cfg.env.build()?;
    let expert_demo = ScriptedDemonstrator::expert();
    let corruption = cfg.demos.corruption.unwrap_or_default();
    let amateur_demo = ScriptedDemonstrator::amateur(corruption)?;
    let only = cfg.demos.successful_only;
    let take = |env: &mut dyn Env, d: &ScriptedDemonstrator, n: usize, only: bool, rng: &mut Rng| {
        if n == 0 {
            Ok(Vec::new())
        } else {
            record_demos(env, d, n, only, rng)
        }
    };
    let expert = take(env.as_mut(), &expert_demo, cfg.demos.expert, only, &mut rng)?;
    let max_am = cfg.demos.amateur.iter().copied().max().unwrap_or(0);
    let amateur = take(env.as_mut(), &amateur_demo, max_am, only, &mut rng)?;
    let validation = take(env.as_mut(), &expert_demo, cfg.demos.validation, false, &mut rng)?;
    Ok(SeedData {
        expert,
        amateur,
        validation,
    })
}

fn demo_set(cfg: &ExperimentConfig, data: &SeedData, n_amateur: usize) -> Result<DemoSet> {
    if n_amateur > data.amateur.len() {
        return Err(Error::config("demos.amateur", format!("{n_amateur} exceeds the amateur pool")));
    }
    if data.expert.is_empty() {
        return DemoSet::amateur_only(&data.amateur[..n_amateur]);
    }
    if cfg.demos.allow_amateur_majority {
        let mut t = data.expert.clone();
        t.extend_from_slice(&data.amateur[..n_amateur]);
        DemoSet::new(t)
    } else {
        DemoSet::mix(&data.expert, &data.amateur, n_amateur)
    }
}

// ---------------------------------------------------------------------------
// runs

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub seed: u64,
    pub arm: usize,
    pub amateur_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub arm: String,
    pub amateur_count: usize,
    pub alpha: f64,
    pub pairs: usize,
    pub epochs: Vec<EpochMetrics>,
    pub success_rate: f64,
    pub final_val_nll: f64,
    /// Median k per tensor over the final third of optimizer steps.
    pub median_k: BTreeMap<String, f64>,
    /// Median k over all tensors in the final third; NaN without At-Adam.
    pub median_k_overall: f64,
    pub diagnostics: Vec<DofRecord>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub seed: u64,
    pub arm: String,
    pub amateur_count: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunResult {
    pub config: Option<ExperimentConfig>,
    /// Sorted by seed, then arm order, then amateur count.
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median k over records whose step lies in the final third of `total_steps`.
pub fn final_third_median_k(records: &[DofRecord], total_steps: u64) -> (BTreeMap<String, f64>, f64) {
    let cutoff = total_steps - total_steps / 3;
    let mut per: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut all = Vec::new();
    for r in records.iter().filter(|r| r.step > cutoff) {
        per.entry(r.tensor.clone()).or_default().push(r.k);
        all.push(r.k);
    }
    let per = per.into_iter().map(|(k, mut v)| (k, median(&mut v))).collect();
    (per, median(&mut all))
}

/// Trains and evaluates one (seed, arm, amateur count) cell.
pub fn run_one(cfg: &ExperimentConfig, data: &SeedData, key: RunKey) -> Result<RunRecord> {
    train_cell(cfg, data, key).map(|(_, r)| r)
}

/// [`run_one`], also returning the trained network.
pub fn train_cell(cfg: &ExperimentConfig, data: &SeedData, key: RunKey) -> Result<(PolicyNet, RunRecord)> {
    let start = Instant::now();
    let arm = &cfg.arms[key.arm];
    let demos = demo_set(cfg, data, key.amateur_count)?;
    let base = Rng::new(key.seed);
    let arch = Architecture::with_hidden(cfg.env.state_dim(), cfg.env.action_dim(), cfg.model.hidden.clone());
    let net = PolicyNet::new(arch, &mut base.derive(TAG_INIT))?;
    let (net, metrics) = bc::train(
        net,
        &demos,
        &data.validation,
        &arm.optimizer,
        &cfg.train,
        &mut base.derive(TAG_TRAIN),
    )?;
    let mut env = cfg.env.build()?;
    let success_rate = bc::evaluate_success(
        &net,
        env.as_mut(),
        cfg.eval.n_runs,
        cfg.eval.budget,
        &mut base.derive(TAG_EVAL),
    )?;
    let batches = demos.pair_count().div_ceil(cfg.train.batch_size) as u64;
    let (median_k, median_k_overall) = if arm.optimizer.kind == OptimizerKind::AtAdam {
        final_third_median_k(&metrics.diagnostics, batches * cfg.train.epochs as u64)
    } else {
        (BTreeMap::new(), f64::NAN)
    };
    let record = RunRecord {
        seed: key.seed,
        arm: arm.name.clone(),
        amateur_count: key.amateur_count,
        alpha: demos.alpha(),
        pairs: demos.pair_count(),
        final_val_nll: metrics.final_val_nll().unwrap_or(f64::NAN),
        epochs: metrics.epochs,
        success_rate,
        median_k,
        median_k_overall,
        diagnostics: metrics.diagnostics,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    Ok((net, record))
}

/// Runs every seed × arm × amateur-count cell on the rayon pool.
///
/// `on_run` sees each record as soon as it finishes, in completion order;
/// the returned result is sorted. A failing cell is recorded and the rest
/// continue.
pub fn run_experiment_with<F>(cfg: &ExperimentConfig, on_run: F) -> Result<RunResult>
where
    F: Fn(&RunRecord) + Sync,
{
    cfg.validate()?;
    let data: Vec<(u64, Result<SeedData>)> = cfg
        .seeds
        .par_iter()
        .map(|&s| (s, seed_data(cfg, s)))
        .collect();
    let mut keys = Vec::with_capacity(cfg.run_count());
    let mut failures = Vec::new();
    let mut ready = BTreeMap::new();
    for (seed, d) in data {
        match d {
            Ok(d) => {
                ready.insert(seed, d);
                for arm in 0..cfg.arms.len() {
                    for &amateur_count in &cfg.demos.amateur {
                        keys.push(RunKey {
                            seed,
                            arm,
                            amateur_count,
                        });
                    }
                }
            }
            Err(e) => failures.push(RunFailure {
                seed,
                arm: "*".into(),
                amateur_count: 0,
                error: e.to_string(),
            }),
        }
    }
    let outcomes: Vec<(RunKey, Result<RunRecord>)> = keys
        .par_iter()
        .map(|&k| {
            let r = run_one(cfg, &ready[&k.seed], k);
            if let Ok(rec) = &r {
                on_run(rec);
            }
            (k, r)
        })
        .collect();
    let mut sorted: Vec<(RunKey, RunRecord)> = Vec::new();
    for (k, r) in outcomes {
        match r {
            Ok(rec) => sorted.push((k, rec)),
            Err(e) => failures.push(RunFailure {
                seed: k.seed,
                arm: cfg.arms[k.arm].name.clone(),
                amateur_count: k.amateur_count,
                error: e.to_string(),
            }),
        }
    }
    sorted.sort_by_key(|(k, _)| *k);
    failures.sort_by(|a, b| (a.seed, &a.arm, a.amateur_count).cmp(&(b.seed, &b.arm, b.amateur_count)));
    Ok(RunResult {
        config: Some(cfg.clone()),
        runs: sorted.into_iter().map(|(_, r)| r).collect(),
        failures,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    run_experiment_with(cfg, |_| {})
}

// ---------------------------------------------------------------------------
// tables

/// Decimal text with 9 significant digits. Non-finite values print as
/// `NaN`, `inf` or `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..=15).contains(&exp) {
        return sci;
    }
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut s = String::new();
    if x < 0.0 {
        s.push('-');
    }
    if exp < 0 {
        s.push_str("0.");
        s.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        s.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            s.push_str(&digits);
            s.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            s.push_str(&digits[..int_len]);
            s.push('.');
            s.push_str(&digits[int_len..]);
        }
    }
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    s
}

/// Half-width of the two-sided 95% Student-t interval for the mean.
/// NaN for fewer than two values.
pub fn ci95_half_width(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("dof >= 1")
        .inverse_cdf(0.975);
    t * (var / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub arm: String,
    pub amateur_count: usize,
    pub seeds: usize,
    pub mean_alpha: f64,
    pub mean_success: f64,
    pub ci95_half_width: f64,
    pub mean_final_val_nll: f64,
    pub median_k: f64,
}

pub const SUMMARY_HEADER: &str =
    "arm,amateur_count,seeds,mean_alpha,mean_success,ci95_half_width,mean_final_val_nll,median_k";

/// One row per (arm, amateur count), in config arm order.
pub fn summarize(result: &RunResult) -> Vec<SummaryRow> {
    let arm_order: Vec<String> = match &result.config {
        Some(c) => c.arms.iter().map(|a| a.name.clone()).collect(),
        None => Vec::new(),
    };
    let rank = |name: &str| arm_order.iter().position(|a| a == name).unwrap_or(usize::MAX);
    let mut groups: BTreeMap<(usize, String, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in &result.runs {
        groups
            .entry((rank(&r.arm), r.arm.clone(), r.amateur_count))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((_, arm, amateur_count), runs)| {
            let mean = |f: &dyn Fn(&RunRecord) -> f64| runs.iter().map(|r| f(r)).sum::<f64>() / runs.len() as f64;
            let success: Vec<f64> = runs.iter().map(|r| r.success_rate).collect();
            let mut ks: Vec<f64> = runs
                .iter()
                .map(|r| r.median_k_overall)
                .filter(|k| !k.is_nan())
                .collect();
            SummaryRow {
                arm,
                amateur_count,
                seeds: runs.len(),
                mean_alpha: mean(&|r| r.alpha),
                mean_success: mean(&|r| r.success_rate),
                ci95_half_width: ci95_half_width(&success),
                mean_final_val_nll: mean(&|r| r.final_val_nll),
                median_k: median(&mut ks),
            }
        })
        .collect()
}

pub fn summary_csv(result: &RunResult) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in summarize(result) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.arm,
            r.amateur_count,
            r.seeds,
            fmt_num(r.mean_alpha),
            fmt_num(r.mean_success),
            fmt_num(r.ci95_half_width),
            fmt_num(r.mean_final_val_nll),
            fmt_num(r.median_k)
        );
    }
    out
}

pub const DIAGNOSTICS_HEADER: &str = "seed,arm,amateur_count,step,tensor,distance,b,k,nu,w,beta_w";

pub fn diagnostics_csv(result: &RunResult) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in &result.runs {
        for d in &r.diagnostics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.seed,
                r.arm,
                r.amateur_count,
                d.step,
                d.tensor,
                fmt_num(d.distance),
                fmt_num(d.b),
                fmt_num(d.k),
                fmt_num(d.nu),
                fmt_num(d.w),
                fmt_num(d.beta_w)
            );
        }
    }
    out
}

pub const CURVES_HEADER: &str = "seed,arm,amateur_count,epoch,train_nll,val_nll";

pub fn curves_csv(result: &RunResult) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for r in &result.runs {
        for e in &r.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.seed,
                r.arm,
                r.amateur_count,
                e.epoch,
                fmt_num(e.train_nll),
                fmt_num(e.val_nll)
            );
        }
    }
    out
}

pub const RUNS_HEADER: &str = "seed,arm,amateur_count,alpha,pairs,success_rate,final_val_nll,median_k,wall_clock_s";

pub fn run_line(r: &RunRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.seed,
        r.arm,
        r.amateur_count,
        fmt_num(r.alpha),
        r.pairs,
        fmt_num(r.success_rate),
        fmt_num(r.final_val_nll),
        fmt_num(r.median_k_overall),
        fmt_num(r.wall_clock_s)
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub runs: usize,
    pub failures: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, result: &RunResult) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            seeds: cfg.seeds.clone(),
            runs: result.runs.len(),
            failures: result
                .failures
                .iter()
                .map(|f| format!("seed {} arm {} amateur {}: {}", f.seed, f.arm, f.amateur_count, f.error))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(Error::Parse {
                what: "manifest",
                line: 1,
                reason: format!("unsupported format {} v{}", m.format, m.version),
            });
        }
        if m.seeds != m.config.seeds {
            return Err(Error::config("seeds", "manifest seeds disagree with its config"));
        }
        Ok(m)
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `summary.csv`, `diagnostics.csv`, `curves.csv` and `manifest.json`
/// into `dir`, creating it if needed. `runs.csv` is written by the caller
/// as runs finish, since it carries wall-clock times.
pub fn emit_tables(cfg: &ExperimentConfig, result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = serde_json::to_string_pretty(&Manifest::new(cfg, result))?;
    Ok(vec![
        write_file(dir, "summary.csv", &summary_csv(result))?,
        write_file(dir, "diagnostics.csv", &diagnostics_csv(result))?,
        write_file(dir, "curves.csv", &curves_csv(result))?,
        write_file(dir, "manifest.json", &(manifest + "\n"))?,
    ])
}
