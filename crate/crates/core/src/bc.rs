//! Behavioral cloning: demonstration data, mixing, training and evaluation.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envs::Env;
use crate::error::{check_len, Error, Result};
use crate::nn::PolicyNet;
use crate::numerics::Rng;
use crate::optim::{DofRecord, OptimConfig, Optimizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Expert,
    Amateur,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Expert => "expert",
            Provenance::Amateur => "amateur",
        })
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "expert" => Ok(Provenance::Expert),
            "amateur" => Ok(Provenance::Amateur),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

pub type Pair = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub pairs: Vec<Pair>,
    pub provenance: Provenance,
    pub success: bool,
}

impl Trajectory {
    pub fn new(pairs: Vec<Pair>, provenance: Provenance, success: bool) -> Self {
        Self {
            pairs,
            provenance,
            success,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks that the trajectory is non-empty and every pair has the given
    /// state and action dimensions.
    pub fn validate(&self, state_dim: usize, action_dim: usize) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Precondition("empty trajectory".into()));
        }
        for (s, a) in &self.pairs {
            check_len("Trajectory state", state_dim, s.len())?;
            check_len("Trajectory action", action_dim, a.len())?;
        }
        Ok(())
    }

    fn dims(&self) -> Option<(usize, usize)> {
        self.pairs.first().map(|(s, a)| (s.len(), a.len()))
    }
}

/// A training set of trajectories with its realised amateur pair fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    trajectories: Vec<Trajectory>,
    alpha: f64,
}

fn amateur_fraction(trajectories: &[Trajectory]) -> f64 {
    let total: usize = trajectories.iter().map(Trajectory::len).sum();
    if total == 0 {
        return 0.0;
    }
    let amateur: usize = trajectories
        .iter()
        .filter(|t| t.provenance == Provenance::Amateur)
        .map(Trajectory::len)
        .sum();
    amateur as f64 / total as f64
}

fn check_consistent(trajectories: &[Trajectory]) -> Result<()> {
    if let Some((sd, ad)) = trajectories.iter().find_map(Trajectory::dims) {
        for t in trajectories {
            t.validate(sd, ad)?;
        }
    }
    Ok(())
}

impl DemoSet {
    /// All expert trajectories plus the first `n_amateur` amateur ones.
    /// The realised pair-level amateur fraction must stay below one half.
    pub fn mix(expert: &[Trajectory], amateur: &[Trajectory], n_amateur: usize) -> Result<Self> {
        if n_amateur > amateur.len() {
            return Err(Error::Precondition(format!(
                "asked for {n_amateur} amateur trajectories, only {} available",
                amateur.len()
            )));
        }
        let trajectories: Vec<Trajectory> = expert.iter().chain(&amateur[..n_amateur]).cloned().collect();
        check_consistent(&trajectories)?;
        let alpha = amateur_fraction(&trajectories);
        if alpha >= 0.5 {
            return Err(Error::Domain(format!(
                "amateur pair fraction {alpha} is not below 0.5"
            )));
        }
        Ok(Self { trajectories, alpha })
    }

    /// Any collection of trajectories, with alpha computed but not bounded.
    /// Used for ablations outside the mixture assumption, such as training
    /// on amateur data alone or on a handful of expert trajectories.
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        check_consistent(&trajectories)?;
        Ok(Self {
            alpha: amateur_fraction(&trajectories),
            trajectories,
        })
    }

    pub fn amateur_only(amateur: &[Trajectory]) -> Result<Self> {
        Self::new(amateur.to_vec())
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pair_count(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pair_count() == 0
    }

    pub fn pairs(&self) -> impl Iterator<Item = &Pair> {
        self.trajectories.iter().flat_map(|t| &t.pairs)
    }
}

/// Free-function form of [`DemoSet::mix`].
pub fn mix_demos(expert: &[Trajectory], amateur: &[Trajectory], n_amateur: usize) -> Result<DemoSet> {
    DemoSet::mix(expert, amateur, n_amateur)
}

/// `s + eta·ε` with standard normal `ε` per coordinate.
pub fn augment_state(s: &[f64], eta: f64, rng: &mut Rng) -> Vec<f64> {
    assert!(eta >= 0.0, "augmentation scale must be >= 0, got {eta}");
    if eta == 0.0 {
        return s.to_vec();
    }
    s.iter().map(|v| v + eta * rng.standard_normal()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// State augmentation scale, training only.
    pub eta: f64,
    /// Keep the DoF diagnostics of every n-th optimizer step.
    pub diag_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            eta: 0.03,
            diag_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be >= 1"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::config("train.eta", format!("must be finite and >= 0, got {}", self.eta)));
        }
        if self.diag_every == 0 {
            return Err(Error::config("train.diag_every", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_nll: f64,
    /// NaN when no validation set was given.
    pub val_nll: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainMetrics {
    pub epochs: Vec<EpochMetrics>,
    pub diagnostics: Vec<DofRecord>,
}

impl TrainMetrics {
    pub fn final_val_nll(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.val_nll)
    }
}

/// Fits `net` to `demos` by minibatch maximum likelihood.
///
/// Pairs are shuffled together each epoch regardless of trajectory.
/// `validation` is scored after every epoch without augmentation.
pub fn train(
    mut net: PolicyNet,
    demos: &DemoSet,
    validation: &[Trajectory],
    optim: &OptimConfig,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<(PolicyNet, TrainMetrics)> {
    cfg.validate()?;
    if demos.is_empty() {
        return Err(Error::Precondition("train needs a non-empty demo set".into()));
    }
    let arch = net.arch().clone();
    for t in demos.trajectories().iter().chain(validation) {
        t.validate(arch.state_dim, arch.action_dim)?;
    }
    let mut metrics = TrainMetrics::default();
    if cfg.epochs == 0 {
        return Ok((net, metrics));
    }

    let pairs: Vec<&Pair> = demos.pairs().collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut optimizer = Optimizer::new(
        optim.clone(),
        net.tensors().iter().map(|t| (t.name.clone(), t.data.clone())),
    )?;
    let mut step = 0u64;
    let mut batch: Vec<(Vec<f64>, &[f64])> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            for &i in chunk {
                let (s, a) = pairs[i];
                batch.push((augment_state(s, cfg.eta, rng), a.as_slice()));
            }
            let view: Vec<(&[f64], &[f64])> = batch.iter().map(|(s, a)| (s.as_slice(), *a)).collect();
            let (loss, grads) = net.backward(&view)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("training loss {loss} at epoch {epoch}")));
            }
            loss_sum += loss * chunk.len() as f64;
            let records = optimizer.step_tensors(net.tensors_mut(), &grads.values)?;
            step += 1;
            if step.is_multiple_of(cfg.diag_every) {
                metrics.diagnostics.extend(records);
            }
        }
        let val_nll = if validation.is_empty() {
            f64::NAN
        } else {
            net.mean_nll(
                validation
                    .iter()
                    .flat_map(|t| &t.pairs)
                    .map(|(s, a)| (s.as_slice(), a.as_slice())),
            )?
        };
        metrics.epochs.push(EpochMetrics {
            epoch: epoch + 1,
            train_nll: loss_sum / pairs.len() as f64,
            val_nll,
        });
    }
    Ok((net, metrics))
}

/// Anything that maps a state to an action.
pub trait Policy {
    fn act(&self, state: &[f64]) -> Result<Vec<f64>>;
}

impl Policy for PolicyNet {
    /// The predicted mean; no sampling.
    fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(state)?.mean)
    }
}

/// Wraps a closure as a [`Policy`].
pub struct FnPolicy<F>(pub F);

impl<F: Fn(&[f64]) -> Vec<f64>> Policy for FnPolicy<F> {
    fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok((self.0)(state))
    }
}

/// Fraction of `n_runs` episodes, each capped at `budget` steps, that end
/// in success. Errors inside an episode count as failures.
pub fn evaluate_success(
    policy: &dyn Policy,
    env: &mut dyn Env,
    n_runs: usize,
    budget: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if n_runs == 0 || budget == 0 {
        return Err(Error::Precondition(format!(
            "evaluate_success needs n_runs >= 1 and budget >= 1, got {n_runs} and {budget}"
        )));
    }
    env.set_budget(budget);
    let mut successes = 0usize;
    for _ in 0..n_runs {
        if run_episode(policy, env, budget, rng).unwrap_or(false) {
            successes += 1;
        }
    }
    Ok(successes as f64 / n_runs as f64)
}

fn run_episode(policy: &dyn Policy, env: &mut dyn Env, budget: usize, rng: &mut Rng) -> Result<bool> {
    let mut state = env.reset(rng);
    for _ in 0..budget {
        let out = env.step(&policy.act(&state)?)?;
        if out.done {
            return Ok(out.success);
        }
        state = out.state;
    }
    Ok(false)
}

// ---------------------------------------------------------------------------
// demonstration files

/// Writes one CSV record per step:
/// `traj_id,step,provenance,success,s0..s{n-1},a0..a{m-1}`.
/// Numbers use the shortest text that parses back to the same value.
pub fn write_demos<W: Write>(writer: W, trajectories: &[Trajectory]) -> Result<()> {
    let (sd, ad) = trajectories.iter().find_map(Trajectory::dims).unwrap_or((0, 0));
    check_consistent(trajectories)?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["traj_id".to_string(), "step".into(), "provenance".into(), "success".into()];
    header.extend((0..sd).map(|i| format!("s{i}")));
    header.extend((0..ad).map(|i| format!("a{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (id, t) in trajectories.iter().enumerate() {
        for (step, (s, a)) in t.pairs.iter().enumerate() {
            let mut rec = vec![
                id.to_string(),
                step.to_string(),
                t.provenance.to_string(),
                (t.success as u8).to_string(),
            ];
            rec.extend(s.iter().chain(a).map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<demo writer>", e))
}

pub fn read_demos<R: Read>(reader: R) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    let parse_err = |line: usize, reason: String| Error::Parse {
        what: "demo file",
        line,
        reason,
    };
    let fixed = ["traj_id", "step", "provenance", "success"];
    if header.len() < fixed.len() || fixed.iter().zip(header.iter()).any(|(a, b)| *a != b) {
        return Err(parse_err(1, format!("unexpected header {:?}", header)));
    }
    let sd = header.iter().filter(|h| h.starts_with('s') && h[1..].parse::<usize>().is_ok()).count();
    let ad = header.len() - fixed.len() - sd;

    let mut out: Vec<Trajectory> = Vec::new();
    let mut current: Option<usize> = None;
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |k: usize| rec.get(k).ok_or_else(|| parse_err(line, format!("missing column {k}")));
        let id: usize = field(0)?.parse().map_err(|e| parse_err(line, format!("traj_id: {e}")))?;
        let step: usize = field(1)?.parse().map_err(|e| parse_err(line, format!("step: {e}")))?;
        let prov: Provenance = field(2)?.parse().map_err(|e| parse_err(line, e))?;
        let success = match field(3)? {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(line, format!("success flag `{other}`"))),
        };
        let values: Vec<f64> = (4..4 + sd + ad)
            .map(|k| field(k)?.parse::<f64>().map_err(|e| parse_err(line, format!("column {k}: {e}"))))
            .collect::<Result<_>>()?;
        let pair = (values[..sd].to_vec(), values[sd..].to_vec());
        if current != Some(id) {
            if step != 0 {
                return Err(parse_err(line, format!("trajectory {id} starts at step {step}")));
            }
            current = Some(id);
            out.push(Trajectory::new(Vec::new(), prov, success));
        }
        let t = out.last_mut().expect("trajectory started");
        if step != t.pairs.len() || prov != t.provenance || success != t.success {
            return Err(parse_err(line, format!("inconsistent record for trajectory {id}")));
        }
        t.pairs.push(pair);
    }
    Ok(out)
}

pub fn save_demos(path: &Path, trajectories: &[Trajectory]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_demos(std::io::BufWriter::new(file), trajectories)
}

pub fn load_demos(path: &Path) -> Result<Vec<Trajectory>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_demos(std::io::BufReader::new(file))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<demo stream>", io),
        other => Error::Parse {
            what: "demo file",
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}
