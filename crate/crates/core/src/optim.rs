//! Adam, t-Adam (fixed degrees of freedom) and At-Adam (adaptive degrees of
//! freedom) over a collection of named parameter tensors.
//!
//! All three share Adam's second moment and bias corrections; they differ
//! only in how the first moment is accumulated. t-Adam uses `ν = k·d` with a
//! fixed `k`, At-Adam re-estimates `k` every step per tensor.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::dof::{at_momentum_step, AtDiagnostics, DofState};
use crate::error::{check_len, Error, Result};
use crate::moments::{DecayVariant, EmaState, TMomentState, DEFAULT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    TAdam,
    AtAdam,
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::TAdam => "t_adam",
            OptimizerKind::AtAdam => "at_adam",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Degrees-of-freedom scale for t-Adam, `ν = fixed_k · d`.
    pub fixed_k: f64,
    /// Decay of the z statistics in At-Adam.
    pub lambda: f64,
    pub decay_variant: DecayVariant,
    /// Steps during which the scale in `D` is floored at `g⊙g`.
    pub warmup_steps: u64,
    /// Pins At-Adam's `k` (the z statistics still run). Used for equivalence checks.
    pub frozen_k: Option<f64>,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: DEFAULT_EPS,
            fixed_k: 1.0,
            lambda: 0.9,
            decay_variant: DecayVariant::Modified,
            warmup_steps: 10,
            frozen_k: None,
        }
    }
}

impl OptimConfig {
    pub fn adam() -> Self {
        Self::default()
    }

    pub fn t_adam(k: f64) -> Self {
        Self {
            kind: OptimizerKind::TAdam,
            fixed_k: k,
            ..Self::default()
        }
    }

    pub fn at_adam(lambda: f64) -> Self {
        Self {
            kind: OptimizerKind::AtAdam,
            lambda,
            ..Self::default()
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::config(name, format!("must lie in (0, 1), got {v}")))
            }
        };
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", format!("must be positive, got {}", self.lr)));
        }
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        if !(self.eps > 0.0) {
            return Err(Error::config("eps", format!("must be positive, got {}", self.eps)));
        }
        match self.kind {
            OptimizerKind::Adam => {}
            OptimizerKind::TAdam => {
                if !(self.fixed_k > 0.0) {
                    return Err(Error::config(
                        "fixed_k",
                        format!("must be positive, got {}", self.fixed_k),
                    ));
                }
            }
            OptimizerKind::AtAdam => {
                unit("lambda", self.lambda)?;
                if let Some(k) = self.frozen_k {
                    if !(k > 0.0) {
                        return Err(Error::config("frozen_k", format!("must be positive, got {k}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MomentState {
    Ema { first: EmaState, second: Vec<f64> },
    Student(TMomentState),
}

impl MomentState {
    fn second(&self) -> &[f64] {
        match self {
            MomentState::Ema { second, .. } => second,
            MomentState::Student(t) => &t.sigma2,
        }
    }

    fn first(&self) -> &[f64] {
        match self {
            MomentState::Ema { first, .. } => &first.m,
            MomentState::Student(t) => &t.m,
        }
    }
}

/// One parameter tensor with its pending gradient and optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub name: String,
    pub value: Vec<f64>,
    /// Gradient for the next step; consumed by the step.
    pub grad: Option<Vec<f64>>,
    pub moment: MomentState,
    /// Present iff the optimizer is At-Adam.
    pub dof: Option<DofState>,
    pub step: u64,
}

impl ParamSlot {
    pub fn new(name: impl Into<String>, value: Vec<f64>, cfg: &OptimConfig) -> Result<Self> {
        let dim = value.len();
        if dim == 0 {
            return Err(Error::Precondition("parameter tensor is empty".into()));
        }
        let student = || {
            TMomentState::new(dim, cfg.beta1, cfg.eps)
                .with_decay(cfg.decay_variant)
                .with_warmup(cfg.warmup_steps)
        };
        let (moment, dof) = match cfg.kind {
            OptimizerKind::Adam => (
                MomentState::Ema {
                    first: EmaState::new(dim, cfg.beta1),
                    second: vec![0.0; dim],
                },
                None,
            ),
            OptimizerKind::TAdam => (MomentState::Student(student()), None),
            OptimizerKind::AtAdam => {
                let dof = match cfg.frozen_k {
                    Some(k) => DofState::frozen(dim, cfg.lambda, k)?,
                    None => DofState::new(dim, cfg.lambda)?,
                };
                (MomentState::Student(student()), Some(dof))
            }
        };
        Ok(Self {
            name: name.into(),
            value,
            grad: None,
            moment,
            dof,
            step: 0,
        })
    }

    pub fn set_grad(&mut self, grad: Vec<f64>) -> Result<()> {
        check_len("ParamSlot::set_grad", self.value.len(), grad.len())?;
        self.grad = Some(grad);
        Ok(())
    }

    fn take_grad(&mut self) -> Result<Vec<f64>> {
        self.grad
            .take()
            .ok_or_else(|| Error::Precondition(format!("no gradient set for `{}`", self.name)))
    }

    /// Bias-corrected Adam update from the current raw moments.
    fn apply_update(&mut self, cfg: &OptimConfig) {
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let m = self.moment.first();
        let v = self.moment.second();
        for ((p, &m), &v) in self.value.iter_mut().zip(m).zip(v) {
            let m_hat = m / c1;
            let v_hat = v / c2;
            *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

fn kind_mismatch(slot: &ParamSlot, expected: OptimizerKind) -> Error {
    Error::Precondition(format!(
        "slot `{}` does not carry {expected} state",
        slot.name
    ))
}

pub fn adam_step(slot: &mut ParamSlot, cfg: &OptimConfig) -> Result<()> {
    let g = slot.take_grad()?;
    let MomentState::Ema { first, second } = &mut slot.moment else {
        return Err(kind_mismatch(slot, OptimizerKind::Adam));
    };
    first.update(&g)?;
    for (v, &g) in second.iter_mut().zip(&g) {
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
    }
    slot.step += 1;
    slot.apply_update(cfg);
    Ok(())
}

pub fn t_adam_step(slot: &mut ParamSlot, cfg: &OptimConfig) -> Result<crate::moments::TMomentStep> {
    let g = slot.take_grad()?;
    let MomentState::Student(state) = &mut slot.moment else {
        return Err(kind_mismatch(slot, OptimizerKind::TAdam));
    };
    let nu = cfg.fixed_k * state.dim() as f64;
    let info = state.update(&g, nu)?;
    state.update_variance(&g, cfg.beta2)?;
    slot.step += 1;
    slot.apply_update(cfg);
    Ok(info)
}

pub fn at_adam_step(slot: &mut ParamSlot, cfg: &OptimConfig) -> Result<AtDiagnostics> {
    let g = slot.take_grad()?;
    let (MomentState::Student(state), Some(dof)) = (&mut slot.moment, &mut slot.dof) else {
        return Err(kind_mismatch(slot, OptimizerKind::AtAdam));
    };
    let diag = at_momentum_step(state, dof, &g)?;
    state.update_variance(&g, cfg.beta2)?;
    slot.step += 1;
    slot.apply_update(cfg);
    Ok(diag)
}

/// One line of the diagnostics stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DofRecord {
    pub step: u64,
    pub tensor: String,
    pub distance: f64,
    pub b: f64,
    pub k: f64,
    pub nu: f64,
    pub w: f64,
    pub beta_w: f64,
}

impl DofRecord {
    fn new(step: u64, tensor: &str, d: &AtDiagnostics) -> Self {
        Self {
            step,
            tensor: tensor.to_string(),
            distance: d.distance,
            b: d.b,
            k: d.k,
            nu: d.nu,
            w: d.w,
            beta_w: d.beta_w,
        }
    }
}

/// Append-only collector of [`DofRecord`]s; safe to share between threads.
#[derive(Debug, Default)]
pub struct DiagnosticsSink {
    records: Mutex<Vec<DofRecord>>,
}

impl DiagnosticsSink {
    pub fn push(&self, record: DofRecord) {
        self.records.lock().expect("sink poisoned").push(record);
    }

    pub fn extend(&self, records: impl IntoIterator<Item = DofRecord>) {
        self.records.lock().expect("sink poisoned").extend(records);
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("sink poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_records(self) -> Vec<DofRecord> {
        self.records.into_inner().expect("sink poisoned")
    }
}

pub const SNAPSHOT_FORMAT: &str = "robust-bc/optimizer";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSnapshot {
    pub format: String,
    pub version: u32,
    pub config: OptimConfig,
    pub slots: Vec<ParamSlot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    config: OptimConfig,
    slots: Vec<ParamSlot>,
}

impl Optimizer {
    pub fn new<N: Into<String>>(
        config: OptimConfig,
        params: impl IntoIterator<Item = (N, Vec<f64>)>,
    ) -> Result<Self> {
        config.validate()?;
        let slots = params
            .into_iter()
            .map(|(name, value)| ParamSlot::new(name, value, &config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, slots })
    }

    pub fn config(&self) -> &OptimConfig {
        &self.config
    }

    pub fn slots(&self) -> &[ParamSlot] {
        &self.slots
    }

    pub fn slots_mut(&mut self) -> &mut [ParamSlot] {
        &mut self.slots
    }

    /// Steps every slot using its pending gradient. Returns the At-Adam
    /// diagnostics, one record per tensor (empty for the other kinds).
    pub fn step(&mut self) -> Result<Vec<DofRecord>> {
        let cfg = &self.config;
        let mut records = Vec::new();
        for slot in &mut self.slots {
            match cfg.kind {
                OptimizerKind::Adam => adam_step(slot, cfg)?,
                OptimizerKind::TAdam => {
                    t_adam_step(slot, cfg)?;
                }
                OptimizerKind::AtAdam => {
                    let diag = at_adam_step(slot, cfg)?;
                    records.push(DofRecord::new(slot.step, &slot.name, &diag));
                }
            }
        }
        Ok(records)
    }

    /// Steps externally owned tensors in place.
    ///
    /// `values[i]` and `grads[i]` correspond to slot `i`. The tensors are
    /// swapped into the slots for the update and swapped back afterwards, so
    /// nothing is copied except the gradients.
    pub fn step_tensors<V: AsMut<Vec<f64>>>(
        &mut self,
        values: &mut [V],
        grads: &[Vec<f64>],
    ) -> Result<Vec<DofRecord>> {
        check_len("Optimizer::step_tensors values", self.slots.len(), values.len())?;
        check_len("Optimizer::step_tensors grads", self.slots.len(), grads.len())?;
        for ((slot, value), grad) in self.slots.iter_mut().zip(values.iter_mut()).zip(grads) {
            let value = value.as_mut();
            check_len("Optimizer::step_tensors tensor", slot.value.len(), value.len())?;
            std::mem::swap(&mut slot.value, value);
            slot.set_grad(grad.clone())?;
        }
        let out = self.step();
        for (slot, value) in self.slots.iter_mut().zip(values.iter_mut()) {
            std::mem::swap(&mut slot.value, value.as_mut());
        }
        out
    }

    pub fn snapshot(&self) -> OptimizerSnapshot {
        OptimizerSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            slots: self.slots.clone(),
        }
    }

    pub fn from_snapshot(snapshot: OptimizerSnapshot) -> Result<Self> {
        if snapshot.format != SNAPSHOT_FORMAT || snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Parse {
                what: "optimizer snapshot",
                line: 1,
                reason: format!(
                    "unsupported format {} v{}",
                    snapshot.format, snapshot.version
                ),
            });
        }
        snapshot.config.validate()?;
        Ok(Self {
            config: snapshot.config,
            slots: snapshot.slots,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.snapshot())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_snapshot(serde_json::from_str(&text)?)
    }
}
