//! Desk-scale tasks and scripted demonstrators.
//!
//! Two environments: a single-step linear-Gaussian regression task with an
//! analytic NLL floor, and a kinematic 2-D point-mass pick-and-drop task.
//! Demonstrators wrap each environment's expert controller; amateurs add
//! heavy-tailed action noise and hesitation on top of it.

use serde::{Deserialize, Serialize};

use crate::bc::{Provenance, Trajectory};
use crate::error::{check_len, Error, Result};
use crate::nn::{LOG_VAR_MAX, LOG_VAR_MIN};
use crate::numerics::{sample_student_t, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub success: bool,
    pub done: bool,
}

pub trait Env: Send {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Maximum number of steps per episode.
    fn budget(&self) -> usize;
    fn set_budget(&mut self, budget: usize);
    fn reset(&mut self, rng: &mut Rng) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome>;
    /// The expert's action at the current state.
    fn expert_action(&self, rng: &mut Rng) -> Vec<f64>;
}

// ---------------------------------------------------------------------------
// point mass

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointMassConfig {
    /// Positions are drawn from `[-arena, arena]²`.
    pub arena: f64,
    pub r_pick: f64,
    pub r_drop: f64,
    pub max_step: f64,
    pub budget: usize,
}

impl Default for PointMassConfig {
    fn default() -> Self {
        Self {
            arena: 1.0,
            r_pick: 0.15,
            r_drop: 0.2,
            max_step: 0.2,
            budget: 40,
        }
    }
}

/// Kinematic pick-and-drop in the plane.
///
/// State (9): agent xy, object xy, carried flag, goal xy, and the vector from
/// the agent to its current sub-goal (the object until it is picked, then the
/// goal). Action (2): desired displacement, clamped to `max_step` in norm.
/// The object is picked when the agent comes within `r_pick` and released,
/// ending the episode successfully, once carried within `r_drop` of the goal.
#[derive(Debug, Clone)]
pub struct PointMassEnv {
    cfg: PointMassConfig,
    agent: [f64; 2],
    object: [f64; 2],
    goal: [f64; 2],
    carried: bool,
    steps: usize,
    done: bool,
}

pub const POINT_MASS_STATE_DIM: usize = 9;
pub const POINT_MASS_ACTION_DIM: usize = 2;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn clamp_norm(v: [f64; 2], max: f64) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if n > max {
        [v[0] * max / n, v[1] * max / n]
    } else {
        v
    }
}

impl PointMassEnv {
    pub fn new(cfg: PointMassConfig) -> Self {
        Self {
            cfg,
            agent: [0.0; 2],
            object: [0.0; 2],
            goal: [0.0; 2],
            carried: false,
            steps: 0,
            done: true,
        }
    }

    pub fn config(&self) -> &PointMassConfig {
        &self.cfg
    }

    fn sub_goal(&self) -> [f64; 2] {
        if self.carried {
            self.goal
        } else {
            self.object
        }
    }

    fn observe(&self) -> Vec<f64> {
        let sg = self.sub_goal();
        vec![
            self.agent[0],
            self.agent[1],
            self.object[0],
            self.object[1],
            if self.carried { 1.0 } else { 0.0 },
            self.goal[0],
            self.goal[1],
            sg[0] - self.agent[0],
            sg[1] - self.agent[1],
        ]
    }

    /// The expert controller as a pure function of an observed state: move
    /// straight at the current sub-goal, as far as one step allows.
    pub fn expert_controller(state: &[f64], max_step: f64) -> Vec<f64> {
        clamp_norm([state[7], state[8]], max_step).to_vec()
    }
}

impl Env for PointMassEnv {
    fn state_dim(&self) -> usize {
        POINT_MASS_STATE_DIM
    }

    fn action_dim(&self) -> usize {
        POINT_MASS_ACTION_DIM
    }

    fn budget(&self) -> usize {
        self.cfg.budget
    }

    fn set_budget(&mut self, budget: usize) {
        self.cfg.budget = budget;
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        let a = self.cfg.arena;
        let draw = |rng: &mut Rng| [rng.uniform_range(-a, a), rng.uniform_range(-a, a)];
        self.agent = draw(rng);
        self.goal = draw(rng);
        // keep the object out of the drop zone so every episode needs a carry
        loop {
            self.object = draw(rng);
            if dist(self.object, self.goal) > 2.0 * self.cfg.r_drop {
                break;
            }
        }
        self.carried = false;
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Env("step after episode end".into()));
        }
        check_len("PointMassEnv::step", POINT_MASS_ACTION_DIM, action.len())?;
        if action.iter().any(|v| !v.is_finite()) {
            return Err(Error::Env(format!("non-finite action {action:?}")));
        }
        let mv = clamp_norm([action[0], action[1]], self.cfg.max_step);
        self.agent = [self.agent[0] + mv[0], self.agent[1] + mv[1]];
        if !self.carried && dist(self.agent, self.object) <= self.cfg.r_pick {
            self.carried = true;
        }
        if self.carried {
            self.object = self.agent;
        }
        self.steps += 1;
        let success = self.carried && dist(self.object, self.goal) <= self.cfg.r_drop;
        if success {
            self.carried = false;
        }
        self.done = success || self.steps >= self.cfg.budget;
        Ok(StepOutcome {
            state: self.observe(),
            success,
            done: self.done,
        })
    }

    fn expert_action(&self, _rng: &mut Rng) -> Vec<f64> {
        Self::expert_controller(&self.observe(), self.cfg.max_step)
    }
}

// ---------------------------------------------------------------------------
// linear Gaussian

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinGaussConfig {
    /// Row-major `action_dim × state_dim`.
    pub matrix: Vec<Vec<f64>>,
    pub noise_std: f64,
}

impl LinGaussConfig {
    pub fn identity(dim: usize, noise_std: f64) -> Self {
        let matrix = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { matrix, noise_std }
    }

    /// Random `action_dim × state_dim` matrix with N(0, 1/state_dim) entries.
    pub fn random(state_dim: usize, action_dim: usize, noise_std: f64, rng: &mut Rng) -> Self {
        let s = 1.0 / (state_dim as f64).sqrt();
        let matrix = (0..action_dim)
            .map(|_| (0..state_dim).map(|_| s * rng.standard_normal()).collect())
            .collect();
        Self { matrix, noise_std }
    }
}

/// One-step task: the state is standard normal and the expert answers
/// `M·s + noise_std·ε`. An action succeeds when every coordinate lies within
/// `3·noise_std` of `M·s`.
#[derive(Debug, Clone)]
pub struct LinGaussEnv {
    matrix: Vec<Vec<f64>>,
    noise_std: f64,
    threshold: f64,
    state: Vec<f64>,
    budget: usize,
    done: bool,
}

impl LinGaussEnv {
    pub fn new(cfg: LinGaussConfig) -> Result<Self> {
        if !(cfg.noise_std >= 0.0) {
            return Err(Error::Domain(format!("noise_std must be >= 0, got {}", cfg.noise_std)));
        }
        let state_dim = cfg.matrix.first().map(Vec::len).unwrap_or(0);
        if state_dim == 0 || cfg.matrix.iter().any(|r| r.len() != state_dim) {
            return Err(Error::config("env.matrix", "must be a non-empty rectangular matrix"));
        }
        Ok(Self {
            threshold: 3.0 * cfg.noise_std,
            noise_std: cfg.noise_std,
            state: vec![0.0; state_dim],
            matrix: cfg.matrix,
            budget: 1,
            done: true,
        })
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn mean_action(&self, state: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(state).map(|(m, s)| m * s).sum())
            .collect()
    }

    /// Smallest expected per-dimension NLL any policy can reach, given the
    /// log-variance clamp: `½ log(2πe σ²)` when `log σ²` is inside the clamp.
    pub fn nll_floor_per_dim(noise_std: f64) -> f64 {
        let var = noise_std * noise_std;
        let lv = if var > 0.0 {
            var.ln().clamp(LOG_VAR_MIN, LOG_VAR_MAX)
        } else {
            LOG_VAR_MIN
        };
        0.5 * ((2.0 * std::f64::consts::PI).ln() + lv + var * (-lv).exp())
    }
}

impl Env for LinGaussEnv {
    fn state_dim(&self) -> usize {
        self.state.len()
    }

    fn action_dim(&self) -> usize {
        self.matrix.len()
    }

    fn budget(&self) -> usize {
        self.budget
    }

    fn set_budget(&mut self, budget: usize) {
        self.budget = budget.max(1);
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        for s in &mut self.state {
            *s = rng.standard_normal();
        }
        self.done = false;
        self.state.clone()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Env("step after episode end".into()));
        }
        check_len("LinGaussEnv::step", self.action_dim(), action.len())?;
        let target = self.mean_action(&self.state);
        let success = action
            .iter()
            .zip(&target)
            .all(|(a, t)| (a - t).abs() < self.threshold);
        self.done = true;
        Ok(StepOutcome {
            state: self.state.clone(),
            success,
            done: true,
        })
    }

    fn expert_action(&self, rng: &mut Rng) -> Vec<f64> {
        self.mean_action(&self.state)
            .into_iter()
            .map(|m| m + self.noise_std * rng.standard_normal())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// demonstrators

fn always() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyTail {
    pub nu: f64,
    pub scale: f64,
    /// Per-step probability that the noise is applied.
    #[serde(default = "always")]
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hesitation {
    /// Probability of a zero action.
    pub p_pause: f64,
    /// Probability of the negated expert action.
    pub p_wrong: f64,
}

/// How an amateur departs from the expert; both parts may be active.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Corruption {
    pub heavy_tail: Option<HeavyTail>,
    pub hesitation: Option<Hesitation>,
}

impl Corruption {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_none(&self) -> bool {
        self.heavy_tail.is_none() && self.hesitation.is_none()
    }

    /// Default amateur for an action scale `max_step`: Cauchy noise of scale
    /// `max_step/2` on a fifth of the steps, pauses 10% and reversals 5% of
    /// the time.
    pub fn amateur_default(max_step: f64) -> Self {
        Self {
            heavy_tail: Some(HeavyTail {
                nu: 1.0,
                scale: 0.5 * max_step,
                prob: 0.2,
            }),
            hesitation: Some(Hesitation {
                p_pause: 0.1,
                p_wrong: 0.05,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.heavy_tail {
            if !(h.nu > 0.0 && h.scale >= 0.0 && (0.0..=1.0).contains(&h.prob)) {
                return Err(Error::config("corruption.heavy_tail", format!("{h:?}")));
            }
        }
        if let Some(h) = self.hesitation {
            let ok = h.p_pause >= 0.0 && h.p_wrong >= 0.0 && h.p_pause + h.p_wrong <= 1.0;
            if !ok {
                return Err(Error::config("corruption.hesitation", format!("{h:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedDemonstrator {
    kind: Provenance,
    corruption: Corruption,
}

impl ScriptedDemonstrator {
    pub fn expert() -> Self {
        Self {
            kind: Provenance::Expert,
            corruption: Corruption::none(),
        }
    }

    pub fn amateur(corruption: Corruption) -> Result<Self> {
        corruption.validate()?;
        Ok(Self {
            kind: Provenance::Amateur,
            corruption,
        })
    }

    pub fn kind(&self) -> Provenance {
        self.kind
    }

    pub fn corruption(&self) -> &Corruption {
        &self.corruption
    }

    /// Returns the recorded action and whether it differs from the expert's.
    pub fn act(&self, env: &dyn Env, rng: &mut Rng) -> Result<(Vec<f64>, bool)> {
        let base = env.expert_action(rng);
        if let Some(h) = self.corruption.hesitation {
            let u = rng.uniform();
            if u < h.p_pause {
                return Ok((vec![0.0; base.len()], true));
            }
            if u < h.p_pause + h.p_wrong {
                return Ok((base.iter().map(|v| -v).collect(), true));
            }
        }
        if let Some(h) = self.corruption.heavy_tail {
            if rng.bernoulli(h.prob) {
                let noise: Vec<f64> = (0..base.len())
                    .map(|_| sample_student_t(rng, h.nu, 1).map(|x| x[0]))
                    .collect::<Result<_>>()?;
                let action = base.iter().zip(noise).map(|(b, n)| b + h.scale * n).collect();
                return Ok((action, true));
            }
        }
        Ok((base, false))
    }
}

/// Roll out `demonstrator` for `n` episodes, recording every (state, action).
///
/// Failed episodes are kept and tagged. With `successful_only`, episodes are
/// drawn until `n` successes are collected (at most `100·n` attempts).
pub fn record_demos(
    env: &mut dyn Env,
    demonstrator: &ScriptedDemonstrator,
    n: usize,
    successful_only: bool,
    rng: &mut Rng,
) -> Result<Vec<Trajectory>> {
    if n == 0 {
        return Err(Error::Precondition("record_demos needs n >= 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    let max_attempts = if successful_only { 100 * n } else { n };
    for _ in 0..max_attempts {
        let traj = rollout(env, demonstrator, rng)?;
        if !successful_only || traj.success {
            out.push(traj);
        }
        if out.len() == n {
            return Ok(out);
        }
    }
    Err(Error::Env(format!(
        "only {} of {n} successful demonstrations after {max_attempts} attempts",
        out.len()
    )))
}

fn rollout(env: &mut dyn Env, demonstrator: &ScriptedDemonstrator, rng: &mut Rng) -> Result<Trajectory> {
    let mut state = env.reset(rng);
    let mut pairs = Vec::new();
    let success = loop {
        let (action, _) = demonstrator.act(env, rng)?;
        let outcome = env.step(&action)?;
        pairs.push((std::mem::replace(&mut state, outcome.state), action));
        if outcome.done {
            break outcome.success;
        }
    };
    Ok(Trajectory::new(pairs, demonstrator.kind(), success))
}
