//! First-moment estimators: the plain exponential moving average and the
//! Student-t momentum, whose per-step decay adapts to how far each new
//! gradient sits from the running mean.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Shared regularizer for the Mahalanobis denominator (and Adam's epsilon).
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmaState {
    pub m: Vec<f64>,
    pub beta: f64,
    pub t: u64,
}

impl EmaState {
    pub fn new(dim: usize, beta: f64) -> Self {
        Self {
            m: vec![0.0; dim],
            beta,
            t: 0,
        }
    }

    /// `m ← β·m + (1−β)·g`.
    pub fn update(&mut self, g: &[f64]) -> Result<()> {
        check_len("ema_update", self.m.len(), g.len())?;
        let beta = self.beta;
        for (m, &g) in self.m.iter_mut().zip(g) {
            *m = beta * *m + (1.0 - beta) * g;
        }
        self.t += 1;
        Ok(())
    }

    /// `m / (1 − βᵗ)`; returns `m` unchanged before the first update.
    pub fn bias_corrected(&self) -> Vec<f64> {
        bias_correct(&self.m, self.beta, self.t)
    }
}

pub(crate) fn bias_correct(v: &[f64], beta: f64, t: u64) -> Vec<f64> {
    if t == 0 {
        return v.to_vec();
    }
    let c = 1.0 - beta.powi(t as i32);
    v.iter().map(|x| x / c).collect()
}

/// How the accumulated weight `W` forgets old weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVariant {
    /// `W ← β·(W + w)`: older weights shrink relative to the newest one.
    #[default]
    Modified,
    /// `W ← ((2β−1)/β)·W + w`: the first published form.
    Original,
}

/// Running state of the Student-t momentum for one parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TMomentState {
    /// Robust running mean.
    pub m: Vec<f64>,
    /// Accumulated weight `W`.
    pub w_sum: f64,
    /// Raw (not bias-corrected) second-moment EMA, the scale inside `D`.
    pub sigma2: Vec<f64>,
    pub beta: f64,
    pub eps: f64,
    pub t: u64,
    pub decay: DecayVariant,
    /// For `t < warmup_steps` the scale in `D` is floored at `g⊙g`.
    #[serde(default)]
    pub warmup_steps: u64,
}

/// Diagnostics of one t-momentum update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMomentStep {
    pub distance: f64,
    pub w: f64,
    pub beta_w: f64,
}

impl TMomentState {
    /// Fresh state with `W₀ = β/(1−β)`, which makes the first Gaussian-limit
    /// step use `β_w = β` exactly like the EMA.
    pub fn new(dim: usize, beta: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; dim],
            w_sum: beta / (1.0 - beta),
            sigma2: vec![0.0; dim],
            beta,
            eps,
            t: 0,
            decay: DecayVariant::Modified,
            warmup_steps: 0,
        }
    }

    pub fn with_decay(mut self, decay: DecayVariant) -> Self {
        self.decay = decay;
        self
    }

    pub fn with_warmup(mut self, steps: u64) -> Self {
        self.warmup_steps = steps;
        self
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// Squared Mahalanobis distance `Σ (gʲ−mʲ)² / (σ²ʲ + ε)` against the
    /// current (pre-update) mean and scale.
    pub fn mahalanobis_sq(&self, g: &[f64]) -> Result<f64> {
        check_len("mahalanobis_sq", self.m.len(), g.len())?;
        check_len("mahalanobis_sq sigma2", self.m.len(), self.sigma2.len())?;
        let warm = self.t < self.warmup_steps;
        Ok(self
            .m
            .iter()
            .zip(&self.sigma2)
            .zip(g)
            .map(|((&m, &s2), &g)| {
                let scale = if warm { s2.max(g * g) } else { s2 };
                let dev = g - m;
                dev * dev / (scale + self.eps)
            })
            .sum())
    }

    /// One t-momentum step with degrees of freedom `nu`.
    ///
    /// `nu = +∞` is accepted and yields `w = 1`.
    pub fn update(&mut self, g: &[f64], nu: f64) -> Result<TMomentStep> {
        if !(nu > 0.0) {
            return Err(Error::Domain(format!("degrees of freedom must be > 0, got {nu}")));
        }
        let distance = self.mahalanobis_sq(g)?;
        let w = student_weight(nu, self.dim() as f64, distance);
        let beta_w = self.apply_weight(g, w);
        Ok(TMomentStep {
            distance,
            w,
            beta_w,
        })
    }

    /// Blend `g` into the mean with weight `w` and advance `W`; returns `β_w`.
    pub(crate) fn apply_weight(&mut self, g: &[f64], w: f64) -> f64 {
        let beta_w = self.w_sum / (self.w_sum + w);
        for (m, &g) in self.m.iter_mut().zip(g) {
            *m = beta_w * *m + (1.0 - beta_w) * g;
        }
        self.w_sum = match self.decay {
            DecayVariant::Modified => self.beta * (self.w_sum + w),
            DecayVariant::Original => (2.0 * self.beta - 1.0) / self.beta * self.w_sum + w,
        };
        self.t += 1;
        beta_w
    }

    /// `σ² ← β₂·σ² + (1−β₂)·g⊙g`.
    pub fn update_variance(&mut self, g: &[f64], beta2: f64) -> Result<()> {
        check_len("ema_variance_update", self.sigma2.len(), g.len())?;
        for (s, &g) in self.sigma2.iter_mut().zip(g) {
            *s = beta2 * *s + (1.0 - beta2) * g * g;
        }
        Ok(())
    }

    pub fn bias_corrected(&self) -> Vec<f64> {
        bias_correct(&self.m, self.beta, self.t)
    }
}

/// `w = (ν + d) / (ν + D)`, taken as 1 when `ν` is infinite.
pub fn student_weight(nu: f64, dim: f64, distance: f64) -> f64 {
    if nu.is_infinite() {
        1.0
    } else {
        (nu + dim) / (nu + distance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ema_single_step() {
        let mut s = EmaState::new(1, 0.9);
        s.update(&[1.0]).unwrap();
        assert!(close(s.m[0], 0.1, 1e-15));
        assert_eq!(s.t, 1);
    }

    #[test]
    fn ema_fixed_point() {
        let mut s = EmaState::new(2, 0.9);
        s.m = vec![0.3, -1.2];
        s.update(&[0.3, -1.2]).unwrap();
        assert_eq!(s.m, vec![0.3, -1.2]);
    }

    #[test]
    fn ema_constant_stream_bias_corrected() {
        let c = -2.75;
        let mut s = EmaState::new(1, 0.9);
        for _ in 0..1000 {
            s.update(&[c]).unwrap();
        }
        // closed form: m_t = c(1 - β^t), so m_t / (1 - β^t) = c
        let closed = c * (1.0 - 0.9f64.powi(1000));
        assert!(close(s.m[0], closed, 1e-12 * c.abs()));
        assert!(close(s.bias_corrected()[0], c, 1e-12 * c.abs()));
    }

    #[test]
    fn ema_shape_error() {
        let mut s = EmaState::new(2, 0.9);
        assert!(matches!(s.update(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn mahalanobis_examples() {
        let mut s = TMomentState::new(2, 0.9, 0.0);
        s.sigma2 = vec![1.0, 4.0];
        assert_eq!(s.mahalanobis_sq(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(close(s.mahalanobis_sq(&[1.0, 2.0]).unwrap(), 2.0, 1e-15));

        let d = 5;
        let mut s = TMomentState::new(d, 0.9, 0.0);
        s.m = vec![0.5, -1.0, 2.0, 0.0, 3.0];
        s.sigma2 = vec![0.25, 1.0, 4.0, 9.0, 0.01];
        let g: Vec<f64> = s.m.iter().zip(&s.sigma2).map(|(m, v)| m + v.sqrt()).collect();
        assert!(close(s.mahalanobis_sq(&g).unwrap(), d as f64, 1e-12));
        assert!(s.mahalanobis_sq(&[0.0; 4]).is_err());
    }

    #[test]
    fn t_momentum_hand_trace() {
        let mut s = TMomentState::new(1, 0.9, 0.0);
        s.sigma2 = vec![1.0];
        assert!(close(s.w_sum, 9.0, 1e-12));
        let step = s.update(&[1.0], 3.0).unwrap();
        assert!(close(step.distance, 1.0, 1e-15));
        assert!(close(step.w, 1.0, 1e-15));
        assert!(close(step.beta_w, 0.9, 1e-12));
        assert!(close(s.m[0], 0.1, 1e-12));
        assert!(close(s.w_sum, 9.0, 1e-12));
    }

    #[test]
    fn t_momentum_suppresses_outlier() {
        let mut s = TMomentState::new(1, 0.9, 0.0);
        s.sigma2 = vec![1.0];
        let step = s.update(&[100.0], 3.0).unwrap();
        let w = 4.0 / (3.0 + 1e4);
        let beta_w = 9.0 / (9.0 + w);
        assert!(close(step.distance, 1e4, 1e-9));
        assert!(close(step.w, w, 1e-15));
        assert!(close(step.beta_w, beta_w, 1e-15));
        assert!(close(s.m[0], (1.0 - beta_w) * 100.0, 1e-12));
        assert!(s.m[0] < 0.005);

        let mut ema = EmaState::new(1, 0.9);
        ema.update(&[100.0]).unwrap();
        assert!(close(ema.m[0], 10.0, 1e-12));
    }

    #[test]
    fn t_momentum_rejects_bad_nu() {
        let mut s = TMomentState::new(1, 0.9, DEFAULT_EPS);
        assert!(matches!(s.update(&[1.0], 0.0), Err(Error::Domain(_))));
        assert!(matches!(s.update(&[1.0, 2.0], 1.0), Err(Error::Shape { .. })));
    }

    #[test]
    fn gaussian_limit_reverts_to_ema() {
        let mut rng = Rng::new(17);
        let d = 4;
        for nu in [1e12, f64::INFINITY] {
            // warmup keeps the first steps' D finite while sigma2 is still ~0
            let mut t = TMomentState::new(d, 0.9, DEFAULT_EPS).with_warmup(10);
            let mut e = EmaState::new(d, 0.9);
            for _ in 0..1000 {
                let g: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                t.update(&g, nu).unwrap();
                t.update_variance(&g, 0.999).unwrap();
                e.update(&g).unwrap();
                let diff = t.m.iter().zip(&e.m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(diff <= 1e-9, "nu={nu} diff={diff}");
            }
        }
    }

    #[test]
    fn variance_update() {
        let mut s = TMomentState::new(1, 0.9, DEFAULT_EPS);
        s.update_variance(&[1.0], 0.999).unwrap();
        assert!(close(s.sigma2[0], 0.001, 1e-15));

        s.sigma2 = vec![2.0];
        for k in 1..=5 {
            s.update_variance(&[0.0], 0.999).unwrap();
            assert!(close(s.sigma2[0], 2.0 * 0.999f64.powi(k), 1e-15));
        }

        let c = 1.7;
        let mut s = TMomentState::new(1, 0.9, DEFAULT_EPS);
        let n = 10_000;
        for _ in 0..n {
            s.update_variance(&[c], 0.999).unwrap();
        }
        let corrected = s.sigma2[0] / (1.0 - 0.999f64.powi(n));
        assert!(close(corrected, c * c, 1e-9));
    }

    #[test]
    fn decay_variants_agree_when_weights_are_one() {
        let mut rng = Rng::new(3);
        let mut modified = TMomentState::new(3, 0.9, DEFAULT_EPS);
        let mut original = TMomentState::new(3, 0.9, DEFAULT_EPS).with_decay(DecayVariant::Original);
        for _ in 0..500 {
            let g: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            let a = modified.update(&g, f64::INFINITY).unwrap();
            let b = original.update(&g, f64::INFINITY).unwrap();
            assert!(close(a.beta_w, b.beta_w, 1e-12));
            assert!(close(modified.w_sum, original.w_sum, 1e-9));
            for (x, y) in modified.m.iter().zip(&original.m) {
                assert!(close(*x, *y, 1e-12));
            }
        }
    }

    #[test]
    fn decay_variants_differ_under_varying_weights() {
        let mut modified = TMomentState::new(1, 0.9, 0.0);
        let mut original = modified.clone().with_decay(DecayVariant::Original);
        modified.sigma2 = vec![1.0];
        original.sigma2 = vec![1.0];
        for g in [0.1, 5.0, -0.3] {
            modified.update(&[g], 2.0).unwrap();
            original.update(&[g], 2.0).unwrap();
        }
        assert_ne!(modified.w_sum, original.w_sum);
    }

    #[test]
    fn warmup_floors_the_scale() {
        let s = TMomentState::new(1, 0.9, 1e-8).with_warmup(10);
        // fresh sigma2 = 0; without the floor D would be 1e8
        let d = s.mahalanobis_sq(&[1.0]).unwrap();
        assert!(close(d, 1.0, 1e-7));
        let cold = TMomentState::new(1, 0.9, 1e-8);
        assert!(cold.mahalanobis_sq(&[1.0]).unwrap() > 1e7);
    }

    proptest! {
        #[test]
        fn weight_bounds(nu in 1e-3f64..1e6, dim in 1usize..200, distance in 0.0f64..1e8) {
            let w = student_weight(nu, dim as f64, distance);
            let w_max = (nu + dim as f64) / nu;
            prop_assert!(w > 0.0);
            prop_assert!(w <= w_max * (1.0 + 1e-15));
        }

        #[test]
        fn beta_w_in_unit_interval_and_monotone(
            w_sum in 0.0f64..1e4,
            nu in 0.01f64..100.0,
            d1 in 0.0f64..1e4,
            extra in 0.0f64..1e4,
        ) {
            let d2 = d1 + extra;
            let bw = |d: f64| {
                let w = student_weight(nu, 1.0, d);
                w_sum / (w_sum + w)
            };
            prop_assert!((0.0..1.0).contains(&bw(d1)));
            prop_assert!(bw(d1) <= bw(d2));
        }

        #[test]
        fn mean_stays_between_old_mean_and_gradient(
            m0 in -100.0f64..100.0,
            g in -1e3f64..1e3,
            s2 in 1e-3f64..10.0,
            nu in 0.1f64..1e3,
        ) {
            let mut s = TMomentState::new(1, 0.9, DEFAULT_EPS);
            s.m = vec![m0];
            s.sigma2 = vec![s2];
            s.update(&[g], nu).unwrap();
            let (lo, hi) = if m0 < g { (m0, g) } else { (g, m0) };
            prop_assert!(s.m[0] >= lo - 1e-12 && s.m[0] <= hi + 1e-12);
        }

        #[test]
        fn accumulated_weight_stays_bounded(
            seed in 0u64..1000,
            nu in 0.5f64..50.0,
        ) {
            let mut rng = Rng::new(seed);
            let dim = 3;
            let mut s = TMomentState::new(dim, 0.9, DEFAULT_EPS);
            s.sigma2 = vec![1.0; dim];
            let bound = 0.9 / 0.1 * (nu + dim as f64) / nu;
            for _ in 0..200 {
                let g: Vec<f64> = (0..dim).map(|_| 3.0 * rng.standard_normal()).collect();
                s.update(&g, nu).unwrap();
                prop_assert!(s.w_sum >= 0.0 && s.w_sum <= bound * (1.0 + 1e-12));
            }
        }
    }
}
