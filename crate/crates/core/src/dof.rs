//! Online degrees-of-freedom estimation and the adaptive t-momentum step.
//!
//! The estimator tracks exponential moving estimates of the mean and variance
//! of `z = log D`, where `D` is the squared Mahalanobis distance the momentum
//! already computes. Excess variance of `z` over `ψ₁(d/2)` (its value under a
//! Gaussian) signals heavy tails and lowers the scale factor `k`; the degrees
//! of freedom used by the momentum are then `ν = k·d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{student_weight, TMomentState};
use crate::numerics::trigamma;

/// Floor for `D` inside the logarithm and for `b`.
pub const DOF_EPS: f64 = 1e-8;

/// `z = log max(D, eps)`.
pub fn dof_z(distance: f64, eps: f64) -> f64 {
    distance.max(eps).ln()
}

/// `k = (1 + √(1 + 4b)) / b`, strictly decreasing in `b > 0`.
pub fn scale_factor(b: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * b).sqrt()) / b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofState {
    pub z_bar: f64,
    pub z_tilde: f64,
    pub lambda: f64,
    pub eps: f64,
    pub dim: usize,
    pub k: f64,
    pub nu: f64,
    /// `ψ₁(d/2)`, cached.
    pub trigamma_half_dim: f64,
    /// When set, `k` stays at this value; the z statistics still update.
    #[serde(default)]
    pub frozen_k: Option<f64>,
}

/// Everything one estimator step computed, for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofStep {
    pub z: f64,
    pub b: f64,
    pub k: f64,
    pub nu: f64,
}

impl DofState {
    /// Starts at `z̄ = 0`, `z̃ = ψ₁(d/2)`, i.e. with `b` on its floor: the
    /// momentum begins non-robust and tightens once heavy tails show up.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("tensor dimension must be positive".into()));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        let psi = trigamma(dim as f64 / 2.0)?;
        let k = scale_factor(DOF_EPS);
        Ok(Self {
            z_bar: 0.0,
            z_tilde: psi,
            lambda,
            eps: DOF_EPS,
            dim,
            k,
            nu: k * dim as f64,
            trigamma_half_dim: psi,
            frozen_k: None,
        })
    }

    pub fn frozen(dim: usize, lambda: f64, k: f64) -> Result<Self> {
        let mut s = Self::new(dim, lambda)?;
        s.frozen_k = Some(k);
        s.k = k;
        s.nu = k * dim as f64;
        Ok(s)
    }

    /// Feed one squared Mahalanobis distance.
    pub fn update(&mut self, distance: f64) -> DofStep {
        let z = dof_z(distance, self.eps);
        let lambda = self.lambda;
        // variance first: it must see the previous mean
        let dev = z - self.z_bar;
        self.z_tilde = lambda * self.z_tilde + lambda * (1.0 - lambda) * dev * dev;
        self.z_bar = lambda * self.z_bar + (1.0 - lambda) * z;
        let b = (self.z_tilde - self.trigamma_half_dim).max(self.eps);
        self.k = self.frozen_k.unwrap_or_else(|| scale_factor(b));
        self.nu = self.k * self.dim as f64;
        DofStep {
            z,
            b,
            k: self.k,
            nu: self.nu,
        }
    }
}

/// Per-step record of the adaptive momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtDiagnostics {
    pub distance: f64,
    pub z: f64,
    pub b: f64,
    pub k: f64,
    pub nu: f64,
    pub w: f64,
    pub beta_w: f64,
}

/// One step of the adaptive t-momentum.
///
/// The distance is computed once and shared by the estimator and the
/// weight; the weight uses the `ν` produced by this very step.
pub fn at_momentum_step(
    moment: &mut TMomentState,
    dof: &mut DofState,
    g: &[f64],
) -> Result<AtDiagnostics> {
    if dof.dim != moment.dim() {
        return Err(Error::shape("at_momentum_step", moment.dim(), dof.dim));
    }
    let distance = moment.mahalanobis_sq(g)?;
    let est = dof.update(distance);
    let w = student_weight(est.nu, dof.dim as f64, distance);
    let beta_w = moment.apply_weight(g, w);
    Ok(AtDiagnostics {
        distance,
        z: est.z,
        b: est.b,
        k: est.k,
        nu: est.nu,
        w,
        beta_w,
    })
}

/// A batch of points for the offline estimator.
#[derive(Debug, Clone)]
pub struct BatchDofSample {
    pub points: Vec<Vec<f64>>,
    pub dim: usize,
}

impl BatchDofSample {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::shape("BatchDofSample", dim, bad.len()));
        }
        Ok(Self { points, dim })
    }
}

/// Offline reference estimate of the degrees of freedom of a sample.
///
/// Uses the coordinate-wise median as the centre, `z_i = log‖x_i − median‖²`
/// and the ordinary batch variance of `z`. Points sitting exactly on the
/// median are skipped since their `z` is `−∞`. Returns `+∞` when the sample
/// looks Gaussian or lighter (`b ≤ 0`).
pub fn batch_dof_reference(sample: &BatchDofSample) -> Result<f64> {
    if sample.points.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 points, got {}",
            sample.points.len()
        )));
    }
    if sample.dim == 0 {
        return Err(Error::Domain("points must have positive dimension".into()));
    }
    let center = coordinate_median(&sample.points, sample.dim);
    let zs: Vec<f64> = sample
        .points
        .iter()
        .map(|p| p.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>())
        .filter(|sq| *sq > 0.0)
        .map(f64::ln)
        .collect();
    if zs.len() < 2 {
        return Err(Error::Domain("fewer than 2 points away from the median".into()));
    }
    let n = zs.len() as f64;
    let mean = zs.iter().sum::<f64>() / n;
    let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n;
    let b = var - trigamma(sample.dim as f64 / 2.0)?;
    if b <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(scale_factor(b))
    }
}

fn coordinate_median(points: &[Vec<f64>], dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let mut col: Vec<f64> = points.iter().map(|p| p[j]).collect();
            col.sort_by(f64::total_cmp);
            let n = col.len();
            if n % 2 == 1 {
                col[n / 2]
            } else {
                0.5 * (col[n / 2 - 1] + col[n / 2])
            }
        })
        .collect()
}
