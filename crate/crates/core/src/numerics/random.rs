use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};

/// Seeded pseudo-random generator.
///
/// Backed by ChaCha8, whose output stream is fixed by the seed alone, so runs
/// replay identically across machines.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for a named sub-stream of this seed.
    ///
    /// Depends only on `(seed, tag)`, never on how much of the parent stream
    /// was consumed.
    pub fn derive(&self, tag: u64) -> Rng {
        Rng::new(splitmix64(self.seed ^ splitmix64(tag)))
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Chi-square draw with `nu` degrees of freedom.
    pub fn chi_square(&mut self, nu: f64) -> Result<f64> {
        let dist = ChiSquared::new(nu)
            .map_err(|e| Error::Domain(format!("chi-square with nu={nu}: {e}")))?;
        Ok(dist.sample(&mut self.inner))
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// `mean + std ⊙ ε` with ε i.i.d. standard normal.
pub fn sample_gaussian(rng: &mut Rng, mean: &[f64], std: &[f64]) -> Result<Vec<f64>> {
    check_len("sample_gaussian std", mean.len(), std.len())?;
    if let Some(s) = std.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::Domain(format!("standard deviation must be >= 0, got {s}")));
    }
    Ok(mean
        .iter()
        .zip(std)
        .map(|(&m, &s)| {
            let eps = rng.standard_normal();
            if s == 0.0 {
                m
            } else {
                m + s * eps
            }
        })
        .collect())
}

/// Draw from the `dim`-dimensional standard multivariate Student-t with `nu`
/// degrees of freedom: a Gaussian vector divided by `sqrt(χ²_ν / ν)`.
pub fn sample_student_t(rng: &mut Rng, nu: f64, dim: usize) -> Result<Vec<f64>> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("degrees of freedom must be > 0, got {nu}")));
    }
    if dim == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let z: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let u = rng.chi_square(nu)?;
    let scale = (nu / u).sqrt();
    Ok(z.into_iter().map(|v| v * scale).collect())
}
