//! Seeded random sampling.
//!
//! The generator is xoshiro256++ seeded through SplitMix64
//! (`rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64`). Standard normal
//! variates use the Marsaglia polar method, Poisson variates come from
//! `rand_distr::Poisson`. With `Cargo.lock` pinned, every stream is a pure
//! function of the seed and the sequence of calls.

use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, Poisson};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for sub-task `index`, derived from this
    /// generator's seed only (not from its current position).
    pub fn substream(&self, index: u64) -> Self {
        Self::new(derive_seed(self.seed, index))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Standard normal by the Marsaglia polar method; the second variate of
    /// each accepted pair is cached for the next call.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    pub fn poisson(&mut self, lambda: f64) -> Result<u64> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "Poisson rate must be positive and finite, got {lambda}"
            )));
        }
        let dist =
            Poisson::new(lambda).map_err(|e| Error::Domain(format!("Poisson({lambda}): {e}")))?;
        Ok(dist.sample(&mut self.inner) as u64)
    }

    /// Poisson(θ) conditioned on being at least one.
    ///
    /// Inversion over the truncated pmf for θ < 1, rejection of zeros from an
    /// ordinary Poisson draw otherwise (acceptance rate `1 − e^{−θ}` ≥ 0.63).
    pub fn zero_truncated_poisson(&mut self, theta: f64) -> Result<u64> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "zero-truncated Poisson parameter must be positive and finite, got {theta}"
            )));
        }
        if theta < 1.0 {
            let u = self.uniform();
            let mut k = 1u64;
            let mut pk = theta / theta.exp_m1();
            let mut cdf = pk;
            while u >= cdf && pk > 0.0 {
                k += 1;
                pk *= theta / k as f64;
                cdf += pk;
            }
            Ok(k)
        } else {
            loop {
                let draw = self.poisson(theta)?;
                if draw >= 1 {
                    return Ok(draw);
                }
            }
        }
    }
}

/// SplitMix64 finaliser applied to `seed ⊕ golden·(index + 1)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Covariance `Σᵢⱼ = ρ^|i−j|`.
pub fn ar1_covariance(p: usize, rho: f64) -> Matrix {
    Matrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32))
}

/// `n` independent rows from `N(0, Σ)` with AR(1) correlation `ρ^|i−j|`,
/// generated as `L z` with `L` the Cholesky factor of `Σ`.
pub fn mvn_ar1_sample(rng: &mut Rng, n: usize, p: usize, rho: f64) -> Result<Matrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [0, 1), got {rho}")));
    }
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput(format!(
            "sample dimensions must be positive, got {n}x{p}"
        )));
    }
    let chol = Cholesky::factor(&ar1_covariance(p, rho))?;
    let l = chol.lower();
    let mut data = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = rng.standard_normal());
        for i in 0..p {
            data.push((0..=i).map(|k| l[(i, k)] * z[k]).sum());
        }
    }
    Matrix::new(n, p, data)
}
