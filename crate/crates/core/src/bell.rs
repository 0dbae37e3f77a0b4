//! The Bell distribution in its mean parameterisation.
//!
//! With `θ = W₀(μ)` the pmf is
//! `P(Y = y) = θʸ · exp(1 − eᶿ) · B_y / y!`, where `B_y` are the Bell numbers.
//! Mean is `μ = θeᶿ` and variance `μ(1 + θ)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::Rng;
use crate::special::lambert_w0;

/// Largest count for which log Bell numbers are tabulated by default.
pub const DEFAULT_BELL_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellParam {
    mu: f64,
    theta: f64,
}

impl BellParam {
    pub fn from_mean(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "Bell mean must be positive and finite, got {mu}"
            )));
        }
        Ok(Self {
            mu,
            theta: lambert_w0(mu)?,
        })
    }

    pub fn from_theta(theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "Bell parameter must be positive and finite, got {theta}"
            )));
        }
        let mu = theta * theta.exp();
        if !mu.is_finite() {
            return Err(Error::Domain(format!(
                "Bell mean overflows for theta = {theta}"
            )));
        }
        Ok(Self { mu, theta })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Table of `ln B_y` and `ln y!` for `y ≤ cap`.
///
/// Built from the Bell triangle `A(n,0) = A(n−1,n−1)`,
/// `A(n,k) = A(n,k−1) + A(n−1,k−1)`, `B_n = A(n,0)`, carried out in log space
/// so that every step is a sum of positive terms.
#[derive(Debug, Clone)]
pub struct BellTable {
    log_bell: Vec<f64>,
    log_factorial: Vec<f64>,
}

impl BellTable {
    pub fn with_cap(cap: usize) -> Self {
        let mut log_bell = Vec::with_capacity(cap + 1);
        let mut row = vec![0.0_f64]; // A(0, 0) = 1
        log_bell.push(0.0);
        for _ in 1..=cap {
            let mut next = Vec::with_capacity(row.len() + 1);
            next.push(*row.last().expect("triangle rows are nonempty"));
            for (k, &prev) in row.iter().enumerate() {
                next.push(log_add_exp(next[k], prev));
            }
            log_bell.push(next[0]);
            row = next;
        }
        let mut log_factorial = Vec::with_capacity(cap + 1);
        let mut acc = 0.0;
        log_factorial.push(0.0);
        for y in 1..=cap {
            acc += (y as f64).ln();
            log_factorial.push(acc);
        }
        Self {
            log_bell,
            log_factorial,
        }
    }

    pub fn cap(&self) -> usize {
        self.log_bell.len() - 1
    }

    pub fn log_bell_number(&self, y: usize) -> Result<f64> {
        self.log_bell.get(y).copied().ok_or(Error::Overflow {
            index: y,
            cap: self.cap(),
        })
    }

    pub fn log_pmf(&self, y: usize, param: &BellParam) -> Result<f64> {
        let log_b = self.log_bell_number(y)?;
        let theta = param.theta;
        let y_log_theta = if y == 0 { 0.0 } else { y as f64 * theta.ln() };
        Ok(y_log_theta + 1.0 - theta.exp() + log_b - self.log_factorial[y])
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn default_table() -> &'static BellTable {
    static TABLE: OnceLock<BellTable> = OnceLock::new();
    TABLE.get_or_init(|| BellTable::with_cap(DEFAULT_BELL_CAP))
}

/// `ln B_y` for `y ≤ DEFAULT_BELL_CAP`.
pub fn log_bell_number(y: usize) -> Result<f64> {
    default_table().log_bell_number(y)
}

pub fn log_pmf(y: usize, param: &BellParam) -> Result<f64> {
    default_table().log_pmf(y, param)
}

pub fn pmf(y: usize, param: &BellParam) -> Result<f64> {
    log_pmf(y, param).map(f64::exp)
}

/// `(mean, variance) = (μ, μ(1 + W₀(μ)))`.
pub fn moments(param: &BellParam) -> (f64, f64) {
    (param.mu, param.mu * (1.0 + param.theta))
}

/// Draws from Bell(θ) through its compound Poisson form: `N ~ Poisson(eᶿ − 1)`
/// and `Y` is the sum of `N` zero-truncated Poisson(θ) variates.
pub fn sample(rng: &mut Rng, param: &BellParam) -> Result<u64> {
    let rate = param.theta.exp_m1();
    let count = rng.poisson(rate)?;
    let mut total = 0u64;
    for _ in 0..count {
        total += rng.zero_truncated_poisson(param.theta)?;
    }
    Ok(total)
}
