//! Monte Carlo comparison of the estimators.
//!
//! Each repetition draws a fresh AR(1)-correlated Gaussian design and Bell
//! responses with `μᵢ = exp(xᵢᵀβ)`, fits the MLE, selects `(k, d)` for each
//! shrinkage estimator and records `‖β̂ − β‖²`. Repetition `r` uses the
//! generator `Rng::new(seed).substream(r)`, and aggregation runs in repetition
//! order, so results do not depend on how repetitions are spread across
//! threads.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::bell::{self, BellParam};
use crate::error::{Error, Result};
use crate::glm::{irls_fit, spectral, Dataset, FitConfig, InitStrategy};
use crate::linalg::{norm2, Matrix};
use crate::random::{derive_seed, mvn_ar1_sample, Rng};
use crate::shrinkage::{self, EstimatorKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_reps: usize,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    /// True coefficients; includes the intercept first when `intercept` is set.
    pub beta_true: Vec<f64>,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub intercept: bool,
    /// Scale design columns to unit Euclidean length.
    pub standardize: bool,
    pub fit: FitConfig,
}

impl SimConfig {
    /// Defaults: 1000 repetitions, `β = 1ₚ/√p`, all four estimators, no
    /// intercept, no standardisation.
    pub fn new(n: usize, p: usize, rho: f64, seed: u64) -> Self {
        Self {
            n_reps: 1000,
            n,
            p,
            rho,
            beta_true: BetaScheme::UnitNorm.vector(p),
            seed,
            estimators: EstimatorKind::ALL.to_vec(),
            intercept: false,
            standardize: false,
            fit: FitConfig::without_intercept(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::InvalidInput("n_reps must be at least 1".into()));
        }
        if self.p == 0 || self.n <= self.p + usize::from(self.intercept) {
            return Err(Error::InvalidInput(format!(
                "need n > p, got n={} p={}",
                self.n, self.p
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Domain(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        let want = self.p + usize::from(self.intercept);
        if self.beta_true.len() != want {
            return Err(Error::InvalidInput(format!(
                "beta_true has {} entries, expected {want}",
                self.beta_true.len()
            )));
        }
        if self.beta_true.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("beta_true must be finite".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidInput("no estimators requested".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaScheme {
    /// `1ₚ/√p`
    UnitNorm,
    /// `1ₚ`
    Ones,
}

impl BetaScheme {
    pub fn vector(self, p: usize) -> Vec<f64> {
        match self {
            Self::UnitNorm => vec![1.0 / (p as f64).sqrt(); p],
            Self::Ones => vec![1.0; p],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub kind: EstimatorKind,
    /// Mean over repetitions of `‖β̂ − β‖²`.
    pub sim_mse: f64,
    /// Sample standard deviation over repetitions of `‖β̂ − β‖²`.
    pub mse_spread: f64,
    /// `‖β̄ − β‖²` with `β̄` the mean estimate over repetitions.
    pub sim_sb: f64,
    /// Mean over repetitions of the plug-in analytic scalar MSE.
    pub mean_plugin_mse: f64,
    pub n_used: usize,
    pub n_failed: usize,
}

impl EstimatorStats {
    /// Standard error of `sim_mse`.
    pub fn standard_error(&self) -> f64 {
        self.mse_spread / (self.n_used as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCellResult {
    pub rho: f64,
    pub n: usize,
    pub p: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub stats: Vec<EstimatorStats>,
}

impl SimCellResult {
    pub fn get(&self, kind: EstimatorKind) -> Option<&EstimatorStats> {
        self.stats.iter().find(|s| s.kind == kind)
    }
}

/// AR(1)-correlated Gaussian design, optionally with unit-length columns.
pub fn gen_design(
    rng: &mut Rng,
    n: usize,
    p: usize,
    rho: f64,
    standardize: bool,
) -> Result<Matrix> {
    let x = mvn_ar1_sample(rng, n, p, rho)?;
    if !standardize {
        return Ok(x);
    }
    let norms: Vec<f64> = (0..p).map(|j| norm2(&x.column(j))).collect();
    Ok(Matrix::from_fn(n, p, |i, j| x[(i, j)] / norms[j]))
}

/// Independent Bell responses with means `exp(xᵢᵀβ)`.
pub fn gen_response(rng: &mut Rng, x: &Matrix, beta: &[f64]) -> Result<Vec<u64>> {
    let eta = x.matvec(beta)?;
    eta.iter()
        .enumerate()
        .map(|(row, &e)| {
            let mu = e.exp();
            let param = BellParam::from_mean(mu).map_err(|_| Error::RowFailure {
                row,
                reason: format!("mean exp({e}) is not a valid Bell mean"),
            })?;
            bell::sample(rng, &param)
        })
        .collect()
}

/// Outcome of one repetition: per requested estimator, the estimate and its
/// plug-in MSE, or `None` if that estimator could not be computed.
type RepOutcome = Result<Vec<Option<(Vec<f64>, f64)>>>;

fn run_rep(config: &SimConfig, rep: usize) -> RepOutcome {
    let mut rng = Rng::new(config.seed).substream(rep as u64);
    let x = gen_design(&mut rng, config.n, config.p, config.rho, config.standardize)?;
    let x = if config.intercept {
        Matrix::from_fn(config.n, config.p + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                x[(i, j - 1)]
            }
        })
    } else {
        x
    };
    let y = gen_response(&mut rng, &x, &config.beta_true)?;
    let data = Dataset::unnamed(x, y)?;
    let fit_config = FitConfig {
        intercept: config.intercept,
        ..config.fit
    };
    let fit = irls_fit(&data, &fit_config)?;
    if !fit.converged {
        return Err(Error::NumericFailure("IRLS did not converge".into()));
    }
    let model = spectral(&data, &fit)?;
    Ok(config
        .estimators
        .iter()
        .map(|&kind| {
            let params = shrinkage::select_params(kind, &model).ok()?;
            let est = shrinkage::evaluate(kind, &model, &fit.beta_mle, params).ok()?;
            est.scalar_mse
                .is_finite()
                .then_some((est.beta, est.scalar_mse))
        })
        .collect())
}

/// Number of worker threads to use when none is given.
pub fn default_threads() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn run_cell(config: &SimConfig) -> Result<SimCellResult> {
    run_cell_with_threads(config, default_threads())
}

pub fn run_cell_with_threads(config: &SimConfig, threads: usize) -> Result<SimCellResult> {
    config.validate()?;
    let outcomes = run_reps(config, threads.max(1));

    let dim = config.beta_true.len();
    let mut stats = Vec::with_capacity(config.estimators.len());
    for (e, &kind) in config.estimators.iter().enumerate() {
        let mut errors = Vec::new();
        let mut plugin = Vec::new();
        let mut sum_beta = vec![0.0; dim];
        for (beta, mse) in outcomes.iter().flatten().filter_map(|o| o[e].as_ref()) {
            let err: f64 = beta
                .iter()
                .zip(&config.beta_true)
                .map(|(b, t)| (b - t).powi(2))
                .sum();
            errors.push(err);
            plugin.push(*mse);
            for (s, b) in sum_beta.iter_mut().zip(beta) {
                *s += b;
            }
        }
        let used = errors.len();
        if used == 0 {
            continue;
        }
        let mean = errors.iter().sum::<f64>() / used as f64;
        let spread = if used > 1 {
            (errors.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (used - 1) as f64).sqrt()
        } else {
            0.0
        };
        let sim_sb = sum_beta
            .iter()
            .zip(&config.beta_true)
            .map(|(s, t)| (s / used as f64 - t).powi(2))
            .sum();
        stats.push(EstimatorStats {
            kind,
            sim_mse: mean,
            mse_spread: spread,
            sim_sb,
            mean_plugin_mse: plugin.iter().sum::<f64>() / used as f64,
            n_used: used,
            n_failed: config.n_reps - used,
        });
    }
    if stats.is_empty() {
        let first = outcomes.iter().find_map(|o| o.as_ref().err());
        return Err(Error::CellFailure(format!(
            "all {} repetitions failed (rho={}, n={}, p={}){}",
            config.n_reps,
            config.rho,
            config.n,
            config.p,
            first.map(|e| format!(": {e}")).unwrap_or_default()
        )));
    }
    Ok(SimCellResult {
        rho: config.rho,
        n: config.n,
        p: config.p,
        n_reps: config.n_reps,
        seed: config.seed,
        stats,
    })
}

fn run_reps(config: &SimConfig, threads: usize) -> Vec<RepOutcome> {
    let reps = config.n_reps;
    let threads = threads.min(reps);
    if threads <= 1 {
        return (0..reps).map(|r| run_rep(config, r)).collect();
    }
    let chunk = reps.div_ceil(threads);
    thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let range = (t * chunk)..((t + 1) * chunk).min(reps);
                scope.spawn(move || range.map(|r| run_rep(config, r)).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    })
}

/// One row of the simulation tables. Failed cells carry `error` and no stats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub rho: f64,
    pub n: usize,
    pub p: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub error: Option<String>,
    pub stats: Vec<EstimatorStats>,
}

pub fn run_grid(configs: &[SimConfig], threads: usize) -> Result<Vec<SimRow>> {
    if configs.is_empty() {
        return Err(Error::InvalidInput("empty simulation grid".into()));
    }
    Ok(configs
        .iter()
        .map(|c| match run_cell_with_threads(c, threads) {
            Ok(cell) => SimRow {
                rho: cell.rho,
                n: cell.n,
                p: cell.p,
                n_reps: cell.n_reps,
                seed: cell.seed,
                error: None,
                stats: cell.stats,
            },
            Err(e) => SimRow {
                rho: c.rho,
                n: c.n,
                p: c.p,
                n_reps: c.n_reps,
                seed: c.seed,
                error: Some(e.to_string()),
                stats: Vec::new(),
            },
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Scheme(BetaScheme),
    Values(Vec<f64>),
}

/// Simulation grid document: the cartesian product of `rho × n × p`, each
/// cell otherwise sharing the remaining settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    pub n: OneOrMany<usize>,
    pub p: OneOrMany<usize>,
    pub rho: OneOrMany<f64>,
    #[serde(default = "default_beta")]
    pub beta_true: BetaSpec,
    pub seed: u64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub intercept: bool,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_reps() -> usize {
    1000
}

fn default_beta() -> BetaSpec {
    BetaSpec::Scheme(BetaScheme::UnitNorm)
}

fn default_estimators() -> Vec<EstimatorKind> {
    EstimatorKind::ALL.to_vec()
}

fn default_tol() -> f64 {
    FitConfig::default().tol
}

fn default_max_iter() -> usize {
    FitConfig::default().max_iter
}

impl GridConfig {
    /// Cells in `rho`-major, then `n`, then `p` order. Each cell's seed is
    /// derived from the grid seed and the cell's own `(n, p, rho)`, so a cell
    /// gives the same result whatever grid it appears in.
    pub fn cells(&self) -> Result<Vec<SimConfig>> {
        let mut out = Vec::new();
        for rho in self.rho.to_vec() {
            for n in self.n.to_vec() {
                for p in self.p.to_vec() {
                    let dim = p + usize::from(self.intercept);
                    let beta_true = match &self.beta_true {
                        BetaSpec::Scheme(s) => s.vector(dim),
                        BetaSpec::Values(v) => v.clone(),
                    };
                    let cfg = SimConfig {
                        n_reps: self.n_reps,
                        n,
                        p,
                        rho,
                        beta_true,
                        seed: cell_seed(self.seed, n, p, rho),
                        estimators: self.estimators.clone(),
                        intercept: self.intercept,
                        standardize: self.standardize,
                        fit: FitConfig {
                            tol: self.tol,
                            max_iter: self.max_iter,
                            intercept: self.intercept,
                            init: InitStrategy::LogMoment,
                        },
                    };
                    cfg.validate()?;
                    out.push(cfg);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("simulation grid has no cells".into()));
        }
        Ok(out)
    }
}

pub fn cell_seed(seed: u64, n: usize, p: usize, rho: f64) -> u64 {
    derive_seed(
        derive_seed(derive_seed(seed, n as u64), p as u64),
        rho.to_bits(),
    )
}
