//! Bell regression with log link, fitted by Fisher scoring (IRLS).
//!
//! For observation `i` with `μᵢ = exp(xᵢᵀβ)` and `τᵢ = W₀(μᵢ)`:
//!
//! - variance function `Vᵢ = μᵢ(1 + τᵢ)`
//! - working weight `wᵢ = (dμ/dη)² / Vᵢ = μᵢ / (1 + τᵢ)`
//! - working response `zᵢ = ηᵢ + (yᵢ − μᵢ)/μᵢ`
//!
//! Each step solves `(XᵀWX) β⁺ = XᵀWz`. After convergence the weights and
//! working response are re-evaluated once at the final coefficients, and the
//! canonical form is built from the eigendecomposition of `XᵀŴX`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, norm2, singular_values, solve_spd, symmetric_eigen, Matrix};
use crate::special::lambert_w0;

/// Linear predictors are clamped to `±ETA_CLAMP` while iterating.
pub const ETA_CLAMP: f64 = 30.0;

/// Designs whose smallest-to-largest singular value ratio falls below this
/// are rejected as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

pub const INTERCEPT_NAME: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Matrix,
    y: Vec<u64>,
    names: Vec<String>,
}

impl Dataset {
    /// Validates shapes, `n > p`, and full column rank of `x`.
    pub fn new(x: Matrix, y: Vec<u64>, names: Vec<String>) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if y.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} responses for {n} design rows",
                y.len()
            )));
        }
        if names.len() != p {
            return Err(Error::InvalidInput(format!(
                "{} names for {p} columns",
                names.len()
            )));
        }
        if n <= p {
            return Err(Error::InvalidInput(format!(
                "need more observations than covariates, got n={n}, p={p}"
            )));
        }
        let sv = singular_values(&x)?;
        let ratio = sv[p - 1] / sv[0];
        if !(ratio >= RANK_TOL) {
            return Err(Error::Collinearity(format!(
                "design is rank deficient (singular value ratio {ratio:e})"
            )));
        }
        Ok(Self { x, y, names })
    }

    /// Unnamed columns `x1, x2, …`.
    pub fn unnamed(x: Matrix, y: Vec<u64>) -> Result<Self> {
        let names = (1..=x.cols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names)
    }

    /// Prepends a column of ones.
    pub fn with_intercept(self) -> Result<Self> {
        if self.has_intercept() {
            return Ok(self);
        }
        let (n, p) = (self.x.rows(), self.x.cols());
        let x = Matrix::from_fn(
            n,
            p + 1,
            |i, j| if j == 0 { 1.0 } else { self.x[(i, j - 1)] },
        );
        let mut names = Vec::with_capacity(p + 1);
        names.push(INTERCEPT_NAME.to_string());
        names.extend(self.names);
        Self::new(x, self.y, names)
    }

    /// Whether the first column is identically one.
    pub fn has_intercept(&self) -> bool {
        (0..self.x.rows()).all(|i| self.x[(i, 0)] == 1.0)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    Zeros,
    /// Least squares of `ln(y + 0.5)` on the design.
    LogMoment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Threshold on `‖β⁺ − β‖ / ‖β⁺‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// The design is expected to carry a leading column of ones.
    pub intercept: bool,
    pub init: InitStrategy,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            intercept: true,
            init: InitStrategy::LogMoment,
        }
    }
}

impl FitConfig {
    pub fn without_intercept() -> Self {
        Self {
            intercept: false,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_mle: Vec<f64>,
    /// Diagonal of `Ŵ`, evaluated at `beta_mle`.
    pub weights: Vec<f64>,
    /// `ẑ`, evaluated at `beta_mle`.
    pub working_response: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub loglik: f64,
    /// Log-likelihood after each iteration, starting with the initial value.
    pub loglik_trace: Vec<f64>,
    /// Steps after which the log-likelihood still decreased once step halving
    /// gave up.
    pub monotonicity_violations: usize,
    /// Whether the linear predictor hit the clamp during iteration.
    pub clamp_hit: bool,
}

/// Per-observation quantities at a given coefficient vector.
struct Working {
    eta: Vec<f64>,
    mu: Vec<f64>,
    tau: Vec<f64>,
    clamped: bool,
}

impl Working {
    fn at(x: &Matrix, beta: &[f64], clamp: bool) -> Result<Self> {
        let raw = x.matvec(beta)?;
        let mut clamped = false;
        let mut eta = Vec::with_capacity(raw.len());
        let mut mu = Vec::with_capacity(raw.len());
        let mut tau = Vec::with_capacity(raw.len());
        for (row, &e) in raw.iter().enumerate() {
            let e = if clamp && e.abs() > ETA_CLAMP {
                clamped = true;
                ETA_CLAMP.copysign(e)
            } else {
                e
            };
            let m = e.exp();
            if !m.is_finite() || m <= 0.0 {
                return Err(Error::RowFailure {
                    row,
                    reason: format!("mean exp({e}) is not representable"),
                });
            }
            eta.push(e);
            mu.push(m);
            tau.push(lambert_w0(m)?);
        }
        Ok(Self {
            eta,
            mu,
            tau,
            clamped,
        })
    }

    fn loglik(&self, y: &[u64]) -> f64 {
        self.tau
            .iter()
            .zip(y)
            .map(|(&t, &yi)| {
                let first = if yi == 0 { 0.0 } else { yi as f64 * t.ln() };
                first - t.exp()
            })
            .sum()
    }

    fn weights(&self) -> Vec<f64> {
        self.mu
            .iter()
            .zip(&self.tau)
            .map(|(m, t)| m / (1.0 + t))
            .collect()
    }

    fn working_response(&self, y: &[u64]) -> Vec<f64> {
        self.eta
            .iter()
            .zip(&self.mu)
            .zip(y)
            .map(|((e, m), &yi)| e + (yi as f64 - m) / m)
            .collect()
    }

    fn score(&self, x: &Matrix, y: &[u64]) -> Result<Vec<f64>> {
        let r: Vec<f64> = self
            .mu
            .iter()
            .zip(&self.tau)
            .zip(y)
            .map(|((m, t), &yi)| (yi as f64 - m) / (1.0 + t))
            .collect();
        x.t_matvec(&r)
    }
}

fn check_dims(beta: &[f64], data: &Dataset) -> Result<()> {
    if beta.len() != data.p() {
        return Err(Error::InvalidInput(format!(
            "coefficient vector has length {}, design has {} columns",
            beta.len(),
            data.p()
        )));
    }
    Ok(())
}

/// `ℓ(β) = Σ [yᵢ ln W₀(μᵢ) − exp(W₀(μᵢ))]`, constants dropped.
pub fn log_likelihood(beta: &[f64], data: &Dataset) -> Result<f64> {
    check_dims(beta, data)?;
    Ok(Working::at(&data.x, beta, false)?.loglik(&data.y))
}

/// `U(β) = Xᵀ W^{1/2} V^{-1/2} (y − μ)`, which for the log link reduces to
/// `Σ xᵢ (yᵢ − μᵢ)/(1 + τᵢ)`.
pub fn score(beta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    check_dims(beta, data)?;
    Working::at(&data.x, beta, false)?.score(&data.x, &data.y)
}

fn initial_beta(data: &Dataset, init: InitStrategy) -> Result<Vec<f64>> {
    match init {
        InitStrategy::Zeros => Ok(vec![0.0; data.p()]),
        InitStrategy::LogMoment => {
            let z: Vec<f64> = data.y.iter().map(|&v| (v as f64 + 0.5).ln()).collect();
            let gram = data.x.weighted_gram(&vec![1.0; data.n()])?;
            let rhs = data.x.t_matvec(&z)?;
            solve_spd(&gram, &rhs).map_err(collinearity)
        }
    }
}

fn collinearity(e: Error) -> Error {
    match e {
        Error::NotPositiveDefinite { pivot, value } => Error::Collinearity(format!(
            "weighted cross-product matrix is singular (pivot {pivot} = {value:e})"
        )),
        other => other,
    }
}

const HALVING_LIMIT: usize = 30;

/// Fisher scoring for the Bell regression MLE.
///
/// Steps that lower the log-likelihood (or make it non-finite) are halved
/// towards the previous iterate; if halving does not help the step is kept
/// and counted in `monotonicity_violations`.
pub fn irls_fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if config.intercept && !data.has_intercept() {
        return Err(Error::InvalidInput(
            "intercept requested but the design has no leading column of ones".into(),
        ));
    }
    let x = &data.x;
    let y = &data.y;

    let mut beta = initial_beta(data, config.init)?;
    let mut state = Working::at(x, &beta, true)?;
    if !state.loglik(y).is_finite() {
        beta = vec![0.0; data.p()];
        state = Working::at(x, &beta, true)?;
    }
    let mut ll = state.loglik(y);
    let mut trace = vec![ll];
    let mut clamp_hit = state.clamped;
    let mut violations = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let w = state.weights();
        let z = state.working_response(y);
        let gram = x.weighted_gram(&w)?;
        let wz: Vec<f64> = w.iter().zip(&z).map(|(a, b)| a * b).collect();
        let rhs = x.t_matvec(&wz)?;
        let mut next = solve_spd(&gram, &rhs).map_err(collinearity)?;

        let mut next_state = Working::at(x, &next, true)?;
        let mut next_ll = next_state.loglik(y);
        let slack = 1e-10 * (1.0 + ll.abs());
        let mut halvings = 0;
        while (!next_ll.is_finite() || next_ll < ll - slack) && halvings < HALVING_LIMIT {
            for (nb, b) in next.iter_mut().zip(&beta) {
                *nb = 0.5 * (*nb + b);
            }
            next_state = Working::at(x, &next, true)?;
            next_ll = next_state.loglik(y);
            halvings += 1;
        }
        if !next_ll.is_finite() {
            return Err(Error::NumericFailure(format!(
                "log-likelihood became {next_ll} at iteration {iterations}"
            )));
        }
        if next_ll < ll - slack {
            violations += 1;
        }
        clamp_hit |= next_state.clamped;

        let step: Vec<f64> = next.iter().zip(&beta).map(|(a, b)| a - b).collect();
        let rel = norm2(&step) / norm2(&next).max(1e-12);
        beta = next;
        state = next_state;
        ll = next_ll;
        trace.push(ll);
        if rel <= config.tol {
            converged = true;
            break;
        }
    }

    let last = Working::at(x, &beta, false)?;
    if let Some(row) = last.eta.iter().position(|e| e.abs() >= ETA_CLAMP) {
        return Err(Error::RowFailure {
            row,
            reason: format!(
                "fitted linear predictor {} lies at the clamp",
                last.eta[row]
            ),
        });
    }
    let loglik = last.loglik(y);
    Ok(FitResult {
        weights: last.weights(),
        working_response: last.working_response(y),
        mu_hat: last.mu.clone(),
        beta_mle: beta,
        iterations,
        converged,
        loglik,
        loglik_trace: trace,
        monotonicity_violations: violations,
        clamp_hit,
    })
}

/// Eigen-structure of `XᵀŴX` and the canonical MLE `α̂ = Qᵀβ̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    /// Eigenvalues in descending order, all positive.
    pub lambda: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub q: Matrix,
    pub alpha_hat: Vec<f64>,
}

impl SpectralModel {
    pub fn new(lambda: Vec<f64>, q: Matrix, alpha_hat: Vec<f64>) -> Result<Self> {
        let p = lambda.len();
        if p == 0 || q.rows() != p || q.cols() != p || alpha_hat.len() != p {
            return Err(Error::InvalidInput(format!(
                "inconsistent spectral dimensions: {p} eigenvalues, {}x{} eigenvectors, {} coefficients",
                q.rows(),
                q.cols(),
                alpha_hat.len()
            )));
        }
        check_eigenvalues(&lambda)?;
        Ok(Self {
            lambda,
            q,
            alpha_hat,
        })
    }

    /// Model already in canonical coordinates (`Q = I`).
    pub fn canonical(lambda: Vec<f64>, alpha_hat: Vec<f64>) -> Result<Self> {
        let q = Matrix::identity(lambda.len());
        Self::new(lambda, q, alpha_hat)
    }

    pub fn p(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda[0]
    }

    /// Maps a canonical vector back to the original coordinates, `Q v`.
    pub fn to_original(&self, canonical: &[f64]) -> Vec<f64> {
        self.q
            .matvec(canonical)
            .expect("dimensions checked at construction")
    }

    /// Maps an original vector to canonical coordinates, `Qᵀ v`.
    pub fn to_canonical(&self, original: &[f64]) -> Vec<f64> {
        self.q
            .t_matvec(original)
            .expect("dimensions checked at construction")
    }

    /// `Q Λ Qᵀ`.
    pub fn cross_product(&self) -> Matrix {
        let q = &self.q;
        let ql = Matrix::from_fn(q.rows(), q.cols(), |i, j| q[(i, j)] * self.lambda[j]);
        ql.matmul(&q.transpose()).expect("square")
    }

    pub fn diagnostics(&self) -> CollinearityDiagnostics {
        collinearity_diagnostics(&self.lambda).expect("eigenvalues validated at construction")
    }
}

fn check_eigenvalues(lambda: &[f64]) -> Result<()> {
    if let Some(j) = lambda.iter().position(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain(format!(
            "eigenvalue {j} is {} (must be positive)",
            lambda[j]
        )));
    }
    Ok(())
}

/// Eigendecomposition of `XᵀŴX` at a converged fit.
pub fn spectral(data: &Dataset, fit: &FitResult) -> Result<SpectralModel> {
    if !fit.converged {
        return Err(Error::InvalidInput(
            "spectral form needs a converged fit".into(),
        ));
    }
    check_dims(&fit.beta_mle, data)?;
    let gram = data.x.weighted_gram(&fit.weights)?;
    let eig = symmetric_eigen(&gram)?;
    if !(eig.values[eig.values.len() - 1] > 0.0) {
        return Err(Error::Collinearity(format!(
            "weighted cross-product matrix has nonpositive eigenvalue {:e}",
            eig.values[eig.values.len() - 1]
        )));
    }
    let alpha_hat = eig.vectors.t_matvec(&fit.beta_mle)?;
    SpectralModel::new(eig.values, eig.vectors, alpha_hat)
}

/// `tr((XᵀŴX)⁻¹) = Σ 1/λⱼ`.
pub fn mse_mle(lambda: &[f64]) -> Result<f64> {
    check_eigenvalues(lambda)?;
    Ok(lambda.iter().map(|l| 1.0 / l).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearityDiagnostics {
    /// `√(λ_max/λ_min)`
    pub condition_number: f64,
    /// `√(λⱼ/λ_min)` in the order of the eigenvalues given.
    pub condition_indices: Vec<f64>,
}

pub fn collinearity_diagnostics(lambda: &[f64]) -> Result<CollinearityDiagnostics> {
    if lambda.is_empty() {
        return Err(Error::InvalidInput("no eigenvalues".into()));
    }
    check_eigenvalues(lambda)?;
    let max = lambda.iter().cloned().fold(f64::MIN, f64::max);
    let min = lambda.iter().cloned().fold(f64::MAX, f64::min);
    Ok(CollinearityDiagnostics {
        condition_number: (max / min).sqrt(),
        condition_indices: lambda.iter().map(|l| (l / min).sqrt()).collect(),
    })
}

/// `(XᵀŴX)⁻¹` by Cholesky; used as an independent check on the spectral route.
pub fn inverse_cross_product(data: &Dataset, weights: &[f64]) -> Result<Matrix> {
    let gram = data.x.weighted_gram(weights)?;
    linalg::Cholesky::factor(&gram)
        .map_err(collinearity)?
        .inverse()
}
