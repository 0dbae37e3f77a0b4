//! Liu-type shrinkage estimators in canonical coordinates.
//!
//! With `Λ` the eigenvalues of `V = XᵀŴX`, `α = Qᵀβ`, `s = k + d` and
//! `Lⱼ = λⱼ + k`, every estimator is a diagonal map `α̂ ↦ cⱼ α̂ⱼ`:
//!
//! | kind   | `cⱼ`                              |
//! |--------|-----------------------------------|
//! | MLE    | `1`                               |
//! | LTE    | `(λⱼ − d)/Lⱼ`                     |
//! | AULTE  | `1 − s²/Lⱼ²`                      |
//! | MAULTE | `(1 − s²/Lⱼ²)(1 − s/Lⱼ)`          |
//!
//! so the covariance is `diag(cⱼ²/λⱼ)` and the bias is `(cⱼ − 1)αⱼ`. Risks
//! use the estimated `α̂` in place of the unknown `α` (plug-in risk).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::SpectralModel;
use crate::linalg::Matrix;
use crate::optimize::minimize_scalar;

/// Offset of the lower end of the `d` search bracket above `−k`, relative to
/// `max(1, k)`.
pub const D_BRACKET_EPS: f64 = 1e-6;

/// Upper bound on the number of scan minima refined by [`select_d`].
const MAX_BASINS: usize = 8;

/// Scan points placed at `λⱼ ± (λⱼ + k)·10^{-m/2}` for `m = 1..=LAMBDA_OFFSETS`.
const LAMBDA_OFFSETS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "MLE")]
    Mle,
    #[serde(rename = "LTE")]
    Lte,
    #[serde(rename = "AULTE")]
    Aulte,
    #[serde(rename = "MAULTE")]
    Maulte,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [Self::Mle, Self::Lte, Self::Aulte, Self::Maulte];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mle => "MLE",
            Self::Lte => "LTE",
            Self::Aulte => "AULTE",
            Self::Maulte => "MAULTE",
        }
    }

    pub fn is_shrinkage(self) -> bool {
        self != Self::Mle
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mle" => Ok(Self::Mle),
            "lte" | "lt" => Ok(Self::Lte),
            "aulte" | "ault" => Ok(Self::Aulte),
            "maulte" | "mault" => Ok(Self::Maulte),
            other => Err(Error::InvalidInput(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasingParams {
    pub k: f64,
    pub d: f64,
}

impl BiasingParams {
    pub fn new(k: f64, d: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Domain(format!(
                "k must be positive and finite, got {k}"
            )));
        }
        if !d.is_finite() {
            return Err(Error::Domain(format!("d must be finite, got {d}")));
        }
        Ok(Self { k, d })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageEstimate {
    pub kind: EstimatorKind,
    /// `None` for the MLE.
    pub params: Option<BiasingParams>,
    pub beta: Vec<f64>,
    pub scalar_mse: f64,
    pub squared_bias: f64,
}

/// Canonical multiplier `cⱼ` applied to `α̂ⱼ`.
fn shrink_factor(kind: EstimatorKind, lambda: f64, p: BiasingParams) -> f64 {
    let s = p.k + p.d;
    let l = lambda + p.k;
    match kind {
        EstimatorKind::Mle => 1.0,
        EstimatorKind::Lte => (lambda - p.d) / l,
        EstimatorKind::Aulte => 1.0 - (s / l).powi(2),
        EstimatorKind::Maulte => (1.0 - (s / l).powi(2)) * (1.0 - s / l),
    }
}

/// Canonical bias multiplier, `cⱼ − 1` written without the cancellation.
fn bias_factor(kind: EstimatorKind, lambda: f64, p: BiasingParams) -> f64 {
    let s = p.k + p.d;
    let l = lambda + p.k;
    match kind {
        EstimatorKind::Mle => 0.0,
        EstimatorKind::Lte => -s / l,
        EstimatorKind::Aulte => -(s * s) / (l * l),
        EstimatorKind::Maulte => -s * (l * l + s * (lambda - p.d)) / (l * l * l),
    }
}

fn params_for(kind: EstimatorKind, params: Option<BiasingParams>) -> Result<BiasingParams> {
    match (kind, params) {
        (EstimatorKind::Mle, _) => Ok(BiasingParams { k: 1.0, d: -1.0 }),
        (_, Some(p)) => Ok(p),
        (_, None) => Err(Error::InvalidInput(format!(
            "{kind} needs biasing parameters (k, d)"
        ))),
    }
}

fn check_alpha(model: &SpectralModel, alpha: &[f64]) -> Result<()> {
    if alpha.len() != model.p() {
        return Err(Error::InvalidInput(format!(
            "coefficient vector has length {}, model has {}",
            alpha.len(),
            model.p()
        )));
    }
    Ok(())
}

/// Estimator applied to `beta_mle`, returned in the original coordinates.
pub fn estimate(
    kind: EstimatorKind,
    model: &SpectralModel,
    beta_mle: &[f64],
    params: Option<BiasingParams>,
) -> Result<Vec<f64>> {
    check_alpha(model, beta_mle)?;
    let p = params_for(kind, params)?;
    let alpha = model.to_canonical(beta_mle);
    let shrunk: Vec<f64> = alpha
        .iter()
        .zip(&model.lambda)
        .map(|(a, &l)| shrink_factor(kind, l, p) * a)
        .collect();
    Ok(model.to_original(&shrunk))
}

/// Bias vector `E(β̂) − β` in canonical coordinates, evaluated at `alpha`.
pub fn bias_vector(
    kind: EstimatorKind,
    model: &SpectralModel,
    params: Option<BiasingParams>,
    alpha: &[f64],
) -> Result<Vec<f64>> {
    check_alpha(model, alpha)?;
    let p = params_for(kind, params)?;
    Ok(alpha
        .iter()
        .zip(&model.lambda)
        .map(|(a, &l)| bias_factor(kind, l, p) * a)
        .collect())
}

/// Diagonal of the canonical covariance, `cⱼ²/λⱼ`.
pub fn covariance_diag(
    kind: EstimatorKind,
    model: &SpectralModel,
    params: Option<BiasingParams>,
) -> Result<Vec<f64>> {
    let p = params_for(kind, params)?;
    Ok(model
        .lambda
        .iter()
        .map(|&l| shrink_factor(kind, l, p).powi(2) / l)
        .collect())
}

/// `tr Cov`.
pub fn variance_part(
    kind: EstimatorKind,
    model: &SpectralModel,
    params: Option<BiasingParams>,
) -> Result<f64> {
    Ok(covariance_diag(kind, model, params)?.iter().sum())
}

pub fn squared_bias(
    kind: EstimatorKind,
    model: &SpectralModel,
    params: Option<BiasingParams>,
    alpha: &[f64],
) -> Result<f64> {
    Ok(bias_vector(kind, model, params, alpha)?
        .iter()
        .map(|b| b * b)
        .sum())
}

/// `Cov + bias·biasᵀ` in canonical coordinates.
pub fn mmse_matrix(
    kind: EstimatorKind,
    model: &SpectralModel,
    params: Option<BiasingParams>,
    alpha: &[f64],
) -> Result<Matrix> {
    let cov = Matrix::from_diag(&covariance_diag(kind, model, params)?);
    let b = bias_vector(kind, model, params, alpha)?;
    cov.add(&Matrix::outer(&b, &b))
}

/// Closed-form scalar MSE, `tr MMSE`.
pub fn scalar_mse(
    kind: EstimatorKind,
    model: &SpectralModel,
    params: Option<BiasingParams>,
    alpha: &[f64],
) -> Result<f64> {
    check_alpha(model, alpha)?;
    let p = params_for(kind, params)?;
    Ok(scalar_mse_unchecked(kind, &model.lambda, alpha, p))
}

fn scalar_mse_unchecked(
    kind: EstimatorKind,
    lambda: &[f64],
    alpha: &[f64],
    p: BiasingParams,
) -> f64 {
    let (k, d) = (p.k, p.d);
    let s = k + d;
    let terms = lambda.iter().zip(alpha);
    match kind {
        EstimatorKind::Mle => lambda.iter().map(|l| 1.0 / l).sum(),
        EstimatorKind::Lte => terms
            .map(|(&l, &a)| {
                let lk2 = (l + k).powi(2);
                (l - d).powi(2) / (l * lk2) + s * s * a * a / lk2
            })
            .sum(),
        EstimatorKind::Aulte => terms
            .map(|(&l, &a)| {
                let lk4 = (l + k).powi(4);
                (l - d).powi(2) * (l + d + 2.0 * k).powi(2) / (l * lk4) + s.powi(4) * a * a / lk4
            })
            .sum(),
        EstimatorKind::Maulte => terms
            .map(|(&l, &a)| {
                let lk = l + k;
                let lk6 = lk.powi(6);
                (l - d).powi(4) * (l + d + 2.0 * k).powi(2) / (l * lk6)
                    + s * s * a * a * (lk * lk + s * (l - d)).powi(2) / lk6
            })
            .sum(),
    }
}

/// Estimate plus its plug-in risk at `model.alpha_hat`.
pub fn evaluate(
    kind: EstimatorKind,
    model: &SpectralModel,
    beta_mle: &[f64],
    params: Option<BiasingParams>,
) -> Result<ShrinkageEstimate> {
    let params = if kind.is_shrinkage() { params } else { None };
    Ok(ShrinkageEstimate {
        kind,
        params,
        beta: estimate(kind, model, beta_mle, params)?,
        scalar_mse: scalar_mse(kind, model, params, &model.alpha_hat)?,
        squared_bias: squared_bias(kind, model, params, &model.alpha_hat)?,
    })
}

/// `k = 1/(α̂ᵀα̂)` for LTE, `k = 1/min α̂ⱼ²` for AULTE and MAULTE.
pub fn select_k(kind: EstimatorKind, alpha_hat: &[f64]) -> Result<f64> {
    let k = match kind {
        EstimatorKind::Mle => {
            return Err(Error::InvalidInput(
                "the MLE has no biasing parameter".into(),
            ))
        }
        EstimatorKind::Lte => 1.0 / alpha_hat.iter().map(|a| a * a).sum::<f64>(),
        EstimatorKind::Aulte | EstimatorKind::Maulte => {
            1.0 / alpha_hat
                .iter()
                .map(|a| a * a)
                .fold(f64::INFINITY, f64::min)
        }
    };
    if !k.is_finite() || !(k > 0.0) {
        return Err(Error::Degenerate(format!(
            "cannot select k for {kind}: canonical coefficients give k = {k}"
        )));
    }
    Ok(k)
}

/// `d` for the LTE:
/// `Σ (1 − kα̂ⱼ²)/(λⱼ+k)² ÷ Σ (1 + λⱼα̂ⱼ²)/(λⱼ(λⱼ+k)²)`.
pub fn d_lte(model: &SpectralModel, alpha_hat: &[f64], k: f64) -> Result<f64> {
    check_alpha(model, alpha_hat)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (&l, &a) in model.lambda.iter().zip(alpha_hat) {
        let lk2 = (l + k).powi(2);
        num += (1.0 - k * a * a) / lk2;
        den += (1.0 + l * a * a) / (l * lk2);
    }
    Ok(num / den)
}

/// Median over `j` of `−k + (λⱼ + k)/√(1 + λⱼα̂ⱼ²)`, the componentwise root
/// of the AULTE risk derivative.
pub fn d_opt_seed(model: &SpectralModel, alpha_hat: &[f64], k: f64) -> Result<f64> {
    check_alpha(model, alpha_hat)?;
    let roots: Vec<f64> = model
        .lambda
        .iter()
        .zip(alpha_hat)
        .map(|(&l, &a)| -k + (l + k) / (1.0 + l * a * a).sqrt())
        .collect();
    Ok(median(roots))
}

/// Middle order statistic, or the mean of the two middle ones for even length.
pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty(), "median of empty slice");
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Search interval for `d`: `[−k + ε·max(1,k), λ_max + k]`.
pub fn d_bracket(model: &SpectralModel, k: f64) -> (f64, f64) {
    (-k + D_BRACKET_EPS * k.max(1.0), model.lambda_max() + k)
}

/// Minimiser of the plug-in scalar MSE of AULTE or MAULTE over `d`.
///
/// Candidates are scanned on a grid that is uniform in `d` and geometric in
/// `k + d` (so structure at every eigenvalue scale is seen), together with the
/// `d_opt` seed; Brent's method then refines between the neighbours of each
/// local minimum of the scan. The result is never worse than the seed.
pub fn select_d(
    kind: EstimatorKind,
    model: &SpectralModel,
    alpha_hat: &[f64],
    k: f64,
) -> Result<f64> {
    if !matches!(kind, EstimatorKind::Aulte | EstimatorKind::Maulte) {
        return Err(Error::InvalidInput(format!(
            "numerical d selection applies to AULTE and MAULTE, not {kind}"
        )));
    }
    check_alpha(model, alpha_hat)?;
    let p0 = BiasingParams::new(k, 0.0)?;
    let f =
        |d: f64| scalar_mse_unchecked(kind, &model.lambda, alpha_hat, BiasingParams { d, ..p0 });

    let (lo, hi) = d_bracket(model, k);
    let seed = d_opt_seed(model, alpha_hat, k)?.clamp(lo, hi);

    const UNIFORM: usize = 256;
    const GEOMETRIC: usize = 256;
    let mut grid =
        Vec::with_capacity(UNIFORM + GEOMETRIC + model.p() * (2 * LAMBDA_OFFSETS + 1) + 2);
    grid.extend((0..=UNIFORM).map(|i| lo + (hi - lo) * i as f64 / UNIFORM as f64));
    let (s_lo, s_hi) = (lo + k, hi + k);
    let ratio = (s_hi / s_lo).ln();
    grid.extend((1..GEOMETRIC).map(|i| -k + s_lo * (ratio * i as f64 / GEOMETRIC as f64).exp()));
    // The shrink factor of component j vanishes at d = λⱼ, and the optimum for
    // a weakly identified component sits in a narrow basin on either side.
    for &l in &model.lambda {
        grid.push(l);
        for m in 1..=LAMBDA_OFFSETS {
            let off = (l + k) * 10f64.powf(-0.5 * m as f64);
            grid.extend([l - off, l + off]);
        }
    }
    grid.push(seed);
    grid.retain(|d| (lo..=hi).contains(d));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut values = Vec::with_capacity(grid.len());
    for &d in &grid {
        let v = f(d);
        if !v.is_finite() {
            return Err(Error::NumericFailure(format!(
                "{kind} MSE is {v} at d = {d}"
            )));
        }
        values.push(v);
    }
    // The objective can have several nearly tied basins, so every discrete
    // local minimum of the scan is refined (the lowest few, if there are many).
    let last = grid.len() - 1;
    let mut basins: Vec<usize> = (0..=last)
        .filter(|&i| {
            (i == 0 || values[i] <= values[i - 1]) && (i == last || values[i] <= values[i + 1])
        })
        .collect();
    basins.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    basins.truncate(MAX_BASINS);

    let tol = 1e-14 * (hi - lo).max(1.0);
    let mut refined = grid[basins[0]];
    let mut refined_val = values[basins[0]];
    for i in basins {
        // Each side separately: a scan point can sit on a ridge between two
        // basins that share the same pair of neighbours.
        for (a, b) in [
            (grid[i.saturating_sub(1)], grid[i]),
            (grid[i], grid[(i + 1).min(last)]),
        ] {
            if a < b {
                let x = minimize_scalar(f, 0.5 * (a + b), a, b, tol)?;
                let v = f(x);
                if v < refined_val {
                    refined = x;
                    refined_val = v;
                }
            }
        }
    }
    Ok(if refined_val <= f(seed) {
        refined
    } else {
        seed
    })
}

/// Biasing parameters chosen by the data-driven rules: `k` from
/// [`select_k`], then `d` from [`d_lte`] (LTE) or [`select_d`].
pub fn select_params(kind: EstimatorKind, model: &SpectralModel) -> Result<Option<BiasingParams>> {
    let alpha = &model.alpha_hat;
    match kind {
        EstimatorKind::Mle => Ok(None),
        EstimatorKind::Lte => {
            let k = select_k(kind, alpha)?;
            Ok(Some(BiasingParams::new(k, d_lte(model, alpha, k)?)?))
        }
        EstimatorKind::Aulte | EstimatorKind::Maulte => {
            let k = select_k(kind, alpha)?;
            Ok(Some(BiasingParams::new(
                k,
                select_d(kind, model, alpha, k)?,
            )?))
        }
    }
}
