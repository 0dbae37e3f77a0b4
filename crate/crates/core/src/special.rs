use crate::error::{Error, Result};

const HALLEY_MAX_ITER: usize = 100;

/// Principal branch of the Lambert W function for nonnegative arguments,
/// i.e. the `w ≥ 0` solving `w·eʷ = x`.
///
/// Halley iteration started from `x(1 − x)` for small `x` and `ln(1 + x)`
/// otherwise.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!(
            "lambert_w0 needs a nonnegative argument, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x < 0.25 { x * (1.0 - x) } else { x.ln_1p() };
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() {
            return Ok(w);
        }
    }
    Err(Error::NumericFailure(format!(
        "Halley iteration for lambert_w0({x}) did not converge"
    )))
}
