//! Augmented Dickey-Fuller unit-root test, constant-only regression.
//!
//! Fits `Δx_t = α + γ·x_{t-1} + Σ_{i=1..p} β_i·Δx_{t-i} + ε` by OLS and
//! compares the t-ratio of `γ` with MacKinnon's large-sample critical values.

use serde::{Deserialize, Serialize};

use super::StationaryError;

/// Asymptotic critical values for the constant-only ADF regression
/// (MacKinnon 2010, `τ_c`, N=1), keyed by significance level.
pub const MACKINNON_CONSTANT: [(f64, f64); 3] = [(0.01, -3.43035), (0.05, -2.86154), (0.10, -2.56677)];

/// Minimum number of observations beyond the lag order.
pub const MIN_OBSERVATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio of the lagged-level coefficient; `-inf` on the degenerate path.
    pub statistic: f64,
    pub critical_value: f64,
    pub lags_used: usize,
    pub is_stationary: bool,
    /// The regression was singular (e.g. a constant series).
    pub degenerate: bool,
}

/// Schwert's rule of thumb, `⌊12·(T/100)^{1/4}⌋`.
pub fn schwert_lag(len: usize) -> usize {
    (12.0 * (len as f64 / 100.0).powf(0.25)).floor() as usize
}

pub fn critical_value(alpha: f64) -> Result<f64, StationaryError> {
    MACKINNON_CONSTANT
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|&(_, cv)| cv)
        .ok_or_else(|| {
            StationaryError::InvalidArgument(format!(
                "no built-in critical value for alpha={alpha}; use 0.01, 0.05 or 0.10 or set an override"
            ))
        })
}

/// Runs the test. `critical_override` replaces the table lookup when given.
pub fn adf_test(
    series: &[f64],
    max_lag: Option<usize>,
    alpha: f64,
    critical_override: Option<f64>,
) -> Result<AdfResult, StationaryError> {
    let critical_value = match critical_override {
        Some(cv) => cv,
        None => critical_value(alpha)?,
    };
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StationaryError::InvalidArgument(
            "series contains non-finite values".into(),
        ));
    }
    let len = series.len();
    let schwert = schwert_lag(len);
    let p = max_lag.map_or(schwert, |m| m.min(schwert));
    // Also keep strictly more regression rows than coefficients.
    let needed = (MIN_OBSERVATIONS + p).max(2 * p + 4);
    if len < needed {
        return Err(StationaryError::InsufficientData { needed, got: len });
    }
    let degenerate = AdfResult {
        statistic: f64::NEG_INFINITY,
        critical_value,
        lags_used: p,
        is_stationary: true,
        degenerate: true,
    };

    let diff: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // Observations t = p+1 .. len-1 (diff index t-1).
    let k = 2 + p;
    let rows = len - 1 - p;
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    let mut row = vec![0.0; k];
    let mut design = Vec::with_capacity(rows * k);
    let mut target = Vec::with_capacity(rows);
    for t in (p + 1)..len {
        row[0] = 1.0;
        row[1] = series[t - 1];
        for i in 1..=p {
            row[1 + i] = diff[t - 1 - i];
        }
        let y = diff[t - 1];
        for a in 0..k {
            xty[a] += row[a] * y;
            for b in 0..k {
                xtx[a * k + b] += row[a] * row[b];
            }
        }
        design.extend_from_slice(&row);
        target.push(y);
    }
    let Some(inv) = invert_spd(&xtx, k) else {
        return Ok(degenerate);
    };
    let coef: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| inv[a * k + b] * xty[b]).sum())
        .collect();
    let rss: f64 = design
        .chunks_exact(k)
        .zip(&target)
        .map(|(r, y)| {
            let fit: f64 = r.iter().zip(&coef).map(|(x, c)| x * c).sum();
            (y - fit).powi(2)
        })
        .sum();
    let dof = rows.saturating_sub(k).max(1) as f64;
    let sigma2 = rss / dof;
    let var_gamma = sigma2 * inv[k + 1];
    if !(var_gamma > 0.0) || !var_gamma.is_finite() {
        return Ok(degenerate);
    }
    let statistic = coef[1] / var_gamma.sqrt();
    Ok(AdfResult {
        statistic,
        critical_value,
        lags_used: p,
        is_stationary: statistic < critical_value,
        degenerate: false,
    })
}

/// Gauss-Jordan inverse with partial pivoting; `None` when numerically singular.
fn invert_spd(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    let scale = (0..k).map(|i| a[i * k + i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r1, &r2| m[r1 * k + col].abs().total_cmp(&m[r2 * k + col].abs()))?;
        if m[piv * k + col].abs() <= 1e-10 * scale {
            return None;
        }
        if piv != col {
            for c in 0..k {
                m.swap(piv * k + c, col * k + c);
                inv.swap(piv * k + c, col * k + c);
            }
        }
        let d = m[col * k + col];
        for c in 0..k {
            m[col * k + c] /= d;
            inv[col * k + c] /= d;
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = m[r * k + col];
            if f == 0.0 {
                continue;
            }
            for c in 0..k {
                m[r * k + c] -= f * m[col * k + c];
                inv[r * k + c] -= f * inv[col * k + c];
            }
        }
    }
    Some(inv)
}
