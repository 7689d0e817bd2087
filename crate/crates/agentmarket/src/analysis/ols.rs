//! Least squares through a Householder QR factorisation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OlsError {
    #[error("{rows} rows cannot identify {columns} coefficients")]
    TooFewRows { rows: usize, columns: usize },
    #[error("design has {rows} rows but the response has {responses}")]
    Shape { rows: usize, responses: usize },
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Columns that are (numerically) linear combinations of earlier columns.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("design is rank deficient; collinear columns {columns:?}")]
pub struct RankError {
    pub columns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `SSR / (n − k)`; 0 for an exactly identified system.
    pub residual_variance: f64,
    /// Centred R², undefined when the response is constant.
    pub r_squared: Option<f64>,
}

const RANK_TOL: f64 = 1e-10;

/// Least-squares coefficients of `q` on the columns of `x`.
pub fn estimate_coefficients(x: &DMatrix<f64>, q: &DVector<f64>) -> Result<OlsFit, OlsError> {
    let (n, k) = x.shape();
    if q.len() != n {
        return Err(OlsError::Shape { rows: n, responses: q.len() });
    }
    if n < k || k == 0 {
        return Err(OlsError::TooFewRows { rows: n, columns: k });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|j| x.column(j).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let collinear: Vec<usize> = (0..k)
        .filter(|&j| r[(j, j)].abs() <= RANK_TOL * scale)
        .collect();
    if !collinear.is_empty() {
        return Err(RankError { columns: collinear }.into());
    }
    let qtb = qr.q().transpose() * q;
    let beta = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| RankError { columns: (0..k).collect() })?;
    let residuals = q - x * &beta;
    let ssr = residuals.norm_squared();
    let mean = q.mean();
    let sst: f64 = q.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        residual_variance: if n > k { ssr / (n - k) as f64 } else { 0.0 },
        r_squared: (sst > 0.0).then(|| 1.0 - ssr / sst),
        residuals: residuals.iter().copied().collect(),
    })
}
