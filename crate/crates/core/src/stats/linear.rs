//! Ordinary least squares.

use nalgebra::{DMatrix, DVector};

use super::conclusion::{Coefficient, CoefficientsConclusion, Conclusion, FitQuality, Interval};
use super::design;
use super::diagnostics::{run_diagnostics, DiagnosticsConfig};
use super::dist::t_quantile;
use super::rank::midranks;
use super::MethodSpec;
use crate::dag::{Family, ModelFormula};
use crate::data::DatasetTable;
use crate::error::{Error, Result};

/// Relative tolerance on |R_jj| / max|R_ii| below which a design is rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Least-squares solution with the pieces needed for inference.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    /// (X'X)^{-1}
    pub xtx_inv: DMatrix<f64>,
}

/// Solves min ||y − Xβ|| by Householder QR.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, p) = x.shape();
    design::check_rows(n, p)?;
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if let Some(j) = (0..p).find(|&j| r[(j, j)].abs() <= RANK_TOL * max_diag.max(1e-300)) {
        return Err(Error::RankDeficient(format!("design column {j} is linearly dependent")));
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient("singular R factor".into()))?;
    let residuals = y - x * &beta;
    let rss = residuals.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::RankDeficient("singular R factor".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(OlsFit { beta, residuals, rss, xtx_inv })
}

/// Gaussian log-likelihood at the ML variance RSS/n.
pub fn gaussian_loglik(n: usize, rss: f64) -> f64 {
    let n = n as f64;
    -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (rss / n).ln() + 1.0)
}

/// Fits `formula` by OLS, optionally on the midrank-transformed response.
pub fn fit_linear_model(data: &DatasetTable, formula: &ModelFormula, spec: &MethodSpec) -> Result<Conclusion> {
    formula.validate()?;
    if !formula.random_intercepts.is_empty() {
        return Err(Error::InvalidMethod("linear_model takes no random intercepts".into()));
    }
    let (x, names) = design::build(data, formula)?;
    let mut y = design::response(data, formula)?;
    let rank_response = spec.rank_transform_response || formula.family == Family::GaussianOnRanks;
    if rank_response {
        y = DVector::from_vec(midranks(y.as_slice()).0);
    }
    let (n, p) = x.shape();
    let fit = ols(&x, &y)?;
    let df = (n - p) as f64;
    let sigma2 = fit.rss / df;
    let t = t_quantile(0.5 + spec.ci_level / 2.0, df);
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = (sigma2 * fit.xtx_inv[(j, j)]).sqrt();
            let est = fit.beta[j];
            Coefficient {
                name: name.clone(),
                estimate: est,
                std_error: se,
                ci: Interval::new(est - t * se, est + t * se),
            }
        })
        .collect();
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - fit.rss / tss } else { 0.0 };
    let fit_quality = FitQuality::new(n, gaussian_loglik(n, fit.rss), p + 1, r2);
    let diagnostics = run_diagnostics(
        fit.residuals.as_slice(),
        Some(&x),
        &DiagnosticsConfig { seed: spec.seed, ..Default::default() },
    )?;
    Ok(Conclusion::Coefficients(CoefficientsConclusion {
        model: if rank_response { "linear_model(rank)" } else { "linear_model" }.into(),
        treatment: formula.treatment().to_string(),
        ci_level: spec.ci_level,
        coefficients,
        variance_components: Vec::new(),
        residual_variance: sigma2,
        fit: fit_quality,
        diagnostics: Some(diagnostics),
    }))
}
