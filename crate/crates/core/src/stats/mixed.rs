//! Gaussian random-intercept models fitted by maximum likelihood.
//!
//! The deviance is profiled over β and σ² and minimized over the relative
//! standard deviations θ_k = σ_k / σ (penalized least squares, as in lme4).
//! ML rather than REML keeps AIC comparable across fixed-effect structures.

use nalgebra::{DMatrix, DVector};

use super::conclusion::{
    Coefficient, CoefficientsConclusion, Conclusion, FitQuality, Interval, VarianceComponent,
};
use super::design;
use super::diagnostics::{run_diagnostics, DiagnosticsConfig};
use super::dist::norm_quantile;
use super::optimize::{nelder_mead, NelderMeadOptions};
use super::MethodSpec;
use crate::dag::{Family, ModelFormula};
use crate::data::DatasetTable;
use crate::error::{Error, Result};

/// One grouping factor: level index per row.
#[derive(Debug, Clone)]
pub struct GroupingFactor {
    pub name: String,
    pub index: Vec<usize>,
    pub levels: usize,
}

#[derive(Debug, Clone)]
pub struct LmmFit {
    pub beta: DVector<f64>,
    pub cov_beta: DMatrix<f64>,
    pub sigma2: f64,
    /// σ_k² per grouping factor.
    pub group_variances: Vec<f64>,
    pub log_likelihood: f64,
    /// y − Xβ − Zb
    pub conditional_residuals: DVector<f64>,
    pub theta: Vec<f64>,
    pub iterations: usize,
}

struct CrossProducts {
    n: usize,
    ztz: DMatrix<f64>,
    ztx: DMatrix<f64>,
    zty: DVector<f64>,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    /// column offset of each factor's block in Z
    offsets: Vec<usize>,
}

struct Solution {
    deviance: f64,
    /// spherical random effects u (b = Λu)
    u: DVector<f64>,
    beta: DVector<f64>,
    r2: f64,
    schur: DMatrix<f64>,
}

impl CrossProducts {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>, factors: &[GroupingFactor]) -> Self {
        let n = x.nrows();
        let mut offsets = Vec::new();
        let mut q = 0;
        for f in factors {
            offsets.push(q);
            q += f.levels;
        }
        let mut z = DMatrix::<f64>::zeros(n, q);
        for (f, &off) in factors.iter().zip(&offsets) {
            for (row, &level) in f.index.iter().enumerate() {
                z[(row, off + level)] = 1.0;
            }
        }
        let zt = z.transpose();
        CrossProducts {
            n,
            ztz: &zt * &z,
            ztx: &zt * x,
            zty: &zt * y,
            xtx: x.transpose() * x,
            xty: x.transpose() * y,
            yty: y.norm_squared(),
            offsets,
        }
    }

    fn lambda(&self, theta: &[f64]) -> DVector<f64> {
        let q = self.ztz.nrows();
        let mut diag = DVector::zeros(q);
        for (k, &off) in self.offsets.iter().enumerate() {
            let end = self.offsets.get(k + 1).copied().unwrap_or(q);
            for j in off..end {
                diag[j] = theta[k].abs();
            }
        }
        diag
    }

    fn solve(&self, theta: &[f64]) -> Option<Solution> {
        let q = self.ztz.nrows();
        let p = self.xtx.nrows();
        let lam = self.lambda(theta);
        let mut a = self.ztz.clone();
        for i in 0..q {
            for j in 0..q {
                a[(i, j)] *= lam[i] * lam[j];
            }
            a[(i, i)] += 1.0;
        }
        let mut lzx = self.ztx.clone();
        let mut lzy = self.zty.clone();
        for i in 0..q {
            lzx.row_mut(i).scale_mut(lam[i]);
            lzy[i] *= lam[i];
        }
        let chol_a = a.clone().cholesky()?;
        let log_det_a = 2.0 * chol_a.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        // Schur complement X'X − X'ZΛ A⁻¹ ΛZ'X
        let a_inv_lzx = chol_a.solve(&lzx);
        let a_inv_lzy = chol_a.solve(&lzy);
        let schur = &self.xtx - lzx.transpose() * &a_inv_lzx;
        let rhs = &self.xty - lzx.transpose() * &a_inv_lzy;
        let beta = schur.clone().cholesky()?.solve(&rhs);
        let u = a_inv_lzy - &a_inv_lzx * &beta;
        let r2 = (self.yty - u.dot(&lzy) - beta.dot(&self.xty)).max(1e-300);
        let n = self.n as f64;
        let deviance = log_det_a + n * (1.0 + (2.0 * std::f64::consts::PI * r2 / n).ln());
        debug_assert_eq!(beta.len(), p);
        Some(Solution { deviance, u, beta, r2, schur })
    }
}

/// Fits y = Xβ + Σ_k Z_k b_k + ε by ML.
pub fn fit_lmm(x: &DMatrix<f64>, y: &DVector<f64>, factors: &[GroupingFactor]) -> Result<LmmFit> {
    let (n, p) = x.shape();
    if factors.is_empty() {
        return Err(Error::InvalidMethod("mixed model needs a grouping factor".into()));
    }
    for f in factors {
        if f.levels < 2 {
            return Err(Error::InsufficientData(format!(
                "grouping column '{}' has a single level",
                f.name
            )));
        }
    }
    design::check_rows(n, p + factors.len())?;
    // rank check on the fixed part
    super::linear::ols(x, y)?;

    let cp = CrossProducts::new(x, y, factors);
    let objective = |theta: &[f64]| cp.solve(theta).map_or(f64::INFINITY, |s| s.deviance);
    let k = factors.len();
    let opts = NelderMeadOptions {
        initial_step: 0.5,
        f_tol: 1e-12,
        x_tol: 1e-7,
        max_iterations: 2000 * k,
    };
    let found = nelder_mead(objective, &vec![1.0; k], &opts);
    if !found.converged {
        return Err(Error::NonConvergence {
            iterations: found.iterations,
            last_value: found.value,
        });
    }
    let mut theta: Vec<f64> = found.x.iter().map(|t| t.abs()).collect();
    // boundary candidates: each θ_k = 0
    for j in 0..k {
        let mut t = theta.clone();
        t[j] = 0.0;
        if objective(&t) <= objective(&theta) {
            theta = t;
        }
    }
    let sol = cp
        .solve(&theta)
        .ok_or_else(|| Error::RankDeficient("mixed-model system is singular".into()))?;
    let sigma2 = sol.r2 / n as f64;
    let cov_beta = sol
        .schur
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("fixed-effect block is singular".into()))?
        * sigma2;
    let lam = cp.lambda(&theta);
    let b = lam.component_mul(&sol.u);
    let mut fitted = x * &sol.beta;
    for (f, &off) in factors.iter().zip(&cp.offsets) {
        for (row, &level) in f.index.iter().enumerate() {
            fitted[row] += b[off + level];
        }
    }
    Ok(LmmFit {
        beta: sol.beta,
        cov_beta,
        sigma2,
        group_variances: theta.iter().map(|t| t * t * sigma2).collect(),
        log_likelihood: -0.5 * sol.deviance,
        conditional_residuals: y - fitted,
        theta,
        iterations: found.iterations,
    })
}

/// Population variance of the fixed-effect linear predictor.
fn fixed_variance(x: &DMatrix<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    let mean = eta.mean();
    eta.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / eta.len() as f64
}

pub(crate) fn factors_for(data: &DatasetTable, formula: &ModelFormula) -> Result<Vec<GroupingFactor>> {
    formula
        .random_intercepts
        .iter()
        .map(|g| {
            let (index, levels) = design::group_index(data, g)?;
            Ok(GroupingFactor { name: g.clone(), index, levels })
        })
        .collect()
}

/// Random-intercept model for `formula` with Wald intervals and
/// marginal/conditional R² (variance-partition definitions).
pub fn fit_linear_mixed_model(data: &DatasetTable, formula: &ModelFormula, spec: &MethodSpec) -> Result<Conclusion> {
    formula.validate()?;
    if formula.random_intercepts.is_empty() {
        return Err(Error::InvalidMethod("linear_mixed_model needs a random intercept".into()));
    }
    if formula.family != Family::Gaussian {
        return Err(Error::InvalidMethod(format!(
            "linear_mixed_model cannot fit family {:?}",
            formula.family
        )));
    }
    let (x, names) = design::build(data, formula)?;
    let y = design::response(data, formula)?;
    let factors = factors_for(data, formula)?;
    let fit = fit_lmm(&x, &y, &factors)?;

    let z = norm_quantile(0.5 + spec.ci_level / 2.0);
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = fit.cov_beta[(j, j)].max(0.0).sqrt();
            let est = fit.beta[j];
            Coefficient {
                name: name.clone(),
                estimate: est,
                std_error: se,
                ci: Interval::new(est - z * se, est + z * se),
            }
        })
        .collect();
    let var_f = fixed_variance(&x, &fit.beta);
    let var_g: f64 = fit.group_variances.iter().sum();
    let total = var_f + var_g + fit.sigma2;
    let n_params = x.ncols() + factors.len() + 1;
    let mut quality = FitQuality::new(x.nrows(), fit.log_likelihood, n_params, var_f / total);
    quality.r2_conditional = Some((var_f + var_g) / total);
    let diagnostics = run_diagnostics(
        fit.conditional_residuals.as_slice(),
        Some(&x),
        &DiagnosticsConfig { seed: spec.seed, ..Default::default() },
    )?;
    Ok(Conclusion::Coefficients(CoefficientsConclusion {
        model: "linear_mixed_model".into(),
        treatment: formula.treatment().to_string(),
        ci_level: spec.ci_level,
        coefficients,
        variance_components: factors
            .iter()
            .zip(&fit.group_variances)
            .map(|(f, &v)| VarianceComponent { group: f.name.clone(), variance: v, levels: f.levels })
            .collect(),
        residual_variance: fit.sigma2,
        fit: quality,
        diagnostics: Some(diagnostics),
    }))
}
