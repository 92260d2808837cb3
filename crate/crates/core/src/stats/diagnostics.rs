//! Residual diagnostics: normality, autocorrelation, heteroscedasticity.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::conclusion::{DiagnosticsReport, TestResult};
use super::dist::{chi2_sf, norm_quantile, norm_sf};
use crate::error::{Error, Result};

pub const SHAPIRO_MIN_N: usize = 8;
pub const SHAPIRO_MAX_N: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub seed: u64,
    pub permutations: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { seed: 0, permutations: 10_000 }
    }
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Shapiro-Wilk W and p via Royston's (1995) approximation.
pub fn shapiro_wilk(x: &[f64]) -> Result<TestResult> {
    let n = x.len();
    if !(SHAPIRO_MIN_N..=SHAPIRO_MAX_N).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "Shapiro-Wilk needs {SHAPIRO_MIN_N}..={SHAPIRO_MAX_N} values, got {n}"
        )));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[n - 1] - sorted[0];
    if range <= 0.0 {
        return Err(Error::InvalidInput("Shapiro-Wilk undefined for constant data".into()));
    }

    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    const G: [f64; 2] = [-2.273, 0.459];

    let an = n as f64;
    let half = n / 2;
    // upper-half expected normal order statistics, largest first
    let m: Vec<f64> = (1..=half).map(|i| -norm_quantile((i as f64 - 0.375) / (an + 0.25))).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = m[0] / ssumm2 + poly(&C1, rsn);
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0].powi(2) - 2.0 * m[1].powi(2))
            / (1.0 - 2.0 * a1.powi(2) - 2.0 * a2.powi(2)))
        .sqrt();
        (2, fac)
    } else {
        (1, ((summ2 - 2.0 * m[0].powi(2)) / (1.0 - 2.0 * a1.powi(2))).sqrt())
    };
    for i in first..half {
        a[i] = m[i] / fac;
    }

    let mean = sorted.iter().sum::<f64>() / an;
    let ss: f64 = sorted.iter().map(|v| (v - mean).powi(2)).sum();
    let b: f64 = (0..half).map(|i| a[i] * (sorted[n - 1 - i] - sorted[i])).sum();
    let w = (b * b / ss).min(1.0);

    let p = if w >= 1.0 {
        1.0
    } else if n <= 11 {
        let gamma = poly(&G, an);
        let y = (1.0 - w).ln();
        if y >= gamma {
            0.0
        } else {
            let w1 = -(gamma - y).ln();
            let mu = poly(&C3, an);
            let s = poly(&C4, an).exp();
            norm_sf((w1 - mu) / s)
        }
    } else {
        let ln_n = an.ln();
        let mu = poly(&C5, ln_n);
        let s = poly(&C6, ln_n).exp();
        norm_sf(((1.0 - w).ln() - mu) / s)
    };
    Ok(TestResult { statistic: w, p })
}

pub fn durbin_watson_statistic(e: &[f64]) -> f64 {
    let num: f64 = e.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let den: f64 = e.iter().map(|v| v * v).sum();
    if den == 0.0 {
        2.0
    } else {
        num / den
    }
}

/// Durbin-Watson d with a one-sided permutation p for positive
/// autocorrelation: (#{d_perm ≤ d} + 1) / (B + 1).
pub fn durbin_watson(e: &[f64], permutations: usize, seed: u64) -> TestResult {
    let d = durbin_watson_statistic(e);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = e.to_vec();
    let mut hits = 0usize;
    for _ in 0..permutations {
        buf.shuffle(&mut rng);
        if durbin_watson_statistic(&buf) <= d + 1e-12 {
            hits += 1;
        }
    }
    TestResult {
        statistic: d,
        p: (hits + 1) as f64 / (permutations + 1) as f64,
    }
}

/// Koenker's studentized Breusch-Pagan test: n R² of e² on the design.
/// `design` includes the intercept column; df = columns − 1.
pub fn breusch_pagan(e: &[f64], design: &DMatrix<f64>) -> Result<TestResult> {
    let (n, p) = design.shape();
    if n != e.len() {
        return Err(Error::InvalidInput("design rows differ from residual count".into()));
    }
    if p < 2 {
        return Err(Error::InvalidInput("Breusch-Pagan needs at least one regressor".into()));
    }
    let u = DVector::from_iterator(n, e.iter().map(|v| v * v));
    let fit = super::linear::ols(design, &u)?;
    let mean = u.mean();
    let tss: f64 = u.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - fit.rss / tss } else { 0.0 };
    let lm = n as f64 * r2;
    Ok(TestResult { statistic: lm, p: chi2_sf(lm, (p - 1) as f64) })
}

/// Runs all residual diagnostics; inapplicable tests are omitted with a notice.
pub fn run_diagnostics(
    residuals: &[f64],
    design: Option<&DMatrix<f64>>,
    config: &DiagnosticsConfig,
) -> Result<DiagnosticsReport> {
    if residuals.len() < 2 {
        return Err(Error::InsufficientData("diagnostics need at least two residuals".into()));
    }
    let mut notices = Vec::new();
    let shapiro = match shapiro_wilk(residuals) {
        Ok(r) => Some(r),
        Err(e) => {
            notices.push(format!("shapiro_wilk omitted: {e}"));
            None
        }
    };
    let bp = match design {
        Some(x) => match breusch_pagan(residuals, x) {
            Ok(r) => Some(r),
            Err(e) => {
                notices.push(format!("breusch_pagan omitted: {e}"));
                None
            }
        },
        None => {
            notices.push("breusch_pagan omitted: no design supplied".into());
            None
        }
    };
    Ok(DiagnosticsReport {
        shapiro_wilk: shapiro,
        durbin_watson: durbin_watson(residuals, config.permutations, config.seed),
        breusch_pagan: bp,
        notices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // scipy.stats.shapiro reference values
    #[test]
    fn shapiro_matches_reference() {
        let x = [2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 4.0, 3.9, 6.1];
        let r = shapiro_wilk(&x).unwrap();
        assert!((r.statistic - SW_SMALL.0).abs() < 1e-4, "{r:?}");
        assert!((r.p - SW_SMALL.1).abs() < 1e-3, "{r:?}");
        let y: Vec<f64> = (1..=30).map(|i| (i as f64).powi(2)).collect();
        let r = shapiro_wilk(&y).unwrap();
        assert!((r.statistic - SW_SKEWED.0).abs() < 1e-4, "{r:?}");
        assert!((r.p - SW_SKEWED.1).abs() < 1e-3, "{r:?}");
    }

    const SW_SMALL: (f64, f64) = (0.955704, 0.736003);
    const SW_SKEWED: (f64, f64) = (0.901421, 0.009100);

    #[test]
    fn shapiro_range_enforced() {
        assert!(shapiro_wilk(&[1.0, 2.0, 3.0]).is_err());
        let r = run_diagnostics(&[1.0, -1.0, 0.5], None, &DiagnosticsConfig::default()).unwrap();
        assert!(r.shapiro_wilk.is_none());
        assert_eq!(r.notices.len(), 2);
    }

    #[test]
    fn alternating_residuals() {
        let e: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = durbin_watson(&e, 999, 1);
        // 19 * 4 / 20
        assert!((r.statistic - 3.8).abs() < 1e-12);
        assert!(r.p > 0.9);
    }

    #[test]
    fn trending_residuals_flag_positive_autocorrelation() {
        let e: Vec<f64> = (0..30).map(|i| (i as f64 / 5.0).sin()).collect();
        let r = durbin_watson(&e, 999, 1);
        assert!(r.statistic < 0.5);
        assert!(r.p < 0.01);
        assert_eq!(r, durbin_watson(&e, 999, 1));
    }

    #[test]
    fn breusch_pagan_detects_fan() {
        let n = 40;
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let e: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = breusch_pagan(&e, &x).unwrap();
        assert!(r.p < 0.01, "{r:?}");
        let flat: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(breusch_pagan(&flat, &x).unwrap().p > 0.5);
    }
}
