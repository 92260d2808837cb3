//! Thin wrappers over `statrs` distributions.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

pub fn norm_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

/// Upper tail P(Z > x).
pub fn norm_sf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").sf(x)
}

pub fn norm_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("positive df").sf(x)
}

pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("positive df").inverse_cdf(p)
}

pub fn t_sf(x: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("positive df").sf(x)
}

/// ln C(n, k).
pub fn ln_choose(n: f64, k: f64) -> f64 {
    statrs::function::gamma::ln_gamma(n + 1.0)
        - statrs::function::gamma::ln_gamma(k + 1.0)
        - statrs::function::gamma::ln_gamma(n - k + 1.0)
}
