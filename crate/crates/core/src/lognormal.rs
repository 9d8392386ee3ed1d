//! Method-of-moments Log-Normal fits, the Log-Normal law of the SINR ratio
//! and its CDF, which is the outage probability.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// `(mu, sigma^2)` of `ln V` for a Log-Normal variable `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma2: f64,
}

impl LogNormalParams {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain(format!("invalid Log-Normal parameters mu={mu}, sigma2={sigma2}")));
        }
        Ok(LogNormalParams { mu, sigma2 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Zero log-variance: a point mass at `exp(mu)`.
    pub fn is_degenerate(&self) -> bool {
        self.sigma2 == 0.0
    }

    pub fn mean(&self) -> f64 {
        (self.mu + self.sigma2 / 2.0).exp()
    }

    pub fn second_moment(&self) -> f64 {
        (2.0 * self.mu + 2.0 * self.sigma2).exp()
    }

    pub fn median(&self) -> f64 {
        self.mu.exp()
    }

    pub fn mode(&self) -> f64 {
        (self.mu - self.sigma2).exp()
    }

    /// CDF at `x`, i.e. `P(V <= x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        outage_probability(self, x)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        pdf(self, x)
    }

    /// `exp(mu + sigma * z)`.
    pub fn sample_from_standard_normal(&self, z: f64) -> f64 {
        (self.mu + self.sigma() * z).exp()
    }
}

/// Matches `E[V] = m1`, `E[V^2] = m2`:
/// `mu = ln(m1^2 / sqrt(m2))`, `sigma^2 = ln(m2 / m1^2)`.
pub fn fit_lognormal(m1: f64, m2: f64) -> Result<LogNormalParams> {
    if !(m1 > 0.0 && m1.is_finite()) {
        return Err(Error::Domain(format!("first moment must be positive, got {m1}")));
    }
    if !m2.is_finite() {
        return Err(Error::Domain(format!("second moment must be finite, got {m2}")));
    }
    let m1_sq = m1 * m1;
    if m2 < m1_sq {
        return Err(Error::InfeasibleMoments { m2, m1_sq });
    }
    Ok(LogNormalParams {
        mu: (m1_sq / m2.sqrt()).ln(),
        sigma2: (m2 / m1_sq).ln(),
    })
}

/// `Cov(ln X, ln Y) = ln(Cov(X, Y) / (E[X] E[Y]) + 1)` for a bivariate
/// Log-Normal pair.
pub fn log_covariance(cov_xy: f64, ex: f64, ey: f64) -> Result<f64> {
    if !(ex > 0.0 && ey > 0.0) {
        return Err(Error::Domain(format!("means must be positive, got E[X]={ex}, E[Y]={ey}")));
    }
    let ratio = cov_xy / (ex * ey);
    if !(ratio > -1.0) {
        return Err(Error::Domain(format!(
            "Cov(X,Y)/(E[X]E[Y]) = {ratio} <= -1 is impossible for Log-Normal marginals"
        )));
    }
    Ok(ratio.ln_1p())
}

/// Law of `X / Y`: `mu = mu_X - mu_Y`, `sigma^2 = sigma_X^2 + sigma_Y^2 - 2 Cov(ln X, ln Y)`.
pub fn ratio_params(px: &LogNormalParams, py: &LogNormalParams, cov_ln: f64) -> Result<LogNormalParams> {
    let sigma2 = px.sigma2 + py.sigma2 - 2.0 * cov_ln;
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InfeasibleCorrelation { sigma2 });
    }
    Ok(LogNormalParams {
        mu: px.mu - py.mu,
        sigma2,
    })
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `P(gamma <= gamma_th) = erfc(-(ln gamma_th - mu) / (sigma sqrt 2)) / 2`.
///
/// With `sigma^2 = 0` the law is a point mass and this is the step
/// `1{gamma_th >= exp(mu)}`.
pub fn outage_probability(params: &LogNormalParams, gamma_th: f64) -> Result<f64> {
    if !(gamma_th > 0.0) || gamma_th.is_nan() {
        return Err(Error::Domain(format!("threshold must be positive, got {gamma_th}")));
    }
    if params.is_degenerate() {
        return Ok(if gamma_th.ln() >= params.mu { 1.0 } else { 0.0 });
    }
    let arg = -(gamma_th.ln() - params.mu) / (params.sigma() * SQRT_2);
    Ok((0.5 * erfc(arg)).clamp(0.0, 1.0))
}

/// Log-Normal density at `x`.
pub fn pdf(params: &LogNormalParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("density support is x > 0, got {x}")));
    }
    if params.is_degenerate() {
        return Err(Error::Domain("density undefined for sigma^2 = 0".into()));
    }
    let s = params.sigma();
    let d = x.ln() - params.mu;
    Ok((-d * d / (2.0 * params.sigma2)).exp() / (x * s * (2.0 * PI).sqrt()))
}

/// Dvoretzky-Kiefer-Wolfowitz half-width: with probability `1 - alpha` the
/// empirical CDF of `n` samples stays within this distance of the true CDF.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}
